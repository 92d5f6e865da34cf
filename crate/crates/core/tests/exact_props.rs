//! Property tests for the exact interval and map layer, checked against a
//! cell-counting oracle on the grid of width `1/L`.

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use towerplex_core::exact::{rat, Interval, IntervalSet, Piece, PieceBudget, PiecewiseAffineMap, Rat};

/// Up to five intervals inside `[0, 4)` with denominators dividing 12.
fn interval_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((0i64..48, 1i64..12), 0..5).prop_map(|raw| {
        let ivs = raw
            .into_iter()
            .filter_map(|(a, len)| {
                let b = (a + len).min(48);
                (a < b).then(|| Interval::new(rat(a, 12), rat(b, 12)).unwrap())
            })
            .collect();
        IntervalSet::from_intervals(ivs)
    })
}

/// A slope-1 exchange of `[0, 1)`: cut at the given points, reorder the
/// pieces by `order`.
fn exchange() -> impl Strategy<Value = PiecewiseAffineMap> {
    (prop::collection::btree_set(1i64..60, 1..6), any::<u64>()).prop_map(|(cuts, seed)| {
        let mut pts: Vec<Rat> = vec![Rat::zero()];
        pts.extend(cuts.into_iter().map(|c| rat(c, 60)));
        pts.push(Rat::one());
        let srcs: Vec<Interval> = pts.windows(2).map(|w| Interval::new(w[0].clone(), w[1].clone()).unwrap()).collect();
        let mut order: Vec<usize> = (0..srcs.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut at = Rat::zero();
        let mut pieces = Vec::new();
        for &k in &order {
            let src = &srcs[k];
            pieces.push(Piece::translation(src.clone(), &at - src.lo()));
            at += src.length();
        }
        PiecewiseAffineMap::from_pieces(pieces).unwrap()
    })
}

fn grid_l(values: &[&Rat]) -> u64 {
    let mut l = num_bigint::BigInt::one();
    for v in values {
        l = l.lcm(v.denom());
    }
    l.to_u64().unwrap()
}

fn cells(s: &IntervalSet, l: u64, upper: usize) -> Vec<bool> {
    let mut out = vec![false; upper];
    for iv in s.intervals() {
        let a = (iv.lo() * Rat::from_integer(l.into())).to_integer().to_usize().unwrap();
        let b = (iv.hi() * Rat::from_integer(l.into())).to_integer().to_usize().unwrap();
        out[a..b].iter_mut().for_each(|c| *c = true);
    }
    out
}

fn count_measure(c: &[bool], l: u64) -> Rat {
    Rat::new(c.iter().filter(|&&b| b).count().into(), l.into())
}

fn sample_points(n: usize) -> Vec<Rat> {
    (0..n as i64).map(|i| rat(7 * i + 3, 7 * n as i64 + 11)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn set_algebra_matches_grid(a in interval_set(), b in interval_set()) {
        let ends: Vec<&Rat> = a.intervals().iter().chain(b.intervals()).flat_map(|iv| [iv.lo(), iv.hi()]).collect();
        let l = grid_l(&ends).max(1);
        let upper = 4 * l as usize;
        let (ga, gb) = (cells(&a, l, upper), cells(&b, l, upper));
        let cases = [
            (a.union(&b), ga.iter().zip(&gb).map(|(x, y)| *x || *y).collect::<Vec<_>>()),
            (a.intersect(&b), ga.iter().zip(&gb).map(|(x, y)| *x && *y).collect()),
            (a.difference(&b), ga.iter().zip(&gb).map(|(x, y)| *x && !*y).collect()),
            (a.symmetric_difference(&b), ga.iter().zip(&gb).map(|(x, y)| *x != *y).collect()),
        ];
        for (exact, oracle) in cases {
            prop_assert_eq!(cells(&exact, l, upper), oracle.clone());
            prop_assert_eq!(exact.measure(), count_measure(&oracle, l));
        }
        prop_assert_eq!(a.intersection_measure(&b), a.intersect(&b).measure());
    }

    #[test]
    fn normalization_is_idempotent(a in interval_set()) {
        let again = IntervalSet::from_intervals(a.intervals().to_vec());
        prop_assert_eq!(&again, &a);
        prop_assert!(a.intervals().windows(2).all(|w| w[0].hi() < w[1].lo()));
        prop_assert_eq!(IntervalSet::parse_lines(a.to_text().lines()).unwrap(), a);
    }

    #[test]
    fn images_preserve_measure(f in exchange(), a in interval_set()) {
        let a = a.intersect(f.domain());
        let img = f.image(&a).unwrap();
        prop_assert_eq!(img.measure(), a.measure());
        prop_assert_eq!(f.preimage(&img).unwrap(), a);
    }

    #[test]
    fn inverse_laws(f in exchange()) {
        prop_assert_eq!(&f.invert().invert(), &f);
        let id = f.compose(&f.invert(), &PieceBudget::default()).unwrap();
        prop_assert_eq!(id, PiecewiseAffineMap::identity(f.domain()));
        prop_assert_eq!(PiecewiseAffineMap::parse_lines(f.to_text().lines()).unwrap(), f);
    }

    #[test]
    fn iterate_is_additive(f in exchange(), a in -6i64..7, b in -6i64..7) {
        let budget = PieceBudget::default();
        let lhs = f.iterate(a + b, &budget).unwrap();
        let rhs = f.iterate(a, &budget).unwrap().compose(&f.iterate(b, &budget).unwrap(), &budget).unwrap();
        for x in sample_points(20) {
            prop_assert_eq!(lhs.apply(&x).unwrap(), rhs.apply(&x).unwrap());
        }
        prop_assert_eq!(lhs, rhs);
    }
}
