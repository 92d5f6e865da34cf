//! Exact correlation diagnostics over slope-1 interval maps.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{uint, IntervalSet, PieceBudget, PiecewiseAffineMap, Rat};

/// `μ(A ∩ T^k B)` for `k = 0 .. n-1`, by pushing `B` forward one step at a time.
pub fn correlations(t: &PiecewiseAffineMap, a: &IntervalSet, b: &IntervalSet, n: usize) -> Result<Vec<Rat>> {
    let mut out = Vec::with_capacity(n);
    let mut cur = b.clone();
    for k in 0..n {
        if k > 0 {
            cur = t.image(&cur)?;
        }
        out.push(a.intersection_measure(&cur));
    }
    Ok(out)
}

/// Exact prefix sums of `terms`.
pub fn prefix_sums(terms: &[Rat]) -> Vec<Rat> {
    let mut acc = Rat::zero();
    terms
        .iter()
        .map(|t| {
            acc += t;
            acc.clone()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSequence {
    pub f: IntervalSet,
    /// `u_k = μ(F ∩ T^k F) / μ(F)²`.
    pub u: Vec<Rat>,
    /// `a[k] = u_0 + ... + u_k`, i.e. `a_{k+1}`.
    pub a: Vec<Rat>,
}

impl WeightSequence {
    /// `a_n` (sum of the first `n` weights); `a_0 = 0`.
    pub fn a_n(&self, n: usize) -> Rat {
        if n == 0 {
            Rat::zero()
        } else {
            self.a[n - 1].clone()
        }
    }
}

pub fn weight_sequence(t: &PiecewiseAffineMap, f: &IntervalSet, k: usize) -> Result<WeightSequence> {
    if k == 0 {
        return Err(Error::InvalidSpec("weight horizon must be positive".into()));
    }
    if f.is_empty() {
        return Err(Error::ZeroNormalizer);
    }
    let m2 = f.measure() * f.measure();
    let u: Vec<Rat> = correlations(t, f, f, k)?.into_iter().map(|c| c / &m2).collect();
    let a = prefix_sums(&u);
    Ok(WeightSequence { f: f.clone(), u, a })
}

/// Per-index terms of a normalized sum together with their running values.
///
/// Row `i` holds the term at index `i`, the exact prefix sum through `i`, and
/// the normalizer that turns that prefix sum into the diagnostic at horizon
/// `N = i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagnosticsReport {
    pub name: String,
    pub terms: Vec<Rat>,
    pub partial_sums: Vec<Rat>,
    pub normalizers: Vec<Rat>,
    pub meta: Vec<(String, String)>,
}

impl DiagnosticsReport {
    fn build(name: &str, terms: Vec<Rat>, normalizer: impl Fn(usize) -> Rat) -> Self {
        let partial_sums = prefix_sums(&terms);
        let normalizers = (0..terms.len()).map(normalizer).collect();
        DiagnosticsReport { name: name.to_string(), terms, partial_sums, normalizers, meta: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Diagnostic at horizon `n` (`1 <= n <= len`).
    pub fn value_at(&self, n: usize) -> Result<Rat> {
        let i = n.checked_sub(1).filter(|&i| i < self.terms.len()).ok_or_else(|| {
            Error::InvalidSpec(format!("horizon {n} outside report of length {}", self.terms.len()))
        })?;
        if self.normalizers[i].is_zero() {
            return Err(Error::ZeroNormalizer);
        }
        Ok(&self.partial_sums[i] / &self.normalizers[i])
    }

    /// Diagnostic at the full horizon; zero for an empty report.
    pub fn value(&self) -> Result<Rat> {
        if self.terms.is_empty() {
            return Ok(Rat::zero());
        }
        self.value_at(self.terms.len())
    }
}

/// Terms `|μ(A ∩ T^k B) - μ(A) μ(B) u_k(F)|`, normalized by `a_{k+1}(F)`.
pub fn rwm_report(
    t: &PiecewiseAffineMap,
    f: &IntervalSet,
    a: &IntervalSet,
    b: &IntervalSet,
    n: usize,
) -> Result<DiagnosticsReport> {
    let w = weight_sequence(t, f, n)?;
    let ab = a.measure() * b.measure();
    let terms = correlations(t, a, b, n)?
        .into_iter()
        .zip(&w.u)
        .map(|(c, u)| (c - &ab * u).abs())
        .collect();
    Ok(DiagnosticsReport::build("rwm", terms, |i| w.a[i].clone()).with_meta("N", n))
}

/// `(1/a_N) Σ_{k<N} |μ(A ∩ T^k B) - μ(A) μ(B) u_k(F)|`.
pub fn rwm_sum(t: &PiecewiseAffineMap, f: &IntervalSet, a: &IntervalSet, b: &IntervalSet, n: usize) -> Result<Rat> {
    rwm_report(t, f, a, b, n)?.value()
}

/// Terms `|μ(E ∩ T^i A) - μ(E) μ(A) / μ(X_n)|` with normalizer `N / μ(X_n)^p`.
fn scaled_report(
    name: &str,
    t: &PiecewiseAffineMap,
    e: &IntervalSet,
    a: &IntervalSet,
    n: usize,
    mu_xn: &Rat,
    power: i32,
) -> Result<DiagnosticsReport> {
    if !mu_xn.is_positive() {
        return Err(Error::ZeroNormalizer);
    }
    let target = e.measure() * a.measure() / mu_xn;
    let terms = correlations(t, e, a, n)?.into_iter().map(|c| (c - &target).abs()).collect();
    let scale = mu_xn.pow(power);
    Ok(DiagnosticsReport::build(name, terms, |i| uint(i as u64 + 1) / &scale).with_meta("N", n))
}

pub fn scaled_rwm_report(t: &PiecewiseAffineMap, a: &IntervalSet, n: usize, mu_xn: &Rat) -> Result<DiagnosticsReport> {
    scaled_report("scaled_rwm", t, a, a, n, mu_xn, 2)
}

/// `(μ(X_n)²/N) Σ_{i<N} |μ(A ∩ T^i A) - μ(A)²/μ(X_n)|`.
pub fn scaled_rwm_sum(t: &PiecewiseAffineMap, a: &IntervalSet, n: usize, mu_xn: &Rat) -> Result<Rat> {
    if n == 0 {
        return Ok(Rat::zero());
    }
    scaled_rwm_report(t, a, n, mu_xn)?.value()
}

/// `(μ(X_n)/N) Σ_{i<N} |μ(E ∩ T^i A) - μ(E) μ(A)/μ(X_n)|`.
pub fn mixed_scaled_sum(
    t: &PiecewiseAffineMap,
    e: &IntervalSet,
    a: &IntervalSet,
    n: usize,
    mu_xn: &Rat,
) -> Result<Rat> {
    if n == 0 {
        return Ok(Rat::zero());
    }
    scaled_report("mixed_scaled", t, e, a, n, mu_xn, 1)?.value()
}

/// `μ(T^ρ A △ A)`.
pub fn rigidity_deviation(t: &PiecewiseAffineMap, a: &IntervalSet, rho: u64, budget: &PieceBudget) -> Result<Rat> {
    if rho == 0 || a.is_empty() {
        return Ok(Rat::zero());
    }
    let power = t.iterate(rho as i64, budget)?;
    Ok(power.image(a)?.symmetric_difference(a).measure())
}

/// Exponent vector of a product of powers, at most three factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductSpec {
    exponents: Vec<i64>,
}

impl ProductSpec {
    pub const MAX_LEN: usize = 3;

    pub fn new(exponents: Vec<i64>) -> Result<Self> {
        if exponents.is_empty() || exponents.len() > Self::MAX_LEN {
            return Err(Error::InvalidProduct(format!(
                "need 1 to {} exponents, got {}",
                Self::MAX_LEN,
                exponents.len()
            )));
        }
        if exponents.contains(&0) {
            return Err(Error::InvalidProduct("exponents must be nonzero".into()));
        }
        Ok(ProductSpec { exponents })
    }

    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl std::fmt::Display for ProductSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.exponents.iter().map(i64::to_string).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

fn check_boxes(spec: &ProductSpec, boxes: &[IntervalSet]) -> Result<()> {
    if boxes.len() != spec.len() {
        return Err(Error::InvalidProduct(format!(
            "{} factor sets for a product of length {}",
            boxes.len(),
            spec.len()
        )));
    }
    Ok(())
}

/// `μ⊗(A ∩ (T^{u_1} × ... × T^{u_l})^i B)` for boxes `A`, `B`.
pub fn product_correlation(
    spec: &ProductSpec,
    t: &PiecewiseAffineMap,
    a_boxes: &[IntervalSet],
    b_boxes: &[IntervalSet],
    i: u64,
    budget: &PieceBudget,
) -> Result<Rat> {
    check_boxes(spec, a_boxes)?;
    check_boxes(spec, b_boxes)?;
    let mut out = Rat::from_integer(1.into());
    for ((u, a), b) in spec.exponents.iter().zip(a_boxes).zip(b_boxes) {
        if a.is_empty() || b.is_empty() {
            return Ok(Rat::zero());
        }
        let power = t.iterate(u * i as i64, budget)?;
        out *= a.intersection_measure(&power.image(b)?);
    }
    Ok(out)
}

/// Product analogue of the scaled sum on the box `A_1 × ... × A_l`, read on
/// the product space: `μ(X_n)` becomes `μ(X_n)^l` throughout, so a single
/// factor gives back [`scaled_rwm_report`].
pub fn product_scaled_report(
    spec: &ProductSpec,
    t: &PiecewiseAffineMap,
    a_boxes: &[IntervalSet],
    n: usize,
    mu_xn: &Rat,
    budget: &PieceBudget,
) -> Result<DiagnosticsReport> {
    check_boxes(spec, a_boxes)?;
    if !mu_xn.is_positive() {
        return Err(Error::ZeroNormalizer);
    }
    let l = spec.len() as i32;
    let vol: Rat = mu_xn.pow(l);
    let mut cors: Vec<Vec<Rat>> = Vec::with_capacity(spec.len());
    for (u, a) in spec.exponents.iter().zip(a_boxes) {
        let step = t.iterate(*u, budget)?;
        cors.push(correlations(&step, a, a, n)?);
    }
    let box_measure: Rat = a_boxes.iter().map(IntervalSet::measure).product();
    let target = &box_measure * &box_measure / &vol;
    let terms = (0..n)
        .map(|i| {
            let c: Rat = cors.iter().map(|c| c[i].clone()).product();
            (c - &target).abs()
        })
        .collect();
    let scale = &vol * &vol;
    Ok(DiagnosticsReport::build("product_scaled", terms, |i| uint(i as u64 + 1) / &scale)
        .with_meta("N", n)
        .with_meta("v", spec))
}

pub fn product_scaled_sum(
    spec: &ProductSpec,
    t: &PiecewiseAffineMap,
    a_boxes: &[IntervalSet],
    n: usize,
    mu_xn: &Rat,
    budget: &PieceBudget,
) -> Result<Rat> {
    if n == 0 {
        return Ok(Rat::zero());
    }
    product_scaled_report(spec, t, a_boxes, n, mu_xn, budget)?.value()
}

/// Unswept measure `μ(dom T ∖ ∪_{i=0}^{N} T^i F)` for every horizon `0..=n`.
pub fn sweep_out_profile(t: &PiecewiseAffineMap, f: &IntervalSet, n: usize) -> Result<Vec<Rat>> {
    if !f.is_subset(t.domain()) {
        return Err(Error::SetOutsideDomain);
    }
    let total = t.domain().measure();
    let mut swept = f.clone();
    let mut cur = f.clone();
    let mut out = Vec::with_capacity(n + 1);
    out.push(&total - swept.measure());
    for _ in 0..n {
        cur = t.image(&cur)?;
        swept = swept.union(&cur);
        out.push(&total - swept.measure());
    }
    Ok(out)
}

pub fn sweep_out(t: &PiecewiseAffineMap, f: &IntervalSet, n: usize) -> Result<Rat> {
    Ok(sweep_out_profile(t, f, n)?.pop().expect("profile is nonempty"))
}
