//! Plain-text stage snapshots.
//!
//! ```text
//! stage n b_n h_n eps_n d_n kappa
//! schedule M delta j
//! native m
//! [X]
//! lo hi
//! [Pprime]
//! element 0
//! lo hi
//! [R]
//! src_lo src_hi slope offset
//! ```
//!
//! `d_n`, `kappa` and the `native` line are `-` or absent for a stage without
//! a transition.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exact::{parse_rat, Interval, IntervalSet, PiecewiseAffineMap, Rat};
use crate::multiplex::{IntervalCycle, StageState, Transition};
use crate::schedule::StagePlan;

const SET_SECTIONS: [&str; 7] = ["X", "Y", "E", "I", "Istar", "Xprime", "D"];
const PARTITION_SECTIONS: [&str; 3] = ["C", "Pprime", "Q"];
const MAP_SECTIONS: [&str; 4] = ["R", "S", "tau", "Psi"];

fn push_set(out: &mut String, name: &str, set: &IntervalSet) {
    let _ = writeln!(out, "[{name}]");
    out.push_str(&set.to_text());
}

fn push_partition(out: &mut String, name: &str, parts: &[IntervalSet]) {
    let _ = writeln!(out, "[{name}]");
    for (i, p) in parts.iter().enumerate() {
        let _ = writeln!(out, "element {i}");
        out.push_str(&p.to_text());
    }
}

fn push_map(out: &mut String, name: &str, map: &PiecewiseAffineMap) {
    let _ = writeln!(out, "[{name}]");
    out.push_str(&map.to_text());
}

/// Canonical text of one stage; `kappa` is the running constant through it.
pub fn write_stage(st: &StageState, kappa: Option<&Rat>) -> String {
    let mut out = String::new();
    let d = st.transition.as_ref().map(|t| t.d.to_string()).unwrap_or_else(|| "-".into());
    let k = kappa.map(Rat::to_string).unwrap_or_else(|| "-".into());
    let _ = writeln!(out, "stage {} {} {} {} {} {}", st.n, st.cycle.b, st.plan.h, st.plan.eps, d, k);
    let _ = writeln!(out, "schedule {} {} {}", st.plan.m, st.plan.delta, st.plan.j);
    if let Some(t) = &st.transition {
        let _ = writeln!(out, "native {}", t.native_stage);
    }
    let empty = IntervalSet::empty();
    let tr = st.transition.as_ref();
    push_set(&mut out, "X", &st.x);
    push_set(&mut out, "Y", &IntervalSet::from(st.cycle.y.clone()));
    push_set(&mut out, "E", tr.map_or(&empty, |t| &t.residual));
    push_set(&mut out, "I", tr.map_or(&empty, |t| &t.base));
    push_set(&mut out, "Istar", tr.map_or(&empty, |t| &t.istar));
    push_set(&mut out, "Xprime", tr.map_or(&empty, |t| &t.x_prime));
    push_set(&mut out, "D", tr.map_or(&empty, |t| &t.changed));
    push_partition(&mut out, "C", tr.map_or(&[][..], |t| &t.cells));
    push_partition(&mut out, "Pprime", tr.map_or(&[][..], |t| &t.p_prime));
    push_partition(&mut out, "Q", tr.map_or(&[][..], |t| &t.q));
    push_map(&mut out, "R", &st.r);
    push_map(&mut out, "S", &st.cycle.map);
    let none = PiecewiseAffineMap::empty();
    push_map(&mut out, "tau", tr.map_or(&none, |t| &t.tau));
    push_map(&mut out, "Psi", &st.psi);
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Parsed snapshot: the stage plus the recorded running `kappa`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageSnapshot {
    pub stage: StageState,
    pub kappa: Option<Rat>,
}

fn opt_rat(field: &str) -> Result<Option<Rat>> {
    if field == "-" {
        Ok(None)
    } else {
        parse_rat(field).map(Some)
    }
}

fn parse_u64(field: &str) -> Result<u64> {
    field.parse().map_err(|_| corrupt(format!("bad integer `{field}`")))
}

pub fn parse_stage(text: &str) -> Result<StageSnapshot> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    if header.len() != 7 || header[0] != "stage" {
        return Err(corrupt("missing stage header"));
    }
    let n = parse_u64(header[1])? as usize;
    let b = parse_rat(header[2])?;
    let h = parse_u64(header[3])?;
    let eps = parse_rat(header[4])?;
    let d = opt_rat(header[5])?;
    let kappa = opt_rat(header[6])?;
    let sched: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    if sched.len() != 4 || sched[0] != "schedule" {
        return Err(corrupt("missing schedule line"));
    }
    let plan = StagePlan {
        n,
        m: parse_u64(sched[1])?,
        h,
        eps,
        delta: parse_rat(sched[2])?,
        j: parse_u64(sched[3])? as usize,
    };

    let mut native = None;
    let mut sections: Vec<(String, Vec<&str>)> = Vec::new();
    for line in lines {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push((name.to_string(), Vec::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push(line);
        } else if let Some(m) = line.strip_prefix("native ") {
            native = Some(parse_u64(m.trim())? as usize);
        } else if !line.trim().is_empty() {
            return Err(corrupt(format!("unexpected line `{line}`")));
        }
    }
    let body = |name: &str| -> Result<&Vec<&str>> {
        sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b)
            .ok_or_else(|| corrupt(format!("missing section [{name}]")))
    };
    for name in SET_SECTIONS.iter().chain(&PARTITION_SECTIONS).chain(&MAP_SECTIONS) {
        body(name)?;
    }
    let set = |name: &str| -> Result<IntervalSet> { IntervalSet::parse_lines(body(name)?.iter().copied()) };
    let map = |name: &str| -> Result<PiecewiseAffineMap> {
        PiecewiseAffineMap::parse_lines(body(name)?.iter().copied())
    };
    let partition = |name: &str| -> Result<Vec<IntervalSet>> {
        let mut out: Vec<Vec<&str>> = Vec::new();
        for line in body(name)? {
            if let Some(idx) = line.strip_prefix("element ") {
                if parse_u64(idx.trim())? as usize != out.len() {
                    return Err(corrupt(format!("element out of order in [{name}]")));
                }
                out.push(Vec::new());
            } else if let Some(cur) = out.last_mut() {
                cur.push(line);
            } else if !line.trim().is_empty() {
                return Err(corrupt(format!("interval before first element in [{name}]")));
            }
        }
        out.into_iter().map(|l| IntervalSet::parse_lines(l.into_iter())).collect()
    };

    let y_set = set("Y")?;
    let y = match y_set.intervals() {
        [iv] => iv.clone(),
        _ => return Err(corrupt("Y must be a single interval")),
    };
    let s = map("S")?;
    let step = y.length() / Rat::from_integer(h.into());
    let cycle = IntervalCycle {
        map: s,
        j: Interval::new(y.lo().clone(), y.lo() + step)?,
        b: y.hi().clone(),
        y,
    };
    if cycle.b != b {
        return Err(corrupt("b_n disagrees with Y"));
    }
    let transition = match (d, native) {
        (Some(d), Some(native_stage)) => Some(Transition {
            base: set("I")?,
            residual: set("E")?,
            native_stage,
            d,
            istar: set("Istar")?,
            x_prime: set("Xprime")?,
            cells: partition("C")?,
            p_prime: partition("Pprime")?,
            q: partition("Q")?,
            tau: map("tau")?,
            changed: set("D")?,
        }),
        (None, None) => None,
        _ => return Err(corrupt("d_n and native line must appear together")),
    };
    let stage = StageState { n, x: set("X")?, cycle, r: map("R")?, psi: map("Psi")?, plan, transition };
    Ok(StageSnapshot { stage, kappa })
}
