//! Two-symbol coding of the circle factor.
//!
//! Symbol 0 codes `[0, 1/2)` and symbol 1 codes `[1/2, 1)`. Every word is
//! admissible. Branch `a` is the inverse of `f` onto the half-circle of `a`,
//! and a word `w = w_1 … w_n` acts by `g_w = g_{w_1} ∘ … ∘ g_{w_n}`, so its
//! cylinder `U_w = g_w([0, 1])` has length of order `2^{-n}`.
//!
//! Points here are lifted reals in `[0, 1]`: branch 1 sends 1 to 1, which is
//! the right end of the last cylinder rather than 0.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circle_map::{CirclePoint, PerturbationSpec};
use crate::error::{invalid, Error, Result};

const BISECTION_WIDTH: f64 = 1e-3;
const NEWTON_STEP_TOLERANCE: f64 = 1e-15;
const MAX_SOLVER_ITERATIONS: usize = 60;
/// Largest word length handled by the enumerators.
pub const MAX_ENUMERATION_LENGTH: usize = 26;

/// Interior periodic anchors of the one-symbol cylinders, taken from the
/// period-3 orbit `3/7 → 6/7 → 5/7`. The orbit avoids the support of `g`,
/// so it is exactly periodic with `f' = 2` along it for every spec.
pub const SYMBOL_ANCHORS: [f64; 2] = [3.0 / 7.0, 6.0 / 7.0];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if let Some(s) = symbols.iter().find(|&&s| s > 1) {
            return Err(invalid(format!("symbol {s} is not in {{0, 1}}")));
        }
        Ok(Word(symbols))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// The word of length `len` whose symbols are the binary digits of
    /// `index`, most significant first.
    pub fn from_index(index: u64, len: usize) -> Self {
        Word(
            (0..len)
                .map(|i| ((index >> (len - 1 - i)) & 1) as u8)
                .collect(),
        )
    }

    pub fn index(&self) -> u64 {
        self.0.iter().fold(0, |acc, &s| (acc << 1) | s as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// The word with its last symbol removed.
    pub fn prime(&self) -> Word {
        let mut s = self.0.clone();
        s.pop();
        Word(s)
    }

    /// Drops the first symbol; `f` maps `U_w` onto the cylinder of the shift.
    pub fn shift(&self) -> Word {
        Word(self.0.iter().skip(1).copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.0.clone();
        s.extend_from_slice(&other.0);
        Word(s)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(invalid(format!("invalid symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Inverse branch `a` on lifted coordinates: the `y ∈ [a/2, (a+1)/2]` with
/// `2y + g(y) = x + a`, and `1/f'(y)`.
pub fn inverse_branch_lift(spec: &PerturbationSpec, a: u8, x: f64) -> Result<(f64, f64)> {
    if a > 1 {
        return Err(invalid(format!("symbol {a} is not in {{0, 1}}")));
    }
    let target = x + a as f64;
    let (mut lo, mut hi) = (a as f64 * 0.5, (a as f64 + 1.0) * 0.5);
    if spec.is_linear() {
        let y = 0.5 * target;
        return Ok((y, 0.5));
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if spec.f_lift(mid).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..MAX_SOLVER_ITERATIONS {
        let (fy, dfy) = spec.f_lift(y);
        let delta = (fy - target) / dfy;
        y -= delta;
        if delta.abs() <= NEWTON_STEP_TOLERANCE {
            let df = spec.f_lift(y).1;
            return Ok((y, 1.0 / df));
        }
    }
    Err(Error::NoConvergence {
        what: "inverse branch",
        iterations: MAX_SOLVER_ITERATIONS,
        last_change: (spec.f_lift(y).0 - target).abs(),
    })
}

pub fn inverse_branch(
    spec: &PerturbationSpec,
    a: u8,
    x: CirclePoint,
) -> Result<(CirclePoint, f64)> {
    let (y, d) = inverse_branch_lift(spec, a, x.value())?;
    Ok((CirclePoint::new(y), d))
}

/// `g_w(x)` by right-to-left composition, with `|g_w'(x)|` from the chain rule.
pub fn apply_word(spec: &PerturbationSpec, w: &Word, x: f64) -> Result<(f64, f64)> {
    w.symbols().iter().rev().try_fold((x, 1.0), |(p, d), &a| {
        let (q, dq) = inverse_branch_lift(spec, a, p)?;
        Ok((q, d * dq))
    })
}

/// The backward chain of [`apply_word`]: `[g_w(x), g_{w_2…}(x), …, x]`,
/// which is the forward orbit of `g_w(x)` under `f`.
pub fn word_orbit(spec: &PerturbationSpec, w: &Word, x: f64) -> Result<Vec<f64>> {
    let mut out = vec![x];
    let mut p = x;
    for &a in w.symbols().iter().rev() {
        p = inverse_branch_lift(spec, a, p)?.0;
        out.push(p);
    }
    out.reverse();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub word: Word,
    pub lo: f64,
    pub hi: f64,
    /// `x_w = g_{w'}(x_{w_n})`, with `x_0 = 3/7` and `x_1 = 6/7`.
    pub anchor: f64,
    /// `|g_{w'}'(x_{w_n})|`.
    pub deriv_at_anchor: f64,
}

impl Cylinder {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

pub fn symbol_anchor(a: u8) -> f64 {
    SYMBOL_ANCHORS[a as usize]
}

pub fn cylinder(spec: &PerturbationSpec, w: &Word) -> Result<Cylinder> {
    let lo = apply_word(spec, w, 0.0)?.0;
    let hi = apply_word(spec, w, 1.0)?.0;
    let (anchor, deriv_at_anchor) = match w.last() {
        None => (0.5, 1.0),
        Some(last) => apply_word(spec, &w.prime(), symbol_anchor(last))?,
    };
    Ok(Cylinder {
        word: w.clone(),
        lo,
        hi,
        anchor,
        deriv_at_anchor,
    })
}

/// State carried while building cylinders by prepending symbols.
#[derive(Debug, Clone, Copy)]
pub struct CylinderVisit {
    /// Binary index of the word (first symbol most significant).
    pub index: u64,
    pub len: usize,
    pub lo: f64,
    pub hi: f64,
    pub anchor: f64,
    /// `ln |g_{w'}'(x_{w_n})|`.
    pub log_deriv: f64,
    /// `Σ ln f'` over the anchor orbit `x_w, f x_w, …, f^{n-1} x_w`.
    pub tau_sum: f64,
    /// Sum of the caller's observable over the same orbit.
    pub obs_sum: f64,
    /// The observable at the last orbit point `x_{w_n}`, so sums over the
    /// first `n-1` points can be recovered.
    pub obs_last: f64,
    /// `ln f'(x_{w_n})`.
    pub tau_last: f64,
}

impl CylinderVisit {
    pub fn word(&self) -> Word {
        Word::from_index(self.index, self.len)
    }

    pub fn to_cylinder(&self) -> Cylinder {
        Cylinder {
            word: self.word(),
            lo: self.lo,
            hi: self.hi,
            anchor: self.anchor,
            deriv_at_anchor: self.log_deriv.exp(),
        }
    }
}

/// Depth-first traversal of all `2^n` cylinders of length `n`, building each
/// word by prepending symbols so that it costs three branch solves beyond its
/// suffix. Visit order is by suffix, not by index; use [`CylinderVisit::index`].
pub fn visit_cylinders<O, V>(
    spec: &PerturbationSpec,
    n: usize,
    observable: O,
    mut visit: V,
) -> Result<()>
where
    O: Fn(f64) -> f64,
    V: FnMut(&CylinderVisit),
{
    if n == 0 || n > MAX_ENUMERATION_LENGTH {
        return Err(invalid(format!(
            "cylinder length must lie in 1..={MAX_ENUMERATION_LENGTH}, got {n}"
        )));
    }
    fn recurse<O: Fn(f64) -> f64, V: FnMut(&CylinderVisit)>(
        spec: &PerturbationSpec,
        n: usize,
        observable: &O,
        visit: &mut V,
        suffix: &CylinderVisit,
    ) -> Result<()> {
        if suffix.len == n {
            visit(suffix);
            return Ok(());
        }
        for a in 0..2u8 {
            let lo = inverse_branch_lift(spec, a, suffix.lo)?.0;
            let hi = inverse_branch_lift(spec, a, suffix.hi)?.0;
            let (anchor, d) = inverse_branch_lift(spec, a, suffix.anchor)?;
            let next = CylinderVisit {
                index: ((a as u64) << suffix.len) | suffix.index,
                len: suffix.len + 1,
                lo,
                hi,
                anchor,
                log_deriv: suffix.log_deriv + d.ln(),
                tau_sum: suffix.tau_sum + spec.log_derivative(anchor),
                obs_sum: suffix.obs_sum + observable(anchor),
                ..*suffix
            };
            recurse(spec, n, observable, visit, &next)?;
        }
        Ok(())
    }

    for last in 0..2u8 {
        let anchor = symbol_anchor(last);
        let tau = spec.log_derivative(anchor);
        let obs = observable(anchor);
        let seed = CylinderVisit {
            index: last as u64,
            len: 1,
            lo: inverse_branch_lift(spec, last, 0.0)?.0,
            hi: inverse_branch_lift(spec, last, 1.0)?.0,
            anchor,
            log_deriv: 0.0,
            tau_sum: tau,
            obs_sum: obs,
            obs_last: obs,
            tau_last: tau,
        };
        recurse(spec, n, &observable, &mut visit, &seed)?;
    }
    Ok(())
}

/// All `2^n` cylinders of length `n`, left to right.
pub fn enumerate_cylinders(spec: &PerturbationSpec, n: usize) -> Result<Vec<Cylinder>> {
    let mut slots: Vec<Option<Cylinder>> = vec![None; 1usize << n.min(MAX_ENUMERATION_LENGTH)];
    visit_cylinders(
        spec,
        n,
        |_| 0.0,
        |v| slots[v.index as usize] = Some(v.to_cylinder()),
    )?;
    Ok(slots.into_iter().flatten().collect())
}

#[derive(Serialize)]
struct CylinderRow<'a> {
    word: &'a Word,
    lo: f64,
    hi: f64,
    anchor: f64,
    deriv_at_anchor: f64,
}

/// CSV with columns `word,lo,hi,anchor,deriv_at_anchor`.
pub fn write_cylinders_csv<W: Write>(writer: W, cylinders: &[Cylinder]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in cylinders {
        w.serialize(CylinderRow {
            word: &c.word,
            lo: c.lo,
            hi: c.hi,
            anchor: c.anchor,
            deriv_at_anchor: c.deriv_at_anchor,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_map::coefficient_table;

    #[test]
    fn linear_branches() {
        let lin = PerturbationSpec::linear();
        let (y, d) = inverse_branch(&lin, 0, CirclePoint::new(0.5)).unwrap();
        assert_eq!((y.value(), d), (0.25, 0.5));
        let s = coefficient_table(5);
        let (y, d) = inverse_branch(&s, 1, CirclePoint::new(0.0)).unwrap();
        assert!((y.value() - 0.5).abs() < 1e-15);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn branch_residuals() {
        let s = coefficient_table(5);
        for i in 0..2000 {
            let x = (i as f64 + 0.37) / 2000.0;
            for a in 0..2 {
                let (y, d) = inverse_branch_lift(&s, a, x).unwrap();
                assert!(y >= a as f64 * 0.5 && y <= (a as f64 + 1.0) * 0.5);
                let (fy, df) = s.f_lift(y);
                assert!((fy - x - a as f64).abs() < 1e-14);
                assert_eq!(d, 1.0 / df);
            }
        }
    }

    #[test]
    fn empty_word_is_identity() {
        let s = coefficient_table(5);
        assert_eq!(apply_word(&s, &Word::empty(), 0.3).unwrap(), (0.3, 1.0));
    }

    #[test]
    fn linear_derivative_is_dyadic() {
        let lin = PerturbationSpec::linear();
        let w: Word = "0110100".parse().unwrap();
        assert_eq!(apply_word(&lin, &w, 0.7).unwrap().1, 2f64.powi(-7));
    }

    #[test]
    fn word_01_cylinder() {
        let lin = PerturbationSpec::linear();
        let c = cylinder(&lin, &"01".parse().unwrap()).unwrap();
        assert_eq!((c.lo, c.hi), (0.25, 0.5));
        assert!(c.anchor > c.lo && c.anchor < c.hi);
    }

    #[test]
    fn chain_rule_matches_finite_differences() {
        let s = coefficient_table(5);
        let h = 1e-7;
        for idx in [0u64, 5, 77, 300, 511] {
            let w = Word::from_index(idx, 9);
            for x in [0.1, 1.0 / 3.0, 0.33, 0.8] {
                let d = apply_word(&s, &w, x).unwrap().1;
                let fd = (apply_word(&s, &w, x + h).unwrap().0
                    - apply_word(&s, &w, x - h).unwrap().0)
                    / (2.0 * h);
                assert!(((fd - d) / d).abs() < 1e-6, "{w} {x}");
            }
        }
    }

    #[test]
    fn cylinders_tile() {
        let s = coefficient_table(5);
        let kappa = 1.0 / (2.0 - s.derivative_bound());
        for n in [1usize, 4, 10] {
            let cyl = enumerate_cylinders(&s, n).unwrap();
            assert_eq!(cyl.len(), 1 << n);
            assert_eq!(cyl[0].lo, 0.0);
            assert!((cyl.last().unwrap().hi - 1.0).abs() < 1e-15);
            for pair in cyl.windows(2) {
                assert!((pair[0].hi - pair[1].lo).abs() < 1e-15);
            }
            let total: f64 = cyl.iter().map(Cylinder::length).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for c in &cyl {
                assert!(c.length() <= kappa.powi(n as i32) * (1.0 + 1e-12));
                assert!(c.anchor >= c.lo && c.anchor <= c.hi);
            }
        }
    }

    #[test]
    fn enumeration_agrees_with_direct_construction() {
        let s = coefficient_table(5);
        let cyl = enumerate_cylinders(&s, 7).unwrap();
        for c in cyl.iter().step_by(13) {
            let direct = cylinder(&s, &c.word).unwrap();
            assert!((direct.lo - c.lo).abs() < 1e-15);
            assert!((direct.hi - c.hi).abs() < 1e-15);
            assert!((direct.anchor - c.anchor).abs() < 1e-15);
            assert!(
                ((direct.deriv_at_anchor - c.deriv_at_anchor) / c.deriv_at_anchor).abs() < 1e-12
            );
        }
    }

    #[test]
    fn refinement_and_expansion() {
        let s = coefficient_table(5);
        let w: Word = "1011001".parse().unwrap();
        let c = cylinder(&s, &w).unwrap();
        let tail = cylinder(&s, &w.shift()).unwrap();
        let (lo, _) = inverse_branch_lift(&s, 1, tail.lo).unwrap();
        let (hi, _) = inverse_branch_lift(&s, 1, tail.hi).unwrap();
        assert!((lo - c.lo).abs() < 1e-12 && (hi - c.hi).abs() < 1e-12);
        let flo = s.f_lift(c.lo).0 - 1.0;
        let fhi = s.f_lift(c.hi).0 - 1.0;
        assert!((flo - tail.lo).abs() < 1e-12 && (fhi - tail.hi).abs() < 1e-12);
    }

    #[test]
    fn word_parsing() {
        let w: Word = "0101".parse().unwrap();
        assert_eq!(w.index(), 5);
        assert_eq!(Word::from_index(5, 4), w);
        assert_eq!(w.to_string(), "0101");
        assert_eq!(w.prime().to_string(), "010");
        assert!("012".parse::<Word>().is_err());
    }

    #[test]
    fn cylinder_csv_header() {
        let lin = PerturbationSpec::linear();
        let cyl = enumerate_cylinders(&lin, 2).unwrap();
        let mut buf = Vec::new();
        write_cylinders_csv(&mut buf, &cyl).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("word,lo,hi,anchor,deriv_at_anchor\n00,0.0,0.25,"));
    }
}
