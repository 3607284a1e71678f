//! Exact verification of the thickened lattice around `1/(2^K - 1)`.

use dashu_int::IBig;
use dashu_ratio::RBig;
use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeInterval {
    pub order: u32,
    pub center: RBig,
    pub radius: RBig,
}

impl LatticeInterval {
    pub fn new(order: u32) -> Self {
        Self::with_radius(order, default_radius(order))
    }

    pub fn with_radius(order: u32, radius: RBig) -> Self {
        LatticeInterval {
            order,
            center: RBig::from_parts(IBig::ONE, pow2(order) - dashu_int::UBig::ONE),
            radius,
        }
    }

    pub fn lo(&self) -> RBig {
        &self.center - &self.radius
    }

    pub fn hi(&self) -> RBig {
        &self.center + &self.radius
    }

    /// Closed-interval membership.
    pub fn contains(&self, x: &RBig) -> bool {
        *x >= self.lo() && *x <= self.hi()
    }
}

fn pow2(k: u32) -> dashu_int::UBig {
    dashu_int::UBig::ONE << k as usize
}

/// `8^{-K}`.
pub fn default_radius(order: u32) -> RBig {
    RBig::from_parts(IBig::ONE, pow2(3 * order))
}

/// `2^{-K}`: a radius too wide for the intervals to stay disjoint.
pub fn dyadic_radius(order: u32) -> RBig {
    RBig::from_parts(IBig::ONE, pow2(order))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeViolation {
    /// Intervals of orders `first < second` intersect.
    Overlap { first: u32, second: u32 },
    /// `2^k / (2^n - 1)` lies in the interval of the given order.
    PointInside { n: u32, k: u32, order: u32 },
    /// `2^k / (2^n - 1)` lies below the hull of all orders beyond `k_max`.
    PointInTail { n: u32, k: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeReport {
    pub k_max: u32,
    pub pairs_checked: usize,
    pub points_checked: usize,
    pub violation: Option<LatticeViolation>,
}

impl LatticeReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks pairwise disjointness of the intervals of order `2..=k_max` and
/// that no point `2^k / (2^N - 1)`, `2 ≤ N ≤ k_max`, `1 ≤ k ≤ N-1`, lies in
/// the union. Orders beyond `k_max` are covered by their hull
/// `[0, 1/(2^{k_max+1} - 1) + 8^{-(k_max+1)}]`, so the exclusion check holds
/// for the full infinite union.
pub fn verify_lattice(k_max: u32) -> Result<LatticeReport> {
    verify_lattice_with_radius(k_max, default_radius)
}

/// Same as [`verify_lattice`] with a caller-supplied radius law.
pub fn verify_lattice_with_radius(
    k_max: u32,
    radius: impl Fn(u32) -> RBig,
) -> Result<LatticeReport> {
    if k_max < 2 {
        return Err(invalid(format!("k_max must be at least 2, got {k_max}")));
    }
    if k_max > 60 {
        return Err(invalid(format!("k_max {k_max} is unreasonably large")));
    }
    let intervals: Vec<LatticeInterval> = (2..=k_max)
        .map(|k| LatticeInterval::with_radius(k, radius(k)))
        .collect();
    let tail = LatticeInterval::with_radius(k_max + 1, radius(k_max + 1)).hi();

    let mut report = LatticeReport {
        k_max,
        pairs_checked: 0,
        points_checked: 0,
        violation: None,
    };

    for (i, a) in intervals.iter().enumerate() {
        for b in &intervals[i + 1..] {
            report.pairs_checked += 1;
            if a.lo() <= b.hi() && b.lo() <= a.hi() {
                report.violation = Some(LatticeViolation::Overlap {
                    first: a.order,
                    second: b.order,
                });
                return Ok(report);
            }
        }
    }

    for n in 2..=k_max {
        let den = pow2(n) - dashu_int::UBig::ONE;
        for k in 1..n {
            report.points_checked += 1;
            let point = RBig::from_parts(IBig::from(pow2(k)), den.clone());
            if let Some(hit) = intervals.iter().find(|iv| iv.contains(&point)) {
                report.violation = Some(LatticeViolation::PointInside {
                    n,
                    k,
                    order: hit.order,
                });
                return Ok(report);
            }
            if point <= tail {
                report.violation = Some(LatticeViolation::PointInTail { n, k });
                return Ok(report);
            }
        }
    }
    Ok(report)
}
