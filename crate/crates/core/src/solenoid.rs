//! The solid-torus map
//! `F(θ, x, y) = (f(θ), x/4 + cos(2πθ)/(4π), y/4 + sin(2πθ)/(4π))`.
//!
//! The fibers `{θ} × D` are contracted by exactly 1/4, so the stable bundle
//! is the constant plane `(0, h, k)` and `∂_u F(p) = det(dF_p) · 16 = f'(θ)`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circle_map::{circle_difference, periodic_theta, CirclePoint, PerturbationSpec};
use crate::error::{invalid, Error, Result};

/// Fiber contraction of `F`.
pub const FIBER_CONTRACTION: f64 = 0.25;
/// Residual required of periodic orbits.
pub const ORBIT_TOLERANCE: f64 = 1e-12;
const FIBER_STEP_TOLERANCE: f64 = 1e-13;
const FIBER_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolenoidPoint {
    pub theta: CirclePoint,
    pub x: f64,
    pub y: f64,
}

impl SolenoidPoint {
    pub fn new(theta: f64, x: f64, y: f64) -> Self {
        SolenoidPoint {
            theta: CirclePoint::new(theta),
            x,
            y,
        }
    }

    pub fn fiber_norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Max of the circle distance in θ and the Euclidean fiber distance.
    pub fn distance(&self, other: &SolenoidPoint) -> f64 {
        let fiber = ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt();
        self.theta.distance(other.theta).max(fiber)
    }

    /// Coordinates in ℝ³ with θ taken in `[0, 1)`.
    pub fn coords(&self) -> [f64; 3] {
        [self.theta.value(), self.x, self.y]
    }
}

/// Row-major 3×3 Jacobian of `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian3(pub [[f64; 3]; 3]);

impl Jacobian3 {
    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [0, 1, 2].map(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
    }
}

/// One application of `F` and the unstable derivative `f'(θ)`.
pub fn step(spec: &PerturbationSpec, p: &SolenoidPoint) -> (SolenoidPoint, f64) {
    let (theta, df) = spec.f_eval(p.theta);
    let (s, c) = (2.0 * PI * p.theta.value()).sin_cos();
    let image = SolenoidPoint {
        theta,
        x: FIBER_CONTRACTION * p.x + c / (4.0 * PI),
        y: FIBER_CONTRACTION * p.y + s / (4.0 * PI),
    };
    (image, df)
}

pub fn jacobian(spec: &PerturbationSpec, p: &SolenoidPoint) -> Jacobian3 {
    let (_, df) = spec.f_eval(p.theta);
    let (s, c) = (2.0 * PI * p.theta.value()).sin_cos();
    Jacobian3([
        [df, 0.0, 0.0],
        [-0.5 * s, FIBER_CONTRACTION, 0.0],
        [0.5 * c, 0.0, FIBER_CONTRACTION],
    ])
}

/// Central-difference Jacobian of [`step`]; θ differences are taken on the circle.
pub fn finite_difference_jacobian(spec: &PerturbationSpec, p: &SolenoidPoint, h: f64) -> Jacobian3 {
    let mut out = [[0.0; 3]; 3];
    for col in 0..3 {
        let mut plus = p.coords();
        let mut minus = p.coords();
        plus[col] += h;
        minus[col] -= h;
        let a = step(spec, &SolenoidPoint::new(plus[0], plus[1], plus[2])).0;
        let b = step(spec, &SolenoidPoint::new(minus[0], minus[1], minus[2])).0;
        out[0][col] = circle_difference(a.theta.value(), b.theta.value()) / (2.0 * h);
        out[1][col] = (a.x - b.x) / (2.0 * h);
        out[2][col] = (a.y - b.y) / (2.0 * h);
    }
    Jacobian3(out)
}

/// `F^k(p)`; the fiber lands within `4^{-k}` times the initial fiber
/// diameter of the attractor.
pub fn attract(spec: &PerturbationSpec, p: &SolenoidPoint, k: u32) -> SolenoidPoint {
    (0..k).fold(*p, |q, _| step(spec, &q).0)
}

/// Trajectory of length `len` starting at `p`, with the unstable derivative
/// at each point.
pub fn trajectory(
    spec: &PerturbationSpec,
    p: &SolenoidPoint,
    len: usize,
) -> Vec<(SolenoidPoint, f64)> {
    let mut out = Vec::with_capacity(len);
    let mut q = *p;
    for _ in 0..len {
        let (next, df) = step(spec, &q);
        out.push((q, df));
        q = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub period: u32,
    pub points: Vec<SolenoidPoint>,
    pub unstable_exponent: f64,
    /// Distance between `F(p_{N-1})` and `p_0`.
    pub residual: f64,
}

/// The unique periodic point of `F` above `θ_N` (`θ_1 = 0`), found by
/// contraction iteration of `F^N` on the fiber.
pub fn periodic_orbit(spec: &PerturbationSpec, n: u32) -> Result<PeriodicOrbit> {
    let theta0 = match n {
        0 => return Err(invalid("period must be positive")),
        1 => {
            let t = CirclePoint::new(0.0);
            let residual = spec.f_eval(t).0.distance(t);
            if residual >= ORBIT_TOLERANCE {
                return Err(Error::NotPeriodic {
                    period: 1,
                    residual,
                    tolerance: ORBIT_TOLERANCE,
                });
            }
            t
        }
        _ => periodic_theta(spec, n)?.0,
    };
    let mut thetas = Vec::with_capacity(n as usize);
    let mut t = theta0;
    for _ in 0..n {
        thetas.push(t);
        t = spec.f_eval(t).0;
    }

    let sweep = |x: f64, y: f64| {
        thetas.iter().fold((x, y), |(x, y), th| {
            let (s, c) = (2.0 * PI * th.value()).sin_cos();
            (
                FIBER_CONTRACTION * x + c / (4.0 * PI),
                FIBER_CONTRACTION * y + s / (4.0 * PI),
            )
        })
    };
    let (mut x, mut y) = (0.0, 0.0);
    let mut converged = false;
    let mut change = f64::INFINITY;
    for _ in 0..FIBER_MAX_ITERATIONS {
        let (nx, ny) = sweep(x, y);
        change = (nx - x).abs().max((ny - y).abs());
        x = nx;
        y = ny;
        if change < FIBER_STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "fiber fixed point",
            iterations: FIBER_MAX_ITERATIONS,
            last_change: change,
        });
    }

    let mut points = Vec::with_capacity(n as usize);
    let mut p = SolenoidPoint {
        theta: theta0,
        x,
        y,
    };
    let mut log_sum = 0.0;
    for _ in 0..n {
        points.push(p);
        let (q, df) = step(spec, &p);
        log_sum += df.ln();
        p = q;
    }
    let residual = p.distance(&points[0]);
    if residual >= ORBIT_TOLERANCE {
        return Err(Error::NotPeriodic {
            period: n,
            residual,
            tolerance: ORBIT_TOLERANCE,
        });
    }
    Ok(PeriodicOrbit {
        period: n,
        points,
        unstable_exponent: log_sum / n as f64,
        residual,
    })
}

/// `sup_θ f'(θ) · ‖dF|E^s‖` over a uniform grid; `‖dF|E^s‖ = 1/4`.
pub fn bunching_margin(spec: &PerturbationSpec, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(invalid(format!(
            "grid_size must be at least 2, got {grid_size}"
        )));
    }
    Ok((0..grid_size)
        .map(|i| spec.f_lift(i as f64 / grid_size as f64).1 * FIBER_CONTRACTION)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Serialize)]
struct TrajectoryRow {
    theta: f64,
    x: f64,
    y: f64,
    unstable_deriv: f64,
}

/// CSV with columns `theta,x,y,unstable_deriv`.
pub fn write_points_csv<W: Write>(
    writer: W,
    points: impl IntoIterator<Item = (SolenoidPoint, f64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (p, d) in points {
        w.serialize(TrajectoryRow {
            theta: p.theta.value(),
            x: p.x,
            y: p.y,
            unstable_deriv: d,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// The orbit's points paired with `f'(θ)`.
pub fn orbit_rows(spec: &PerturbationSpec, orbit: &PeriodicOrbit) -> Vec<(SolenoidPoint, f64)> {
    orbit
        .points
        .iter()
        .map(|p| (*p, spec.f_eval(p.theta).1))
        .collect()
}
