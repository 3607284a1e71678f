//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are reported but do not fail the target;
//! set `ACCEPTANCE_STRICT=1` to make every failure fatal.

use std::f64::consts::{LN_2, PI};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solenoid_core::circle_map::{
    dyadic_radius, lyapunov_periodic, periodic_theta, verify_lattice, verify_lattice_with_radius,
    PerturbationSpec,
};
use solenoid_core::fourier::{
    attracted_samples, dyadic_schedule, mu_hat_from_points, nu_hat, nu_hat_decay, required_grid,
    Phase,
};
use solenoid_core::solenoid::{
    bunching_margin, finite_difference_jacobian, jacobian, periodic_orbit,
};
use solenoid_core::thermo::{
    gibbs_ratio_stats, large_deviation_profile, solve_equilibrium, upper_regularity_exponent,
    EquilibriumData, MonteCarlo,
};
use solenoid_core::twisted::{
    eta_sweep, nonconcentration_count, nonconcentration_report, profile_log_slope, random_contexts,
    twisted_norm_profile, zeta_table, ExpSumOptions,
};
use solenoid_core::{coefficient_table, Potential, SolenoidPoint};

const KNOWN_RED: [u32; 3] = [5, 6, 7];
const GRID: usize = 1 << 14;

/// Id, check and runtime budget.
type Criterion = (u32, fn() -> Outcome, Option<Duration>);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(checks: &[(&str, bool)], detail: String) -> Self {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
        let detail = if failed.is_empty() {
            detail
        } else {
            format!("{detail}; failed: {}", failed.join(", "))
        };
        Outcome {
            pass: failed.is_empty(),
            detail,
        }
    }
}

fn mme(spec: &PerturbationSpec, m: usize) -> EquilibriumData {
    solve_equilibrium(spec, &Potential::Mme, m).expect("equilibrium")
}

fn criterion_1() -> Outcome {
    let spec = coefficient_table(5);
    let mut worst_residual = 0f64;
    let mut worst_alpha = 0f64;
    let mut worst_beta = 0f64;
    for n in 2..=5u32 {
        let (theta, residual) = periodic_theta(&spec, n).expect("periodic point");
        let lambda = lyapunov_periodic(&spec, theta, n).expect("exponent");
        let from_alpha = LN_2 + (1.0 + spec.alpha(n).unwrap() / 2.0).ln() / n as f64;
        let from_beta = spec.beta(n).unwrap().exp_f64();
        worst_residual = worst_residual.max(residual);
        worst_alpha = worst_alpha.max((lambda - from_alpha).abs());
        worst_beta = worst_beta.max((lambda - from_beta).abs());
    }
    Outcome::new(
        &[
            ("residual", worst_residual < 1e-12),
            ("alpha form", worst_alpha < 1e-12),
            ("beta form", worst_beta < 1e-12),
        ],
        format!(
            "residual {worst_residual:.1e}, |λ-α form| {worst_alpha:.1e}, |λ-e^β| {worst_beta:.1e}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let exact = verify_lattice(20).expect("lattice");
    let mutated = verify_lattice_with_radius(20, dyadic_radius).expect("lattice");
    Outcome::new(
        &[
            ("exact check", exact.passed()),
            ("mutated radius rejected", !mutated.passed()),
        ],
        format!(
            "{} pairs, {} points; mutated violation {:?}",
            exact.pairs_checked, exact.points_checked, mutated.violation
        ),
    )
}

fn criterion_3() -> Outcome {
    let spec = coefficient_table(5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut jac_err = 0f64;
    let mut det_err = 0f64;
    for _ in 0..1000 {
        let r: f64 = rng.random::<f64>().sqrt() * 0.9;
        let a: f64 = rng.random::<f64>() * 2.0 * PI;
        let p = SolenoidPoint::new(rng.random(), r * a.cos(), r * a.sin());
        let j = jacobian(&spec, &p);
        let fd = finite_difference_jacobian(&spec, &p, 1e-6);
        for (row, fd_row) in j.0.iter().zip(&fd.0) {
            for (x, y) in row.iter().zip(fd_row) {
                jac_err = jac_err.max((x - y).abs());
            }
        }
        det_err = det_err.max((j.det() - spec.f_lift(p.theta.value()).1 / 16.0).abs());
    }
    let mut orbit_residual = 0f64;
    let mut orbit_exponent = 0f64;
    for n in 2..=5u32 {
        let orbit = periodic_orbit(&spec, n).expect("orbit");
        orbit_residual = orbit_residual.max(orbit.residual);
        orbit_exponent =
            orbit_exponent.max((orbit.unstable_exponent - spec.beta(n).unwrap().exp_f64()).abs());
    }
    let margin = bunching_margin(&spec, 1 << 16).expect("margin");
    Outcome::new(
        &[
            ("jacobian", jac_err < 1e-6),
            ("determinant", det_err < 1e-12),
            ("orbit residual", orbit_residual < 1e-12),
            ("orbit exponent", orbit_exponent < 1e-12),
            ("bunching", margin < 1.0),
        ],
        format!(
            "jacobian {jac_err:.1e}, det {det_err:.1e}, orbit residual {orbit_residual:.1e}, \
             exponent {orbit_exponent:.1e}, bunching {margin:.6}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let eq = mme(&PerturbationSpec::linear(), GRID);
    let rho = eq
        .density
        .values()
        .iter()
        .fold(0f64, |a, v| a.max((v - 1.0).abs()));
    let gibbs = gibbs_ratio_stats(&eq, 10).expect("gibbs");
    let gibbs_err = (gibbs.ratio_min - 1.0)
        .abs()
        .max((gibbs.ratio_max - 1.0).abs());
    let nu = (1..=8)
        .map(|k| {
            nu_hat(&eq, 2.0 * PI * k as f64, &Phase::Identity)
                .expect("nu_hat")
                .value
                .norm()
        })
        .fold(0f64, f64::max);
    let p = (eq.pressure - LN_2).abs();
    let l = (eq.lyapunov - LN_2).abs();
    let d = (eq.dimension - 1.0).abs();
    Outcome::new(
        &[
            ("pressure", p < 1e-10),
            ("density", rho < 1e-8),
            ("lyapunov", l < 1e-10),
            ("dimension", d < 1e-8),
            ("gibbs", gibbs_err < 1e-8),
            ("nu_hat", nu < 1e-10),
        ],
        format!(
            "|P-ln2| {p:.1e}, |ρ-1| {rho:.1e}, |Λ-ln2| {l:.1e}, |δ-1| {d:.1e}, gibbs {gibbs_err:.1e}, \
             |ν̂(2πk)| {nu:.1e}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let spec = coefficient_table(5);
    let eq = mme(&spec, GRID);
    let srb = solve_equilibrium(&spec, &Potential::Srb, GRID).expect("srb");
    let p = (eq.pressure - LN_2).abs();
    let d = (srb.dimension - 1.0).abs();
    let stats: Vec<_> = [8, 10, 12]
        .iter()
        .map(|&n| gibbs_ratio_stats(&eq, n).expect("gibbs"))
        .collect();
    let in_range = stats
        .iter()
        .all(|s| s.ratio_min >= 0.5 && s.ratio_max <= 2.0);
    let spread = |f: fn(&solenoid_core::thermo::GibbsStats) -> f64| {
        let v: Vec<f64> = stats.iter().map(f).collect();
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo - 1.0
    };
    let variation = spread(|s| s.ratio_min).max(spread(|s| s.ratio_max));
    let slope = upper_regularity_exponent(&eq, &[0.1, 0.03, 0.01, 0.003, 0.001])
        .expect("regularity")
        .slope;
    let n_list: Vec<usize> = (6..=14).collect();
    let profile =
        large_deviation_profile(&eq, 5e-5, &n_list, MonteCarlo::default()).expect("profile");
    let fractions: Vec<String> = profile
        .entries
        .iter()
        .map(|e| format!("{:.2e}", e.1))
        .collect();
    let rate = profile.fitted_rate;
    Outcome::new(
        &[
            ("pressure", p < 1e-6),
            ("srb dimension", d < 1e-4),
            ("gibbs range", in_range),
            ("gibbs variation", variation < 0.1),
            ("regularity", slope > 0.9),
            ("deviations non-increasing", profile.is_non_increasing()),
            ("deviation rate", rate.is_some_and(|r| r < 0.0)),
        ],
        format!(
            "|P-ln2| {p:.1e}, |δ_srb-1| {d:.1e}, gibbs variation {variation:.1e}, regularity {slope:.4}, \
             deviation fractions [{}], rate {rate:?}",
            fractions.join(" ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let perturbed = mme(&coefficient_table(5), GRID);
    let linear = mme(&PerturbationSpec::linear(), GRID);
    let norms = twisted_norm_profile(&perturbed, 100.0, 80).expect("profile");
    let slope = profile_log_slope(&norms).expect("slope");
    let flat = twisted_norm_profile(&linear, 100.0, 80).expect("profile");
    let flat_slope = profile_log_slope(&flat).expect("slope");
    Outcome::new(
        &[
            ("perturbed contraction", slope < -0.005),
            (
                "linear constant",
                flat_slope == 0.0 && flat.iter().all(|&v| v == 1.0),
            ),
        ],
        format!(
            "perturbed slope {slope:.3e} (last norm {:.6}), linear slope {flat_slope}",
            norms.last().unwrap()
        ),
    )
}

fn brute_count(values: &[f64], sigma: f64) -> u64 {
    let mut c = 0;
    for a in values {
        for b in values {
            if (a - b).abs() <= sigma {
                c += 1;
            }
        }
    }
    c
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for case in 0..50 {
        let n = rng.random_range(1..=2000);
        let mut values: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        if case % 2 == 1 {
            for v in &mut values {
                *v = (*v * 64.0).floor() / 64.0;
            }
        }
        let sigma = 10f64.powf(rng.random_range(-5.0..0.0));
        if nonconcentration_count(&values, sigma).expect("count") != brute_count(&values, sigma) {
            mismatches += 1;
        }
    }

    let eq = mme(&coefficient_table(5), GRID);
    let n = 12;
    let context = random_contexts(n, 1, 0).remove(0);
    let table = zeta_table(&eq, &context, n).expect("zeta");
    let sigmas: Vec<f64> = (0..13).map(|i| 1e-4 * 10f64.powf(i as f64 / 4.0)).collect();
    let report = nonconcentration_report(&table, &sigmas).expect("report");
    let tables = random_contexts(n, 3, 0)
        .iter()
        .map(|c| zeta_table(&eq, c, n).expect("zeta"))
        .collect::<Vec<_>>();
    let eta_min = (0.05 * n as f64 / 2.0).exp();
    let sweep = eta_sweep(
        &tables,
        eta_min,
        eta_min * 100.0,
        12,
        ExpSumOptions::default(),
    )
    .expect("sweep");
    Outcome::new(
        &[
            ("brute-force oracle", mismatches == 0),
            ("gamma positive", report.gamma_emp > 0.0),
            ("count bound", report.bound_holds),
            ("exp_sum slope", sweep.slope < 0.0),
        ],
        format!(
            "{mismatches} oracle mismatches, N {}, γ_emp {:.4}, count/N² at σ=1e-3 {:.3}, exp_sum slope {:.3e}",
            report.size,
            report.gamma_emp,
            report.fractions()[4],
            sweep.slope
        ),
    )
}

fn criterion_8() -> Outcome {
    let spec = coefficient_table(5);
    let frequencies = dyadic_schedule(100.0, 10);
    let m = required_grid(*frequencies.last().unwrap())
        .next_power_of_two()
        .max(GRID);
    let eq = mme(&spec, m);
    let series = nu_hat_decay(&eq, &frequencies, &Phase::Identity).expect("decay");
    let points = attracted_samples(&spec, &eq, 1_000_000, 20, 0).expect("samples");
    let mut worst = 0f64;
    for t in [10.0, 100.0, 1000.0] {
        let mu = mu_hat_from_points(&points, [t, 0.0, 0.0]);
        let nu = nu_hat(&eq, t, &Phase::Identity).expect("nu_hat").value;
        worst = worst.max((mu.value - nu).norm() / mu.stderr);
    }
    Outcome::new(
        &[
            ("exponent", series.exponent < -0.05),
            ("stderr", series.stderr < series.exponent.abs() / 2.0),
            ("mu vs nu", worst < 3.0),
        ],
        format!(
            "m {m}, exponent {:.4} ± {:.4} over {} points, worst |μ̂-ν̂|/stderr {worst:.2}",
            series.exponent, series.stderr, series.n_points
        ),
    )
}

const SMALL_CONFIG: &str = r#"{
  "grid_m": 1024,
  "seed": 11,
  "construct": {"lattice_k_max": 10, "bunching_grid": 4096},
  "gibbs": {"n_list": [6, 8]},
  "deviations": {"n_list": [4, 6, 20], "monte_carlo_samples": 5000, "regular_n": 8},
  "twisted": {"steps": 12},
  "nonconc": {"n": 8},
  "expsum": {"n": 6, "k": 3, "eta_count": 3},
  "fourier": {"t_base": 10.0, "t_count": 8, "samples": 4000}
}"#;

fn solenoid(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_solenoid"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n.ends_with(".csv"))
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = dir.path().join("config.json");
    fs::write(&config, SMALL_CONFIG).expect("config");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let ran = solenoid(&[
        "all",
        "--config",
        config.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
    ]);
    let manifest = first.join("manifest.json");
    let reran = ran
        && solenoid(&[
            "rerun",
            manifest.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
        ]);
    let names = csv_files(&first);
    let identical = names
        .iter()
        .filter(|n| fs::read(first.join(n)).ok() == fs::read(second.join(n)).ok())
        .count();
    Outcome::new(
        &[
            ("run", ran),
            ("rerun", reran),
            (
                "csv present",
                !names.is_empty() && csv_files(&second) == names,
            ),
            ("byte-identical", identical == names.len()),
        ],
        format!(
            "{identical}/{} CSV files identical after rerun",
            names.len()
        ),
    )
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 9] = [
        (1, criterion_1, Some(Duration::from_secs(1))),
        (2, criterion_2, Some(Duration::from_secs(1))),
        (3, criterion_3, Some(Duration::from_secs(5))),
        (4, criterion_4, Some(Duration::from_secs(10))),
        (5, criterion_5, Some(Duration::from_secs(60))),
        (6, criterion_6, Some(Duration::from_secs(30))),
        (7, criterion_7, Some(Duration::from_secs(120))),
        (8, criterion_8, Some(Duration::from_secs(300))),
        (9, criterion_9, None),
    ];
    let mut fatal = false;
    for (id, run, budget) in criteria {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if let Some(budget) = budget {
            if elapsed > budget {
                outcome.pass = false;
                outcome
                    .detail
                    .push_str(&format!("; over budget of {}s", budget.as_secs()));
            }
        }
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id}: {verdict} ({:.2}s) {}",
            elapsed.as_secs_f64(),
            outcome.detail
        );
        if !outcome.pass && (strict || !KNOWN_RED.contains(&id)) {
            fatal = true;
        }
    }
    if fatal {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
