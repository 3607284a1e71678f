//! Experiment orchestration: resolves a configuration into core calls and
//! writes CSV/JSON artifacts plus a manifest into the output directory.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use solenoid_core::circle_map::{
    dyadic_radius, lyapunov_spectrum, verify_lattice, verify_lattice_with_radius, PerturbationSpec,
};
use solenoid_core::fourier::{
    attracted_samples, dyadic_schedule, mu_hat_from_points, nu_hat, nu_hat_decay, required_grid,
    write_decay_csv, Phase,
};
use solenoid_core::grid::GridFunction;
use solenoid_core::solenoid::{bunching_margin, orbit_rows, periodic_orbit, write_points_csv};
use solenoid_core::thermo::{
    gibbs_ratio_stats, large_deviation_profile, regular_words, solve_equilibrium_with,
    upper_regularity_exponent, write_profile_csv, EquilibriumData, MonteCarlo, Potential,
    SolverOptions,
};
use solenoid_core::twisted::{
    eta_sweep, nonconcentration_report, profile_log_slope, random_contexts, twisted_norm_profile,
    write_concentration_csv, write_exp_sum_csv, zeta_table, ExpSumOptions,
};

use crate::config::{Experiment, ExperimentConfig, PotentialChoice};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ExperimentConfig,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).context("parsing manifest")
    }
}

struct Session<'a> {
    config: &'a ExperimentConfig,
    out: PathBuf,
    spec: PerturbationSpec,
    equilibrium: Option<EquilibriumData>,
    files: Vec<String>,
}

impl Session<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        Ok(())
    }

    fn potential(&self, m: usize) -> Result<Potential> {
        Ok(match &self.config.potential {
            PotentialChoice::Mme => Potential::Mme,
            PotentialChoice::Srb => Potential::Srb,
            PotentialChoice::GridFile(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading potential grid {}", path.display()))?;
                let values: Vec<f64> =
                    serde_json::from_str(&text).context("parsing potential grid")?;
                let source = GridFunction::new(values)?;
                if source.len() == m {
                    Potential::Grid(source)
                } else {
                    Potential::Grid(GridFunction::from_fn(m, |x| source.eval(x))?)
                }
            }
        })
    }

    fn solve(&self, m: usize) -> Result<EquilibriumData> {
        let options = SolverOptions {
            tolerance: self.config.equilibrium.tolerance,
            max_iterations: self.config.equilibrium.max_iterations,
        };
        Ok(solve_equilibrium_with(
            &self.spec,
            &self.potential(m)?,
            m,
            options,
        )?)
    }

    fn equilibrium(&mut self) -> Result<&EquilibriumData> {
        if self.equilibrium.is_none() {
            self.equilibrium = Some(self.solve(self.config.grid_m)?);
        }
        Ok(self.equilibrium.as_ref().unwrap())
    }

    fn run(&mut self, experiment: Experiment) -> Result<()> {
        match experiment {
            Experiment::Construct => self.construct(),
            Experiment::Equilibrium => self.equilibrium_report(),
            Experiment::Gibbs => self.gibbs(),
            Experiment::Deviations => self.deviations(),
            Experiment::Twisted => self.twisted(),
            Experiment::Nonconc => self.nonconc(),
            Experiment::Expsum => self.expsum(),
            Experiment::Fourier => self.fourier(),
            Experiment::All => {
                for stage in Experiment::PIPELINE {
                    self.run(stage)
                        .with_context(|| format!("stage {}", stage.name()))?;
                }
                Ok(())
            }
        }
    }

    fn construct(&mut self) -> Result<()> {
        let c = &self.config.construct;
        let lattice = verify_lattice(c.lattice_k_max)?;
        let mutated = verify_lattice_with_radius(c.lattice_k_max, dyadic_radius)?;
        let spectrum = lyapunov_spectrum(&self.spec)?;
        let margin = bunching_margin(&self.spec, c.bunching_grid)?;
        let betas: Vec<_> = self
            .spec
            .betas()
            .iter()
            .map(|b| json!({"order": b.order, "num": b.numerator.to_string(), "den_exp": b.den_exp()}))
            .collect();
        let alphas: Vec<_> = self
            .spec
            .alpha_text()
            .iter()
            .enumerate()
            .map(|(i, a)| json!({"order": i + 2, "value": a}))
            .collect();
        let report = json!({
            "spec": &self.spec,
            "betas": betas,
            "alphas": alphas,
            "lattice": &lattice,
            "lattice_passed": lattice.passed(),
            "mutated_radius_lattice": &mutated,
            "mutated_radius_passed": mutated.passed(),
            "lyapunov_spectrum": &spectrum,
            "exponents_distinct": spectrum.distinct(),
            "bunching_margin": margin,
            "derivative_bound": self.spec.derivative_bound(),
        });
        self.write_json("coefficients.json", &report)?;
        for n in 1..=self.spec.n_max() {
            let orbit = periodic_orbit(&self.spec, n)?;
            let rows = orbit_rows(&self.spec, &orbit);
            let w = self.create(&format!("orbit_{n}.csv"))?;
            write_points_csv(w, rows)?;
        }
        Ok(())
    }

    fn equilibrium_report(&mut self) -> Result<()> {
        let eq = self.equilibrium()?;
        let (sup, l1) = eq.normalization_residuals();
        let mut value = serde_json::to_value(eq.to_json())?;
        value["normalization_sup"] = json!(sup.to_string());
        value["adjoint_l1"] = json!(l1.to_string());
        self.write_json("equilibrium.json", &value)
    }

    fn gibbs(&mut self) -> Result<()> {
        let cfg = self.config.gibbs.clone();
        let eq = self.equilibrium()?;
        let stats = cfg
            .n_list
            .iter()
            .map(|&n| gibbs_ratio_stats(eq, n))
            .collect::<solenoid_core::Result<Vec<_>>>()?;
        let regularity = upper_regularity_exponent(eq, &cfg.radii)?;
        {
            let w = self.create("gibbs.csv")?;
            let mut csv = csv_writer(w);
            csv.write_record(["n", "ratio_min", "ratio_max", "total_mass"])?;
            for s in &stats {
                csv.write_record([
                    s.n.to_string(),
                    s.ratio_min.to_string(),
                    s.ratio_max.to_string(),
                    s.total_mass.to_string(),
                ])?;
            }
            csv.flush()?;
        }
        {
            let w = self.create("regularity.csv")?;
            let mut csv = csv_writer(w);
            csv.write_record(["radius", "sup_mass"])?;
            for (r, m) in regularity.radii.iter().zip(&regularity.sup_masses) {
                csv.write_record([r.to_string(), m.to_string()])?;
            }
            csv.flush()?;
        }
        let summary = json!({"gibbs": stats, "regularity_slope": regularity.slope});
        self.write_json("gibbs.json", &summary)
    }

    fn deviations(&mut self) -> Result<()> {
        let cfg = self.config.deviations.clone();
        let seed = self.config.seed;
        let eq = self.equilibrium()?;
        let mc = MonteCarlo {
            samples: cfg.monte_carlo_samples,
            seed,
        };
        let profile = large_deviation_profile(eq, cfg.epsilon, &cfg.n_list, mc)?;
        let regular = regular_words(eq, cfg.regular_n, cfg.regular_epsilon, cfg.window)?;
        write_profile_csv(self.create("profile.csv")?, &profile)?;
        let summary = json!({
            "epsilon": profile.epsilon,
            "fitted_rate": profile.fitted_rate,
            "non_increasing": profile.is_non_increasing(),
            "regular_words": {
                "n": regular.n,
                "epsilon": regular.epsilon,
                "cardinality": regular.cardinality(),
                "reference": regular.reference,
                "beta_needed": regular.beta_needed,
            },
        });
        self.write_json("deviations.json", &summary)
    }

    fn twisted(&mut self) -> Result<()> {
        let cfg = self.config.twisted.clone();
        let eq = self.equilibrium()?;
        let norms = twisted_norm_profile(eq, cfg.t, cfg.steps)?;
        let slope = profile_log_slope(&norms)?;
        solenoid_core::twisted::write_profile_csv(self.create("twisted_profile.csv")?, &norms)?;
        self.write_json(
            "twisted.json",
            &json!({"t": cfg.t, "steps": cfg.steps, "log_slope": slope}),
        )
    }

    fn nonconc(&mut self) -> Result<()> {
        let cfg = self.config.nonconc.clone();
        let seed = self.config.seed;
        let eq = self.equilibrium()?;
        let context = random_contexts(cfg.n, 1, seed).remove(0);
        let table = zeta_table(eq, &context, cfg.n)?;
        let report = nonconcentration_report(&table, &cfg.sigma_list)?;
        write_concentration_csv(self.create("nonconc.csv")?, &report)?;
        let summary = json!({
            "context": table.context,
            "N": report.size,
            "gamma_emp": report.gamma_emp,
            "bound_holds": report.bound_holds,
            "spread": table.spread(),
            "c_needed": table.c_needed(cfg.epsilon),
            "lambda_used": table.lambda_used,
        });
        self.write_json("nonconc.json", &summary)
    }

    fn expsum(&mut self) -> Result<()> {
        let cfg = self.config.expsum.clone();
        let seed = self.config.seed;
        let eq = self.equilibrium()?;
        let tables = random_contexts(cfg.n, cfg.k, seed)
            .iter()
            .map(|c| zeta_table(eq, c, cfg.n))
            .collect::<solenoid_core::Result<Vec<_>>>()?;
        let n = cfg.n as f64;
        let j_lo = (cfg.epsilon0 * n / 2.0).exp();
        let j_hi = (2.0 * cfg.epsilon0 * n).exp();
        let options = ExpSumOptions {
            exact_cap: cfg.exact_cap,
            phase_tolerance: cfg.phase_tolerance,
        };
        let sweep = eta_sweep(
            &tables,
            j_lo,
            j_lo * 10f64.powf(cfg.decades),
            cfg.eta_count,
            options,
        )?;
        write_exp_sum_csv(self.create("expsum.csv")?, &sweep)?;
        let summary = json!({
            "k": cfg.k,
            "n": cfg.n,
            "epsilon0": cfg.epsilon0,
            "J_n": [j_lo, j_hi],
            "slope": sweep.slope,
        });
        self.write_json("expsum.json", &summary)
    }

    fn fourier(&mut self) -> Result<()> {
        let cfg = self.config.fourier.clone();
        let seed = self.config.seed;
        let schedule = dyadic_schedule(cfg.t_base, cfg.t_count);
        let t_max = schedule
            .iter()
            .chain(&cfg.mu_frequencies)
            .fold(0.0f64, |a, &b| a.max(b.abs()));
        let m = required_grid(t_max)
            .next_power_of_two()
            .max(self.config.grid_m);
        let owned = if m == self.config.grid_m {
            self.equilibrium()?;
            None
        } else {
            Some(self.solve(m)?)
        };
        let eq = match &owned {
            Some(eq) => eq,
            None => self.equilibrium.as_ref().expect("solved above"),
        };
        let series = nu_hat_decay(eq, &schedule, &Phase::Identity)?;
        let points = attracted_samples(&self.spec, eq, cfg.samples, cfg.depth, seed)?;
        let cross: Vec<_> = cfg
            .mu_frequencies
            .iter()
            .map(|&t| {
                let mu = mu_hat_from_points(&points, [t, 0.0, 0.0]);
                let nu = nu_hat(eq, t, &Phase::Identity)?;
                Ok((t, mu, nu.value))
            })
            .collect::<solenoid_core::Result<Vec<_>>>()?;
        let mut summary = serde_json::to_value(series.summary())?;
        summary["grid_m"] = json!(m);
        summary["mu_hat"] = json!(cross
            .iter()
            .map(|(t, mu, nu)| json!({
                "t": t,
                "mu": [mu.value.re, mu.value.im],
                "stderr": mu.stderr,
                "nu": [nu.re, nu.im],
                "difference_in_stderr": (mu.value - nu).norm() / mu.stderr,
            }))
            .collect::<Vec<_>>());
        write_decay_csv(self.create("decay.csv")?, &series)?;
        {
            let w = self.create("mu_hat.csv")?;
            let mut csv = csv_writer(w);
            csv.write_record(["frequency", "mu_re", "mu_im", "stderr", "nu_re", "nu_im"])?;
            for (t, mu, nu) in &cross {
                csv.write_record([
                    t.to_string(),
                    mu.value.re.to_string(),
                    mu.value.im.to_string(),
                    mu.stderr.to_string(),
                    nu.re.to_string(),
                    nu.im.to_string(),
                ])?;
            }
            csv.flush()?;
        }
        self.write_json("summary.json", &summary)
    }
}

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

/// Runs the configured experiment and writes its manifest last.
pub fn run(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;
    let spec = PerturbationSpec::explicit(config.spec.n_max, config.spec.bump_kind);
    let mut session = Session {
        config,
        out: config.output_dir.clone(),
        spec,
        equilibrium: None,
        files: Vec::new(),
    };
    session.run(config.experiment)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files: session.files,
    };
    let path = config.output_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
