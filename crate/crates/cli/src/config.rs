//! The experiment configuration document. Every field has a default, so an
//! empty JSON object is a complete configuration.

use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use solenoid_core::circle_map::BumpKind;
use solenoid_core::grid::{validate_grid_size, DEFAULT_GRID};
use solenoid_core::thermo::MAX_EXACT_LENGTH;
use solenoid_core::twisted::{MAX_PROFILE_LENGTH, MAX_ZETA_LENGTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Construct,
    Equilibrium,
    Gibbs,
    Deviations,
    Twisted,
    Nonconc,
    Expsum,
    Fourier,
    All,
}

impl Experiment {
    /// Order used by `all`.
    pub const PIPELINE: [Experiment; 8] = [
        Experiment::Construct,
        Experiment::Equilibrium,
        Experiment::Gibbs,
        Experiment::Deviations,
        Experiment::Twisted,
        Experiment::Nonconc,
        Experiment::Expsum,
        Experiment::Fourier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Construct => "construct",
            Experiment::Equilibrium => "equilibrium",
            Experiment::Gibbs => "gibbs",
            Experiment::Deviations => "deviations",
            Experiment::Twisted => "twisted",
            Experiment::Nonconc => "nonconc",
            Experiment::Expsum => "expsum",
            Experiment::Fourier => "fourier",
            Experiment::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialChoice {
    Mme,
    Srb,
    /// JSON array of `grid_m` node values.
    GridFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecConfig {
    pub n_max: u32,
    pub bump_kind: BumpKind,
}

impl Default for SpecConfig {
    fn default() -> Self {
        SpecConfig {
            n_max: solenoid_core::circle_map::DEFAULT_N_MAX,
            bump_kind: BumpKind::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructConfig {
    pub lattice_k_max: u32,
    pub bunching_grid: usize,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig {
            lattice_k_max: 20,
            bunching_grid: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig {
            tolerance: solenoid_core::thermo::DEFAULT_TOLERANCE,
            max_iterations: solenoid_core::thermo::DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsConfig {
    pub n_list: Vec<usize>,
    pub radii: Vec<f64>,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            n_list: vec![8, 10, 12],
            radii: vec![0.1, 0.03, 0.01, 0.003, 0.001],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviationsConfig {
    pub epsilon: f64,
    pub n_list: Vec<usize>,
    pub monte_carlo_samples: usize,
    /// Word length of the regular-word census.
    pub regular_n: usize,
    pub regular_epsilon: f64,
    pub window: Option<(f64, f64)>,
}

impl Default for DeviationsConfig {
    fn default() -> Self {
        DeviationsConfig {
            epsilon: 5e-5,
            n_list: (6..=14).collect(),
            monte_carlo_samples: 200_000,
            regular_n: 12,
            regular_epsilon: 0.05,
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwistedConfig {
    pub t: f64,
    pub steps: usize,
}

impl Default for TwistedConfig {
    fn default() -> Self {
        TwistedConfig {
            t: 100.0,
            steps: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonconcConfig {
    pub n: usize,
    pub sigma_list: Vec<f64>,
    /// Scale for the reported `c` in `ζ ∈ [e^{-cεn}, e^{cεn}]`.
    pub epsilon: f64,
}

impl Default for NonconcConfig {
    fn default() -> Self {
        NonconcConfig {
            n: 12,
            sigma_list: (0..13).map(|i| 1e-4 * 10f64.powf(i as f64 / 4.0)).collect(),
            epsilon: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpsumConfig {
    pub n: usize,
    pub k: usize,
    pub epsilon0: f64,
    /// Decades swept upward from `e^{ε₀n/2}`.
    pub decades: f64,
    pub eta_count: usize,
    pub exact_cap: usize,
    pub phase_tolerance: f64,
}

impl Default for ExpsumConfig {
    fn default() -> Self {
        ExpsumConfig {
            n: 12,
            k: 3,
            epsilon0: 0.05,
            decades: 2.0,
            eta_count: 12,
            exact_cap: 1 << 16,
            phase_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierConfig {
    /// `t_j = t_base · 2^j`, `j < t_count`.
    pub t_base: f64,
    pub t_count: usize,
    pub samples: usize,
    pub depth: u32,
    pub mu_frequencies: Vec<f64>,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig {
            t_base: 100.0,
            t_count: 11,
            samples: 1_000_000,
            depth: 20,
            mu_frequencies: vec![10.0, 100.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub spec: SpecConfig,
    pub potential: PotentialChoice,
    pub grid_m: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub construct: ConstructConfig,
    pub equilibrium: EquilibriumConfig,
    pub gibbs: GibbsConfig,
    pub deviations: DeviationsConfig,
    pub twisted: TwistedConfig,
    pub nonconc: NonconcConfig,
    pub expsum: ExpsumConfig,
    pub fourier: FourierConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::All,
            spec: SpecConfig::default(),
            potential: PotentialChoice::Mme,
            grid_m: DEFAULT_GRID,
            seed: 0,
            output_dir: PathBuf::from("out"),
            construct: ConstructConfig::default(),
            equilibrium: EquilibriumConfig::default(),
            gibbs: GibbsConfig::default(),
            deviations: DeviationsConfig::default(),
            twisted: TwistedConfig::default(),
            nonconc: NonconcConfig::default(),
            expsum: ExpsumConfig::default(),
            fourier: FourierConfig::default(),
        }
    }
}

fn increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).context("parsing configuration")?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading configuration {}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            (1..=30).contains(&self.spec.n_max),
            "spec.n_max must lie in 1..=30"
        );
        validate_grid_size(self.grid_m).context("grid_m")?;

        let c = &self.construct;
        ensure!(
            (2..=60).contains(&c.lattice_k_max),
            "construct.lattice_k_max must lie in 2..=60"
        );
        ensure!(
            c.bunching_grid >= 2,
            "construct.bunching_grid must be at least 2"
        );

        let e = &self.equilibrium;
        ensure!(e.tolerance > 0.0, "equilibrium.tolerance must be positive");
        ensure!(
            e.max_iterations > 0,
            "equilibrium.max_iterations must be positive"
        );

        let g = &self.gibbs;
        ensure!(!g.n_list.is_empty(), "gibbs.n_list must not be empty");
        ensure!(
            g.n_list
                .iter()
                .all(|&n| (1..=MAX_EXACT_LENGTH).contains(&n)),
            "gibbs.n_list entries must lie in 1..={MAX_EXACT_LENGTH}"
        );
        ensure!(
            g.radii.len() >= 2 && g.radii.windows(2).all(|w| w[1] < w[0]),
            "gibbs.radii must hold at least two decreasing values"
        );
        ensure!(
            g.radii.iter().all(|&r| r > 0.0 && r < 0.5),
            "gibbs.radii must lie in (0, 1/2)"
        );

        let d = &self.deviations;
        ensure!(
            d.epsilon > 0.0 && d.regular_epsilon > 0.0,
            "deviation epsilons must be positive"
        );
        ensure!(
            !d.n_list.is_empty() && d.n_list[0] > 0 && increasing(&d.n_list),
            "deviations.n_list must be increasing positive integers"
        );
        ensure!(
            *d.n_list.last().unwrap() <= 200,
            "deviations.n_list entries must not exceed 200"
        );
        if d.n_list.iter().any(|&n| n > MAX_EXACT_LENGTH) {
            ensure!(
                d.monte_carlo_samples > 0,
                "deviations.monte_carlo_samples must be positive"
            );
        }
        ensure!(
            (1..=MAX_EXACT_LENGTH).contains(&d.regular_n),
            "deviations.regular_n must lie in 1..={MAX_EXACT_LENGTH}"
        );
        if let Some((a, b)) = d.window {
            ensure!(
                0.0 <= a && a <= b && b <= 1.0,
                "deviations.window must satisfy 0 ≤ a ≤ b ≤ 1"
            );
        }

        let t = &self.twisted;
        ensure!(t.t.is_finite(), "twisted.t must be finite");
        ensure!(
            (1..=MAX_PROFILE_LENGTH).contains(&t.steps),
            "twisted.steps must lie in 1..={MAX_PROFILE_LENGTH}"
        );

        let n = &self.nonconc;
        ensure!(
            (1..=MAX_ZETA_LENGTH).contains(&n.n),
            "nonconc.n must lie in 1..={MAX_ZETA_LENGTH}"
        );
        ensure!(
            n.sigma_list.len() >= 2 && n.sigma_list[0] > 0.0 && increasing(&n.sigma_list),
            "nonconc.sigma_list must hold at least two increasing positive values"
        );
        ensure!(n.epsilon > 0.0, "nonconc.epsilon must be positive");

        let x = &self.expsum;
        ensure!(
            (1..=MAX_ZETA_LENGTH).contains(&x.n),
            "expsum.n must lie in 1..={MAX_ZETA_LENGTH}"
        );
        ensure!((1..=6).contains(&x.k), "expsum.k must lie in 1..=6");
        ensure!(x.epsilon0 > 0.0, "expsum.epsilon0 must be positive");
        ensure!(x.decades > 0.0, "expsum.decades must be positive");
        ensure!(x.eta_count >= 2, "expsum.eta_count must be at least 2");
        ensure!(
            x.exact_cap >= 1 && x.phase_tolerance > 0.0,
            "expsum fold controls must be positive"
        );

        let f = &self.fourier;
        ensure!(f.t_base > 0.0, "fourier.t_base must be positive");
        ensure!(f.t_count >= 8, "fourier.t_count must be at least 8");
        ensure!(
            2f64.powi(f.t_count as i32 - 1) >= 100.0,
            "fourier schedule must span at least two decades"
        );
        ensure!(
            f.samples >= solenoid_core::fourier::MIN_SAMPLES,
            "fourier.samples must be at least 1000"
        );
        ensure!(
            f.depth >= solenoid_core::fourier::MIN_DEPTH,
            "fourier.depth must be at least 20"
        );
        if let PotentialChoice::GridFile(path) = &self.potential {
            if path.as_os_str().is_empty() {
                bail!("potential grid file path is empty");
            }
        }
        Ok(())
    }
}
