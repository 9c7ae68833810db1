//! Declarative run configuration: a versioned TOML file with sectioned
//! blocks. Unknown keys are rejected everywhere; all values are given in
//! units J = 1, with an optional `model.j` applied as a pure rescaling on
//! output columns.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Config format version; must equal 1.
    pub version: u32,
    /// One of: saddle, descend, instanton, sweep-gamma, fit-zeta, kc,
    /// fit-mu, ed-run, ed-average, predict.
    pub command: String,
    /// Master seed for everything stochastic (ED disorder streams).
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub descent: DescentBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub kc: Option<KcBlock>,
    #[serde(default)]
    pub fit: Option<FitBlock>,
    #[serde(default)]
    pub ed: Option<EdBlock>,
    #[serde(default)]
    pub predict: Option<PredictBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    /// Measurement rate in units of J.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Alternative: gamma as a multiple of gamma_c = 1/18.
    #[serde(default)]
    pub gamma_ratio: Option<f64>,
    /// Physical coupling; outputs are rescaled by it (rates ×J, times /J).
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "default_n")]
    pub n: u32,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self { gamma: None, gamma_ratio: None, j: 1.0, n: 6 }
    }
}

fn one() -> f64 {
    1.0
}

fn default_n() -> u32 {
    6
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Total duration Jt; commands that know better may extend it
    /// (sweeps use max(t, 300, 20/sqrt|delta|)).
    #[serde(default = "default_t")]
    pub t: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self { dt: default_dt(), t: default_t() }
    }
}

fn default_dt() -> f64 {
    0.05
}

fn default_t() -> f64 {
    300.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DescentBlock {
    #[serde(default = "default_step")]
    pub step_size: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: u32,
}

impl Default for DescentBlock {
    fn default() -> Self {
        Self {
            step_size: default_step(),
            threshold: default_threshold(),
            grad_tol: default_grad_tol(),
            max_iters: default_max_iters(),
        }
    }
}

fn default_step() -> f64 {
    1e-2
}

fn default_threshold() -> f64 {
    1e-7
}

fn default_grad_tol() -> f64 {
    1e-7
}

fn default_max_iters() -> u32 {
    20_000
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default)]
    pub gammas: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma_ratios: Option<Vec<f64>>,
    /// Boundary condition for the `descend` command: "p2", "z2", or a
    /// subsystem fraction in [0, 1].
    #[serde(default)]
    pub boundary: Option<String>,
    /// Seed configuration for `descend`: "trivial", "broken", "instanton".
    #[serde(default)]
    pub start: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KcBlock {
    #[serde(default)]
    pub gammas: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma_ratios: Option<Vec<f64>>,
    /// k-grid spacing.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Explicit grid bounds; when absent the scan window is found
    /// automatically by bracketing the branch exchange.
    #[serde(default)]
    pub k_min: Option<f64>,
    #[serde(default)]
    pub k_max: Option<f64>,
}

fn default_resolution() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    /// CSV produced by sweep-gamma (for fit-zeta) or kc (for fit-mu).
    pub input: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EdBlock {
    #[serde(default = "default_ed_n")]
    pub n: u32,
    #[serde(default = "default_ed_dt")]
    pub dt: f64,
    #[serde(default = "default_ed_t")]
    pub total_time: f64,
    #[serde(default = "default_realizations")]
    pub realizations: u32,
    #[serde(default = "default_krylov")]
    pub krylov_dim: usize,
    /// Output times; 100 evenly spaced when empty.
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub sample_count: Option<usize>,
    /// Subsystem fractions to record alongside the full system.
    #[serde(default)]
    pub fractions: Vec<f64>,
    /// For ed-average: the records file written by ed-run.
    #[serde(default)]
    pub input: Option<String>,
}

impl Default for EdBlock {
    fn default() -> Self {
        Self {
            n: default_ed_n(),
            dt: default_ed_dt(),
            total_time: default_ed_t(),
            realizations: default_realizations(),
            krylov_dim: default_krylov(),
            sample_times: Vec::new(),
            sample_count: None,
            fractions: Vec::new(),
            input: None,
        }
    }
}

fn default_ed_n() -> u32 {
    6
}

fn default_ed_dt() -> f64 {
    0.01
}

fn default_ed_t() -> f64 {
    50.0
}

fn default_realizations() -> u32 {
    20
}

fn default_krylov() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PredictBlock {
    #[serde(default)]
    pub gammas: Option<Vec<f64>>,
    #[serde(default)]
    pub gamma_ratios: Option<Vec<f64>>,
    /// Times for the dilute-gas purity curve.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Instanton action for the dilute-gas curve; the near-critical oracle
    /// is used when absent.
    #[serde(default)]
    pub i_star: Option<f64>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "one")]
    pub a: f64,
    /// Durations for the descent-based entropy series (runs the optimizer
    /// once per time; expensive).
    #[serde(default)]
    pub entropy_times: Vec<f64>,
    #[serde(default = "one")]
    pub t0_eff: f64,
}

pub const COMMANDS: &[&str] = &[
    "saddle",
    "descend",
    "instanton",
    "sweep-gamma",
    "fit-zeta",
    "kc",
    "fit-mu",
    "ed-run",
    "ed-average",
    "predict",
];

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// Collect every violated invariant, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.version != CONFIG_VERSION {
            problems.push(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if !COMMANDS.contains(&self.command.as_str()) {
            problems.push(format!(
                "unknown command {:?} (expected one of {})",
                self.command,
                COMMANDS.join(", ")
            ));
        }
        if !(self.model.j > 0.0) {
            problems.push(format!("model.j must be > 0, got {}", self.model.j));
        }
        if self.model.gamma.is_some() && self.model.gamma_ratio.is_some() {
            problems.push("give model.gamma or model.gamma_ratio, not both".into());
        }
        if let Some(g) = self.model.gamma {
            if !(g >= 0.0) {
                problems.push(format!("model.gamma must be >= 0, got {g}"));
            }
        }
        if !(self.grid.dt > 0.0) {
            problems.push(format!("grid.dt must be > 0, got {}", self.grid.dt));
        }
        if !(self.grid.t > 0.0) {
            problems.push(format!("grid.t must be > 0, got {}", self.grid.t));
        }
        if !(self.descent.threshold > 0.0) {
            problems.push("descent.threshold must be > 0".into());
        }
        if self.descent.max_iters == 0 {
            problems.push("descent.max_iters must be >= 1".into());
        }
        if let Some(ed) = &self.ed {
            if ed.n < 1 || 2 * ed.n > 14 {
                problems.push(format!("ed.n = {} outside 1..=7 (2N <= 14)", ed.n));
            }
            if !(ed.dt > 0.0) {
                problems.push("ed.dt must be > 0".into());
            }
            if !(ed.total_time > 0.0) {
                problems.push("ed.total_time must be > 0".into());
            }
            if ed.realizations < 1 {
                problems.push("ed.realizations must be >= 1".into());
            }
            if ed.krylov_dim < 2 {
                problems.push("ed.krylov_dim must be >= 2".into());
            }
            for &f in &ed.fractions {
                if !(0.0..=1.0).contains(&f) {
                    problems.push(format!("ed.fractions entry {f} outside [0, 1]"));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            bail!("invalid config:\n  - {}", problems.join("\n  - "));
        }
    }

    /// Single gamma in units J = 1.
    pub fn gamma(&self) -> Result<f64> {
        match (self.model.gamma, self.model.gamma_ratio) {
            (Some(g), None) => Ok(g),
            (None, Some(r)) => Ok(r * mipt_core::GAMMA_C),
            (None, None) => bail!("model.gamma (or model.gamma_ratio) is required"),
            _ => unreachable!("validated"),
        }
    }

    /// Gamma list for sweep-style commands, in units J = 1.
    pub fn gamma_list(
        &self,
        gammas: &Option<Vec<f64>>,
        ratios: &Option<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        match (gammas, ratios) {
            (Some(g), None) => Ok(g.clone()),
            (None, Some(r)) => Ok(r.iter().map(|x| x * mipt_core::GAMMA_C).collect()),
            (None, None) => bail!("a gamma list (gammas or gamma_ratios) is required"),
            _ => bail!("give gammas or gamma_ratios, not both"),
        }
    }

    pub fn descent_settings(&self) -> mipt_core::DescentSettings {
        mipt_core::DescentSettings {
            step_size: self.descent.step_size,
            threshold: self.descent.threshold,
            grad_tol: self.descent.grad_tol,
            max_iters: self.descent.max_iters,
            ..Default::default()
        }
    }
}
