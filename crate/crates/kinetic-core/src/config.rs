//! Run configuration: one structured file describes a full experiment.
//!
//! A config is a TOML document with blocks for the dispersion relation,
//! the frequency grid, the collision kernel, the initial profile, step
//! control, the optional online condensation detector, and the diagnostic
//! parameters. Parsing applies every owning module's parameter checks and
//! reports **all** violations at once, each naming the definition whose
//! range it enforces. Unknown keys are rejected everywhere.

use crate::collision::{build_kernel_table, KernelStorage, KernelTable};
use crate::diagnostics::{subdomain_count, DecompositionSpec, GrowthParams};
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::integrator::{DetectorParams, RunSetup, StepControl};
use crate::spectrum::{Grid, ProfileSpec, Spectrum};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Dispersion block: analytic power law or tabulated samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DispersionConfig {
    /// ω(r) = c·r^alpha.
    PowerLaw {
        /// Dispersion exponent α ∈ (1, 2].
        alpha: f64,
        /// Coefficient C > 0.
        c: f64,
    },
    /// Monotone convex samples; structural constants default to the
    /// power-law values derived from `alpha` and `c_omega`.
    Table {
        /// Lower power-bound exponent α.
        alpha: f64,
        /// Lower power-bound constant C_ω.
        c_omega: f64,
        /// Upper power-bound exponent α' (default α).
        alpha_prime: Option<f64>,
        /// Upper power-bound constant C'_ω (default C_ω).
        c_omega_prime: Option<f64>,
        /// Lower weight-bound exponent β (default (2−α)/α).
        beta: Option<f64>,
        /// Lower weight-bound constant Č_℧ (default C_ω^{−(β+1)}/α).
        c_mho_check: Option<f64>,
        /// Upper weight-bound constant C¹_℧ (default 1/(α·C_ω)).
        c_mho_1: Option<f64>,
        /// Upper weight-bound exponent ι (default 2−α).
        iota: Option<f64>,
        /// Strictly increasing wavenumber knots starting at 0.
        r: Vec<f64>,
        /// Frequency samples at the knots, ω(0) = 0.
        omega: Vec<f64>,
    },
}

impl DispersionConfig {
    /// Builds the dispersion model.
    pub fn build(&self) -> Result<DispersionModel> {
        match self {
            DispersionConfig::PowerLaw { alpha, c } => DispersionModel::power_law(*alpha, *c),
            DispersionConfig::Table {
                alpha,
                c_omega,
                alpha_prime,
                c_omega_prime,
                beta,
                c_mho_check,
                c_mho_1,
                iota,
                r,
                omega,
            } => {
                let beta_v = beta.unwrap_or((2.0 - alpha) / alpha);
                DispersionModel::tabulated(
                    *alpha,
                    *c_omega,
                    alpha_prime.unwrap_or(*alpha),
                    c_omega_prime.unwrap_or(*c_omega),
                    beta_v,
                    c_mho_check.unwrap_or(c_omega.powf(-(beta_v + 1.0)) / alpha),
                    c_mho_1.unwrap_or(1.0 / (alpha * c_omega)),
                    iota.unwrap_or(2.0 - alpha),
                    r.clone(),
                    omega.clone(),
                )
            }
        }
    }
}

/// Frequency-grid block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Number of cells.
    pub n_cells: usize,
    /// Domain upper edge; the cell width is omega_max / n_cells.
    pub omega_max: f64,
}

impl GridConfig {
    /// Builds the grid.
    pub fn build(&self) -> Result<Grid> {
        if !(self.omega_max > 0.0) || !self.omega_max.is_finite() {
            return Err(Error::Config(vec![format!(
                "omega_max must be positive and finite, got {}",
                self.omega_max
            )]));
        }
        Grid::new(self.n_cells, self.omega_max / self.n_cells as f64)
    }
}

fn default_scale() -> f64 {
    1.0
}

fn default_storage() -> KernelStorage {
    KernelStorage::Auto
}

/// Collision-kernel block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionConfig {
    /// Interaction-strength prefactor C₁ (multiplies the whole operator).
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Quadruple-weight storage policy.
    #[serde(default = "default_storage")]
    pub storage: KernelStorage,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        CollisionConfig {
            scale: default_scale(),
            storage: default_storage(),
        }
    }
}

/// Diagnostic parameters: spread sets, growth sets, onset scaling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Spread threshold ν for the overlapping-window set (0 < ν < 1/10).
    pub nu: f64,
    /// Spread threshold θ for the sliding-window set (0 < θ < 1/100).
    pub theta: f64,
    /// Sliding-window count 𝒩 (at least 1000).
    pub sliding_windows: usize,
    /// Mass-floor factor m (at least 2); the sliding windows cover [0, m·ℜ).
    pub m: usize,
    /// Mass-floor window ℜ.
    pub r_frak: f64,
    /// Decomposition upper bound R for the overlapping-window set.
    pub r_upper: f64,
    /// Decomposition subdomain size h.
    pub h_sub: f64,
    /// Growth-window exponent ε.
    pub epsilon: f64,
    /// Concentration exponent ς.
    pub varsigma: f64,
    /// Growth threshold constant C_F.
    pub c_f: f64,
    /// Initial concentration scale index N₀ (onset-bound reporting).
    pub n0: u32,
    /// Dyadic scale range [lo, hi] recorded with every sample and scanned
    /// by the growth-set analysis.
    pub n_range: (u32, u32),
}

fn default_seed() -> u64 {
    0
}

fn default_output_dir() -> String {
    "out".to_string()
}

/// One experiment: every block plus the seed and output location.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Dispersion relation.
    pub dispersion: DispersionConfig,
    /// Frequency grid.
    pub grid: GridConfig,
    /// Collision kernel options.
    #[serde(default)]
    pub collision: CollisionConfig,
    /// Initial profile.
    pub profile: ProfileSpec,
    /// Time stepping.
    pub step_control: StepControl,
    /// Online condensation detector (absent = run to the horizon).
    #[serde(default)]
    pub detector: Option<DetectorParams>,
    /// Diagnostic parameters.
    pub diagnostics: DiagnosticsConfig,
    /// Seed for randomized verification suites.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory for the run subcommand.
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

/// Unpacks an error into its violation list (config errors carry many).
fn flatten(e: Error) -> Vec<String> {
    match e {
        Error::Config(list) => list,
        other => vec![other.to_string()],
    }
}

impl SimulationConfig {
    /// Collects every parameter violation across all blocks.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let model = match self.dispersion.build() {
            Ok(m) => Some(m),
            Err(e) => {
                v.extend(flatten(e));
                None
            }
        };
        let grid = match self.grid.build() {
            Ok(g) => Some(g),
            Err(e) => {
                v.extend(flatten(e));
                None
            }
        };
        if !(self.collision.scale > 0.0) || !self.collision.scale.is_finite() {
            v.push(format!(
                "collision scale must be positive and finite, got {}",
                self.collision.scale
            ));
        }
        if let Some(g) = grid {
            v.extend(self.profile.validate(&g));
            if let Some(d) = &self.detector {
                v.extend(d.violations(g.omega_max(), g.h_grid));
            }
        }
        v.extend(self.step_control.violations());
        v.extend(self.diagnostics_violations(model.as_ref(), grid.as_ref()));
        v
    }

    fn diagnostics_violations(
        &self,
        model: Option<&DispersionModel>,
        grid: Option<&Grid>,
    ) -> Vec<String> {
        let d = &self.diagnostics;
        let mut v = Vec::new();
        if !(d.nu > 0.0 && d.nu < 0.1) {
            v.push(format!(
                "nu must satisfy 0 < nu < 1/10 (overlapping-window spread definition), got {}",
                d.nu
            ));
        }
        if !(d.theta > 0.0 && d.theta < 0.01) {
            v.push(format!(
                "theta must satisfy 0 < theta < 1/100 (sliding-window spread definition), got {}",
                d.theta
            ));
        }
        if d.sliding_windows < 1000 {
            v.push(format!(
                "sliding_windows must be at least 1000 (sliding-window spread definition), got {}",
                d.sliding_windows
            ));
        }
        if d.m < 2 {
            v.push(format!("m must be at least 2 (mass-floor factor), got {}", d.m));
        }
        if !(d.r_frak > 0.0) {
            v.push(format!("r_frak must be positive, got {}", d.r_frak));
        }
        match subdomain_count(d.r_upper, d.h_sub) {
            Ok(n) if n < 4 => v.push(format!(
                "decomposition of [0, {}) with h_sub={} has only {n} windows; at least 4 required",
                d.r_upper, d.h_sub
            )),
            Ok(_) => {}
            Err(e) => v.extend(flatten(e)),
        }
        if let Some(g) = grid {
            let wmax = g.omega_max();
            if d.r_upper > wmax * (1.0 + 1e-12) {
                v.push(format!(
                    "decomposition bound r_upper={} exceeds the grid domain [0, {wmax})",
                    d.r_upper
                ));
            }
            if d.m >= 2 && d.r_frak > 0.0 && d.m as f64 * d.r_frak > wmax * (1.0 + 1e-12) {
                v.push(format!(
                    "sliding-window domain m*r_frak={} exceeds the grid domain [0, {wmax})",
                    d.m as f64 * d.r_frak
                ));
            }
            let (lo, hi) = d.n_range;
            if lo > hi {
                v.push(format!("n_range is empty: lo={lo} > hi={hi}"));
            }
            if 2f64.powi(-(lo as i32)) > wmax * (1.0 + 1e-12) {
                v.push(format!(
                    "coarsest recorded dyadic window 2^-{lo} exceeds omega_max={wmax}"
                ));
            }
            if 2f64.powi(-(hi as i32)) < g.h_grid * (1.0 - 1e-12) {
                v.push(format!(
                    "finest recorded dyadic window 2^-{hi} is below the grid resolution h={}",
                    g.h_grid
                ));
            }
            if 2f64.powi(-(d.n0 as i32)) > wmax * (1.0 + 1e-12) {
                v.push(format!(
                    "initial concentration window 2^-{} exceeds omega_max={wmax}",
                    d.n0
                ));
            }
        }
        if let Some(m) = model {
            v.extend(GrowthParams::for_model(m, d.epsilon, d.varsigma, d.c_f).violations());
        }
        v
    }

    /// Builds the dispersion model (assumes `violations()` is empty).
    pub fn model(&self) -> Result<DispersionModel> {
        self.dispersion.build()
    }

    /// Builds the grid.
    pub fn grid(&self) -> Result<Grid> {
        self.grid.build()
    }

    /// Builds the initial spectrum at t = 0.
    pub fn initial_spectrum(&self) -> Result<Spectrum> {
        Spectrum::init_from_profile(self.grid()?, &self.profile)
    }

    /// Builds the collision kernel table.
    pub fn kernel_table(&self) -> Result<KernelTable> {
        build_kernel_table(
            self.grid()?,
            &self.model()?,
            self.collision.storage,
            self.collision.scale,
        )
    }

    /// Assembles the integrator setup.
    pub fn run_setup(&self) -> RunSetup {
        RunSetup {
            control: self.step_control.clone(),
            detector: self.detector.clone(),
            dyadic_n: self.diagnostics.n_range,
        }
    }

    /// Growth-set parameters for the configured dispersion model.
    pub fn growth_params(&self) -> Result<GrowthParams> {
        Ok(GrowthParams::for_model(
            &self.model()?,
            self.diagnostics.epsilon,
            self.diagnostics.varsigma,
            self.diagnostics.c_f,
        ))
    }

    /// The overlapping-window decomposition of [0, r_upper).
    pub fn decomposition(&self) -> Result<DecompositionSpec> {
        DecompositionSpec::new(self.diagnostics.r_upper, self.diagnostics.h_sub)
    }
}

/// Parses a TOML config string and validates every block, reporting all
/// violations at once.
pub fn parse_config_str(text: &str) -> Result<SimulationConfig> {
    let config: SimulationConfig =
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(violations))
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<SimulationConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_config_str(&text)
}
