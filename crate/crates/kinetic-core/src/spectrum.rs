//! Grid, spectrum state, initial profiles, and integral functionals.
//!
//! The state is a cell-averaged 1-D density F(t,ω) on a uniform frequency
//! grid, plus a separate nonnegative condensate atom at ω = 0. Cell centers
//! sit at ω_i = (i+1/2)·h, which makes the resonance condition
//! ω_i + ω_j = ω_k + ω_l equivalent to the exact integer relation
//! i + j = k + l — the property the conservative collision sum relies on.
//!
//! The condensate is deliberately *not* cell 0: it models a measure at {0},
//! distinct from small-frequency continuum mass. Integral functionals treat
//! it as an atom (it contributes to mass and to test functionals via φ(0),
//! and nothing to energy or to ∫F·ln(ω+1)).
//!
//! All densities are in reduced normalization: physical 3-D integrals carry
//! an extra factor 4π from the angular average, which appears only in report
//! output, never in state.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform frequency grid with midpoint cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Number of cells (≥ 4).
    pub n_cells: usize,
    /// Cell width in frequency units (> 0).
    pub h_grid: f64,
}

impl Grid {
    /// Creates a grid covering [0, n_cells·h_grid).
    pub fn new(n_cells: usize, h_grid: f64) -> Result<Self> {
        let mut violations = Vec::new();
        if n_cells < 4 {
            violations.push(format!("grid needs at least 4 cells, got {n_cells}"));
        }
        if !(h_grid > 0.0) || !h_grid.is_finite() {
            violations.push(format!("cell width must be positive and finite, got {h_grid}"));
        }
        if violations.is_empty() {
            Ok(Grid { n_cells, h_grid })
        } else {
            Err(Error::Config(violations))
        }
    }

    /// Upper edge of the covered frequency interval.
    pub fn omega_max(&self) -> f64 {
        self.n_cells as f64 * self.h_grid
    }

    /// Center of cell i: (i+1/2)·h.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h_grid
    }

    /// All cell centers in order.
    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

/// A bump described by center, width and amplitude (Gaussian shape).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    /// Bump center frequency.
    pub center: f64,
    /// Gaussian standard deviation.
    pub width: f64,
    /// Peak density value.
    pub amplitude: f64,
}

/// Analytic initial profile for F(0, ω).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// Concentrated power profile: cumulative mass ∫₀^r F = coefficient·r^exponent
    /// for r < r0 (so F(ω) = coefficient·exponent·ω^{exponent−1} on (0, r0))
    /// and zero density beyond r0.
    PowerConcentrated {
        /// Cumulative-mass coefficient (> 0).
        coefficient: f64,
        /// Cumulative-mass exponent (> 0).
        exponent: f64,
        /// Support radius (0 < r0 < omega_max).
        r0: f64,
    },
    /// Single Gaussian bump.
    GaussianBump {
        /// Bump parameters.
        #[serde(flatten)]
        bump: BumpSpec,
    },
    /// Constant density.
    Flat {
        /// Density value (≥ 0).
        amplitude: f64,
    },
    /// Sum of two Gaussian bumps.
    TwoBump {
        /// First bump.
        first: BumpSpec,
        /// Second bump.
        second: BumpSpec,
    },
}

impl ProfileSpec {
    /// Validates profile parameters against a grid; returns all violations.
    pub fn validate(&self, grid: &Grid) -> Vec<String> {
        let mut v = Vec::new();
        match self {
            ProfileSpec::PowerConcentrated {
                coefficient,
                exponent,
                r0,
            } => {
                if !(*coefficient > 0.0) {
                    v.push(format!("profile coefficient must be > 0, got {coefficient}"));
                }
                if !(*exponent > 0.0) {
                    v.push(format!("profile exponent must be > 0, got {exponent}"));
                }
                if !(*r0 > 0.0 && *r0 < grid.omega_max()) {
                    v.push(format!(
                        "profile support radius must satisfy 0 < r0 < omega_max={}, got {r0}",
                        grid.omega_max()
                    ));
                }
            }
            ProfileSpec::GaussianBump { bump } => v.extend(bump_violations(bump, "bump")),
            ProfileSpec::Flat { amplitude } => {
                if !(*amplitude >= 0.0) {
                    v.push(format!("flat amplitude must be >= 0, got {amplitude}"));
                }
            }
            ProfileSpec::TwoBump { first, second } => {
                v.extend(bump_violations(first, "first bump"));
                v.extend(bump_violations(second, "second bump"));
            }
        }
        v
    }

    /// Pointwise density F(0, ω) of the analytic profile.
    fn density(&self, omega: f64) -> f64 {
        match self {
            ProfileSpec::PowerConcentrated {
                coefficient,
                exponent,
                r0,
            } => {
                if omega > 0.0 && omega < *r0 {
                    coefficient * exponent * omega.powf(exponent - 1.0)
                } else {
                    0.0
                }
            }
            ProfileSpec::GaussianBump { bump } => gaussian(bump, omega),
            ProfileSpec::Flat { amplitude } => *amplitude,
            ProfileSpec::TwoBump { first, second } => {
                gaussian(first, omega) + gaussian(second, omega)
            }
        }
    }

    /// Exact integral of the profile over [a, b] where a closed form exists
    /// (power, flat); `None` for bump shapes (handled by quadrature).
    fn integral_closed_form(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            ProfileSpec::PowerConcentrated {
                coefficient,
                exponent,
                r0,
            } => {
                let cum = |x: f64| coefficient * x.min(*r0).max(0.0).powf(*exponent);
                Some(cum(b) - cum(a))
            }
            ProfileSpec::Flat { amplitude } => Some(amplitude * (b - a)),
            _ => None,
        }
    }
}

fn bump_violations(b: &BumpSpec, label: &str) -> Vec<String> {
    let mut v = Vec::new();
    if !(b.width > 0.0) {
        v.push(format!("{label}: width must be > 0, got {}", b.width));
    }
    if !(b.amplitude >= 0.0) {
        v.push(format!("{label}: amplitude must be >= 0, got {}", b.amplitude));
    }
    if !(b.center >= 0.0) {
        v.push(format!("{label}: center must be >= 0, got {}", b.center));
    }
    v
}

fn gaussian(b: &BumpSpec, omega: f64) -> f64 {
    let z = (omega - b.center) / b.width;
    b.amplitude * (-0.5 * z * z).exp()
}

/// 15-point Gauss–Legendre nodes and weights on [-1, 1], used for per-cell
/// averages of smooth (bump) profiles. At cell scale this is exact to
/// round-off for any profile the configuration accepts.
const GL15_NODES: [f64; 15] = [
    -0.987992518020485,
    -0.937273392400706,
    -0.848206583410427,
    -0.724417731360170,
    -0.570972172608539,
    -0.394151347077563,
    -0.201194093997435,
    0.0,
    0.201194093997435,
    0.394151347077563,
    0.570972172608539,
    0.724417731360170,
    0.848206583410427,
    0.937273392400706,
    0.987992518020485,
];
const GL15_WEIGHTS: [f64; 15] = [
    0.030753241996117,
    0.070366047488108,
    0.107159220467172,
    0.139570677926154,
    0.166269205816994,
    0.186161000015562,
    0.198431485327112,
    0.202578241925561,
    0.198431485327112,
    0.186161000015562,
    0.166269205816994,
    0.139570677926154,
    0.107159220467172,
    0.070366047488108,
    0.030753241996117,
];

/// Cell-averaged spectrum state at one time.
///
/// Invariants: every cell value is finite and ≥ 0, and the condensate atom
/// is finite and ≥ 0. Enforced at construction; evolving code builds
/// candidate arrays first and only wraps accepted (nonnegative) states.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    f: Vec<f64>,
    condensate: f64,
    t: f64,
}

impl Spectrum {
    /// Wraps cell values into a validated state.
    pub fn new(grid: Grid, f: Vec<f64>, condensate: f64, t: f64) -> Result<Self> {
        if f.len() != grid.n_cells {
            return Err(Error::State(format!(
                "cell count mismatch: grid has {}, values have {}",
                grid.n_cells,
                f.len()
            )));
        }
        if let Some((i, &bad)) = f
            .iter()
            .enumerate()
            .find(|(_, &v)| !v.is_finite() || v < 0.0)
        {
            return Err(Error::State(format!(
                "cell {i} holds invalid density {bad} (must be finite and >= 0)"
            )));
        }
        if !condensate.is_finite() || condensate < 0.0 {
            return Err(Error::State(format!(
                "condensate must be finite and >= 0, got {condensate}"
            )));
        }
        if !t.is_finite() {
            return Err(Error::State(format!("time must be finite, got {t}")));
        }
        Ok(Spectrum {
            grid,
            f,
            condensate,
            t,
        })
    }

    /// Initializes from an analytic profile at t = 0.
    ///
    /// Cell values are exact averages of the profile over each cell: a
    /// closed-form antiderivative where one exists (power, flat), Gauss–
    /// Legendre quadrature at cell scale for bump shapes. The condensate
    /// starts at zero.
    pub fn init_from_profile(grid: Grid, spec: &ProfileSpec) -> Result<Self> {
        let violations = spec.validate(&grid);
        if !violations.is_empty() {
            return Err(Error::Config(violations));
        }
        let h = grid.h_grid;
        let f = (0..grid.n_cells)
            .map(|i| {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                let integral = spec.integral_closed_form(a, b).unwrap_or_else(|| {
                    let mid = 0.5 * (a + b);
                    let half = 0.5 * (b - a);
                    let mut acc = 0.0;
                    for (x, w) in GL15_NODES.iter().zip(GL15_WEIGHTS.iter()) {
                        acc += w * spec.density(mid + half * x);
                    }
                    acc * half
                });
                (integral / h).max(0.0)
            })
            .collect();
        Spectrum::new(grid, f, 0.0, 0.0)
    }

    /// The grid this state lives on.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Cell values.
    pub fn values(&self) -> &[f64] {
        &self.f
    }

    /// Condensate atom at ω = 0.
    pub fn condensate(&self) -> f64 {
        self.condensate
    }

    /// Simulation time of this snapshot.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Returns a copy at a different time stamp (used when recording).
    pub fn at_time(&self, t: f64) -> Spectrum {
        Spectrum { t, ..self.clone() }
    }

    /// Reduced mass: ∫F dω + condensate. Physical mass is 4π times this.
    pub fn mass(&self) -> f64 {
        self.f.iter().sum::<f64>() * self.grid.h_grid + self.condensate
    }

    /// Reduced energy: ∫F·ω dω. The condensate sits at ω = 0 and contributes
    /// nothing.
    pub fn energy(&self) -> f64 {
        self.f
            .iter()
            .enumerate()
            .map(|(i, &v)| v * self.grid.center(i))
            .sum::<f64>()
            * self.grid.h_grid
    }

    /// ∫_[a,b) F dω with piecewise-constant reconstruction: cells straddling
    /// a or b contribute pro-rata by overlap. The condensate is included iff
    /// a = 0 (the interval then contains the atom at {0}).
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a < b) {
            return Err(Error::Domain(format!(
                "interval must satisfy 0 <= a < b, got [{a}, {b})"
            )));
        }
        let h = self.grid.h_grid;
        if b > self.grid.omega_max() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "interval end {b} beyond omega_max={}",
                self.grid.omega_max()
            )));
        }
        let lo = (a / h).floor() as usize;
        let hi = (((b / h).ceil() as usize).max(lo + 1)).min(self.grid.n_cells);
        let mut acc = 0.0;
        for i in lo..hi {
            let cell_a = i as f64 * h;
            let cell_b = cell_a + h;
            let overlap = (b.min(cell_b) - a.max(cell_a)).max(0.0);
            acc += self.f[i] * overlap;
        }
        if a == 0.0 {
            acc += self.condensate;
        }
        Ok(acc)
    }

    /// Φ = ∫F·ln(ω+1) dω. The condensate contributes ln(1) = 0. This is the
    /// quantity the collision dynamics can only decrease.
    pub fn lyapunov_phi(&self) -> f64 {
        self.f
            .iter()
            .enumerate()
            .map(|(i, &v)| v * (self.grid.center(i) + 1.0).ln())
            .sum::<f64>()
            * self.grid.h_grid
    }

    /// ∫F·φ(ω) dω + condensate·φ(0), midpoint quadrature over cells.
    pub fn test_functional(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.f
            .iter()
            .enumerate()
            .map(|(i, &v)| v * phi(self.grid.center(i)))
            .sum::<f64>()
            * self.grid.h_grid
            + self.condensate * phi(0.0)
    }

    /// Replaces the condensate (diagnostic constructions only).
    pub fn with_condensate(&self, condensate: f64) -> Result<Spectrum> {
        Spectrum::new(self.grid, self.f.clone(), condensate, self.t)
    }
}
