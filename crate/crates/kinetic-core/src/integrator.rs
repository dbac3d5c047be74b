//! Positivity-preserving time integration and condensation detection.
//!
//! The spectrum advances with the explicit three-stage strong-stability-
//! preserving Runge–Kutta scheme (SSP-RK3). Each stage is a convex
//! combination of forward-Euler substeps, so enforcing positivity at every
//! stage and shrinking the step on violation preserves the invariant
//! without ever clipping — conservation is never silently repaired.
//!
//! A run records snapshots plus scalar diagnostics (mass, energy, the
//! Lyapunov functional Φ = ∫F·ln(ω+1), the dissipation functional D, and
//! the dyadic-window masses ∫_[0, 2^{−n}) F) at a fixed step cadence. The
//! condensation detector declares onset at the first recorded time where
//! the dyadic concentration inequality
//!
//! ```text
//! ∫_[0, 2^{−n}) F(t) ≥ C_F · 2^{−n·ς}    for every n in the checked range
//! ```
//!
//! holds simultaneously across scales — mass piling up at the origin
//! through every dyadic window at once. Detection terminates the run:
//! post-onset dynamics are outside the model's validity.

use crate::collision::{collision_rhs, dissipation_d, KernelTable};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use serde::{Deserialize, Serialize};

/// Hard cap on total attempted steps per run; a guard against configs whose
/// dt floor is absurdly small relative to the horizon.
const MAX_STEPS: u64 = 20_000_000;

/// Consecutive accepted steps at a reduced dt before the step size is grown
/// back by one safety factor (capped at dt_init).
const REGROW_AFTER: u32 = 8;

fn default_cons_tol() -> f64 {
    1e-10
}

/// Time-stepping control parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepControl {
    /// Initial (and maximal) step size.
    pub dt_init: f64,
    /// Floor below which persistent positivity failure aborts the run.
    pub dt_min: f64,
    /// Step-shrink factor on positivity rejection, in (0, 1).
    pub safety: f64,
    /// Integration horizon.
    pub t_end: f64,
    /// Record a snapshot every this many accepted steps.
    pub record_every: usize,
    /// Per-step relative conservation drift that triggers a hard error.
    #[serde(default = "default_cons_tol")]
    pub cons_tol: f64,
}

impl StepControl {
    /// Collects every parameter violation.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.dt_init > 0.0) || !self.dt_init.is_finite() {
            v.push(format!("dt_init must be positive and finite, got {}", self.dt_init));
        }
        if !(self.dt_min > 0.0) || self.dt_min >= self.dt_init {
            v.push(format!(
                "dt_min must satisfy 0 < dt_min < dt_init, got dt_min={}, dt_init={}",
                self.dt_min, self.dt_init
            ));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            v.push(format!("safety must lie in (0, 1), got {}", self.safety));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            v.push(format!("t_end must be nonnegative and finite, got {}", self.t_end));
        }
        if self.record_every == 0 {
            v.push("record_every must be at least 1".to_string());
        }
        if !(self.cons_tol > 0.0) {
            v.push(format!("cons_tol must be positive, got {}", self.cons_tol));
        }
        v
    }
}

/// Condensation-detector parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// Threshold constant C_F.
    pub c_f: f64,
    /// Concentration exponent ς.
    pub varsigma: f64,
    /// Coarsest dyadic scale index (window 2^{−n_lo}).
    pub n_lo: u32,
    /// Finest dyadic scale index (window 2^{−n_hi}).
    pub n_hi: u32,
}

impl DetectorParams {
    /// Parameter violations against a grid: the coarsest window must fit in
    /// the domain and the finest must not drop below grid resolution.
    pub fn violations(&self, omega_max: f64, h_grid: f64) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.c_f > 0.0) {
            v.push(format!("detector C_F must be positive, got {}", self.c_f));
        }
        if !(self.varsigma >= 0.0) {
            v.push(format!("detector exponent must be >= 0, got {}", self.varsigma));
        }
        if self.n_lo > self.n_hi {
            v.push(format!(
                "detector scale range is empty: n_lo={} > n_hi={}",
                self.n_lo, self.n_hi
            ));
        }
        if 2f64.powi(-(self.n_lo as i32)) > omega_max {
            v.push(format!(
                "coarsest detector window 2^-{} exceeds omega_max={omega_max}",
                self.n_lo
            ));
        }
        if 2f64.powi(-(self.n_hi as i32)) < h_grid {
            v.push(format!(
                "finest detector window 2^-{} is below the grid resolution h={h_grid}",
                self.n_hi
            ));
        }
        v
    }
}

/// Everything a run needs besides the initial state and kernel.
#[derive(Debug, Clone)]
pub struct RunSetup {
    /// Stepping control.
    pub control: StepControl,
    /// Optional online condensation detector (terminates the run on fire).
    pub detector: Option<DetectorParams>,
    /// Dyadic scale indices (lo, hi) recorded with every sample.
    pub dyadic_n: (u32, u32),
}

/// Scalar diagnostics attached to each recorded sample.
#[derive(Debug, Clone, Serialize)]
pub struct SampleDiagnostics {
    /// Reduced mass ∫F + condensate.
    pub mass: f64,
    /// Reduced energy ∫F·ω.
    pub energy: f64,
    /// Lyapunov functional ∫F·ln(ω+1).
    pub phi: f64,
    /// Dissipation functional D.
    pub dissipation: f64,
    /// Condensate atom.
    pub condensate: f64,
    /// ∫_[0, 2^{−n}) F for n = dyadic_n.0 ..= dyadic_n.1, in order.
    pub dyadic_masses: Vec<f64>,
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    /// Simulation time.
    pub t: f64,
    /// Full state snapshot.
    pub spectrum: Spectrum,
    /// Scalar diagnostics at this time.
    pub diagnostics: SampleDiagnostics,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Reached t_end.
    Horizon,
    /// The dyadic concentration detector fired.
    CondensationDetected,
    /// Positivity could not be restored above the dt floor.
    DtUnderflow,
}

/// A completed run: ordered samples plus the stop reason.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Recorded samples with strictly increasing times.
    pub samples: Vec<TrajectorySample>,
    /// Stop reason.
    pub termination: Termination,
    /// Detection time when the run stopped on the detector.
    pub condensation_t: Option<f64>,
    /// Dyadic scale indices recorded in each sample's `dyadic_masses`.
    pub dyadic_n: (u32, u32),
}

/// Result of one attempted (and possibly internally retried) step.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    /// The step was accepted, possibly after shrinking dt.
    Accepted {
        /// The state at t + dt_used.
        spectrum: Spectrum,
        /// The step size actually taken.
        dt_used: f64,
        /// Number of positivity rejections before acceptance.
        retries: u32,
    },
    /// Positivity kept failing down to the dt floor.
    PositivityFailure {
        /// The last step size attempted.
        dt_last: f64,
    },
}

/// Advances one SSP-RK3 step with positivity retry.
///
/// The requested dt is attempted first; on any negative (or non-finite)
/// stage value the whole step is rejected and re-attempted with dt·safety,
/// until success or until the next attempt would fall below dt_min.
/// Accepted steps are checked for conservation drift against
/// `control.cons_tol`; a violation is a hard error, never a repair.
pub fn step(
    spectrum: &Spectrum,
    table: &KernelTable,
    dt: f64,
    control: &StepControl,
) -> Result<StepOutcome> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("step size must be positive, got {dt}")));
    }
    let mut attempt = dt;
    let mut retries = 0u32;
    loop {
        match try_ssp_rk3(spectrum, table, attempt)? {
            Some(next) => {
                check_conservation(spectrum, &next, control.cons_tol)?;
                return Ok(StepOutcome::Accepted {
                    spectrum: next,
                    dt_used: attempt,
                    retries,
                });
            }
            None => {
                let shrunk = attempt * control.safety;
                if shrunk < control.dt_min {
                    return Ok(StepOutcome::PositivityFailure { dt_last: attempt });
                }
                attempt = shrunk;
                retries += 1;
            }
        }
    }
}

/// One SSP-RK3 attempt; `None` signals a positivity rejection at some stage.
///
/// Shu–Osher form:
/// ```text
/// u1 = u + dt·L(u)
/// u2 = 3/4·u + 1/4·(u1 + dt·L(u1))
/// u+ = 1/3·u + 2/3·(u2 + dt·L(u2))
/// ```
fn try_ssp_rk3(spectrum: &Spectrum, table: &KernelTable, dt: f64) -> Result<Option<Spectrum>> {
    let grid = spectrum.grid();
    let u = spectrum.values();

    let l0 = collision_rhs(spectrum, table)?;
    let u1: Vec<f64> = u.iter().zip(&l0).map(|(&v, &r)| v + dt * r).collect();
    if !admissible(&u1) {
        return Ok(None);
    }
    let s1 = Spectrum::new(grid, u1, spectrum.condensate(), spectrum.t())?;

    let l1 = collision_rhs(&s1, table)?;
    let u2: Vec<f64> = u
        .iter()
        .zip(s1.values())
        .zip(&l1)
        .map(|((&v, &v1), &r)| 0.75 * v + 0.25 * (v1 + dt * r))
        .collect();
    if !admissible(&u2) {
        return Ok(None);
    }
    let s2 = Spectrum::new(grid, u2, spectrum.condensate(), spectrum.t())?;

    let l2 = collision_rhs(&s2, table)?;
    let u3: Vec<f64> = u
        .iter()
        .zip(s2.values())
        .zip(&l2)
        .map(|((&v, &v2), &r)| (v + 2.0 * (v2 + dt * r)) / 3.0)
        .collect();
    if !admissible(&u3) {
        return Ok(None);
    }
    Ok(Some(Spectrum::new(
        grid,
        u3,
        spectrum.condensate(),
        spectrum.t() + dt,
    )?))
}

fn admissible(values: &[f64]) -> bool {
    values.iter().all(|&v| v.is_finite() && v >= 0.0)
}

fn check_conservation(before: &Spectrum, after: &Spectrum, tol: f64) -> Result<()> {
    let (m0, m1) = (before.mass(), after.mass());
    if (m1 - m0).abs() > tol * m0.abs().max(1e-300) {
        return Err(Error::State(format!(
            "mass drift {} over one step exceeds tolerance {tol} (mass {m0})",
            m1 - m0
        )));
    }
    let (e0, e1) = (before.energy(), after.energy());
    if (e1 - e0).abs() > tol * e0.abs().max(1e-300) {
        return Err(Error::State(format!(
            "energy drift {} over one step exceeds tolerance {tol} (energy {e0})",
            e1 - e0
        )));
    }
    Ok(())
}

/// Integrates from the initial state to the horizon, the detector firing
/// time, or a dt underflow, recording samples at the configured cadence
/// (the initial and final states are always recorded).
pub fn run(initial: Spectrum, table: &KernelTable, setup: &RunSetup) -> Result<Trajectory> {
    let mut violations = setup.control.violations();
    let grid = initial.grid();
    if let Some(det) = &setup.detector {
        violations.extend(det.violations(grid.omega_max(), grid.h_grid));
        if det.n_lo < setup.dyadic_n.0 || det.n_hi > setup.dyadic_n.1 {
            violations.push(format!(
                "detector scales [{}, {}] must lie within recorded scales [{}, {}]",
                det.n_lo, det.n_hi, setup.dyadic_n.0, setup.dyadic_n.1
            ));
        }
    }
    let (dn_lo, dn_hi) = setup.dyadic_n;
    if dn_lo > dn_hi {
        violations.push(format!("recorded dyadic range is empty: [{dn_lo}, {dn_hi}]"));
    }
    if 2f64.powi(-(dn_lo as i32)) > grid.omega_max() {
        violations.push(format!(
            "coarsest recorded window 2^-{dn_lo} exceeds omega_max={}",
            grid.omega_max()
        ));
    }
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }

    let control = &setup.control;
    let mut samples = Vec::new();
    let mut state = initial.at_time(0.0);
    let record = |state: &Spectrum, samples: &mut Vec<TrajectorySample>| -> Result<bool> {
        let diag = sample_diagnostics(state, table, (dn_lo, dn_hi))?;
        let fired = match &setup.detector {
            Some(det) => detector_fires(&diag.dyadic_masses, dn_lo, det),
            None => false,
        };
        samples.push(TrajectorySample {
            t: state.t(),
            spectrum: state.clone(),
            diagnostics: diag,
        });
        Ok(fired)
    };

    if record(&state, &mut samples)? {
        return Ok(Trajectory {
            condensation_t: Some(0.0),
            samples,
            termination: Termination::CondensationDetected,
            dyadic_n: (dn_lo, dn_hi),
        });
    }
    let mut t = 0.0f64;
    let mut dt_cur = control.dt_init;
    let mut since_regrow = 0u32;
    let mut accepted: u64 = 0;
    let mut attempts: u64 = 0;
    let mut last_recorded = 0.0f64;

    while t < control.t_end * (1.0 - 1e-14) {
        attempts += 1;
        if attempts > MAX_STEPS {
            return Err(Error::State(format!(
                "exceeded {MAX_STEPS} step attempts before the horizon; dt floor too small?"
            )));
        }
        let remaining = control.t_end - t;
        let dt_try = dt_cur.min(remaining);
        match step(&state, table, dt_try, control)? {
            StepOutcome::Accepted {
                spectrum,
                dt_used,
                retries,
            } => {
                t += dt_used;
                if (control.t_end - t).abs() <= 1e-14 * control.t_end {
                    t = control.t_end;
                }
                state = spectrum.at_time(t);
                accepted += 1;
                if retries > 0 {
                    dt_cur = dt_used;
                    since_regrow = 0;
                } else if dt_cur < control.dt_init {
                    since_regrow += 1;
                    if since_regrow >= REGROW_AFTER {
                        dt_cur = (dt_cur / control.safety).min(control.dt_init);
                        since_regrow = 0;
                    }
                }
                if accepted.is_multiple_of(control.record_every as u64) || t >= control.t_end {
                    last_recorded = t;
                    if record(&state, &mut samples)? {
                        return Ok(Trajectory {
                            condensation_t: Some(t),
                            samples,
                            termination: Termination::CondensationDetected,
                            dyadic_n: (dn_lo, dn_hi),
                        });
                    }
                }
            }
            StepOutcome::PositivityFailure { .. } => {
                if t > last_recorded {
                    record(&state, &mut samples)?;
                }
                return Ok(Trajectory {
                    samples,
                    termination: Termination::DtUnderflow,
                    condensation_t: None,
                    dyadic_n: (dn_lo, dn_hi),
                });
            }
        }
    }
    if t > last_recorded {
        record(&state, &mut samples)?;
    }
    Ok(Trajectory {
        samples,
        termination: Termination::Horizon,
        condensation_t: None,
        dyadic_n: (dn_lo, dn_hi),
    })
}

fn sample_diagnostics(
    state: &Spectrum,
    table: &KernelTable,
    dyadic_n: (u32, u32),
) -> Result<SampleDiagnostics> {
    let mut dyadic = Vec::with_capacity((dyadic_n.1 - dyadic_n.0 + 1) as usize);
    for n in dyadic_n.0..=dyadic_n.1 {
        dyadic.push(state.interval_mass(0.0, 2f64.powi(-(n as i32)))?);
    }
    Ok(SampleDiagnostics {
        mass: state.mass(),
        energy: state.energy(),
        phi: state.lyapunov_phi(),
        dissipation: dissipation_d(state, table)?,
        condensate: state.condensate(),
        dyadic_masses: dyadic,
    })
}

fn detector_fires(dyadic_masses: &[f64], recorded_lo: u32, det: &DetectorParams) -> bool {
    (det.n_lo..=det.n_hi).all(|n| {
        let idx = (n - recorded_lo) as usize;
        dyadic_masses[idx] >= det.c_f * 2f64.powf(-(n as f64) * det.varsigma)
    })
}

/// Scans a recorded trajectory for the first time the dyadic concentration
/// inequality holds at every scale in [n_lo, n_hi] simultaneously.
pub fn detect_condensation(
    trajectory: &Trajectory,
    c_f: f64,
    varsigma: f64,
    n_range: (u32, u32),
) -> Result<Option<f64>> {
    if trajectory.samples.is_empty() {
        return Err(Error::Domain("trajectory has no samples".to_string()));
    }
    let (lo, hi) = n_range;
    if lo < trajectory.dyadic_n.0 || hi > trajectory.dyadic_n.1 || lo > hi {
        return Err(Error::Config(vec![format!(
            "detector scales [{lo}, {hi}] must lie within recorded scales [{}, {}]",
            trajectory.dyadic_n.0, trajectory.dyadic_n.1
        )]));
    }
    let det = DetectorParams {
        c_f,
        varsigma,
        n_lo: lo,
        n_hi: hi,
    };
    for s in &trajectory.samples {
        if detector_fires(&s.diagnostics.dyadic_masses, trajectory.dyadic_n.0, &det) {
            return Ok(Some(s.t));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{build_kernel_table, KernelStorage};
    use crate::dispersion::DispersionModel;
    use crate::spectrum::{BumpSpec, Grid, ProfileSpec};

    fn table(n: usize, h: f64, alpha: f64) -> KernelTable {
        let model = DispersionModel::power_law(alpha, 1.0).unwrap();
        build_kernel_table(Grid::new(n, h).unwrap(), &model, KernelStorage::Auto, 1.0).unwrap()
    }

    fn control(dt: f64, t_end: f64) -> StepControl {
        StepControl {
            dt_init: dt,
            dt_min: dt * 1e-6,
            safety: 0.5,
            t_end,
            record_every: 10,
            cons_tol: 1e-10,
        }
    }

    fn setup(dt: f64, t_end: f64) -> RunSetup {
        RunSetup {
            control: control(dt, t_end),
            detector: None,
            dyadic_n: (2, 4),
        }
    }

    #[test]
    fn control_violations_are_collected() {
        let bad = StepControl {
            dt_init: 0.0,
            dt_min: 1.0,
            safety: 1.5,
            t_end: -1.0,
            record_every: 0,
            cons_tol: 0.0,
        };
        assert_eq!(bad.violations().len(), 6);
        assert!(control(0.01, 1.0).violations().is_empty());
    }

    #[test]
    fn zero_spectrum_is_a_fixed_point() {
        let t = table(16, 0.25, 1.5);
        let zero = Spectrum::new(t.grid(), vec![0.0; 16], 0.0, 0.0).unwrap();
        match step(&zero, &t, 0.1, &control(0.1, 1.0)).unwrap() {
            StepOutcome::Accepted { spectrum, dt_used, retries } => {
                assert!(spectrum.values().iter().all(|&v| v == 0.0));
                assert_eq!(dt_used, 0.1);
                assert_eq!(retries, 0);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn rayleigh_jeans_state_is_stationary() {
        let t = table(24, 0.2, 1.8);
        let c = 0.4;
        let f: Vec<f64> = (0..24)
            .map(|i| {
                let w = t.grid().center(i);
                (c / w) * t.kmag_at(i) * t.mho_at(i)
            })
            .collect();
        let s = Spectrum::new(t.grid(), f, 0.0, 0.0).unwrap();
        match step(&s, &t, 0.01, &control(0.01, 1.0)).unwrap() {
            StepOutcome::Accepted { spectrum, .. } => {
                for i in 0..24 {
                    let (a, b) = (s.values()[i], spectrum.values()[i]);
                    assert!(
                        (a - b).abs() <= 1e-12 * a,
                        "cell {i} moved: {a} -> {b}"
                    );
                }
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn oversized_step_is_retried_not_clipped() {
        let t = table(16, 0.25, 1.5);
        let mut f = vec![0.0; 16];
        f[2] = 5.0;
        f[3] = 40.0;
        f[4] = 5.0;
        let s = Spectrum::new(t.grid(), f, 0.0, 0.0).unwrap();
        // A deliberately huge step must trigger at least one rejection.
        match step(&s, &t, 1e3, &control(1e3, 1.0)).unwrap() {
            StepOutcome::Accepted { spectrum, dt_used, retries } => {
                assert!(retries > 0, "expected positivity retries");
                assert!(dt_used < 1e3);
                assert!(spectrum.values().iter().all(|&v| v >= 0.0));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn persistent_negativity_reports_underflow() {
        let t = table(16, 0.25, 1.5);
        let mut f = vec![0.0; 16];
        f[2] = 5.0;
        f[3] = 40.0;
        f[4] = 5.0;
        let s = Spectrum::new(t.grid(), f, 0.0, 0.0).unwrap();
        let ctl = StepControl {
            dt_init: 1e3,
            dt_min: 900.0,
            safety: 0.5,
            t_end: 1.0,
            record_every: 1,
            cons_tol: 1e-10,
        };
        match step(&s, &t, 1e3, &ctl).unwrap() {
            StepOutcome::PositivityFailure { dt_last } => assert_eq!(dt_last, 1e3),
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn conservation_over_many_steps() {
        let t = table(64, 0.0625, 1.5);
        let profile = ProfileSpec::GaussianBump {
            bump: BumpSpec {
                center: 1.0,
                width: 0.15,
                amplitude: 3.0,
            },
        };
        let s0 = Spectrum::init_from_profile(t.grid(), &profile).unwrap();
        let (m0, e0) = (s0.mass(), s0.energy());
        let mut setup = setup(2e-3, 2.0);
        setup.control.record_every = 100;
        let traj = run(s0, &t, &setup).unwrap();
        assert_eq!(traj.termination, Termination::Horizon);
        let last = traj.samples.last().unwrap();
        assert!(
            (last.diagnostics.mass - m0).abs() <= 1e-10 * m0,
            "mass drift {} over the run",
            last.diagnostics.mass - m0
        );
        assert!(
            (last.diagnostics.energy - e0).abs() <= 1e-10 * e0,
            "energy drift {} over the run",
            last.diagnostics.energy - e0
        );
        // The evolution must have actually moved the state.
        let first = &traj.samples[0].spectrum;
        let moved = last
            .spectrum
            .values()
            .iter()
            .zip(first.values())
            .any(|(&a, &b)| (a - b).abs() > 1e-6);
        assert!(moved, "state never changed over the run");
    }

    #[test]
    fn zero_horizon_yields_single_snapshot() {
        let t = table(16, 0.25, 1.5);
        let s = Spectrum::new(t.grid(), vec![1.0; 16], 0.0, 0.0).unwrap();
        let traj = run(s, &t, &setup(0.01, 0.0)).unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.termination, Termination::Horizon);
        assert_eq!(traj.samples[0].t, 0.0);
    }

    #[test]
    fn recorded_times_are_strictly_increasing() {
        let t = table(32, 0.125, 1.5);
        let profile = ProfileSpec::GaussianBump {
            bump: BumpSpec {
                center: 0.8,
                width: 0.12,
                amplitude: 2.0,
            },
        };
        let s0 = Spectrum::init_from_profile(t.grid(), &profile).unwrap();
        let mut st = setup(1e-3, 0.5);
        st.control.record_every = 7;
        let traj = run(s0, &t, &st).unwrap();
        assert!(traj.samples.len() > 3);
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t, "times not increasing: {} {}", w[0].t, w[1].t);
        }
        assert!((traj.samples.last().unwrap().t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_decreases_and_hat_mass_grows_on_lower_half_run() {
        // Support in the lower half of the grid keeps the sign structure of
        // the truncated operator exact.
        let t = table(32, 0.125, 1.5);
        let profile = ProfileSpec::GaussianBump {
            bump: BumpSpec {
                center: 0.6,
                width: 0.08,
                amplitude: 4.0,
            },
        };
        let s0 = Spectrum::init_from_profile(t.grid(), &profile).unwrap();
        let phi0 = s0.lyapunov_phi();
        let hat = |w: f64| (1.0 - w).max(0.0);
        let mut st = setup(1e-3, 0.5);
        st.control.record_every = 20;
        let traj = run(s0, &t, &st).unwrap();
        let mut prev_phi = f64::INFINITY;
        let mut prev_hat = f64::NEG_INFINITY;
        for s in &traj.samples {
            assert!(
                s.diagnostics.phi <= prev_phi + 1e-9 * phi0,
                "Lyapunov functional increased at t={}",
                s.t
            );
            let hat_mass = s.spectrum.test_functional(hat);
            assert!(
                hat_mass >= prev_hat - 1e-9 * phi0.max(1.0),
                "hat functional decreased at t={}",
                s.t
            );
            assert!(s.diagnostics.dissipation >= 0.0);
            prev_phi = s.diagnostics.phi;
            prev_hat = hat_mass;
        }
    }

    #[test]
    fn detector_trivial_cases() {
        let t = table(16, 0.25, 1.5);
        let zero = Spectrum::new(t.grid(), vec![0.0; 16], 0.0, 0.0).unwrap();
        let traj = run(zero, &t, &setup(0.01, 0.05)).unwrap();
        assert_eq!(
            detect_condensation(&traj, 0.1, 0.0, (2, 4)).unwrap(),
            None
        );

        // 30% of unit mass parked in cell 0 (width 0.25 ⊂ every window
        // 2^-2..2^-4? no: 2^-4 = 0.0625 < 0.25, pro-rata still 30%·1/4 of
        // cell mass — use windows the cell covers fully at n=2 only), so
        // check a single coarse scale with a generous C_F.
        let mut f = vec![0.0; 16];
        f[0] = 0.3 / 0.25;
        f[8] = 0.7 / 0.25;
        let s = Spectrum::new(t.grid(), f, 0.0, 0.0).unwrap();
        let traj = run(s, &t, &setup(0.01, 0.02)).unwrap();
        let fired = detect_condensation(&traj, 0.05, 0.0, (2, 2)).unwrap();
        assert_eq!(fired, Some(0.0), "threshold met from the first sample");
    }

    #[test]
    fn detector_runs_terminate_on_fire() {
        let t = table(16, 0.25, 1.5);
        let mut f = vec![0.0; 16];
        f[0] = 2.0;
        f[8] = 2.0;
        let s = Spectrum::new(t.grid(), f, 0.0, 0.0).unwrap();
        let st = RunSetup {
            control: control(0.01, 1.0),
            detector: Some(DetectorParams {
                c_f: 0.01,
                varsigma: 0.0,
                n_lo: 2,
                n_hi: 2,
            }),
            dyadic_n: (2, 4),
        };
        let traj = run(s, &t, &st).unwrap();
        assert_eq!(traj.termination, Termination::CondensationDetected);
        assert_eq!(traj.condensation_t, Some(0.0));
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn detector_range_outside_recording_is_a_config_error() {
        let t = table(16, 0.25, 1.5);
        let zero = Spectrum::new(t.grid(), vec![0.0; 16], 0.0, 0.0).unwrap();
        let traj = run(zero, &t, &setup(0.01, 0.02)).unwrap();
        assert!(detect_condensation(&traj, 0.1, 0.0, (1, 8)).is_err());
    }
}
