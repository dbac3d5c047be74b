//! The property suite behind the `verify` subcommand.
//!
//! Six suites probe the load-bearing invariants with small, fixed
//! budgets so a full verification stays interactive: the oscillatory
//! min-kernel quadrature against its closed form, the two equilibrium
//! families, agreement between the production collision evaluation and
//! the brute-force reference, conservation along steps of the configured
//! run, the index-level inclusion chain of the domain decomposition, and
//! the supersolution barrier residuals. Randomized suites draw from the
//! config seed, so repeated runs are identical.

use crate::collision::{
    brute_force_rhs, build_kernel_table, collision_rhs, min_kernel_closed_form_applies,
    min_kernel_oracle, KernelStorage,
};
use crate::config::SimulationConfig;
use crate::diagnostics::{
    build_supersolution, inclusion_check, verify_supersolution, DecompositionSpec, MuKernel,
};
use crate::error::Result;
use crate::integrator::{step, StepOutcome};
use crate::spectrum::{Grid, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Outcome of one suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    /// Suite name.
    pub name: String,
    /// Whether every check in the suite held.
    pub passed: bool,
    /// Worst-case numbers backing the verdict.
    pub detail: String,
}

/// Outcome of the whole property suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    /// Individual suites in execution order.
    pub outcomes: Vec<SuiteOutcome>,
    /// True iff every suite passed.
    pub passed: bool,
}

fn outcome(name: &str, passed: bool, detail: String) -> SuiteOutcome {
    SuiteOutcome {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Draws a wavenumber quadruple from [0.1, 10]⁴ on which the (π/4)·min
/// closed form applies (rejection sampling; acceptance is about half, so
/// the attempt bound is never reached in practice).
pub fn sample_resonance_compatible(rng: &mut ChaCha8Rng) -> [f64; 4] {
    for _ in 0..10_000 {
        let q = [
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.1..10.0),
        ];
        if min_kernel_closed_form_applies(q[0], q[1], q[2], q[3]) {
            return q;
        }
    }
    unreachable!("rejection sampling failed to find a compatible quadruple");
}

/// Runs all suites for a validated config.
///
/// A failing suite is reported, not raised; errors are reserved for
/// infrastructure problems (kernel construction, invalid states).
pub fn run_property_suite(config: &SimulationConfig) -> Result<SuiteReport> {
    let model = config.model()?;
    let scale = config.collision.scale;
    let mut outcomes = Vec::new();

    // --- Min-kernel quadrature against (π/4)·min -------------------------
    {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let q = sample_resonance_compatible(&mut rng);
            let numeric = min_kernel_oracle(q[0], q[1], q[2], q[3])?;
            let exact = PI / 4.0 * q.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.max((numeric - exact).abs() / exact);
        }
        outcomes.push(outcome(
            "min-kernel-quadrature",
            worst <= 0.01,
            format!("worst relative error {worst:.3e} (tolerance 1e-2, 5 quadruples)"),
        ));
    }

    // --- Equilibria ------------------------------------------------------
    {
        let grid = Grid::new(32, 1.0 / 16.0)?;
        let table = build_kernel_table(grid, &model, KernelStorage::Auto, scale)?;
        let mut worst = 0.0f64;
        // f ≡ c.
        let mut f_flat = Vec::with_capacity(grid.n_cells);
        // f = c/ω, c sized so occupations stay O(1).
        let mut f_rj = Vec::with_capacity(grid.n_cells);
        for i in 0..grid.n_cells {
            let km = table.kmag_at(i);
            let mho = table.mho_at(i);
            f_flat.push(0.7 * km * mho);
            f_rj.push(grid.h_grid / grid.center(i) * km * mho);
        }
        for f in [f_flat, f_rj] {
            let s = Spectrum::new(grid, f, 0.0, 0.0)?;
            let rhs = collision_rhs(&s, &table)?;
            worst = worst.max(rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs())));
        }
        let tol = 1e-12 * scale;
        outcomes.push(outcome(
            "equilibria",
            worst <= tol,
            format!("worst |rhs| {worst:.3e} on constant and 1/omega states (tolerance {tol:.1e})"),
        ));
    }

    // --- Oracle equivalence ----------------------------------------------
    {
        let grid = Grid::new(8, 0.25)?;
        let table = build_kernel_table(grid, &model, KernelStorage::Auto, scale)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6f72_6163);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let f: Vec<f64> = (0..grid.n_cells).map(|_| rng.gen::<f64>()).collect();
            let s = Spectrum::new(grid, f, 0.0, 0.0)?;
            let fast = collision_rhs(&s, &table)?;
            let slow = brute_force_rhs(&s, &model)?;
            let norm = slow
                .iter()
                .fold(0.0f64, |a, &b| a.max(b.abs()))
                .max(f64::MIN_POSITIVE);
            for (a, b) in fast.iter().zip(slow.iter()) {
                // The reference evaluates at unit scale.
                worst = worst.max((a - b * scale).abs() / (norm * scale));
            }
        }
        outcomes.push(outcome(
            "oracle-equivalence",
            worst <= 1e-12,
            format!("worst relative deviation {worst:.3e} over 5 spectra (tolerance 1e-12)"),
        ));
    }

    // --- Conservation along the configured run ---------------------------
    {
        let table = config.kernel_table()?;
        let mut state = config.initial_spectrum()?;
        let control = config.step_control.clone();
        let m0 = state.mass();
        let e0 = state.energy();
        let mut failed_step = None;
        for _ in 0..25 {
            match step(&state, &table, control.dt_init, &control)? {
                StepOutcome::Accepted { spectrum, .. } => state = spectrum,
                StepOutcome::PositivityFailure { dt_last } => {
                    failed_step = Some(dt_last);
                    break;
                }
            }
        }
        let (passed, detail) = match failed_step {
            Some(dt) => (
                false,
                format!("positivity could not be restored above dt_min (last dt {dt:.3e})"),
            ),
            None => {
                let dm = (state.mass() - m0).abs() / m0.abs().max(f64::MIN_POSITIVE);
                let de = (state.energy() - e0).abs() / e0.abs().max(f64::MIN_POSITIVE);
                (
                    dm <= 1e-10 && de <= 1e-10,
                    format!("mass drift {dm:.3e}, energy drift {de:.3e} over 25 steps (tolerance 1e-10)"),
                )
            }
        };
        outcomes.push(outcome("conservation", passed, detail));
    }

    // --- Inclusion chain --------------------------------------------------
    {
        let spec = config.decomposition()?;
        let report = inclusion_check(&spec, 2000, config.seed ^ 0x696e_636c);
        outcomes.push(outcome(
            "inclusion-chain",
            report.passed,
            format!(
                "{} index triples ({} violations), {} random + {} boundary triples ({} violations)",
                report.index_checked,
                report.index_violations,
                report.random_checked,
                report.adversarial_checked,
                report.real_violations
            ),
        ));
    }

    // --- Supersolution residuals -----------------------------------------
    {
        let check = constant_kernel_barrier_check();
        outcomes.push(outcome(
            "supersolution-residuals",
            check.0,
            check.1,
        ));
    }

    let passed = outcomes.iter().all(|o| o.passed);
    Ok(SuiteReport { outcomes, passed })
}

/// Builds the reference constant-kernel barrier instance and verifies it.
///
/// The instance is config-independent: kernel c·1_{z<𝔏/4} with c = 5/𝔏 on
/// the scale-6 window, 40 samples of 1 ms. Residuals must stay above
/// −1e−6·max ρ at every guarded point.
fn constant_kernel_barrier_check() -> (bool, String) {
    let n = 6u32;
    let l_n = 2f64.powi(-(n as i32));
    let times: Vec<f64> = (0..40).map(|k| k as f64 * 1e-3).collect();
    let z: Vec<f64> = (0..=32).map(|m| m as f64 * (l_n / 64.0)).collect();
    let z0 = l_n / 4.0;
    let c = 5.0 / l_n;
    let values: Vec<Vec<f64>> = times
        .iter()
        .map(|_| z.iter().map(|&zv| if zv < z0 { c } else { 0.0 }).collect())
        .collect();
    let mu = MuKernel {
        t1: *times.last().unwrap(),
        times,
        z,
        values,
        t1_crossed: false,
        prefactor: 1.0,
    };
    let art = build_supersolution(&mu, n);
    let check = verify_supersolution(&art, &mu, 60);
    (
        check.passed,
        format!(
            "min residual {:.3e} (tolerance -{:.1e}), {} checked / {} skipped, bounds {}",
            check.min_residual,
            check.tol,
            check.checked,
            check.skipped,
            if check.bounds_ok && check.lower_ok && check.support_ok {
                "ok"
            } else {
                "violated"
            }
        ),
    )
}

/// Convenience wrapper asserting the barrier instance on a caller-built
/// decomposition; used by integration tests.
pub fn quick_inclusion(spec: &DecompositionSpec, seed: u64) -> bool {
    inclusion_check(spec, 500, seed).passed
}
