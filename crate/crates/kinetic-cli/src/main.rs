//! `wavekin`: command-line front end for the conservative 4-wave kinetic
//! solver and its diagnostics.
//!
//! Four subcommands cover the full experiment cycle:
//!
//! - `run` integrates a configured experiment and writes the spectrum and
//!   diagnostics time series plus a run summary;
//! - `verify` executes the full property suite (conservation, equilibria,
//!   oracle equivalence, kernel quadrature, inclusion chain, supersolution
//!   residuals) against the config;
//! - `diagnose` computes the spread/growth/supersolution/onset report for
//!   a previously recorded trajectory;
//! - `kernel-check` compares the oscillatory kernel quadrature with its
//!   closed form on seeded random quadruples.
//!
//! Reports are keyed JSON documents (`{report, definitions, data}`):
//! `run` writes its files into the output directory, the other
//! subcommands print the document to stdout and keep human-readable
//! progress on stderr.
//!
//! Exit codes: 0 success; 1 validation failure (rejected config, failed
//! checks, malformed input data); 2 runtime failure (I/O errors, solver
//! breakdown, quadrature non-convergence). Orchestration here is
//! single-threaded; parallelism lives inside the collision evaluation and
//! honors `RAYON_NUM_THREADS`. Outputs are byte-identical across runs and
//! thread counts.

use clap::{Parser, Subcommand};
use kinetic_core::collision::min_kernel_oracle;
use kinetic_core::config::parse_config;
use kinetic_core::diagnostics::{
    accumulate_time_measures, build_mu, build_supersolution, condensation_bound_report,
    growth_set_measures, verify_supersolution, CondensationBoundReport, GrowthSetReport,
    TimeMeasureReport,
};
use kinetic_core::integrator::{detect_condensation, run, Termination, Trajectory};
use kinetic_core::io::{
    ensure_dir, report_document, write_diagnostics_csv, write_report, write_spectrum_csv,
};
use kinetic_core::verify::{run_property_suite, sample_resonance_compatible};
use kinetic_core::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Conservative solver and diagnostics for the isotropic 4-wave kinetic
/// equation under power-law dispersion.
#[derive(Parser)]
#[command(name = "wavekin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured experiment and write its time series.
    Run {
        /// Experiment configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full property suite for the configured experiment.
    Verify {
        /// Experiment configuration (TOML).
        #[arg(long)]
        config: PathBuf,
    },
    /// Analyze a recorded trajectory: spread sets, growth sets,
    /// supersolution, condensation onset.
    Diagnose {
        /// Spectrum time series written by `run` (spectrum.csv).
        #[arg(long)]
        trajectory: PathBuf,
        /// The configuration the trajectory was recorded with.
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the kernel quadrature with its closed form on seeded
    /// random quadruples.
    KernelCheck {
        /// Experiment configuration (TOML); supplies the seed.
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

/// Maps an error to the exit-code contract: rejected parameters and
/// malformed inputs are validation failures; I/O, invalid runtime state,
/// and range faults are runtime failures.
fn failure_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Parse(_) => EXIT_VALIDATION,
        Error::Io { .. } | Error::Range(_) | Error::State(_) => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Verify { config } => cmd_verify(&config),
        Command::Diagnose { trajectory, config } => cmd_diagnose(&trajectory, &config),
        Command::KernelCheck { config } => cmd_kernel_check(&config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(failure_code(&e))
        }
    }
}

/// Relative drift |b − a| / |a|, falling back to the absolute difference
/// for a vanishing reference.
fn rel_drift(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        (b - a).abs()
    } else {
        ((b - a) / a).abs()
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunSummary {
    termination: Termination,
    condensation_t: Option<f64>,
    samples: usize,
    t_final: f64,
    mass_initial: f64,
    mass_final: f64,
    mass_drift_rel: f64,
    energy_initial: f64,
    energy_final: f64,
    energy_drift_rel: f64,
    lyapunov_initial: f64,
    lyapunov_final: f64,
    condensate_final: f64,
}

const RUN_DEFINITIONS: &[(&str, &str)] = &[
    ("termination", "why the run stopped: horizon, condensation-detected, or dt-underflow"),
    ("condensation_t", "first recorded time the dyadic concentration detector fired (null if it did not)"),
    ("samples", "number of recorded snapshots"),
    ("t_final", "time of the last recorded snapshot"),
    ("mass_initial", "reduced mass (integral of F plus condensate) at the first snapshot"),
    ("mass_final", "reduced mass at the last snapshot"),
    ("mass_drift_rel", "relative mass drift |final - initial| / initial over the run"),
    ("energy_initial", "reduced energy (integral of F times omega) at the first snapshot"),
    ("energy_final", "reduced energy at the last snapshot"),
    ("energy_drift_rel", "relative energy drift over the run"),
    ("lyapunov_initial", "integral of F times ln(omega + 1) at the first snapshot"),
    ("lyapunov_final", "integral of F times ln(omega + 1) at the last snapshot"),
    ("condensate_final", "condensate atom at the last snapshot"),
];

fn summarize(trajectory: &Trajectory) -> RunSummary {
    let first = &trajectory.samples.first().expect("run records >= 1 sample").diagnostics;
    let last_sample = trajectory.samples.last().expect("run records >= 1 sample");
    let last = &last_sample.diagnostics;
    RunSummary {
        termination: trajectory.termination,
        condensation_t: trajectory.condensation_t,
        samples: trajectory.samples.len(),
        t_final: last_sample.t,
        mass_initial: first.mass,
        mass_final: last.mass,
        mass_drift_rel: rel_drift(first.mass, last.mass),
        energy_initial: first.energy,
        energy_final: last.energy,
        energy_drift_rel: rel_drift(first.energy, last.energy),
        lyapunov_initial: first.phi,
        lyapunov_final: last.phi,
        condensate_final: last.condensate,
    }
}

fn cmd_run(config_path: &Path, out: Option<PathBuf>) -> Result<u8> {
    let config = parse_config(config_path)?;
    let out_dir = out.unwrap_or_else(|| PathBuf::from(&config.output_dir));
    ensure_dir(&out_dir)?;
    eprintln!(
        "building kernel table: {} cells, omega_max = {}",
        config.grid.n_cells, config.grid.omega_max
    );
    let table = config.kernel_table()?;
    let initial = config.initial_spectrum()?;
    let setup = config.run_setup();
    eprintln!("integrating to t_end = {}", setup.control.t_end);
    let trajectory = run(initial, &table, &setup)?;

    write_spectrum_csv(&trajectory, &out_dir.join("spectrum.csv"))?;
    write_diagnostics_csv(&trajectory, &out_dir.join("diagnostics.csv"))?;
    let summary = summarize(&trajectory);
    write_report(
        &out_dir.join("run_report.json"),
        "run-summary",
        RUN_DEFINITIONS,
        &summary,
    )?;
    eprintln!(
        "recorded {} samples to t = {}; wrote spectrum.csv, diagnostics.csv, run_report.json in {}",
        summary.samples,
        summary.t_final,
        out_dir.display()
    );
    match trajectory.termination {
        Termination::DtUnderflow => {
            eprintln!("run stopped early: positivity could not be restored above the dt floor");
            Ok(EXIT_RUNTIME)
        }
        Termination::CondensationDetected => {
            eprintln!(
                "condensation detected at t = {}",
                trajectory.condensation_t.unwrap_or(summary.t_final)
            );
            Ok(0)
        }
        Termination::Horizon => Ok(0),
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

const VERIFY_DEFINITIONS: &[(&str, &str)] = &[
    ("outcomes", "one entry per suite: name, pass/fail, and worst-case numbers"),
    ("outcomes[].name", "suite identifier"),
    ("outcomes[].passed", "whether every check in the suite held"),
    ("outcomes[].detail", "worst-case numbers backing the verdict"),
    ("passed", "true iff every suite passed"),
];

fn cmd_verify(config_path: &Path) -> Result<u8> {
    let config = parse_config(config_path)?;
    let report = run_property_suite(&config)?;
    for o in &report.outcomes {
        eprintln!(
            "[{}] {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    print!("{}", report_document("property-suite", VERIFY_DEFINITIONS, &report)?);
    Ok(if report.passed { 0 } else { EXIT_VALIDATION })
}

// ---------------------------------------------------------------------------
// kernel-check
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct KernelCheckRow {
    r: [f64; 4],
    oracle: f64,
    closed_form: f64,
    rel_error: f64,
}

#[derive(Serialize)]
struct KernelCheckData {
    seed: u64,
    quadruples: usize,
    tolerance_rel: f64,
    max_rel_error: f64,
    passed: bool,
    rows: Vec<KernelCheckRow>,
}

const KERNEL_DEFINITIONS: &[(&str, &str)] = &[
    ("seed", "config seed the quadruples were drawn from"),
    ("quadruples", "number of random wavenumber quadruples checked"),
    ("tolerance_rel", "maximum admissible relative error"),
    ("max_rel_error", "worst relative error across all quadruples"),
    ("passed", "true iff every quadruple matched within tolerance"),
    ("rows", "per-quadruple comparison"),
    ("rows[].r", "wavenumber quadruple, drawn from [0.1, 10]^4 where the closed form applies"),
    ("rows[].oracle", "truncated oscillatory quadrature of the sine-product integral"),
    ("rows[].closed_form", "(pi/4) times the smallest wavenumber"),
    ("rows[].rel_error", "|oracle - closed_form| / closed_form"),
];

fn cmd_kernel_check(config_path: &Path) -> Result<u8> {
    let config = parse_config(config_path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6b65_726e);
    let mut rows = Vec::with_capacity(20);
    let mut max_rel = 0.0f64;
    for _ in 0..20 {
        let q = sample_resonance_compatible(&mut rng);
        let oracle = min_kernel_oracle(q[0], q[1], q[2], q[3])?;
        let closed_form =
            std::f64::consts::FRAC_PI_4 * q.iter().cloned().fold(f64::INFINITY, f64::min);
        let rel_error = (oracle - closed_form).abs() / closed_form;
        max_rel = max_rel.max(rel_error);
        rows.push(KernelCheckRow {
            r: q,
            oracle,
            closed_form,
            rel_error,
        });
    }
    let passed = max_rel <= 0.01;
    let data = KernelCheckData {
        seed: config.seed,
        quadruples: rows.len(),
        tolerance_rel: 0.01,
        max_rel_error: max_rel,
        passed,
        rows,
    };
    eprintln!(
        "[{}] kernel quadrature: {} quadruples, worst relative error {:.3e}",
        if passed { "PASS" } else { "FAIL" },
        data.quadruples,
        max_rel
    );
    print!("{}", report_document("kernel-check", KERNEL_DEFINITIONS, &data)?);
    Ok(if passed { 0 } else { EXIT_VALIDATION })
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SpreadSection {
    cadence: f64,
    digamma2_measure: f64,
    digamma2_count: usize,
    digamma_star_measure: f64,
    digamma_star_count: usize,
    pumped_integral: f64,
    structural_factor: f64,
    bound_ratio: f64,
    structural_factor_sliding: f64,
    sliding_bound_ratio: f64,
    mass_floor: f64,
    mass_bound_holds: bool,
}

impl From<&TimeMeasureReport> for SpreadSection {
    fn from(r: &TimeMeasureReport) -> Self {
        SpreadSection {
            cadence: r.cadence,
            digamma2_measure: r.digamma2_measure,
            digamma2_count: r.digamma2_members.iter().filter(|&&b| b).count(),
            digamma_star_measure: r.digamma_star_measure,
            digamma_star_count: r.digamma_star_members.iter().filter(|&&b| b).count(),
            pumped_integral: r.pumped_integral,
            structural_factor: r.structural_factor,
            bound_ratio: r.bound_ratio,
            structural_factor_sliding: r.structural_factor_sliding,
            sliding_bound_ratio: r.sliding_bound_ratio,
            mass_floor: r.mass_floor,
            mass_bound_holds: r.mass_bound_holds,
        }
    }
}

#[derive(Serialize)]
struct GrowthSection {
    n: u32,
    m0: u32,
    l_n: f64,
    h_n: f64,
    gamma_reference: f64,
    s_measure: f64,
    u_measure: f64,
    v_measure: f64,
    w_measure: f64,
    s_count: usize,
    v_count: usize,
    w_count: usize,
}

impl From<&GrowthSetReport> for GrowthSection {
    fn from(r: &GrowthSetReport) -> Self {
        GrowthSection {
            n: r.n,
            m0: r.m0,
            l_n: r.l_n,
            h_n: r.h_n,
            gamma_reference: r.gamma_reference,
            s_measure: r.s_measure,
            u_measure: r.u_measure,
            v_measure: r.v_measure,
            w_measure: r.w_measure,
            s_count: r.s_members.iter().filter(|&&b| b).count(),
            v_count: r.v_members.iter().filter(|&&b| b).count(),
            w_count: r.w_members.iter().filter(|&&b| b).count(),
        }
    }
}

#[derive(Serialize)]
struct SupersolutionSection {
    n: u32,
    l_n: f64,
    t1: f64,
    t1_crossed: bool,
    min_residual: f64,
    residual_tol: f64,
    checked: usize,
    skipped: usize,
    max_rho: f64,
    bounds_ok: bool,
    lower_ok: bool,
    support_ok: bool,
    monotone_ok: bool,
    convex_ok: bool,
    passed: bool,
}

#[derive(Serialize)]
struct CondensationSection {
    t0_hat: Option<f64>,
    c_f: f64,
    varsigma: f64,
    n_lo: u32,
    n_hi: u32,
}

#[derive(Serialize)]
struct DiagnoseData {
    samples: usize,
    t_final: f64,
    spread: SpreadSection,
    growth: Vec<GrowthSection>,
    notices: Vec<String>,
    supersolution: Option<SupersolutionSection>,
    condensation: CondensationSection,
    onset_bound: CondensationBoundReport,
}

const DIAGNOSE_DEFINITIONS: &[(&str, &str)] = &[
    ("samples", "number of snapshots in the trajectory"),
    ("t_final", "time of the last snapshot"),
    ("spread.cadence", "uniform sample spacing the measures are weighted with"),
    ("spread.digamma2_measure", "time measure of the overlapping-window spread set (every window below (1-nu) of total mass, no condensate)"),
    ("spread.digamma2_count", "number of member samples of the overlapping-window spread set"),
    ("spread.digamma_star_measure", "time measure of the sliding-window spread set over [0, m*r_frak)"),
    ("spread.digamma_star_count", "number of member samples of the sliding-window spread set"),
    ("spread.pumped_integral", "integral over the overlapping-window spread set of (mass in [0, r_upper)) cubed"),
    ("spread.structural_factor", "R^(2+2/alpha) (mass+energy) / (h^2 mho(h) nu^4) at the decomposition parameters"),
    ("spread.bound_ratio", "pumped integral divided by the structural factor (universal constant factored out)"),
    ("spread.structural_factor_sliding", "structural factor at the sliding-window parameters (R, h, nu) = (m*r_frak, m*r_frak/N, theta)"),
    ("spread.sliding_bound_ratio", "sliding-window measure times mass-floor cubed over the sliding structural factor"),
    ("spread.mass_floor", "(m-1)/m times the initial mass inside [0, r_frak)"),
    ("spread.mass_bound_holds", "whether mass in [0, m*r_frak) stayed above the floor at every sample"),
    ("growth", "per-scale growth-set measures (scales from n_range that resolve on the grid)"),
    ("growth[].n", "dyadic scale index; the origin window is [0, 2^-n)"),
    ("growth[].m0", "refinement level: the window splits into 2^m0 subwindows"),
    ("growth[].l_n", "origin window width 2^-n"),
    ("growth[].h_n", "subwindow width 2^-n / 2^m0"),
    ("growth[].gamma_reference", "l_n to the power gamma(varsigma), the scaling reference for measures"),
    ("growth[].s_measure", "time measure of the threshold set (origin-window mass above c_f * l_n^varsigma)"),
    ("growth[].u_measure", "measure of threshold times in no overlapping subwindow set"),
    ("growth[].v_measure", "measure of times concentrating in the far subwindows (the pumped regime)"),
    ("growth[].w_measure", "measure of times concentrating in the near subwindows"),
    ("growth[].s_count", "member samples of the threshold set"),
    ("growth[].v_count", "member samples of the far-subwindow set"),
    ("growth[].w_count", "member samples of the near-subwindow set"),
    ("notices", "scales skipped as unresolvable, and other analysis notes"),
    ("supersolution.n", "scale the transport barrier was built at"),
    ("supersolution.l_n", "origin window width at that scale"),
    ("supersolution.t1", "first time the cumulative kernel mass crosses the transport threshold"),
    ("supersolution.t1_crossed", "whether the threshold was crossed within the trajectory"),
    ("supersolution.min_residual", "most negative barrier-inequality residual over the guarded grid"),
    ("supersolution.residual_tol", "admissible negative residual (finite-difference tolerance)"),
    ("supersolution.checked", "number of residual evaluations"),
    ("supersolution.skipped", "evaluations skipped near the profile kink"),
    ("supersolution.max_rho", "maximum of the barrier profile"),
    ("supersolution.bounds_ok", "barrier stayed within [0, 0.2]"),
    ("supersolution.lower_ok", "barrier at least 0.05 on the innermost window"),
    ("supersolution.support_ok", "barrier vanished beyond a tenth of the origin window"),
    ("supersolution.monotone_ok", "barrier non-increasing in the space variable"),
    ("supersolution.convex_ok", "barrier convexity dominated the required multiple of itself"),
    ("supersolution.passed", "all barrier checks held"),
    ("condensation.t0_hat", "first recorded time the dyadic concentration inequality held at every checked scale (null if never)"),
    ("condensation.c_f", "detector threshold constant"),
    ("condensation.varsigma", "detector concentration exponent"),
    ("condensation.n_lo", "coarsest checked dyadic scale"),
    ("condensation.n_hi", "finest checked dyadic scale"),
    ("onset_bound.gamma", "scaling exponent gamma(varsigma) from the growth parameters"),
    ("onset_bound.varsigma", "concentration exponent the bound was evaluated at"),
    ("onset_bound.rows", "one row per initial-concentration scale"),
    ("onset_bound.rows[].n0", "initial concentration scale index"),
    ("onset_bound.rows[].bound_scale", "reference bound scale 2^(-n0*gamma)"),
    ("onset_bound.rows[].t0_hat", "measured onset time at that scale (null if not detected)"),
    ("onset_bound.rows[].ratio", "onset time divided by the bound scale (universal constant factored out)"),
    ("onset_bound.trend_ok", "measured onset times non-increasing in n0"),
];

fn cmd_diagnose(trajectory_path: &Path, config_path: &Path) -> Result<u8> {
    let config = parse_config(config_path)?;
    let grid = config.grid()?;
    let model = config.model()?;
    let d = &config.diagnostics;
    let trajectory =
        kinetic_core::io::read_spectrum_series(trajectory_path, grid, d.n_range)?;
    eprintln!(
        "loaded {} samples to t = {}",
        trajectory.samples.len(),
        trajectory.samples.last().map(|s| s.t).unwrap_or(0.0)
    );

    let spec = config.decomposition()?;
    let measures = accumulate_time_measures(
        &trajectory,
        &spec,
        &model,
        d.nu,
        d.sliding_windows,
        d.theta,
        d.m,
        d.r_frak,
    )?;

    let params = config.growth_params()?;
    let mut growth_reports: Vec<GrowthSetReport> = Vec::new();
    let mut notices = Vec::new();
    for n in d.n_range.0..=d.n_range.1 {
        match growth_set_measures(&trajectory, &params, n) {
            Ok(r) => growth_reports.push(r),
            Err(e) => notices.push(format!("scale n={n} skipped: {e}")),
        }
    }

    // The transport barrier needs a scale whose far-subwindow set has
    // positive measure and whose subwindows span several grid cells.
    let mut supersolution = None;
    for r in &growth_reports {
        if r.v_measure > 0.0 && r.h_n >= 4.0 * grid.h_grid * (1.0 - 1e-12) {
            let mu = build_mu(&trajectory, &model, &params, r, config.collision.scale)?;
            let artifacts = build_supersolution(&mu, r.n);
            let check = verify_supersolution(&artifacts, &mu, 64);
            supersolution = Some(SupersolutionSection {
                n: r.n,
                l_n: artifacts.l_n,
                t1: artifacts.t1,
                t1_crossed: mu.t1_crossed,
                min_residual: check.min_residual,
                residual_tol: check.tol,
                checked: check.checked,
                skipped: check.skipped,
                max_rho: check.max_rho,
                bounds_ok: check.bounds_ok,
                lower_ok: check.lower_ok,
                support_ok: check.support_ok,
                monotone_ok: check.monotone_ok,
                convex_ok: check.convex_ok,
                passed: check.passed,
            });
            break;
        }
    }
    if supersolution.is_none() {
        notices.push(
            "no scale with positive far-subwindow measure and subwindows spanning >= 4 grid \
             cells; supersolution section omitted"
                .to_string(),
        );
    }

    let (det_c_f, det_varsigma, det_range) = match &config.detector {
        Some(det) => (det.c_f, det.varsigma, (det.n_lo, det.n_hi)),
        None => (d.c_f, d.varsigma, d.n_range),
    };
    let t0_hat = detect_condensation(&trajectory, det_c_f, det_varsigma, det_range)?;
    let onset_bound = condensation_bound_report(&params, &[(d.n0, t0_hat)])?;

    let data = DiagnoseData {
        samples: trajectory.samples.len(),
        t_final: trajectory.samples.last().map(|s| s.t).unwrap_or(0.0),
        spread: SpreadSection::from(&measures),
        growth: growth_reports.iter().map(GrowthSection::from).collect(),
        notices,
        supersolution,
        condensation: CondensationSection {
            t0_hat,
            c_f: det_c_f,
            varsigma: det_varsigma,
            n_lo: det_range.0,
            n_hi: det_range.1,
        },
        onset_bound,
    };
    print!(
        "{}",
        report_document("trajectory-diagnostics", DIAGNOSE_DEFINITIONS, &data)?
    );
    Ok(0)
}
