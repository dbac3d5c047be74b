//! Radial dispersion relation ω(|k|) and the derived weight ℧.
//!
//! The solver works on isotropic states in ℝ³, reduced to one dimension via
//! the frequency variable. Everything downstream needs three ingredients:
//!
//! ```text
//! ω(r)      the dispersion relation, strictly increasing and convex in r=|k|
//! r(ω)      its inverse
//! ℧(ω)      the Jacobian weight |k| / ω'(|k|), nondecreasing in ω
//! ```
//!
//! Two forms are supported. The analytic power law ω(r) = C·r^α with
//! 1 < α ≤ 2 (for which ℧ = (ω/C)^{(2−α)/α}/(αC), a constant 1/(2C) when
//! α = 2), and a tabulated form interpolated by a monotone piecewise cubic
//! with ℧ recovered from a centered finite difference of ω(r).
//!
//! A model also carries the structural constants (α', β, ι and the four
//! C-constants) that bound ω and ℧ from above and below. Those inequalities
//! are not assumed: [`DispersionModel::validate_assumptions`] samples them on
//! a log-spaced grid and reports every violation with its worst margin.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Number of log-spaced validation samples (covers both the small-ω regime
/// and large-ω growth).
pub const VALIDATION_SAMPLES: usize = 256;
/// Validation sample range in r (log-spaced).
pub const VALIDATION_RANGE: (f64, f64) = (1e-8, 1e4);

/// Functional form of the dispersion relation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum DispersionForm {
    /// ω(r) = C·r^α, inverted analytically.
    PowerLaw,
    /// Monotone convex samples (r_i, ω_i), interpolated by a monotone
    /// piecewise cubic; inverted by bisection on the interpolant.
    Table {
        /// Strictly increasing wavenumber knots, starting at r=0.
        r: Vec<f64>,
        /// Frequency samples at the knots, ω(0)=0.
        omega: Vec<f64>,
    },
}

/// Dispersion relation plus the structural constants of its growth bounds.
///
/// The constants encode the assumption set
///
/// ```text
/// ω(r) ≥ C_ω·r^α        for all r            (lower power bound)
/// ω(r) ≤ C'_ω·r^{α'}    for r < 1            (upper power bound near 0)
/// ℧(ω) ≥ Č_℧·ω^β        for 0 ≤ ω < 1        (lower weight bound)
/// ℧    ≤ C¹_℧·r^ι                            (upper weight bound)
/// ```
///
/// with 1 < α ≤ 2, 1 ≤ α' ≤ α, 0 ≤ β ≤ (2−α)/α, 0 ≤ ι ≤ 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionModel {
    /// Lower power-bound exponent; for the power-law form, the exact exponent.
    pub alpha: f64,
    /// Lower power-bound constant; for the power-law form, the coefficient C.
    pub c_omega: f64,
    /// Upper power-bound exponent (defaults to α).
    pub alpha_prime: f64,
    /// Upper power-bound constant (defaults to C_ω).
    pub c_omega_prime: f64,
    /// Lower weight-bound exponent (defaults to (2−α)/α).
    pub beta: f64,
    /// Lower weight-bound constant Č_℧.
    pub c_mho_check: f64,
    /// Upper weight-bound constant C¹_℧.
    pub c_mho_1: f64,
    /// Upper weight-bound exponent ι (defaults to 2−α).
    pub iota: f64,
    /// Analytic or tabulated form.
    pub form: DispersionForm,
    /// Monotone-cubic tangents for the tabulated form (built on construction).
    #[serde(skip)]
    tangents: Vec<f64>,
}

/// Outcome of checking one structural inequality on the sample grid.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    /// Which inequality was checked.
    pub name: String,
    /// True iff no sample violated it.
    pub passed: bool,
    /// Worst signed margin (≥ 0 means satisfied) over all samples.
    pub worst_margin: f64,
    /// First violating sample (abscissa, lhs, rhs), if any.
    pub first_violation: Option<(f64, f64, f64)>,
}

/// Full validation report: parameter-window checks plus sampled inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// True iff every check passed.
    pub passed: bool,
    /// Individual check outcomes.
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    /// Collects the names of failed checks.
    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect()
    }
}

impl DispersionModel {
    /// Builds a power-law model ω(r) = C·r^α with all structural constants
    /// derived so the bounds hold with equality:
    /// α' = α, C_ω = C'_ω = C, β = (2−α)/α, Č_℧ = C^{−(β+1)}/α,
    /// ι = 2−α, C¹_℧ = 1/(αC).
    pub fn power_law(alpha: f64, c: f64) -> Result<Self> {
        let mut violations = Vec::new();
        if !(alpha > 1.0 && alpha <= 2.0) {
            violations.push(format!(
                "alpha must lie in (1, 2] (convex dispersion window), got {alpha}"
            ));
        }
        if !(c > 0.0) {
            violations.push(format!("dispersion coefficient must be positive, got {c}"));
        }
        if !violations.is_empty() {
            return Err(Error::Config(violations));
        }
        let beta = (2.0 - alpha) / alpha;
        Ok(DispersionModel {
            alpha,
            c_omega: c,
            alpha_prime: alpha,
            c_omega_prime: c,
            beta,
            c_mho_check: c.powf(-(beta + 1.0)) / alpha,
            c_mho_1: 1.0 / (alpha * c),
            iota: 2.0 - alpha,
            form: DispersionForm::PowerLaw,
            tangents: Vec::new(),
        })
    }

    /// Builds a tabulated model from samples of a monotone convex dispersion.
    ///
    /// The samples must start at (0, 0) and be strictly increasing in both
    /// coordinates; violations are reported by `validate_assumptions`, not
    /// here, except for structural impossibilities (too few knots, mismatched
    /// lengths, non-finite entries) which are configuration errors.
    #[allow(clippy::too_many_arguments)] // mirrors the configuration fields
    pub fn tabulated(
        alpha: f64,
        c_omega: f64,
        alpha_prime: f64,
        c_omega_prime: f64,
        beta: f64,
        c_mho_check: f64,
        c_mho_1: f64,
        iota: f64,
        r: Vec<f64>,
        omega: Vec<f64>,
    ) -> Result<Self> {
        let mut violations = Vec::new();
        if r.len() != omega.len() {
            violations.push(format!(
                "table lengths differ: {} wavenumbers vs {} frequencies",
                r.len(),
                omega.len()
            ));
        }
        if r.len() < 4 {
            violations.push(format!("table needs at least 4 knots, got {}", r.len()));
        }
        if r.iter().chain(omega.iter()).any(|v| !v.is_finite()) {
            violations.push("table entries must be finite".to_string());
        }
        if let (Some(&r0), Some(&w0)) = (r.first(), omega.first()) {
            if r0 != 0.0 || w0 != 0.0 {
                violations.push(format!(
                    "table must start at the origin (r=0, omega=0), got ({r0}, {w0})"
                ));
            }
        }
        if !violations.is_empty() {
            return Err(Error::Config(violations));
        }
        let tangents = monotone_cubic_tangents(&r, &omega);
        Ok(DispersionModel {
            alpha,
            c_omega,
            alpha_prime,
            c_omega_prime,
            beta,
            c_mho_check,
            c_mho_1,
            iota,
            form: DispersionForm::Table { r, omega },
            tangents,
        })
    }

    /// ω(r): evaluates the dispersion relation at wavenumber magnitude r ≥ 0.
    pub fn omega_of_k(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!(
                "wavenumber magnitude must be nonnegative, got {r}"
            )));
        }
        match &self.form {
            DispersionForm::PowerLaw => Ok(self.c_omega * r.powf(self.alpha)),
            DispersionForm::Table { r: rs, omega } => {
                let last = *rs.last().expect("table non-empty");
                if r > last {
                    return Err(Error::Range(format!(
                        "wavenumber {r} beyond tabulated range [0, {last}]"
                    )));
                }
                Ok(hermite_eval(rs, omega, &self.tangents, r))
            }
        }
    }

    /// r(ω): inverts the dispersion relation. Power-law analytically,
    /// tabulated by monotone bisection on the interpolant.
    pub fn k_of_omega(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!(
                "frequency must be nonnegative, got {omega}"
            )));
        }
        match &self.form {
            DispersionForm::PowerLaw => Ok((omega / self.c_omega).powf(1.0 / self.alpha)),
            DispersionForm::Table { r: rs, omega: ws } => {
                let w_last = *ws.last().expect("table non-empty");
                if omega > w_last {
                    return Err(Error::Range(format!(
                        "frequency {omega} beyond tabulated range [0, {w_last}]"
                    )));
                }
                if omega == 0.0 {
                    return Ok(0.0);
                }
                // Bisection: the interpolant is monotone for monotone data.
                let (mut lo, mut hi) = (0.0, *rs.last().unwrap());
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if hermite_eval(rs, ws, &self.tangents, mid) < omega {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi.max(1.0) {
                        break;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// ℧(ω) = |k|/ω'(|k|) evaluated at the wavenumber r(ω).
    ///
    /// Power law: (ω/C)^{(2−α)/α}/(αC), exactly constant 1/(2C) at α = 2.
    /// Tabulated: centered finite difference of ω(r) with step
    /// 1e−6·max(r, 1); queries beyond the last knot extrapolate the last
    /// value (℧ is nondecreasing and capped by C¹·r^ι, so the constant
    /// extension is the conservative choice), and ω = 0 evaluates at the
    /// finite-difference step instead of the removable 0/0 at the origin.
    pub fn mho(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!(
                "frequency must be nonnegative, got {omega}"
            )));
        }
        match &self.form {
            DispersionForm::PowerLaw => {
                let exponent = (2.0 - self.alpha) / self.alpha;
                Ok((omega / self.c_omega).powf(exponent) / (self.alpha * self.c_omega))
            }
            DispersionForm::Table { r: rs, omega: ws } => {
                let w_last = *ws.last().expect("table non-empty");
                let r_last = *rs.last().unwrap();
                let r = if omega >= w_last {
                    r_last
                } else {
                    self.k_of_omega(omega)?
                };
                let h = 1e-6 * r.max(1.0);
                // Keep the centered stencil inside the table.
                let r0 = r.clamp(h, r_last - h);
                let w_plus = hermite_eval(rs, ws, &self.tangents, r0 + h);
                let w_minus = hermite_eval(rs, ws, &self.tangents, r0 - h);
                let slope = (w_plus - w_minus) / (2.0 * h);
                if slope <= 0.0 {
                    return Err(Error::State(format!(
                        "non-increasing tabulated dispersion near r={r0}"
                    )));
                }
                Ok(r0 / slope)
            }
        }
    }

    /// w(ω) = |k|·℧, the weight relating the 1-D density to the phase-space
    /// density: F = f·w. Vanishes at ω = 0.
    pub fn f_f_weight(&self, omega: f64) -> Result<f64> {
        if omega == 0.0 {
            return Ok(0.0);
        }
        Ok(self.k_of_omega(omega)? * self.mho(omega)?)
    }

    /// Checks the parameter windows and samples every structural inequality
    /// on `sample_count` log-spaced points, reporting each check's worst
    /// margin and first violation. Never panics on bad data: a non-monotone
    /// table is a failed check, not an exception.
    pub fn validate_assumptions(&self, sample_count: usize) -> Result<ValidationReport> {
        if sample_count < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 validation samples, got {sample_count}"
            )));
        }
        let mut checks = Vec::new();

        // Parameter windows.
        let beta_cap = (2.0 - self.alpha) / self.alpha;
        checks.push(window_check(
            "exponent-range alpha in (1,2]",
            self.alpha > 1.0 && self.alpha <= 2.0,
            (self.alpha - 1.0).min(2.0 - self.alpha),
        ));
        checks.push(window_check(
            "exponent-range alpha' in [1, alpha]",
            self.alpha_prime >= 1.0 && self.alpha_prime <= self.alpha,
            (self.alpha_prime - 1.0).min(self.alpha - self.alpha_prime),
        ));
        checks.push(window_check(
            &format!("exponent-range beta in [0, (2-alpha)/alpha] = [0, {beta_cap}]"),
            self.beta >= 0.0 && self.beta <= beta_cap,
            self.beta.min(beta_cap - self.beta),
        ));
        checks.push(window_check(
            "exponent-range iota in [0, 1]",
            (0.0..=1.0).contains(&self.iota),
            self.iota.min(1.0 - self.iota),
        ));
        checks.push(window_check(
            "positive constants C_omega, C'_omega",
            self.c_omega > 0.0 && self.c_omega_prime > 0.0,
            self.c_omega.min(self.c_omega_prime),
        ));

        // Sampled range. A table asserts its dispersion only at resolved
        // scales, so sampling is restricted to its interior knot span
        // [r_1, r_{n-2}]: below the first knot the interpolant is linear by
        // construction and above the second-to-last knot the one-sided end
        // tangent distorts curvature, neither of which says anything about
        // the tabulated physics.
        let (mut r_lo, mut r_hi) = VALIDATION_RANGE;
        if let DispersionForm::Table { r, .. } = &self.form {
            r_lo = r_lo.max(r[1]);
            r_hi = r_hi.min(r[r.len() - 2]).max(r_lo * (1.0 + 1e-12));
        }
        let samples: Vec<f64> = (0..sample_count)
            .map(|i| {
                let t = i as f64 / (sample_count - 1) as f64;
                r_lo * (r_hi / r_lo).powf(t)
            })
            .collect();

        // Evaluate ω and ℧ once per sample; evaluation failures fail validation.
        let mut rows = Vec::with_capacity(samples.len());
        for &r in &samples {
            let w = self.omega_of_k(r);
            let m = w.as_ref().ok().and_then(|&w| self.mho(w).ok());
            match (w, m) {
                (Ok(w), Some(m)) => rows.push((r, w, m)),
                _ => {
                    checks.push(window_check("dispersion evaluable on samples", false, -1.0));
                    break;
                }
            }
        }

        checks.push(sample_check(
            "omega strictly increasing in |k|",
            rows.windows(2).map(|p| (p[0].0, p[1].1 - p[0].1, 0.0)),
            true,
        ));
        // Convexity via nondecreasing secant slopes between consecutive samples.
        checks.push(sample_check(
            "omega convex in |k|",
            rows.windows(3).map(|p| {
                let s01 = (p[1].1 - p[0].1) / (p[1].0 - p[0].0);
                let s12 = (p[2].1 - p[1].1) / (p[2].0 - p[1].0);
                (p[0].0, s12 - s01, -1e-12 * s01.abs())
            }),
            false,
        ));
        // Tolerance reflects that the tabulated ℧ comes from a centered
        // finite difference: when the stencil straddles a knot the
        // interpolant's curvature jump induces a relative slope error of
        // order the FD step (~1e-6), so anything smaller is method noise,
        // not physical non-monotonicity.
        checks.push(sample_check(
            "mho nondecreasing in omega",
            rows.windows(2)
                .map(|p| (p[0].0, p[1].2 - p[0].2, -1e-5 * p[0].2.abs().max(1e-300))),
            false,
        ));
        checks.push(sample_check(
            "omega lower power bound (>= C_omega r^alpha)",
            rows.iter()
                .map(|&(r, w, _)| (r, w - self.c_omega * r.powf(self.alpha), -1e-12 * w)),
            false,
        ));
        checks.push(sample_check(
            "omega upper power bound near 0 (<= C'_omega r^alpha' for r<1)",
            rows.iter().filter(|&&(r, _, _)| r < 1.0).map(|&(r, w, _)| {
                let cap = self.c_omega_prime * r.powf(self.alpha_prime);
                (r, cap - w, -1e-12 * cap)
            }),
            false,
        ));
        checks.push(sample_check(
            "mho lower bound for small omega (>= C_mho_check omega^beta)",
            rows.iter().filter(|&&(_, w, _)| w < 1.0).map(|&(r, w, m)| {
                (r, m - self.c_mho_check * w.powf(self.beta), -1e-12 * m.abs())
            }),
            false,
        ));
        checks.push(sample_check(
            "mho upper bound (<= C_mho_1 r^iota)",
            rows.iter().map(|&(r, _, m)| {
                let cap = self.c_mho_1 * r.powf(self.iota);
                (r, cap - m, -1e-12 * cap)
            }),
            false,
        ));

        Ok(ValidationReport {
            passed: checks.iter().all(|c| c.passed),
            checks,
        })
    }
}

fn window_check(name: &str, passed: bool, margin: f64) -> AssumptionCheck {
    AssumptionCheck {
        name: name.to_string(),
        passed,
        worst_margin: margin,
        first_violation: None,
    }
}

/// Folds (abscissa, margin, tolerance) rows into a check; `strict` requires
/// margin > 0, otherwise margin ≥ tolerance (a small negative slack).
fn sample_check(
    name: &str,
    rows: impl Iterator<Item = (f64, f64, f64)>,
    strict: bool,
) -> AssumptionCheck {
    let mut worst = f64::INFINITY;
    let mut first_violation = None;
    for (x, margin, tol) in rows {
        if margin < worst {
            worst = margin;
        }
        let ok = if strict { margin > 0.0 } else { margin >= tol };
        if !ok && first_violation.is_none() {
            first_violation = Some((x, margin, tol));
        }
    }
    AssumptionCheck {
        name: name.to_string(),
        passed: first_violation.is_none(),
        worst_margin: if worst.is_finite() { worst } else { 0.0 },
        first_violation,
    }
}

/// Fritsch–Carlson tangents for a monotone piecewise-cubic Hermite
/// interpolant. Produces a monotone interpolant for monotone data and a
/// well-defined (if non-monotone) curve otherwise, which validation then
/// rejects.
fn monotone_cubic_tangents(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n - 1]; // secant slopes
    for i in 0..n - 1 {
        d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    }
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 {
            0.0
        } else {
            0.5 * (d[i - 1] + d[i])
        };
    }
    // Limit tangents so each cubic piece stays monotone.
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
        } else {
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[i] = tau * a * d[i];
                m[i + 1] = tau * b * d[i];
            }
        }
    }
    m
}

/// Evaluates the cubic Hermite interpolant at `xq` (clamped to the knot span).
fn hermite_eval(x: &[f64], y: &[f64], m: &[f64], xq: f64) -> f64 {
    let n = x.len();
    if xq <= x[0] {
        return y[0];
    }
    if xq >= x[n - 1] {
        return y[n - 1];
    }
    // Binary search for the containing interval.
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x[mid] <= xq {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let hseg = x[lo + 1] - x[lo];
    let t = (xq - x[lo]) / hseg;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y[lo] + h10 * hseg * m[lo] + h01 * y[lo + 1] + h11 * hseg * m[lo + 1]
}
