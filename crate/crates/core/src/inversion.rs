//! Extraction of squared matrix elements from measured zero locations.
//!
//! The unknown strengths are fitted in log space (`θ = ln(v / v₀)`) so they
//! stay positive. Square problems reduce to a damped Newton iteration on the
//! zero residuals; overdetermined ones are solved as weighted least squares
//! with Levenberg-Marquardt damping. Covariances are first-order: the
//! statistical part comes from the measurement widths, the systematic parts
//! from the fiducial levels and from the remaining known levels plus tail.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::amplitude::partial_static_polarizability;
use crate::atomic_data::{AtomicSystem, LevelKey, TailEstimate};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::units::sum_from_atomic_units;
use crate::zeros::{gaps, unique_root_in_gap, Gap, SolverConfig};

/// Relative step of the central finite differences.
pub const FD_STEP: f64 = 1e-6;

const RANK_TOL: f64 = 1e-10;
const STEP_CONVERGED: f64 = 1e-12;
const MAX_LOG_STEP: f64 = 1.0;

/// A set of levels whose strengths move together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Level(LevelKey),
    /// Every loaded component of multiplet `n`, scaled by a common factor.
    Multiplet(u32),
}

impl Target {
    pub fn covers(&self, key: LevelKey) -> bool {
        match self {
            Target::Level(k) => *k == key,
            Target::Multiplet(n) => key.n == *n,
        }
    }

    pub fn multiplet(&self) -> u32 {
        match self {
            Target::Level(k) => k.n,
            Target::Multiplet(n) => *n,
        }
    }

    /// Sum of the covered `m_sq`, a₀².
    pub fn value_in(&self, system: &AtomicSystem) -> f64 {
        system
            .levels()
            .iter()
            .filter(|l| self.covers(l.key))
            .map(|l| l.m_sq)
            .sum()
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Level(k) => write!(f, "{k}"),
            Target::Multiplet(n) => write!(f, "{n}p"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    /// `7p3/2` names one level, `3p` a whole multiplet.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(n) = t.strip_suffix('p').or_else(|| t.strip_suffix('P')) {
            let n: u32 = n.parse().map_err(|_| Error::KeySyntax(s.to_string()))?;
            if n < 2 {
                return Err(Error::KeySyntax(s.to_string()));
            }
            return Ok(Target::Multiplet(n));
        }
        Ok(Target::Level(t.parse()?))
    }
}

/// Adjacent poles enclosing a zero; `lower = None` means the interval (0, upper).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: Option<LevelKey>,
    pub upper: LevelKey,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredZero {
    pub omega_zero: f64,
    pub sigma_omega: f64,
    pub bracket: Bracket,
}

impl MeasuredZero {
    pub fn new(omega_zero: f64, sigma_omega: f64, bracket: Bracket) -> Result<Self> {
        if !(omega_zero > 0.0 && omega_zero.is_finite()) {
            return Err(Error::NonPositive {
                what: "measured zero frequency",
                value: omega_zero,
            });
        }
        if !(sigma_omega > 0.0 && sigma_omega.is_finite()) {
            return Err(Error::NonPositive {
                what: "measurement uncertainty",
                value: sigma_omega,
            });
        }
        Ok(MeasuredZero {
            omega_zero,
            sigma_omega,
            bracket,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionProblem {
    system: AtomicSystem,
    unknowns: Vec<Target>,
    fiducials: Vec<Target>,
    measurements: Vec<MeasuredZero>,
    gaps: Vec<Gap>,
    initial: Vec<f64>,
}

impl InversionProblem {
    /// Validates the problem. The strengths currently stored in `system` for
    /// the unknowns serve as the starting point of the fit.
    pub fn new(
        system: AtomicSystem,
        unknowns: Vec<Target>,
        fiducials: Vec<Target>,
        measurements: Vec<MeasuredZero>,
    ) -> Result<Self> {
        if unknowns.is_empty() {
            return Err(Error::InvalidProblem("no unknowns given".into()));
        }
        for t in unknowns.iter().chain(&fiducials) {
            if !system.levels().iter().any(|l| t.covers(l.key)) {
                return Err(Error::InvalidProblem(format!("{t} matches no loaded level")));
            }
        }
        for (i, a) in unknowns.iter().chain(&fiducials).enumerate() {
            for b in unknowns.iter().chain(&fiducials).skip(i + 1) {
                if system
                    .levels()
                    .iter()
                    .any(|l| a.covers(l.key) && b.covers(l.key))
                {
                    return Err(Error::InvalidProblem(format!("{a} and {b} overlap")));
                }
            }
        }
        if measurements.len() < unknowns.len() {
            return Err(Error::RankDeficient(format!(
                "{} measurements cannot determine {} unknowns",
                measurements.len(),
                unknowns.len()
            )));
        }
        let all_gaps = gaps(&system);
        let mut resolved = Vec::with_capacity(measurements.len());
        for m in &measurements {
            let upper = system.pole_of(m.bracket.upper)?;
            let lower = match m.bracket.lower {
                Some(k) => Some(system.pole_of(k)?),
                None => None,
            };
            let adjacent = match lower {
                Some(l) => l + 1 == upper,
                None => upper == 0,
            };
            if !adjacent {
                return Err(Error::InvalidProblem(format!(
                    "bracket below {} does not span adjacent poles",
                    m.bracket.upper
                )));
            }
            if !(m.omega_zero > all_gaps[upper].lo && m.omega_zero < all_gaps[upper].hi) {
                return Err(Error::InvalidProblem(format!(
                    "measured zero {} lies outside its bracket",
                    m.omega_zero
                )));
            }
            resolved.push(all_gaps[upper]);
        }
        for t in &unknowns {
            let n = t.multiplet();
            let constrained = measurements.iter().any(|m| {
                m.bracket.upper.n == n || m.bracket.lower.is_some_and(|k| k.n == n)
            });
            if !constrained {
                return Err(Error::RankDeficient(format!(
                    "{t} is not bracketed by any measured zero"
                )));
            }
        }
        let initial = unknowns.iter().map(|t| t.value_in(&system)).collect();
        Ok(InversionProblem {
            system,
            unknowns,
            fiducials,
            measurements,
            gaps: resolved,
            initial,
        })
    }

    pub fn system(&self) -> &AtomicSystem {
        &self.system
    }

    pub fn unknowns(&self) -> &[Target] {
        &self.unknowns
    }

    pub fn fiducials(&self) -> &[Target] {
        &self.fiducials
    }

    pub fn measurements(&self) -> &[MeasuredZero] {
        &self.measurements
    }

    /// Starting values of the unknowns, a₀².
    pub fn initial_values(&self) -> &[f64] {
        &self.initial
    }

    fn is_free(&self, key: LevelKey) -> bool {
        self.unknowns.iter().any(|t| t.covers(key))
    }

    fn is_fiducial(&self, key: LevelKey) -> bool {
        self.fiducials.iter().any(|t| t.covers(key))
    }

    /// Levels that are neither fitted nor fiducial.
    pub fn remote_levels(&self) -> Vec<LevelKey> {
        self.system
            .levels()
            .iter()
            .map(|l| l.key)
            .filter(|&k| !self.is_free(k) && !self.is_fiducial(k))
            .collect()
    }

    /// The system with unknown `k` rescaled to total strength `values[k]`.
    pub fn system_with(&self, values: &[f64]) -> Result<AtomicSystem> {
        if values.len() != self.unknowns.len() {
            return Err(Error::InvalidProblem(format!(
                "expected {} values, got {}",
                self.unknowns.len(),
                values.len()
            )));
        }
        for &v in values {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositive {
                    what: "candidate strength",
                    value: v,
                });
            }
        }
        self.system.map_strengths(|level| {
            match self.unknowns.iter().position(|t| t.covers(level.key)) {
                Some(k) => level.m_sq * (values[k] / self.initial[k]),
                None => level.m_sq,
            }
        })
    }

    fn with_system(&self, system: AtomicSystem) -> Self {
        InversionProblem {
            system,
            ..self.clone()
        }
    }
}

/// Predicted zero location for every measurement's bracket.
pub fn forward_zeros(
    problem: &InversionProblem,
    values: &[f64],
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let system = problem.system_with(values)?;
    predict(&system, &problem.gaps, config)
}

fn predict(system: &AtomicSystem, gaps: &[Gap], config: &SolverConfig) -> Result<Vec<f64>> {
    gaps.iter()
        .map(|gap| unique_root_in_gap(system, gap, config))
        .collect()
}

/// Source of a systematic uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Systematic {
    Fiducial(LevelKey),
    Remote(LevelKey),
    Tail,
}

impl fmt::Display for Systematic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Systematic::Fiducial(k) => write!(f, "fiducial {k}"),
            Systematic::Remote(k) => write!(f, "remote {k}"),
            Systematic::Tail => f.write_str("tail"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub source: Systematic,
    /// Relative uncertainty assigned to the source.
    pub rel_unc: f64,
    /// `∂ ln v_k / ∂ ln(source)` for each unknown `k`.
    pub d_ln_value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    pub targets: Vec<Target>,
    /// Fitted strengths, a₀².
    pub values: Vec<f64>,
    /// From the measurement widths, a₀⁴.
    pub covariance_stat: Matrix,
    /// From the fiducial levels' uncertainties, a₀⁴.
    pub covariance_fiducial: Matrix,
    /// From the remaining known levels and the tail, a₀⁴.
    pub covariance_remote: Matrix,
    pub predicted: Vec<f64>,
    /// Predicted minus measured, cm⁻¹.
    pub residuals: Vec<f64>,
    pub sensitivity: Vec<Sensitivity>,
    pub chi2: f64,
    pub iterations: usize,
}

impl InversionResult {
    pub fn covariance(&self) -> Matrix {
        self.covariance_stat
            .add(&self.covariance_fiducial)
            .add(&self.covariance_remote)
    }

    pub fn stat_sigma(&self, k: usize) -> f64 {
        libm::sqrt(self.covariance_stat[(k, k)])
    }

    pub fn fiducial_sigma(&self, k: usize) -> f64 {
        libm::sqrt(self.covariance_fiducial[(k, k)])
    }

    pub fn remote_sigma(&self, k: usize) -> f64 {
        libm::sqrt(self.covariance_remote[(k, k)])
    }

    pub fn total_sigma(&self, k: usize) -> f64 {
        libm::sqrt(self.covariance()[(k, k)])
    }
}

struct Fit {
    theta: Vec<f64>,
    iterations: usize,
}

fn values_at(problem: &InversionProblem, theta: &[f64]) -> Vec<f64> {
    problem
        .initial
        .iter()
        .zip(theta)
        .map(|(v0, t)| v0 * libm::exp(*t))
        .collect()
}

fn weighted_residuals(problem: &InversionProblem, predicted: &[f64]) -> Vec<f64> {
    predicted
        .iter()
        .zip(&problem.measurements)
        .map(|(p, m)| (p - m.omega_zero) / m.sigma_omega)
        .collect()
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

fn predict_at(problem: &InversionProblem, theta: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    forward_zeros(problem, &values_at(problem, theta), config)
}

/// Weighted Jacobian `∂ r_m / ∂ θ_k` by central differences.
fn jacobian(problem: &InversionProblem, theta: &[f64], config: &SolverConfig) -> Result<Matrix> {
    jacobian_with_step(problem, theta, config, FD_STEP)
}

fn jacobian_with_step(
    problem: &InversionProblem,
    theta: &[f64],
    config: &SolverConfig,
    step: f64,
) -> Result<Matrix> {
    let m = problem.measurements.len();
    let mut jac = Matrix::zeros(m, theta.len());
    for k in 0..theta.len() {
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[k] += step;
        minus[k] -= step;
        let fp = predict_at(problem, &plus, config)?;
        let fm = predict_at(problem, &minus, config)?;
        for (i, meas) in problem.measurements.iter().enumerate() {
            jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * step) / meas.sigma_omega;
        }
    }
    Ok(jac)
}

/// Unweighted `∂ ω_zero / ∂ θ` (cm⁻¹ per unit log-strength) at `values`.
pub fn zero_jacobian(
    problem: &InversionProblem,
    values: &[f64],
    config: &SolverConfig,
    step: f64,
) -> Result<Matrix> {
    let theta: Vec<f64> = values
        .iter()
        .zip(&problem.initial)
        .map(|(v, v0)| libm::log(v / v0))
        .collect();
    let mut jac = jacobian_with_step(problem, &theta, config, step)?;
    for (i, meas) in problem.measurements.iter().enumerate() {
        for k in 0..theta.len() {
            jac[(i, k)] *= meas.sigma_omega;
        }
    }
    Ok(jac)
}

fn normal_inverse(problem: &InversionProblem, jac: &Matrix) -> Result<Matrix> {
    jac.gram().inverse_spd(RANK_TOL).map_err(|col| {
        Error::RankDeficient(format!(
            "{} is not constrained by the measured zeros",
            problem.unknowns[col]
        ))
    })
}

fn fit(problem: &InversionProblem, start: Vec<f64>, config: &SolverConfig) -> Result<Fit> {
    config.validate()?;
    let mut theta = start;
    let mut r = weighted_residuals(problem, &predict_at(problem, &theta, config)?);
    let mut current = cost(&r);
    let mut lambda = 1e-3;
    for iteration in 1..=config.max_iter {
        let jac = jacobian(problem, &theta, config)?;
        let normal = jac.gram();
        normal_inverse(problem, &jac)?;
        let grad = jac.transpose().mul_vec(&r);
        let mut accepted = None;
        while lambda < 1e12 {
            let mut damped = normal.clone();
            for i in 0..theta.len() {
                damped[(i, i)] *= 1.0 + lambda;
            }
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Ok(mut step) = damped.solve_spd(&neg, RANK_TOL) else {
                lambda *= 10.0;
                continue;
            };
            let largest = step.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            if largest > MAX_LOG_STEP {
                step.iter_mut().for_each(|s| *s *= MAX_LOG_STEP / largest);
            }
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
            let r_trial = weighted_residuals(problem, &predict_at(problem, &trial, config)?);
            let c_trial = cost(&r_trial);
            if c_trial <= current {
                accepted = Some((trial, r_trial, c_trial, largest));
                lambda = (lambda * 0.1).max(1e-12);
                break;
            }
            lambda *= 10.0;
        }
        match accepted {
            Some((trial, r_trial, c_trial, largest)) => {
                theta = trial;
                r = r_trial;
                current = c_trial;
                if largest <= STEP_CONVERGED || current == 0.0 {
                    return Ok(Fit {
                        theta,
                        iterations: iteration,
                    });
                }
            }
            // No downhill step left at any damping: a minimum to working precision.
            None => {
                return Ok(Fit {
                    theta,
                    iterations: iteration,
                })
            }
        }
    }
    Err(Error::NonConvergence {
        what: "matrix-element fit",
        iterations: config.max_iter,
    })
}

/// Weighted least-squares fit of the unknown strengths to the measured zeros,
/// with first-order covariances.
pub fn solve(problem: &InversionProblem, config: &SolverConfig) -> Result<InversionResult> {
    let start = vec![0.0; problem.unknowns.len()];
    solve_from(problem, start, config)
}

fn solve_from(
    problem: &InversionProblem,
    start: Vec<f64>,
    config: &SolverConfig,
) -> Result<InversionResult> {
    let Fit { theta, iterations } = fit(problem, start, config)?;
    let values = values_at(problem, &theta);
    let predicted = forward_zeros(problem, &values, config)?;
    let weighted = weighted_residuals(problem, &predicted);
    let residuals: Vec<f64> = predicted
        .iter()
        .zip(&problem.measurements)
        .map(|(p, m)| p - m.omega_zero)
        .collect();

    let jac = jacobian(problem, &theta, config)?;
    let inv = normal_inverse(problem, &jac)?;
    let k = values.len();
    let to_values = |cov_theta: &Matrix| {
        let mut out = Matrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let c = 0.5 * (cov_theta[(i, j)] + cov_theta[(j, i)]);
                out[(i, j)] = values[i] * values[j] * c;
            }
        }
        out
    };

    // dθ/d ln p = −(JᵀJ)⁻¹ Jᵀ B_p with B_p the weighted zero shift per ln p.
    let projector = inv.mul(&jac.transpose());
    let fitted_system = problem.system_with(&values)?;
    let mut sensitivity = Vec::new();
    let mut sources: Vec<(Systematic, f64)> = Vec::new();
    for level in fitted_system.levels() {
        if problem.is_fiducial(level.key) {
            sources.push((Systematic::Fiducial(level.key), level.m_sq_rel_unc));
        } else if !problem.is_free(level.key) {
            sources.push((Systematic::Remote(level.key), level.m_sq_rel_unc));
        }
    }
    if let Some(tail) = fitted_system.tail() {
        sources.push((Systematic::Tail, tail.rel_unc));
    }
    let mut cov_fid = Matrix::zeros(k, k);
    let mut cov_remote = Matrix::zeros(k, k);
    for (source, rel_unc) in sources {
        let shifted = |factor: f64| -> Result<Vec<f64>> {
            let sys = perturb(&fitted_system, source, factor)?;
            predict(&sys, &problem.gaps, config)
        };
        let plus = shifted(libm::exp(FD_STEP))?;
        let minus = shifted(libm::exp(-FD_STEP))?;
        let b: Vec<f64> = plus
            .iter()
            .zip(&minus)
            .zip(&problem.measurements)
            .map(|((p, m), meas)| (p - m) / (2.0 * FD_STEP) / meas.sigma_omega)
            .collect();
        let d_theta: Vec<f64> = projector.mul_vec(&b).into_iter().map(|x| -x).collect();
        let target = match source {
            Systematic::Fiducial(_) => &mut cov_fid,
            _ => &mut cov_remote,
        };
        for i in 0..k {
            for j in 0..k {
                target[(i, j)] += d_theta[i] * d_theta[j] * rel_unc * rel_unc;
            }
        }
        sensitivity.push(Sensitivity {
            source,
            rel_unc,
            d_ln_value: d_theta,
        });
    }

    Ok(InversionResult {
        targets: problem.unknowns.clone(),
        covariance_stat: to_values(&inv),
        covariance_fiducial: to_values(&cov_fid),
        covariance_remote: to_values(&cov_remote),
        values,
        predicted,
        residuals,
        sensitivity,
        chi2: weighted.iter().map(|x| x * x).sum(),
        iterations,
    })
}

fn perturb(system: &AtomicSystem, source: Systematic, factor: f64) -> Result<AtomicSystem> {
    match source {
        Systematic::Fiducial(key) | Systematic::Remote(key) => system.map_strengths(|l| {
            if l.key == key {
                l.m_sq * factor
            } else {
                l.m_sq
            }
        }),
        Systematic::Tail => {
            let tail = system.tail().map(|t| t.scaled(factor));
            Ok(system.clone().with_tail(tail))
        }
    }
}

/// Largest relative shift of each fitted strength when every remote level and
/// the tail are scaled by `1 ± perturbation` and the fit is repeated.
pub fn tail_sensitivity(
    problem: &InversionProblem,
    result: &InversionResult,
    perturbation: f64,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&perturbation) {
        return Err(Error::InvalidProblem(format!(
            "perturbation {perturbation} outside [0, 1)"
        )));
    }
    let start: Vec<f64> = result
        .values
        .iter()
        .zip(&problem.initial)
        .map(|(v, v0)| libm::log(v / v0))
        .collect();
    let mut shifts = vec![0.0f64; result.values.len()];
    for sign in [1.0, -1.0] {
        let factor = 1.0 + sign * perturbation;
        let scaled = problem.system.map_strengths(|l| {
            if problem.is_free(l.key) || problem.is_fiducial(l.key) {
                l.m_sq
            } else {
                l.m_sq * factor
            }
        })?;
        let tail = scaled.tail().map(|t| t.scaled(factor));
        let perturbed = problem.with_system(scaled.with_tail(tail));
        let Fit { theta, .. } = fit(&perturbed, start.clone(), config)?;
        let values = values_at(&perturbed, &theta);
        for (s, (v, v_hat)) in shifts.iter_mut().zip(values.iter().zip(&result.values)) {
            *s = s.max((v / v_hat - 1.0).abs());
        }
    }
    Ok(shifts)
}

/// Tail estimate that closes the gap between a reference static polarizability
/// (a.u.) and the partial sum over the loaded levels, held constant in ω.
///
/// A shortfall within three standard deviations of the reference is clamped
/// to a zero tail; a larger one is reported as inconsistent.
pub fn truncation_bound(
    system: &AtomicSystem,
    alpha_ref: f64,
    alpha_unc: f64,
) -> Result<TailEstimate> {
    if !(alpha_ref > 0.0 && alpha_ref.is_finite()) {
        return Err(Error::NonPositive {
            what: "reference polarizability",
            value: alpha_ref,
        });
    }
    if !(alpha_unc >= 0.0 && alpha_unc.is_finite()) {
        return Err(Error::NonPositive {
            what: "reference polarizability uncertainty",
            value: alpha_unc,
        });
    }
    let partial = partial_static_polarizability(system.levels());
    let diff = alpha_ref - partial;
    if diff < -3.0 * alpha_unc || (alpha_unc == 0.0 && diff < 0.0) {
        return Err(Error::Inconsistent(format!(
            "loaded levels give {partial:.6} a.u., above the reference {alpha_ref} ± {alpha_unc}"
        )));
    }
    let tail_au = diff.max(0.0);
    Ok(TailEstimate {
        p_zz: sum_from_atomic_units(9.0 * tail_au),
        q_xz: 0.0,
        rel_unc: if tail_au > 0.0 { alpha_unc / tail_au } else { 0.0 },
    })
}

/// Label for error messages and reports.
pub fn describe_targets(targets: &[Target]) -> String {
    targets
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
