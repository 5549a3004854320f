//! Post-processing of traces: decay-exponent fits, cross-alpha orderings,
//! monotonicity audits and bound certificates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::config::RRule;
use crate::io::{IterationRecord, TraceMetadata};
use crate::lyapunov::{self, DEFAULT_SLACK};
use crate::momentum::{self, MomentumParams};
use crate::problems::{Problem, Vector};
use crate::solvers::{self, SolverConfig, Stepping, Trajectory, Variant};

/// Gaps at or below this are dominated by rounding in `f(x_k) - f*`.
pub fn rounding_floor(f_star: f64) -> f64 {
    1e3 * f64::EPSILON * f_star.abs() + 1e-300
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub window: (usize, usize),
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

fn check_window(window: (usize, usize)) -> Result<()> {
    let (lo, hi) = window;
    if lo < 2 || hi <= 2 * lo {
        return Err(Error::UnusableWindow(format!("need k_lo >= 2 and k_hi > 2 k_lo, got [{lo}, {hi}]")));
    }
    Ok(())
}

/// Least-squares line through `(log k, log gap)` of the dyadic-block
/// envelope: the window is cut into blocks `[k_lo 2^j, k_lo 2^(j+1))` and
/// each block contributes its largest gap at the `k` where it occurs.
pub fn fit_rate(records: &[IterationRecord], window: (usize, usize)) -> Result<RateFit> {
    check_window(window)?;
    let (lo, hi) = window;
    let in_window: Vec<&IterationRecord> = records.iter().filter(|r| r.k >= lo && r.k <= hi).collect();
    let last = in_window.last().map(|r| r.k);
    if in_window.first().map(|r| r.k) != Some(lo) || last != Some(hi) {
        return Err(Error::UnusableWindow(format!("trace does not cover [{lo}, {hi}]")));
    }
    if let Some(bad) = in_window.iter().find(|r| !(r.f_gap > 0.0 && r.f_gap.is_finite())) {
        return Err(Error::UnusableWindow(format!("gap at k={} is {}", bad.k, bad.f_gap)));
    }

    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut start = lo;
    while start <= hi {
        let end = start.saturating_mul(2);
        let peak = in_window
            .iter()
            .filter(|r| r.k >= start && r.k < end)
            .max_by(|a, b| a.f_gap.total_cmp(&b.f_gap).then(b.k.cmp(&a.k)));
        if let Some(p) = peak {
            points.push(((p.k as f64).ln(), p.f_gap.ln()));
        }
        start = end;
    }
    let (slope, intercept, residual_rms) = least_squares_line(&points)?;
    Ok(RateFit { window, slope, intercept, residual_rms })
}

/// Like [`fit_rate`], but `k_hi` is pulled back to the last `k` before the
/// gap first reaches `floor`. The shrunk window must still span a decade.
pub fn fit_rate_auto(records: &[IterationRecord], window: (usize, usize), floor: f64) -> Result<RateFit> {
    check_window(window)?;
    let (lo, hi) = window;
    let cutoff = records.iter().filter(|r| r.k >= lo && r.k <= hi).find(|r| !(r.f_gap > floor)).map(|r| r.k);
    let hi = match cutoff {
        Some(k) if k <= lo => return Err(Error::UnusableWindow(format!("gap is at the rounding floor by k={k}"))),
        Some(k) => k - 1,
        None => hi,
    };
    if hi < 10 * lo {
        return Err(Error::UnusableWindow(format!("window shrank to [{lo}, {hi}], less than a decade")));
    }
    fit_rate(records, (lo, hi))
}

fn least_squares_line(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(Error::UnusableWindow("fewer than two envelope points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, intercept, rms))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingRow {
    pub alpha: f64,
    pub r: f64,
    /// Objective gap at `k_probe`, or `None` when the run was excluded.
    pub gap: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingReport {
    pub k_probe: usize,
    pub step: f64,
    pub variant: Variant,
    /// Sorted by alpha, then r.
    pub rows: Vec<OrderingRow>,
}

impl OrderingReport {
    /// True when the gaps strictly decrease as alpha grows (one row per
    /// alpha) and no run was excluded.
    pub fn strictly_ordered(&self) -> bool {
        self.rows.iter().all(|r| r.gap.is_some())
            && self.rows.windows(2).all(|w| w[0].alpha < w[1].alpha && w[1].gap < w[0].gap)
    }

    pub fn require_ordering(&self) -> Result<()> {
        if self.strictly_ordered() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("gaps at k={} are not strictly decreasing in alpha", self.k_probe)))
        }
    }
}

/// Runs `variant` for each distinct alpha (and each `r` of the rule) to
/// `k_probe` and tabulates the gaps. Runs execute in parallel; divergent
/// runs are kept as rows with a note.
pub fn compare_alphas(
    problem: &Problem,
    variant: Variant,
    alphas: &[f64],
    r_rule: &RRule,
    step: f64,
    k_probe: usize,
    x0: &Vector,
) -> Result<OrderingReport> {
    let mut distinct = alphas.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut pairs = Vec::new();
    for &alpha in &distinct {
        let mut rs = r_rule.values(alpha);
        rs.sort_by(f64::total_cmp);
        rs.dedup();
        for r in rs {
            pairs.push(MomentumParams::new(alpha, r)?);
        }
    }
    let rows = pairs
        .par_iter()
        .map(|&params| {
            let config = SolverConfig::new(params, step, k_probe, variant);
            match solvers::run(problem, &config, x0, &mut []) {
                Ok(records) => {
                    OrderingRow { alpha: params.alpha, r: params.r, gap: records.last().map(|r| r.f_gap), note: None }
                }
                Err(e @ Error::Divergence { .. }) => {
                    OrderingRow { alpha: params.alpha, r: params.r, gap: None, note: Some(format!("excluded: {e}")) }
                }
                Err(e) => OrderingRow { alpha: params.alpha, r: params.r, gap: None, note: Some(format!("failed: {e}")) },
            }
        })
        .collect();
    Ok(OrderingReport { k_probe, step, variant, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateStatus {
    Pass,
    Fail,
    /// The rate hypotheses (`r > 2 alpha`, `s <= 1/L`, `mu > 0`) do not
    /// hold; nothing was asserted.
    NonCertifiable,
}

impl CertificateStatus {
    pub fn name(self) -> &'static str {
        match self {
            CertificateStatus::Pass => "pass",
            CertificateStatus::Fail => "fail",
            CertificateStatus::NonCertifiable => "non_certifiable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub status: CertificateStatus,
    pub notes: Vec<String>,
    pub detected_k: Option<usize>,
    /// `E(K)` for the detected `K`.
    pub energy_at_k: Option<f64>,
    /// Range of `k` on which the bound was checked.
    pub checked: Option<(usize, usize)>,
    pub bound_violations: usize,
    /// Monotone variants: first `k` with `f(x_{k+1}) > f(x_k)`.
    pub monotone_violation: Option<usize>,
    /// Present when the full trajectory was available.
    pub inequality_violations: Option<usize>,
    pub max_inequality_residual: Option<f64>,
    /// Earliest `k` at which any check failed.
    pub first_violation: Option<usize>,
}

impl Certificate {
    fn non_certifiable(note: String) -> Self {
        Certificate {
            status: CertificateStatus::NonCertifiable,
            notes: vec![note],
            detected_k: None,
            energy_at_k: None,
            checked: None,
            bound_violations: 0,
            monotone_violation: None,
            inequality_violations: None,
            max_inequality_residual: None,
            first_violation: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CertificateStatus::Pass
    }
}

/// Everything certification needs besides the records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertContext {
    pub params: MomentumParams,
    pub step: f64,
    pub variant: Variant,
    pub lipschitz: f64,
    pub mu: f64,
    pub f_star: f64,
}

impl CertContext {
    pub fn new(problem: &Problem, config: &SolverConfig) -> Self {
        CertContext {
            params: config.params,
            step: config.step,
            variant: config.variant,
            lipschitz: problem.lipschitz(),
            mu: problem.strong_convexity(),
            f_star: problem.min_value(),
        }
    }

    pub fn from_metadata(meta: &TraceMetadata) -> Result<Self> {
        Ok(CertContext {
            params: MomentumParams::new(meta.alpha, meta.r)?,
            step: meta.s,
            variant: meta.variant.parse()?,
            lipschitz: meta.lipschitz,
            mu: meta.mu,
            f_star: meta.f_star,
        })
    }

    fn hypothesis_failure(&self) -> Option<String> {
        let (a, r) = (self.params.alpha, self.params.r);
        if !self.params.is_certifiable() {
            return Some(format!("r = {r} <= 2 alpha = {}; rate certificate not applicable", 2.0 * a));
        }
        if !(self.mu > 0.0) {
            return Some(format!("mu = {} is not positive; rate certificate not applicable", self.mu));
        }
        if !(self.step > 0.0 && self.step * self.lipschitz <= 1.0 + 4.0 * f64::EPSILON) {
            return Some(format!("s = {} exceeds 1/L = {}; rate certificate not applicable", self.step, 1.0 / self.lipschitz));
        }
        None
    }
}

/// Certificate from a trace alone: `K` detection on `lyap_total`, the
/// pointwise bound `gap_k <= E(K) / (s tau(k))` for `k >= K`, and for
/// monotone variants an exact audit of the objective sequence.
pub fn certify_records(records: &[IterationRecord], ctx: &CertContext) -> Certificate {
    if let Some(note) = ctx.hypothesis_failure() {
        return Certificate::non_certifiable(note);
    }
    let mut cert = Certificate::non_certifiable(String::new());
    cert.notes.clear();
    cert.status = CertificateStatus::Pass;
    let mut first_bad = None;

    if records.windows(2).any(|w| w[1].k != w[0].k + 1) || records.first().map(|r| r.k) != Some(0) {
        cert.status = CertificateStatus::Fail;
        cert.notes.push("trace is not a contiguous run starting at k = 0".into());
        return cert;
    }

    if ctx.variant.is_monotone() {
        cert.monotone_violation = records.windows(2).find(|w| w[1].f_gap > w[0].f_gap).map(|w| w[0].k);
        if let Some(k) = cert.monotone_violation {
            cert.notes.push(format!("objective increased after k = {k}"));
        }
    }

    // energies are undefined before k = 1 (k = 2 when alpha < 1); comparisons
    // stop where the gap reaches the rounding floor
    let start = if ctx.params.alpha < 1.0 { 2 } else { 1 };
    let floor = rounding_floor(ctx.f_star);
    let usable: Vec<&IterationRecord> =
        records.iter().skip(start).take_while(|r| r.f_gap > floor && r.lyap_total.is_finite()).collect();
    let energies: Vec<(usize, f64)> = usable.iter().map(|r| (r.k, r.lyap_total)).collect();
    match lyapunov::detect_k(&energies, DEFAULT_SLACK) {
        Err(e) => {
            cert.status = CertificateStatus::Fail;
            cert.notes.push(format!("K detection failed: {e}"));
        }
        Ok(None) => {
            cert.status = CertificateStatus::Fail;
            cert.notes.push("energy never settles into a non-increasing tail".into());
        }
        Ok(Some(k_star)) => {
            let idx = k_star - usable[0].k;
            let e_k = usable[idx].lyap_total;
            cert.detected_k = Some(k_star);
            cert.energy_at_k = Some(e_k);
            cert.checked = Some((k_star, usable[usable.len() - 1].k));
            let (alpha, r) = (ctx.params.alpha, ctx.params.r);
            for (steps, rec) in usable[idx..].iter().enumerate() {
                let tau = momentum::tau(rec.k, alpha, r).unwrap_or(f64::NAN);
                let bound = e_k / (ctx.step * tau);
                // E may creep up by the detection slack at each comparison
                let allowance = DEFAULT_SLACK * (steps as f64 + 1.0) * (bound + e_k.abs() / (ctx.step * tau));
                if !(rec.f_gap <= bound + allowance) {
                    cert.bound_violations += 1;
                    first_bad.get_or_insert(rec.k);
                }
            }
            if let Some(k) = first_bad {
                cert.notes.push(format!("pointwise bound first fails at k = {k}"));
            }
        }
    }
    cert.first_violation = cert.monotone_violation.into_iter().chain(first_bad).min();
    if cert.first_violation.is_some() {
        cert.status = CertificateStatus::Fail;
    }

    cert
}

/// [`certify_records`] plus the fundamental-inequality checks along the
/// stored trajectory.
pub fn certify(trajectory: &Trajectory, problem: &Problem, config: &SolverConfig) -> Certificate {
    let mut cert = certify_records(&trajectory.records, &CertContext::new(problem, config));
    if cert.status == CertificateStatus::NonCertifiable {
        return cert;
    }
    let report = lyapunov::check_fundamental_inequalities(&trajectory.states, problem, config);
    let violations = report.violations();
    cert.inequality_violations = Some(violations);
    cert.max_inequality_residual = Some(report.max_normalized_residual());
    if violations > 0 {
        cert.status = CertificateStatus::Fail;
        cert.notes.push(format!("{violations} fundamental-inequality violations"));
        cert.first_violation = cert.first_violation.into_iter().chain(report.first_violation()).min();
    }
    cert
}

/// The solver configuration a trace was produced with.
pub fn config_from_metadata(meta: &TraceMetadata, max_iter: usize) -> Result<SolverConfig> {
    let ctx = CertContext::from_metadata(meta)?;
    let stepping: Stepping = meta.stepping.parse()?;
    Ok(SolverConfig::new(ctx.params, ctx.step, max_iter, ctx.variant).with_stepping(stepping))
}
