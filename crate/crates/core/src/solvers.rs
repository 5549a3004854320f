//! NAG-alpha, M-NAG-alpha, FISTA-alpha and M-FISTA-alpha as resumable step
//! machines.
//!
//! Every step consumes the forward(-backward) point computed from `y_{k-1}`
//! at the end of the previous step, so each iteration costs exactly one
//! gradient (or prox) evaluation plus one objective evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::IterationRecord;
use crate::lyapunov;
use crate::momentum::{self, MomentumParams};
use crate::problems::{Problem, Vector};
use crate::prox::ProxResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    NagAlpha,
    MNagAlpha,
    FistaAlpha,
    MFistaAlpha,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::NagAlpha, Variant::MNagAlpha, Variant::FistaAlpha, Variant::MFistaAlpha];

    pub fn name(self) -> &'static str {
        match self {
            Variant::NagAlpha => "nag_alpha",
            Variant::MNagAlpha => "m_nag_alpha",
            Variant::FistaAlpha => "fista_alpha",
            Variant::MFistaAlpha => "m_fista_alpha",
        }
    }

    pub fn is_monotone(self) -> bool {
        matches!(self, Variant::MNagAlpha | Variant::MFistaAlpha)
    }

    pub fn is_proximal(self) -> bool {
        matches!(self, Variant::FistaAlpha | Variant::MFistaAlpha)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm || v.name().trim_end_matches("_alpha") == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepping {
    #[default]
    TwoStep,
    PhaseSpace,
}

impl Stepping {
    pub fn name(self) -> &'static str {
        match self {
            Stepping::TwoStep => "two_step",
            Stepping::PhaseSpace => "phase_space",
        }
    }
}

impl FromStr for Stepping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "two_step" => Ok(Stepping::TwoStep),
            "phase_space" => Ok(Stepping::PhaseSpace),
            _ => Err(Error::InvalidParameter(format!("unknown stepping mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub params: MomentumParams,
    pub step: f64,
    pub max_iter: usize,
    pub variant: Variant,
    pub stepping: Stepping,
}

impl SolverConfig {
    pub fn new(params: MomentumParams, step: f64, max_iter: usize, variant: Variant) -> Self {
        Self { params, step, max_iter, variant, stepping: Stepping::TwoStep }
    }

    pub fn with_stepping(mut self, stepping: Stepping) -> Self {
        self.stepping = stepping;
        self
    }

    /// Checks the configuration against `problem`. Step sizes above `1/L`
    /// are accepted (they are useful as negative controls) but are never
    /// certifiable.
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {}", self.step)));
        }
        if self.stepping == Stepping::PhaseSpace && self.variant != Variant::NagAlpha {
            return Err(Error::VariantMismatch {
                variant: self.variant.name(),
                reason: "phase-space stepping is only defined for nag_alpha".into(),
            });
        }
        if !self.variant.is_proximal() && problem.is_composite() {
            return Err(Error::VariantMismatch {
                variant: self.variant.name(),
                reason: "composite problems need a proximal variant".into(),
            });
        }
        if self.variant.is_monotone() && self.params.alpha < 1.0 {
            return Err(Error::SingularCoefficient { k: 1, alpha: self.params.alpha });
        }
        Ok(())
    }

    pub fn within_step_bound(&self, problem: &Problem) -> bool {
        self.step * problem.lipschitz() <= 1.0 + 4.0 * f64::EPSILON
    }
}

/// Iterates after `k` steps. `v = (x_k - x_{k-1}) / sqrt(s)` is tracked in
/// every mode; `z` holds the most recent forward point `z_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    pub v: Vector,
    pub z: Vector,
    /// Objective (`f` or `Phi`) at `x`.
    pub f_x: f64,
    /// Monotone variants: whether `x_k = z_{k-1}` was accepted.
    pub accepted_z: bool,
    lookahead: ProxResult,
}

impl SolverState {
    /// Forward step from the current `y`: `P_s(y_k)` and `G_s(y_k)` (or the
    /// plain gradient step for smooth problems).
    pub fn lookahead(&self) -> &ProxResult {
        &self.lookahead
    }
}

pub fn init(problem: &Problem, config: &SolverConfig, x0: &Vector) -> Result<SolverState> {
    config.validate(problem)?;
    if x0.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: x0.len() });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("initial point must be finite".into()));
    }
    Ok(SolverState {
        k: 0,
        x: x0.clone(),
        y: x0.clone(),
        v: Vector::zeros(x0.len()),
        z: x0.clone(),
        f_x: problem.objective(x0),
        accepted_z: false,
        lookahead: problem.forward_step(x0, config.step),
    })
}

fn ensure_finite(k: usize, vs: &[&Vector], f: f64) -> Result<()> {
    if f.is_finite() && vs.iter().all(|v| v.iter().all(|c| c.is_finite())) {
        Ok(())
    } else {
        Err(Error::Divergence { k })
    }
}

fn expect_variant(config: &SolverConfig, variant: Variant) -> Result<()> {
    if config.variant != variant {
        return Err(Error::VariantMismatch {
            variant: variant.name(),
            reason: format!("config selects {}", config.variant),
        });
    }
    Ok(())
}

/// `x_k = P(y_{k-1})`, `y_k = x_k + coeff(k) (x_k - x_{k-1})`.
fn step_accelerated(state: &mut SolverState, problem: &Problem, config: &SolverConfig) -> Result<()> {
    let k = state.k + 1;
    let x_new = state.lookahead.point.clone();
    let disp = &x_new - &state.x;
    let c = momentum::coeff(&config.params, k)?;
    let y_new = &x_new + &disp * c;
    let f_x = problem.objective(&x_new);
    ensure_finite(k, &[&x_new, &y_new], f_x)?;

    state.v = disp / config.step.sqrt();
    state.z = x_new.clone();
    state.x = x_new;
    state.lookahead = problem.forward_step(&y_new, config.step);
    state.y = y_new;
    state.f_x = f_x;
    state.k = k;
    Ok(())
}

/// Comparison step followed by the two-coefficient extrapolation.
fn step_monotone(state: &mut SolverState, problem: &Problem, config: &SolverConfig) -> Result<()> {
    let k = state.k + 1;
    let z = state.lookahead.point.clone();
    let f_z = problem.objective(&z);
    ensure_finite(k, &[&z], f_z)?;
    let accepted = f_z <= state.f_x;
    let (x_new, f_x) = if accepted { (z.clone(), f_z) } else { (state.x.clone(), state.f_x) };
    let c = momentum::coeff(&config.params, k)?;
    let cz = momentum::monotone_z_coeff(&config.params, k)?;
    let disp = &x_new - &state.x;
    let y_new = &x_new + &disp * c + (&z - &x_new) * cz;
    ensure_finite(k, &[&y_new], f_x)?;

    state.v = disp / config.step.sqrt();
    state.z = z;
    state.x = x_new;
    state.lookahead = problem.forward_step(&y_new, config.step);
    state.y = y_new;
    state.f_x = f_x;
    state.accepted_z = accepted;
    state.k = k;
    Ok(())
}

pub fn step_nag_alpha(state: &mut SolverState, problem: &Problem, config: &SolverConfig) -> Result<()> {
    expect_variant(config, Variant::NagAlpha)?;
    if problem.is_composite() {
        return Err(Error::VariantMismatch { variant: "nag_alpha", reason: "problem has a regularizer".into() });
    }
    step_accelerated(state, problem, config)
}

/// One step of the velocity recursion
/// `v_{k+1} = coeff(k) v_k - sqrt(s) grad f(y_k)`, `x_{k+1} = x_k + sqrt(s) v_{k+1}`,
/// `y_{k+1} = x_{k+1} + coeff(k+1) sqrt(s) v_{k+1}`.
pub fn step_nag_alpha_phase_space(state: &mut SolverState, problem: &Problem, config: &SolverConfig) -> Result<()> {
    expect_variant(config, Variant::NagAlpha)?;
    if problem.is_composite() {
        return Err(Error::VariantMismatch { variant: "nag_alpha", reason: "problem has a regularizer".into() });
    }
    let k = state.k;
    let root_s = config.step.sqrt();
    // v_0 = 0, so the k = 0 damping factor never matters
    let c_k = if k == 0 { 0.0 } else { momentum::coeff(&config.params, k)? };
    let v_new = &state.v * c_k - &state.lookahead.subgradient * root_s;
    let x_new = &state.x + &v_new * root_s;
    let c_next = momentum::coeff(&config.params, k + 1)?;
    let y_new = &x_new + &v_new * (c_next * root_s);
    let f_x = problem.objective(&x_new);
    ensure_finite(k + 1, &[&x_new, &y_new], f_x)?;

    state.z = state.lookahead.point.clone();
    state.v = v_new;
    state.x = x_new;
    state.lookahead = problem.forward_step(&y_new, config.step);
    state.y = y_new;
    state.f_x = f_x;
    state.k = k + 1;
    Ok(())
}

pub fn step_m_nag_alpha(state: &mut SolverState, problem: &Problem, config: &SolverConfig) -> Result<()> {
    expect_variant(config, Variant::MNagAlpha)?;
    if problem.is_composite() {
        return Err(Error::VariantMismatch { variant: "m_nag_alpha", reason: "problem has a regularizer".into() });
    }
    step_monotone(state, problem, config)
}

/// Smooth problems are accepted and treated as `g = 0`.
pub fn step_fista_alpha(state: &mut SolverState, problem: &Problem, config: &SolverConfig) -> Result<()> {
    expect_variant(config, Variant::FistaAlpha)?;
    step_accelerated(state, problem, config)
}

/// The comparison uses the full composite objective `Phi`.
pub fn step_m_fista_alpha(state: &mut SolverState, problem: &Problem, config: &SolverConfig) -> Result<()> {
    expect_variant(config, Variant::MFistaAlpha)?;
    step_monotone(state, problem, config)
}

/// Dispatches on `config.variant` and `config.stepping`.
pub fn step(state: &mut SolverState, problem: &Problem, config: &SolverConfig) -> Result<()> {
    match (config.variant, config.stepping) {
        (Variant::NagAlpha, Stepping::TwoStep) => step_nag_alpha(state, problem, config),
        (Variant::NagAlpha, Stepping::PhaseSpace) => step_nag_alpha_phase_space(state, problem, config),
        (Variant::MNagAlpha, _) => step_m_nag_alpha(state, problem, config),
        (Variant::FistaAlpha, _) => step_fista_alpha(state, problem, config),
        (Variant::MFistaAlpha, _) => step_m_fista_alpha(state, problem, config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Called after every iteration (including `k = 0`). Observers see the
/// state read-only.
pub trait Observer {
    fn observe(&mut self, state: &SolverState, record: &IterationRecord) -> Control;
}

/// Stops the run at the first `k` whose objective gap is `<= tol`.
#[derive(Debug, Clone, Copy)]
pub struct StopAtGap {
    pub tol: f64,
}

impl Observer for StopAtGap {
    fn observe(&mut self, _state: &SolverState, record: &IterationRecord) -> Control {
        if record.f_gap <= self.tol {
            Control::Stop
        } else {
            Control::Continue
        }
    }
}

/// Keeps a copy of every state.
#[derive(Debug, Default)]
pub struct TrajectoryRecorder {
    pub states: Vec<SolverState>,
}

impl Observer for TrajectoryRecorder {
    fn observe(&mut self, state: &SolverState, _record: &IterationRecord) -> Control {
        self.states.push(state.clone());
        Control::Continue
    }
}

/// Trace row for the current state.
pub fn record(state: &SolverState, problem: &Problem, config: &SolverConfig) -> IterationRecord {
    let coeff = if state.k == 0 { 0.0 } else { momentum::coeff(&config.params, state.k).unwrap_or(f64::NAN) };
    let energy = lyapunov::energy_for_variant(state, problem, config).ok();
    IterationRecord {
        k: state.k,
        f_gap: state.f_x - problem.min_value(),
        grad_norm: state.lookahead.subgradient.norm(),
        coeff,
        lyap_total: energy.as_ref().map_or(0.0, |e| e.total),
        lyap_pot: energy.as_ref().map_or(0.0, |e| e.potential),
        lyap_mix: energy.as_ref().map_or(0.0, |e| e.mixed),
        accepted_z: state.accepted_z,
    }
}

/// Runs `config.max_iter` steps from `x0`, or fewer if an observer stops
/// the run. Produces one record per visited `k`, starting at `k = 0`.
pub fn run(
    problem: &Problem,
    config: &SolverConfig,
    x0: &Vector,
    observers: &mut [&mut dyn Observer],
) -> Result<Vec<IterationRecord>> {
    let mut state = init(problem, config, x0)?;
    let mut records = Vec::with_capacity(config.max_iter + 1);
    loop {
        let rec = record(&state, problem, config);
        let mut stop = false;
        for obs in observers.iter_mut() {
            stop |= obs.observe(&state, &rec) == Control::Stop;
        }
        records.push(rec);
        if stop || state.k >= config.max_iter {
            break;
        }
        step(&mut state, problem, config)?;
    }
    Ok(records)
}

/// A run's records together with the full iterate history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub states: Vec<SolverState>,
}

pub fn run_recorded(problem: &Problem, config: &SolverConfig, x0: &Vector) -> Result<Trajectory> {
    let mut recorder = TrajectoryRecorder::default();
    let records = run(problem, config, x0, &mut [&mut recorder])?;
    Ok(Trajectory { records, states: recorder.states })
}
