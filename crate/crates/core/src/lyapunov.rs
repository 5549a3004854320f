//! Lyapunov energies, fundamental-inequality checks and detection of the
//! index `K` after which the energy stops increasing.
//!
//! Two algebraically equal forms of the energy are provided:
//!
//! ```text
//! velocity form: E(k) = s tau(k) gap_k + 1/2 || sqrt(s)(k-1)^a v_k + r(k-1)^(a-1)(x_k - x*) ||^2
//! x/y form:      E(k) = s tau(k) gap_k + 1/2 || [k^a + r A1(k,a)](y_k - x_k) + r(k-1)^(a-1)(y_k - x*) ||^2
//! ```
//!
//! The velocity form is only meaningful for the non-monotone methods, whose
//! `y_k` is tied to `v_k`; the x/y form applies to all four.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::momentum::{self, power};
use crate::problems::{Problem, Vector};
use crate::solvers::{SolverConfig, SolverState};

/// Residual tolerance for the inequality checks, relative to `scale`.
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Relative slack used when testing `E(k+1) <= E(k)`.
pub const DEFAULT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyForm {
    Velocity,
    Xy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub k: usize,
    pub potential: f64,
    pub mixed: f64,
    pub total: f64,
    pub form: EnergyForm,
}

fn check_energy_index(k: usize, alpha: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidIndex { k, min: 1 });
    }
    if k == 1 && alpha < 1.0 {
        return Err(Error::SingularCoefficient { k, alpha });
    }
    Ok(())
}

fn potential(state: &SolverState, problem: &Problem, config: &SolverConfig) -> Result<f64> {
    let p = &config.params;
    let gap = state.f_x - problem.min_value();
    Ok(config.step * momentum::tau(state.k, p.alpha, p.r)? * gap)
}

fn breakdown(k: usize, potential: f64, mixed_vec: Vector, form: EnergyForm) -> EnergyBreakdown {
    let mixed = 0.5 * mixed_vec.norm_squared();
    EnergyBreakdown { k, potential, mixed, total: potential + mixed, form }
}

pub fn energy_velocity_form(state: &SolverState, problem: &Problem, config: &SolverConfig) -> Result<EnergyBreakdown> {
    let (alpha, r) = (config.params.alpha, config.params.r);
    let k = state.k;
    check_energy_index(k, alpha)?;
    let km1 = (k - 1) as f64;
    let w = &state.v * (config.step.sqrt() * power(km1, alpha))
        + (&state.x - problem.minimizer()) * (r * power(km1, alpha - 1.0));
    Ok(breakdown(k, potential(state, problem, config)?, w, EnergyForm::Velocity))
}

pub fn energy_xy_form(state: &SolverState, problem: &Problem, config: &SolverConfig) -> Result<EnergyBreakdown> {
    let (alpha, r) = (config.params.alpha, config.params.r);
    let k = state.k;
    check_energy_index(k, alpha)?;
    let bracket = power(k as f64, alpha) + r * momentum::a1(k, alpha)?;
    let lower = r * power((k - 1) as f64, alpha - 1.0);
    let w = (&state.y - &state.x) * bracket + (&state.y - problem.minimizer()) * lower;
    Ok(breakdown(k, potential(state, problem, config)?, w, EnergyForm::Xy))
}

/// The form the diagnostics use for this variant: velocity form for
/// NAG-alpha/FISTA-alpha, x/y form for the monotone variants.
pub fn energy_for_variant(state: &SolverState, problem: &Problem, config: &SolverConfig) -> Result<EnergyBreakdown> {
    if config.variant.is_monotone() {
        energy_xy_form(state, problem, config)
    } else {
        energy_velocity_form(state, problem, config)
    }
}

/// Residual `lhs - rhs` of one instance of the fundamental inequality
/// `Phi(P_s(y)) - Phi(x) <= <G, y - x> - mu/2 ||y - x||^2 - s/2 ||G||^2`,
/// where `phi_x` is `Phi(x)` (or `Phi(x*)` for the optimality instance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityResidual {
    pub k: usize,
    pub residual: f64,
    pub scale: f64,
}

impl InequalityResidual {
    pub fn violated(&self) -> bool {
        self.residual > INEQUALITY_TOL * self.scale
    }
}

fn fundamental_residual(problem: &Problem, s: f64, mu: f64, y: &Vector, x: &Vector, phi_x: f64, k: usize) -> InequalityResidual {
    let fb = problem.forward_step(y, s);
    let phi_next = problem.objective(&fb.point);
    let dyx = y - x;
    let rhs = fb.subgradient.dot(&dyx) - 0.5 * mu * dyx.norm_squared() - 0.5 * s * fb.subgradient.norm_squared();
    InequalityResidual { k, residual: (phi_next - phi_x) - rhs, scale: 1f64.max(phi_next.abs()).max(phi_x.abs()) }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InequalityReport {
    /// Pairs `(x_k, y_k)`: bound on `Phi(z_k) - Phi(x_k)`.
    pub consecutive: Vec<InequalityResidual>,
    /// Pairs `(x*, y_k)`: bound on `Phi(z_k) - Phi(x*)`.
    pub optimality: Vec<InequalityResidual>,
    /// Monotone variants: first `k` with `Phi(x_{k+1}) > Phi(z_k)`.
    pub selection_violation: Option<usize>,
}

impl InequalityReport {
    pub fn violations(&self) -> usize {
        self.consecutive.iter().chain(&self.optimality).filter(|r| r.violated()).count()
            + usize::from(self.selection_violation.is_some())
    }

    pub fn first_violation(&self) -> Option<usize> {
        self.consecutive
            .iter()
            .chain(&self.optimality)
            .filter(|r| r.violated())
            .map(|r| r.k)
            .chain(self.selection_violation)
            .min()
    }

    pub fn max_normalized_residual(&self) -> f64 {
        self.consecutive
            .iter()
            .chain(&self.optimality)
            .map(|r| r.residual / r.scale)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates both fundamental inequalities at every `y_k` along a trajectory
/// and, for monotone variants, the selection property `Phi(x_{k+1}) <= Phi(z_k)`.
pub fn check_fundamental_inequalities(states: &[SolverState], problem: &Problem, config: &SolverConfig) -> InequalityReport {
    let s = config.step;
    let mu = problem.strong_convexity();
    let phi_star = problem.min_value();
    let mut report = InequalityReport::default();
    for (i, st) in states.iter().enumerate() {
        report.consecutive.push(fundamental_residual(problem, s, mu, &st.y, &st.x, st.f_x, st.k));
        report.optimality.push(fundamental_residual(problem, s, mu, &st.y, problem.minimizer(), phi_star, st.k));
        if config.variant.is_monotone() && report.selection_violation.is_none() {
            if let Some(next) = states.get(i + 1) {
                if next.f_x > problem.objective(&next.z) {
                    report.selection_violation = Some(st.k);
                }
            }
        }
    }
    report
}

/// The fundamental inequality on `pairs` random `(x, y)` pairs drawn around
/// the minimizer with a seeded generator.
pub fn sampled_inequality_check(problem: &Problem, s: f64, mu: f64, pairs: usize, seed: u64) -> Vec<InequalityResidual> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = problem.minimizer();
    let spread = center.norm().max(1.0);
    let dim = problem.dim();
    let draw = |rng: &mut ChaCha8Rng| {
        center + Vector::from_fn(dim, |_, _| spread * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
    };
    (0..pairs)
        .map(|i| {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            fundamental_residual(problem, s, mu, &y, &x, problem.objective(&x), i)
        })
        .collect()
}

/// Smallest `K` (a `k` label from `energies`) such that
/// `E(k+1) <= E(k) (1 + slack) + slack |E(K)|` for every later `k`.
/// Returns `None` when no such `K <= k_max / 2` exists.
pub fn detect_k(energies: &[(usize, f64)], slack: f64) -> Result<Option<usize>> {
    const MIN_LEN: usize = 10;
    if energies.len() < MIN_LEN {
        return Err(Error::TraceTooShort { len: energies.len(), min: MIN_LEN });
    }
    if energies.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
        return Err(Error::InvalidParameter("energy indices must be contiguous".into()));
    }
    let n = energies.len();
    // excess[i]: how far E(k_i + 1) overshoots E(k_i)(1 + slack)
    let mut worst_after = vec![f64::NEG_INFINITY; n];
    for i in (0..n - 1).rev() {
        let excess = energies[i + 1].1 - energies[i].1 * (1.0 + slack);
        let excess = if excess.is_nan() { f64::INFINITY } else { excess };
        worst_after[i] = worst_after[i + 1].max(excess);
    }
    let k_max = energies[n - 1].0;
    let found = energies
        .iter()
        .zip(&worst_after)
        .find(|((_, e), worst)| **worst <= slack * e.abs())
        .map(|((k, _), _)| *k);
    Ok(found.filter(|&k| 2 * k <= k_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentum::MomentumParams;
    use crate::problems::{figure1_quadratic, library};
    use crate::solvers::{run_recorded, Variant};
    use nalgebra::dvector;

    fn cfg(alpha: f64, r: f64, s: f64, iters: usize, variant: Variant) -> SolverConfig {
        SolverConfig::new(MomentumParams::new(alpha, r).unwrap(), s, iters, variant)
    }

    #[test]
    fn energy_vanishes_at_the_minimizer() {
        let p: Problem = figure1_quadratic().into();
        let c = cfg(1.5, 4.0, 0.5, 5, Variant::NagAlpha);
        let t = run_recorded(&p, &c, p.minimizer()).unwrap();
        for st in &t.states[1..] {
            assert_eq!(energy_velocity_form(st, &p, &c).unwrap().total, 0.0);
            assert_eq!(energy_xy_form(st, &p, &c).unwrap().total, 0.0);
        }
    }

    #[test]
    fn energy_at_k1_is_pure_potential_for_alpha_two() {
        let p: Problem = figure1_quadratic().into();
        let c = cfg(2.0, 5.0, 0.5, 1, Variant::NagAlpha);
        let t = run_recorded(&p, &c, &dvector![1.0, 1.0]).unwrap();
        let st = &t.states[1];
        let e = energy_velocity_form(st, &p, &c).unwrap();
        assert_eq!(e.mixed, 0.0);
        assert_eq!(e.total, 0.5 * 6.0 * st.f_x);
    }

    #[test]
    fn velocity_form_matches_hand_evaluation() {
        let p: Problem = figure1_quadratic().into();
        let c = cfg(1.0, 3.0, 0.5, 10, Variant::NagAlpha);
        let t = run_recorded(&p, &c, &dvector![1.0, 1.0]).unwrap();
        let (st, prev) = (&t.states[10], &t.states[9]);
        // alpha = 1: E = s k (k + r) f(x) + 1/2 || (x_k - x_{k-1}) (k - 1) + r x_k ||^2
        let f = 0.005 * st.x[0] * st.x[0] + st.x[1] * st.x[1];
        let w0 = 9.0 * (st.x[0] - prev.x[0]) + 3.0 * st.x[0];
        let w1 = 9.0 * (st.x[1] - prev.x[1]) + 3.0 * st.x[1];
        let expected = 0.5 * 10.0 * 13.0 * f + 0.5 * (w0 * w0 + w1 * w1);
        let got = energy_velocity_form(st, &p, &c).unwrap().total;
        assert!((got - expected).abs() <= 1e-12 * expected.abs(), "{got} vs {expected}");
    }

    #[test]
    fn forms_agree_on_accelerated_traces() {
        for (problem, s) in [
            (Problem::from(figure1_quadratic()), 0.5),
            (Problem::from(library::lasso10()), 1.0 / library::lasso10().smooth().lipschitz()),
        ] {
            let variant = if problem.is_composite() { Variant::FistaAlpha } else { Variant::NagAlpha };
            for (alpha, r) in [(1.0, 3.0), (1.5, 4.0), (2.0, 5.0)] {
                let c = cfg(alpha, r, s, 2000, variant);
                let t = run_recorded(&problem, &c, &Vector::from_element(problem.dim(), 1.0)).unwrap();
                for st in &t.states[2..] {
                    let a = energy_velocity_form(st, &problem, &c).unwrap().total;
                    let b = energy_xy_form(st, &problem, &c).unwrap().total;
                    assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "k={} {a} {b}", st.k);
                }
            }
        }
    }

    #[test]
    fn xy_bracket_example() {
        // k = 5, alpha = 2, r = 5: 25 + 5 * (5 - 4) = 30
        assert_eq!(power(5.0, 2.0) + 5.0 * momentum::a1(5, 2.0).unwrap(), 30.0);
    }

    #[test]
    fn energy_index_rules() {
        let p: Problem = figure1_quadratic().into();
        let c = cfg(0.5, 2.0, 0.5, 2, Variant::NagAlpha);
        let t = run_recorded(&p, &c, &dvector![1.0, 1.0]).unwrap();
        assert!(matches!(energy_velocity_form(&t.states[0], &p, &c), Err(Error::InvalidIndex { .. })));
        assert!(matches!(energy_velocity_form(&t.states[1], &p, &c), Err(Error::SingularCoefficient { .. })));
        assert!(energy_velocity_form(&t.states[2], &p, &c).is_ok());
    }

    #[test]
    fn trajectory_inequalities_hold_at_critical_step() {
        let p: Problem = figure1_quadratic().into();
        for variant in [Variant::NagAlpha, Variant::MNagAlpha] {
            let c = cfg(1.0, 3.0, 0.5, 1000, variant);
            let t = run_recorded(&p, &c, &dvector![1.0, 1.0]).unwrap();
            let rep = check_fundamental_inequalities(&t.states, &p, &c);
            assert_eq!(rep.violations(), 0, "{variant}");
        }
    }

    #[test]
    fn trajectory_inequalities_fail_past_the_step_bound() {
        let p: Problem = figure1_quadratic().into();
        let c = cfg(1.0, 3.0, 1.0, 200, Variant::NagAlpha);
        let t = run_recorded(&p, &c, &dvector![1.0, 1.0]).unwrap();
        let rep = check_fundamental_inequalities(&t.states, &p, &c);
        assert!(rep.violations() > 0);
        assert_eq!(rep.first_violation(), Some(0));
    }

    #[test]
    fn residuals_at_the_minimizer() {
        let p: Problem = figure1_quadratic().into();
        let c = cfg(1.0, 3.0, 0.5, 20, Variant::NagAlpha);
        let t = run_recorded(&p, &c, p.minimizer()).unwrap();
        let rep = check_fundamental_inequalities(&t.states, &p, &c);
        for r in rep.consecutive.iter().chain(&rep.optimality) {
            assert_eq!(r.residual, 0.0);
        }
    }

    #[test]
    fn detect_k_fixtures() {
        let decreasing: Vec<_> = (1..=40).map(|k| (k, 100.0 / k as f64)).collect();
        assert_eq!(detect_k(&decreasing, DEFAULT_SLACK).unwrap(), Some(1));

        let bump: Vec<_> = (0..40usize)
            .map(|k| (k, if k <= 7 { k as f64 + 1.0 } else { 8.0 - 0.1 * (k - 7) as f64 }))
            .collect();
        assert_eq!(detect_k(&bump, DEFAULT_SLACK).unwrap(), Some(7));

        let oscillating: Vec<_> = (0..40usize).map(|k| (k, if k % 2 == 0 { 1.0 } else { 2.0 })).collect();
        assert_eq!(detect_k(&oscillating, DEFAULT_SLACK).unwrap(), None);

        // a valid tail that starts too late is rejected
        let late: Vec<_> = (0..40usize).map(|k| (k, if k < 30 { k as f64 } else { 100.0 - k as f64 })).collect();
        assert_eq!(detect_k(&late, DEFAULT_SLACK).unwrap(), None);

        assert!(matches!(detect_k(&decreasing[..5], DEFAULT_SLACK), Err(Error::TraceTooShort { .. })));
    }

    #[test]
    fn detect_k_tolerates_rounding_sized_bumps() {
        let mut e: Vec<_> = (1..=200).map(|k| (k, 1.0 / k as f64)).collect();
        e[50].1 = e[49].1 * (1.0 + 0.5e-12);
        assert_eq!(detect_k(&e, DEFAULT_SLACK).unwrap(), Some(1));
        e[50].1 = e[49].1 * (1.0 + 1e-9);
        assert_eq!(detect_k(&e, DEFAULT_SLACK).unwrap(), Some(51));
    }
}
