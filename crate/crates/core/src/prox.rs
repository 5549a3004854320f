//! Proximal maps: the s-proximal value `P_s(x)`, the s-proximal subgradient
//! `G_s(x) = (x - P_s(x)) / s`, regularizers with cheap proximal operators,
//! and a grid-search oracle used to validate closed forms.

use std::fmt;

use crate::error::{Error, Result};
use crate::problems::{CompositeProblem, Vector};

/// A convex, possibly non-smooth term `g` with a computable proximal map
/// `prox(u, s) = argmin_y ||y - u||^2 / (2s) + g(y)`.
pub trait Regularizer: Send + Sync + fmt::Debug {
    fn value(&self, x: &Vector) -> f64;
    fn prox(&self, u: &Vector, s: f64) -> Vector;
    fn name(&self) -> String;
}

/// `g = 0`; its proximal map is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Regularizer for Zero {
    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }

    fn prox(&self, u: &Vector, _s: f64) -> Vector {
        u.clone()
    }

    fn name(&self) -> String {
        "zero".into()
    }
}

/// `g(x) = lambda ||x||_1`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub lambda: f64,
}

impl L1Norm {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("l1 weight must be >= 0, got {lambda}")));
        }
        Ok(Self { lambda })
    }
}

impl Regularizer for L1Norm {
    fn value(&self, x: &Vector) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, u: &Vector, s: f64) -> Vector {
        soft_threshold(u, self.lambda * s)
    }

    fn name(&self) -> String {
        format!("l1({})", self.lambda)
    }
}

/// Sign with `sgn(0) = 0`.
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Componentwise `(|u_i| - threshold)_+ sgn(u_i)`.
pub fn soft_threshold(u: &Vector, threshold: f64) -> Vector {
    u.map(|ui| (ui.abs() - threshold).max(0.0) * sgn(ui))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    /// `P_s(x)`
    pub point: Vector,
    /// `G_s(x)`
    pub subgradient: Vector,
    pub step: f64,
}

/// Gradient step followed by the regularizer's proximal map. No step-size
/// check; solvers use this so that exploratory `s > 1/L` runs are possible.
pub(crate) fn forward_backward(p: &CompositeProblem, x: &Vector, s: f64) -> ProxResult {
    let grad = p.smooth().gradient(x);
    let u = x - grad * s;
    let point = p.regularizer().prox(&u, s);
    let subgradient = (x - &point) / s;
    ProxResult { point, subgradient, step: s }
}

/// The s-proximal value and subgradient of a composite problem at `x`.
///
/// Requires `0 < s <= 1/L`.
pub fn proximal_value(p: &CompositeProblem, x: &Vector, s: f64) -> Result<ProxResult> {
    let lipschitz = p.smooth().lipschitz();
    if !(s > 0.0 && s.is_finite() && s * lipschitz <= 1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::StepOutOfRange { step: s, lipschitz });
    }
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: x.len() });
    }
    Ok(forward_backward(p, x, s))
}

/// Closed interval used as a search box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Grid minimization of `||y - u||^2 / (2s) + g(y)` over `box^d`, `d <= 2`.
///
/// Candidates are the lattice points `lo + i * resolution`. The search is
/// coarse-to-fine: each level scans a lattice that is a multiple of the final
/// one and the next level zooms into a few cells around the incumbent. This
/// finds the true lattice minimizer for convex objectives in one dimension
/// and for coordinate-separable ones (such as the l1 prox objective) in two.
/// Ties go to the lexicographically smallest lattice point.
pub fn brute_force_prox(
    g_value: impl Fn(&Vector) -> f64,
    u: &Vector,
    s: f64,
    bounds: Interval,
    resolution: f64,
) -> Result<Vector> {
    let d = u.len();
    if d == 0 || d > 2 {
        return Err(Error::InvalidParameter(format!("brute-force prox supports dimension 1 or 2, got {d}")));
    }
    if !(resolution > 0.0 && s > 0.0 && bounds.hi > bounds.lo) {
        return Err(Error::InvalidParameter("need resolution > 0, s > 0 and a non-empty box".into()));
    }
    let n_max = ((bounds.hi - bounds.lo) / resolution).floor() as i64;
    let objective = |idx: &[i64]| {
        let y = Vector::from_iterator(d, idx.iter().map(|&i| bounds.lo + i as f64 * resolution));
        (&y - u).norm_squared() / (2.0 * s) + g_value(&y)
    };

    const PER_LEVEL: i64 = 64;
    const ZOOM: i64 = 4;
    let mut stride = 1i64;
    while n_max / stride > PER_LEVEL {
        stride *= 2;
    }
    let mut lo = vec![0i64; d];
    let mut hi = vec![n_max; d];
    let mut best: Vec<i64>;
    loop {
        let mut incumbent: Option<(f64, Vec<i64>)> = None;
        let axes: Vec<Vec<i64>> = (0..d)
            .map(|j| {
                let first = lo[j].div_euclid(stride) * stride;
                (0..)
                    .map(|m| first + m * stride)
                    .take_while(|&i| i <= hi[j])
                    .filter(|&i| i >= lo[j])
                    .collect()
            })
            .collect();
        let mut visit = |idx: Vec<i64>| {
            let val = objective(&idx);
            // lexicographic scan order + strict comparison keeps the smallest tie
            if incumbent.as_ref().is_none_or(|(b, _)| val < *b) {
                incumbent = Some((val, idx));
            }
        };
        if d == 1 {
            for &i in &axes[0] {
                visit(vec![i]);
            }
        } else {
            for &i in &axes[0] {
                for &j in &axes[1] {
                    visit(vec![i, j]);
                }
            }
        }
        best = incumbent.expect("non-empty lattice").1;
        if stride == 1 {
            break;
        }
        for j in 0..d {
            lo[j] = (best[j] - ZOOM * stride).max(0);
            hi[j] = (best[j] + ZOOM * stride).min(n_max);
        }
        stride /= 2;
    }
    if best.iter().any(|&i| i == 0 || i == n_max) {
        return Err(Error::BoxTooSmall);
    }
    Ok(Vector::from_iterator(d, best.iter().map(|&i| bounds.lo + i as f64 * resolution)))
}
