//! Objective oracles and the test-problem library.
//!
//! A [`SmoothProblem`] wraps a value/gradient oracle together with its
//! gradient Lipschitz constant `L`, strong-convexity modulus `mu` and a known
//! minimizer. A [`CompositeProblem`] adds a regularizer `g` with a proximal
//! map; its minimizer is computed once at construction by a long
//! proximal-gradient run and cached.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::prox::{self, L1Norm, ProxResult, Regularizer, Zero};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default stopping tolerance on `||G_s(x)||` for composite reference solves.
pub const REFERENCE_TOL: f64 = 1e-12;
/// Iteration cap for composite reference solves.
pub const REFERENCE_MAX_ITER: usize = 1_000_000;

pub trait SmoothOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
}

/// `f(x) = 1/2 sum_i h_i (x_i - c_i)^2`
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    pub hessian: Vector,
    pub center: Vector,
}

impl SmoothOracle for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.hessian.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.hessian
            .iter()
            .zip(x.iter().zip(self.center.iter()))
            .map(|(h, (xi, ci))| 0.5 * h * (xi - ci) * (xi - ci))
            .sum()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        (x - &self.center).component_mul(&self.hessian)
    }
}

/// `f(x) = 1/2 ||Ax - b||^2`
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub a: Matrix,
    pub b: Vector,
}

impl SmoothOracle for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.a.tr_mul(&(&self.a * x - &self.b))
    }
}

/// Ridge-regularized logistic loss
/// `f(x) = (1/n) sum_i log(1 + exp(-y_i a_i^T x)) + (rho/2) ||x||^2`.
#[derive(Debug, Clone)]
pub struct L2Logistic {
    pub features: Matrix,
    pub labels: Vector,
    pub ridge: f64,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl SmoothOracle for L2Logistic {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &Vector) -> f64 {
        let n = self.features.nrows() as f64;
        let margins = &self.features * x;
        let loss: f64 = margins.iter().zip(self.labels.iter()).map(|(m, y)| softplus(-y * m)).sum();
        loss / n + 0.5 * self.ridge * x.norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let n = self.features.nrows() as f64;
        let margins = &self.features * x;
        let weights = Vector::from_iterator(
            margins.len(),
            margins.iter().zip(self.labels.iter()).map(|(m, y)| -y * sigmoid(-y * m) / n),
        );
        self.features.tr_mul(&weights) + x * self.ridge
    }
}

/// `f = 0`.
#[derive(Debug, Clone)]
pub struct ZeroFunction {
    pub dim: usize,
}

impl SmoothOracle for ZeroFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &Vector) -> Vector {
        Vector::zeros(self.dim)
    }
}

#[derive(Debug, Clone)]
pub struct SmoothProblem {
    id: String,
    oracle: Arc<dyn SmoothOracle>,
    lipschitz: f64,
    strong_convexity: f64,
    minimizer: Vector,
    min_value: f64,
}

impl SmoothProblem {
    /// Bundles an oracle with its constants. `mu = 0` is accepted for
    /// exploration; rate certification requires `mu > 0`.
    pub fn new(
        id: impl Into<String>,
        oracle: Arc<dyn SmoothOracle>,
        lipschitz: f64,
        strong_convexity: f64,
        minimizer: Vector,
        min_value: f64,
    ) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::InvalidParameter(format!("L must be positive, got {lipschitz}")));
        }
        if !(strong_convexity >= 0.0 && strong_convexity <= lipschitz) {
            return Err(Error::InvalidParameter(format!("mu must lie in [0, L], got {strong_convexity}")));
        }
        if minimizer.len() != oracle.dim() {
            return Err(Error::DimensionMismatch { expected: oracle.dim(), got: minimizer.len() });
        }
        Ok(Self { id: id.into(), oracle, lipschitz, strong_convexity, minimizer, min_value })
    }

    /// The constant zero function with an arbitrary gradient bound `L`.
    pub fn zero(dim: usize, lipschitz: f64) -> Self {
        Self::new("zero", Arc::new(ZeroFunction { dim }), lipschitz, 0.0, Vector::zeros(dim), 0.0)
            .expect("valid zero problem")
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.oracle.value(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.oracle.gradient(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn minimizer(&self) -> &Vector {
        &self.minimizer
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }
}

#[derive(Debug, Clone)]
pub struct CompositeProblem {
    id: String,
    smooth: SmoothProblem,
    regularizer: Arc<dyn Regularizer>,
    minimizer: Vector,
    min_value: f64,
}

impl CompositeProblem {
    /// Builds `Phi = f + g` and solves for its minimizer to `||G_s|| <= tol`.
    pub fn new(id: impl Into<String>, smooth: SmoothProblem, regularizer: Arc<dyn Regularizer>, tol: f64) -> Result<Self> {
        let mut p = Self {
            id: id.into(),
            minimizer: Vector::zeros(smooth.dim()),
            min_value: 0.0,
            smooth,
            regularizer,
        };
        let x_hat = reference_minimizer(&p, tol)?;
        p.min_value = p.objective(&x_hat);
        p.minimizer = x_hat;
        Ok(p)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn smooth(&self) -> &SmoothProblem {
        &self.smooth
    }

    pub fn regularizer(&self) -> &dyn Regularizer {
        self.regularizer.as_ref()
    }

    /// `Phi(x) = f(x) + g(x)`
    pub fn objective(&self, x: &Vector) -> f64 {
        self.smooth.value(x) + self.regularizer.value(x)
    }

    pub fn minimizer(&self) -> &Vector {
        &self.minimizer
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }
}

/// Minimizer of `Phi` by plain proximal gradient at `s = 1/L`, started from
/// the origin, stopping once `||G_s(x)|| <= tol`.
pub fn reference_minimizer(p: &CompositeProblem, tol: f64) -> Result<Vector> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let s = 1.0 / p.smooth().lipschitz();
    let mut x = Vector::zeros(p.dim());
    let mut residual = f64::INFINITY;
    for _ in 0..REFERENCE_MAX_ITER {
        let ProxResult { point, subgradient, .. } = prox::forward_backward(p, &x, s);
        residual = subgradient.norm();
        if residual <= tol {
            return Ok(x);
        }
        if !residual.is_finite() {
            break;
        }
        x = point;
    }
    Err(Error::NotConverged { iterations: REFERENCE_MAX_ITER, residual })
}

/// Either kind of problem, as consumed by the solvers and diagnostics.
#[derive(Debug, Clone)]
pub enum Problem {
    Smooth(SmoothProblem),
    Composite(CompositeProblem),
}

impl From<SmoothProblem> for Problem {
    fn from(p: SmoothProblem) -> Self {
        Problem::Smooth(p)
    }
}

impl From<CompositeProblem> for Problem {
    fn from(p: CompositeProblem) -> Self {
        Problem::Composite(p)
    }
}

impl Problem {
    pub fn id(&self) -> &str {
        match self {
            Problem::Smooth(p) => p.id(),
            Problem::Composite(p) => p.id(),
        }
    }

    pub fn dim(&self) -> usize {
        self.smooth().dim()
    }

    pub fn smooth(&self) -> &SmoothProblem {
        match self {
            Problem::Smooth(p) => p,
            Problem::Composite(p) => p.smooth(),
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self, Problem::Composite(_))
    }

    pub fn lipschitz(&self) -> f64 {
        self.smooth().lipschitz()
    }

    pub fn strong_convexity(&self) -> f64 {
        self.smooth().strong_convexity()
    }

    /// `f` for smooth problems, `Phi` for composite ones.
    pub fn objective(&self, x: &Vector) -> f64 {
        match self {
            Problem::Smooth(p) => p.value(x),
            Problem::Composite(p) => p.objective(x),
        }
    }

    pub fn minimizer(&self) -> &Vector {
        match self {
            Problem::Smooth(p) => p.minimizer(),
            Problem::Composite(p) => p.minimizer(),
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            Problem::Smooth(p) => p.min_value(),
            Problem::Composite(p) => p.min_value(),
        }
    }

    /// Forward-backward step from `y`. For smooth problems `subgradient` is
    /// the gradient itself and `point = y - s grad f(y)`.
    pub fn forward_step(&self, y: &Vector, s: f64) -> ProxResult {
        match self {
            Problem::Smooth(p) => {
                let grad = p.gradient(y);
                ProxResult { point: y - &grad * s, subgradient: grad, step: s }
            }
            Problem::Composite(p) => prox::forward_backward(p, y, s),
        }
    }
}

fn extreme_eigenvalues(gram: &Matrix) -> (f64, f64) {
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `f(x1, x2) = 5e-3 x1^2 + x2^2`, so `L = 2`, `mu = 0.01`, `x* = 0`.
pub fn figure1_quadratic() -> SmoothProblem {
    let oracle = DiagonalQuadratic { hessian: Vector::from_vec(vec![0.01, 2.0]), center: Vector::zeros(2) };
    SmoothProblem::new("figure1", Arc::new(oracle), 2.0, 0.01, Vector::zeros(2), 0.0).expect("valid constants")
}

/// `f(x) = 1/2 sum h_i (x_i - c_i)^2` with strictly positive curvatures.
pub fn diagonal_quadratic(eigenvalues: &[f64], center: Option<Vector>) -> Result<SmoothProblem> {
    if eigenvalues.is_empty() || eigenvalues.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidParameter("eigenvalues must be positive and finite".into()));
    }
    let dim = eigenvalues.len();
    let center = center.unwrap_or_else(|| Vector::zeros(dim));
    if center.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
    }
    let lipschitz = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mu = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let oracle = DiagonalQuadratic { hessian: Vector::from_column_slice(eigenvalues), center: center.clone() };
    SmoothProblem::new(format!("diagonal_quadratic{dim}"), Arc::new(oracle), lipschitz, mu, center, 0.0)
}

/// `f(x) = 1/2 ||Ax - b||^2` for `A` with full column rank.
pub fn least_squares(a: Matrix, b: Vector) -> Result<SmoothProblem> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.len() });
    }
    let gram = a.tr_mul(&a);
    let (mu, lipschitz) = extreme_eigenvalues(&gram);
    if !(mu > 1e-12 * lipschitz) || a.nrows() < a.ncols() {
        return Err(Error::RankDeficient { lambda_min: mu, lambda_max: lipschitz });
    }
    let minimizer = gram
        .cholesky()
        .ok_or(Error::RankDeficient { lambda_min: mu, lambda_max: lipschitz })?
        .solve(&a.tr_mul(&b));
    let oracle = LeastSquares { a, b };
    let min_value = oracle.value(&minimizer);
    SmoothProblem::new(format!("least_squares{}", oracle.dim()), Arc::new(oracle), lipschitz, mu, minimizer, min_value)
}

/// Lasso: `1/2 ||Ax - b||^2 + lam ||x||_1`, with `A` of full column rank.
pub fn make_lasso(a: Matrix, b: Vector, lam: f64) -> Result<CompositeProblem> {
    let smooth = least_squares(a, b)?;
    let dim = smooth.dim();
    let reg = L1Norm::new(lam)?;
    CompositeProblem::new(format!("lasso{dim}"), smooth, Arc::new(reg), REFERENCE_TOL)
}

/// Ridge logistic regression. `L = lambda_max(A^T A)/(4n) + rho` bounds the
/// Hessian everywhere and `mu = rho`; the minimizer is found by gradient
/// descent at `s = 1/L`.
pub fn l2_logistic(features: Matrix, labels: Vector, ridge: f64) -> Result<SmoothProblem> {
    if features.nrows() != labels.len() {
        return Err(Error::DimensionMismatch { expected: features.nrows(), got: labels.len() });
    }
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge weight must be positive, got {ridge}")));
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidParameter("labels must be +1 or -1".into()));
    }
    let n = features.nrows() as f64;
    let (_, top) = extreme_eigenvalues(&features.tr_mul(&features));
    let lipschitz = top / (4.0 * n) + ridge;
    let oracle = L2Logistic { features, labels, ridge };
    let dim = oracle.dim();

    let s = 1.0 / lipschitz;
    let mut x = Vector::zeros(dim);
    let mut converged = false;
    for _ in 0..REFERENCE_MAX_ITER {
        let g = oracle.gradient(&x);
        if g.norm() <= 1e-13 * x.norm().max(1.0) {
            converged = true;
            break;
        }
        x -= g * s;
    }
    if !converged {
        let residual = oracle.gradient(&x).norm();
        return Err(Error::NotConverged { iterations: REFERENCE_MAX_ITER, residual });
    }
    let min_value = oracle.value(&x);
    SmoothProblem::new(format!("logistic{dim}"), Arc::new(oracle), lipschitz, ridge, x, min_value)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    // column-major fill order is part of the reproducibility contract
    Matrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vector {
    Vector::from_fn(len, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Diagonal quadratic whose curvatures include both endpoints of
/// `[eig_min, eig_max]` and are otherwise uniform in between; the center is
/// standard normal.
pub fn random_diagonal_quadratic(seed: u64, dim: usize, eig_min: f64, eig_max: f64) -> Result<SmoothProblem> {
    if dim == 0 || !(eig_min > 0.0 && eig_max >= eig_min) {
        return Err(Error::InvalidParameter("need dim >= 1 and 0 < eig_min <= eig_max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eigs: Vec<f64> = (0..dim).map(|_| rng.random_range(eig_min..=eig_max)).collect();
    eigs[0] = eig_min;
    if dim > 1 {
        eigs[dim - 1] = eig_max;
    }
    let center = gaussian_vector(&mut rng, dim, 1.0);
    diagonal_quadratic(&eigs, Some(center))
}

/// Gaussian design `A` (scaled by `1/sqrt(rows)`), a sparse planted signal,
/// and `lam = lambda_fraction * ||A^T b||_inf`.
pub fn random_lasso(seed: u64, rows: usize, cols: usize, lambda_fraction: f64) -> Result<CompositeProblem> {
    if rows < cols || cols == 0 {
        return Err(Error::InvalidParameter(format!("need rows >= cols >= 1, got {rows}x{cols}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, rows, cols, 1.0 / (rows as f64).sqrt());
    let signal = Vector::from_fn(cols, |i, _| if i % 3 == 0 { (i as f64 + 1.0).recip() * 3.0 } else { 0.0 });
    let noise = gaussian_vector(&mut rng, rows, 0.1);
    let b = &a * signal + noise;
    let lam = lambda_fraction * a.tr_mul(&b).amax();
    make_lasso(a, b, lam)
}

/// Logistic regression on Gaussian features with labels drawn from a
/// planted linear model.
pub fn random_logistic(seed: u64, samples: usize, features: usize, ridge: f64) -> Result<SmoothProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, samples, features, 1.0);
    let w = gaussian_vector(&mut rng, features, 1.0);
    let labels = Vector::from_iterator(
        samples,
        (&a * &w).iter().map(|&m| {
            let u: f64 = rng.random();
            if u < sigmoid(m) {
                1.0
            } else {
                -1.0
            }
        }),
    );
    l2_logistic(a, labels, ridge)
}

/// Fixed instances used by tests, acceptance checks and the CLI.
pub mod library {
    use super::*;

    pub const LASSO_SEED: u64 = 20_250_117;

    /// The 10-dimensional lasso instance: 30 x 10 Gaussian design,
    /// `lam = 0.1 ||A^T b||_inf`.
    pub fn lasso10() -> CompositeProblem {
        random_lasso(LASSO_SEED, 30, 10, 0.1).expect("library lasso is well posed")
    }

    pub fn lasso1d() -> CompositeProblem {
        make_lasso(Matrix::from_element(1, 1, 1.0), Vector::from_element(1, 1.0), 0.3).expect("1-D lasso")
    }

    pub fn quadratic5() -> SmoothProblem {
        random_diagonal_quadratic(7, 5, 0.05, 4.0).expect("library quadratic")
    }

    pub fn logistic5() -> SmoothProblem {
        random_logistic(11, 40, 5, 0.1).expect("library logistic")
    }

    pub fn smooth_problems() -> Vec<SmoothProblem> {
        vec![figure1_quadratic(), quadratic5(), lasso10().smooth().clone(), logistic5()]
    }

    pub fn composite_problems() -> Vec<CompositeProblem> {
        vec![lasso10(), lasso1d()]
    }

    /// `Phi = f + 0` over the figure1 quadratic.
    pub fn figure1_composite() -> CompositeProblem {
        CompositeProblem::new("figure1+zero", figure1_quadratic(), Arc::new(Zero), REFERENCE_TOL)
            .expect("trivial composite")
    }
}
