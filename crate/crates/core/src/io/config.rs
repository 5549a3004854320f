//! Experiment configuration files (TOML).
//!
//! ```toml
//! variant = "nag_alpha"          # nag_alpha | m_nag_alpha | fista_alpha | m_fista_alpha
//! stepping = "two_step"          # two_step | phase_space (nag_alpha only)
//! alphas = [1.0, 1.5, 2.0]       # required
//! r = "2a+1"                     # "2a+1" or a list of reals, default "2a+1"
//! s = "critical"                 # "critical" (= 1/L), a real, or a list of reals
//! iters = 10000                  # default 10000
//! output = "out"                 # default "out"
//! certify = false
//! fit = false
//! fit_window = [100, 10000]      # default [100, 10000]
//! workers = 1                    # default 1
//! probe = 1000                   # k at which the ordering report compares gaps
//! x0 = [1.0, 1.0]                # default: all ones
//! seed = 0                       # recorded in trace metadata
//!
//! [problem]
//! kind = "figure1"               # figure1 | quadratic5 | lasso10 | lasso1d | logistic5
//!                                # | diagonal_quadratic | lasso | logistic
//! ```
//!
//! Parameterised problem kinds:
//!
//! - `diagonal_quadratic`: `eigenvalues` and optional `center`, or `dim`,
//!   `eig_min`, `eig_max`, `seed` for a random spectrum.
//! - `lasso`: `rows`, `cols`, `lambda_fraction`, `seed`.
//! - `logistic`: `samples`, `features`, `ridge`, `seed`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::momentum::MomentumParams;
use crate::problems::{self, library, Problem, Vector};
use crate::prox::Zero;
use crate::solvers::{Stepping, Variant};

pub const DEFAULT_ITERS: usize = 10_000;
pub const DEFAULT_FIT_WINDOW: (usize, usize) = (100, 10_000);
pub const DEFAULT_PROBE: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Figure1,
    /// The figure1 quadratic wrapped as a composite problem with `g = 0`.
    Figure1Composite,
    Quadratic5,
    Lasso10,
    Lasso1d,
    Logistic5,
    DiagonalQuadratic {
        eigenvalues: Option<Vec<f64>>,
        center: Option<Vec<f64>>,
        dim: Option<usize>,
        eig_min: Option<f64>,
        eig_max: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
    Lasso {
        rows: usize,
        cols: usize,
        #[serde(default = "default_lambda_fraction")]
        lambda_fraction: f64,
        #[serde(default)]
        seed: u64,
    },
    Logistic {
        samples: usize,
        features: usize,
        #[serde(default = "default_ridge")]
        ridge: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_lambda_fraction() -> f64 {
    0.1
}

fn default_ridge() -> f64 {
    0.1
}

impl FromStr for ProblemSpec {
    type Err = Error;

    /// Parses the named library problems (`figure1`, `lasso10`, ...).
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "figure1" => ProblemSpec::Figure1,
            "figure1_composite" => ProblemSpec::Figure1Composite,
            "quadratic5" => ProblemSpec::Quadratic5,
            "lasso10" => ProblemSpec::Lasso10,
            "lasso1d" => ProblemSpec::Lasso1d,
            "logistic5" => ProblemSpec::Logistic5,
            other => return Err(Error::Config(format!("unknown problem '{other}'"))),
        })
    }
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        Ok(match self {
            ProblemSpec::Figure1 => problems::figure1_quadratic().into(),
            ProblemSpec::Figure1Composite => library::figure1_composite().into(),
            ProblemSpec::Quadratic5 => library::quadratic5().into(),
            ProblemSpec::Lasso10 => library::lasso10().into(),
            ProblemSpec::Lasso1d => library::lasso1d().into(),
            ProblemSpec::Logistic5 => library::logistic5().into(),
            ProblemSpec::DiagonalQuadratic { eigenvalues, center, dim, eig_min, eig_max, seed } => {
                match (eigenvalues, dim) {
                    (Some(eigs), None) => {
                        let center = center.as_ref().map(|c| Vector::from_vec(c.clone()));
                        problems::diagonal_quadratic(eigs, center)?.into()
                    }
                    (None, Some(dim)) => {
                        if center.is_some() {
                            return Err(Error::Config("'center' needs explicit 'eigenvalues'".into()));
                        }
                        let lo = eig_min.ok_or_else(|| Error::Config("random spectrum needs 'eig_min'".into()))?;
                        let hi = eig_max.ok_or_else(|| Error::Config("random spectrum needs 'eig_max'".into()))?;
                        problems::random_diagonal_quadratic(*seed, *dim, lo, hi)?.into()
                    }
                    _ => return Err(Error::Config("diagonal_quadratic needs exactly one of 'eigenvalues' or 'dim'".into())),
                }
            }
            ProblemSpec::Lasso { rows, cols, lambda_fraction, seed } => {
                problems::random_lasso(*seed, *rows, *cols, *lambda_fraction)?.into()
            }
            ProblemSpec::Logistic { samples, features, ridge, seed } => {
                problems::random_logistic(*seed, *samples, *features, *ridge)?.into()
            }
        })
    }

    /// Smooth problems are wrapped with `g = 0` when a proximal variant is
    /// requested on them.
    pub fn build_for(&self, variant: Variant) -> Result<Problem> {
        let problem = self.build()?;
        match (&problem, variant.is_proximal()) {
            (Problem::Smooth(p), true) => {
                let id = p.id().to_string();
                let wrapped =
                    problems::CompositeProblem::new(id, p.clone(), std::sync::Arc::new(Zero), problems::REFERENCE_TOL)?;
                Ok(wrapped.into())
            }
            _ => Ok(problem),
        }
    }
}

/// How `r` is chosen for each `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub enum RRule {
    /// `r = 2 alpha + 1`.
    TwoAlphaPlusOne,
    List(Vec<f64>),
}

impl RRule {
    pub fn values(&self, alpha: f64) -> Vec<f64> {
        match self {
            RRule::TwoAlphaPlusOne => vec![2.0 * alpha + 1.0],
            RRule::List(rs) => rs.clone(),
        }
    }
}

impl FromStr for RRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "2a+1" | "2alpha+1" | "2α+1" => Ok(RRule::TwoAlphaPlusOne),
            _ => Ok(RRule::List(parse_real_list(&norm)?)),
        }
    }
}

/// Step-size rule.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    /// `s = 1/L` of the problem.
    Critical,
    List(Vec<f64>),
}

impl StepRule {
    pub fn values(&self, lipschitz: f64) -> Vec<f64> {
        match self {
            StepRule::Critical => vec![1.0 / lipschitz],
            StepRule::List(ss) => ss.clone(),
        }
    }
}

impl FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase();
        match norm.as_str() {
            "critical" | "1/l" => Ok(StepRule::Critical),
            _ => Ok(StepRule::List(parse_real_list(&norm)?)),
        }
    }
}

/// Comma-separated reals, e.g. `1,1.5,2`.
pub fn parse_real_list(s: &str) -> Result<Vec<f64>> {
    let values = s
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| Error::Config(format!("'{t}' is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("expected a list of finite numbers, got '{s}'")));
    }
    Ok(values)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawRealsOrRule {
    Rule(String),
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    problem: ProblemSpec,
    #[serde(default)]
    variant: Option<String>,
    #[serde(default)]
    stepping: Option<String>,
    alphas: Vec<f64>,
    #[serde(default)]
    r: Option<RawRealsOrRule>,
    #[serde(default)]
    s: Option<RawRealsOrRule>,
    #[serde(default)]
    iters: Option<usize>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    certify: bool,
    #[serde(default)]
    fit: bool,
    #[serde(default)]
    fit_window: Option<(usize, usize)>,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    probe: Option<usize>,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    seed: u64,
}

/// A validated experiment: the cross product `alphas x r x s` of runs on one
/// problem with one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub variant: Variant,
    pub stepping: Stepping,
    pub alphas: Vec<f64>,
    pub r_rule: RRule,
    pub s_rule: StepRule,
    pub iters: usize,
    pub output: PathBuf,
    pub certify: bool,
    pub fit: bool,
    pub fit_window: (usize, usize),
    pub workers: usize,
    pub probe: usize,
    pub x0: Option<Vec<f64>>,
    pub seed: u64,
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPoint {
    pub params: MomentumParams,
    pub step: f64,
}

impl ExperimentSpec {
    pub fn new(problem: ProblemSpec, variant: Variant, alphas: Vec<f64>) -> Self {
        Self {
            problem,
            variant,
            stepping: Stepping::TwoStep,
            alphas,
            r_rule: RRule::TwoAlphaPlusOne,
            s_rule: StepRule::Critical,
            iters: DEFAULT_ITERS,
            output: PathBuf::from("out"),
            certify: false,
            fit: false,
            fit_window: DEFAULT_FIT_WINDOW,
            workers: 1,
            probe: DEFAULT_PROBE,
            x0: None,
            seed: 0,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let rule_or_list = |v: RawRealsOrRule| -> Result<String> {
            Ok(match v {
                RawRealsOrRule::Rule(s) => s,
                RawRealsOrRule::One(x) => crate::io::format_real(x),
                RawRealsOrRule::Many(xs) => xs.iter().map(|x| crate::io::format_real(*x)).collect::<Vec<_>>().join(","),
            })
        };
        let mut spec = ExperimentSpec::new(
            raw.problem,
            raw.variant.as_deref().map(Variant::from_str).transpose()?.unwrap_or(Variant::NagAlpha),
            raw.alphas,
        );
        if let Some(st) = raw.stepping {
            spec.stepping = st.parse()?;
        }
        if let Some(r) = raw.r {
            spec.r_rule = rule_or_list(r)?.parse()?;
        }
        if let Some(s) = raw.s {
            spec.s_rule = rule_or_list(s)?.parse()?;
        }
        spec.iters = raw.iters.unwrap_or(DEFAULT_ITERS);
        if let Some(out) = raw.output {
            spec.output = out;
        }
        spec.certify = raw.certify;
        spec.fit = raw.fit;
        spec.fit_window = raw.fit_window.unwrap_or(DEFAULT_FIT_WINDOW);
        spec.workers = raw.workers.unwrap_or(1);
        spec.probe = raw.probe.unwrap_or(DEFAULT_PROBE);
        spec.x0 = raw.x0;
        spec.seed = raw.seed;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::Config("'alphas' must not be empty".into()));
        }
        for &a in &self.alphas {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Config(format!("alpha must be positive and finite, got {a}")));
            }
        }
        if let StepRule::List(ss) = &self.s_rule {
            if ss.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::Config("step sizes must be positive".into()));
            }
        }
        if self.workers == 0 {
            return Err(Error::Config("'workers' must be at least 1".into()));
        }
        let (lo, hi) = self.fit_window;
        if lo < 2 || hi <= 2 * lo {
            return Err(Error::Config(format!("fit_window needs k_lo >= 2 and k_hi > 2 k_lo, got [{lo}, {hi}]")));
        }
        if self.stepping == Stepping::PhaseSpace && self.variant != Variant::NagAlpha {
            return Err(Error::Config("phase_space stepping is only defined for nag_alpha".into()));
        }
        Ok(())
    }

    /// Alphas with duplicates removed, in ascending order.
    pub fn distinct_alphas(&self) -> Vec<f64> {
        let mut a = self.alphas.clone();
        a.sort_by(f64::total_cmp);
        a.dedup();
        a
    }

    /// The sweep in deterministic order: by alpha, then r, then s.
    pub fn run_points(&self, lipschitz: f64) -> Result<Vec<RunPoint>> {
        let mut out = Vec::new();
        for alpha in self.distinct_alphas() {
            let mut rs = self.r_rule.values(alpha);
            rs.sort_by(f64::total_cmp);
            rs.dedup();
            for r in rs {
                let params = MomentumParams::new(alpha, r)?;
                let mut ss = self.s_rule.values(lipschitz);
                ss.sort_by(f64::total_cmp);
                ss.dedup();
                for step in ss {
                    out.push(RunPoint { params, step });
                }
            }
        }
        Ok(out)
    }

    pub fn initial_point(&self, dim: usize) -> Result<Vector> {
        match &self.x0 {
            None => Ok(Vector::from_element(dim, 1.0)),
            Some(v) if v.len() == dim => Ok(Vector::from_vec(v.clone())),
            Some(v) => Err(Error::DimensionMismatch { expected: dim, got: v.len() }),
        }
    }
}
