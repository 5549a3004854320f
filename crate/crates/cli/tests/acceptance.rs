//! Acceptance suite: one PASS/FAIL line per criterion, printed to stdout
//! (run with `--nocapture` to see them). Reference values come from
//! independent implementations written here, not from the library.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use alphanag::analysis::{self, CertContext, RateFit};
use alphanag::io::config::RRule;
use alphanag::io::{self as trace_io, IterationRecord};
use alphanag::lyapunov::{self, DEFAULT_SLACK, INEQUALITY_TOL};
use alphanag::momentum::MomentumParams;
use alphanag::problems::{self, library, Matrix, Problem, Vector};
use alphanag::prox::{self, Interval, L1Norm, Regularizer};
use alphanag::solvers::{self, SolverConfig, Stepping, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);
type ClassicalCase<'a> = (&'a str, &'a Problem, &'a dyn Classical, &'a [f64], f64, Variant);

const CERTIFIED: [(f64, f64); 3] = [(1.0, 3.0), (1.5, 4.0), (2.0, 5.0)];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(budget: Duration, start: Instant, what: &str) -> Result<(), String> {
    let used = start.elapsed();
    ensure(used <= budget, || format!("{what} took {used:?}, budget {budget:?}"))
}

fn cfg(alpha: f64, r: f64, s: f64, iters: usize, variant: Variant) -> SolverConfig {
    SolverConfig::new(MomentumParams::new(alpha, r).unwrap(), s, iters, variant)
}

fn ones(n: usize) -> Vector {
    Vector::from_element(n, 1.0)
}

// ---------------------------------------------------------------------------
// Independent classical references (alpha = 1): plain Vec<f64> arithmetic.

struct Lasso {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    lambda: f64,
}

impl Lasso {
    fn random(seed: u64, rows: usize, cols: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let b = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        Lasso { a, b, lambda: 0.05 }
    }

    fn matrix(&self) -> Matrix {
        Matrix::from_fn(self.a.len(), self.a[0].len(), |i, j| self.a[i][j])
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| {
                let res: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - bi;
                0.5 * res * res
            })
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (row, bi) in self.a.iter().zip(&self.b) {
            let res: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - bi;
            for (gj, aij) in g.iter_mut().zip(row) {
                *gj += aij * res;
            }
        }
        g
    }
}

/// Classical oracle for one problem: value, gradient, prox of `s g`, `g`.
trait Classical {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn prox(&self, u: Vec<f64>, _s: f64) -> Vec<f64> {
        u
    }
}

struct Quad {
    h: Vec<f64>,
}

impl Classical for Quad {
    fn value(&self, x: &[f64]) -> f64 {
        self.h.iter().zip(x).map(|(h, x)| 0.5 * h * x * x).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.h.iter().zip(x).map(|(h, x)| h * x).collect()
    }
}

struct SmoothLasso<'a>(&'a Lasso);

impl Classical for SmoothLasso<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.smooth_value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.0.gradient(x)
    }
}

struct FullLasso<'a>(&'a Lasso);

impl Classical for FullLasso<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.smooth_value(x) + self.0.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.0.gradient(x)
    }
    fn prox(&self, u: Vec<f64>, s: f64) -> Vec<f64> {
        let t = s * self.0.lambda;
        u.into_iter().map(|v| v.signum() * (v.abs() - t).max(0.0)).collect()
    }
}

fn forward(p: &dyn Classical, y: &[f64], s: f64) -> Vec<f64> {
    let g = p.gradient(y);
    p.prox(y.iter().zip(&g).map(|(y, g)| y - s * g).collect(), s)
}

/// Classical accelerated method with `theta_k = (k-1)/(k+3)`; the monotone
/// version keeps the better of `z_k` and `x_{k-1}` and extrapolates with
/// `(k+2)/(k+3)` toward `z_k`. Returns `x_0, ..., x_n`.
fn classical_run(p: &dyn Classical, x0: &[f64], s: f64, n: usize, monotone: bool) -> Vec<Vec<f64>> {
    let mut xs = vec![x0.to_vec()];
    let mut y = x0.to_vec();
    for k in 1..=n {
        let kf = k as f64;
        let z = forward(p, &y, s);
        let prev = xs[k - 1].clone();
        let x = if monotone && p.value(&z) > p.value(&prev) { prev.clone() } else { z.clone() };
        let theta = (kf - 1.0) / (kf + 3.0);
        let mono = (kf + 2.0) / (kf + 3.0);
        y = (0..x.len())
            .map(|i| {
                let base = x[i] + theta * (x[i] - prev[i]);
                if monotone {
                    base + mono * (z[i] - x[i])
                } else {
                    base
                }
            })
            .collect();
        xs.push(x);
    }
    xs
}

fn max_rel_deviation(lib: &[solvers::SolverState], reference: &[Vec<f64>]) -> f64 {
    lib.iter()
        .zip(reference)
        .map(|(st, xr)| {
            let scale = xr.iter().fold(0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            st.x.iter().zip(xr).fold(0f64, |m, (a, b)| m.max((a - b).abs())) / scale
        })
        .fold(0.0, f64::max)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let lasso = Lasso::random(99, 30, 10);
    let lib_lasso: Problem = problems::make_lasso(lasso.matrix(), Vector::from_vec(lasso.b.clone()), lasso.lambda)
        .map_err(|e| e.to_string())?
        .into();
    let lib_ls: Problem =
        problems::least_squares(lasso.matrix(), Vector::from_vec(lasso.b.clone())).map_err(|e| e.to_string())?.into();
    let figure1: Problem = problems::figure1_quadratic().into();
    let figure1_g0: Problem = library::figure1_composite().into();
    let quad = Quad { h: vec![0.01, 2.0] };
    let (smooth_ref, full_ref) = (SmoothLasso(&lasso), FullLasso(&lasso));

    let x0_2 = [1.0, 1.0];
    let x0_10 = [0.5; 10];
    let s_lasso = 1.0 / lib_lasso.lipschitz();
    let cases: Vec<ClassicalCase> = vec![
        ("nag/figure1", &figure1, &quad, &x0_2, 0.5, Variant::NagAlpha),
        ("m-nag/figure1", &figure1, &quad, &x0_2, 0.5, Variant::MNagAlpha),
        ("fista/figure1", &figure1_g0, &quad, &x0_2, 0.5, Variant::FistaAlpha),
        ("m-fista/figure1", &figure1_g0, &quad, &x0_2, 0.5, Variant::MFistaAlpha),
        ("nag/lasso-smooth", &lib_ls, &smooth_ref, &x0_10, s_lasso, Variant::NagAlpha),
        ("m-nag/lasso-smooth", &lib_ls, &smooth_ref, &x0_10, s_lasso, Variant::MNagAlpha),
        ("fista/lasso", &lib_lasso, &full_ref, &x0_10, s_lasso, Variant::FistaAlpha),
        ("m-fista/lasso", &lib_lasso, &full_ref, &x0_10, s_lasso, Variant::MFistaAlpha),
    ];
    let mut worst = 0.0f64;
    for (name, problem, reference, x0, s, variant) in cases {
        let t = solvers::run_recorded(problem, &cfg(1.0, 3.0, s, 100, variant), &Vector::from_row_slice(x0))
            .map_err(|e| format!("{name}: {e}"))?;
        let xs = classical_run(reference, x0, s, 100, variant.is_monotone());
        let dev = max_rel_deviation(&t.states, &xs);
        ensure(dev <= 1e-14, || format!("{name}: max relative deviation {dev:e}"))?;
        worst = worst.max(dev);
    }
    within(Duration::from_secs(1), start, "classical comparison")?;
    Ok(format!("8 runs x 100 iterations, max relative deviation {worst:e}"))
}

// ---------------------------------------------------------------------------

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut problems_list: Vec<Problem> = library::smooth_problems().into_iter().map(Problem::from).collect();
    problems_list.extend(library::composite_problems().into_iter().map(Problem::from));
    let mut worst = f64::NEG_INFINITY;
    for (i, p) in problems_list.iter().enumerate() {
        for factor in [1.0, 0.5] {
            let s = factor / p.lipschitz();
            let res = lyapunov::sampled_inequality_check(p, s, p.strong_convexity(), 1000, 1000 + i as u64);
            ensure(res.len() == 1000, || "wrong sample count".into())?;
            if let Some(bad) = res.iter().find(|r| r.violated()) {
                return Err(format!("{} at s={factor}/L: pair {} residual {:e}", p.id(), bad.k, bad.residual));
            }
            worst = res.iter().map(|r| r.residual / r.scale).fold(worst, f64::max);
        }
    }
    let fig: Problem = problems::figure1_quadratic().into();
    let control = lyapunov::sampled_inequality_check(&fig, 2.0 / fig.lipschitz(), fig.strong_convexity(), 1000, 7);
    let violations = control.iter().filter(|r| r.violated()).count();
    ensure(violations > 0, || "s = 2/L produced no violation on figure1".into())?;
    within(Duration::from_secs(5), start, "inequality suite")?;
    Ok(format!(
        "{} problems x 2 steps x 1000 pairs clean (max residual/scale {worst:e} <= {INEQUALITY_TOL:e}); s=2/L control: {violations} violations",
        problems_list.len()
    ))
}

// ---------------------------------------------------------------------------

fn criterion_3() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let resolution = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..200 {
        let dim = 1 + i % 2;
        let u = Vector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0));
        let lambda = rng.random_range(0.0..1.5);
        let s = rng.random_range(0.1..1.0);
        let reg = L1Norm::new(lambda).map_err(|e| e.to_string())?;
        let closed = prox::soft_threshold(&u, s * lambda);
        let via_trait = reg.prox(&u, s);
        ensure(closed == via_trait, || format!("instance {i}: regularizer prox differs from soft threshold"))?;
        let brute = prox::brute_force_prox(|y| lambda * y.iter().map(|v| v.abs()).sum::<f64>(), &u, s, Interval { lo: -3.0, hi: 3.0 }, resolution)
            .map_err(|e| format!("instance {i}: {e}"))?;
        let dev = (&brute - &closed).amax();
        ensure(dev <= resolution, || format!("instance {i}: |brute - closed| = {dev:e}"))?;
        worst = worst.max(dev);
    }
    within(Duration::from_secs(10), start, "prox oracle")?;
    Ok(format!("200 instances, max deviation {worst:e} <= {resolution:e}"))
}

// ---------------------------------------------------------------------------

/// Checks a certificate from the records alone, without the library's
/// certification code. Returns the `K` found.
fn recheck_certificate(records: &[IterationRecord], alpha: f64, r: f64, s: f64, f_star: f64) -> Result<usize, String> {
    let floor = 1e3 * f64::EPSILON * f_star.abs() + 1e-300;
    let start = if alpha < 1.0 { 2 } else { 1 };
    let usable: Vec<&IterationRecord> =
        records.iter().skip(start).take_while(|r| r.f_gap > floor).collect();
    // smallest K whose tail is non-increasing with the relative slack
    let mut k_star = None;
    'outer: for (i, rec) in usable.iter().enumerate() {
        for w in usable[i..].windows(2) {
            if w[1].lyap_total > w[0].lyap_total * (1.0 + DEFAULT_SLACK) + DEFAULT_SLACK * rec.lyap_total.abs() {
                continue 'outer;
            }
        }
        k_star = Some(i);
        break;
    }
    let i = k_star.ok_or("no non-increasing tail")?;
    let e_k = usable[i].lyap_total;
    for (n, rec) in usable[i..].iter().enumerate() {
        let k = rec.k as f64;
        let tau = k.powf(alpha) * (k.powf(alpha) + r * k.powf(alpha - 1.0));
        let bound = e_k / (s * tau);
        if rec.f_gap > bound * (1.0 + 2.0 * DEFAULT_SLACK * (n as f64 + 1.0)) {
            return Err(format!("bound fails at k={}: gap {:e} > {:e}", rec.k, rec.f_gap, bound));
        }
    }
    Ok(usable[i].k)
}

fn certify_runs(problem: &Problem, variant: Variant, max_k: usize, iters: usize) -> Result<Vec<(f64, usize)>, String> {
    let s = 1.0 / problem.lipschitz();
    let mut out = Vec::new();
    for (alpha, r) in CERTIFIED {
        let start = Instant::now();
        let c = cfg(alpha, r, s, iters, variant);
        let t = solvers::run_recorded(problem, &c, &ones(problem.dim())).map_err(|e| e.to_string())?;
        let cert = analysis::certify(&t, problem, &c);
        ensure(cert.passed(), || format!("alpha={alpha}: {:?}", cert.notes))?;
        let k = cert.detected_k.unwrap();
        ensure(k <= max_k, || format!("alpha={alpha}: K = {k} > {max_k}"))?;
        let k_check = recheck_certificate(&t.records, alpha, r, s, problem.min_value()).map_err(|e| format!("alpha={alpha}: {e}"))?;
        ensure(k_check == k, || format!("alpha={alpha}: independent K {k_check} != library K {k}"))?;
        if variant.is_monotone() {
            let ok = t.records.windows(2).all(|w| w[1].f_gap <= w[0].f_gap);
            ensure(ok, || format!("alpha={alpha}: objective increased"))?;
        }
        within(Duration::from_secs(2), start, &format!("alpha={alpha} certificate"))?;
        out.push((alpha, k));
    }
    Ok(out)
}

fn criterion_4() -> Check {
    let p: Problem = problems::figure1_quadratic().into();
    let ks = certify_runs(&p, Variant::NagAlpha, 200, 10_000)?;
    Ok(format!("figure1 NAG-alpha, s=0.5, 10^4 iterations: (alpha, K) = {ks:?}"))
}

// ---------------------------------------------------------------------------

fn criterion_5() -> Check {
    let mut worst_forms = 0.0f64;
    let fig: Problem = problems::figure1_quadratic().into();
    let fig_g0: Problem = library::figure1_composite().into();
    for (problem, variant) in [(&fig, Variant::NagAlpha), (&fig_g0, Variant::FistaAlpha)] {
        for (alpha, r) in CERTIFIED {
            let c = cfg(alpha, r, 1.0 / problem.lipschitz(), 10_000, variant);
            let t = solvers::run_recorded(problem, &c, &ones(problem.dim())).map_err(|e| e.to_string())?;
            for st in t.states.iter().filter(|st| st.k >= 2) {
                let ev = lyapunov::energy_velocity_form(st, problem, &c).map_err(|e| e.to_string())?.total;
                let exy = lyapunov::energy_xy_form(st, problem, &c).map_err(|e| e.to_string())?.total;
                let rel = (ev - exy).abs() / ev.abs().max(exy.abs()).max(f64::MIN_POSITIVE);
                ensure(rel <= 1e-10, || format!("{} alpha={alpha} k={}: forms differ by {rel:e}", problem.id(), st.k))?;
                worst_forms = worst_forms.max(rel);
            }
        }
    }
    // agreement is measured on the iterates; the gap is quadratic in x and
    // so doubles their relative deviation, which is reported alongside
    let mut worst_modes = 0.0f64;
    let mut worst_gap = 0.0f64;
    for (alpha, r) in CERTIFIED {
        let two = cfg(alpha, r, 0.5, 1000, Variant::NagAlpha);
        let phase = two.with_stepping(Stepping::PhaseSpace);
        let a = solvers::run_recorded(&fig, &two, &ones(2)).map_err(|e| e.to_string())?;
        let b = solvers::run_recorded(&fig, &phase, &ones(2)).map_err(|e| e.to_string())?;
        ensure(a.states.len() == 1001 && b.states.len() == 1001, || "runs stopped early".into())?;
        for (sa, sb) in a.states.iter().zip(&b.states) {
            let rel_x = (&sa.x - &sb.x).norm() / sa.x.norm().max(f64::MIN_POSITIVE);
            let rel_y = (&sa.y - &sb.y).norm() / sa.y.norm().max(f64::MIN_POSITIVE);
            ensure(rel_x <= 1e-10 && rel_y <= 1e-10, || format!("alpha={alpha} k={}: modes differ ({rel_x:e}, {rel_y:e})", sa.k))?;
            worst_modes = worst_modes.max(rel_x).max(rel_y);
            worst_gap = worst_gap.max((sa.f_x - sb.f_x).abs() / sa.f_x.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(format!(
        "forms max rel {worst_forms:e}; phase-space vs two-step iterates max rel {worst_modes:e} (gap max rel {worst_gap:e})"
    ))
}

// ---------------------------------------------------------------------------

fn criterion_6() -> Check {
    let fig: Problem = problems::figure1_quadratic().into();
    let lasso: Problem = library::lasso10().into();
    let a = certify_runs(&fig, Variant::MNagAlpha, 500, 10_000)?;
    let b = certify_runs(&lasso, Variant::MFistaAlpha, 500, 10_000)?;
    Ok(format!("M-NAG figure1 (alpha, K) = {a:?}; M-FISTA lasso10 (alpha, K) = {b:?}"))
}

// ---------------------------------------------------------------------------

fn criterion_7() -> Check {
    let start = Instant::now();
    let fig: Problem = problems::figure1_quadratic().into();
    let mut summary = Vec::new();
    for variant in [Variant::NagAlpha, Variant::MNagAlpha] {
        let report = analysis::compare_alphas(&fig, variant, &[1.0, 1.5, 2.0], &RRule::TwoAlphaPlusOne, 0.5, 1000, &ones(2))
            .map_err(|e| e.to_string())?;
        // direct per-alpha runs as the reference for the tabulated gaps
        for row in &report.rows {
            let recs = solvers::run(&fig, &cfg(row.alpha, 2.0 * row.alpha + 1.0, 0.5, 1000, variant), &ones(2), &mut [])
                .map_err(|e| e.to_string())?;
            ensure(row.gap == Some(recs[1000].f_gap), || format!("{variant} alpha={}: report gap mismatch", row.alpha))?;
        }
        let gaps: Vec<f64> = report.rows.iter().map(|r| r.gap.unwrap()).collect();
        ensure(gaps[2] < gaps[1] && gaps[1] < gaps[0], || format!("{variant}: gaps {gaps:?} not ordered"))?;
        summary.push(format!("{variant}: {:.3e} > {:.3e} > {:.3e}", gaps[0], gaps[1], gaps[2]));
    }
    within(Duration::from_secs(1), start, "ordering")?;
    Ok(summary.join("; "))
}

// ---------------------------------------------------------------------------

fn criterion_8() -> Check {
    let fig: Problem = problems::figure1_quadratic().into();
    let mut out = Vec::new();
    for (alpha, r) in CERTIFIED {
        let recs = solvers::run(&fig, &cfg(alpha, r, 0.5, 10_000, Variant::NagAlpha), &ones(2), &mut []).map_err(|e| e.to_string())?;
        let fit: RateFit = analysis::fit_rate_auto(&recs, (100, 10_000), analysis::rounding_floor(fig.min_value()))
            .map_err(|e| format!("alpha={alpha}: {e}"))?;
        ensure(fit.window.1 >= 10 * fit.window.0, || format!("alpha={alpha}: window {:?} below a decade", fit.window))?;
        ensure(fit.slope <= -2.0 * alpha + 0.5, || format!("alpha={alpha}: slope {} > {}", fit.slope, -2.0 * alpha + 0.5))?;
        out.push(format!("alpha={alpha}: slope {:.3} over {:?}", fit.slope, fit.window));
    }
    Ok(out.join("; "))
}

// ---------------------------------------------------------------------------

fn run_cli(out: &Path) -> Result<(Vec<u8>, i32), String> {
    let output = Command::new(env!("CARGO_BIN_EXE_alphanag"))
        .args(["run", "--figure1", "--alpha", "1,1.5,2", "--r-rule", "2a+1", "--s", "critical", "--iters", "10000"])
        .args(["--certify", "--fit", "--workers", "3", "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((output.stdout, output.status.code().unwrap_or(-1)))
}

fn dir_contents(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn criterion_9() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (out_a, code_a) = run_cli(&a)?;
    let (out_b, code_b) = run_cli(&b)?;
    ensure(code_a == 0 && code_b == 0, || format!("exit codes {code_a}, {code_b}"))?;
    ensure(out_a == out_b, || "stdout differs between invocations".into())?;
    let (fa, fb) = (dir_contents(&a)?, dir_contents(&b)?);
    ensure(fa.len() == 5, || format!("expected 3 traces + summary + ordering, got {}", fa.len()))?;
    ensure(fa == fb, || "output files differ between invocations".into())?;

    // the CLI trace equals a direct library run bit-for-bit, and re-writing it
    // reproduces the file
    let fig: Problem = problems::figure1_quadratic().into();
    let name = "figure1_nag_alpha_a1.5_r4.0_s0.5.csv";
    let (records, meta) = trace_io::read_trace_file(&a.join(name)).map_err(|e| e.to_string())?;
    let direct = solvers::run(&fig, &cfg(1.5, 4.0, 0.5, 10_000, Variant::NagAlpha), &ones(2), &mut []).map_err(|e| e.to_string())?;
    ensure(records == direct, || "trace read back differs from direct run".into())?;
    let mut rewritten = Vec::new();
    trace_io::write_trace(&records, &meta, &mut rewritten).map_err(|e| e.to_string())?;
    let original = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
    ensure(rewritten == original, || "write(read(trace)) is not byte-identical".into())?;
    let cert = analysis::certify_records(&records, &CertContext::from_metadata(&meta).map_err(|e| e.to_string())?);
    ensure(cert.passed(), || "certificate from the trace alone does not pass".into())?;
    Ok(format!("two invocations byte-identical over {} files; trace round trip exact", fa.len()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("1 classical reduction", criterion_1),
        ("2 fundamental inequalities", criterion_2),
        ("3 prox oracle equivalence", criterion_3),
        ("4 lyapunov certificate", criterion_4),
        ("5 form and mode equivalence", criterion_5),
        ("6 monotone variants", criterion_6),
        ("7 figure 1 ordering", criterion_7),
        ("8 rate exponent", criterion_8),
        ("9 determinism and io", criterion_9),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("PASS criterion {name} ({:.2?}): {detail}", start.elapsed()),
            Err(why) => {
                println!("FAIL criterion {name} ({:.2?}): {why}", start.elapsed());
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
