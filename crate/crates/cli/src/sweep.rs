//! The `run` subcommand: expand the sweep, execute runs on a worker pool and
//! write traces, `summary.csv` and `ordering.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::process::ExitCode;

use alphanag::analysis::{self, Certificate, CertificateStatus, OrderingReport, OrderingRow, RateFit};
use alphanag::io::config::{ExperimentSpec, ProblemSpec, RunPoint};
use alphanag::io::{self as trace_io, format_real, IterationRecord, SummaryRow, TraceMetadata};
use alphanag::problems::{Problem, Vector};
use alphanag::solvers::{self, SolverConfig, Stepping};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use crate::{parse_window, RunArgs};

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec> {
    let flag_problem: Option<ProblemSpec> = if args.figure1 {
        Some(ProblemSpec::Figure1)
    } else {
        args.problem.as_deref().map(str::parse).transpose()?
    };
    let mut spec = match (&args.config, flag_problem) {
        (Some(path), problem) => {
            let mut spec = ExperimentSpec::from_file(path)?;
            if let Some(p) = problem {
                spec.problem = p;
            }
            spec
        }
        (None, Some(problem)) => {
            if args.alpha.is_empty() {
                bail!("--alpha is required without --config");
            }
            ExperimentSpec::new(problem, solvers::Variant::NagAlpha, args.alpha.clone())
        }
        (None, None) => bail!("one of --figure1, --problem or --config is required"),
    };
    if !args.alpha.is_empty() {
        spec.alphas = args.alpha.clone();
    }
    if !args.r.is_empty() {
        spec.r_rule = alphanag::io::config::RRule::List(args.r.clone());
    }
    if let Some(rule) = &args.r_rule {
        spec.r_rule = rule.parse()?;
    }
    if let Some(s) = &args.s {
        spec.s_rule = s.parse()?;
    }
    if let Some(n) = args.iters {
        spec.iters = n;
    }
    if let Some(v) = &args.variant {
        spec.variant = v.parse()?;
    }
    if let Some(st) = &args.stepping {
        spec.stepping = st.parse()?;
    }
    if let Some(out) = &args.out {
        spec.output = out.clone();
    }
    spec.certify |= args.certify;
    spec.fit |= args.fit;
    if let Some(w) = &args.fit_window {
        spec.fit_window = parse_window(w)?;
    }
    if let Some(w) = args.workers {
        spec.workers = w;
    }
    if let Some(p) = args.probe {
        spec.probe = p;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

struct Outcome {
    point: RunPoint,
    trace: String,
    records: Vec<IterationRecord>,
    certificate: Option<Certificate>,
    fit: Option<std::result::Result<RateFit, String>>,
}

fn trace_name(problem: &Problem, spec: &ExperimentSpec, point: &RunPoint) -> String {
    let mut name = format!(
        "{}_{}_a{}_r{}_s{}",
        problem.id(),
        spec.variant,
        format_real(point.params.alpha),
        format_real(point.params.r),
        format_real(point.step)
    );
    if spec.stepping == Stepping::PhaseSpace {
        name.push_str("_phase_space");
    }
    name.push_str(".csv");
    name
}

fn metadata(problem: &Problem, spec: &ExperimentSpec, point: &RunPoint) -> TraceMetadata {
    let mut extra = BTreeMap::new();
    extra.insert("iters".to_string(), spec.iters.to_string());
    TraceMetadata {
        problem: problem.id().to_string(),
        variant: spec.variant.name().to_string(),
        stepping: spec.stepping.name().to_string(),
        alpha: point.params.alpha,
        r: point.params.r,
        s: point.step,
        seed: spec.seed,
        version: alphanag::VERSION.to_string(),
        f_star: problem.min_value(),
        lipschitz: problem.lipschitz(),
        mu: problem.strong_convexity(),
        extra,
    }
}

fn execute(problem: &Problem, spec: &ExperimentSpec, point: RunPoint, x0: &Vector) -> Result<Outcome> {
    let config = SolverConfig::new(point.params, point.step, spec.iters, spec.variant).with_stepping(spec.stepping);
    let (records, certificate) = if spec.certify {
        let traj = solvers::run_recorded(problem, &config, x0)?;
        let cert = analysis::certify(&traj, problem, &config);
        (traj.records, Some(cert))
    } else {
        (solvers::run(problem, &config, x0, &mut [])?, None)
    };
    let fit = spec.fit.then(|| {
        let (lo, hi) = spec.fit_window;
        analysis::fit_rate_auto(&records, (lo, hi.min(spec.iters)), analysis::rounding_floor(problem.min_value()))
            .map_err(|e| e.to_string())
    });
    let trace = trace_name(problem, spec, &point);
    trace_io::write_trace_file(&records, &metadata(problem, spec, &point), &spec.output.join(&trace))?;
    Ok(Outcome { point, trace, records, certificate, fit })
}

fn describe(point: &RunPoint) -> String {
    format!("alpha={} r={} s={}", format_real(point.params.alpha), format_real(point.params.r), format_real(point.step))
}

pub fn print_certificate(cert: &Certificate) {
    println!("certificate: {}", cert.status.name());
    if let Some(k) = cert.detected_k {
        println!("detected_k: {k}");
    }
    if let Some(e) = cert.energy_at_k {
        println!("energy_at_k: {}", format_real(e));
    }
    if let Some((lo, hi)) = cert.checked {
        println!("checked: [{lo}, {hi}]");
    }
    if let Some(n) = cert.inequality_violations {
        println!("inequality_violations: {n}");
    }
    if let Some(k) = cert.first_violation {
        println!("first_violation: {k}");
    }
    for note in &cert.notes {
        println!("note: {note}");
    }
}

fn ordering_reports(spec: &ExperimentSpec, outcomes: &[Outcome], probe: usize) -> Vec<OrderingReport> {
    let mut by_step: BTreeMap<u64, Vec<OrderingRow>> = BTreeMap::new();
    for o in outcomes {
        let gap = o.records.iter().find(|r| r.k == probe).map(|r| r.f_gap);
        by_step.entry(o.point.step.to_bits()).or_default().push(OrderingRow {
            alpha: o.point.params.alpha,
            r: o.point.params.r,
            gap,
            note: None,
        });
    }
    by_step
        .into_iter()
        .map(|(bits, rows)| OrderingReport { k_probe: probe, step: f64::from_bits(bits), variant: spec.variant, rows })
        .collect()
}

fn ordering_csv(reports: &[OrderingReport]) -> String {
    let mut out = String::from("s,alpha,r,probe_k,gap\n");
    for rep in reports {
        for row in &rep.rows {
            let gap = row.gap.map(format_real).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{gap}", format_real(rep.step), format_real(row.alpha), format_real(row.r), rep.k_probe);
        }
    }
    out
}

pub fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let spec = build_spec(args)?;
    let problem = spec.problem.build_for(spec.variant)?;
    let x0 = spec.initial_point(problem.dim())?;
    let points = spec.run_points(problem.lipschitz())?;
    let (n_alpha, n_total) = (spec.distinct_alphas().len(), points.len());
    eprintln!("{} runs on {} ({} alphas, {} variant)", n_total, problem.id(), n_alpha, spec.variant);

    std::fs::create_dir_all(&spec.output).with_context(|| format!("creating {}", spec.output.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(spec.workers).build()?;
    let results: Vec<Result<Outcome>> =
        pool.install(|| points.par_iter().map(|&p| execute(&problem, &spec, p, &x0)).collect());

    let mut outcomes = Vec::new();
    let mut run_errors = 0;
    for (point, res) in points.iter().zip(results) {
        match res {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                run_errors += 1;
                eprintln!("run failed ({}): {e:#}", describe(point));
            }
        }
    }

    let probe = spec.probe.min(spec.iters);
    let mut rows = Vec::new();
    let mut cert_failures = 0;
    for o in &outcomes {
        let last = o.records.last().expect("runs produce at least one record");
        let mut line = format!("{} final_gap={}", describe(&o.point), format_real(last.f_gap));
        if let Some(c) = &o.certificate {
            let _ = write!(line, " certificate={}", c.status.name());
            if let Some(k) = c.detected_k {
                let _ = write!(line, " K={k}");
            }
            match c.status {
                CertificateStatus::Fail => {
                    cert_failures += 1;
                    eprintln!("certification failed ({}): {}", describe(&o.point), c.notes.join("; "));
                }
                CertificateStatus::NonCertifiable => {
                    eprintln!("certification skipped ({}): {}", describe(&o.point), c.notes.join("; "))
                }
                CertificateStatus::Pass => {}
            }
        }
        let slope = match &o.fit {
            Some(Ok(fit)) => {
                let _ = write!(line, " slope={}", format_real(fit.slope));
                Some(fit.slope)
            }
            Some(Err(e)) => {
                eprintln!("rate fit unavailable ({}): {e}", describe(&o.point));
                None
            }
            None => None,
        };
        let _ = write!(line, " trace={}", o.trace);
        println!("{line}");
        rows.push(SummaryRow {
            problem: problem.id().to_string(),
            variant: spec.variant.name().to_string(),
            stepping: spec.stepping.name().to_string(),
            alpha: o.point.params.alpha,
            r: o.point.params.r,
            s: o.point.step,
            iters: last.k,
            final_gap: last.f_gap,
            probe_k: Some(probe),
            probe_gap: o.records.iter().find(|r| r.k == probe).map(|r| r.f_gap),
            certificate: o.certificate.as_ref().map_or("", |c| c.status.name()).to_string(),
            detected_k: o.certificate.as_ref().and_then(|c| c.detected_k),
            first_violation: o.certificate.as_ref().and_then(|c| c.first_violation),
            slope,
            trace: o.trace.clone(),
        });
    }
    let mut summary = Vec::new();
    trace_io::write_summary(&rows, &mut summary)?;
    trace_io::write_atomically(&spec.output.join("summary.csv"), &summary)?;

    let reports = ordering_reports(&spec, &outcomes, probe);
    trace_io::write_atomically(&spec.output.join("ordering.csv"), ordering_csv(&reports).as_bytes())?;
    for rep in &reports {
        if rep.rows.len() < 2 {
            continue;
        }
        let verdict = if rep.strictly_ordered() { "strictly decreasing in alpha" } else { "not strictly decreasing in alpha" };
        println!("ordering at k={} s={}: {verdict}", rep.k_probe, format_real(rep.step));
        for row in &rep.rows {
            let gap = row.gap.map_or_else(|| "n/a".to_string(), format_real);
            println!("  alpha={} r={} gap={gap}", format_real(row.alpha), format_real(row.r));
        }
    }

    Ok(if run_errors > 0 {
        ExitCode::from(1)
    } else if cert_failures > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
