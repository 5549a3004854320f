//! Trace files: comma-separated values preceded by `# key=value` metadata
//! lines. Reals are written as shortest round-trip decimals, so reading a
//! trace back reproduces every field bit-for-bit.
//!
//! ```text
//! # problem=figure1
//! # variant=nag_alpha
//! # alpha=1.5
//! ...
//! k,f_gap,grad_norm,coeff,lyap_total,lyap_pot,lyap_mix,accepted_z
//! 0,1.005,2.000025,0.0,0.0,0.0,0.0,0
//! ```

pub mod config;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 8] = ["k", "f_gap", "grad_norm", "coeff", "lyap_total", "lyap_pot", "lyap_mix", "accepted_z"];

/// One row of a trace. `f_gap` is `f(x_k) - f*` (or the `Phi` gap),
/// `grad_norm` is `||grad f(y_k)||` (or `||G_s(y_k)||`). The Lyapunov
/// columns are zero where the energy is undefined (`k = 0`, and `k = 1`
/// when `alpha < 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub f_gap: f64,
    pub grad_norm: f64,
    pub coeff: f64,
    pub lyap_total: f64,
    pub lyap_pot: f64,
    pub lyap_mix: f64,
    pub accepted_z: bool,
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        ryu::Buffer::new().format_finite(v).to_owned()
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Metadata carried in the comment header. Keys are written in a fixed
/// order; unknown keys read from a file are kept in `extra`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMetadata {
    pub problem: String,
    pub variant: String,
    pub stepping: String,
    pub alpha: f64,
    pub r: f64,
    pub s: f64,
    pub seed: u64,
    pub version: String,
    pub f_star: f64,
    pub lipschitz: f64,
    pub mu: f64,
    pub extra: BTreeMap<String, String>,
}

impl TraceMetadata {
    fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("problem".to_string(), self.problem.clone()),
            ("variant".to_string(), self.variant.clone()),
            ("stepping".to_string(), self.stepping.clone()),
            ("alpha".to_string(), format_real(self.alpha)),
            ("r".to_string(), format_real(self.r)),
            ("s".to_string(), format_real(self.s)),
            ("seed".to_string(), self.seed.to_string()),
            ("version".to_string(), self.version.clone()),
            ("f_star".to_string(), format_real(self.f_star)),
            ("lipschitz".to_string(), format_real(self.lipschitz)),
            ("mu".to_string(), format_real(self.mu)),
        ];
        out.extend(self.extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    fn from_entries(entries: BTreeMap<String, String>) -> Result<Self> {
        let mut entries = entries;
        let mut take = |key: &str| {
            entries.remove(key).ok_or_else(|| Error::MalformedTrace(format!("metadata is missing '{key}'")))
        };
        let real = |key: &str, v: String| {
            v.parse::<f64>().map_err(|_| Error::MalformedTrace(format!("metadata '{key}' is not a number: {v}")))
        };
        let problem = take("problem")?;
        let variant = take("variant")?;
        let stepping = take("stepping")?;
        let alpha = real("alpha", take("alpha")?)?;
        let r = real("r", take("r")?)?;
        let s = real("s", take("s")?)?;
        let seed_raw = take("seed")?;
        let seed = seed_raw.parse().map_err(|_| Error::MalformedTrace(format!("bad seed '{seed_raw}'")))?;
        let version = take("version")?;
        let f_star = real("f_star", take("f_star")?)?;
        let lipschitz = real("lipschitz", take("lipschitz")?)?;
        let mu = real("mu", take("mu")?)?;
        Ok(Self { problem, variant, stepping, alpha, r, s, seed, version, f_star, lipschitz, mu, extra: entries })
    }
}

pub fn write_trace<W: Write>(records: &[IterationRecord], metadata: &TraceMetadata, out: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("a trace needs at least one record".into()));
    }
    let mut out = std::io::BufWriter::new(out);
    for (key, value) in metadata.entries() {
        writeln!(out, "# {key}={value}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
    let io_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(COLUMNS).map_err(io_err)?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            format_real(r.f_gap),
            format_real(r.grad_norm),
            format_real(r.coeff),
            format_real(r.lyap_total),
            format_real(r.lyap_pot),
            format_real(r.lyap_mix),
            u8::from(r.accepted_z).to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
pub fn write_trace_file(records: &[IterationRecord], metadata: &TraceMetadata, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_trace(records, metadata, &mut buf)?;
    write_atomically(path, &buf)
}

pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

fn parse_real(field: &str, column: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::MalformedTrace(format!("row {line}: column {column} is not a number: '{field}'")))
}

pub fn read_trace<R: Read>(source: R) -> Result<(Vec<IterationRecord>, TraceMetadata)> {
    let mut reader = BufReader::new(source);
    let mut meta = BTreeMap::new();
    let mut line = String::new();
    let header = loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::MalformedTrace("no header line".into()));
        }
        let trimmed = line.trim_end_matches(['\n', '\r']);
        match trimmed.strip_prefix('#') {
            Some(rest) => {
                let (key, value) = rest
                    .trim_start()
                    .split_once('=')
                    .ok_or_else(|| Error::MalformedTrace(format!("metadata line without '=': {trimmed}")))?;
                meta.insert(key.trim().to_string(), value.to_string());
            }
            None => break trimmed.to_string(),
        }
    };
    let columns: Vec<&str> = header.split(',').collect();
    if columns != COLUMNS {
        return Err(Error::MalformedTrace(format!("unexpected header '{header}'")));
    }
    let metadata = TraceMetadata::from_entries(meta)?;

    let mut csv = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records: Vec<IterationRecord> = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row = row.map_err(|e| Error::MalformedTrace(e.to_string()))?;
        let line_no = i + 1;
        if row.len() != COLUMNS.len() {
            return Err(Error::MalformedTrace(format!("row {line_no} has {} fields", row.len())));
        }
        let k: usize = row[0]
            .parse()
            .map_err(|_| Error::MalformedTrace(format!("row {line_no}: bad k '{}'", &row[0])))?;
        if let Some(prev) = records.last() {
            if k <= prev.k {
                return Err(Error::MalformedTrace(format!("k is not increasing at row {line_no} ({} then {k})", prev.k)));
            }
        }
        let accepted_z = match &row[7] {
            "0" => false,
            "1" => true,
            other => return Err(Error::MalformedTrace(format!("row {line_no}: accepted_z must be 0 or 1, got '{other}'"))),
        };
        records.push(IterationRecord {
            k,
            f_gap: parse_real(&row[1], COLUMNS[1], line_no)?,
            grad_norm: parse_real(&row[2], COLUMNS[2], line_no)?,
            coeff: parse_real(&row[3], COLUMNS[3], line_no)?,
            lyap_total: parse_real(&row[4], COLUMNS[4], line_no)?,
            lyap_pot: parse_real(&row[5], COLUMNS[5], line_no)?,
            lyap_mix: parse_real(&row[6], COLUMNS[6], line_no)?,
            accepted_z,
        });
    }
    Ok((records, metadata))
}

pub fn read_trace_file(path: &Path) -> Result<(Vec<IterationRecord>, TraceMetadata)> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_trace(file)
}

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "problem", "variant", "stepping", "alpha", "r", "s", "iters", "final_gap", "probe_k", "probe_gap", "certificate",
    "detected_k", "first_violation", "slope", "trace",
];

/// One line of a sweep summary. Optional fields are written as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub variant: String,
    pub stepping: String,
    pub alpha: f64,
    pub r: f64,
    pub s: f64,
    pub iters: usize,
    pub final_gap: f64,
    pub probe_k: Option<usize>,
    pub probe_gap: Option<f64>,
    pub certificate: String,
    pub detected_k: Option<usize>,
    pub first_violation: Option<usize>,
    pub slope: Option<f64>,
    pub trace: String,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(SUMMARY_COLUMNS).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.variant.clone(),
            r.stepping.clone(),
            format_real(r.alpha),
            format_real(r.r),
            format_real(r.s),
            r.iters.to_string(),
            format_real(r.final_gap),
            opt(r.probe_k),
            opt(r.probe_gap.map(format_real)),
            r.certificate.clone(),
            opt(r.detected_k),
            opt(r.first_violation),
            opt(r.slope.map(format_real)),
            r.trace.clone(),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}
