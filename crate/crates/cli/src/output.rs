use std::io::Write;
use std::path::{Path, PathBuf};

use ringtherm_core::EnsembleRecord;
use serde::Deserialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Destination of a command's main output.
pub enum Sink<'a> {
    Stdout,
    File(&'a Path),
}

impl<'a> Sink<'a> {
    pub fn from_option(path: Option<&'a PathBuf>) -> Self {
        path.map_or(Sink::Stdout, |p| Sink::File(p.as_path()))
    }
}

/// Stage `contents` next to `path`; nothing is visible until [`persist_all`].
pub fn stage(path: &Path, contents: &[u8]) -> CliResult<(NamedTempFile, PathBuf)> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    Ok((tmp, path.to_path_buf()))
}

pub fn persist_all(staged: Vec<(NamedTempFile, PathBuf)>) -> CliResult<()> {
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| CliError::Io { path, source: e.error })?;
    }
    Ok(())
}

pub fn emit(sink: Sink<'_>, contents: &[u8]) -> CliResult<()> {
    match sink {
        Sink::Stdout => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents)
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
        Sink::File(path) => persist_all(vec![stage(path, contents)?]),
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Decimal text with 17 significant digits, enough to round-trip any f64.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn float_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| float(x)).collect::<Vec<_>>().join(",")
}

pub fn record_json_line(r: &EnsembleRecord) -> String {
    format!(
        "{{\"realization_seed\":{},\"n_sites\":{},\"excited_site\":{},\"couplings\":[{}],\"normalized_intensities\":[{}]}}\n",
        r.realization_seed,
        r.n_sites,
        r.excited_site,
        float_list(&r.couplings),
        float_list(&r.normalized_intensities)
    )
}

pub fn records_jsonl(records: &[EnsembleRecord]) -> String {
    records.iter().map(record_json_line).collect()
}

pub fn records_csv(records: &[EnsembleRecord]) -> String {
    let n = records.first().map_or(0, |r| r.n_sites);
    let mut out = String::from("realization_seed,excited_site");
    for k in 0..n {
        out.push_str(&format!(",c_{k}"));
    }
    for k in 0..n {
        out.push_str(&format!(",I_{k}"));
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.realization_seed,
            r.excited_site,
            float_list(&r.couplings),
            float_list(&r.normalized_intensities)
        ));
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    realization_seed: u64,
    n_sites: usize,
    excited_site: usize,
    couplings: Vec<f64>,
    normalized_intensities: Vec<f64>,
}

/// Read records from JSON lines, a `simulate` CSV, or an `ingest` CSV.
/// `excited_site` applies to ingest rows, which carry no excitation index.
pub fn read_records(path: &Path, excited_site: usize) -> CliResult<Vec<EnsembleRecord>> {
    let text = read_text(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let records = if first.trim_start().starts_with('{') {
        parse_jsonl(path, &text)?
    } else if first.starts_with("realization_seed") {
        parse_simulate_csv(path, &text)?
    } else if first.starts_with("image") {
        parse_ingest_csv(path, &text, excited_site)?
    } else {
        return Err(CliError::parse(path, "unrecognized record format"));
    };
    if records.is_empty() {
        return Err(CliError::parse(path, "no records"));
    }
    let n = records[0].n_sites;
    if let Some(i) = records.iter().position(|r| r.n_sites != n) {
        return Err(CliError::parse(path, format!("record {} has {} sites, expected {n}", i + 1, records[i].n_sites)));
    }
    Ok(records)
}

fn parse_jsonl(path: &Path, text: &str) -> CliResult<Vec<EnsembleRecord>> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))?;
        let record = EnsembleRecord {
            realization_seed: raw.realization_seed,
            n_sites: raw.n_sites,
            excited_site: raw.excited_site,
            couplings: raw.couplings,
            normalized_intensities: raw.normalized_intensities,
        };
        record.validate().map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

fn parse_floats(path: &Path, line_no: usize, fields: &[&str]) -> CliResult<Vec<f64>> {
    fields
        .iter()
        .map(|f| f.trim().parse().map_err(|_| CliError::parse(path, format!("line {line_no}: bad number `{f}`"))))
        .collect()
}

fn parse_simulate_csv(path: &Path, text: &str) -> CliResult<Vec<EnsembleRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().unwrap_or((0, ""));
    let columns = header.split(',').count();
    if columns < 4 || (columns - 2) % 2 != 0 {
        return Err(CliError::parse(path, "header must list equally many coupling and intensity columns"));
    }
    let n = (columns - 2) / 2;
    let mut records = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(CliError::parse(path, format!("line {}: expected {columns} fields", i + 1)));
        }
        let bad = |what: &str| CliError::parse(path, format!("line {}: bad {what}", i + 1));
        let seed = fields[0].trim().parse().map_err(|_| bad("seed"))?;
        let excited = fields[1].trim().parse().map_err(|_| bad("excited site"))?;
        let couplings = parse_floats(path, i + 1, &fields[2..2 + n])?;
        let intensities = parse_floats(path, i + 1, &fields[2 + n..])?;
        let record = EnsembleRecord {
            realization_seed: seed,
            n_sites: n,
            excited_site: excited,
            couplings,
            normalized_intensities: intensities,
        };
        record.validate().map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

fn parse_ingest_csv(path: &Path, text: &str, excited_site: usize) -> CliResult<Vec<EnsembleRecord>> {
    let mut records = Vec::new();
    for (row, (i, line)) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).skip(1).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let intensities = parse_floats(path, i + 1, &fields[1..])?;
        let record = EnsembleRecord::new(row as u64, Vec::new(), &intensities, excited_site)
            .map_err(|e| CliError::parse(path, format!("line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}
