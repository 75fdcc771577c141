//! JSON-lines exchange format for measurement records.
//!
//! One object per unitary per state:
//! `{"u": 3, "state": "a", "n_m": 100, "counts": {"0110": 7, ...}, "unitary": ...}`.
//! Bitstrings are base-`d` digit strings with site 0 leftmost. The optional
//! `unitary` is one row-major matrix object (global) or an array of per-site
//! matrix objects (local). A separate manifest JSON describes the batch.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{BatchManifest, SampledUnitary, UnitaryJson, Variant};
use crate::measurement::{Dataset, OutcomeRecord, Outcomes};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    u: usize,
    state: String,
    n_m: u64,
    counts: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unitary: Option<UnitaryJson>,
}

pub fn write_manifest(manifest: &BatchManifest, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, manifest)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<BatchManifest> {
    let m: BatchManifest = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| Error::Validation { line: e.line(), msg: format!("manifest: {e}") })?;
    if m.n_u == 0 {
        return Err(Error::Validation { line: 1, msg: "manifest: n_u must be positive".into() });
    }
    Ok(m)
}

/// Writes finite-shot records of all datasets, one line per record.
pub fn export_jsonl<W: Write>(datasets: &[Dataset], mut out: W) -> Result<()> {
    for ds in datasets {
        let shape = ds.shape();
        for (i, rec) in ds.records.iter().enumerate() {
            let Outcomes::Shots { n_m, counts } = &rec.outcomes else {
                return Err(Error::InvalidArgument("exact-mode records have no counts to export".into()));
            };
            let unitary = match &ds.unitaries {
                Some(u) => Some(UnitaryJson::from_unitary(&u[i], shape)?),
                None => None,
            };
            let line = RecordLine {
                u: rec.unitary_index,
                state: ds.label.clone(),
                n_m: *n_m,
                counts: counts.iter().map(|(&s, &c)| (shape.bitstring(s), c)).collect(),
                unitary,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn export_jsonl_file(datasets: &[Dataset], path: &Path) -> Result<()> {
    export_jsonl(datasets, BufWriter::new(File::create(path)?))
}

fn invalid(line: usize, msg: impl Into<String>) -> Error {
    Error::Validation { line, msg: msg.into() }
}

fn check_unitary(u: &SampledUnitary, manifest: &BatchManifest) -> std::result::Result<(), String> {
    let shape = manifest.shape;
    match (u, manifest.variant) {
        (SampledUnitary::Global(m), Variant::Global) if m.nrows() == shape.dim() => Ok(()),
        (SampledUnitary::Local(f), Variant::Local)
            if f.len() == shape.num_sites() && f.iter().all(|m| m.nrows() == shape.local_dim()) =>
        {
            Ok(())
        }
        _ => Err(format!("unitary does not match a {} batch of shape {:?}", manifest.variant, shape)),
    }
}

/// Records of one label keyed by unitary index, with the line they came from.
type LabelRecords = BTreeMap<usize, (OutcomeRecord, Option<SampledUnitary>, usize)>;

/// Reads records into one dataset per state label (first-appearance order),
/// validating every line against `manifest`. Errors carry 1-based line numbers.
pub fn ingest_jsonl<R: BufRead>(input: R, manifest: &BatchManifest) -> Result<Vec<Dataset>> {
    let shape = manifest.shape;
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, LabelRecords> = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| invalid(lineno, e.to_string()))?;
        if rec.u >= manifest.n_u {
            return Err(invalid(lineno, format!("unitary index {} outside batch of {}", rec.u, manifest.n_u)));
        }
        if rec.n_m == 0 {
            return Err(invalid(lineno, "n_m must be positive"));
        }
        let mut counts = BTreeMap::new();
        for (bits, c) in &rec.counts {
            let s = shape.parse_bitstring(bits).map_err(|e| invalid(lineno, e.to_string()))?;
            if counts.insert(s, *c).is_some() {
                return Err(invalid(lineno, format!("bitstring `{bits}` listed twice")));
            }
        }
        let total: u64 = counts.values().sum();
        if total != rec.n_m {
            return Err(invalid(lineno, format!("counts sum to {total}, but n_m = {}", rec.n_m)));
        }
        let unitary = match &rec.unitary {
            Some(u) => {
                let u = u.to_unitary().map_err(|e| invalid(lineno, e.to_string()))?;
                check_unitary(&u, manifest).map_err(|m| invalid(lineno, m))?;
                Some(u)
            }
            None => None,
        };
        let record = OutcomeRecord::from_counts(rec.u, shape, rec.n_m, counts).map_err(|e| invalid(lineno, e.to_string()))?;
        if !groups.contains_key(&rec.state) {
            order.push(rec.state.clone());
        }
        let group = groups.entry(rec.state.clone()).or_default();
        if let Some((_, _, first)) = group.get(&rec.u) {
            return Err(invalid(
                lineno,
                format!("duplicate record for state `{}` and unitary {} (first on line {first})", rec.state, rec.u),
            ));
        }
        group.insert(rec.u, (record, unitary, lineno));
    }
    if order.is_empty() {
        return Err(Error::EmptyBatch);
    }
    order
        .into_iter()
        .map(|label| {
            let group = groups.remove(&label).expect("label recorded");
            let with_unitary = group.values().filter(|(_, u, _)| u.is_some()).count();
            if with_unitary != 0 && with_unitary != group.len() {
                let line = group.values().find(|(_, u, _)| u.is_none()).map_or(0, |g| g.2);
                return Err(invalid(line, format!("state `{label}`: some records carry unitaries and some do not")));
            }
            let mut records = Vec::with_capacity(group.len());
            let mut unitaries = Vec::new();
            for (rec, u, _) in group.into_values() {
                records.push(rec);
                unitaries.extend(u);
            }
            Ok(Dataset {
                manifest: *manifest,
                label,
                records,
                unitaries: (with_unitary > 0).then_some(unitaries),
            })
        })
        .collect()
}

pub fn ingest_jsonl_file(path: &Path, manifest: &BatchManifest) -> Result<Vec<Dataset>> {
    ingest_jsonl(BufReader::new(File::open(path)?), manifest)
}
