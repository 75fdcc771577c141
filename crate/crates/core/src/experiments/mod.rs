//! Parameter sweeps, demos, and their CSV output.

mod bloch;
mod scaling;
mod selftest;

pub use bloch::{run_bloch_demo, BlochDemo, BlochSummary, HistogramRow};
pub use scaling::{run_purity_scaling, run_tomography_scaling, ScalingRow};
pub use selftest::{selftest, CheckResult};

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::Variant;
use crate::linalg::DEFAULT_DIM_CAP;
use crate::measurement::Shots;
use crate::state::{HilbertShape, StateKind};
use crate::stats::{self, PowerLawFit};

fn default_d() -> usize {
    2
}

fn default_trials() -> usize {
    20
}

/// A sweep grid. Every combination of state, variant, site count, `N_U`
/// and `N_M` is a cell; each cell is repeated `trials` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `purity` or `tomography`; when set it must match the command run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    #[serde(default = "default_d")]
    pub d: usize,
    /// Site counts `N_A`.
    pub sites: Vec<usize>,
    pub variants: Vec<Variant>,
    /// State labels such as `pure_product`, `ghz`, `random_mixed_4`.
    pub states: Vec<String>,
    pub n_u: Vec<usize>,
    /// Shot counts; `"inf"` selects exact probabilities.
    pub n_m: Vec<Shots>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    /// Checks the grid without building any state. Dimension checks happen
    /// separately so that they can be reported as such.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("config: {m}")));
        if self.d < 2 {
            return bad("d must be at least 2");
        }
        if self.sites.is_empty() || self.sites.contains(&0) {
            return bad("sites must be a non-empty list of positive integers");
        }
        if self.variants.is_empty() {
            return bad("variants must not be empty");
        }
        if self.states.is_empty() {
            return bad("states must not be empty");
        }
        if self.n_u.is_empty() || self.n_u.contains(&0) {
            return bad("n_u must be a non-empty list of positive integers");
        }
        if self.n_m.is_empty() {
            return bad("n_m must not be empty");
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        if self.dim_cap == Some(0) {
            return bad("dim_cap must be positive");
        }
        for s in &self.states {
            StateKind::parse(s)?;
        }
        Ok(())
    }

    pub fn check_protocol(&self, expected: &str) -> Result<()> {
        match &self.protocol {
            Some(p) if p != expected => Err(Error::InvalidArgument(format!(
                "config is for protocol `{p}`, not `{expected}`"
            ))),
            _ => Ok(()),
        }
    }

    pub(crate) fn shapes(&self) -> Result<Vec<HilbertShape>> {
        let cap = self.dim_cap.unwrap_or(DEFAULT_DIM_CAP);
        self.sites.iter().map(|&n| HilbertShape::with_cap(self.d, n, cap)).collect()
    }

    pub(crate) fn kinds(&self) -> Result<Vec<StateKind>> {
        self.states.iter().map(|s| StateKind::parse(s)).collect()
    }
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

/// Power-law fit of two CSV columns, restricted to rows whose `filters`
/// columns hold the given values. Rows with empty or non-numeric cells in
/// the fitted columns are skipped.
pub fn fit_csv_columns(path: &Path, x: &str, y: &str, filters: &[(String, String)]) -> Result<(PowerLawFit, usize)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no column `{name}` in {}", path.display())))
    };
    let (xi, yi) = (col(x)?, col(y)?);
    let filters: Vec<(usize, &str)> = filters
        .iter()
        .map(|(k, v)| Ok((col(k)?, v.as_str())))
        .collect::<Result<_>>()?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if filters.iter().any(|(i, v)| row.get(*i) != Some(*v)) {
            continue;
        }
        if let (Ok(a), Ok(b)) = (row[xi].parse::<f64>(), row[yi].parse::<f64>()) {
            if a.is_finite() && b.is_finite() {
                xs.push(a);
                ys.push(b);
            }
        }
    }
    let n = xs.len();
    Ok((stats::fit_power_law(&xs, &ys)?, n))
}

/// Groups values by key while keeping insertion order of first appearance.
pub(crate) fn group_in_order<K: Ord + Clone, V>(items: impl IntoIterator<Item = (K, V)>) -> Vec<(K, Vec<V>)> {
    let mut order = Vec::new();
    let mut map: BTreeMap<K, Vec<V>> = BTreeMap::new();
    for (k, v) in items {
        if !map.contains_key(&k) {
            order.push(k.clone());
        }
        map.entry(k).or_default().push(v);
    }
    order.into_iter().map(|k| {
        let v = map.remove(&k).expect("key present");
        (k, v)
    }).collect()
}
