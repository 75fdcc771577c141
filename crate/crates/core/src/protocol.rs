//! Estimation protocols behind a common trait, looked up by name.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimators::{self, EstimateReport};
use crate::measurement::Dataset;

/// Inputs shared by every protocol.
#[derive(Clone, Copy, Debug)]
pub struct ProtocolInput<'a> {
    pub datasets: &'a [Dataset],
    /// Sites to keep; `None` means the whole system.
    pub subsystem: Option<&'a [usize]>,
    /// Moment order for `renyi_k`.
    pub order: usize,
}

impl<'a> ProtocolInput<'a> {
    pub fn new(datasets: &'a [Dataset]) -> Self {
        Self {
            datasets,
            subsystem: None,
            order: 2,
        }
    }

    fn single(&self, name: &str) -> Result<&'a Dataset> {
        match self.datasets {
            [ds] => Ok(ds),
            other => Err(Error::InvalidArgument(format!("{name} needs one dataset, got {}", other.len()))),
        }
    }
}

pub trait Protocol: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn estimate(&self, input: &ProtocolInput<'_>) -> Result<EstimateReport>;
}

struct PurityGlobal;
struct PurityLocal;
struct Overlap;
struct Tomography;
struct RenyiK;

impl Protocol for PurityGlobal {
    fn name(&self) -> &'static str {
        "purity_global"
    }
    fn description(&self) -> &'static str {
        "purity from a global-unitary batch"
    }
    fn estimate(&self, input: &ProtocolInput<'_>) -> Result<EstimateReport> {
        if input.subsystem.is_some() {
            return Err(Error::InvalidArgument("purity_global estimates the full system only".into()));
        }
        estimators::purity_global(input.single(self.name())?)
    }
}

impl Protocol for PurityLocal {
    fn name(&self) -> &'static str {
        "purity_local"
    }
    fn description(&self) -> &'static str {
        "subsystem purity from a local-unitary batch"
    }
    fn estimate(&self, input: &ProtocolInput<'_>) -> Result<EstimateReport> {
        let ds = input.single(self.name())?;
        let all: Vec<usize> = (0..ds.shape().num_sites()).collect();
        estimators::purity_local(ds, input.subsystem.unwrap_or(&all))
    }
}

impl Protocol for Overlap {
    fn name(&self) -> &'static str {
        "overlap"
    }
    fn description(&self) -> &'static str {
        "tr ρ₁ρ₂ from two runs with the same unitaries"
    }
    fn estimate(&self, input: &ProtocolInput<'_>) -> Result<EstimateReport> {
        match input.datasets {
            [a, b] => match input.subsystem {
                Some(sites) => estimators::overlap(&a.marginalize(sites)?, &b.marginalize(sites)?),
                None => estimators::overlap(a, b),
            },
            other => Err(Error::InvalidArgument(format!("overlap needs two datasets, got {}", other.len()))),
        }
    }
}

impl Protocol for Tomography {
    fn name(&self) -> &'static str {
        "tomography"
    }
    fn description(&self) -> &'static str {
        "density-matrix estimate from records carrying their unitaries"
    }
    fn estimate(&self, input: &ProtocolInput<'_>) -> Result<EstimateReport> {
        if input.subsystem.is_some() {
            return Err(Error::InvalidArgument("tomography estimates the full system only".into()));
        }
        estimators::tomography(input.single(self.name())?)
    }
}

impl Protocol for RenyiK {
    fn name(&self) -> &'static str {
        "renyi_k"
    }
    fn description(&self) -> &'static str {
        "tr ρ² … tr ρ^k from a global-unitary batch"
    }
    fn estimate(&self, input: &ProtocolInput<'_>) -> Result<EstimateReport> {
        estimators::renyi_k_global(input.single(self.name())?, input.order)
    }
}

#[derive(Default)]
pub struct ProtocolRegistry {
    protocols: BTreeMap<&'static str, Box<dyn Protocol>>,
}

impl ProtocolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::new();
        r.register(Box::new(PurityGlobal));
        r.register(Box::new(PurityLocal));
        r.register(Box::new(Overlap));
        r.register(Box::new(Tomography));
        r.register(Box::new(RenyiK));
        r
    }

    /// Adds `p`, replacing any protocol with the same name.
    pub fn register(&mut self, p: Box<dyn Protocol>) {
        self.protocols.insert(p.name(), p);
    }

    /// Looks up a protocol; `-` and `_` are interchangeable.
    pub fn get(&self, name: &str) -> Result<&dyn Protocol> {
        let key = name.replace('-', "_");
        self.protocols
            .get(key.as_str())
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownProtocol(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.protocols.keys().copied()
    }

    pub fn run(&self, name: &str, input: &ProtocolInput<'_>) -> Result<EstimateReport> {
        self.get(name)?.estimate(input)
    }
}
