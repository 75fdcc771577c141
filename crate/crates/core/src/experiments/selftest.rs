use serde::Serialize;

use crate::error::Result;
use crate::estimators::{purity_local, solve_power_traces};
use crate::haar::{UnitaryBatch, Variant};
use crate::linalg::{kron, max_abs_diff};
use crate::measurement::{simulate, Shots};
use crate::records_io::{export_jsonl, ingest_jsonl};
use crate::state::{make_state, prepare, HilbertShape, StateKind};
use crate::weingarten::{
    closed_form_twirl, copy_major_to_site_major, hamming_operator_site_major, random_operator, rising_factorial,
    swap_site_major, twirl_global, twirl_local,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Fast oracle checks that need no long sampling runs.
pub fn selftest() -> Vec<CheckResult> {
    vec![
        check("hamming kernel twirls to swap", || {
            let mut worst: f64 = 0.0;
            for d in [2, 3] {
                for n in [1, 2] {
                    let o = hamming_operator_site_major(d, n)?;
                    worst = worst.max(max_abs_diff(&twirl_local(&o, 2, d, n)?, &swap_site_major(d, n)?));
                }
            }
            Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
        }),
        check("first and second moment closed forms", || {
            let mut worst: f64 = 0.0;
            for d in [2usize, 3, 4] {
                for k in [1, 2] {
                    let o = random_operator(d.pow(k as u32), 7 + d as u64);
                    worst = worst.max(max_abs_diff(&twirl_global(&o, k, d)?, &closed_form_twirl(&o, k, d)?));
                }
            }
            Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
        }),
        check("kernel twirl reproduces purity", || {
            let s = HilbertShape::new(2, 2)?;
            let rho = make_state(StateKind::RandomMixed { ancilla_sites: 2 }, s, 3)?;
            let tw = twirl_local(&hamming_operator_site_major(2, 2)?, 2, 2, 2)?;
            let rr = copy_major_to_site_major(&kron(rho.elements(), rho.elements())?, 2, 2, 2)?;
            let dev = ((tw * rr).trace().re - rho.purity()).abs();
            Ok((dev < 1e-10, format!("deviation {dev:.2e}")))
        }),
        check("local purity of a maximally mixed state", || {
            let s = HilbertShape::new(2, 3)?;
            let st = prepare(StateKind::MaximallyMixed, s, 0)?;
            let batch = UnitaryBatch::new(s, Variant::Local, 16, 1)?;
            let ds = simulate(&[("mm", &st)], &batch, Shots::Exact, 0, false)?.remove(0);
            let v = purity_local(&ds, &[0, 1, 2])?.scalar();
            Ok(((v - 0.125).abs() < 1e-12, format!("estimate {v}")))
        }),
        check("pure-state moments give unit traces", || {
            let dim = 6;
            let m: Vec<f64> = (2..=4).map(|k| (1..=k).product::<usize>() as f64 / rising_factorial(dim, k)).collect();
            let t = solve_power_traces(&m, dim)?;
            let dev = t.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
            Ok((dev < 1e-10, format!("max deviation {dev:.2e}")))
        }),
        check("records survive a JSON-lines round trip", || {
            let s = HilbertShape::new(3, 2)?;
            let st = prepare(StateKind::RandomPure, s, 2)?;
            let batch = UnitaryBatch::new(s, Variant::Local, 8, 3)?;
            let ds = simulate(&[("a", &st)], &batch, Shots::Finite(9), 4, true)?;
            let mut buf = Vec::new();
            export_jsonl(&ds, &mut buf)?;
            let back = ingest_jsonl(buf.as_slice(), batch.manifest())?;
            let same = back[0].records == ds[0].records && back[0].unitaries == ds[0].unitaries;
            Ok((same, format!("{} records", back[0].records.len())))
        }),
    ]
}
