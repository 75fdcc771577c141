use proptest::prelude::*;

use randmeas::estimators::{overlap, purity_local};
use randmeas::haar::{UnitaryBatch, Variant};
use randmeas::measurement::{simulate, HammingKernel, Shots};
use randmeas::records_io::{export_jsonl, ingest_jsonl};
use randmeas::state::{prepare, HilbertShape, StateKind};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_apply_matches_dense(d in 2usize..4, n in 1usize..4, seed in any::<u64>()) {
        let k = HammingKernel::new(d, n);
        let dim = k.dim();
        let x: Vec<f64> = (0..dim).map(|i| ((seed.wrapping_mul(i as u64 + 1) % 97) as f64) - 48.0).collect();
        let mut y = x.clone();
        k.apply(&mut y);
        let dense = k.dense() * nalgebra::DVector::from_column_slice(&x);
        for i in 0..dim {
            prop_assert!((y[i] - dense[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn overlap_is_symmetric(seed in any::<u64>(), n_m in 2u64..20) {
        let s = HilbertShape::new(2, 2).unwrap();
        let a = prepare(StateKind::RandomPure, s, seed).unwrap();
        let b = prepare(StateKind::RandomMixed { ancilla_sites: 1 }, s, seed ^ 1).unwrap();
        let batch = UnitaryBatch::new(s, Variant::Local, 6, seed).unwrap();
        let ds = simulate(&[("a", &a), ("b", &b)], &batch, Shots::Finite(n_m), seed, false).unwrap();
        prop_assert_eq!(overlap(&ds[0], &ds[1]).unwrap().scalar(), overlap(&ds[1], &ds[0]).unwrap().scalar());
    }

    #[test]
    fn records_round_trip(seed in any::<u64>(), n_m in 2u64..30, global in any::<bool>()) {
        let s = HilbertShape::new(2, 2).unwrap();
        let st = prepare(StateKind::RandomPure, s, seed).unwrap();
        let variant = if global { Variant::Global } else { Variant::Local };
        let batch = UnitaryBatch::new(s, variant, 5, seed).unwrap();
        let ds = simulate(&[("x", &st)], &batch, Shots::Finite(n_m), seed, true).unwrap();
        let mut buf = Vec::new();
        export_jsonl(&ds, &mut buf).unwrap();
        let back = ingest_jsonl(buf.as_slice(), batch.manifest()).unwrap();
        prop_assert_eq!(&back[0].records, &ds[0].records);
        prop_assert_eq!(&back[0].unitaries, &ds[0].unitaries);
    }

    #[test]
    fn exact_purity_of_maximally_mixed_is_exact(n in 1usize..4, seed in any::<u64>()) {
        let s = HilbertShape::new(2, n).unwrap();
        let st = prepare(StateKind::MaximallyMixed, s, 0).unwrap();
        let batch = UnitaryBatch::new(s, Variant::Local, 4, seed).unwrap();
        let ds = simulate(&[("m", &st)], &batch, Shots::Exact, 0, false).unwrap().remove(0);
        let sites: Vec<usize> = (0..n).collect();
        let v = purity_local(&ds, &sites).unwrap().scalar();
        prop_assert!((v - 1.0 / s.dim() as f64).abs() < 1e-12);
    }
}
