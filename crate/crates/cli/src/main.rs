use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use randmeas::estimators::{self, EstimateReport};
use randmeas::experiments::{self, ExperimentConfig};
use randmeas::haar::{UnitaryBatch, Variant};
use randmeas::linalg::CMatrix;
use randmeas::measurement::{simulate, Shots};
use randmeas::protocol::{ProtocolInput, ProtocolRegistry};
use randmeas::records_io;
use randmeas::rng::{self, tag};
use randmeas::state::{evolve, prepare, random_hamiltonian, HilbertShape, QuantumState, StateKind};
use randmeas::weingarten::WeingartenTable;
use randmeas::Error;

/// Randomized-measurement toolbox: purity, overlap, tomography and
/// higher moments from random-unitary measurement records.
#[derive(Parser)]
#[command(name = "randmeas", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RANDMEAS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Purity error sweep; writes one CSV row per grid cell.
    PurityScaling(SweepArgs),
    /// Tomography error sweep; writes one CSV row per grid cell.
    TomographyScaling(SweepArgs),
    /// Single- and two-qubit correlator statistics.
    BlochDemo {
        #[arg(long, default_value = "random_pure")]
        state: String,
        #[arg(long, default_value_t = 1)]
        sites: usize,
        #[arg(long, default_value_t = 100_000)]
        n_u: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Histogram CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlap of two prepared states measured with the same unitaries.
    Overlap {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "random_pure")]
        state_a: String,
        #[arg(long, default_value = "random_pure")]
        state_b: String,
    },
    /// Loschmidt echo of two random Hamiltonians via the overlap protocol.
    Loschmidt {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        /// Strength of the random perturbation added to the second Hamiltonian.
        #[arg(long, default_value_t = 0.0)]
        perturbation: f64,
    },
    /// Power traces tr ρ² … tr ρ^k from global unitaries.
    RenyiK {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "random_mixed_2")]
        state: String,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Simulate a state and write JSON-lines records plus a manifest.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = "random_pure")]
        state: String,
        /// Store the unitaries with each record (needed for tomography).
        #[arg(long)]
        with_unitaries: bool,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Run a protocol on ingested JSON-lines records.
    Ingest {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Second run for `overlap`.
        #[arg(long, requires = "manifest_b")]
        records_b: Option<PathBuf>,
        #[arg(long, requires = "records_b")]
        manifest_b: Option<PathBuf>,
        #[arg(long)]
        protocol: String,
        /// Only use records of this state label.
        #[arg(long)]
        state: Option<String>,
        #[arg(long, value_delimiter = ',')]
        subsystem: Option<Vec<usize>>,
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
    /// Quick oracle checks.
    Selftest,
    /// Dump the Weingarten table for order k and dimension d as JSON.
    Weingarten {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
    },
    /// Fit y = A·x^b to two CSV columns.
    FitPowerLaw {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Keep only rows with column=value (repeatable).
        #[arg(long = "where", value_parser = parse_filter)]
        filters: Vec<(String, String)>,
    },
}

/// Grid settings; flags override the config file.
#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sites: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    variants: Option<Vec<Variant>>,
    #[arg(long, value_delimiter = ',')]
    states: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    n_u: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_shots)]
    n_m: Option<Vec<Shots>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    sites: usize,
    #[arg(long, default_value = "local", value_parser = parse_variant)]
    variant: Variant,
    #[arg(long, default_value_t = 1000)]
    n_u: usize,
    #[arg(long, default_value = "inf", value_parser = parse_shots)]
    n_m: Shots,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).map_err(|e| e.to_string())
}

fn parse_shots(s: &str) -> Result<Shots, String> {
    Shots::parse(s).map_err(|e| e.to_string())
}

fn parse_filter(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected column=value, got `{s}`"))
}

/// Failure with its process exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }

    fn data(msg: impl Into<String>) -> Self {
        Self { code: 3, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DimensionCap { .. } => 4,
            Error::Validation { .. }
            | Error::ManifestMismatch(_)
            | Error::InsufficientShots { .. }
            | Error::NotUnitary(_)
            | Error::NotHermitian(_)
            | Error::EmptyBatch
            | Error::Degenerate(_)
            | Error::Json(_)
            | Error::Csv(_) => 3,
            _ => 2,
        };
        Self { code, msg: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load_config(args: &SweepArgs, protocol: &str) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_toml(&text).map_err(|e| Failure::config(e.to_string()))?
        }
        None => ExperimentConfig {
            protocol: None,
            d: 2,
            sites: vec![2],
            variants: vec![Variant::Local],
            states: vec!["pure_product".into()],
            n_u: vec![64],
            n_m: vec![Shots::Exact],
            trials: 20,
            master_seed: 0,
            output: None,
            dim_cap: None,
        },
    };
    if let Some(v) = args.d {
        cfg.d = v;
    }
    if let Some(v) = &args.sites {
        cfg.sites = v.clone();
    }
    if let Some(v) = &args.variants {
        cfg.variants = v.clone();
    }
    if let Some(v) = &args.states {
        cfg.states = v.clone();
    }
    if let Some(v) = &args.n_u {
        cfg.n_u = v.clone();
    }
    if let Some(v) = &args.n_m {
        cfg.n_m = v.clone();
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = &args.out {
        cfg.output = Some(v.clone());
    }
    cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
    cfg.check_protocol(protocol).map_err(|e| Failure::config(e.to_string()))?;
    Ok(cfg)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn parse_kind(s: &str) -> Result<StateKind, Failure> {
    StateKind::parse(s).map_err(|e| Failure::config(e.to_string()))
}

fn sim_shape(sim: &SimArgs) -> Result<HilbertShape, Failure> {
    Ok(HilbertShape::new(sim.d, sim.sites)?)
}

fn report_with_truth(report: &EstimateReport, truth: serde_json::Value) -> Outcome {
    print_json(&serde_json::json!({ "report": report, "truth": truth }))
}

fn run_scaling(args: &SweepArgs, protocol: &str) -> Outcome {
    let cfg = load_config(args, protocol)?;
    info!("{protocol} sweep: {} trials per cell", cfg.trials);
    let rows = match protocol {
        "purity" => experiments::run_purity_scaling(&cfg)?,
        _ => experiments::run_tomography_scaling(&cfg)?,
    };
    experiments::write_csv(&rows, open_output(cfg.output.as_deref())?)?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::PurityScaling(args) => run_scaling(&args, "purity"),
        Command::TomographyScaling(args) => run_scaling(&args, "tomography"),
        Command::BlochDemo {
            state,
            sites,
            n_u,
            seed,
            bins,
            out,
        } => {
            let demo = experiments::run_bloch_demo(parse_kind(&state)?, sites, n_u, seed, bins)?;
            if let Some(p) = out {
                experiments::write_csv(&demo.histogram, open_output(Some(&p))?)?;
            }
            print_json(&demo.summary)
        }
        Command::Overlap { sim, state_a, state_b } => {
            let shape = sim_shape(&sim)?;
            let a = prepare(parse_kind(&state_a)?, shape, rng::derive(sim.seed, &[tag::STATE, 0]))?;
            let b = prepare(parse_kind(&state_b)?, shape, rng::derive(sim.seed, &[tag::STATE, 1]))?;
            let batch = UnitaryBatch::new(shape, sim.variant, sim.n_u, sim.seed)?;
            let ds = simulate(&[("a", &a), ("b", &b)], &batch, sim.n_m, rng::derive(sim.seed, &[tag::SHOTS]), false)?;
            let report = estimators::overlap(&ds[0], &ds[1])?;
            let truth = a.density_matrix().overlap(&b.density_matrix());
            report_with_truth(&report, truth.into())
        }
        Command::Loschmidt {
            sim,
            time,
            perturbation,
        } => {
            let shape = sim_shape(&sim)?;
            let QuantumState::Pure(psi) = prepare(StateKind::RandomPure, shape, sim.seed)? else {
                unreachable!("random_pure prepares a pure state")
            };
            let mut r = rng::stream(sim.seed, &[tag::OPERATOR]);
            let h1 = random_hamiltonian(shape.dim(), &mut r);
            let v = random_hamiltonian(shape.dim(), &mut r);
            let h2: CMatrix = &h1 + v * randmeas::linalg::c64(perturbation, 0.0);
            let batch = UnitaryBatch::new(shape, sim.variant, sim.n_u, sim.seed)?;
            let report =
                estimators::loschmidt_echo(&psi, &h1, &h2, time, &batch, sim.n_m, rng::derive(sim.seed, &[tag::SHOTS]))?;
            let a = evolve(&psi, &h1, time)?;
            let b = evolve(&psi, &h2, time)?;
            report_with_truth(&report, a.inner(&b).norm_sqr().into())
        }
        Command::RenyiK { sim, state, k } => {
            let shape = sim_shape(&sim)?;
            let st = prepare(parse_kind(&state)?, shape, rng::derive(sim.seed, &[tag::STATE]))?;
            let batch = UnitaryBatch::new(shape, Variant::Global, sim.n_u, sim.seed)?;
            let ds = simulate(&[("s", &st)], &batch, sim.n_m, rng::derive(sim.seed, &[tag::SHOTS]), false)?;
            let report = estimators::renyi_k_global(&ds[0], k)?;
            let rho = st.density_matrix();
            let truth: Vec<f64> = (2..=k).map(|p| rho.power_trace(p)).collect();
            report_with_truth(&report, truth.into())
        }
        Command::Simulate {
            sim,
            state,
            with_unitaries,
            records,
            manifest,
        } => {
            let shape = sim_shape(&sim)?;
            let st = prepare(parse_kind(&state)?, shape, rng::derive(sim.seed, &[tag::STATE]))?;
            let batch = UnitaryBatch::new(shape, sim.variant, sim.n_u, sim.seed)?;
            if sim.n_m == Shots::Exact {
                return Err(Failure::config("records need a finite --n-m"));
            }
            let ds = simulate(&[(state.as_str(), &st)], &batch, sim.n_m, rng::derive(sim.seed, &[tag::SHOTS]), with_unitaries)?;
            records_io::export_jsonl_file(&ds, &records)?;
            records_io::write_manifest(batch.manifest(), &manifest)?;
            info!("wrote {} records to {}", ds[0].records.len(), records.display());
            Ok(())
        }
        Command::Ingest {
            records,
            manifest,
            records_b,
            manifest_b,
            protocol,
            state,
            subsystem,
            order,
        } => {
            let registry = ProtocolRegistry::with_defaults();
            let proto = registry.get(&protocol).map_err(|e| Failure::config(e.to_string()))?;
            let load = |r: &Path, m: &Path| -> Result<Vec<_>, Failure> {
                let manifest = records_io::read_manifest(m)?;
                let mut ds = records_io::ingest_jsonl_file(r, &manifest)?;
                if let Some(label) = &state {
                    ds.retain(|d| &d.label == label);
                    if ds.is_empty() {
                        return Err(Failure::data(format!("no records for state `{label}` in {}", r.display())));
                    }
                }
                Ok(ds)
            };
            let mut datasets = load(&records, &manifest)?;
            if let (Some(r), Some(m)) = (&records_b, &manifest_b) {
                datasets.extend(load(r, m)?);
            }
            let input = ProtocolInput {
                datasets: &datasets,
                subsystem: subsystem.as_deref(),
                order,
            };
            print_json(&proto.estimate(&input)?)
        }
        Command::Selftest => {
            let results = experiments::selftest();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(Failure::data("self-test failed"))
            }
        }
        Command::Weingarten { k, d } => print_json(&WeingartenTable::new(k, d)?),
        Command::FitPowerLaw { csv, x, y, filters } => {
            let (fit, points) = experiments::fit_csv_columns(&csv, &x, &y, &filters)?;
            print_json(&serde_json::json!({
                "exponent": fit.exponent,
                "exponent_stderr": fit.exponent_stderr,
                "prefactor": fit.prefactor,
                "points": points,
            }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
