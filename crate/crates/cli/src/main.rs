//! `lvbench`: train RBMs, sample them with Gibbs/SA/SQA engines, map samples
//! to local valleys, compare samplers, and drive config-defined experiment
//! suites.

use clap::{Parser, Subcommand, ValueEnum};
use lvbench::bits::Configuration;
use lvbench::embedding::{qubo_to_ising, rbm_to_qubo, ChainBreakPolicy};
use lvbench::error::{Error, Result};
use lvbench::inference::{
    classification_error, generate, reconstruct, AnnealerContext, AnnealerSolver, ClampMask,
    Engine,
};
use lvbench::lv::{energy_histogram, overlap_stats, scan_lvs_from_samples, scan_lvs_from_seeds, Binning};
use lvbench::model::RbmModel;
use lvbench::rng::derive_rng;
use lvbench::samplers::{
    gibbs_sample, simulated_annealing_ising, sqa_sample, AnnealSchedule, SampleSet, SamplerId,
};
use lvbench::training::{load_optdigits, train, Dataset, TrainingConfig};
use lvbench_cli::config::ExperimentConfig;
use lvbench_cli::experiments::{run_experiment, save_catalog_with_sidecar};
use lvbench_cli::pgm;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "lvbench", about = "RBM sampler-quality benchmark toolkit", version)]
struct Cli {
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory/file override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment config file (run/report).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Gibbs,
    Sa,
    Sqa,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InferMode {
    Classify,
    Reconstruct,
    Generate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InferEngine {
    Mcmc,
    Annealer,
}

#[derive(clap::Args, Clone)]
struct DataArgs {
    /// Grayscale digit CSV (features then label column).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 8)]
    resolution: usize,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    /// Binarization cutoff; defaults to half the observed gray maximum.
    #[arg(long)]
    threshold: Option<f64>,
    /// Patterns taken from the head of the file as training patterns.
    #[arg(long, default_value_t = 100)]
    n_train: usize,
    #[arg(long, default_value_t = 50)]
    n_test: usize,
    #[arg(long, default_value_t = 1)]
    split_seed: u64,
}

impl DataArgs {
    fn load(&self) -> Result<(Dataset, Dataset)> {
        let full = load_optdigits(&self.data, self.resolution, self.threshold, self.classes)?;
        full.split(self.n_train, self.n_test, self.split_seed)
    }
}

#[derive(clap::Args, Clone)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 200)]
    sweeps: usize,
    #[arg(long, default_value_t = 100)]
    reads: usize,
    #[arg(long, default_value_t = 2.0)]
    t_start: f64,
    #[arg(long, default_value_t = 0.1)]
    t_end: f64,
    #[arg(long, default_value_t = 3.0)]
    gamma_start: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma_end: f64,
    #[arg(long, default_value_t = 8)]
    trotter: usize,
}

impl ScheduleArgs {
    fn sa(&self) -> AnnealSchedule<f64> {
        AnnealSchedule::sa(self.sweeps, self.t_start, self.t_end)
    }
    fn sqa(&self) -> AnnealSchedule<f64> {
        AnnealSchedule::sqa(
            self.sweeps,
            self.t_end,
            self.gamma_start,
            self.gamma_end,
            self.trotter,
        )
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Train an RBM with CD-k and save checkpoints plus the training trace.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 48)]
        hidden: usize,
        #[arg(long, default_value_t = 0.01)]
        init_sigma: f64,
        #[arg(long, default_value_t = 5)]
        kg: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 600)]
        epochs: usize,
        #[arg(long, default_value_t = 10)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        decay: f64,
        #[arg(long)]
        cap: Option<f64>,
        /// Comma-separated checkpoint epochs.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<usize>,
    },
    /// Draw samples from a trained model with one of the engines.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        engine: EngineKind,
        /// Gibbs: dataset supplying the seed patterns.
        #[command(flatten)]
        data: Option<DataArgs>,
        #[arg(long, default_value_t = 5)]
        kg: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1)]
        n_rpt: usize,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Scan samples (or fresh Gibbs chains) into a local-valley catalog.
    Scan {
        #[arg(long)]
        model: PathBuf,
        /// Existing sample CSV to relax (annealer-style scan).
        #[arg(long)]
        samples: Option<PathBuf>,
        /// With no sample file: dataset seeding Gibbs chains.
        #[command(flatten)]
        data: Option<DataArgs>,
        #[arg(long, default_value_t = 1)]
        kg: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 10)]
        n_rpt: usize,
        /// Checkpoint identity recorded in the catalog.
        #[arg(long, default_value = "model")]
        model_ref: String,
        /// Sampler id of the sample file (sa/sqa/gibbs).
        #[arg(long, default_value = "sqa")]
        sampler: String,
    },
    /// Overlap statistics between two catalogs of the same checkpoint.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Histogram of catalog LM energies, optionally shaded by a reference.
    Hist {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, name = "ref")]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Classify, reconstruct, or generate with a trained model.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        mode: InferMode,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = InferEngine::Mcmc)]
        engine: InferEngine,
        #[arg(long, default_value_t = lvbench::inference::DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = lvbench::inference::DEFAULT_VOTES)]
        votes: usize,
        /// Class label for generation.
        #[arg(long, default_value_t = 0)]
        label: usize,
        #[arg(long, default_value_t = 3)]
        top_k: usize,
        /// Test pattern index for reconstruction.
        #[arg(long, default_value_t = 0)]
        pattern: usize,
        #[arg(long, default_value_t = lvbench::inference::DEFAULT_CLAMP_FRACTION)]
        clamp_fraction: f64,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value_t = 300)]
        hw_nodes: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 2.0)]
        sf: f64,
    },
    /// Run a config-defined experiment.
    Run,
    /// Run the overlap report suite from a config.
    Report,
}

fn out_dir(out: &Option<PathBuf>, default: &str) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load_model(path: &Path) -> Result<RbmModel<f64>> {
    RbmModel::load_json(path)
}

fn require_config(config: &Option<PathBuf>) -> Result<ExperimentConfig> {
    let path = config
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--config is required for this command".into()))?;
    ExperimentConfig::load(path)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.cmd {
        Cmd::Train {
            data,
            hidden,
            init_sigma,
            kg,
            lr,
            epochs,
            batch,
            decay,
            cap,
            checkpoints,
        } => {
            let dir = out_dir(&cli.out, "runs/train")?;
            let (train_set, test_set) = data.load()?;
            let mut rng = derive_rng(seed, 0);
            let m0 =
                RbmModel::<f64>::random_init(train_set.pattern_len(), hidden, init_sigma, &mut rng);
            let checkpoint_epochs = if checkpoints.is_empty() {
                vec![epochs]
            } else {
                checkpoints
            };
            let config = TrainingConfig {
                k_g: kg,
                learning_rate: lr,
                epochs,
                batch_size: batch,
                weight_decay: decay,
                weight_cap: cap.or(Some(1.0)),
                rng_seed: seed,
                checkpoint_epochs,
            };
            let mut eval = |model: &RbmModel<f64>, epoch: usize| {
                let engine = Engine::Mcmc {
                    burn_in: lvbench::inference::DEFAULT_BURN_IN,
                    votes: lvbench::inference::DEFAULT_VOTES,
                };
                classification_error(model, &test_set, &engine, seed ^ epoch as u64)
                    .unwrap_or(f64::NAN)
            };
            let out = train(&m0, &train_set, &config, Some(&mut eval))?;
            std::fs::create_dir_all(dir.join("checkpoints"))?;
            for (epoch, model) in &out.checkpoints {
                model.save_json(&dir.join(format!("checkpoints/epoch-{epoch}.json")))?;
            }
            out.model.save_json(&dir.join("model.json"))?;
            out.trace.write_csv(&dir.join("training_trace.csv"))?;
            println!(
                "trained {} epochs; final max|w| = {:.4}; outputs in {}",
                epochs,
                out.model.max_abs_weight(),
                dir.display()
            );
            Ok(())
        }
        Cmd::Sample {
            model,
            engine,
            data,
            kg,
            t,
            n_rpt,
            schedule,
        } => {
            let dir = out_dir(&cli.out, "runs/sample")?;
            let model = load_model(&model)?;
            let set = match engine {
                EngineKind::Gibbs => {
                    let data = data.ok_or_else(|| {
                        Error::InvalidConfig("--data is required for gibbs sampling".into())
                    })?;
                    let (train_set, _) = data.load()?;
                    let mut seeds = Vec::new();
                    for _ in 0..n_rpt {
                        for p in &train_set.patterns {
                            seeds.push(Configuration::from_visible(p.clone(), model.n_h()));
                        }
                    }
                    gibbs_sample(&model, &seeds, kg, t, seed)?
                }
                EngineKind::Sa => {
                    let ising = qubo_to_ising(&rbm_to_qubo(&model));
                    simulated_annealing_ising(&ising, &schedule.sa(), schedule.reads, seed)?
                }
                EngineKind::Sqa => {
                    let ising = qubo_to_ising(&rbm_to_qubo(&model));
                    sqa_sample(&ising, &schedule.sqa(), schedule.reads, seed)?
                }
            };
            let csv_path = dir.join("samples.csv");
            set.write_csv(&csv_path, |state| model.energy_flat(state).unwrap())?;
            std::fs::write(
                dir.join("samples.csv.meta.json"),
                serde_json::to_string_pretty(&set.sidecar_json())?,
            )?;
            println!(
                "{} samples ({} distinct) -> {}",
                set.total_multiplicity(),
                set.n_distinct(),
                csv_path.display()
            );
            Ok(())
        }
        Cmd::Scan {
            model,
            samples,
            data,
            kg,
            t,
            n_rpt,
            model_ref,
            sampler,
        } => {
            let dir = out_dir(&cli.out, "runs/scan")?;
            let model = load_model(&model)?;
            let catalog = match samples {
                Some(sample_path) => {
                    let sampler_id: SamplerId = sampler.parse()?;
                    let set = SampleSet::read_csv(
                        &sample_path,
                        model.n_units(),
                        sampler_id,
                        seed,
                        String::new(),
                    )?;
                    let n_tp = data.as_ref().map_or(set.n_distinct(), |d| d.n_train);
                    scan_lvs_from_samples(&model, &set, &model_ref, n_tp)?
                }
                None => {
                    let data = data.ok_or_else(|| {
                        Error::InvalidConfig("--data or --samples is required".into())
                    })?;
                    let (train_set, _) = data.load()?;
                    let seeds: Vec<Configuration> = train_set
                        .patterns
                        .iter()
                        .map(|p| Configuration::from_visible(p.clone(), model.n_h()))
                        .collect();
                    scan_lvs_from_seeds(&model, &seeds, kg, t, n_rpt, seed, &model_ref)?
                }
            };
            let path = dir.join("catalog.csv");
            save_catalog_with_sidecar(&catalog, model.n_v(), &path)?;
            println!(
                "N_LV = {} ({} in visible projection) -> {}",
                catalog.n_lv(),
                catalog.distinct_visible_count(model.n_v()),
                path.display()
            );
            Ok(())
        }
        Cmd::Compare { a, b } => {
            let (cat_a, _) = lvbench_cli::experiments::load_catalog_with_sidecar(&a)?;
            let (cat_b, _) = lvbench_cli::experiments::load_catalog_with_sidecar(&b)?;
            let rep = overlap_stats(&cat_a, &cat_b)?;
            println!("n_a = {}, n_b = {}, shared = {}", rep.n_a, rep.n_b, rep.shared);
            println!(
                "missed_by_b = {:.4} (fraction of A absent from B)",
                rep.missed_by_b
            );
            println!(
                "missed_by_a = {:.4} (fraction of B absent from A)",
                rep.missed_by_a
            );
            if let Some(out) = &cli.out {
                std::fs::create_dir_all(out)?;
                let path = out.join("overlap.csv");
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["n_a", "n_b", "shared", "missed_by_b", "missed_by_a"])?;
                w.write_record([
                    rep.n_a.to_string(),
                    rep.n_b.to_string(),
                    rep.shared.to_string(),
                    format!("{}", rep.missed_by_b),
                    format!("{}", rep.missed_by_a),
                ])?;
                w.flush()?;
                println!("report -> {}", path.display());
            }
            Ok(())
        }
        Cmd::Hist {
            catalog,
            reference,
            bins,
        } => {
            let (cat, _) = lvbench_cli::experiments::load_catalog_with_sidecar(&catalog)?;
            let reference = match &reference {
                Some(p) => Some(lvbench_cli::experiments::load_catalog_with_sidecar(p)?.0),
                None => None,
            };
            let hist = energy_histogram(&cat, reference.as_ref(), &Binning::Count(bins))?;
            let dir = out_dir(&cli.out, "runs/hist")?;
            let path = dir.join("histogram.csv");
            hist.write_csv(&path)?;
            println!(
                "{} bins over [{:.4}, {:.4}] -> {}",
                hist.counts_all.len(),
                hist.bin_edges.first().unwrap(),
                hist.bin_edges.last().unwrap(),
                path.display()
            );
            Ok(())
        }
        Cmd::Infer {
            model,
            mode,
            data,
            engine,
            burn_in,
            votes,
            label,
            top_k,
            pattern,
            clamp_fraction,
            schedule,
            hw_nodes,
            restarts,
            sf,
        } => {
            let dir = out_dir(&cli.out, "runs/infer")?;
            let model = load_model(&model)?;
            let (train_set, test_set) = data.load()?;
            let side = train_set.resolution;
            let ctx;
            let engine: Engine<'_, f64> = match engine {
                InferEngine::Mcmc => Engine::Mcmc { burn_in, votes },
                InferEngine::Annealer => {
                    let mut rng = derive_rng(seed, 7);
                    let hw =
                        lvbench::embedding::HardwareGraph::synthetic(hw_nodes, 15, &mut rng);
                    ctx = AnnealerContext::build(&model, hw, restarts, seed, -1.0)?;
                    Engine::Annealer {
                        ctx: &ctx,
                        sf,
                        solver: AnnealerSolver::Sqa {
                            schedule: schedule.sqa(),
                            n_reads: schedule.reads,
                        },
                        policy: ChainBreakPolicy::MajorityVote,
                    }
                }
            };
            match mode {
                InferMode::Classify => {
                    let err = classification_error(&model, &test_set, &engine, seed)?;
                    println!("classification error on {} patterns: {err:.4}", test_set.len());
                }
                InferMode::Reconstruct => {
                    let image = test_set.image(pattern);
                    let mask =
                        ClampMask::random_fraction(&image, model.n_v(), clamp_fraction, seed);
                    let result = reconstruct(&model, &mask, &engine, seed)?;
                    pgm::write_pgm(&dir.join("original.pgm"), &image, side)?;
                    pgm::write_mask_pgm(&dir.join("mask.pgm"), &mask.clamped, &mask.values, side)?;
                    pgm::write_pgm(
                        &dir.join("result.pgm"),
                        &result.slice(0, side * side),
                        side,
                    )?;
                    println!("reconstruction written to {}", dir.display());
                }
                InferMode::Generate => {
                    let out = generate(&model, label, test_set.n_classes, &engine, top_k, seed)?;
                    let mut w = csv::Writer::from_path(dir.join("gen_energies.csv"))?;
                    w.write_record(["class", "rank", "energy", "visible_hex"])?;
                    for (rank, (v, e)) in out.states.iter().enumerate() {
                        pgm::write_pgm(
                            &dir.join(format!("gen_class{label}_rank{rank}.pgm")),
                            &v.slice(0, side * side),
                            side,
                        )?;
                        w.write_record([
                            label.to_string(),
                            rank.to_string(),
                            format!("{e}"),
                            v.to_hex(),
                        ])?;
                    }
                    w.flush()?;
                    if !out.complete {
                        println!("note: fewer than {top_k} distinct states found");
                    }
                    println!("generation written to {}", dir.display());
                }
            }
            Ok(())
        }
        Cmd::Run => {
            let mut config = require_config(&cli.config)?;
            if let Some(out) = &cli.out {
                config.out_dir = out.clone();
            }
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let manifest = run_experiment(&config)?;
            println!(
                "{}: {} outputs, {} failures -> {}",
                manifest.experiment,
                manifest.outputs.len(),
                manifest.failures.len(),
                config.out_dir.display()
            );
            for failure in &manifest.failures {
                eprintln!("stage failure: {failure}");
            }
            Ok(())
        }
        Cmd::Report => {
            let mut config = require_config(&cli.config)?;
            if let Some(out) = &cli.out {
                config.out_dir = out.clone();
            }
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let manifest = lvbench_cli::experiments::report_overlap_suite(&config)?;
            println!(
                "overlap suite: {} outputs -> {}",
                manifest.outputs.len(),
                config.out_dir.display()
            );
            Ok(())
        }
    }
}
