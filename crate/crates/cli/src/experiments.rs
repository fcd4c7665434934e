//! Config-driven experiment runs. Each experiment writes CSV tables, SVG
//! plots, and a manifest with digests of every output; reruns of the same
//! config digest-match.

use crate::config::{ExperimentConfig, ExperimentId};
use crate::manifest::RunManifest;
use crate::pgm;
use crate::plot::{self, Series};
use lvbench::bits::Configuration;
use lvbench::embedding::{embed_problem, qubo_to_ising, rbm_to_qubo, scale_problem};
use lvbench::error::{Error, Result};
use lvbench::inference::{
    classification_error, generate, reconstruct, AnnealerContext, AnnealerSolver, ClampMask,
    Engine,
};
use lvbench::lv::{
    energy_histogram, overlap_stats, p_gs, scan_lvs_from_samples, scan_lvs_from_seeds, spearman,
    Binning, LvCatalog,
};
use lvbench::model::RbmModel;
use lvbench::rng::derive_rng;
use lvbench::samplers::{relax_to_minimum, sqa_sample, SampleSet, SamplerId};
use lvbench::training::{load_optdigits, train, Dataset};
use std::path::Path;

type Model = RbmModel<f64>;

/// A model checkpoint with its identity label.
pub struct Checkpoint {
    pub epoch: usize,
    pub model_ref: String,
    pub model: Model,
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    dir: std::path::PathBuf,
    manifest: RunManifest,
}

impl<'a> Run<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        let dir = config.out_dir.clone();
        std::fs::create_dir_all(&dir)?;
        Ok(Run {
            config,
            manifest: RunManifest::new(
                config.experiment.as_str(),
                config.seed,
                config.canonical_json(),
            ),
            dir,
        })
    }

    fn record(&mut self, rel: &str) -> Result<()> {
        self.manifest.record_output(&self.dir, rel)
    }

    fn finish(self) -> Result<RunManifest> {
        self.manifest.write(&self.dir)?;
        Ok(self.manifest)
    }
}

fn load_dataset(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let d = &config.dataset;
    let full = load_optdigits(&d.path, d.resolution, d.threshold, d.n_classes)?;
    full.split(d.n_train, d.n_test, d.split_seed)
}

/// Trains per the config (saving checkpoints under the run directory) or
/// loads the configured checkpoint files.
fn prepare_checkpoints(
    run: &mut Run<'_>,
    train_set: &Dataset,
    test_eval: Option<&Dataset>,
) -> Result<Vec<Checkpoint>> {
    let config = run.config;
    if !config.checkpoint_files.is_empty() {
        let mut out = Vec::new();
        for (k, file) in config.checkpoint_files.iter().enumerate() {
            let (model, epoch) = Model::load_checkpoint_json(file)?;
            let stem = file
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| format!("checkpoint-{k}"));
            out.push(Checkpoint {
                epoch: epoch.unwrap_or(k),
                model_ref: stem,
                model,
            });
        }
        return Ok(out);
    }

    let mut rng = derive_rng(config.model.init_seed, 0);
    let m0 = Model::random_init(
        train_set.pattern_len(),
        config.model.n_hidden,
        config.model.init_sigma,
        &mut rng,
    );
    let tc = config.training.to_config();
    let mut eval_fn;
    let eval: Option<&mut dyn FnMut(&Model, usize) -> f64> = match test_eval {
        Some(test_set) => {
            let burn_in = config.infer.burn_in;
            let votes = config.infer.votes;
            let seed = config.seed;
            eval_fn = move |model: &Model, epoch: usize| {
                let engine = Engine::Mcmc { burn_in, votes };
                classification_error(model, test_set, &engine, seed ^ epoch as u64)
                    .unwrap_or(f64::NAN)
            };
            Some(&mut eval_fn)
        }
        None => None,
    };
    let out = train(&m0, train_set, &tc, eval)?;

    let ck_dir = run.dir.join("checkpoints");
    std::fs::create_dir_all(&ck_dir)?;
    let mut checkpoints = Vec::new();
    for (epoch, model) in out.checkpoints {
        let rel = format!("checkpoints/epoch-{epoch}.json");
        model.save_checkpoint_json(&run.dir.join(&rel), epoch)?;
        run.record(&rel)?;
        checkpoints.push(Checkpoint {
            epoch,
            model_ref: format!("epoch-{epoch}"),
            model,
        });
    }
    out.trace.write_csv(&run.dir.join("training_trace.csv"))?;
    run.record("training_trace.csv")?;
    Ok(checkpoints)
}

fn tp_seeds(train_set: &Dataset, n_h: usize) -> Vec<Configuration> {
    train_set
        .patterns
        .iter()
        .map(|p| Configuration::from_visible(p.clone(), n_h))
        .collect()
}

/// Cached hardware graph + embedding, shared by every checkpoint of a run
/// (the logical graph is the full bipartite coupling graph, identical
/// across checkpoints).
struct EmbedCache {
    ctx: Option<AnnealerContext>,
}

impl EmbedCache {
    fn new() -> Self {
        EmbedCache { ctx: None }
    }

    fn context(&mut self, config: &ExperimentConfig, model: &Model) -> Result<&AnnealerContext> {
        if self.ctx.is_none() {
            let spec = &config.embedding;
            let mut rng = derive_rng(spec.hw_seed, 0);
            let hw = lvbench::embedding::HardwareGraph::synthetic(
                spec.hw_nodes,
                spec.degree_cap,
                &mut rng,
            );
            let mut edges = Vec::new();
            for j in 0..model.n_v() {
                for i in 0..model.n_h() {
                    edges.push((j, model.n_v() + i));
                }
            }
            let embedding = lvbench::embedding::find_embedding(
                &edges,
                model.n_units(),
                &hw,
                spec.restarts,
                &mut rng,
            )?;
            self.ctx = Some(AnnealerContext {
                hw,
                embedding,
                chain_strength: spec.chain_strength,
            });
        }
        Ok(self.ctx.as_ref().unwrap())
    }
}

/// One SQA "call": `n_reads` reads in model space. The logical path samples
/// the model's Ising form directly; the embedded path scales, embeds,
/// samples the physical problem, and unembeds per the configured policy.
fn sqa_call(
    config: &ExperimentConfig,
    model: &Model,
    cache: &mut EmbedCache,
    sweeps: usize,
    n_reads: usize,
    seed: u64,
) -> Result<SampleSet> {
    let schedule = config.sqa.schedule(sweeps);
    if !config.sqa.embedded {
        let ising = qubo_to_ising(&rbm_to_qubo(model));
        return sqa_sample(&ising, &schedule, n_reads, seed);
    }
    let ctx = cache.context(config, model)?;
    let scaled = scale_problem(&qubo_to_ising(&rbm_to_qubo(model)), config.embedding.sf)?;
    let embedded = embed_problem(
        &scaled,
        &ctx.embedding,
        ctx.chain_strength,
        &ctx.hw,
    )?;
    let physical = sqa_sample(&embedded.physical, &schedule, n_reads, seed)?;
    let policy = config.embedding.policy()?;
    let mut states = Vec::new();
    for (state, mult) in physical.entries() {
        let (logical, _broken) = embedded.unembed_sample(state, policy)?;
        if let Some(bits) = logical {
            for _ in 0..mult {
                states.push(bits.clone());
            }
        }
    }
    if states.is_empty() {
        return Err(Error::AllSamplesRejected);
    }
    Ok(SampleSet::from_states(
        states,
        SamplerId::Sqa,
        seed,
        schedule.descriptor(),
    ))
}

fn annealer_engine<'c>(
    config: &ExperimentConfig,
    ctx: &'c AnnealerContext,
) -> Result<Engine<'c, f64>> {
    Ok(Engine::Annealer {
        ctx,
        sf: config.embedding.sf,
        solver: AnnealerSolver::Sqa {
            schedule: config.sqa.schedule(config.sqa.sweeps),
            n_reads: config.sqa.n_reads,
        },
        policy: config.embedding.policy()?,
    })
}

fn write_csv(run: &mut Run<'_>, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(run.dir.join(rel))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    drop(w);
    run.record(rel)
}

fn write_summary(run: &mut Run<'_>, value: serde_json::Value) -> Result<()> {
    std::fs::write(
        run.dir.join("summary.json"),
        serde_json::to_string_pretty(&value)?,
    )?;
    run.record("summary.json")
}

/// Scale-factor sweep of the annealer-path classification error (the
/// embedding-quality study).
fn run_sf_sweep(run: &mut Run<'_>) -> Result<()> {
    let config = run.config;
    let (train_set, test_set) = load_dataset(config)?;
    let checkpoints = prepare_checkpoints(run, &train_set, None)?;
    let final_ck = checkpoints
        .last()
        .ok_or(Error::Empty("checkpoint list"))?;
    let mut cache = EmbedCache::new();
    let ctx = cache.context(config, &final_ck.model)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (k, &sf) in config.sf_grid.iter().enumerate() {
        let engine = Engine::Annealer {
            ctx,
            sf,
            solver: AnnealerSolver::Sqa {
                schedule: config.sqa.schedule(config.sqa.sweeps),
                n_reads: config.sqa.n_reads,
            },
            policy: config.embedding.policy()?,
        };
        let err = classification_error(&final_ck.model, &test_set, &engine, config.seed + k as u64)?;
        rows.push(vec![format!("{sf}"), format!("{err}")]);
        points.push((sf, err));
    }
    write_csv(run, "sf_sweep.csv", &["sf", "classification_error"], &rows)?;
    plot::write_line_chart(
        &run.dir.join("sf_sweep.svg"),
        "Classification error vs scale factor",
        "scale factor",
        "classification error",
        &[Series {
            name: format!("{} (annealer)", final_ck.model_ref),
            points,
        }],
        false,
    )?;
    run.record("sf_sweep.svg")
}

/// Classification error vs training epoch (MCMC curve, plus the annealer
/// curve when the embedded path is enabled).
fn run_error_vs_epoch(run: &mut Run<'_>) -> Result<()> {
    let config = run.config;
    let (train_set, test_set) = load_dataset(config)?;
    let checkpoints = prepare_checkpoints(run, &train_set, None)?;
    let mut cache = EmbedCache::new();
    let mut rows = Vec::new();
    let mut mcmc_points = Vec::new();
    let mut annealer_points = Vec::new();
    for ck in &checkpoints {
        let engine = Engine::Mcmc {
            burn_in: config.infer.burn_in,
            votes: config.infer.votes,
        };
        let err = classification_error(&ck.model, &test_set, &engine, config.seed ^ ck.epoch as u64)?;
        mcmc_points.push((ck.epoch as f64, err));
        let annealer_err = if config.sqa.embedded {
            let ctx = cache.context(config, &ck.model)?;
            let engine = annealer_engine(config, ctx)?;
            let e =
                classification_error(&ck.model, &test_set, &engine, config.seed ^ ck.epoch as u64)?;
            annealer_points.push((ck.epoch as f64, e));
            format!("{e}")
        } else {
            String::new()
        };
        rows.push(vec![
            ck.epoch.to_string(),
            format!("{err}"),
            annealer_err,
        ]);
    }
    write_csv(
        run,
        "error_vs_epoch.csv",
        &["epoch", "error_mcmc", "error_annealer"],
        &rows,
    )?;
    let mut series = vec![Series {
        name: "MCMC".into(),
        points: mcmc_points,
    }];
    if !annealer_points.is_empty() {
        series.push(Series {
            name: "annealer proxy".into(),
            points: annealer_points,
        });
    }
    plot::write_line_chart(
        &run.dir.join("error_vs_epoch.svg"),
        "Classification error vs training epoch",
        "epoch",
        "classification error",
        &series,
        false,
    )?;
    run.record("error_vs_epoch.svg")
}

/// Shared machinery for the sweeps studies: per grid point, `n_calls`
/// independent SQA calls; P_GS against the best energy observed anywhere in
/// the experiment (reported as best-known, not exact), and the mean
/// per-call N_LV.
struct SweepsStudy {
    sweeps: Vec<usize>,
    p_gs_mean: Vec<f64>,
    n_lv_mean: Vec<f64>,
    best_known: f64,
}

fn sweeps_study(run: &Run<'_>, model: &Model, n_tp: usize) -> Result<SweepsStudy> {
    let config = run.config;
    let ising = qubo_to_ising(&rbm_to_qubo(model));
    let mut cache = EmbedCache::new();
    let mut sets: Vec<(usize, SampleSet)> = Vec::new();
    for (gi, &sweeps) in config.sweeps_grid.iter().enumerate() {
        for call in 0..config.n_calls {
            let seed = config.sqa.seed ^ ((gi as u64) << 32) ^ call as u64;
            let set = sqa_call(config, model, &mut cache, sweeps, config.sqa.n_reads, seed)?;
            sets.push((sweeps, set));
        }
    }
    // Best-known ground-state energy: lowest energy seen across all raw
    // samples and their relaxations.
    let mut best = f64::INFINITY;
    for (_, set) in &sets {
        for (state, _) in set.entries() {
            let e = ising.energy(state)?;
            if e < best {
                best = e;
            }
            let cfg = Configuration::from_flat(state, model.n_v())?;
            let lm = relax_to_minimum(model, &cfg)?;
            let e_lm = ising.energy(&lm.flat())?;
            if e_lm < best {
                best = e_lm;
            }
        }
    }
    let mut p_gs_mean = Vec::new();
    let mut n_lv_mean = Vec::new();
    for &sweeps in &config.sweeps_grid {
        let mut pg_acc = 0.0;
        let mut lv_acc = 0.0;
        let mut n = 0.0;
        for (s, set) in sets.iter().filter(|(s, _)| *s == sweeps) {
            debug_assert_eq!(*s, sweeps);
            pg_acc += p_gs(set, |st| ising.energy(st).unwrap(), best, 1e-6)?;
            let cat = scan_lvs_from_samples(model, set, "sweeps-study", n_tp)?;
            lv_acc += cat.n_lv() as f64;
            n += 1.0;
        }
        p_gs_mean.push(pg_acc / n);
        n_lv_mean.push(lv_acc / n);
    }
    Ok(SweepsStudy {
        sweeps: config.sweeps_grid.clone(),
        p_gs_mean,
        n_lv_mean,
        best_known: best,
    })
}

fn run_pgs_vs_sweeps(run: &mut Run<'_>) -> Result<()> {
    let (train_set, _) = load_dataset(run.config)?;
    let checkpoints = prepare_checkpoints(run, &train_set, None)?;
    let ck = checkpoints.last().ok_or(Error::Empty("checkpoint list"))?;
    let study = sweeps_study(run, &ck.model, train_set.len())?;
    let rows: Vec<Vec<String>> = study
        .sweeps
        .iter()
        .zip(&study.p_gs_mean)
        .map(|(s, p)| vec![s.to_string(), format!("{p}")])
        .collect();
    write_csv(run, "pgs_vs_sweeps.csv", &["sweeps", "p_gs"], &rows)?;
    let xs: Vec<f64> = study.sweeps.iter().map(|&s| (s as f64).ln()).collect();
    let rho = spearman(&xs, &study.p_gs_mean);
    write_summary(
        run,
        serde_json::json!({
            "best_known_energy": study.best_known,
            "gs_energy_source": "best energy observed across all runs (not exact)",
            "spearman_pgs_vs_log_sweeps": rho,
        }),
    )?;
    plot::write_line_chart(
        &run.dir.join("pgs_vs_sweeps.svg"),
        "P_GS vs sweeps (annealing-time analog)",
        "sweeps (annealing-time analog)",
        "P_GS",
        &[Series {
            name: "SQA proxy".into(),
            points: study
                .sweeps
                .iter()
                .zip(&study.p_gs_mean)
                .map(|(&s, &p)| (s as f64, p))
                .collect(),
        }],
        true,
    )?;
    run.record("pgs_vs_sweeps.svg")
}

fn run_nlv_vs_sweeps(run: &mut Run<'_>) -> Result<()> {
    let (train_set, _) = load_dataset(run.config)?;
    let checkpoints = prepare_checkpoints(run, &train_set, None)?;
    let ck = checkpoints.last().ok_or(Error::Empty("checkpoint list"))?;
    let study = sweeps_study(run, &ck.model, train_set.len())?;
    let n_tp = train_set.len() as f64;
    let rows: Vec<Vec<String>> = study
        .sweeps
        .iter()
        .zip(&study.n_lv_mean)
        .map(|(s, n)| vec![s.to_string(), format!("{n}"), format!("{}", n / n_tp)])
        .collect();
    write_csv(
        run,
        "nlv_vs_sweeps.csv",
        &["sweeps", "n_lv", "n_lv_over_n_tp"],
        &rows,
    )?;
    let xs: Vec<f64> = study.sweeps.iter().map(|&s| (s as f64).ln()).collect();
    let rho = spearman(&xs, &study.n_lv_mean);
    write_summary(
        run,
        serde_json::json!({
            "best_known_energy": study.best_known,
            "spearman_nlv_vs_log_sweeps": rho,
        }),
    )?;
    plot::write_line_chart(
        &run.dir.join("nlv_vs_sweeps.svg"),
        "N_LV vs sweeps (annealing-time analog)",
        "sweeps (annealing-time analog)",
        "N_LV / N_TP",
        &[Series {
            name: "SQA proxy".into(),
            points: study
                .sweeps
                .iter()
                .zip(&study.n_lv_mean)
                .map(|(&s, &n)| (s as f64, n / n_tp))
                .collect(),
        }],
        true,
    )?;
    run.record("nlv_vs_sweeps.svg")
}

/// N_LV / N_TP as a function of the training epoch, for Gibbs scans at each
/// configured kG and for the SQA proxy.
fn run_nlv_vs_epoch(run: &mut Run<'_>) -> Result<()> {
    let config = run.config;
    let (train_set, _) = load_dataset(config)?;
    let checkpoints = prepare_checkpoints(run, &train_set, None)?;
    let n_tp = train_set.len();
    let mut cache = EmbedCache::new();
    let mut rows = Vec::new();
    let mut series: Vec<Series> = Vec::new();
    for &k_g in &config.gibbs.k_g_values {
        series.push(Series {
            name: format!("gibbs kG={k_g}"),
            points: Vec::new(),
        });
    }
    series.push(Series {
        name: "sqa".into(),
        points: Vec::new(),
    });
    for ck in &checkpoints {
        let seeds = tp_seeds(&train_set, ck.model.n_h());
        for (si, &k_g) in config.gibbs.k_g_values.iter().enumerate() {
            let cat = scan_lvs_from_seeds(
                &ck.model,
                &seeds,
                k_g,
                config.gibbs.t,
                config.gibbs.n_rpt,
                config.gibbs.seed ^ ck.epoch as u64,
                &ck.model_ref,
            )?;
            rows.push(vec![
                ck.epoch.to_string(),
                "gibbs".into(),
                k_g.to_string(),
                cat.n_lv().to_string(),
                format!("{}", cat.n_lv_normalized()),
            ]);
            series[si]
                .points
                .push((ck.epoch as f64, cat.n_lv_normalized()));
        }
        let set = sqa_call(
            config,
            &ck.model,
            &mut cache,
            config.sqa.sweeps,
            config.sqa.n_reads,
            config.sqa.seed ^ ck.epoch as u64,
        )?;
        let cat = scan_lvs_from_samples(&ck.model, &set, &ck.model_ref, n_tp)?;
        rows.push(vec![
            ck.epoch.to_string(),
            "sqa".into(),
            String::new(),
            cat.n_lv().to_string(),
            format!("{}", cat.n_lv_normalized()),
        ]);
        series
            .last_mut()
            .unwrap()
            .points
            .push((ck.epoch as f64, cat.n_lv_normalized()));
    }
    write_csv(
        run,
        "nlv_vs_epoch.csv",
        &["epoch", "engine", "k_g", "n_lv", "n_lv_over_n_tp"],
        &rows,
    )?;
    plot::write_line_chart(
        &run.dir.join("nlv_vs_epoch.svg"),
        "N_LV / N_TP vs training epoch",
        "epoch",
        "N_LV / N_TP",
        &series,
        false,
    )?;
    run.record("nlv_vs_epoch.svg")
}

/// The overlap suite: for each (kG, N_smp) panel, the percentage of
/// SQA-found valleys missed by Gibbs (curve A) and of Gibbs-found valleys
/// missed by SQA (curve B), as functions of the training epoch.
pub fn report_overlap_suite(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = Run::new(config)?;
    let (train_set, _) = load_dataset(config)?;
    let checkpoints = prepare_checkpoints(&mut run, &train_set, None)?;
    let n_tp = train_set.len();
    let mut cache = EmbedCache::new();
    let mut panels = Vec::new();
    for &k_g in &config.gibbs.k_g_values {
        for &n_smp in &config.n_smp_values {
            panels.push((k_g, n_smp));
        }
    }
    for (k_g, n_smp) in panels {
        let n_rpt = n_smp.div_ceil(n_tp).max(1);
        let mut rows = Vec::new();
        let mut curve_a = Vec::new();
        let mut curve_b = Vec::new();
        for ck in &checkpoints {
            let seeds = tp_seeds(&train_set, ck.model.n_h());
            let gibbs_cat = scan_lvs_from_seeds(
                &ck.model,
                &seeds,
                k_g,
                config.gibbs.t,
                n_rpt,
                config.gibbs.seed ^ ck.epoch as u64,
                &ck.model_ref,
            )?;
            let set = sqa_call(
                config,
                &ck.model,
                &mut cache,
                config.sqa.sweeps,
                n_smp,
                config.sqa.seed ^ ck.epoch as u64,
            )?;
            let sqa_cat = scan_lvs_from_samples(&ck.model, &set, &ck.model_ref, n_tp)?;
            let rep = overlap_stats(&sqa_cat, &gibbs_cat)?;
            // A: % of SQA-found LVs missed by Gibbs; B: the converse.
            let a = rep.missed_by_b * 100.0;
            let b = rep.missed_by_a * 100.0;
            rows.push(vec![
                ck.epoch.to_string(),
                format!("{a}"),
                format!("{b}"),
                rep.n_a.to_string(),
                rep.n_b.to_string(),
                rep.shared.to_string(),
            ]);
            curve_a.push((ck.epoch as f64, a));
            curve_b.push((ck.epoch as f64, b));
        }
        let rel = format!("overlap_kg{k_g}_nsmp{n_smp}.csv");
        write_csv(
            &mut run,
            &rel,
            &[
                "epoch",
                "pct_sqa_lvs_missed_by_gibbs",
                "pct_gibbs_lvs_missed_by_sqa",
                "n_lv_sqa",
                "n_lv_gibbs",
                "shared",
            ],
            &rows,
        )?;
        let svg = format!("overlap_kg{k_g}_nsmp{n_smp}.svg");
        plot::write_line_chart(
            &run.dir.join(&svg),
            &format!("LVs missed by the other engine (kG={k_g}, N_smp={n_smp})"),
            "epoch",
            "% missed",
            &[
                Series {
                    name: "A: SQA LVs missed by Gibbs".into(),
                    points: curve_a,
                },
                Series {
                    name: "B: Gibbs LVs missed by SQA".into(),
                    points: curve_b,
                },
            ],
            false,
        )?;
        run.record(&svg)?;
    }
    run.finish()
}

/// Energy histograms of the local minima found by each engine, shaded by
/// the portion also found by the other engine.
fn run_lm_histograms(run: &mut Run<'_>) -> Result<()> {
    let config = run.config;
    let (train_set, _) = load_dataset(config)?;
    let checkpoints = prepare_checkpoints(run, &train_set, None)?;
    let n_tp = train_set.len();
    let mut cache = EmbedCache::new();
    let k_g = config.gibbs.k_g_values.first().copied().unwrap_or(1);
    for ck in &checkpoints {
        for &n_smp in &config.n_smp_values {
            let seeds = tp_seeds(&train_set, ck.model.n_h());
            let n_rpt = n_smp.div_ceil(n_tp).max(1);
            let gibbs_cat = scan_lvs_from_seeds(
                &ck.model,
                &seeds,
                k_g,
                config.gibbs.t,
                n_rpt,
                config.gibbs.seed ^ ck.epoch as u64,
                &ck.model_ref,
            )?;
            let set = sqa_call(
                config,
                &ck.model,
                &mut cache,
                config.sqa.sweeps,
                n_smp,
                config.sqa.seed ^ ck.epoch as u64,
            )?;
            let sqa_cat = scan_lvs_from_samples(&ck.model, &set, &ck.model_ref, n_tp)?;
            for (src, reference, src_name) in [
                (&sqa_cat, &gibbs_cat, "sqa"),
                (&gibbs_cat, &sqa_cat, "gibbs"),
            ] {
                let hist = energy_histogram(src, Some(reference), &Binning::Count(config.bins))?;
                let rel = format!("lm_hist_{}_nsmp{n_smp}_{src_name}.csv", ck.model_ref);
                hist.write_csv(&run.dir.join(&rel))?;
                run.record(&rel)?;
                let svg = format!("lm_hist_{}_nsmp{n_smp}_{src_name}.svg", ck.model_ref);
                let other = if src_name == "sqa" { "gibbs" } else { "sqa" };
                plot::write_histogram(
                    &run.dir.join(&svg),
                    &format!(
                        "LM energies, {src_name} ({}, N_smp={n_smp})",
                        ck.model_ref
                    ),
                    "RBM energy",
                    &hist.bin_edges,
                    &hist.counts_all,
                    &hist.counts_shared,
                    &format!("all {src_name} LMs"),
                    &format!("also found by {other}"),
                )?;
                run.record(&svg)?;
            }
        }
    }
    Ok(())
}

/// Generation and reconstruction demos rendered as PGM images.
fn run_infer_demo(run: &mut Run<'_>) -> Result<()> {
    let config = run.config;
    let (train_set, test_set) = load_dataset(config)?;
    let checkpoints = prepare_checkpoints(run, &train_set, None)?;
    let ck = checkpoints.last().ok_or(Error::Empty("checkpoint list"))?;
    let side = train_set.resolution;
    let n_classes = train_set.n_classes;
    let mut cache = EmbedCache::new();

    let mcmc_engine = Engine::Mcmc {
        burn_in: config.infer.burn_in,
        votes: config.infer.votes,
    };
    // generation: top-k lowest-energy images per class
    let mut gen_rows = Vec::new();
    for label in 0..n_classes {
        let engine: Engine<'_, f64> = if config.sqa.embedded {
            annealer_engine(config, cache.context(config, &ck.model)?)?
        } else {
            mcmc_engine.clone()
        };
        let out = generate(
            &ck.model,
            label,
            n_classes,
            &engine,
            config.infer.top_k,
            config.infer.seed ^ label as u64,
        )?;
        for (rank, (v, energy)) in out.states.iter().enumerate() {
            let rel = format!("gen_class{label}_rank{rank}.pgm");
            pgm::write_pgm(&run.dir.join(&rel), &v.slice(0, side * side), side)?;
            run.record(&rel)?;
            gen_rows.push(vec![
                label.to_string(),
                rank.to_string(),
                format!("{energy}"),
                v.to_hex(),
            ]);
        }
        if !out.complete {
            run.manifest
                .record_failure("generate", format!("class {label}: fewer than top_k states"));
        }
    }
    write_csv(
        run,
        "gen_energies.csv",
        &["class", "rank", "energy", "visible_hex"],
        &gen_rows,
    )?;

    // reconstruction: clamp a fraction of the pixels of test patterns
    let mut recon_rows = Vec::new();
    for k in 0..config.infer.n_demo.min(test_set.len()) {
        let image = test_set.image(k);
        let mask = ClampMask::random_fraction(
            &image,
            ck.model.n_v(),
            config.infer.clamp_fraction,
            config.infer.seed ^ (1000 + k as u64),
        );
        let engine: Engine<'_, f64> = if config.sqa.embedded {
            annealer_engine(config, cache.context(config, &ck.model)?)?
        } else {
            mcmc_engine.clone()
        };
        let result = reconstruct(&ck.model, &mask, &engine, config.infer.seed ^ k as u64)?;
        let orig = format!("recon{k}_original.pgm");
        pgm::write_pgm(&run.dir.join(&orig), &image, side)?;
        run.record(&orig)?;
        let mrel = format!("recon{k}_mask.pgm");
        pgm::write_mask_pgm(&run.dir.join(&mrel), &mask.clamped, &mask.values, side)?;
        run.record(&mrel)?;
        let rrel = format!("recon{k}_result.pgm");
        pgm::write_pgm(&run.dir.join(&rrel), &result.slice(0, side * side), side)?;
        run.record(&rrel)?;
        let predicted = (0..n_classes)
            .find(|&c| result.get(side * side + c))
            .unwrap_or(0);
        recon_rows.push(vec![
            k.to_string(),
            test_set.labels[k].to_string(),
            predicted.to_string(),
            mask.n_clamped().to_string(),
        ]);
    }
    write_csv(
        run,
        "recon_summary.csv",
        &["pattern", "true_label", "predicted_label", "n_clamped_pixels"],
        &recon_rows,
    )
}

/// Executes the configured experiment, writing outputs and a manifest under
/// `config.out_dir`. Stage failures are recorded in the manifest; outputs
/// written before a failure are kept.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    if config.experiment == ExperimentId::OverlapVsEpoch {
        return report_overlap_suite(config);
    }
    let mut run = Run::new(config)?;
    let outcome = match config.experiment {
        ExperimentId::SfSweep => run_sf_sweep(&mut run),
        ExperimentId::ErrorVsEpoch => run_error_vs_epoch(&mut run),
        ExperimentId::PgsVsSweeps => run_pgs_vs_sweeps(&mut run),
        ExperimentId::NlvVsSweeps => run_nlv_vs_sweeps(&mut run),
        ExperimentId::NlvVsEpoch => run_nlv_vs_epoch(&mut run),
        ExperimentId::LmHistograms => run_lm_histograms(&mut run),
        ExperimentId::InferDemo => run_infer_demo(&mut run),
        ExperimentId::OverlapVsEpoch => unreachable!(),
    };
    if let Err(e) = outcome {
        run.manifest.record_failure(config.experiment.as_str(), &e);
    }
    run.finish()
}

/// Rerun digest comparison: every output listed in `a` must exist in `b`
/// with an identical digest (and vice versa).
pub fn manifests_digest_match(a: &RunManifest, b: &RunManifest) -> bool {
    a.digest_map() == b.digest_map()
}

/// Catalog pair for ad-hoc CLI comparisons.
pub fn load_catalog_with_sidecar(path: &Path) -> Result<(LvCatalog<f64>, usize)> {
    let meta_path = path.with_extension("csv.meta.json");
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?;
    let n_bits = meta["n_bits"].as_u64().unwrap_or(0) as usize;
    let model_ref = meta["model_ref"].as_str().unwrap_or("unknown").to_string();
    let n_tp = meta["n_tp"].as_u64().unwrap_or(0) as usize;
    let n_v = meta["n_v"].as_u64().unwrap_or(0) as usize;
    Ok((LvCatalog::read_csv(path, n_bits, model_ref, n_tp)?, n_v))
}

/// Writes a catalog CSV plus its metadata sidecar.
pub fn save_catalog_with_sidecar(
    catalog: &LvCatalog<f64>,
    n_v: usize,
    path: &Path,
) -> Result<()> {
    catalog.write_csv(path)?;
    let mut sidecar = catalog.sidecar_json(n_v);
    sidecar["n_v"] = serde_json::json!(n_v);
    std::fs::write(
        path.with_extension("csv.meta.json"),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}
