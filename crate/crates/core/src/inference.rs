//! Clamped-sampling applications of a trained RBM: classification,
//! partial-image reconstruction, and label-conditioned generation, via MCMC
//! or the annealer proxy.
//!
//! Clamping mechanisms differ by path on purpose: the MCMC engine skips
//! updates of clamped units, while the annealer path saturates the local
//! fields of the clamped chains at +-4.

use crate::bits::{BitVec, Configuration};
use crate::embedding::{
    embed_problem, qubo_to_ising, rbm_to_qubo, scale_problem, ChainBreakPolicy, Embedding,
    HardwareGraph,
};
use crate::error::{Error, Result};
use crate::model::RbmModel;
use crate::real::{real, Real};
use crate::rng::derive_rng;
use crate::samplers::{gibbs_step_in_place, sqa_sample, AnnealSchedule};
use crate::training::Dataset;
use rand::Rng;

/// Paper-default MCMC classification procedure: 400 burn-in sweeps, then a
/// majority vote over the label units across 100 further sweeps.
pub const DEFAULT_BURN_IN: usize = 400;
pub const DEFAULT_VOTES: usize = 100;
/// Default fraction of pixels clamped in reconstruction demos.
pub const DEFAULT_CLAMP_FRACTION: f64 = 0.54;

/// Which visible units are held fixed, and at what values.
/// `values` is defined exactly on clamped positions (zero elsewhere).
#[derive(Clone, Debug, PartialEq)]
pub struct ClampMask {
    pub clamped: BitVec,
    pub values: BitVec,
}

impl ClampMask {
    pub fn new(clamped: BitVec, values: BitVec) -> Result<Self> {
        if clamped.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "clamp mask",
                expected: clamped.len(),
                found: values.len(),
            });
        }
        for i in values.iter_ones() {
            if !clamped.get(i) {
                return Err(Error::InvalidData(format!(
                    "clamp value set at unclamped position {i}"
                )));
            }
        }
        Ok(ClampMask { clamped, values })
    }

    /// Clamps every pixel of `image`; label units stay free.
    pub fn full_image(image: &BitVec, n_v: usize) -> Self {
        let n_pixels = image.len();
        let mut clamped = BitVec::zeros(n_v);
        let mut values = BitVec::zeros(n_v);
        for i in 0..n_pixels {
            clamped.set(i, true);
            if image.get(i) {
                values.set(i, true);
            }
        }
        ClampMask { clamped, values }
    }

    /// Clamps a random fraction of the pixels of `image` under a fixed seed.
    pub fn random_fraction(image: &BitVec, n_v: usize, fraction: f64, seed: u64) -> Self {
        let n_pixels = image.len();
        let n_clamp = ((n_pixels as f64 * fraction).round() as usize).min(n_pixels);
        let mut order: Vec<usize> = (0..n_pixels).collect();
        let mut rng = derive_rng(seed, 0);
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut clamped = BitVec::zeros(n_v);
        let mut values = BitVec::zeros(n_v);
        for &i in order.iter().take(n_clamp) {
            clamped.set(i, true);
            if image.get(i) {
                values.set(i, true);
            }
        }
        ClampMask { clamped, values }
    }

    /// One-hot label clamp: every label unit fixed, the target one to 1.
    pub fn label_one_hot(label: usize, n_pixels: usize, n_classes: usize) -> Self {
        let n_v = n_pixels + n_classes;
        let mut clamped = BitVec::zeros(n_v);
        let mut values = BitVec::zeros(n_v);
        for k in 0..n_classes {
            clamped.set(n_pixels + k, true);
        }
        values.set(n_pixels + label, true);
        ClampMask { clamped, values }
    }

    pub fn n_clamped(&self) -> usize {
        self.clamped.count_ones()
    }

    /// Writes the clamped values into a visible vector.
    pub fn apply(&self, v: &mut BitVec) {
        for i in self.clamped.iter_ones() {
            v.set(i, self.values.get(i));
        }
    }

    /// Clamp assignments as `(logical unit, bit)` pairs for the annealer path.
    pub fn assignments(&self) -> Vec<(usize, bool)> {
        self.clamped
            .iter_ones()
            .map(|i| (i, self.values.get(i)))
            .collect()
    }
}

/// Reusable embedding of a model's logical graph into a hardware graph.
#[derive(Clone, Debug)]
pub struct AnnealerContext {
    pub hw: HardwareGraph,
    pub embedding: Embedding,
    pub chain_strength: f64,
}

impl AnnealerContext {
    /// Finds an embedding of the model's coupling graph (an edge per nonzero
    /// weight) into `hw`.
    pub fn build<F: Real>(
        model: &RbmModel<F>,
        hw: HardwareGraph,
        restarts: usize,
        seed: u64,
        chain_strength: f64,
    ) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..model.n_h() {
            for j in 0..model.n_v() {
                if model.weights()[(i, j)] != F::zero() {
                    edges.push((j, model.n_v() + i));
                }
            }
        }
        let mut rng = derive_rng(seed, 0);
        let embedding =
            crate::embedding::find_embedding(&edges, model.n_units(), &hw, restarts, &mut rng)?;
        Ok(AnnealerContext {
            hw,
            embedding,
            chain_strength,
        })
    }

    /// Identity embedding on a complete hardware graph; only reasonable for
    /// tiny models (used by the exhaustive-solve path in tests).
    pub fn identity<F: Real>(model: &RbmModel<F>) -> Result<Self> {
        let n = model.n_units();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .collect();
        let hw = HardwareGraph::new(n, n.saturating_sub(1).max(1), &edges)?;
        Ok(AnnealerContext {
            hw,
            embedding: Embedding::identity(n),
            chain_strength: crate::embedding::DEFAULT_CHAIN_STRENGTH,
        })
    }
}

/// How the annealer path solves the clamped physical problem.
#[derive(Clone, Debug)]
pub enum AnnealerSolver<F: Real> {
    Sqa {
        schedule: AnnealSchedule<F>,
        n_reads: usize,
    },
    /// Exhaustive enumeration of the physical problem (tiny models only):
    /// returns the `n_lowest` lowest-energy states.
    BruteForce { n_lowest: usize },
}

/// Sampling engine for the generic inference operations.
#[derive(Clone, Debug)]
pub enum Engine<'a, F: Real> {
    Mcmc {
        burn_in: usize,
        votes: usize,
    },
    Annealer {
        ctx: &'a AnnealerContext,
        sf: F,
        solver: AnnealerSolver<F>,
        policy: ChainBreakPolicy,
    },
}

/// Valid (unembedded) samples of the clamped model, in model space.
fn annealer_samples<F: Real>(
    model: &RbmModel<F>,
    ctx: &AnnealerContext,
    sf: F,
    solver: &AnnealerSolver<F>,
    policy: ChainBreakPolicy,
    clamp: &ClampMask,
    seed: u64,
) -> Result<Vec<Configuration>> {
    let logical = scale_problem(&qubo_to_ising(&rbm_to_qubo(model)), sf)?;
    let embedded = embed_problem(&logical, &ctx.embedding, real(ctx.chain_strength), &ctx.hw)?;
    let clamped = embedded.clamp_units(&clamp.assignments())?;
    let physical_states: Vec<BitVec> = match solver {
        AnnealerSolver::Sqa { schedule, n_reads } => {
            let set = sqa_sample(&clamped, schedule, *n_reads, seed)?;
            set.entries()
                .flat_map(|(s, mult)| std::iter::repeat(s.clone()).take(mult as usize))
                .collect()
        }
        AnnealerSolver::BruteForce { n_lowest } => {
            brute_force_lowest(&clamped, *n_lowest)?
        }
    };
    let mut out = Vec::new();
    for state in &physical_states {
        let (logical_bits, _broken) = embedded.unembed_sample(state, policy)?;
        if let Some(bits) = logical_bits {
            out.push(Configuration::from_flat(&bits, model.n_v())?);
        }
    }
    if out.is_empty() {
        return Err(Error::AllSamplesRejected);
    }
    Ok(out)
}

fn brute_force_lowest<F: Real>(
    problem: &crate::embedding::IsingProblem<F>,
    n_lowest: usize,
) -> Result<Vec<BitVec>> {
    if problem.n > crate::model::DEFAULT_ENUM_CAP {
        return Err(Error::EnumerationCap {
            units: problem.n,
            cap: crate::model::DEFAULT_ENUM_CAP,
        });
    }
    let mut scored: Vec<(F, usize)> = (0usize..1 << problem.n)
        .map(|idx| {
            let e = problem
                .energy(&BitVec::from_usize(idx, problem.n))
                .expect("width matches");
            (e, idx)
        })
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(scored
        .into_iter()
        .take(n_lowest.max(1))
        .map(|(_, idx)| BitVec::from_usize(idx, problem.n))
        .collect())
}

fn label_of(v: &BitVec, n_pixels: usize, n_classes: usize) -> usize {
    for k in 0..n_classes {
        if v.get(n_pixels + k) {
            return k;
        }
    }
    0
}

/// MCMC classification: pixels clamped, labels initialized randomly once,
/// `burn_in` full Gibbs sweeps, then the label-unit states after each of
/// `votes` further sweeps are tallied; the majority class wins (ties go to
/// the lowest class index).
pub fn classify_mcmc<F: Real, R: Rng>(
    model: &RbmModel<F>,
    image: &BitVec,
    n_classes: usize,
    burn_in: usize,
    votes: usize,
    rng: &mut R,
) -> Result<usize> {
    let n_pixels = model.n_v() - n_classes;
    if image.len() != n_pixels {
        return Err(Error::DimensionMismatch {
            what: "image",
            expected: n_pixels,
            found: image.len(),
        });
    }
    let clamp = ClampMask::full_image(image, model.n_v());
    let mut config = Configuration::zeros(model.n_v(), model.n_h());
    clamp.apply(&mut config.v);
    for k in 0..n_classes {
        config.v.set(n_pixels + k, rng.gen::<bool>());
    }
    let t = F::one();
    for _ in 0..burn_in {
        gibbs_step_in_place(model, &mut config, Some(&clamp.clamped), t, rng)?;
    }
    let mut tally = vec![0u64; n_classes];
    for _ in 0..votes {
        gibbs_step_in_place(model, &mut config, Some(&clamp.clamped), t, rng)?;
        for (k, t) in tally.iter_mut().enumerate() {
            if config.v.get(n_pixels + k) {
                *t += 1;
            }
        }
    }
    let best = tally.iter().max().copied().unwrap_or(0);
    Ok(tally.iter().position(|&t| t == best).unwrap_or(0))
}

/// Annealer classification: embed, clamp every pixel, sample, and read the
/// label off the lowest-energy valid sample.
#[allow(clippy::too_many_arguments)]
pub fn classify_annealer<F: Real>(
    model: &RbmModel<F>,
    image: &BitVec,
    n_classes: usize,
    ctx: &AnnealerContext,
    sf: F,
    solver: &AnnealerSolver<F>,
    policy: ChainBreakPolicy,
    seed: u64,
) -> Result<usize> {
    let n_pixels = model.n_v() - n_classes;
    if image.len() != n_pixels {
        return Err(Error::DimensionMismatch {
            what: "image",
            expected: n_pixels,
            found: image.len(),
        });
    }
    let clamp = ClampMask::full_image(image, model.n_v());
    let samples = annealer_samples(model, ctx, sf, solver, policy, &clamp, seed)?;
    let mut best: Option<(F, &Configuration)> = None;
    for config in &samples {
        let e = model.energy(config)?;
        if best.is_none_or(|(be, _)| e < be) {
            best = Some((e, config));
        }
    }
    let (_, config) = best.expect("samples nonempty");
    Ok(label_of(&config.v, n_pixels, n_classes))
}

/// Fills the free units of a partially clamped visible vector from the
/// engine. Clamped bits are bit-identical in the output, always.
pub fn reconstruct<F: Real>(
    model: &RbmModel<F>,
    partial: &ClampMask,
    engine: &Engine<'_, F>,
    seed: u64,
) -> Result<BitVec> {
    if partial.clamped.len() != model.n_v() {
        return Err(Error::DimensionMismatch {
            what: "clamp mask",
            expected: model.n_v(),
            found: partial.clamped.len(),
        });
    }
    if partial.n_clamped() >= model.n_v() {
        return Err(Error::InvalidConfig(
            "reconstruction needs at least one free unit".into(),
        ));
    }
    let mut out = match engine {
        Engine::Mcmc { burn_in, .. } => {
            let mut rng = derive_rng(seed, 0);
            let mut config = Configuration::zeros(model.n_v(), model.n_h());
            for j in 0..model.n_v() {
                config.v.set(j, rng.gen::<bool>());
            }
            partial.apply(&mut config.v);
            let t = F::one();
            for _ in 0..*burn_in {
                gibbs_step_in_place(model, &mut config, Some(&partial.clamped), t, &mut rng)?;
            }
            config.v
        }
        Engine::Annealer {
            ctx,
            sf,
            solver,
            policy,
        } => {
            let samples = annealer_samples(model, ctx, *sf, solver, *policy, partial, seed)?;
            let mut best: Option<(F, BitVec)> = None;
            for config in samples {
                let e = model.energy(&config)?;
                if best.as_ref().is_none_or(|(be, _)| e < *be) {
                    best = Some((e, config.v));
                }
            }
            best.expect("samples nonempty").1
        }
    };
    partial.apply(&mut out);
    Ok(out)
}

/// Label-conditioned generation result.
#[derive(Clone, Debug)]
pub struct GenerateOutput<F: Real> {
    /// Distinct visible vectors in ascending energy order (joint energy of
    /// the sampled state), at most `top_k`.
    pub states: Vec<(BitVec, F)>,
    /// False when fewer than `top_k` distinct states were found.
    pub complete: bool,
}

/// Clamps the label units to the one-hot code of `label` and returns the
/// `top_k` distinct lowest-energy sampled visible vectors.
#[allow(clippy::too_many_arguments)]
pub fn generate<F: Real>(
    model: &RbmModel<F>,
    label: usize,
    n_classes: usize,
    engine: &Engine<'_, F>,
    top_k: usize,
    seed: u64,
) -> Result<GenerateOutput<F>> {
    if top_k < 1 {
        return Err(Error::InvalidConfig("top_k must be >= 1".into()));
    }
    let n_pixels = model.n_v() - n_classes;
    if label >= n_classes {
        return Err(Error::InvalidData(format!("label {label} out of range")));
    }
    let clamp = ClampMask::label_one_hot(label, n_pixels, n_classes);
    let mut scored: Vec<(BitVec, F)> = Vec::new();
    let push = |v: BitVec, e: F, scored: &mut Vec<(BitVec, F)>| {
        match scored.iter_mut().find(|(s, _)| *s == v) {
            Some((_, best)) => {
                if e < *best {
                    *best = e;
                }
            }
            None => scored.push((v, e)),
        }
    };
    match engine {
        Engine::Mcmc { burn_in, votes } => {
            let mut rng = derive_rng(seed, 0);
            let mut config = Configuration::zeros(model.n_v(), model.n_h());
            for j in 0..model.n_v() {
                config.v.set(j, rng.gen::<bool>());
            }
            clamp.apply(&mut config.v);
            let t = F::one();
            for _ in 0..*burn_in {
                gibbs_step_in_place(model, &mut config, Some(&clamp.clamped), t, &mut rng)?;
            }
            for _ in 0..(*votes).max(1) {
                gibbs_step_in_place(model, &mut config, Some(&clamp.clamped), t, &mut rng)?;
                let e = model.energy(&config)?;
                push(config.v.clone(), e, &mut scored);
            }
        }
        Engine::Annealer {
            ctx,
            sf,
            solver,
            policy,
        } => {
            let samples = annealer_samples(model, ctx, *sf, solver, *policy, &clamp, seed)?;
            for config in samples {
                let e = model.energy(&config)?;
                push(config.v.clone(), e, &mut scored);
            }
        }
    }
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let complete = scored.len() >= top_k;
    scored.truncate(top_k);
    Ok(GenerateOutput {
        states: scored,
        complete,
    })
}

/// Fraction of the test set misclassified by the engine. Pattern `k` uses
/// the derived stream `(seed, k)`, so the result is reproducible and
/// independent of evaluation order.
pub fn classification_error<F: Real>(
    model: &RbmModel<F>,
    test_set: &Dataset,
    engine: &Engine<'_, F>,
    seed: u64,
) -> Result<f64> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut wrong = 0usize;
    for k in 0..test_set.len() {
        let image = test_set.image(k);
        let predicted = match engine {
            Engine::Mcmc { burn_in, votes } => {
                let mut rng = derive_rng(seed, k as u64);
                classify_mcmc(
                    model,
                    &image,
                    test_set.n_classes,
                    *burn_in,
                    *votes,
                    &mut rng,
                )?
            }
            Engine::Annealer {
                ctx,
                sf,
                solver,
                policy,
            } => {
                let pattern_seed: u64 = derive_rng(seed, k as u64).gen();
                classify_annealer(
                    model,
                    &image,
                    test_set.n_classes,
                    ctx,
                    *sf,
                    solver,
                    *policy,
                    pattern_seed,
                )?
            }
        };
        if predicted != test_set.labels[k] {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / test_set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::{train, Dataset, TrainingConfig};

    /// 2x2-pixel dataset with 2 classes used by the overfit-oracle tests.
    fn overfit_setup() -> (RbmModel<f64>, Dataset) {
        let p0 = Dataset::make_pattern(&BitVec::from_bools(&[true, true, false, false]), 0, 2);
        let p1 = Dataset::make_pattern(&BitVec::from_bools(&[false, false, true, true]), 1, 2);
        let ds = Dataset::new(vec![p0, p1], vec![0, 1], 2, 2).unwrap();
        let mut rng = derive_rng(7, 0);
        let m0 = RbmModel::<f64>::random_init(6, 4, 0.01, &mut rng);
        let config = TrainingConfig {
            k_g: 3,
            learning_rate: 0.2,
            epochs: 800,
            batch_size: 2,
            weight_decay: 0.0,
            weight_cap: None,
            rng_seed: 13,
            checkpoint_epochs: vec![],
        };
        let out = train(&m0, &ds, &config, None).unwrap();
        (out.model, ds)
    }

    #[test]
    fn overfit_model_classifies_its_own_patterns() {
        let (model, ds) = overfit_setup();
        for k in 0..ds.len() {
            let mut rng = derive_rng(100 + k as u64, 0);
            let class = classify_mcmc(&model, &ds.image(k), 2, 100, 50, &mut rng).unwrap();
            assert_eq!(class, ds.labels[k], "pattern {k}");
        }
        let engine = Engine::Mcmc {
            burn_in: 100,
            votes: 50,
        };
        let err = classification_error(&model, &ds, &engine, 5).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn zero_model_labels_are_near_chance() {
        let m = RbmModel::<f64>::zeros(6, 3);
        let image = BitVec::from_bools(&[true, false, true, false]);
        let mut counts = [0usize; 2];
        for s in 0..300u64 {
            let mut rng = derive_rng(s, 1);
            let class = classify_mcmc(&m, &image, 2, 5, 9, &mut rng).unwrap();
            counts[class] += 1;
        }
        // symmetric model: both classes should appear often
        assert!(counts[0] > 60 && counts[1] > 60, "counts {counts:?}");
    }

    #[test]
    fn mcmc_classification_is_seed_reproducible() {
        let (model, ds) = overfit_setup();
        let engine = Engine::Mcmc {
            burn_in: 50,
            votes: 20,
        };
        let a = classification_error(&model, &ds, &engine, 42).unwrap();
        let b = classification_error(&model, &ds, &engine, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reconstruct_preserves_clamped_bits_and_overfit_pattern() {
        let (model, ds) = overfit_setup();
        let image = ds.image(0);
        // clamp 50% of the 4 pixels
        let partial = ClampMask::random_fraction(&image, model.n_v(), 0.54, 3);
        let engine = Engine::Mcmc {
            burn_in: 200,
            votes: 0,
        };
        let out = reconstruct(&model, &partial, &engine, 11).unwrap();
        for i in partial.clamped.iter_ones() {
            assert_eq!(out.get(i), partial.values.get(i));
        }
        // overfit model: free pixels come back as the training pattern
        let full = ds.patterns[0].slice(0, 4);
        assert_eq!(out.slice(0, 4), full);
    }

    #[test]
    fn clamped_units_never_altered_fuzz() {
        let (model, _) = overfit_setup();
        for s in 0..30u64 {
            let mut rng = derive_rng(s, 2);
            let mut clamped = BitVec::zeros(model.n_v());
            let mut values = BitVec::zeros(model.n_v());
            for i in 0..model.n_v() - 1 {
                if rng.gen::<bool>() {
                    clamped.set(i, true);
                    if rng.gen::<bool>() {
                        values.set(i, true);
                    }
                }
            }
            let mask = ClampMask::new(clamped, values).unwrap();
            if mask.n_clamped() >= model.n_v() {
                continue;
            }
            let engine = Engine::Mcmc {
                burn_in: 20,
                votes: 0,
            };
            let out = reconstruct(&model, &mask, &engine, s).unwrap();
            for i in mask.clamped.iter_ones() {
                assert_eq!(out.get(i), mask.values.get(i), "seed {s} bit {i}");
            }
        }
    }

    #[test]
    fn annealer_exhaustive_matches_brute_force_conditional_argmin() {
        let (model, ds) = overfit_setup();
        let ctx = AnnealerContext::identity(&model).unwrap();
        let solver = AnnealerSolver::BruteForce { n_lowest: 4 };
        for k in 0..ds.len() {
            let image = ds.image(k);
            let class = classify_annealer(
                &model,
                &image,
                2,
                &ctx,
                1.0,
                &solver,
                ChainBreakPolicy::MajorityVote,
                9,
            )
            .unwrap();
            // Independent oracle: direct argmin of the model energy over all
            // free-unit completions with the pixels fixed.
            let n_pixels = 4;
            let mut best = (f64::INFINITY, 0usize);
            for free in 0..(1usize << (2 + model.n_h())) {
                let mut v = BitVec::zeros(model.n_v());
                for i in 0..n_pixels {
                    v.set(i, image.get(i));
                }
                for c in 0..2 {
                    v.set(n_pixels + c, (free >> c) & 1 == 1);
                }
                let mut h = BitVec::zeros(model.n_h());
                for i in 0..model.n_h() {
                    h.set(i, (free >> (2 + i)) & 1 == 1);
                }
                let e = model.energy(&Configuration::new(v.clone(), h)).unwrap();
                if e < best.0 {
                    let lbl = label_of(&v, n_pixels, 2);
                    best = (e, lbl);
                }
            }
            assert_eq!(class, best.1, "pattern {k}");
        }
    }

    #[test]
    fn fully_clamped_pipeline_returns_clamped_label() {
        // With pixels and labels all clamped, the lowest-energy valid state
        // must carry the clamped label.
        let (model, ds) = overfit_setup();
        let ctx = AnnealerContext::identity(&model).unwrap();
        let logical = qubo_to_ising(&rbm_to_qubo(&model));
        let embedded = embed_problem(
            &logical,
            &ctx.embedding,
            ctx.chain_strength,
            &ctx.hw,
        )
        .unwrap();
        let mut assignments: Vec<(usize, bool)> = Vec::new();
        for j in 0..model.n_v() {
            assignments.push((j, ds.patterns[1].get(j)));
        }
        let clamped = embedded.clamp_units(&assignments).unwrap();
        let (gs, _) = clamped.brute_force_ground_states(20, 1e-9).unwrap();
        let cfg = Configuration::from_flat(&gs[0], model.n_v()).unwrap();
        assert_eq!(label_of(&cfg.v, 4, 2), 1);
    }

    #[test]
    fn generate_returns_sorted_distinct_states() {
        let (model, ds) = overfit_setup();
        let engine = Engine::Mcmc {
            burn_in: 100,
            votes: 200,
        };
        let out = generate(&model, 0, 2, &engine, 3, 17).unwrap();
        assert!(!out.states.is_empty());
        for pair in out.states.windows(2) {
            assert!(pair[0].1 <= pair[1].1);
            assert_ne!(pair[0].0, pair[1].0);
        }
        // overfit model: the lowest-energy generated image is the class-0 TP
        assert_eq!(out.states[0].0.slice(0, 4), ds.image(0));
        // every generated state carries the clamped one-hot label
        for (v, _) in &out.states {
            assert!(v.get(4));
            assert!(!v.get(5));
        }
    }

    #[test]
    fn generate_exhaustive_top1_is_conditional_gs() {
        let (model, _) = overfit_setup();
        let ctx = AnnealerContext::identity(&model).unwrap();
        let engine = Engine::Annealer {
            ctx: &ctx,
            sf: 1.0,
            solver: AnnealerSolver::BruteForce { n_lowest: 8 },
            policy: ChainBreakPolicy::MajorityVote,
        };
        let out = generate(&model, 1, 2, &engine, 1, 3).unwrap();
        assert_eq!(out.states.len(), 1);
        // oracle: enumerate all (free pixels, hidden) with the label clamped
        let mut best = f64::INFINITY;
        let mut best_v = BitVec::zeros(model.n_v());
        for free in 0..(1usize << (4 + model.n_h())) {
            let mut v = BitVec::zeros(model.n_v());
            for i in 0..4 {
                v.set(i, (free >> i) & 1 == 1);
            }
            v.set(4 + 1, true);
            let mut h = BitVec::zeros(model.n_h());
            for i in 0..model.n_h() {
                h.set(i, (free >> (4 + i)) & 1 == 1);
            }
            let e = model.energy(&Configuration::new(v.clone(), h)).unwrap();
            if e < best {
                best = e;
                best_v = v;
            }
        }
        assert_eq!(out.states[0].0, best_v);
    }

    #[test]
    fn classification_error_is_in_unit_interval() {
        let m = RbmModel::<f64>::zeros(6, 3);
        let p0 = Dataset::make_pattern(&BitVec::from_bools(&[true, false, false, false]), 0, 2);
        let ds = Dataset::new(vec![p0], vec![0], 2, 2).unwrap();
        let engine = Engine::Mcmc {
            burn_in: 2,
            votes: 3,
        };
        let err = classification_error(&m, &ds, &engine, 0).unwrap();
        assert!((0.0..=1.0).contains(&err));
    }
}
