//! Dataset ingestion/binarization and classical CD-k training with weight
//! decay, plus an exact-gradient oracle for validating the estimator.

use crate::bits::{BitVec, Configuration};
use crate::error::{Error, Result};
use crate::model::RbmModel;
use crate::real::{real, Real};
use crate::rng::derive_rng;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Binarized patterns: image pixels followed by a one-hot class label.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub patterns: Vec<BitVec>,
    pub labels: Vec<usize>,
    pub resolution: usize,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(
        patterns: Vec<BitVec>,
        labels: Vec<usize>,
        resolution: usize,
        n_classes: usize,
    ) -> Result<Self> {
        if patterns.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "dataset labels",
                expected: patterns.len(),
                found: labels.len(),
            });
        }
        let len = resolution * resolution + n_classes;
        for (k, (p, &label)) in patterns.iter().zip(&labels).enumerate() {
            if p.len() != len {
                return Err(Error::InvalidData(format!(
                    "pattern {k} has {} bits, expected {len}",
                    p.len()
                )));
            }
            if label >= n_classes {
                return Err(Error::InvalidData(format!(
                    "pattern {k} label {label} out of range"
                )));
            }
            let set: Vec<usize> = (0..n_classes)
                .filter(|&c| p.get(resolution * resolution + c))
                .collect();
            if set != [label] {
                return Err(Error::InvalidData(format!(
                    "pattern {k} label bits {set:?} are not one-hot for class {label}"
                )));
            }
        }
        Ok(Dataset {
            patterns,
            labels,
            resolution,
            n_classes,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.resolution * self.resolution
    }

    /// Length of each pattern = number of visible units it trains.
    pub fn pattern_len(&self) -> usize {
        self.n_pixels() + self.n_classes
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Pixel bits of pattern `k` (label bits stripped).
    pub fn image(&self, k: usize) -> BitVec {
        self.patterns[k].slice(0, self.n_pixels())
    }

    /// Appends a one-hot label to pixel bits.
    pub fn make_pattern(pixels: &BitVec, label: usize, n_classes: usize) -> BitVec {
        let mut one_hot = BitVec::zeros(n_classes);
        one_hot.set(label, true);
        pixels.concat(&one_hot)
    }

    /// First `n_train` patterns for training plus `n_test` patterns drawn
    /// randomly from the remainder under a fixed seed.
    pub fn split(&self, n_train: usize, n_test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        if n_train > self.len() {
            return Err(Error::InvalidData(format!(
                "requested {n_train} training patterns from {}",
                self.len()
            )));
        }
        let train = Dataset {
            patterns: self.patterns[..n_train].to_vec(),
            labels: self.labels[..n_train].to_vec(),
            resolution: self.resolution,
            n_classes: self.n_classes,
        };
        let mut rest: Vec<usize> = (n_train..self.len()).collect();
        if n_test > rest.len() {
            return Err(Error::InvalidData(format!(
                "requested {n_test} test patterns from {} held out",
                rest.len()
            )));
        }
        let mut rng = derive_rng(seed, 0);
        rest.shuffle(&mut rng);
        rest.truncate(n_test);
        rest.sort_unstable();
        let test = Dataset {
            patterns: rest.iter().map(|&k| self.patterns[k].clone()).collect(),
            labels: rest.iter().map(|&k| self.labels[k]).collect(),
            resolution: self.resolution,
            n_classes: self.n_classes,
        };
        Ok((train, test))
    }
}

/// Loads a grayscale digit CSV (feature columns then a trailing label
/// column), downscales each square image to `resolution x resolution` by
/// block averaging, binarizes at `threshold` (bit = average >= threshold;
/// default is half of the largest gray value observed in the file), and
/// appends the one-hot label.
pub fn load_optdigits(
    path: &std::path::Path,
    resolution: usize,
    threshold: Option<f64>,
    n_classes: usize,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut max_gray = 0.0f64;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidData(format!(
                "row {line} has {} columns, need pixels plus a label",
                rec.len()
            )));
        }
        let mut features = Vec::with_capacity(rec.len() - 1);
        for field in rec.iter().take(rec.len() - 1) {
            let value: f64 = field.parse().map_err(|_| {
                Error::InvalidData(format!("row {line}: bad feature `{field}`"))
            })?;
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidData(format!(
                    "row {line}: feature {value} is not a gray level"
                )));
            }
            max_gray = max_gray.max(value);
            features.push(value);
        }
        let label: usize = rec[rec.len() - 1].parse().map_err(|_| {
            Error::InvalidData(format!("row {line}: bad label `{}`", &rec[rec.len() - 1]))
        })?;
        if label >= n_classes {
            return Err(Error::InvalidData(format!(
                "row {line}: label {label} out of range for {n_classes} classes"
            )));
        }
        rows.push((features, label));
    }
    if rows.is_empty() {
        return Err(Error::Empty("dataset file"));
    }
    let n_features = rows[0].0.len();
    let side = (n_features as f64).sqrt().round() as usize;
    if side * side != n_features {
        return Err(Error::InvalidData(format!(
            "{n_features} feature columns do not form a square image"
        )));
    }
    if resolution == 0 || resolution > side {
        return Err(Error::InvalidData(format!(
            "resolution {resolution} not in 1..={side}"
        )));
    }
    let cut = threshold.unwrap_or(max_gray / 2.0);

    let mut patterns = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (line, (features, label)) in rows.iter().enumerate() {
        if features.len() != n_features {
            return Err(Error::InvalidData(format!(
                "row {line} has {} features, expected {n_features}",
                features.len()
            )));
        }
        let mut pixels = BitVec::zeros(resolution * resolution);
        for r in 0..resolution {
            let r_lo = r * side / resolution;
            let r_hi = ((r + 1) * side / resolution).max(r_lo + 1);
            for c in 0..resolution {
                let c_lo = c * side / resolution;
                let c_hi = ((c + 1) * side / resolution).max(c_lo + 1);
                let mut sum = 0.0;
                let mut count = 0.0;
                for rr in r_lo..r_hi {
                    for cc in c_lo..c_hi {
                        sum += features[rr * side + cc];
                        count += 1.0;
                    }
                }
                if sum / count >= cut {
                    pixels.set(r * resolution + c, true);
                }
            }
        }
        patterns.push(Dataset::make_pattern(&pixels, *label, n_classes));
        labels.push(*label);
    }
    Dataset::new(patterns, labels, resolution, n_classes)
}

/// CD-k training hyperparameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub k_g: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// L2 decay coefficient, applied to the weight matrix only.
    pub weight_decay: f64,
    /// Optional hard clip on |w| after each update.
    pub weight_cap: Option<f64>,
    pub rng_seed: u64,
    /// Epochs at which a model snapshot is kept (and held-out evaluation
    /// runs, when requested).
    pub checkpoint_epochs: Vec<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            k_g: 5,
            learning_rate: 0.05,
            epochs: 2000,
            batch_size: 10,
            weight_decay: 1e-4,
            weight_cap: Some(1.0),
            rng_seed: 0,
            checkpoint_epochs: vec![20, 90, 600, 1000, 1400, 2000],
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_g < 1 {
            return Err(Error::InvalidConfig("k_g must be >= 1".into()));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("learning_rate must be >= 0".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig("weight_decay must be >= 0".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Log-likelihood gradient with respect to (W, b, c).
#[derive(Clone, Debug)]
pub struct Gradient<F: Real> {
    pub w: Array2<F>,
    pub b: Array1<F>,
    pub c: Array1<F>,
}

impl<F: Real> Gradient<F> {
    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        Gradient {
            w: Array2::zeros((n_h, n_v)),
            b: Array1::zeros(n_v),
            c: Array1::zeros(n_h),
        }
    }

    pub fn max_abs(&self) -> F {
        let fold = |m: F, &x: &F| if x.abs() > m { x.abs() } else { m };
        let m = self.w.iter().fold(F::zero(), fold);
        let m = self.b.iter().fold(m, fold);
        self.c.iter().fold(m, fold)
    }

    pub fn scale(&mut self, s: F) {
        self.w.mapv_inplace(|x| x * s);
        self.b.mapv_inplace(|x| x * s);
        self.c.mapv_inplace(|x| x * s);
    }

    pub fn add(&mut self, other: &Gradient<F>) {
        self.w += &other.w;
        self.b += &other.b;
        self.c += &other.c;
    }
}

fn check_batch<F: Real>(model: &RbmModel<F>, batch: &[BitVec]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    for p in batch {
        if p.len() != model.n_v() {
            return Err(Error::DimensionMismatch {
                what: "training pattern",
                expected: model.n_v(),
                found: p.len(),
            });
        }
    }
    Ok(())
}

pub(crate) struct CdStats<F: Real> {
    pub gradient: Gradient<F>,
    /// Mean fraction of visible bits flipped between each pattern and its
    /// chain state after the negative phase.
    pub recon_error: f64,
}

fn cd_k_stats<F: Real>(
    model: &RbmModel<F>,
    batch: &[BitVec],
    k_g: usize,
    seed: u64,
) -> Result<CdStats<F>> {
    check_batch(model, batch)?;
    let t = F::one();
    let (n_v, n_h) = (model.n_v(), model.n_h());
    let mut grad = Gradient::zeros(n_v, n_h);
    let mut recon = 0.0f64;
    for (chain_idx, pattern) in batch.iter().enumerate() {
        let mut rng = derive_rng(seed, chain_idx as u64);
        // positive phase: exact conditionals against the data vector
        let p_h0 = model.cond_prob_hidden(pattern, t)?;
        // negative phase: k_g full Gibbs steps started at the pattern
        let mut config = Configuration::from_visible(pattern.clone(), n_h);
        for _ in 0..k_g {
            crate::samplers::gibbs_step_in_place(model, &mut config, None, t, &mut rng)?;
        }
        let p_hk = model.cond_prob_hidden(&config.v, t)?;
        for i in 0..n_h {
            let row = grad.w.row_mut(i);
            positive_outer(row, &p_h0[i], pattern);
        }
        for i in 0..n_h {
            let row = grad.w.row_mut(i);
            negative_outer(row, &p_hk[i], &config.v);
        }
        for j in pattern.iter_ones() {
            grad.b[j] += F::one();
        }
        for j in config.v.iter_ones() {
            grad.b[j] -= F::one();
        }
        for i in 0..n_h {
            grad.c[i] += p_h0[i] - p_hk[i];
        }
        let mut flips = 0usize;
        for j in 0..n_v {
            if pattern.get(j) != config.v.get(j) {
                flips += 1;
            }
        }
        recon += flips as f64 / n_v as f64;
    }
    grad.scale(F::one() / real(batch.len() as f64));
    Ok(CdStats {
        gradient: grad,
        recon_error: recon / batch.len() as f64,
    })
}

fn positive_outer<F: Real>(mut row: ndarray::ArrayViewMut1<F>, p: &F, v: &BitVec) {
    for j in v.iter_ones() {
        row[j] += *p;
    }
}

fn negative_outer<F: Real>(mut row: ndarray::ArrayViewMut1<F>, p: &F, v: &BitVec) {
    for j in v.iter_ones() {
        row[j] -= *p;
    }
}

/// Single-sample CD-k estimate of the log-likelihood gradient, averaged over
/// the batch. The data term uses exact conditionals `p(H|v_tr) * v`; the
/// model term uses the smoothed statistic `p(H|v_k) * v_k` on the chain
/// state after `k_g` Gibbs steps from each pattern. Chain `i` of the batch
/// draws from stream `(seed, i)`.
pub fn cd_k_gradient<F: Real>(
    model: &RbmModel<F>,
    batch: &[BitVec],
    k_g: usize,
    seed: u64,
) -> Result<Gradient<F>> {
    Ok(cd_k_stats(model, batch, k_g, seed)?.gradient)
}

/// Exact log-likelihood gradient on an enumerable model: the model
/// expectations are exact sums over every visible state weighted by its
/// marginal probability.
pub fn exact_loglik_gradient<F: Real>(
    model: &RbmModel<F>,
    batch: &[BitVec],
    cap: usize,
) -> Result<Gradient<F>> {
    check_batch(model, batch)?;
    if model.n_units() > cap {
        return Err(Error::EnumerationCap {
            units: model.n_units(),
            cap,
        });
    }
    let t = F::one();
    let (n_v, n_h) = (model.n_v(), model.n_h());
    let log_z = model.log_partition_function_exact(t, cap)?;

    let mut grad = Gradient::zeros(n_v, n_h);
    for pattern in batch {
        let p_h = model.cond_prob_hidden(pattern, t)?;
        for i in 0..n_h {
            positive_outer(grad.w.row_mut(i), &p_h[i], pattern);
        }
        for j in pattern.iter_ones() {
            grad.b[j] += F::one();
        }
        for i in 0..n_h {
            grad.c[i] += p_h[i];
        }
    }
    grad.scale(F::one() / real(batch.len() as f64));

    for vidx in 0usize..1 << n_v {
        let v = BitVec::from_usize(vidx, n_v);
        let p_v = (model.log_marginal_weight(&v, t)? - log_z).exp();
        let p_h = model.cond_prob_hidden(&v, t)?;
        for i in 0..n_h {
            let weight = p_v * p_h[i];
            negative_outer(grad.w.row_mut(i), &weight, &v);
        }
        for j in v.iter_ones() {
            grad.b[j] -= p_v;
        }
        for i in 0..n_h {
            grad.c[i] -= p_v * p_h[i];
        }
    }
    Ok(grad)
}

/// Mean log marginal likelihood of the batch, `mean_b ln p(v_b)`.
pub fn exact_mean_log_likelihood<F: Real>(
    model: &RbmModel<F>,
    batch: &[BitVec],
    cap: usize,
) -> Result<F> {
    check_batch(model, batch)?;
    let log_z = model.log_partition_function_exact(F::one(), cap)?;
    let mut total = F::zero();
    for pattern in batch {
        total += model.log_marginal_weight(pattern, F::one())? - log_z;
    }
    Ok(total / real(batch.len() as f64))
}

/// One parameter update: `theta <- theta + lr * grad - lr * decay * W`
/// (decay touches the weight matrix only), then the optional hard clip of
/// |w| at `weight_cap`.
pub fn apply_update<F: Real>(
    model: &mut RbmModel<F>,
    grad: &Gradient<F>,
    learning_rate: F,
    weight_decay: F,
    weight_cap: Option<F>,
) {
    let (w, b, c) = model.params_mut();
    let decay = learning_rate * weight_decay;
    ndarray::Zip::from(&mut *w).and(&grad.w).for_each(|x, &g| {
        *x = *x + learning_rate * g - decay * *x;
    });
    ndarray::Zip::from(&mut *b).and(&grad.b).for_each(|x, &g| {
        *x = *x + learning_rate * g;
    });
    ndarray::Zip::from(&mut *c).and(&grad.c).for_each(|x, &g| {
        *x = *x + learning_rate * g;
    });
    if let Some(cap) = weight_cap {
        w.mapv_inplace(|x| {
            if x > cap {
                cap
            } else if x < -cap {
                -cap
            } else {
                x
            }
        });
    }
}

/// One row of the per-epoch training trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub recon_error: f64,
    pub max_abs_w: f64,
    pub classif_error: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingTrace {
    /// CSV schema: `epoch,recon_error,max_abs_w,classif_error` (the last
    /// column is empty for epochs without a held-out evaluation).
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "recon_error", "max_abs_w", "classif_error"])?;
        for rec in &self.epochs {
            w.write_record([
                rec.epoch.to_string(),
                format!("{}", rec.recon_error),
                format!("{}", rec.max_abs_w),
                rec.classif_error.map(|e| e.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct TrainingOutput<F: Real> {
    pub model: RbmModel<F>,
    pub trace: TrainingTrace,
    pub checkpoints: Vec<(usize, RbmModel<F>)>,
}

/// Mini-batch CD-k training. Batches run in dataset order; update `t`
/// derives its chain seeds from `(rng_seed, t)`, so the result is
/// bit-reproducible for identical `(dataset, config, seed)`. The optional
/// `eval_fn` runs at checkpoint epochs and its value lands in the trace's
/// `classif_error` column.
pub fn train<F: Real>(
    model: &RbmModel<F>,
    dataset: &Dataset,
    config: &TrainingConfig,
    mut eval_fn: Option<&mut dyn FnMut(&RbmModel<F>, usize) -> f64>,
) -> Result<TrainingOutput<F>> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    if dataset.pattern_len() != model.n_v() {
        return Err(Error::DimensionMismatch {
            what: "training pattern",
            expected: model.n_v(),
            found: dataset.pattern_len(),
        });
    }
    let lr = real::<F>(config.learning_rate);
    let decay = real::<F>(config.weight_decay);
    let cap = config.weight_cap.map(real::<F>);

    let mut model = model.clone();
    let mut trace = TrainingTrace::default();
    let mut checkpoints = Vec::new();
    let mut update_counter = 0u64;

    for epoch in 1..=config.epochs {
        let mut recon_sum = 0.0;
        let mut n_batches = 0usize;
        for batch in dataset.patterns.chunks(config.batch_size) {
            let update_seed: u64 = derive_rng(config.rng_seed, update_counter).gen();
            update_counter += 1;
            let stats = cd_k_stats(&model, batch, config.k_g, update_seed)?;
            apply_update(&mut model, &stats.gradient, lr, decay, cap);
            recon_sum += stats.recon_error;
            n_batches += 1;
        }
        if !model.all_finite() {
            return Err(Error::Diverged { epoch });
        }
        let mut record = EpochRecord {
            epoch,
            recon_error: recon_sum / n_batches as f64,
            max_abs_w: model.max_abs_weight().to_f64().unwrap_or(f64::NAN),
            classif_error: None,
        };
        if config.checkpoint_epochs.contains(&epoch) {
            if let Some(eval) = eval_fn.as_deref_mut() {
                record.classif_error = Some(eval(&model, epoch));
            }
            checkpoints.push((epoch, model.clone()));
        }
        trace.epochs.push(record);
    }
    Ok(TrainingOutput {
        model,
        trace,
        checkpoints,
    })
}
