//! RBM parameterization, energy/probability evaluation, conditional
//! distributions, and exact enumeration oracles for tiny instances.

use crate::bits::{BitVec, Configuration};
use crate::error::{Error, Result};
use crate::real::{log_sum_exp, real, Real};
use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Total-unit cap above which exact enumeration refuses to run.
pub const DEFAULT_ENUM_CAP: usize = 20;

/// Restricted Boltzmann Machine parameters.
///
/// Energy over binary units (QUBO convention, every unit in {0,1}):
///
/// `E(v,h) = - sum_ij w[i][j] h_i v_j - sum_j b_j v_j - sum_i c_i h_i`
///
/// with `w` stored as an `n_h x n_v` matrix (row i = hidden unit i).
#[derive(Clone, Debug, PartialEq)]
pub struct RbmModel<F: Real> {
    n_v: usize,
    n_h: usize,
    w: Array2<F>,
    b: Array1<F>,
    c: Array1<F>,
}

impl<F: Real> RbmModel<F> {
    pub fn new(w: Array2<F>, b: Array1<F>, c: Array1<F>) -> Result<Self> {
        let (n_h, n_v) = w.dim();
        if n_v == 0 || n_h == 0 {
            return Err(Error::InvalidConfig(
                "model must have at least one visible and one hidden unit".into(),
            ));
        }
        if b.len() != n_v {
            return Err(Error::DimensionMismatch {
                what: "visible bias",
                expected: n_v,
                found: b.len(),
            });
        }
        if c.len() != n_h {
            return Err(Error::DimensionMismatch {
                what: "hidden bias",
                expected: n_h,
                found: c.len(),
            });
        }
        let model = RbmModel { n_v, n_h, w, b, c };
        if !model.all_finite() {
            return Err(Error::NonFiniteParameter("RbmModel"));
        }
        Ok(model)
    }

    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        RbmModel::new(
            Array2::zeros((n_h, n_v)),
            Array1::zeros(n_v),
            Array1::zeros(n_h),
        )
        .expect("zero model is valid")
    }

    /// Weights drawn i.i.d. uniform in `[-sigma, sigma]`, biases zero.
    pub fn random_init<R: Rng>(n_v: usize, n_h: usize, sigma: F, rng: &mut R) -> Self {
        let mut w = Array2::zeros((n_h, n_v));
        for x in w.iter_mut() {
            let u: f64 = rng.gen_range(-1.0..1.0);
            *x = sigma * real(u);
        }
        RbmModel::new(w, Array1::zeros(n_v), Array1::zeros(n_h)).expect("finite init")
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn n_units(&self) -> usize {
        self.n_v + self.n_h
    }

    pub fn weights(&self) -> &Array2<F> {
        &self.w
    }

    pub fn visible_bias(&self) -> &Array1<F> {
        &self.b
    }

    pub fn hidden_bias(&self) -> &Array1<F> {
        &self.c
    }

    pub(crate) fn params_mut(&mut self) -> (&mut Array2<F>, &mut Array1<F>, &mut Array1<F>) {
        (&mut self.w, &mut self.b, &mut self.c)
    }

    pub fn all_finite(&self) -> bool {
        self.w.iter().all(|x| x.is_finite())
            && self.b.iter().all(|x| x.is_finite())
            && self.c.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_weight(&self) -> F {
        self.w
            .iter()
            .fold(F::zero(), |m, &x| if x.abs() > m { x.abs() } else { m })
    }

    /// All parameters multiplied by `s`.
    pub fn scaled(&self, s: F) -> Self {
        RbmModel {
            n_v: self.n_v,
            n_h: self.n_h,
            w: self.w.mapv(|x| x * s),
            b: self.b.mapv(|x| x * s),
            c: self.c.mapv(|x| x * s),
        }
    }

    fn check_config(&self, config: &Configuration) -> Result<()> {
        if config.v.len() != self.n_v {
            return Err(Error::DimensionMismatch {
                what: "visible layer",
                expected: self.n_v,
                found: config.v.len(),
            });
        }
        if config.h.len() != self.n_h {
            return Err(Error::DimensionMismatch {
                what: "hidden layer",
                expected: self.n_h,
                found: config.h.len(),
            });
        }
        Ok(())
    }

    /// Local field on hidden unit `i`: `sum_j w[i][j] v_j + c_i`.
    #[inline]
    pub fn hidden_field(&self, v: &BitVec, i: usize) -> F {
        let mut acc = self.c[i];
        let row = self.w.row(i);
        for j in v.iter_ones() {
            acc += row[j];
        }
        acc
    }

    /// Local field on visible unit `j`: `sum_i w[i][j] h_i + b_j`.
    #[inline]
    pub fn visible_field(&self, h: &BitVec, j: usize) -> F {
        let mut acc = self.b[j];
        for i in h.iter_ones() {
            acc += self.w[(i, j)];
        }
        acc
    }

    /// Energy of a joint configuration.
    pub fn energy(&self, config: &Configuration) -> Result<F> {
        self.check_config(config)?;
        let mut acc = F::zero();
        for i in config.h.iter_ones() {
            let row = self.w.row(i);
            for j in config.v.iter_ones() {
                acc -= row[j];
            }
            acc -= self.c[i];
        }
        for j in config.v.iter_ones() {
            acc -= self.b[j];
        }
        Ok(acc)
    }

    /// Energy of a flat (visible-then-hidden) packed state.
    pub fn energy_flat(&self, flat: &BitVec) -> Result<F> {
        if flat.len() != self.n_units() {
            return Err(Error::DimensionMismatch {
                what: "flat configuration",
                expected: self.n_units(),
                found: flat.len(),
            });
        }
        self.energy(&Configuration::from_flat(flat, self.n_v)?)
    }

    /// `p(H_i = 1 | v)` for every hidden unit, at temperature `t`.
    pub fn cond_prob_hidden(&self, v: &BitVec, t: F) -> Result<Array1<F>> {
        check_temperature(t)?;
        if v.len() != self.n_v {
            return Err(Error::DimensionMismatch {
                what: "visible layer",
                expected: self.n_v,
                found: v.len(),
            });
        }
        Ok(Array1::from_shape_fn(self.n_h, |i| {
            sigmoid(self.hidden_field(v, i), t).expect("temperature checked")
        }))
    }

    /// `p(V_j = 1 | h)` for every visible unit, at temperature `t`.
    pub fn cond_prob_visible(&self, h: &BitVec, t: F) -> Result<Array1<F>> {
        check_temperature(t)?;
        if h.len() != self.n_h {
            return Err(Error::DimensionMismatch {
                what: "hidden layer",
                expected: self.n_h,
                found: h.len(),
            });
        }
        Ok(Array1::from_shape_fn(self.n_v, |j| {
            sigmoid(self.visible_field(h, j), t).expect("temperature checked")
        }))
    }

    fn check_enum_cap(&self, cap: usize) -> Result<()> {
        if self.n_units() > cap {
            return Err(Error::EnumerationCap {
                units: self.n_units(),
                cap,
            });
        }
        Ok(())
    }

    /// Log partition function `ln Z(T)` by full enumeration (log-sum-exp).
    pub fn log_partition_function_exact(&self, t: F, cap: usize) -> Result<F> {
        check_temperature(t)?;
        self.check_enum_cap(cap)?;
        let n = self.n_units();
        let mut logw = Vec::with_capacity(1usize << n);
        for idx in 0usize..1 << n {
            let flat = BitVec::from_usize(idx, n);
            logw.push(-self.energy_flat(&flat)? / t);
        }
        Ok(log_sum_exp(&logw))
    }

    /// Partition function `Z(T) = sum_{v,h} exp(-E/T)`.
    pub fn partition_function_exact(&self, t: F, cap: usize) -> Result<F> {
        Ok(self.log_partition_function_exact(t, cap)?.exp())
    }

    /// Exact Gibbs probability `exp(-E/T) / Z(T)`.
    pub fn joint_prob_exact(&self, config: &Configuration, t: F, cap: usize) -> Result<F> {
        let log_z = self.log_partition_function_exact(t, cap)?;
        let e = self.energy(config)?;
        Ok((-e / t - log_z).exp())
    }

    /// Marginal probability of a visible vector: `sum_h p(v, h)`,
    /// computed as an explicit sum over the hidden states in log domain.
    pub fn marginal_prob_visible_exact(&self, v: &BitVec, t: F, cap: usize) -> Result<F> {
        let log_z = self.log_partition_function_exact(t, cap)?;
        Ok((self.log_marginal_weight(v, t)? - log_z).exp())
    }

    /// `ln sum_h exp(-E(v,h)/T)` (unnormalized log marginal weight).
    pub fn log_marginal_weight(&self, v: &BitVec, t: F) -> Result<F> {
        check_temperature(t)?;
        if v.len() != self.n_v {
            return Err(Error::DimensionMismatch {
                what: "visible layer",
                expected: self.n_v,
                found: v.len(),
            });
        }
        let mut logw = Vec::with_capacity(1usize << self.n_h);
        for hidx in 0usize..1 << self.n_h {
            let h = BitVec::from_usize(hidx, self.n_h);
            let e = self
                .energy(&Configuration::new(v.clone(), h))
                .expect("dims checked");
            logw.push(-e / t);
        }
        Ok(log_sum_exp(&logw))
    }
}

/// Logistic function at temperature `t`: `1 / (1 + exp(-x/t))`.
pub fn sigmoid<F: Real>(x: F, t: F) -> Result<F> {
    check_temperature(t)?;
    Ok(F::one() / (F::one() + (-x / t).exp()))
}

fn check_temperature<F: Real>(t: F) -> Result<()> {
    if t <= F::zero() || !t.is_finite() {
        return Err(Error::NonPositiveTemperature(t.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// Exact probability table over all joint configurations of a tiny model.
///
/// Indexed by the flat packed state (visible bits low). Only constructible
/// when `n_v + n_h` is at most the enumeration cap.
pub struct BoltzmannOracle<F: Real> {
    n_v: usize,
    n_h: usize,
    t: F,
    log_z: F,
    probs: Vec<F>,
}

impl<F: Real> BoltzmannOracle<F> {
    pub fn new(model: &RbmModel<F>, t: F, cap: usize) -> Result<Self> {
        check_temperature(t)?;
        if model.n_units() > cap {
            return Err(Error::EnumerationCap {
                units: model.n_units(),
                cap,
            });
        }
        let n = model.n_units();
        let mut logw = Vec::with_capacity(1usize << n);
        for idx in 0usize..1 << n {
            let flat = BitVec::from_usize(idx, n);
            logw.push(-model.energy_flat(&flat)? / t);
        }
        let log_z = log_sum_exp(&logw);
        let probs = logw.iter().map(|&lw| (lw - log_z).exp()).collect();
        Ok(BoltzmannOracle {
            n_v: model.n_v(),
            n_h: model.n_h(),
            t,
            log_z,
            probs,
        })
    }

    pub fn temperature(&self) -> F {
        self.t
    }

    pub fn log_z(&self) -> F {
        self.log_z
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn prob_flat_index(&self, idx: usize) -> F {
        self.probs[idx]
    }

    pub fn prob(&self, config: &Configuration) -> Result<F> {
        if config.v.len() != self.n_v || config.h.len() != self.n_h {
            return Err(Error::DimensionMismatch {
                what: "configuration",
                expected: self.n_v + self.n_h,
                found: config.v.len() + config.h.len(),
            });
        }
        let flat = config.flat();
        Ok(self.probs[flat.as_words()[0] as usize])
    }

    /// Total-variation distance to an empirical distribution given as counts
    /// per flat state index.
    pub fn total_variation(&self, counts: &[u64]) -> F {
        assert_eq!(counts.len(), self.probs.len());
        let total: u64 = counts.iter().sum();
        let tot = real::<F>(total as f64);
        let mut acc = F::zero();
        for (p, &c) in self.probs.iter().zip(counts) {
            acc += (*p - real::<F>(c as f64) / tot).abs();
        }
        acc / real(2.0)
    }
}

/// On-disk JSON schema for a model: `{format_version, n_v, n_h, w, b, c}`
/// with `w` flattened row-major (`n_h` rows of `n_v` weights). Checkpoint
/// files add an `epoch` field.
#[derive(Serialize, Deserialize)]
pub struct ModelJson {
    pub format_version: u32,
    pub n_v: usize,
    pub n_h: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epoch: Option<usize>,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl<F: Real> RbmModel<F> {
    pub fn to_json_value(&self) -> ModelJson {
        ModelJson {
            format_version: MODEL_FORMAT_VERSION,
            n_v: self.n_v,
            n_h: self.n_h,
            w: self.w.iter().map(|x| x.to_f64().unwrap()).collect(),
            b: self.b.iter().map(|x| x.to_f64().unwrap()).collect(),
            c: self.c.iter().map(|x| x.to_f64().unwrap()).collect(),
            epoch: None,
        }
    }

    pub fn from_json_value(json: &ModelJson) -> Result<Self> {
        if json.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported model format_version {}",
                json.format_version
            )));
        }
        if json.w.len() != json.n_v * json.n_h {
            return Err(Error::DimensionMismatch {
                what: "weight matrix",
                expected: json.n_v * json.n_h,
                found: json.w.len(),
            });
        }
        let w = Array2::from_shape_vec(
            (json.n_h, json.n_v),
            json.w.iter().map(|&x| real(x)).collect(),
        )
        .expect("shape checked");
        let b = Array1::from_vec(json.b.iter().map(|&x| real(x)).collect());
        let c = Array1::from_vec(json.c.iter().map(|&x| real(x)).collect());
        RbmModel::new(w, b, c)
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json_value())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Checkpoint file: the model schema plus the training epoch.
    pub fn save_checkpoint_json(&self, path: &std::path::Path, epoch: usize) -> Result<()> {
        let mut json = self.to_json_value();
        json.epoch = Some(epoch);
        std::fs::write(path, serde_json::to_string_pretty(&json)?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let json: ModelJson = serde_json::from_str(&text)?;
        RbmModel::from_json_value(&json)
    }

    /// Loads a model and its checkpoint epoch, when present.
    pub fn load_checkpoint_json(path: &std::path::Path) -> Result<(Self, Option<usize>)> {
        let text = std::fs::read_to_string(path)?;
        let json: ModelJson = serde_json::from_str(&text)?;
        Ok((RbmModel::from_json_value(&json)?, json.epoch))
    }

    /// Canonical serialized bytes, used for bit-reproducibility checks.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_json_value()).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    pub(crate) fn random_model(n_v: usize, n_h: usize, scale: f64, seed: u64) -> RbmModel<f64> {
        let mut rng = derive_rng(seed, 0);
        let mut w = Array2::zeros((n_h, n_v));
        for x in w.iter_mut() {
            *x = rng.gen_range(-scale..scale);
        }
        let b = Array1::from_shape_fn(n_v, |_| rng.gen_range(-scale..scale));
        let c = Array1::from_shape_fn(n_h, |_| rng.gen_range(-scale..scale));
        RbmModel::new(w, b, c).unwrap()
    }

    fn config_from_index(idx: usize, n_v: usize, n_h: usize) -> Configuration {
        Configuration::from_flat(&BitVec::from_usize(idx, n_v + n_h), n_v).unwrap()
    }

    #[test]
    fn zero_model_energy_is_zero() {
        let m = RbmModel::<f64>::zeros(3, 2);
        for idx in 0..32 {
            assert_eq!(m.energy(&config_from_index(idx, 3, 2)).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_term_energy() {
        // n_v=1, n_h=1, w=1, b=c=0, v=(1), h=(1) -> -1
        let m = RbmModel::new(
            Array2::from_shape_vec((1, 1), vec![1.0]).unwrap(),
            Array1::zeros(1),
            Array1::zeros(1),
        )
        .unwrap();
        let cfg = config_from_index(0b11, 1, 1);
        assert_eq!(m.energy(&cfg).unwrap(), -1.0);
    }

    /// Independent term-by-term oracle: sums every product explicitly from
    /// the raw parameter arrays, without touching the implementation path.
    fn energy_oracle(m: &RbmModel<f64>, cfg: &Configuration) -> f64 {
        let mut e = 0.0;
        for i in 0..m.n_h() {
            for j in 0..m.n_v() {
                let hi = if cfg.h.get(i) { 1.0 } else { 0.0 };
                let vj = if cfg.v.get(j) { 1.0 } else { 0.0 };
                e -= m.weights()[(i, j)] * hi * vj;
            }
        }
        for j in 0..m.n_v() {
            e -= m.visible_bias()[j] * if cfg.v.get(j) { 1.0 } else { 0.0 };
        }
        for i in 0..m.n_h() {
            e -= m.hidden_bias()[i] * if cfg.h.get(i) { 1.0 } else { 0.0 };
        }
        e
    }

    #[test]
    fn energy_matches_term_by_term_oracle() {
        let m = random_model(4, 3, 1.5, 11);
        for idx in 0..(1 << 7) {
            let cfg = config_from_index(idx, 4, 3);
            assert_abs_diff_eq!(
                m.energy(&cfg).unwrap(),
                energy_oracle(&m, &cfg),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn energy_dimension_mismatch_is_an_error() {
        let m = RbmModel::<f64>::zeros(3, 2);
        let bad = Configuration::zeros(2, 2);
        assert!(matches!(
            m.energy(&bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn energy_is_linear_in_parameters() {
        let m = random_model(3, 4, 1.0, 5);
        let scaled = m.scaled(2.0);
        for idx in 0..(1 << 7) {
            let cfg = config_from_index(idx, 3, 4);
            // s = 2 is a power of two, so linearity holds bitwise.
            assert_eq!(
                scaled.energy(&cfg).unwrap(),
                2.0 * m.energy(&cfg).unwrap()
            );
        }
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0, 1.0).unwrap(), 0.5);
        assert_eq!(sigmoid(1e9, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(sigmoid(1.0, 1.0).unwrap(), 0.7310586, epsilon = 1e-7);
        assert!(sigmoid(1.0, 0.0).is_err());
        assert!(sigmoid(1.0, -2.0).is_err());
    }

    #[test]
    fn sigmoid_symmetry_and_monotonicity() {
        for i in -20..20 {
            let x = i as f64 * 0.37;
            let s = sigmoid(x, 1.3).unwrap() + sigmoid(-x, 1.3).unwrap();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
        }
        let mut prev = 0.0;
        for i in -20..20 {
            let p = sigmoid(i as f64, 2.0).unwrap();
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn cond_probs_zero_model_are_half() {
        let m = RbmModel::<f64>::zeros(4, 3);
        let v = BitVec::zeros(4);
        let h = BitVec::zeros(3);
        assert!(m.cond_prob_hidden(&v, 1.0).unwrap().iter().all(|&p| p == 0.5));
        assert!(m.cond_prob_visible(&h, 1.0).unwrap().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn cond_probs_saturate() {
        let mut m = RbmModel::<f64>::zeros(2, 2);
        m.params_mut().2[0] = -1e6;
        let p = m.cond_prob_hidden(&BitVec::zeros(2), 1.0).unwrap();
        assert!(p[0] < 1e-12);
        let mut m2 = RbmModel::<f64>::zeros(2, 2);
        m2.params_mut().1[1] = 1e6;
        let q = m2.cond_prob_visible(&BitVec::zeros(2), 1.0).unwrap();
        assert!(q[1] > 1.0 - 1e-12);
    }

    /// Conditionals must agree with Bayes-rule conditionals of the exact
    /// joint distribution.
    #[test]
    fn cond_probs_match_enumeration() {
        for seed in [1u64, 2, 3] {
            let m = random_model(3, 3, 1.2, seed);
            let t = 1.0;
            for vidx in 0..(1 << 3) {
                let v = BitVec::from_usize(vidx, 3);
                let p = m.cond_prob_hidden(&v, t).unwrap();
                for i in 0..3 {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for hidx in 0..(1 << 3) {
                        let h = BitVec::from_usize(hidx, 3);
                        let w = (-m
                            .energy(&Configuration::new(v.clone(), h.clone()))
                            .unwrap()
                            / t)
                            .exp();
                        den += w;
                        if h.get(i) {
                            num += w;
                        }
                    }
                    assert_abs_diff_eq!(p[i], num / den, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn partition_function_zero_model() {
        let m = RbmModel::<f64>::zeros(3, 2);
        let z = m.partition_function_exact(1.0, DEFAULT_ENUM_CAP).unwrap();
        assert_abs_diff_eq!(z, 32.0, epsilon = 1e-9);
    }

    #[test]
    fn partition_function_hand_enumeration() {
        // States: (0,0),(1,0),(0,1) have E=0; (1,1) has E=-1. Z = 3 + e.
        let m = RbmModel::new(
            Array2::from_shape_vec((1, 1), vec![1.0]).unwrap(),
            Array1::zeros(1),
            Array1::zeros(1),
        )
        .unwrap();
        let z = m.partition_function_exact(1.0, DEFAULT_ENUM_CAP).unwrap();
        assert_abs_diff_eq!(z, 3.0 + std::f64::consts::E, epsilon = 1e-12);
    }

    #[test]
    fn partition_function_scaling_identity() {
        // Z(s*theta, T) = Z(theta, T/s).
        let m = random_model(3, 2, 0.8, 9);
        let s = 1.7;
        let z_scaled = m
            .scaled(s)
            .log_partition_function_exact(1.0, DEFAULT_ENUM_CAP)
            .unwrap();
        let z_cooled = m
            .log_partition_function_exact(1.0 / s, DEFAULT_ENUM_CAP)
            .unwrap();
        assert_abs_diff_eq!(z_scaled, z_cooled, epsilon = 1e-10);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let m = RbmModel::<f64>::zeros(12, 12);
        assert!(matches!(
            m.partition_function_exact(1.0, 20),
            Err(Error::EnumerationCap { units: 24, cap: 20 })
        ));
    }

    #[test]
    fn joint_probs_normalize_and_obey_ratio_identity() {
        let m = random_model(3, 3, 1.0, 21);
        let t = 0.9;
        let mut total = 0.0;
        for idx in 0..(1 << 6) {
            total += m
                .joint_prob_exact(&config_from_index(idx, 3, 3), t, DEFAULT_ENUM_CAP)
                .unwrap();
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);

        let a = config_from_index(0b101010, 3, 3);
        let bcfg = config_from_index(0b010101, 3, 3);
        let pa = m.joint_prob_exact(&a, t, DEFAULT_ENUM_CAP).unwrap();
        let pb = m.joint_prob_exact(&bcfg, t, DEFAULT_ENUM_CAP).unwrap();
        let ea = m.energy(&a).unwrap();
        let eb = m.energy(&bcfg).unwrap();
        assert_abs_diff_eq!(pa / pb, ((eb - ea) / t).exp(), epsilon = 1e-10);
    }

    #[test]
    fn zero_model_joint_is_uniform() {
        let m = RbmModel::<f64>::zeros(2, 2);
        for idx in 0..16 {
            let p = m
                .joint_prob_exact(&config_from_index(idx, 2, 2), 1.0, DEFAULT_ENUM_CAP)
                .unwrap();
            assert_abs_diff_eq!(p, 1.0 / 16.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn marginal_visible_consistency() {
        let m = random_model(3, 3, 1.1, 33);
        let t = 1.0;
        let mut total = 0.0;
        for vidx in 0..(1 << 3) {
            let v = BitVec::from_usize(vidx, 3);
            let marg = m.marginal_prob_visible_exact(&v, t, DEFAULT_ENUM_CAP).unwrap();
            let mut by_sum = 0.0;
            for hidx in 0..(1 << 3) {
                let h = BitVec::from_usize(hidx, 3);
                by_sum += m
                    .joint_prob_exact(&Configuration::new(v.clone(), h), t, DEFAULT_ENUM_CAP)
                    .unwrap();
            }
            assert_abs_diff_eq!(marg, by_sum, epsilon = 1e-12);
            total += marg;
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);

        let zm = RbmModel::<f64>::zeros(3, 4);
        let p = zm
            .marginal_prob_visible_exact(&BitVec::zeros(3), 1.0, DEFAULT_ENUM_CAP)
            .unwrap();
        assert_abs_diff_eq!(p, 1.0 / 8.0, epsilon = 1e-12);
    }

    /// Different algebraic route: the bipartite structure gives
    /// `ln sum_h exp(-E(v,h)) = sum_j b_j v_j + sum_i softplus(field_i)`.
    #[test]
    fn marginal_weight_matches_product_form() {
        let m = random_model(4, 5, 0.9, 44);
        for vidx in 0..(1 << 4) {
            let v = BitVec::from_usize(vidx, 4);
            let lit = m.log_marginal_weight(&v, 1.0).unwrap();
            let mut prod = 0.0;
            for j in v.iter_ones() {
                prod += m.visible_bias()[j];
            }
            for i in 0..m.n_h() {
                prod += crate::real::softplus(m.hidden_field(&v, i));
            }
            assert_abs_diff_eq!(lit, prod, epsilon = 1e-10);
        }
    }

    #[test]
    fn hidden_flip_changes_energy_by_local_field() {
        let m = random_model(4, 4, 1.3, 55);
        for idx in 0..(1 << 8) {
            let cfg = config_from_index(idx, 4, 4);
            for i in 0..4 {
                let mut flipped = cfg.clone();
                flipped.h.flip(i);
                let delta_h = if flipped.h.get(i) { 1.0 } else { -1.0 };
                let expect = -m.hidden_field(&cfg.v, i) * delta_h;
                let actual = m.energy(&flipped).unwrap() - m.energy(&cfg).unwrap();
                assert_abs_diff_eq!(actual, expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn oracle_table_sums_to_one() {
        let m = random_model(4, 3, 1.4, 66);
        let oracle = BoltzmannOracle::new(&m, 1.0, DEFAULT_ENUM_CAP).unwrap();
        let sum: f64 = (0..oracle.n_states())
            .map(|i| oracle.prob_flat_index(i))
            .sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        // Spot check against the direct exact op.
        let cfg = config_from_index(0b0101101, 4, 3);
        assert_abs_diff_eq!(
            oracle.prob(&cfg).unwrap(),
            m.joint_prob_exact(&cfg, 1.0, DEFAULT_ENUM_CAP).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn model_json_roundtrip_rejects_bad_dims() {
        let m = random_model(3, 2, 1.0, 77);
        let json = m.to_json_value();
        let back = RbmModel::<f64>::from_json_value(&json).unwrap();
        assert_eq!(m, back);

        let mut bad = m.to_json_value();
        bad.w.pop();
        assert!(RbmModel::<f64>::from_json_value(&bad).is_err());
        let mut bad2 = m.to_json_value();
        bad2.b.push(0.0);
        assert!(RbmModel::<f64>::from_json_value(&bad2).is_err());
    }

    #[test]
    fn generic_scalar_f32_agrees_with_f64() {
        let m64 = random_model(3, 3, 1.0, 88);
        let m32 = RbmModel::<f32>::from_json_value(&m64.to_json_value()).unwrap();
        for idx in 0..(1 << 6) {
            let cfg = config_from_index(idx, 3, 3);
            let e64 = m64.energy(&cfg).unwrap();
            let e32 = m32.energy(&cfg).unwrap() as f64;
            assert_abs_diff_eq!(e64, e32, epsilon = 1e-5);
        }
    }
}
