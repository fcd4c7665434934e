//! Local-valley analysis: map samples to the local minima they relax into,
//! deduplicate bitwise, count, cross-compare samplers, histogram the
//! local-minimum energies, and compute ground-state statistics.

use crate::bits::{BitVec, Configuration};
use crate::error::{Error, Result};
use crate::model::RbmModel;
use crate::real::{real, Real};
use crate::rng::{chain_stream, derive_rng};
use crate::samplers::{gibbs_step_in_place, relax_to_minimum, SampleSet, SamplerId};
use std::collections::BTreeMap;

/// One deduplicated local minimum. Identity is the exact joint bit pattern
/// of the minimum (both layers).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalValleyRecord<F: Real> {
    /// Flat packed state (visible then hidden) of the local minimum.
    pub lm_state: BitVec,
    pub energy: F,
    /// Samples that relaxed into this valley, per engine.
    pub hits: BTreeMap<SamplerId, u64>,
    pub first_seen: SamplerId,
}

impl<F: Real> LocalValleyRecord<F> {
    pub fn total_hits(&self) -> u64 {
        self.hits.values().sum()
    }
}

/// Deduplicated set of local-valley records for one model checkpoint.
#[derive(Clone, Debug)]
pub struct LvCatalog<F: Real> {
    /// Checkpoint identity; overlap comparisons require it to match.
    pub model_ref: String,
    /// Training-pattern count used to normalize N_LV in reports.
    pub n_tp: usize,
    records: BTreeMap<BitVec, LocalValleyRecord<F>>,
}

impl<F: Real> LvCatalog<F> {
    pub fn new(model_ref: impl Into<String>, n_tp: usize) -> Self {
        LvCatalog {
            model_ref: model_ref.into(),
            n_tp,
            records: BTreeMap::new(),
        }
    }

    pub fn n_lv(&self) -> usize {
        self.records.len()
    }

    /// N_LV normalized to the training-pattern count.
    pub fn n_lv_normalized(&self) -> f64 {
        self.records.len() as f64 / self.n_tp.max(1) as f64
    }

    /// Count of distinct visible projections of the minima (report option;
    /// valley identity itself is always the joint pattern).
    pub fn distinct_visible_count(&self, n_v: usize) -> usize {
        let set: std::collections::BTreeSet<BitVec> = self
            .records
            .keys()
            .map(|s| s.slice(0, n_v))
            .collect();
        set.len()
    }

    pub fn records(&self) -> impl Iterator<Item = &LocalValleyRecord<F>> + '_ {
        self.records.values()
    }

    pub fn contains(&self, lm_state: &BitVec) -> bool {
        self.records.contains_key(lm_state)
    }

    pub fn get(&self, lm_state: &BitVec) -> Option<&LocalValleyRecord<F>> {
        self.records.get(lm_state)
    }

    /// Inserts one relaxation outcome. Merging is commutative: hit counts
    /// add, and `first_seen` resolves to the lowest sampler ordinal.
    pub fn insert(&mut self, lm_state: BitVec, energy: F, sampler: SamplerId, hits: u64) {
        match self.records.get_mut(&lm_state) {
            Some(rec) => {
                *rec.hits.entry(sampler).or_insert(0) += hits;
                if sampler < rec.first_seen {
                    rec.first_seen = sampler;
                }
            }
            None => {
                let mut hit_map = BTreeMap::new();
                hit_map.insert(sampler, hits);
                self.records.insert(
                    lm_state.clone(),
                    LocalValleyRecord {
                        lm_state,
                        energy,
                        hits: hit_map,
                        first_seen: sampler,
                    },
                );
            }
        }
    }

    /// Associative, commutative catalog union.
    pub fn merge(&mut self, other: &LvCatalog<F>) -> Result<()> {
        if other.model_ref != self.model_ref {
            return Err(Error::CheckpointMismatch {
                a: self.model_ref.clone(),
                b: other.model_ref.clone(),
            });
        }
        for rec in other.records() {
            for (&sampler, &hits) in &rec.hits {
                self.insert(rec.lm_state.clone(), rec.energy, sampler, hits);
            }
        }
        Ok(())
    }

    /// CSV schema: `lm_state_hex,energy,hits_gibbs,hits_sa,hits_sqa,first_seen`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "lm_state_hex",
            "energy",
            "hits_gibbs",
            "hits_sa",
            "hits_sqa",
            "first_seen",
        ])?;
        for rec in self.records() {
            let hit = |s: SamplerId| rec.hits.get(&s).copied().unwrap_or(0).to_string();
            w.write_record([
                rec.lm_state.to_hex(),
                format!("{}", rec.energy.to_f64().unwrap()),
                hit(SamplerId::Gibbs),
                hit(SamplerId::Sa),
                hit(SamplerId::Sqa),
                rec.first_seen.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn sidecar_json(&self, n_v: usize) -> serde_json::Value {
        serde_json::json!({
            "model_ref": self.model_ref,
            "n_tp": self.n_tp,
            "n_lv": self.n_lv(),
            "n_lv_visible": self.distinct_visible_count(n_v),
            "n_bits": self.records.keys().next().map_or(0, BitVec::len),
        })
    }

    pub fn read_csv(
        path: &std::path::Path,
        n_bits: usize,
        model_ref: impl Into<String>,
        n_tp: usize,
    ) -> Result<LvCatalog<F>> {
        let mut cat = LvCatalog::new(model_ref, n_tp);
        let mut r = csv::Reader::from_path(path)?;
        for rec in r.records() {
            let rec = rec?;
            let state = BitVec::from_hex(&rec[0], n_bits)?;
            let energy: f64 = rec[1]
                .parse()
                .map_err(|_| Error::InvalidData(format!("bad energy `{}`", &rec[1])))?;
            let first: SamplerId = rec[5].parse()?;
            for (col, sampler) in [
                (2, SamplerId::Gibbs),
                (3, SamplerId::Sa),
                (4, SamplerId::Sqa),
            ] {
                let hits: u64 = rec[col]
                    .parse()
                    .map_err(|_| Error::InvalidData(format!("bad hits `{}`", &rec[col])))?;
                if hits > 0 {
                    cat.insert(state.clone(), real(energy), sampler, hits);
                }
            }
            if !cat.contains(&state) {
                cat.insert(state.clone(), real(energy), first, 0);
            }
        }
        Ok(cat)
    }
}

/// Classical LV search: from every seed (times `n_rpt` chain repetitions),
/// walk `k_g` Gibbs steps at temperature `t`, then relax to the bottom of
/// the valley and record the minimum. Chain `(i, r)` draws from the stream
/// `(seed, chain_stream(i, r))`, so catalogs for growing `n_rpt` are
/// supersets.
pub fn scan_lvs_from_seeds<F: Real>(
    model: &RbmModel<F>,
    seeds: &[Configuration],
    k_g: usize,
    t: F,
    n_rpt: usize,
    seed: u64,
    model_ref: impl Into<String>,
) -> Result<LvCatalog<F>> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    if n_rpt < 1 {
        return Err(Error::InvalidConfig("n_rpt must be >= 1".into()));
    }
    let mut catalog = LvCatalog::new(model_ref, seeds.len());
    for rpt in 0..n_rpt {
        for (idx, start) in seeds.iter().enumerate() {
            let mut rng = derive_rng(seed, chain_stream(idx, rpt));
            let mut config = start.clone();
            for _ in 0..k_g {
                gibbs_step_in_place(model, &mut config, None, t, &mut rng)?;
            }
            let lm = relax_to_minimum(model, &config)?;
            let energy = model.energy(&lm)?;
            catalog.insert(lm.flat(), energy, SamplerId::Gibbs, 1);
        }
    }
    Ok(catalog)
}

/// Annealer-style LV search: each distinct sampled state is relaxed at
/// `T = 0` only (no finite-temperature walk); hit counts are weighted by
/// the sample multiplicities.
pub fn scan_lvs_from_samples<F: Real>(
    model: &RbmModel<F>,
    samples: &SampleSet,
    model_ref: impl Into<String>,
    n_tp: usize,
) -> Result<LvCatalog<F>> {
    let mut catalog = LvCatalog::new(model_ref, n_tp);
    for (state, mult) in samples.entries() {
        let config = Configuration::from_flat(state, model.n_v())?;
        if config.h.len() != model.n_h() {
            return Err(Error::DimensionMismatch {
                what: "sample state",
                expected: model.n_units(),
                found: state.len(),
            });
        }
        let lm = relax_to_minimum(model, &config)?;
        let energy = model.energy(&lm)?;
        catalog.insert(lm.flat(), energy, samples.sampler_id, mult);
    }
    Ok(catalog)
}

/// Validation oracle: relaxes every one of the `2^(n_v+n_h)` states and
/// catalogs every reachable fixed point (hits count basin states).
pub fn exhaustive_lm_enumeration<F: Real>(
    model: &RbmModel<F>,
    cap: usize,
    model_ref: impl Into<String>,
) -> Result<LvCatalog<F>> {
    let n = model.n_units();
    if n > cap {
        return Err(Error::EnumerationCap { units: n, cap });
    }
    let mut catalog = LvCatalog::new(model_ref, 0);
    for idx in 0usize..1 << n {
        let config = Configuration::from_flat(&BitVec::from_usize(idx, n), model.n_v())?;
        let lm = relax_to_minimum(model, &config)?;
        let energy = model.energy(&lm)?;
        catalog.insert(lm.flat(), energy, SamplerId::Exhaustive, 1);
    }
    Ok(catalog)
}

/// How much of each catalog the other one misses.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapReport {
    pub n_a: usize,
    pub n_b: usize,
    pub shared: usize,
    /// Fraction of A's valleys absent from B: `|A \ B| / |A|`.
    pub missed_by_b: f64,
    /// Fraction of B's valleys absent from A: `|B \ A| / |B|`.
    pub missed_by_a: f64,
}

/// Set intersection by exact bit pattern. Both catalogs must come from the
/// same model checkpoint.
pub fn overlap_stats<F: Real>(a: &LvCatalog<F>, b: &LvCatalog<F>) -> Result<OverlapReport> {
    if a.model_ref != b.model_ref {
        return Err(Error::CheckpointMismatch {
            a: a.model_ref.clone(),
            b: b.model_ref.clone(),
        });
    }
    let shared = a.records.keys().filter(|k| b.contains(k)).count();
    let n_a = a.n_lv();
    let n_b = b.n_lv();
    let frac = |miss: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            miss as f64 / total as f64
        }
    };
    Ok(OverlapReport {
        n_a,
        n_b,
        shared,
        missed_by_b: frac(n_a - shared, n_a),
        missed_by_a: frac(n_b - shared, n_b),
    })
}

/// Histogram of local-minimum energies, with a parallel count restricted to
/// the minima also present in a reference catalog.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyHistogram {
    pub bin_edges: Vec<f64>,
    pub counts_all: Vec<u64>,
    pub counts_shared: Vec<u64>,
}

/// Bin specification: a count of equal-width bins spanning the union of the
/// source (and reference) energy ranges, or explicit ascending edges.
#[derive(Clone, Debug)]
pub enum Binning {
    Count(usize),
    Edges(Vec<f64>),
}

/// Energies falling outside explicit edges are clamped into the boundary
/// bins so that the total count always equals N_LV of the source.
pub fn energy_histogram<F: Real>(
    src: &LvCatalog<F>,
    reference: Option<&LvCatalog<F>>,
    binning: &Binning,
) -> Result<EnergyHistogram> {
    let edges: Vec<f64> = match binning {
        Binning::Edges(edges) => {
            if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidConfig(
                    "explicit bin edges must be ascending with at least two entries".into(),
                ));
            }
            edges.clone()
        }
        Binning::Count(bins) => {
            if *bins < 1 {
                return Err(Error::InvalidConfig("bin count must be >= 1".into()));
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for rec in src.records() {
                let e = rec.energy.to_f64().unwrap();
                lo = lo.min(e);
                hi = hi.max(e);
            }
            if let Some(r) = reference {
                for rec in r.records() {
                    let e = rec.energy.to_f64().unwrap();
                    lo = lo.min(e);
                    hi = hi.max(e);
                }
            }
            if !lo.is_finite() {
                lo = 0.0;
                hi = 1.0;
            }
            if hi <= lo {
                hi = lo + 1.0;
            }
            let width = (hi - lo) / *bins as f64;
            (0..=*bins).map(|k| lo + width * k as f64).collect()
        }
    };
    let n_bins = edges.len() - 1;
    let mut counts_all = vec![0u64; n_bins];
    let mut counts_shared = vec![0u64; n_bins];
    for rec in src.records() {
        let e = rec.energy.to_f64().unwrap();
        let mut bin = if e <= edges[0] {
            0
        } else {
            match edges.windows(2).position(|w| e >= w[0] && e < w[1]) {
                Some(k) => k,
                None => n_bins - 1, // at or beyond the last edge
            }
        };
        if bin >= n_bins {
            bin = n_bins - 1;
        }
        counts_all[bin] += 1;
        if reference.is_some_and(|r| r.contains(&rec.lm_state)) {
            counts_shared[bin] += 1;
        }
    }
    Ok(EnergyHistogram {
        bin_edges: edges,
        counts_all,
        counts_shared,
    })
}

impl EnergyHistogram {
    /// CSV schema: `bin_lo,bin_hi,count_all,count_shared`.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["bin_lo", "bin_hi", "count_all", "count_shared"])?;
        for (k, pair) in self.bin_edges.windows(2).enumerate() {
            w.write_record([
                format!("{}", pair[0]),
                format!("{}", pair[1]),
                self.counts_all[k].to_string(),
                self.counts_shared[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fraction of a sample (multiplicity-weighted) whose energy is within
/// `tol` of the ground-state energy. `energy_of` evaluates states in the
/// sample's own space.
pub fn p_gs<F: Real>(
    samples: &SampleSet,
    mut energy_of: impl FnMut(&BitVec) -> F,
    gs_energy: F,
    tol: F,
) -> Result<f64> {
    let total = samples.total_multiplicity();
    if total == 0 {
        return Err(Error::Empty("sample set"));
    }
    let mut hits = 0u64;
    for (state, mult) in samples.entries() {
        if energy_of(state) <= gs_energy + tol {
            hits += mult;
        }
    }
    Ok(hits as f64 / total as f64)
}

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut ranks = vec![0.0; xs.len()];
    let mut k = 0;
    while k < order.len() {
        let mut j = k;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[k]] {
            j += 1;
        }
        let avg = (k + j) as f64 / 2.0 + 1.0;
        for &idx in &order[k..=j] {
            ranks[idx] = avg;
        }
        k = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::SamplerId;
    use ndarray::{Array1, Array2};
    use rand::Rng;

    fn random_model(n_v: usize, n_h: usize, scale: f64, seed: u64) -> RbmModel<f64> {
        let mut rng = derive_rng(seed, 0);
        let mut w = Array2::zeros((n_h, n_v));
        for x in w.iter_mut() {
            *x = rng.gen_range(-scale..scale);
        }
        let b = Array1::from_shape_fn(n_v, |_| rng.gen_range(-scale..scale));
        let c = Array1::from_shape_fn(n_h, |_| rng.gen_range(-scale..scale));
        RbmModel::new(w, b, c).unwrap()
    }

    #[test]
    fn exhaustive_enumeration_zero_and_1x1() {
        // Zero model: the tie rule keeps every state fixed.
        let zm = RbmModel::<f64>::zeros(2, 2);
        let cat = exhaustive_lm_enumeration(&zm, 20, "zero").unwrap();
        assert_eq!(cat.n_lv(), 16);

        // 1x1 model with w=1: hand enumeration gives exactly (0,0) and (1,1).
        let m = RbmModel::new(
            Array2::from_shape_vec((1, 1), vec![1.0]).unwrap(),
            Array1::zeros(1),
            Array1::zeros(1),
        )
        .unwrap();
        let cat = exhaustive_lm_enumeration(&m, 20, "w1").unwrap();
        assert_eq!(cat.n_lv(), 2);
        assert!(cat.contains(&BitVec::from_usize(0b00, 2)));
        assert!(cat.contains(&BitVec::from_usize(0b11, 2)));
    }

    #[test]
    fn scan_from_seeds_contained_in_exhaustive() {
        let m = random_model(4, 3, 1.0, 61);
        let exhaustive = exhaustive_lm_enumeration(&m, 20, "m").unwrap();
        let seeds: Vec<Configuration> = (0..40)
            .map(|k| Configuration::from_flat(&BitVec::from_usize(k * 3 % 128, 7), 4).unwrap())
            .collect();
        let cat = scan_lvs_from_seeds(&m, &seeds, 3, 1.0, 5, 71, "m").unwrap();
        for rec in cat.records() {
            assert!(exhaustive.contains(&rec.lm_state));
            // the cataloged minimum is at most the energy of anything that
            // relaxed into it, including itself
            let ex = exhaustive.get(&rec.lm_state).unwrap();
            assert_eq!(rec.energy, ex.energy);
        }
        // dedup: two identical seeds on the same chain stream give one record
        let dup = vec![seeds[0].clone(), seeds[0].clone()];
        let cat = scan_lvs_from_seeds(&m, &dup, 0, 1.0, 1, 71, "m").unwrap();
        assert_eq!(cat.n_lv(), 1);
        assert_eq!(cat.records().next().unwrap().total_hits(), 2);
    }

    #[test]
    fn scan_from_seeds_kg0_is_relaxed_seed_dedup() {
        let m = random_model(3, 3, 1.0, 63);
        let exhaustive = exhaustive_lm_enumeration(&m, 20, "m").unwrap();
        // seeds already at fixed points -> catalog = dedup(seeds)
        let fixed: Vec<Configuration> = exhaustive
            .records()
            .map(|r| Configuration::from_flat(&r.lm_state, 3).unwrap())
            .collect();
        let cat = scan_lvs_from_seeds(&m, &fixed, 0, 1.0, 1, 5, "m").unwrap();
        assert_eq!(cat.n_lv(), exhaustive.n_lv());
    }

    #[test]
    fn n_lv_non_decreasing_in_n_rpt() {
        let m = random_model(4, 4, 1.3, 65);
        let seeds: Vec<Configuration> = (0..10)
            .map(|k| Configuration::from_flat(&BitVec::from_usize(k * 17 % 256, 8), 4).unwrap())
            .collect();
        let mut prev = 0usize;
        for n_rpt in 1..=6 {
            let cat = scan_lvs_from_seeds(&m, &seeds, 4, 1.0, n_rpt, 81, "m").unwrap();
            assert!(cat.n_lv() >= prev, "N_LV dropped at n_rpt={n_rpt}");
            prev = cat.n_lv();
        }
    }

    #[test]
    fn scan_from_samples_dedup_and_pigeonhole() {
        let m = random_model(4, 3, 1.0, 67);
        let exhaustive = exhaustive_lm_enumeration(&m, 20, "m").unwrap();
        let states: Vec<BitVec> = (0..50).map(|k| BitVec::from_usize(k * 11 % 128, 7)).collect();
        let n_states = states.len();
        let set = SampleSet::from_states(states, SamplerId::Sqa, 3, "{}".into());
        let cat = scan_lvs_from_samples(&m, &set, "m", 10).unwrap();
        assert!(cat.n_lv() <= n_states);
        for rec in cat.records() {
            assert!(exhaustive.contains(&rec.lm_state));
        }
        // samples already at fixed points -> catalog = dedup(samples)
        let fixed: Vec<BitVec> = exhaustive.records().map(|r| r.lm_state.clone()).collect();
        let n_fixed = fixed.len();
        let set = SampleSet::from_states(fixed, SamplerId::Sa, 3, "{}".into());
        let cat = scan_lvs_from_samples(&m, &set, "m", 10).unwrap();
        assert_eq!(cat.n_lv(), n_fixed);
    }

    #[test]
    fn single_basin_model_gives_one_valley() {
        // Strong uniform positive couplings and biases: everything relaxes
        // to the all-ones state.
        let m = RbmModel::new(
            Array2::from_elem((3, 3), 2.0),
            Array1::from_elem(3, 0.5),
            Array1::from_elem(3, 0.5),
        )
        .unwrap();
        let states: Vec<BitVec> = (0..64).map(|k| BitVec::from_usize(k, 6)).collect();
        let set = SampleSet::from_states(states, SamplerId::Sqa, 0, "{}".into());
        let cat = scan_lvs_from_samples(&m, &set, "m", 1).unwrap();
        assert_eq!(cat.n_lv(), 1);
        assert_eq!(
            cat.records().next().unwrap().lm_state,
            BitVec::from_usize(0b111111, 6)
        );
    }

    #[test]
    fn catalog_merge_is_order_independent() {
        let m = random_model(3, 3, 1.1, 69);
        let mk = |seed: u64, sampler: SamplerId| {
            let states: Vec<BitVec> =
                (0..20).map(|k| BitVec::from_usize((k * seed as usize) % 64, 6)).collect();
            let set = SampleSet::from_states(states, sampler, seed, "{}".into());
            scan_lvs_from_samples(&m, &set, "m", 5).unwrap()
        };
        let a = mk(3, SamplerId::Gibbs);
        let b = mk(7, SamplerId::Sa);
        let c = mk(11, SamplerId::Sqa);
        let mut ab_c = a.clone();
        ab_c.merge(&b).unwrap();
        ab_c.merge(&c).unwrap();
        let mut c_ba = c.clone();
        c_ba.merge(&b).unwrap();
        c_ba.merge(&a).unwrap();
        assert_eq!(ab_c.n_lv(), c_ba.n_lv());
        for (ra, rb) in ab_c.records().zip(c_ba.records()) {
            assert_eq!(ra, rb);
        }
        let other = LvCatalog::<f64>::new("different", 5);
        assert!(ab_c.merge(&other).is_err());
    }

    #[test]
    fn overlap_stats_cases() {
        let mut a = LvCatalog::<f64>::new("m", 4);
        let mut b = LvCatalog::<f64>::new("m", 4);
        for k in 0..4 {
            a.insert(BitVec::from_usize(k, 4), k as f64, SamplerId::Gibbs, 1);
        }
        for k in 2..5 {
            b.insert(BitVec::from_usize(k, 4), k as f64, SamplerId::Sqa, 1);
        }
        // |A|=4, |B|=3, |A inter B|=2
        let rep = overlap_stats(&a, &b).unwrap();
        assert_eq!(rep.shared, 2);
        assert_eq!(rep.missed_by_b, 0.5);
        assert!((rep.missed_by_a - 1.0 / 3.0).abs() < 1e-12);

        // antisymmetry
        let rev = overlap_stats(&b, &a).unwrap();
        assert_eq!(rep.missed_by_b, rev.missed_by_a);
        assert_eq!(rep.missed_by_a, rev.missed_by_b);

        // identical catalogs
        let same = overlap_stats(&a, &a).unwrap();
        assert_eq!(same.missed_by_a, 0.0);
        assert_eq!(same.missed_by_b, 0.0);

        // disjoint catalogs
        let mut c = LvCatalog::<f64>::new("m", 4);
        c.insert(BitVec::from_usize(9, 4), 0.0, SamplerId::Sa, 1);
        let rep = overlap_stats(&a, &c).unwrap();
        assert_eq!(rep.missed_by_b, 1.0);
        assert_eq!(rep.missed_by_a, 1.0);

        let other = LvCatalog::<f64>::new("other", 4);
        assert!(overlap_stats(&a, &other).is_err());
    }

    #[test]
    fn histogram_hand_computed() {
        let mut cat = LvCatalog::<f64>::new("m", 5);
        for (k, e) in [0.5, 1.5, 1.7, 2.5, 3.9].iter().enumerate() {
            cat.insert(BitVec::from_usize(k, 4), *e, SamplerId::Gibbs, 1);
        }
        let mut reference = LvCatalog::<f64>::new("m", 5);
        reference.insert(BitVec::from_usize(1, 4), 1.5, SamplerId::Sqa, 1);
        reference.insert(BitVec::from_usize(3, 4), 2.5, SamplerId::Sqa, 1);
        let edges = Binning::Edges(vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        let h = energy_histogram(&cat, Some(&reference), &edges).unwrap();
        assert_eq!(h.counts_all, vec![1, 2, 1, 1]);
        assert_eq!(h.counts_shared, vec![0, 1, 1, 0]);
        let total: u64 = h.counts_all.iter().sum();
        assert_eq!(total as usize, cat.n_lv());

        // ref = src -> shared equals all
        let h = energy_histogram(&cat, Some(&cat), &edges).unwrap();
        assert_eq!(h.counts_all, h.counts_shared);

        // single record, automatic bins
        let mut single = LvCatalog::<f64>::new("m", 1);
        single.insert(BitVec::from_usize(0, 4), -3.0, SamplerId::Sa, 1);
        let h = energy_histogram(&single, None, &Binning::Count(4)).unwrap();
        assert_eq!(h.counts_all.iter().sum::<u64>(), 1);
        assert!(h.counts_shared.iter().all(|&c| c == 0));
    }

    #[test]
    fn p_gs_cases() {
        let states = vec![
            BitVec::from_usize(0, 3),
            BitVec::from_usize(0, 3),
            BitVec::from_usize(1, 3),
            BitVec::from_usize(5, 3),
        ];
        let set = SampleSet::from_states(states, SamplerId::Sa, 0, "{}".into());
        let energy = |s: &BitVec| s.count_ones() as f64;
        // GS energy 0: two of four samples hit
        assert_eq!(p_gs(&set, energy, 0.0, 1e-9).unwrap(), 0.5);
        // nothing at energy -1
        assert_eq!(p_gs(&set, energy, -1.0, 1e-9).unwrap(), 0.0);
        // everything within tol 5
        assert_eq!(p_gs(&set, energy, 0.0, 5.0).unwrap(), 1.0);
        let empty = SampleSet::from_states(vec![], SamplerId::Sa, 0, "{}".into());
        assert!(p_gs(&empty, energy, 0.0, 0.0).is_err());
    }

    #[test]
    fn catalog_csv_roundtrip() {
        let m = random_model(3, 3, 1.0, 73);
        let states: Vec<BitVec> = (0..30).map(|k| BitVec::from_usize(k % 64, 6)).collect();
        let set = SampleSet::from_states(states, SamplerId::Sqa, 3, "{}".into());
        let cat = scan_lvs_from_samples(&m, &set, "ck", 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("catalog.csv");
        cat.write_csv(&path).unwrap();
        let back = LvCatalog::<f64>::read_csv(&path, 6, "ck", 7).unwrap();
        assert_eq!(cat.n_lv(), back.n_lv());
        for (a, b) in cat.records().zip(back.records()) {
            assert_eq!(a.lm_state, b.lm_state);
            assert_eq!(a.hits, b.hits);
            assert!((a.energy - b.energy).abs() < 1e-12);
        }
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 5.0, 9.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[9.0, 5.0, 4.0, 2.0]) + 1.0).abs() < 1e-12);
        // ties get average ranks
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]);
        assert!(rho > 0.9);
    }
}
