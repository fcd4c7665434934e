//! Stochastic state-generation engines: block Gibbs at arbitrary temperature,
//! zero-temperature relaxation, classical simulated annealing, and
//! path-integral simulated quantum annealing (software stand-in for a
//! quantum annealer).

use crate::bits::{BitVec, Configuration};
use crate::embedding::{spin_of_bit, IsingProblem};
use crate::error::{Error, Result};
use crate::model::RbmModel;
use crate::real::{real, Real};
use crate::rng::derive_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which engine produced a sample or valley hit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerId {
    Gibbs,
    Sa,
    Sqa,
    /// Exhaustive enumeration oracle (validation only).
    Exhaustive,
}

impl SamplerId {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerId::Gibbs => "gibbs",
            SamplerId::Sa => "sa",
            SamplerId::Sqa => "sqa",
            SamplerId::Exhaustive => "exhaustive",
        }
    }
}

impl std::str::FromStr for SamplerId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gibbs" => Ok(SamplerId::Gibbs),
            "sa" => Ok(SamplerId::Sa),
            "sqa" => Ok(SamplerId::Sqa),
            "exhaustive" => Ok(SamplerId::Exhaustive),
            other => Err(Error::InvalidData(format!("unknown sampler id `{other}`"))),
        }
    }
}

/// Multiset of sampled states with per-state multiplicity.
///
/// States are flat packed bit vectors; for model-space samples the layout is
/// visible units first, then hidden. Entries are deduplicated by exact bit
/// pattern and kept in canonical (ascending) order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub sampler_id: SamplerId,
    pub seed: u64,
    /// Opaque schedule descriptor recorded for reproducibility.
    pub schedule: String,
    pub n_requested: u64,
    pub n_bits: usize,
    entries: BTreeMap<BitVec, u64>,
}

impl SampleSet {
    pub fn from_states(
        states: Vec<BitVec>,
        sampler_id: SamplerId,
        seed: u64,
        schedule: String,
    ) -> Self {
        let n_bits = states.first().map_or(0, BitVec::len);
        let n_requested = states.len() as u64;
        let mut entries = BTreeMap::new();
        for s in states {
            debug_assert_eq!(s.len(), n_bits);
            *entries.entry(s).or_insert(0) += 1;
        }
        SampleSet {
            sampler_id,
            seed,
            schedule,
            n_requested,
            n_bits,
            entries,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BitVec, u64)> + '_ {
        self.entries.iter().map(|(s, &m)| (s, m))
    }

    pub fn n_distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.entries.values().sum()
    }

    /// Merges another set produced by the same sampler over states of the
    /// same width; metadata (seed, schedule) keeps the receiver's values.
    pub fn merge(&mut self, other: &SampleSet) -> Result<()> {
        if other.n_bits != self.n_bits && other.n_requested > 0 && self.n_requested > 0 {
            return Err(Error::DimensionMismatch {
                what: "sample state width",
                expected: self.n_bits,
                found: other.n_bits,
            });
        }
        if self.n_requested == 0 {
            self.n_bits = other.n_bits;
        }
        self.n_requested += other.n_requested;
        for (s, m) in other.entries() {
            *self.entries.entry(s.clone()).or_insert(0) += m;
        }
        Ok(())
    }

    /// Writes `state_hex,multiplicity,energy` rows; `energy_of` supplies the
    /// energy column.
    pub fn write_csv<F: Real>(
        &self,
        path: &std::path::Path,
        mut energy_of: impl FnMut(&BitVec) -> F,
    ) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["state_hex", "multiplicity", "energy"])?;
        for (s, m) in self.entries() {
            w.write_record([
                s.to_hex(),
                m.to_string(),
                format!("{}", energy_of(s).to_f64().unwrap()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar metadata written next to the CSV.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({
            "sampler_id": self.sampler_id.as_str(),
            "seed": self.seed,
            "schedule": self.schedule,
            "n_requested": self.n_requested,
            "n_bits": self.n_bits,
            "n_distinct": self.n_distinct(),
        })
    }

    pub fn read_csv(
        path: &std::path::Path,
        n_bits: usize,
        sampler_id: SamplerId,
        seed: u64,
        schedule: String,
    ) -> Result<SampleSet> {
        let mut r = csv::Reader::from_path(path)?;
        let mut entries = BTreeMap::new();
        let mut total = 0u64;
        for rec in r.records() {
            let rec = rec?;
            let state = BitVec::from_hex(&rec[0], n_bits)?;
            let mult: u64 = rec[1]
                .parse()
                .map_err(|_| Error::InvalidData(format!("bad multiplicity `{}`", &rec[1])))?;
            total += mult;
            *entries.entry(state).or_insert(0) += mult;
        }
        Ok(SampleSet {
            sampler_id,
            seed,
            schedule,
            n_requested: total,
            n_bits,
            entries,
        })
    }
}

/// Annealing schedule. `sweeps` is this artifact's analog of hardware
/// annealing time. SA interpolates the temperature `t_start -> t_end`
/// linearly over the sweeps; SQA runs at fixed temperature `t_end` and
/// interpolates the transverse field `gamma_start -> gamma_end` instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule<F: Real> {
    pub sweeps: usize,
    pub t_start: F,
    pub t_end: F,
    pub gamma_start: F,
    pub gamma_end: F,
    pub trotter_slices: usize,
}

impl<F: Real> AnnealSchedule<F> {
    pub fn sa(sweeps: usize, t_start: F, t_end: F) -> Self {
        AnnealSchedule {
            sweeps,
            t_start,
            t_end,
            gamma_start: F::zero(),
            gamma_end: F::zero(),
            trotter_slices: 1,
        }
    }

    pub fn sqa(sweeps: usize, t: F, gamma_start: F, gamma_end: F, trotter_slices: usize) -> Self {
        AnnealSchedule {
            sweeps,
            t_start: t,
            t_end: t,
            gamma_start,
            gamma_end,
            trotter_slices,
        }
    }

    pub fn descriptor(&self) -> String {
        serde_json::json!({
            "sweeps": self.sweeps,
            "t_start": self.t_start.to_f64(),
            "t_end": self.t_end.to_f64(),
            "gamma_start": self.gamma_start.to_f64(),
            "gamma_end": self.gamma_end.to_f64(),
            "trotter_slices": self.trotter_slices,
        })
        .to_string()
    }

    fn validate_sa(&self) -> Result<()> {
        if self.t_start <= F::zero() || self.t_end <= F::zero() {
            return Err(Error::InvalidSchedule(
                "annealing temperatures must be positive".into(),
            ));
        }
        Ok(())
    }

    fn validate_sqa(&self) -> Result<()> {
        if self.trotter_slices < 1 {
            return Err(Error::InvalidSchedule("trotter_slices must be >= 1".into()));
        }
        if self.t_end <= F::zero() {
            return Err(Error::InvalidSchedule(
                "SQA temperature must be positive".into(),
            ));
        }
        if self.trotter_slices > 1
            && (self.gamma_start <= F::zero() || self.gamma_end <= F::zero())
        {
            return Err(Error::InvalidSchedule(
                "transverse field must be positive throughout for trotter_slices > 1".into(),
            ));
        }
        Ok(())
    }

    /// Linear interpolation position for sweep `t`; a 1-sweep schedule uses
    /// the end value.
    fn fraction(&self, sweep: usize) -> F {
        if self.sweeps <= 1 {
            F::one()
        } else {
            real::<F>(sweep as f64 / (self.sweeps - 1) as f64)
        }
    }
}

#[inline]
fn lerp<F: Real>(a: F, b: F, frac: F) -> F {
    a + (b - a) * frac
}

/// Anything simulated annealing can run on: a set of binary sites with an
/// energy that changes locally under single-site flips.
pub trait SpinSystem<F: Real> {
    fn n_sites(&self) -> usize;
    fn energy(&self, state: &BitVec) -> F;
    /// Energy change if site `i` flips in `state`.
    fn flip_delta(&self, state: &BitVec, i: usize) -> F;
}

/// Ising problem with precomputed neighbor lists.
pub struct IsingSystem<'a, F: Real> {
    problem: &'a IsingProblem<F>,
    adj: Vec<Vec<(usize, F)>>,
}

impl<'a, F: Real> IsingSystem<'a, F> {
    pub fn new(problem: &'a IsingProblem<F>) -> Self {
        IsingSystem {
            adj: problem.neighbor_lists(),
            problem,
        }
    }
}

impl<F: Real> SpinSystem<F> for IsingSystem<'_, F> {
    fn n_sites(&self) -> usize {
        self.problem.n
    }

    fn energy(&self, state: &BitVec) -> F {
        self.problem.energy(state).expect("state width matches")
    }

    #[inline]
    fn flip_delta(&self, state: &BitVec, i: usize) -> F {
        let mut local = self.problem.h[i];
        for &(nb, coupler) in &self.adj[i] {
            local += coupler * spin_of_bit::<F>(state.get(nb));
        }
        real::<F>(-2.0) * spin_of_bit::<F>(state.get(i)) * local
    }
}

/// RBM energy over the flat (visible-then-hidden) state.
pub struct RbmSystem<'a, F: Real> {
    model: &'a RbmModel<F>,
}

impl<'a, F: Real> RbmSystem<'a, F> {
    pub fn new(model: &'a RbmModel<F>) -> Self {
        RbmSystem { model }
    }
}

impl<F: Real> SpinSystem<F> for RbmSystem<'_, F> {
    fn n_sites(&self) -> usize {
        self.model.n_units()
    }

    fn energy(&self, state: &BitVec) -> F {
        self.model.energy_flat(state).expect("state width matches")
    }

    #[inline]
    fn flip_delta(&self, state: &BitVec, site: usize) -> F {
        let n_v = self.model.n_v();
        if site < n_v {
            let mut field = self.model.visible_bias()[site];
            for i in 0..self.model.n_h() {
                if state.get(n_v + i) {
                    field += self.model.weights()[(i, site)];
                }
            }
            let delta_v = if state.get(site) { -F::one() } else { F::one() };
            -field * delta_v
        } else {
            let i = site - n_v;
            let mut field = self.model.hidden_bias()[i];
            let row = self.model.weights().row(i);
            for j in 0..n_v {
                if state.get(j) {
                    field += row[j];
                }
            }
            let delta_h = if state.get(site) { -F::one() } else { F::one() };
            -field * delta_h
        }
    }
}

#[inline]
fn metropolis_site<F: Real, S: SpinSystem<F>, R: Rng>(
    system: &S,
    state: &mut BitVec,
    site: usize,
    extra_delta: F,
    temp: F,
    rng: &mut R,
) {
    let delta = system.flip_delta(state, site) + extra_delta;
    let accept = if delta <= F::zero() {
        true
    } else {
        let p = (-delta / temp).exp();
        rng.gen::<f64>() < p.to_f64().unwrap_or(0.0)
    };
    if accept {
        state.flip(site);
    }
}

fn random_state<R: Rng>(n: usize, rng: &mut R) -> BitVec {
    let mut s = BitVec::zeros(n);
    for i in 0..n {
        if rng.gen::<bool>() {
            s.set(i, true);
        }
    }
    s
}

/// One full alternating block update at temperature `t`: resample every
/// hidden unit given `v`, then every visible unit given the new `h`.
/// The step ends after the visible update.
pub fn gibbs_step<F: Real, R: Rng>(
    model: &RbmModel<F>,
    config: &Configuration,
    t: F,
    rng: &mut R,
) -> Result<Configuration> {
    let mut next = config.clone();
    gibbs_step_in_place(model, &mut next, None, t, rng)?;
    Ok(next)
}

/// In-place Gibbs step with an optional visible clamp mask: clamped visible
/// units keep their values (their updates are skipped).
pub fn gibbs_step_in_place<F: Real, R: Rng>(
    model: &RbmModel<F>,
    config: &mut Configuration,
    visible_clamp: Option<&BitVec>,
    t: F,
    rng: &mut R,
) -> Result<()> {
    if config.v.len() != model.n_v() || config.h.len() != model.n_h() {
        return Err(Error::DimensionMismatch {
            what: "configuration",
            expected: model.n_units(),
            found: config.v.len() + config.h.len(),
        });
    }
    if t <= F::zero() {
        return Err(Error::NonPositiveTemperature(t.to_f64().unwrap_or(f64::NAN)));
    }
    update_hidden_block(model, config, t, rng)?;
    update_visible_block(model, config, visible_clamp, t, rng)?;
    Ok(())
}

/// Resamples every hidden unit from its conditional given `v`.
pub fn update_hidden_block<F: Real, R: Rng>(
    model: &RbmModel<F>,
    config: &mut Configuration,
    t: F,
    rng: &mut R,
) -> Result<()> {
    for i in 0..model.n_h() {
        let p = crate::model::sigmoid(model.hidden_field(&config.v, i), t)?;
        let u: f64 = rng.gen();
        config.h.set(i, u < p.to_f64().unwrap_or(0.0));
    }
    Ok(())
}

/// Resamples every unclamped visible unit from its conditional given `h`.
pub fn update_visible_block<F: Real, R: Rng>(
    model: &RbmModel<F>,
    config: &mut Configuration,
    visible_clamp: Option<&BitVec>,
    t: F,
    rng: &mut R,
) -> Result<()> {
    for j in 0..model.n_v() {
        if let Some(mask) = visible_clamp {
            if mask.get(j) {
                continue;
            }
        }
        let p = crate::model::sigmoid(model.visible_field(&config.h, j), t)?;
        let u: f64 = rng.gen();
        config.v.set(j, u < p.to_f64().unwrap_or(0.0));
    }
    Ok(())
}

/// Runs `k_g` Gibbs steps from every seed and records the terminal states.
/// Chain `k` draws from the stream `(seed, k)`, so results do not depend on
/// evaluation order.
pub fn gibbs_sample<F: Real>(
    model: &RbmModel<F>,
    seeds: &[Configuration],
    k_g: usize,
    t: F,
    seed: u64,
) -> Result<SampleSet> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let mut states = Vec::with_capacity(seeds.len());
    for (idx, start) in seeds.iter().enumerate() {
        let mut rng = derive_rng(seed, idx as u64);
        let mut config = start.clone();
        for _ in 0..k_g {
            gibbs_step_in_place(model, &mut config, None, t, &mut rng)?;
        }
        states.push(config.flat());
    }
    Ok(SampleSet::from_states(
        states,
        SamplerId::Gibbs,
        seed,
        format!("{{\"k_g\":{k_g},\"t\":{}}}", t.to_f64().unwrap_or(f64::NAN)),
    ))
}

/// One deterministic zero-temperature block sweep: each hidden unit is set
/// to 1 iff its local field is positive (unchanged on an exactly-zero
/// field), then the visible layer likewise.
pub fn relax_step<F: Real>(model: &RbmModel<F>, config: &Configuration) -> Result<Configuration> {
    if config.v.len() != model.n_v() || config.h.len() != model.n_h() {
        return Err(Error::DimensionMismatch {
            what: "configuration",
            expected: model.n_units(),
            found: config.v.len() + config.h.len(),
        });
    }
    let mut next = config.clone();
    for i in 0..model.n_h() {
        let field = model.hidden_field(&next.v, i);
        if field > F::zero() {
            next.h.set(i, true);
        } else if field < F::zero() {
            next.h.set(i, false);
        }
    }
    for j in 0..model.n_v() {
        let field = model.visible_field(&next.h, j);
        if field > F::zero() {
            next.v.set(j, true);
        } else if field < F::zero() {
            next.v.set(j, false);
        }
    }
    Ok(next)
}

/// Deterministic downhill relaxation to the bottom of the local valley:
/// repeats [`relax_step`] until a full sweep changes nothing. The returned
/// state is a fixed point. Errors if the default cap of
/// `10 * (n_v + n_h)` sweeps is exceeded (unreachable for finite models,
/// since every changing sweep strictly lowers the energy).
pub fn relax_to_minimum<F: Real>(
    model: &RbmModel<F>,
    config: &Configuration,
) -> Result<Configuration> {
    relax_to_minimum_capped(model, config, 10 * model.n_units())
}

pub fn relax_to_minimum_capped<F: Real>(
    model: &RbmModel<F>,
    config: &Configuration,
    cap: usize,
) -> Result<Configuration> {
    let mut cur = config.clone();
    for _ in 0..cap {
        let next = relax_step(model, &cur)?;
        if next == cur {
            return Ok(cur);
        }
        cur = next;
    }
    // One extra check: the state after the final sweep may already be fixed.
    let next = relax_step(model, &cur)?;
    if next == cur {
        Ok(cur)
    } else {
        Err(Error::RelaxationCap { cap })
    }
}

/// Classical simulated annealing: `n_reads` independent restarts from
/// uniform random states, each running `schedule.sweeps` Metropolis
/// single-site sweeps with the temperature interpolated linearly
/// `t_start -> t_end`. Read `r` draws from stream `(seed, r)`.
pub fn simulated_annealing<F: Real, S: SpinSystem<F>>(
    system: &S,
    schedule: &AnnealSchedule<F>,
    n_reads: usize,
    seed: u64,
) -> Result<SampleSet> {
    schedule.validate_sa()?;
    let n = system.n_sites();
    let mut states = Vec::with_capacity(n_reads);
    for read in 0..n_reads {
        let mut rng = derive_rng(seed, read as u64);
        let mut state = random_state(n, &mut rng);
        for sweep in 0..schedule.sweeps {
            let temp = lerp(schedule.t_start, schedule.t_end, schedule.fraction(sweep));
            for site in 0..n {
                metropolis_site(system, &mut state, site, F::zero(), temp, &mut rng);
            }
        }
        states.push(state);
    }
    Ok(SampleSet::from_states(
        states,
        SamplerId::Sa,
        seed,
        schedule.descriptor(),
    ))
}

pub fn simulated_annealing_ising<F: Real>(
    problem: &IsingProblem<F>,
    schedule: &AnnealSchedule<F>,
    n_reads: usize,
    seed: u64,
) -> Result<SampleSet> {
    simulated_annealing(&IsingSystem::new(problem), schedule, n_reads, seed)
}

pub fn simulated_annealing_rbm<F: Real>(
    model: &RbmModel<F>,
    schedule: &AnnealSchedule<F>,
    n_reads: usize,
    seed: u64,
) -> Result<SampleSet> {
    simulated_annealing(&RbmSystem::new(model), schedule, n_reads, seed)
}

/// Inter-replica coupling of the Suzuki-Trotter decomposition, in energy
/// units: `J_perp = -(P*T/2) * ln tanh(Gamma / (P*T))`.
pub fn replica_coupling<F: Real>(gamma: F, p: usize, t: F) -> F {
    let pt = real::<F>(p as f64) * t;
    -(pt / real::<F>(2.0)) * (gamma / pt).tanh().ln()
}

/// Path-integral simulated quantum annealing on `trotter_slices` coupled
/// replicas at fixed temperature `t_end`. The transverse field is
/// interpolated `gamma_start -> gamma_end` over the sweeps; each read is an
/// independent restart whose result is one replica chosen uniformly at the
/// end. With one slice and zero transverse field the dynamics reduce,
/// stream for stream, to [`simulated_annealing`] at fixed `t_end`.
pub fn sqa_sample<F: Real>(
    problem: &IsingProblem<F>,
    schedule: &AnnealSchedule<F>,
    n_reads: usize,
    seed: u64,
) -> Result<SampleSet> {
    schedule.validate_sqa()?;
    let system = IsingSystem::new(problem);
    let n = system.n_sites();
    let p = schedule.trotter_slices;
    let t = schedule.t_end;
    let temp_eff = real::<F>(p as f64) * t;
    let two = real::<F>(2.0);

    let mut states = Vec::with_capacity(n_reads);
    for read in 0..n_reads {
        let mut rng = derive_rng(seed, read as u64);
        let mut replicas: Vec<BitVec> = (0..p).map(|_| random_state(n, &mut rng)).collect();
        for sweep in 0..schedule.sweeps {
            let frac = schedule.fraction(sweep);
            let gamma = lerp(schedule.gamma_start, schedule.gamma_end, frac);
            let j_perp = if p > 1 {
                replica_coupling(gamma, p, t)
            } else {
                F::zero()
            };
            for k in 0..p {
                for site in 0..n {
                    let extra = if p > 1 {
                        let prev = replicas[(k + p - 1) % p].get(site);
                        let next = replicas[(k + 1) % p].get(site);
                        let ring = spin_of_bit::<F>(prev) + spin_of_bit::<F>(next);
                        two * j_perp * spin_of_bit::<F>(replicas[k].get(site)) * ring
                    } else {
                        F::zero()
                    };
                    metropolis_site(&system, &mut replicas[k], site, extra, temp_eff, &mut rng);
                }
            }
        }
        let pick = if p == 1 { 0 } else { rng.gen_range(0..p) };
        states.push(replicas.swap_remove(pick));
    }
    Ok(SampleSet::from_states(
        states,
        SamplerId::Sqa,
        seed,
        schedule.descriptor(),
    ))
}
