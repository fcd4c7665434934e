//! QUBO/Ising conversion, synthetic hardware graph, chained minor embedding,
//! scale factor, clamping, and chain-break resolution.
//!
//! Ising energy convention: `E(s) = sum_{i<j} J_ij s_i s_j + sum_j h_j s_j + offset`
//! over spins in {-1, +1}. Under this convention a negative coupler is
//! ferromagnetic and a local field of -4 forces the spin to +1 (bit 1),
//! matching the clamping rule used on annealer hardware.

use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::model::RbmModel;
use crate::real::{real, Real};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

/// Hardware limits on physical coefficients.
pub const COUPLER_RANGE: f64 = 1.0;
pub const FIELD_RANGE: f64 = 4.0;
/// Field magnitude used to clamp a chained unit to a fixed value.
pub const CLAMP_FIELD: f64 = 4.0;
pub const DEFAULT_CHAIN_STRENGTH: f64 = -1.0;
pub const DEFAULT_DEGREE_CAP: usize = 15;

/// Quadratic unconstrained binary optimization problem over {0,1} variables:
/// `E(x) = offset + sum_j linear_j x_j + sum_{i<j} quadratic_ij x_i x_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboProblem<F: Real> {
    pub n: usize,
    pub linear: Vec<F>,
    /// Upper-triangular coefficients, keys `(i, j)` with `i < j`.
    pub quadratic: BTreeMap<(usize, usize), F>,
    pub offset: F,
}

impl<F: Real> QuboProblem<F> {
    pub fn zeros(n: usize) -> Self {
        QuboProblem {
            n,
            linear: vec![F::zero(); n],
            quadratic: BTreeMap::new(),
            offset: F::zero(),
        }
    }

    pub fn set_quadratic(&mut self, i: usize, j: usize, value: F) {
        assert!(i != j && i < self.n && j < self.n);
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.insert(key, value);
    }

    pub fn energy(&self, x: &BitVec) -> Result<F> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "QUBO state",
                expected: self.n,
                found: x.len(),
            });
        }
        let mut e = self.offset;
        for j in x.iter_ones() {
            e += self.linear[j];
        }
        for (&(i, j), &q) in &self.quadratic {
            if x.get(i) && x.get(j) {
                e += q;
            }
        }
        Ok(e)
    }

    pub fn to_json(&self) -> ProblemJson {
        ProblemJson {
            format_version: PROBLEM_FORMAT_VERSION,
            kind: "qubo".into(),
            n: self.n,
            linear: self.linear.iter().map(|x| x.to_f64().unwrap()).collect(),
            quadratic: self
                .quadratic
                .iter()
                .map(|(&(i, j), &v)| (i, j, v.to_f64().unwrap()))
                .collect(),
            offset: self.offset.to_f64().unwrap(),
        }
    }

    pub fn from_json(json: &ProblemJson) -> Result<Self> {
        let (linear, quadratic, offset) = problem_json_parts(json, "qubo")?;
        Ok(QuboProblem {
            n: json.n,
            linear,
            quadratic,
            offset,
        })
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let json: ProblemJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        QuboProblem::from_json(&json)
    }
}

/// Ising spin-glass problem; see the module docs for the sign convention.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingProblem<F: Real> {
    pub n: usize,
    pub h: Vec<F>,
    /// Coupler coefficients, keys `(i, j)` with `i < j`.
    pub j: BTreeMap<(usize, usize), F>,
    pub offset: F,
}

/// JSON schema shared by QUBO and Ising problems: sparse quadratic terms as
/// `[i, j, value]` triplets with `i < j`.
#[derive(Serialize, Deserialize)]
pub struct ProblemJson {
    pub format_version: u32,
    pub kind: String,
    pub n: usize,
    pub linear: Vec<f64>,
    pub quadratic: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

pub const PROBLEM_FORMAT_VERSION: u32 = 1;

fn problem_json_parts<F: Real>(
    json: &ProblemJson,
    kind: &str,
) -> Result<(Vec<F>, BTreeMap<(usize, usize), F>, F)> {
    if json.format_version != PROBLEM_FORMAT_VERSION {
        return Err(Error::InvalidData(format!(
            "unsupported problem format_version {}",
            json.format_version
        )));
    }
    if json.kind != kind {
        return Err(Error::InvalidData(format!(
            "expected a {kind} problem, found `{}`",
            json.kind
        )));
    }
    if json.linear.len() != json.n {
        return Err(Error::DimensionMismatch {
            what: "linear coefficients",
            expected: json.n,
            found: json.linear.len(),
        });
    }
    let linear = json.linear.iter().map(|&x| real(x)).collect();
    let mut quadratic = BTreeMap::new();
    for &(i, j, value) in &json.quadratic {
        if i >= j || j >= json.n {
            return Err(Error::InvalidData(format!(
                "bad quadratic key ({i},{j}) for n={}",
                json.n
            )));
        }
        quadratic.insert((i, j), real(value));
    }
    Ok((linear, quadratic, real(json.offset)))
}

/// Spin value of a packed bit: 0 -> -1, 1 -> +1.
#[inline]
pub fn spin_of_bit<F: Real>(bit: bool) -> F {
    if bit {
        F::one()
    } else {
        -F::one()
    }
}

impl<F: Real> IsingProblem<F> {
    pub fn zeros(n: usize) -> Self {
        IsingProblem {
            n,
            h: vec![F::zero(); n],
            j: BTreeMap::new(),
            offset: F::zero(),
        }
    }

    pub fn set_coupler(&mut self, i: usize, jx: usize, value: F) {
        assert!(i != jx && i < self.n && jx < self.n);
        let key = if i < jx { (i, jx) } else { (jx, i) };
        self.j.insert(key, value);
    }

    /// Energy of a spin state packed as bits (bit 1 = spin +1).
    pub fn energy(&self, state: &BitVec) -> Result<F> {
        if state.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "Ising state",
                expected: self.n,
                found: state.len(),
            });
        }
        let mut e = self.offset;
        for (idx, &field) in self.h.iter().enumerate() {
            e += field * spin_of_bit(state.get(idx));
        }
        for (&(a, b), &coupler) in &self.j {
            e += coupler * spin_of_bit::<F>(state.get(a)) * spin_of_bit::<F>(state.get(b));
        }
        Ok(e)
    }

    /// Neighbor lists `(other, J)` per spin, for samplers.
    pub fn neighbor_lists(&self) -> Vec<Vec<(usize, F)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(a, b), &coupler) in &self.j {
            adj[a].push((b, coupler));
            adj[b].push((a, coupler));
        }
        adj
    }

    pub fn max_abs_field(&self) -> F {
        self.h
            .iter()
            .fold(F::zero(), |m, &x| if x.abs() > m { x.abs() } else { m })
    }

    pub fn max_abs_coupler(&self) -> F {
        self.j
            .values()
            .fold(F::zero(), |m, &x| if x.abs() > m { x.abs() } else { m })
    }

    pub fn to_json(&self) -> ProblemJson {
        ProblemJson {
            format_version: PROBLEM_FORMAT_VERSION,
            kind: "ising".into(),
            n: self.n,
            linear: self.h.iter().map(|x| x.to_f64().unwrap()).collect(),
            quadratic: self
                .j
                .iter()
                .map(|(&(a, b), &v)| (a, b, v.to_f64().unwrap()))
                .collect(),
            offset: self.offset.to_f64().unwrap(),
        }
    }

    pub fn from_json(json: &ProblemJson) -> Result<Self> {
        let (h, j, offset) = problem_json_parts(json, "ising")?;
        Ok(IsingProblem {
            n: json.n,
            h,
            j,
            offset,
        })
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_json())?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let json: ProblemJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        IsingProblem::from_json(&json)
    }

    /// All ground states by exhaustive enumeration; energies within `tol` of
    /// the minimum count as degenerate ground states.
    pub fn brute_force_ground_states(&self, cap: usize, tol: F) -> Result<(Vec<BitVec>, F)> {
        if self.n > cap {
            return Err(Error::EnumerationCap {
                units: self.n,
                cap,
            });
        }
        let mut best = F::infinity();
        let mut energies = Vec::with_capacity(1usize << self.n);
        for idx in 0usize..1 << self.n {
            let e = self.energy(&BitVec::from_usize(idx, self.n))?;
            if e < best {
                best = e;
            }
            energies.push(e);
        }
        let states = energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| e <= best + tol)
            .map(|(idx, _)| BitVec::from_usize(idx, self.n))
            .collect();
        Ok((states, best))
    }
}

/// RBM energy rewritten as a QUBO: variable order is visible units then
/// hidden units, `linear = -bias`, `quadratic(v_j, h_i) = -w_ij`, offset 0.
pub fn rbm_to_qubo<F: Real>(model: &RbmModel<F>) -> QuboProblem<F> {
    let (n_v, n_h) = (model.n_v(), model.n_h());
    let mut q = QuboProblem::zeros(n_v + n_h);
    for j in 0..n_v {
        q.linear[j] = -model.visible_bias()[j];
    }
    for i in 0..n_h {
        q.linear[n_v + i] = -model.hidden_bias()[i];
    }
    for i in 0..n_h {
        for j in 0..n_v {
            let w = model.weights()[(i, j)];
            if w != F::zero() {
                q.set_quadratic(j, n_v + i, -w);
            }
        }
    }
    q
}

/// Substitution `x = (1 + s) / 2`; energies are preserved pointwise with the
/// constant terms folded into the Ising offset.
pub fn qubo_to_ising<F: Real>(q: &QuboProblem<F>) -> IsingProblem<F> {
    let half = real::<F>(0.5);
    let quarter = real::<F>(0.25);
    let mut ising = IsingProblem::zeros(q.n);
    let mut offset = q.offset;
    for (j, &lin) in q.linear.iter().enumerate() {
        ising.h[j] += lin * half;
        offset += lin * half;
    }
    for (&(a, b), &quad) in &q.quadratic {
        ising.h[a] += quad * quarter;
        ising.h[b] += quad * quarter;
        ising.j.insert((a, b), quad * quarter);
        offset += quad * quarter;
    }
    ising.offset = offset;
    ising
}

/// Divides all fields and couplers by `sf` (the offset is left alone).
pub fn scale_problem<F: Real>(p: &IsingProblem<F>, sf: F) -> Result<IsingProblem<F>> {
    if sf <= F::zero() || !sf.is_finite() {
        return Err(Error::NonPositiveScaleFactor(sf.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(IsingProblem {
        n: p.n,
        h: p.h.iter().map(|&x| x / sf).collect(),
        j: p.j.iter().map(|(&k, &v)| (k, v / sf)).collect(),
        offset: p.offset,
    })
}

/// Synthetic annealer working graph: undirected, no self-loops, every degree
/// at most `degree_cap`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HardwareGraph {
    pub nodes: usize,
    pub degree_cap: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl HardwareGraph {
    pub fn new(nodes: usize, degree_cap: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        let mut edges = BTreeSet::new();
        let mut degree = vec![0usize; nodes];
        for &(a, b) in edge_list {
            if a == b {
                return Err(Error::InvalidData(format!("self-loop on node {a}")));
            }
            if a >= nodes || b >= nodes {
                return Err(Error::InvalidData(format!("edge ({a},{b}) out of range")));
            }
            let key = (a.min(b), a.max(b));
            if edges.insert(key) {
                degree[a] += 1;
                degree[b] += 1;
            }
        }
        if let Some((node, &d)) = degree.iter().enumerate().find(|(_, &d)| d > degree_cap) {
            return Err(Error::InvalidData(format!(
                "node {node} has degree {d}, above cap {degree_cap}"
            )));
        }
        Ok(HardwareGraph {
            nodes,
            degree_cap,
            edges,
        })
    }

    /// Degree-capped lattice-like random graph: a square grid augmented with
    /// row/column express links and random chords until degrees approach the
    /// cap. Stands in for a physical qubit topology.
    pub fn synthetic<R: Rng>(nodes: usize, degree_cap: usize, rng: &mut R) -> Self {
        let side = (nodes as f64).sqrt().ceil() as usize;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut degree = vec![0usize; nodes];
        let mut seen = BTreeSet::new();
        let push = |a: usize, b: usize, degree: &mut Vec<usize>, edges: &mut Vec<(usize, usize)>, seen: &mut BTreeSet<(usize, usize)>| {
            if a == b || a >= nodes || b >= nodes {
                return;
            }
            if degree[a] >= degree_cap || degree[b] >= degree_cap {
                return;
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key) {
                degree[a] += 1;
                degree[b] += 1;
                edges.push(key);
            }
        };
        for r in 0..side {
            for c in 0..side {
                let id = r * side + c;
                if id >= nodes {
                    continue;
                }
                // grid links
                push(id, id + 1, &mut degree, &mut edges, &mut seen);
                if c + 1 >= side {
                    continue;
                }
                push(id, id + side, &mut degree, &mut edges, &mut seen);
            }
        }
        // The column link above is skipped for the last column; add it here.
        for r in 0..side {
            let id = r * side + (side - 1);
            push(id, id + side, &mut degree, &mut edges, &mut seen);
        }
        // Express links along rows and columns.
        for step in [2usize, 4, 8] {
            for r in 0..side {
                for c in 0..side {
                    let id = r * side + c;
                    if c + step < side {
                        push(id, id + step, &mut degree, &mut edges, &mut seen);
                    }
                    if r + step < side {
                        push(id, id + step * side, &mut degree, &mut edges, &mut seen);
                    }
                }
            }
        }
        // Random chords up to the cap.
        let budget = nodes * degree_cap / 2;
        for _ in 0..budget {
            let a = rng.gen_range(0..nodes);
            let b = rng.gen_range(0..nodes);
            push(a, b, &mut degree, &mut edges, &mut seen);
        }
        HardwareGraph::new(nodes, degree_cap, &edges).expect("construction respects the cap")
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Edge-list text format: first line `nodes degree_cap`, then one
    /// `u v` pair per line.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = format!("{} {}\n", self.nodes, self.degree_cap);
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    pub fn from_edge_list_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidData("empty hardware graph file".into()))?;
        let mut it = header.split_whitespace();
        let nodes: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidData("bad hardware graph header".into()))?;
        let cap: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidData("bad hardware graph header".into()))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let a: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidData(format!("bad edge line `{line}`")))?;
            let b: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InvalidData(format!("bad edge line `{line}`")))?;
            edges.push((a, b));
        }
        HardwareGraph::new(nodes, cap, &edges)
    }
}

/// Minor embedding: each logical unit is represented by an ordered chain of
/// physical nodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Embedding {
    /// `chains[u]` = physical nodes of logical unit `u`, in growth order.
    pub chains: Vec<Vec<usize>>,
}

impl Embedding {
    pub fn n_logical(&self) -> usize {
        self.chains.len()
    }

    pub fn max_chain_len(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn total_nodes(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    /// Identity embedding: logical unit `u` on physical node `u`.
    pub fn identity(n: usize) -> Self {
        Embedding {
            chains: (0..n).map(|u| vec![u]).collect(),
        }
    }

    /// Checks the three embedding invariants against a logical edge set:
    /// chains vertex-disjoint, each chain connected in the hardware graph,
    /// and every logical edge joined by at least one physical edge.
    pub fn validate(&self, logical_edges: &[(usize, usize)], hw: &HardwareGraph) -> Result<()> {
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (u, chain) in self.chains.iter().enumerate() {
            if chain.is_empty() {
                return Err(Error::InvalidEmbedding(format!("unit {u} has an empty chain")));
            }
            for &node in chain {
                if node >= hw.nodes {
                    return Err(Error::InvalidEmbedding(format!(
                        "unit {u} uses node {node} outside the hardware graph"
                    )));
                }
                if let Some(prev) = owner.insert(node, u) {
                    return Err(Error::InvalidEmbedding(format!(
                        "node {node} shared by units {prev} and {u}"
                    )));
                }
            }
            // connectivity within the chain
            let set: BTreeSet<usize> = chain.iter().copied().collect();
            let mut reached = BTreeSet::new();
            let mut queue = VecDeque::new();
            queue.push_back(chain[0]);
            reached.insert(chain[0]);
            let adj = hw.adjacency();
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if set.contains(&y) && reached.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
            if reached.len() != set.len() {
                return Err(Error::InvalidEmbedding(format!(
                    "chain of unit {u} is not connected"
                )));
            }
        }
        for &(a, b) in logical_edges {
            let joined = self.chains[a].iter().any(|&x| {
                self.chains[b].iter().any(|&y| hw.has_edge(x, y))
            });
            if !joined {
                return Err(Error::InvalidEmbedding(format!(
                    "logical edge ({a},{b}) has no physical edge between chains"
                )));
            }
        }
        Ok(())
    }

    /// JSON map `unit index (as string) -> node list`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: BTreeMap<String, Vec<usize>> = self
            .chains
            .iter()
            .enumerate()
            .map(|(u, c)| (u.to_string(), c.clone()))
            .collect();
        serde_json::to_value(map).expect("embedding serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let map: BTreeMap<String, Vec<usize>> = serde_json::from_value(value.clone())?;
        let n = map.len();
        let mut chains = vec![Vec::new(); n];
        for (k, v) in map {
            let u: usize = k
                .parse()
                .map_err(|_| Error::InvalidData(format!("bad unit key `{k}`")))?;
            if u >= n {
                return Err(Error::InvalidData(format!(
                    "unit key {u} out of range for {n} chains"
                )));
            }
            chains[u] = v;
        }
        Ok(Embedding { chains })
    }
}

/// Randomized greedy chain growth: place logical units in random order; for
/// each already-placed logical neighbor, grow the new unit's chain along a
/// shortest path of free nodes until some chain node touches the neighbor's
/// chain. Restarts keep the best embedding by max chain length.
pub fn find_embedding<R: Rng>(
    logical_edges: &[(usize, usize)],
    n_logical: usize,
    hw: &HardwareGraph,
    restarts: usize,
    rng: &mut R,
) -> Result<Embedding> {
    if n_logical > hw.nodes {
        return Err(Error::EmbeddingNotFound { restarts: 0 });
    }
    let adj = hw.adjacency();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n_logical];
    for &(a, b) in logical_edges {
        assert!(a != b && a < n_logical && b < n_logical, "bad logical edge");
        neighbors[a].push(b);
        neighbors[b].push(a);
    }

    let mut best: Option<Embedding> = None;
    for _ in 0..restarts.max(1) {
        if let Some(emb) = try_embed_once(&neighbors, n_logical, hw, &adj, rng) {
            debug_assert!(emb.validate(logical_edges, hw).is_ok());
            let better = match &best {
                None => true,
                Some(cur) => emb.max_chain_len() < cur.max_chain_len(),
            };
            if better {
                best = Some(emb);
            }
        }
    }
    best.ok_or(Error::EmbeddingNotFound { restarts })
}

fn try_embed_once<R: Rng>(
    neighbors: &[Vec<usize>],
    n_logical: usize,
    hw: &HardwareGraph,
    adj: &[Vec<usize>],
    rng: &mut R,
) -> Option<Embedding> {
    const FREE: usize = usize::MAX;
    let mut owner = vec![FREE; hw.nodes];
    let mut chains: Vec<Vec<usize>> = vec![Vec::new(); n_logical];

    let mut order: Vec<usize> = (0..n_logical).collect();
    // High-degree units first; random tie-break.
    order.shuffle(rng);
    order.sort_by_key(|&u| std::cmp::Reverse(neighbors[u].len()));

    let free_slots = |chain: &[usize], owner: &[usize]| -> usize {
        chain
            .iter()
            .map(|&cn| adj[cn].iter().filter(|&&x| owner[x] == FREE).count())
            .sum()
    };

    for &u in &order {
        let mut placed: Vec<usize> = neighbors[u]
            .iter()
            .copied()
            .filter(|&v| !chains[v].is_empty())
            .collect();

        // Root the chain next to a random placed neighbor.
        let root = {
            let mut candidates: Vec<usize> = Vec::new();
            if let Some(&v) = placed.choose(rng) {
                for &cn in &chains[v] {
                    for &x in &adj[cn] {
                        if owner[x] == FREE {
                            candidates.push(x);
                        }
                    }
                }
            }
            if candidates.is_empty() {
                candidates = (0..hw.nodes).filter(|&x| owner[x] == FREE).collect();
            }
            *candidates.choose(rng)?
        };
        owner[root] = u;
        chains[u].push(root);

        // Reserve capacity: a unit with logical degree d needs roughly
        // d / (degree_cap - 1) nodes before its chain can touch d others.
        let degree = neighbors[u].len();
        let target_len = degree.div_ceil(hw.degree_cap.saturating_sub(1).max(1))
            + usize::from(degree + 2 > hw.degree_cap);
        while chains[u].len() < target_len {
            let mut best: Option<(usize, usize)> = None; // (free-degree, node)
            for &cn in &chains[u] {
                for &x in &adj[cn] {
                    if owner[x] == FREE {
                        let fd = adj[x].iter().filter(|&&y| owner[y] == FREE).count();
                        if best.is_none_or(|(bfd, _)| fd > bfd) {
                            best = Some((fd, x));
                        }
                    }
                }
            }
            match best {
                Some((_, node)) => {
                    owner[node] = u;
                    chains[u].push(node);
                }
                None => break,
            }
        }

        // Connect to the scarcest neighbor chains first, while free paths
        // into their surroundings still exist.
        placed.sort_by_key(|&v| free_slots(&chains[v], &owner));
        for &v in &placed {
            if chain_touches(&chains[u], &chains[v], hw) {
                continue;
            }
            // BFS from u's chain through free nodes until adjacent to v's
            // chain, then split the connecting path between the two chains
            // so that heavily connected units can keep growing.
            let path = bfs_to_chain(&chains[u], v, &owner, adj)?;
            let mid = if path.len() == 1 {
                1
            } else {
                path.len() / 2
            };
            for &node in &path[..mid] {
                owner[node] = u;
                chains[u].push(node);
            }
            for &node in path[mid..].iter().rev() {
                owner[node] = v;
                chains[v].push(node);
            }
        }
    }
    Some(Embedding { chains })
}

fn chain_touches(a: &[usize], b: &[usize], hw: &HardwareGraph) -> bool {
    a.iter().any(|&x| b.iter().any(|&y| hw.has_edge(x, y)))
}

/// Shortest free-node path whose last node is adjacent to `target`'s chain,
/// starting from any node adjacent to the source chain. Returns the free
/// nodes to annex, in order.
fn bfs_to_chain(
    source_chain: &[usize],
    target: usize,
    owner: &[usize],
    adj: &[Vec<usize>],
) -> Option<Vec<usize>> {
    const FREE: usize = usize::MAX;
    let mut prev: Vec<Option<usize>> = vec![None; owner.len()];
    let mut visited = vec![false; owner.len()];
    let mut queue = VecDeque::new();
    for &cn in source_chain {
        visited[cn] = true;
    }
    for &cn in source_chain {
        for &x in &adj[cn] {
            if owner[x] == FREE && !visited[x] {
                visited[x] = true;
                queue.push_back(x);
            }
        }
    }
    while let Some(x) = queue.pop_front() {
        let reaches_target = adj[x].iter().any(|&y| owner[y] == target);
        if reaches_target {
            let mut path = vec![x];
            let mut cur = x;
            while let Some(p) = prev[cur] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &y in &adj[x] {
            if owner[y] == FREE && !visited[y] {
                visited[y] = true;
                prev[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    None
}

/// How a broken chain resolves to a logical value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainBreakPolicy {
    /// Strict majority; an exact tie goes to the first node in chain order.
    MajorityVote,
    /// Any break rejects the whole sample.
    Discard,
}

/// A logical Ising problem realized on hardware: the physical problem is
/// compacted to the nodes in use (variable `k` lives on `hw_nodes[k]`).
#[derive(Clone, Debug)]
pub struct EmbeddedProblem<F: Real> {
    pub physical: IsingProblem<F>,
    /// Chains re-indexed into the compact variable space.
    pub chains: Vec<Vec<usize>>,
    /// Hardware node backing each compact variable.
    pub hw_nodes: Vec<usize>,
}

/// Splits each logical field evenly across its chain, places each logical
/// coupler on one inter-chain physical edge, and ties chains together with
/// ferromagnetic couplers of the given strength.
pub fn embed_problem<F: Real>(
    p: &IsingProblem<F>,
    emb: &Embedding,
    chain_strength: F,
    hw: &HardwareGraph,
) -> Result<EmbeddedProblem<F>> {
    if emb.n_logical() != p.n {
        return Err(Error::DimensionMismatch {
            what: "embedding",
            expected: p.n,
            found: emb.n_logical(),
        });
    }
    if chain_strength.abs().to_f64().unwrap_or(f64::INFINITY) > COUPLER_RANGE {
        return Err(Error::CoefficientOutOfRange {
            what: "chain strength",
            value: chain_strength.to_f64().unwrap_or(f64::NAN),
            lo: -COUPLER_RANGE,
            hi: COUPLER_RANGE,
        });
    }
    let logical_edges: Vec<(usize, usize)> = p.j.keys().copied().collect();
    emb.validate(&logical_edges, hw)?;

    let mut hw_nodes: Vec<usize> = emb.chains.iter().flatten().copied().collect();
    hw_nodes.sort_unstable();
    let var_of: HashMap<usize, usize> = hw_nodes
        .iter()
        .enumerate()
        .map(|(k, &node)| (node, k))
        .collect();
    let chains: Vec<Vec<usize>> = emb
        .chains
        .iter()
        .map(|c| c.iter().map(|node| var_of[node]).collect())
        .collect();

    let mut physical = IsingProblem::zeros(hw_nodes.len());
    physical.offset = p.offset;

    for (u, chain) in chains.iter().enumerate() {
        let share = p.h[u] / real::<F>(chain.len() as f64);
        let share_f64 = share.to_f64().unwrap_or(f64::NAN);
        if !(-FIELD_RANGE..=FIELD_RANGE).contains(&share_f64) {
            return Err(Error::CoefficientOutOfRange {
                what: "embedded field",
                value: share_f64,
                lo: -FIELD_RANGE,
                hi: FIELD_RANGE,
            });
        }
        for &var in chain {
            physical.h[var] = share;
        }
        // Intra-chain ferromagnetic couplers along the growth order; the
        // chain is connected through consecutive-or-earlier hardware edges,
        // so couple each node to every adjacent earlier node of the chain.
        for (a_pos, &a) in chain.iter().enumerate() {
            for &b in chain.iter().take(a_pos) {
                if hw.has_edge(hw_nodes[a], hw_nodes[b]) {
                    physical.set_coupler(a, b, chain_strength);
                }
            }
        }
    }

    for (&(a, b), &coupler) in &p.j {
        let c_f64 = coupler.to_f64().unwrap_or(f64::NAN);
        if c_f64.abs() > COUPLER_RANGE {
            return Err(Error::CoefficientOutOfRange {
                what: "embedded coupler",
                value: c_f64,
                lo: -COUPLER_RANGE,
                hi: COUPLER_RANGE,
            });
        }
        // First physical edge joining the two chains, in deterministic order.
        let mut placed = false;
        'outer: for &x in &chains[a] {
            for &y in &chains[b] {
                if hw.has_edge(hw_nodes[x], hw_nodes[y]) {
                    physical.set_coupler(x, y, coupler);
                    placed = true;
                    break 'outer;
                }
            }
        }
        debug_assert!(placed, "validated embedding joins every logical edge");
    }

    Ok(EmbeddedProblem {
        physical,
        chains,
        hw_nodes,
    })
}

impl<F: Real> EmbeddedProblem<F> {
    pub fn n_logical(&self) -> usize {
        self.chains.len()
    }

    /// Saturated local fields forcing chained units to fixed values:
    /// every node of a clamped unit's chain gets `h = -4` to force bit 1,
    /// `h = +4` to force bit 0. Other coefficients are untouched.
    pub fn clamp_units(&self, assignments: &[(usize, bool)]) -> Result<IsingProblem<F>> {
        let mut clamped = self.physical.clone();
        for &(unit, bit) in assignments {
            if unit >= self.chains.len() {
                return Err(Error::UnitNotEmbedded(unit));
            }
            let field = if bit {
                real::<F>(-CLAMP_FIELD)
            } else {
                real::<F>(CLAMP_FIELD)
            };
            for &var in &self.chains[unit] {
                clamped.h[var] = field;
            }
        }
        Ok(clamped)
    }

    /// Resolves a physical state to logical bits.
    /// Returns `(logical_state_or_rejected, broken_chain_count)`.
    pub fn unembed_sample(
        &self,
        physical_state: &BitVec,
        policy: ChainBreakPolicy,
    ) -> Result<(Option<BitVec>, usize)> {
        if physical_state.len() != self.physical.n {
            return Err(Error::DimensionMismatch {
                what: "physical state",
                expected: self.physical.n,
                found: physical_state.len(),
            });
        }
        let mut logical = BitVec::zeros(self.chains.len());
        let mut broken = 0usize;
        for (u, chain) in self.chains.iter().enumerate() {
            let ones = chain.iter().filter(|&&var| physical_state.get(var)).count();
            let value = if ones == chain.len() {
                true
            } else if ones == 0 {
                false
            } else {
                broken += 1;
                match policy {
                    ChainBreakPolicy::Discard => return Ok((None, broken_total(self, physical_state))),
                    ChainBreakPolicy::MajorityVote => {
                        let zeros = chain.len() - ones;
                        if ones > zeros {
                            true
                        } else if zeros > ones {
                            false
                        } else {
                            // tie: first node in chain order wins
                            physical_state.get(chain[0])
                        }
                    }
                }
            };
            logical.set(u, value);
        }
        Ok((Some(logical), broken))
    }
}

fn broken_total<F: Real>(emb: &EmbeddedProblem<F>, state: &BitVec) -> usize {
    emb.chains
        .iter()
        .filter(|chain| {
            let ones = chain.iter().filter(|&&var| state.get(var)).count();
            ones != 0 && ones != chain.len()
        })
        .count()
}
