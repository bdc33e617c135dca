//! Directed weighted interaction graphs over the leader `v0` and followers
//! `v1..vn`, their Laplacians, and piecewise-constant switching signals.
//!
//! Weights follow the receiving-row convention: `a[(i, j)] > 0` means node
//! `i` obtains information from node `j` (edge `vj -> vi`).

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_min_eig;

/// Index of the leader node.
pub const LEADER: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    weights: DMatrix<f64>,
}

/// One directed edge `src -> dst` carrying `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

impl DirectedGraph {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() || weights.nrows() == 0 {
            return Err(Error::invalid(format!(
                "adjacency must be square and nonempty, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for i in 0..weights.nrows() {
            for j in 0..weights.ncols() {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::invalid(format!("weight a[{i},{j}] = {w} is not a nonnegative real")));
                }
                if i == j && w != 0.0 {
                    return Err(Error::invalid(format!("self loop on node {i}")));
                }
            }
        }
        Ok(Self { weights })
    }

    /// Graph over the leader and `n_followers` followers with no edges.
    pub fn empty(n_followers: usize) -> Self {
        let n = n_followers + 1;
        Self {
            weights: DMatrix::zeros(n, n),
        }
    }

    pub fn from_edges(n_followers: usize, edges: &[Edge]) -> Result<Self> {
        let n = n_followers + 1;
        let mut weights = DMatrix::zeros(n, n);
        for e in edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::invalid(format!(
                    "edge {} -> {} references a node outside 0..{}",
                    e.src,
                    e.dst,
                    n - 1
                )));
            }
            weights[(e.dst, e.src)] = e.weight;
        }
        Self::new(weights)
    }

    pub fn node_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_followers(&self) -> usize {
        self.node_count() - 1
    }

    /// `a_ij`: weight of the edge `vj -> vi`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn edges(&self) -> Vec<Edge> {
        let n = self.node_count();
        let mut out = Vec::new();
        for src in 0..n {
            for dst in 0..n {
                let w = self.weights[(dst, src)];
                if w > 0.0 {
                    out.push(Edge { src, dst, weight: w });
                }
            }
        }
        out
    }

    /// In-neighbours of `i` with their weights.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let row = self.weights.row(i);
        row.iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(j, w)| (j, *w))
            .collect::<Vec<_>>()
            .into_iter()
    }

    pub fn in_degree(&self, i: usize) -> f64 {
        self.weights.row(i).sum()
    }

    /// Returns a copy where every follower that senses the leader directly in
    /// `sensing` also receives the leader's state over this graph.
    pub fn with_leader_pinning(&self, sensing: &DirectedGraph) -> DirectedGraph {
        let mut w = self.weights.clone();
        for i in 1..self.node_count().min(sensing.node_count()) {
            let a = sensing.weight(i, LEADER);
            if a > 0.0 {
                w[(i, LEADER)] = a;
            }
        }
        DirectedGraph { weights: w }
    }

    /// Serializes as `# nodes: N` followed by `src dst weight` lines.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# nodes: {}\n", self.node_count());
        for e in self.edges() {
            let _ = writeln!(s, "{} {} {}", e.src, e.dst, e.weight);
        }
        s
    }

    /// Parses an edge list. The node count comes from a `# nodes: N` comment
    /// when present, otherwise from the largest index seen.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut declared = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(rest) = comment.trim().strip_prefix("nodes:") {
                    let n: usize = rest
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(format!("line {}: bad node count", lineno + 1)))?;
                    declared = Some(n);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::parse(format!(
                    "line {}: expected `src dst weight`, got `{line}`",
                    lineno + 1
                )));
            }
            let bad = |what: &str| Error::parse(format!("line {}: bad {what}", lineno + 1));
            let src: usize = fields[0].parse().map_err(|_| bad("src"))?;
            let dst: usize = fields[1].parse().map_err(|_| bad("dst"))?;
            let weight: f64 = fields[2].parse().map_err(|_| bad("weight"))?;
            edges.push(Edge { src, dst, weight });
        }
        let inferred = edges.iter().map(|e| e.src.max(e.dst) + 1).max().unwrap_or(1);
        let nodes = declared.unwrap_or(inferred);
        if nodes == 0 || nodes < inferred {
            return Err(Error::parse(format!(
                "declared {nodes} nodes but edges reference node {}",
                inferred - 1
            )));
        }
        Self::from_edges(nodes - 1, &edges)
    }
}

/// Laplacian of a graph with the leader-first block partition
/// `L = [[l00, l01], [L21, L22]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPartition {
    pub l: DMatrix<f64>,
    /// Follower rows, leader column (n x 1).
    pub l21: DVector<f64>,
    /// Follower-follower block (n x n).
    pub l22: DMatrix<f64>,
}

impl LaplacianPartition {
    pub fn n_followers(&self) -> usize {
        self.l22.nrows()
    }
}

pub fn laplacian(g: &DirectedGraph) -> LaplacianPartition {
    let n = g.node_count();
    let a = g.weights();
    let mut l = -a.clone();
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&k| k != i).map(|k| a[(i, k)]).sum();
        l[(i, i)] = row_sum;
    }
    let l21 = l.view((1, 0), (n - 1, 1)).column(0).into_owned();
    let l22 = l.view((1, 1), (n - 1, n - 1)).into_owned();
    LaplacianPartition { l, l21, l22 }
}

/// True iff every node is reachable from `root` along directed edges.
pub fn has_rooted_spanning_tree(g: &DirectedGraph, root: usize) -> bool {
    let n = g.node_count();
    if root >= n {
        return false;
    }
    reachable_count(n, root, |dst, src| g.weight(dst, src) > 0.0) == n
}

fn reachable_count(n: usize, root: usize, edge: impl Fn(usize, usize) -> bool) -> usize {
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut frontier = VecDeque::from([root]);
    let mut count = 1;
    while let Some(src) = frontier.pop_front() {
        for dst in 0..n {
            if !seen[dst] && edge(dst, src) {
                seen[dst] = true;
                count += 1;
                frontier.push_back(dst);
            }
        }
    }
    count
}

/// Positive diagonal scaling that makes `Gamma L22 + L22^T Gamma` positive
/// definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCertificate {
    pub gamma: Vec<f64>,
    /// Smallest eigenvalue of `Gamma L22 + L22^T Gamma`.
    pub min_eig: f64,
    /// Largest eigenvalue of `Gamma L22 + L22^T Gamma`.
    pub max_eig: f64,
    pub gamma_bar: f64,
    pub gamma_underbar: f64,
    /// Which construction produced the certificate.
    pub method: GammaMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMethod {
    /// `Gamma = diag(p)` with `L22^T p = 1`.
    LeftPerron,
    /// `Gamma = diag(p_i / q_i)` with `L22^T p = 1`, `L22 q = 1`.
    LeftRightRatio,
    CoordinateSearch,
}

impl GammaCertificate {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.gamma))
    }
}

/// `Gamma L22 + L22^T Gamma` for a diagonal `gamma`.
pub fn gamma_form(l22: &DMatrix<f64>, gamma: &[f64]) -> DMatrix<f64> {
    let n = l22.nrows();
    DMatrix::from_fn(n, n, |i, j| gamma[i] * l22[(i, j)] + l22[(j, i)] * gamma[j])
}

fn certify_candidate(l22: &DMatrix<f64>, gamma: &[f64]) -> Option<(Vec<f64>, f64)> {
    if gamma.iter().any(|g| !g.is_finite() || *g <= 0.0) {
        return None;
    }
    let top = gamma.iter().copied().fold(f64::MIN, f64::max);
    let scaled: Vec<f64> = gamma.iter().map(|g| g / top).collect();
    let min_eig = sym_min_eig(&gamma_form(l22, &scaled));
    Some((scaled, min_eig))
}

fn positivity_floor(l22: &DMatrix<f64>) -> f64 {
    1e-12 * l22.norm().max(1e-300)
}

pub fn solve_gamma(part: &LaplacianPartition) -> Result<GammaCertificate> {
    let n = part.n_followers();
    if n == 0 {
        return Err(Error::NoSpanningTree);
    }
    let nodes = part.l.nrows();
    let leader_has_inputs = (1..nodes).any(|j| part.l[(LEADER, j)] != 0.0);
    let spans = reachable_count(nodes, LEADER, |dst, src| dst != src && part.l[(dst, src)] < 0.0) == nodes;
    if leader_has_inputs || !spans {
        return Err(Error::NoSpanningTree);
    }

    let l22 = &part.l22;
    let floor = positivity_floor(l22);
    let ones = DVector::from_element(n, 1.0);
    let lu_t = l22.transpose().lu();
    let lu = l22.clone().lu();
    let p = lu_t
        .solve(&ones)
        .ok_or_else(|| Error::NumericalFailure("L22 is singular".into()))?;

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |cand: Option<(Vec<f64>, f64)>, method: GammaMethod| -> Option<GammaCertificate> {
        let (gamma, min_eig) = cand?;
        if min_eig > floor {
            return Some(finish(l22, gamma, method));
        }
        if best.as_ref().is_none_or(|b| min_eig > b.1) {
            best = Some((gamma, min_eig));
        }
        None
    };

    if let Some(cert) = consider(certify_candidate(l22, p.as_slice()), GammaMethod::LeftPerron) {
        return Ok(cert);
    }
    if let Some(q) = lu.solve(&ones) {
        let ratio: Vec<f64> = p.iter().zip(q.iter()).map(|(pi, qi)| pi / qi).collect();
        if let Some(cert) = consider(certify_candidate(l22, &ratio), GammaMethod::LeftRightRatio) {
            return Ok(cert);
        }
    }

    let start = best.map(|b| b.0).unwrap_or_else(|| vec![1.0; n]);
    let (gamma, min_eig) = coordinate_search(l22, start);
    if min_eig > floor {
        Ok(finish(l22, gamma, GammaMethod::CoordinateSearch))
    } else {
        Err(Error::NumericalFailure(format!(
            "no diagonal scaling certified positivity (best min eigenvalue {min_eig:e})"
        )))
    }
}

fn finish(l22: &DMatrix<f64>, gamma: Vec<f64>, method: GammaMethod) -> GammaCertificate {
    let top = gamma.iter().copied().fold(f64::MIN, f64::max);
    let gamma: Vec<f64> = gamma.iter().map(|g| g / top).collect();
    let form = gamma_form(l22, &gamma);
    let eig = crate::linalg::sym_eigenvalues(&form);
    GammaCertificate {
        gamma_bar: gamma.iter().copied().fold(f64::MIN, f64::max),
        gamma_underbar: gamma.iter().copied().fold(f64::MAX, f64::min),
        min_eig: eig[0],
        max_eig: eig[eig.len() - 1],
        gamma,
        method,
    }
}

/// Multiplicative coordinate ascent on `lambda_min`, followed by seeded
/// random perturbations.
fn coordinate_search(l22: &DMatrix<f64>, start: Vec<f64>) -> (Vec<f64>, f64) {
    let score = |g: &[f64]| sym_min_eig(&gamma_form(l22, g));
    let mut gamma = start;
    let mut current = score(&gamma);
    let factors = [0.25, 0.5, 0.8, 0.95, 1.05, 1.25, 2.0, 4.0];
    for _ in 0..200 {
        let mut improved = false;
        for i in 0..gamma.len() {
            for f in factors {
                let old = gamma[i];
                gamma[i] = old * f;
                let s = score(&gamma);
                if s > current {
                    current = s;
                    improved = true;
                } else {
                    gamma[i] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a6d);
    for _ in 0..2000 {
        let trial: Vec<f64> = gamma.iter().map(|g| g * rng.gen_range(0.5..2.0)).collect();
        let s = score(&trial);
        if s > current {
            current = s;
            gamma = trial;
        }
    }
    (gamma, current)
}

/// Piecewise-constant, right-continuous topology selector.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal {
    topologies: Vec<DirectedGraph>,
    schedule: Vec<(f64, usize)>,
    dwell_floor: f64,
}

impl SwitchingSignal {
    pub fn new(topologies: Vec<DirectedGraph>, schedule: Vec<(f64, usize)>, dwell_floor: f64) -> Result<Self> {
        if topologies.is_empty() {
            return Err(Error::invalid("switching signal needs at least one topology"));
        }
        let nodes = topologies[0].node_count();
        if topologies.iter().any(|g| g.node_count() != nodes) {
            return Err(Error::invalid("all topologies must share the same node set"));
        }
        if schedule.is_empty() {
            return Err(Error::invalid("schedule must contain at least one entry"));
        }
        if schedule[0].0 > 0.0 {
            return Err(Error::invalid("schedule must start at or before t = 0"));
        }
        if !(dwell_floor >= 0.0) {
            return Err(Error::invalid("dwell floor must be nonnegative"));
        }
        for &(t, idx) in &schedule {
            if !t.is_finite() {
                return Err(Error::invalid("switch times must be finite"));
            }
            if idx >= topologies.len() {
                return Err(Error::invalid(format!(
                    "topology index {idx} out of range (have {})",
                    topologies.len()
                )));
            }
        }
        for w in schedule.windows(2) {
            if w[1].0 - w[0].0 <= dwell_floor {
                return Err(Error::invalid(format!(
                    "switches at {} and {} are not separated by more than the dwell floor {}",
                    w[0].0, w[1].0, dwell_floor
                )));
            }
        }
        Ok(Self {
            topologies,
            schedule,
            dwell_floor,
        })
    }

    pub fn fixed(g: DirectedGraph) -> Self {
        Self {
            topologies: vec![g],
            schedule: vec![(0.0, 0)],
            dwell_floor: 0.0,
        }
    }

    /// Round-robin over all topologies, switching every `period` seconds on
    /// `[0, horizon]`.
    pub fn periodic(topologies: Vec<DirectedGraph>, period: f64, horizon: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::invalid("switching period must be positive"));
        }
        let m = topologies.len();
        let count = (horizon / period).floor().max(0.0) as usize;
        let schedule = (0..=count).map(|k| (k as f64 * period, k % m.max(1))).collect();
        Self::new(topologies, schedule, 0.0)
    }

    pub fn topologies(&self) -> &[DirectedGraph] {
        &self.topologies
    }

    pub fn schedule(&self) -> &[(f64, usize)] {
        &self.schedule
    }

    pub fn dwell_floor(&self) -> f64 {
        self.dwell_floor
    }

    pub fn index_at(&self, t: f64) -> usize {
        let pos = self.schedule.partition_point(|&(ts, _)| ts <= t);
        self.schedule[pos.saturating_sub(1)].1
    }

    pub fn switch_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.schedule.iter().skip(1).map(|&(t, _)| t)
    }

    /// Shortest interval between consecutive switches; infinite when the
    /// topology never changes.
    pub fn min_spacing(&self) -> f64 {
        self.schedule
            .windows(2)
            .map(|w| w[1].0 - w[0].0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn schedule_text(&self) -> String {
        self.schedule.iter().map(|(t, i)| format!("{t} {i}\n")).collect()
    }

    pub fn parse_schedule(text: &str) -> Result<Vec<(f64, usize)>> {
        let mut out = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(t), Some(i), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::parse(format!("line {}: expected `time index`", lineno + 1)));
            };
            let t: f64 = t
                .parse()
                .map_err(|_| Error::parse(format!("line {}: bad time", lineno + 1)))?;
            let i: usize = i
                .parse()
                .map_err(|_| Error::parse(format!("line {}: bad index", lineno + 1)))?;
            out.push((t, i));
        }
        Ok(out)
    }
}

pub fn topology_at(sig: &SwitchingSignal, t: f64) -> &DirectedGraph {
    &sig.topologies[sig.index_at(t)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, w: f64) -> DirectedGraph {
        let edges: Vec<Edge> = (0..n).map(|i| Edge { src: i, dst: i + 1, weight: w }).collect();
        DirectedGraph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn laplacian_of_edgeless_graph_is_zero() {
        let part = laplacian(&DirectedGraph::empty(3));
        assert!(part.l.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn laplacian_single_edge() {
        let part = laplacian(&chain(1, 5.0));
        assert_eq!(part.l, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -5.0, 5.0]));
        assert_eq!(part.l22, DMatrix::from_element(1, 1, 5.0));
        assert_eq!(part.l21[0], -5.0);
    }

    #[test]
    fn laplacian_two_hop_chain() {
        let part = laplacian(&chain(2, 5.0));
        assert_eq!(part.l22, DMatrix::from_row_slice(2, 2, &[5.0, 0.0, -5.0, 5.0]));
    }

    #[test]
    fn rejects_negative_and_self_weights() {
        let mut w = DMatrix::zeros(2, 2);
        w[(1, 0)] = -1.0;
        assert!(DirectedGraph::new(w).is_err());
        let mut w = DMatrix::zeros(2, 2);
        w[(1, 1)] = 1.0;
        assert!(DirectedGraph::new(w).is_err());
    }

    #[test]
    fn spanning_tree_cases() {
        assert!(has_rooted_spanning_tree(&DirectedGraph::empty(0), 0));
        assert!(has_rooted_spanning_tree(&chain(2, 1.0), 0));
        let split = DirectedGraph::from_edges(2, &[Edge { src: 1, dst: 2, weight: 1.0 }]).unwrap();
        assert!(!has_rooted_spanning_tree(&split, 0));
        assert!(!has_rooted_spanning_tree(&split, 7));
    }

    #[test]
    fn gamma_scalar_case() {
        let cert = solve_gamma(&laplacian(&chain(1, 5.0))).unwrap();
        assert_eq!(cert.gamma, vec![1.0]);
        assert!((cert.min_eig - 10.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_rejects_disconnected_followers() {
        let split = DirectedGraph::from_edges(2, &[Edge { src: 0, dst: 1, weight: 1.0 }]).unwrap();
        assert!(matches!(solve_gamma(&laplacian(&split)), Err(Error::NoSpanningTree)));
    }

    #[test]
    fn gamma_rejects_leader_with_inputs() {
        let g = DirectedGraph::from_edges(
            1,
            &[Edge { src: 0, dst: 1, weight: 1.0 }, Edge { src: 1, dst: 0, weight: 1.0 }],
        )
        .unwrap();
        assert!(matches!(solve_gamma(&laplacian(&g)), Err(Error::NoSpanningTree)));
    }

    #[test]
    fn coordinate_search_recovers_from_bad_start() {
        let l22 = laplacian(&chain(4, 5.0)).l22;
        let (g, eig) = coordinate_search(&l22, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(eig > 0.0, "{g:?} {eig}");
    }

    #[test]
    fn topology_lookup_is_right_continuous() {
        let g0 = DirectedGraph::empty(1);
        let g1 = chain(1, 1.0);
        let sig = SwitchingSignal::new(vec![g0.clone(), g1.clone()], vec![(0.0, 0)], 0.0).unwrap();
        assert_eq!(topology_at(&sig, 7.0), &g0);
        let sig = SwitchingSignal::new(vec![g0.clone(), g1.clone()], vec![(0.0, 0), (1.0, 1)], 0.0).unwrap();
        assert_eq!(sig.index_at(0.999), 0);
        assert_eq!(topology_at(&sig, 1.0), &g1);
    }

    #[test]
    fn periodic_round_robin() {
        let gs = vec![DirectedGraph::empty(1), chain(1, 1.0), chain(1, 2.0)];
        let sig = SwitchingSignal::periodic(gs, 1.0, 10.0).unwrap();
        // segments [0,1) -> 0, [1,2) -> 1, [2,3) -> 2
        assert_eq!(sig.index_at(2.5), 2);
        assert_eq!(sig.index_at(3.0), 0);
        assert_eq!(sig.min_spacing(), 1.0);
    }

    #[test]
    fn schedule_rejects_dwell_violation_and_bad_index() {
        let gs = vec![DirectedGraph::empty(1), chain(1, 1.0)];
        assert!(SwitchingSignal::new(gs.clone(), vec![(0.0, 0), (0.5, 1)], 0.5).is_err());
        assert!(SwitchingSignal::new(gs, vec![(0.0, 3)], 0.0).is_err());
    }

    #[test]
    fn edge_list_parse_errors() {
        assert!(DirectedGraph::parse_edge_list("0 1").is_err());
        assert!(DirectedGraph::parse_edge_list("0 x 1").is_err());
        assert!(DirectedGraph::parse_edge_list("# nodes: 2\n0 3 1").is_err());
        let g = DirectedGraph::parse_edge_list("# a comment\n0 1 5\n\n1 2 2.5\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.weight(2, 1), 2.5);
    }

    #[test]
    fn schedule_text_roundtrip() {
        let gs = vec![DirectedGraph::empty(1), chain(1, 1.0)];
        let sig = SwitchingSignal::new(gs, vec![(0.0, 0), (1.5, 1), (3.25, 0)], 0.0).unwrap();
        let parsed = SwitchingSignal::parse_schedule(&sig.schedule_text()).unwrap();
        assert_eq!(parsed, sig.schedule());
    }
}
