//! Ground-truth checks: exact directed shortest paths, per-edge stretch
//! certification, size accounting and the pivot packing properties.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::Serialize;

use crate::diskgraph::DiskGraph;
use crate::error::{Error, Result};
use crate::metric::{approx_eq, REL_TOL};
use crate::params::Regime;
use crate::relaxed::RelaxedSpanner;
use crate::spanner::{BlockRecord, Spanner};

/// Directed graph with nonnegative edge weights, adjacency-list form.
#[derive(Debug, Clone, Default)]
pub struct WeightedDigraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedDigraph {
    pub fn new(n: usize) -> Self {
        WeightedDigraph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (s, t, w) in edges {
            g.add_edge(s, t, w)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, s: usize, t: usize, w: f64) -> Result<()> {
        if s >= self.adj.len() || t >= self.adj.len() {
            return Err(Error::usage(format!("edge ({s}, {t}) out of range")));
        }
        if !(w >= 0.0) {
            return Err(Error::usage(format!("edge ({s}, {t}) has negative weight {w}")));
        }
        self.adj[s].push((t, w));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn neighbors(&self, s: usize) -> &[(usize, f64)] {
        &self.adj[s]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPaths {
    pub source: usize,
    /// `+inf` where unreachable.
    pub dist: Vec<f64>,
    pub parent: Vec<Option<usize>>,
}

impl ShortestPaths {
    /// Vertices from the source to `t`, inclusive; empty if unreachable.
    pub fn path_to(&self, t: usize) -> Vec<usize> {
        if !self.dist[t].is_finite() {
            return Vec::new();
        }
        let mut path = vec![t];
        let mut cur = t;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `s`.
pub fn shortest_paths_from(g: &WeightedDigraph, s: usize) -> Result<ShortestPaths> {
    let n = g.len();
    if s >= n {
        return Err(Error::usage(format!("source {s} out of range")));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Frontier(0.0, s));
    while let Some(Frontier(d, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &(v, w) in g.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some(u);
                heap.push(Frontier(nd, v));
            }
        }
    }
    Ok(ShortestPaths {
        source: s,
        dist,
        parent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeStretch {
    pub source: usize,
    pub target: usize,
    pub direct: f64,
    pub spanner: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StretchReport {
    pub bound: f64,
    pub pass: bool,
    pub params_regime: Regime,
    pub edges_checked: usize,
    /// Base edges with no path at all in the spanner.
    pub unreachable: usize,
    pub max_ratio: f64,
    pub worst_edge: Option<(usize, usize)>,
    /// Spanner path realizing `max_ratio`.
    pub witness: Vec<usize>,
    pub witness_length: f64,
    pub sampled_pairs: usize,
    pub sampled_max_ratio: f64,
    pub sampled_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_edge: Option<Vec<EdgeStretch>>,
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub per_edge_table: bool,
    /// Sources used for the all-pairs spot check.
    pub sample_sources: usize,
    pub regime: Regime,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            per_edge_table: false,
            sample_sources: 16,
            regime: Regime::ProofSafe,
        }
    }
}

/// `ratio <= bound` with relative tolerance [`REL_TOL`].
pub fn within_bound(ratio: f64, bound: f64) -> bool {
    ratio <= bound * (1.0 + REL_TOL)
}

pub fn certify_stretch(
    base: &DiskGraph,
    h: &[(usize, usize)],
    allowed: &DiskGraph,
    bound: f64,
) -> Result<StretchReport> {
    certify_stretch_with(base, h, allowed, bound, CertifyOptions::default())
}

/// Certifies `d_h(x, y) <= bound * d(x, y)` for every edge `(x, y)` of `base`.
///
/// Every edge of `h` must be an edge of `allowed`; spanner lengths are metric
/// distances measured in `base`'s units.
pub fn certify_stretch_with(
    base: &DiskGraph,
    h: &[(usize, usize)],
    allowed: &DiskGraph,
    bound: f64,
    opts: CertifyOptions,
) -> Result<StretchReport> {
    let n = base.len();
    if allowed.len() != n {
        return Err(Error::usage("base and allowed graphs have different point counts"));
    }
    for &(s, t) in h {
        if !allowed.contains_edge(s, t) {
            return Err(Error::EdgeOutsideUniverse {
                source_id: s,
                target_id: t,
            });
        }
    }
    let hg = WeightedDigraph::from_edges(n, h.iter().map(|&(s, t)| (s, t, base.distance(s, t))))?;

    let sources: Vec<usize> = (0..n).filter(|&s| !base.out_edges(s).is_empty()).collect();
    let rows: Vec<Vec<EdgeStretch>> = sources
        .par_iter()
        .map(|&s| {
            let sp = shortest_paths_from(&hg, s).expect("source in range");
            base.out_edges(s)
                .iter()
                .map(|e| {
                    let direct = base.distance(s, e.target);
                    let spanner = sp.dist[e.target];
                    EdgeStretch {
                        source: s,
                        target: e.target,
                        direct,
                        spanner,
                        ratio: spanner / direct,
                    }
                })
                .collect()
        })
        .collect();

    let mut max_ratio = 1.0f64;
    let mut worst = None;
    let mut unreachable = 0;
    let mut checked = 0;
    for es in rows.iter().flatten() {
        checked += 1;
        if !es.spanner.is_finite() {
            unreachable += 1;
        }
        if worst.is_none() || es.ratio > max_ratio {
            max_ratio = es.ratio;
            worst = Some((es.source, es.target));
        }
    }
    let (witness, witness_length) = match worst {
        Some((s, t)) => {
            let sp = shortest_paths_from(&hg, s)?;
            (sp.path_to(t), sp.dist[t])
        }
        None => (Vec::new(), 0.0),
    };

    // all-pairs spot check on evenly spaced sources
    let base_g = WeightedDigraph::from_edges(
        n,
        base.edges().iter().map(|e| (e.source, e.target, base.distance(e.source, e.target))),
    )?;
    let stride = (n / opts.sample_sources.max(1)).max(1);
    let samples: Vec<(usize, f64)> = (0..n)
        .step_by(stride)
        .take(opts.sample_sources)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&s| {
            let in_base = shortest_paths_from(&base_g, s).expect("source in range");
            let in_h = shortest_paths_from(&hg, s).expect("source in range");
            let mut count = 0;
            let mut worst = 1.0f64;
            for t in 0..n {
                if t == s || !in_base.dist[t].is_finite() || base.contains_edge(s, t) {
                    continue;
                }
                count += 1;
                worst = worst.max(in_h.dist[t] / in_base.dist[t]);
            }
            (count, worst)
        })
        .collect();
    let sampled_pairs = samples.iter().map(|s| s.0).sum();
    let sampled_max_ratio = samples.iter().map(|s| s.1).fold(1.0, f64::max);

    Ok(StretchReport {
        bound,
        pass: unreachable == 0 && within_bound(max_ratio, bound),
        params_regime: opts.regime,
        edges_checked: checked,
        unreachable,
        max_ratio,
        worst_edge: worst,
        witness,
        witness_length,
        sampled_pairs,
        sampled_max_ratio,
        sampled_pass: within_bound(sampled_max_ratio, bound),
        per_edge: opts.per_edge_table.then(|| rows.into_iter().flatten().collect()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelCount {
    pub level: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IncomingExcess {
    pub point: usize,
    pub level: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeReport {
    pub n: usize,
    /// `L`.
    pub top_level: usize,
    pub total_edges: usize,
    /// Non-empty levels only.
    pub edges_per_level: Vec<LevelCount>,
    /// Largest number of edges entering one point at one level.
    pub max_incoming_per_point_level: usize,
    /// Pivot insertions per level, non-empty levels only.
    pub pivots_added_per_level: Vec<LevelCount>,
    pub total_pivots: usize,
    pub ratio_edges_over_n: f64,
    /// `((1+alpha)/beta + 3)^d` when a Euclidean dimension is known.
    pub incoming_bound: Option<f64>,
    pub incoming_violations: Vec<IncomingExcess>,
}

/// Anything whose edges can be counted by level.
pub trait SizeSource {
    fn point_count(&self) -> usize;
    fn top_level(&self) -> usize;
    /// `(source, target, level)` for every retained edge.
    fn leveled_edges(&self) -> Vec<(usize, usize, usize)>;
    fn pivot_levels(&self) -> Vec<usize>;
    fn alpha_beta(&self) -> (f64, f64);
}

impl SizeSource for Spanner {
    fn point_count(&self) -> usize {
        Spanner::point_count(self)
    }

    fn top_level(&self) -> usize {
        self.levels().top_level()
    }

    fn leveled_edges(&self) -> Vec<(usize, usize, usize)> {
        self.edges().iter().map(|e| (e.source, e.target, e.level)).collect()
    }

    fn pivot_levels(&self) -> Vec<usize> {
        self.pivot_history().iter().map(|p| p.level).collect()
    }

    fn alpha_beta(&self) -> (f64, f64) {
        (self.params().alpha, self.params().beta)
    }
}

impl SizeSource for RelaxedSpanner {
    fn point_count(&self) -> usize {
        self.h().point_count()
    }

    fn top_level(&self) -> usize {
        self.levels().top_level()
    }

    fn leveled_edges(&self) -> Vec<(usize, usize, usize)> {
        self.edges()
            .iter()
            .filter(|e| e.survived)
            .map(|e| (e.source, e.target, e.level))
            .collect()
    }

    fn pivot_levels(&self) -> Vec<usize> {
        self.h().pivot_history().iter().map(|p| p.level).collect()
    }

    fn alpha_beta(&self) -> (f64, f64) {
        (self.params().alpha, self.params().beta)
    }
}

fn level_counts(levels: impl IntoIterator<Item = usize>) -> Vec<LevelCount> {
    let mut map = BTreeMap::new();
    for l in levels {
        *map.entry(l).or_insert(0) += 1;
    }
    map.into_iter()
        .map(|(level, count)| LevelCount { level, count })
        .collect()
}

/// `dim` is the Euclidean dimension of the instance, if known; it enables the
/// per-(point, level) incoming bound.
pub fn size_report(h: &impl SizeSource, dim: Option<usize>) -> SizeReport {
    let n = h.point_count();
    let edges = h.leveled_edges();
    let mut incoming: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(_, t, l) in &edges {
        *incoming.entry((t, l)).or_insert(0) += 1;
    }
    let (alpha, beta) = h.alpha_beta();
    let incoming_bound = dim.map(|d| ((1.0 + alpha) / beta + 3.0).powi(d as i32));
    let incoming_violations = match incoming_bound {
        Some(b) => incoming
            .iter()
            .filter(|(_, &c)| c as f64 > b)
            .map(|(&(point, level), &count)| IncomingExcess { point, level, count })
            .collect(),
        None => Vec::new(),
    };
    let pivots = h.pivot_levels();
    SizeReport {
        n,
        top_level: if edges.is_empty() && pivots.is_empty() { 0 } else { h.top_level() },
        total_edges: edges.len(),
        edges_per_level: level_counts(edges.iter().map(|e| e.2)),
        max_incoming_per_point_level: incoming.values().copied().max().unwrap_or(0),
        total_pivots: pivots.len(),
        pivots_added_per_level: level_counts(pivots),
        ratio_edges_over_n: if n == 0 { 0.0 } else { edges.len() as f64 / n as f64 },
        incoming_bound,
        incoming_violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationViolation {
    pub a: usize,
    pub b: usize,
    pub level: usize,
    pub distance: f64,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub pairs_checked: usize,
    pub violations: Vec<SeparationViolation>,
}

/// Every pair of pivots in `P_i` must be more than `beta * M_{i+1}` apart, for
/// every level `i`. The requirement on a pair is strictest at the first level
/// where both are pivots, so each pair is checked there, which is exact.
pub fn check_pivot_separation(g: &DiskGraph, s: &Spanner) -> SeparationReport {
    let beta = s.params().beta;
    let piv = s.pivot_history();
    let mut violations = Vec::new();
    let mut pairs = 0;
    for (i, a) in piv.iter().enumerate() {
        for b in &piv[..i] {
            pairs += 1;
            let level = a.level.max(b.level);
            let required = beta * s.levels().threshold(level + 1);
            let distance = g.distance(a.point, b.point);
            if !(distance > required) {
                violations.push(SeparationViolation {
                    a: b.point,
                    b: a.point,
                    level,
                    distance,
                    required,
                });
            }
        }
    }
    SeparationReport {
        pairs_checked: pairs,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PackingViolation {
    pub center: usize,
    pub level: usize,
    pub radius: f64,
    pub count: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingReport {
    pub balls_checked: usize,
    pub max_count: usize,
    /// Largest `count / bound` seen.
    pub max_fill: f64,
    pub violations: Vec<PackingViolation>,
}

/// For each active level `i` and each given center, counts pivots of `P_i`
/// within `R = M_i + 2 beta M_{i+1}` and compares against the packing bound
/// `(2R / (beta M_{i+1}) + 1)^dim`.
pub fn check_packing(g: &DiskGraph, s: &Spanner, dim: usize, centers: &[usize]) -> PackingReport {
    let beta = s.params().beta;
    let ls = s.levels();
    let mut report = PackingReport {
        balls_checked: 0,
        max_count: 0,
        max_fill: 0.0,
        violations: Vec::new(),
    };
    for &level in s.active_levels() {
        let pivots = s.pivots_at(level);
        let sep = beta * ls.threshold(level + 1);
        let radius = ls.threshold(level) + 2.0 * sep;
        let bound = (2.0 * radius / sep + 1.0).powi(dim as i32);
        for &c in centers {
            let count = pivots
                .members()
                .iter()
                .filter(|&&p| g.distance(c, p) <= radius)
                .count();
            report.balls_checked += 1;
            report.max_count = report.max_count.max(count);
            report.max_fill = report.max_fill.max(count as f64 / bound);
            if count as f64 > bound {
                report.violations.push(PackingViolation {
                    center: c,
                    level,
                    radius,
                    count,
                    bound,
                });
            }
        }
    }
    report
}

/// Blocked edges whose recorded blocker is heavier than the edge itself.
pub fn blocker_minimality_violations(s: &Spanner) -> Vec<BlockRecord> {
    s.blocked()
        .iter()
        .filter(|b| b.blocker_weight > b.weight && !approx_eq(b.blocker_weight, b.weight))
        .copied()
        .collect()
}

/// Pairs of `h` missing from `universe`.
pub fn edges_outside(h: &[(usize, usize)], universe: &DiskGraph) -> Vec<(usize, usize)> {
    h.iter()
        .copied()
        .filter(|&(s, t)| !universe.contains_edge(s, t))
        .collect()
}
