//! Hierarchical pivot construction of a `(1+eps)`-spanner for a directed disk
//! graph.
//!
//! Edges are bucketed by level and processed coarse to fine. Each level keeps
//! a pivot set (inherited from the previous level and only ever growing) and
//! an edge is added unless an already selected edge connects the close
//! neighborhoods of its endpoints' nearest pivots.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diskgraph::{DiskGraph, LevelStructure};
use crate::error::{Error, Result};
use crate::metric::{nearer, PivotSet};
use crate::params::Params;

/// Which rule admitted an edge: the target's radius reaches the level's lower
/// threshold (`big`) or it does not (`small`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsertionCase {
    Big,
    Small,
}

/// Which spanner an edge came from in the relaxed construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "H")]
    H,
    #[serde(rename = "H'")]
    HPrime,
    #[serde(rename = "both")]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpannerEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub level: usize,
    pub case: InsertionCase,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PivotEntry {
    pub point: usize,
    /// Level at which the point joined the pivot set.
    pub level: usize,
}

/// An input edge rejected because `blocker` already connected the two close
/// neighborhoods. The lightest available blocker is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockRecord {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub level: usize,
    pub blocker_source: usize,
    pub blocker_target: usize,
    pub blocker_weight: f64,
    pub blocker_level: usize,
}

/// Selected edges the blocking test may use.
///
/// Only the default keeps the stretch guarantee: an earlier-level blocker can
/// be far heavier than the edge it blocks, and a blocker whose head has a
/// small disk may sit almost `M_{i+1}` away from the target's pivot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockerScope {
    /// Every edge selected so far, at any level.
    AllSelected,
    /// Edges selected at the current level.
    CurrentLevel,
    /// Edges selected at the current level; a big-case edge is only blocked
    /// by a big-case edge.
    #[default]
    CurrentLevelBig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpannerOptions {
    pub blocker_scope: BlockerScope,
}

#[derive(Debug, Clone)]
pub struct Spanner {
    n: usize,
    edges: Vec<SpannerEdge>,
    pivots: Vec<PivotEntry>,
    blocked: Vec<BlockRecord>,
    active_levels: Vec<usize>,
    levels: LevelStructure,
    params: Params,
}

impl Spanner {
    pub fn point_count(&self) -> usize {
        self.n
    }

    /// Selected edges in insertion order.
    pub fn edges(&self) -> &[SpannerEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.source, e.target)).collect()
    }

    /// Pivots in insertion order with the level each joined at.
    pub fn pivot_history(&self) -> &[PivotEntry] {
        &self.pivots
    }

    /// `P_i`: every pivot that joined at level `i` or earlier.
    pub fn pivots_at(&self, level: usize) -> PivotSet {
        self.pivots
            .iter()
            .filter(|p| p.level <= level)
            .map(|p| p.point)
            .collect()
    }

    pub fn blocked(&self) -> &[BlockRecord] {
        &self.blocked
    }

    /// Levels that contained at least one input edge, ascending.
    pub fn active_levels(&self) -> &[usize] {
        &self.active_levels
    }

    pub fn levels(&self) -> &LevelStructure {
        &self.levels
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub(crate) fn set_origin(&mut self, origin: Origin) {
        for e in &mut self.edges {
            e.origin = origin;
        }
    }
}

/// Incrementally maintained nearest-pivot assignment. Pivots are only ever
/// added, so each insertion updates every point in `O(n)`.
#[derive(Debug, Clone)]
pub(crate) struct PivotState {
    nn: Vec<Option<usize>>,
    nn_dist: Vec<f64>,
    set: PivotSet,
}

impl PivotState {
    pub(crate) fn new(n: usize) -> Self {
        PivotState {
            nn: vec![None; n],
            nn_dist: vec![f64::INFINITY; n],
            set: PivotSet::new(),
        }
    }

    pub(crate) fn add(&mut self, g: &DiskGraph, p: usize) -> bool {
        if !self.set.insert(p) {
            return false;
        }
        for z in 0..self.nn.len() {
            let d = g.distance(z, p);
            if nearer(d, p, self.nn_dist[z], self.nn[z]) {
                self.nn[z] = Some(p);
                self.nn_dist[z] = d;
            }
        }
        true
    }

    #[inline]
    pub(crate) fn nearest(&self, z: usize) -> (Option<usize>, f64) {
        (self.nn[z], self.nn_dist[z])
    }

    /// `z` lies in the close neighborhood of `p`.
    #[inline]
    pub(crate) fn in_gamma(&self, g: &DiskGraph, z: usize, p: usize) -> bool {
        self.nn[z] == Some(p) && g.radius(z) >= self.nn_dist[z]
    }

    pub(crate) fn pivots(&self) -> &PivotSet {
        &self.set
    }
}

/// Close neighborhood of pivot `p` under `pivots`: the points whose nearest
/// pivot is `p` and whose disk reaches `p`. Computed from scratch.
pub fn close_neighborhood(g: &DiskGraph, pivots: &PivotSet, p: usize) -> Result<Vec<usize>> {
    if !pivots.contains(p) {
        return Err(Error::usage(format!("point {p} is not a pivot")));
    }
    let mut members = Vec::new();
    for x in 0..g.len() {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for &c in pivots.members() {
            let d = g.distance(x, c);
            if nearer(d, c, best_d, best) {
                best = Some(c);
                best_d = d;
            }
        }
        if best == Some(p) && g.radius(x) >= best_d {
            members.push(x);
        }
    }
    Ok(members)
}

pub fn disk_spanner(g: &DiskGraph, params: &Params) -> Result<Spanner> {
    disk_spanner_with(g, params, SpannerOptions::default())
}

/// Builds the spanner of a normalized disk graph (lightest edge weight 1).
pub fn disk_spanner_with(g: &DiskGraph, params: &Params, opts: SpannerOptions) -> Result<Spanner> {
    if !g.is_normalized() {
        return Err(Error::usage(format!(
            "disk graph must be normalized to minimum edge weight 1, got {:?}",
            g.min_edge_weight()
        )));
    }
    let ls = g.level_structure(params.alpha)?;
    let n = g.len();

    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (idx, e) in g.edges().iter().enumerate() {
        buckets.entry(ls.edge_level(e.weight)?).or_default().push(idx);
    }

    let mut state = PivotState::new(n);
    let mut pivots = Vec::new();
    let mut edges: Vec<SpannerEdge> = Vec::new();
    let mut out_sel: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut in_sel: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut blocked = Vec::new();
    let all = g.edges();

    for (&level, bucket) in buckets.iter_mut() {
        bucket.sort_by(|&a, &b| {
            let (ea, eb) = (&all[a], &all[b]);
            ea.weight
                .total_cmp(&eb.weight)
                .then(ea.source.cmp(&eb.source))
                .then(ea.target.cmp(&eb.target))
        });
        let lower = ls.threshold(level + 1);
        let separation = params.beta * lower;

        for &idx in bucket.iter() {
            let e = all[idx];
            let (x, y) = (e.source, e.target);

            if state.nearest(x).1 > separation && state.add(g, x) {
                pivots.push(PivotEntry { point: x, level });
            }
            let big = g.radius(y) >= lower;
            if big && state.nearest(y).1 > separation && state.add(g, y) {
                pivots.push(PivotEntry { point: y, level });
            }

            let in_scope = |k: usize, edges: &[SpannerEdge]| match opts.blocker_scope {
                BlockerScope::AllSelected => true,
                BlockerScope::CurrentLevel => edges[k].level == level,
                BlockerScope::CurrentLevelBig => {
                    edges[k].level == level && (!big || edges[k].case == InsertionCase::Big)
                }
            };
            let mut blocker: Option<usize> = None;
            let mut consider = |k: usize, edges: &[SpannerEdge]| {
                if blocker.is_none_or(|b| edges[k].weight < edges[b].weight) {
                    blocker = Some(k);
                }
            };
            let p = state.nearest(x).0.expect("source has a pivot after insertion");
            let case = if big {
                let q = state.nearest(y).0.expect("big target has a pivot after insertion");
                for z in (0..n).filter(|&z| state.in_gamma(g, z, p)) {
                    for &k in &out_sel[z] {
                        if in_scope(k, &edges) && state.in_gamma(g, edges[k].target, q) {
                            consider(k, &edges);
                        }
                    }
                }
                InsertionCase::Big
            } else {
                for &k in &in_sel[y] {
                    if in_scope(k, &edges) && state.in_gamma(g, edges[k].source, p) {
                        consider(k, &edges);
                    }
                }
                InsertionCase::Small
            };

            match blocker {
                Some(k) => {
                    let b = edges[k];
                    blocked.push(BlockRecord {
                        source: x,
                        target: y,
                        weight: e.weight,
                        level,
                        blocker_source: b.source,
                        blocker_target: b.target,
                        blocker_weight: b.weight,
                        blocker_level: b.level,
                    });
                }
                None => {
                    let k = edges.len();
                    edges.push(SpannerEdge {
                        source: x,
                        target: y,
                        weight: e.weight,
                        level,
                        case,
                        origin: Origin::H,
                    });
                    out_sel[x].push(k);
                    in_sel[y].push(k);
                }
            }
        }
    }
    debug_assert_eq!(state.pivots().len(), pivots.len());

    Ok(Spanner {
        n,
        edges,
        pivots,
        blocked,
        active_levels: buckets.keys().copied().collect(),
        levels: ls,
        params: *params,
    })
}
