//! Relaxed construction: spanners of both `I` and the inflated graph `I'`,
//! their union, then per-target pruning of incoming edges from levels far
//! below the target's own level.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::diskgraph::{build_disk_graph, inflate_radii, normalize, DiskGraph, LevelStructure, RadiusAssignment};
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::params::Params;
use crate::spanner::{disk_spanner_with, InsertionCase, Origin, Spanner, SpannerOptions};

/// A union edge. `weight` is in the original (unnormalized) units and `level`
/// is measured against the level structure of `I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxedEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    pub level: usize,
    pub case: InsertionCase,
    pub origin: Origin,
    pub survived: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointPrune {
    pub point: usize,
    pub point_level: usize,
    /// Distinct non-empty incoming levels below `point_level`, nearest first.
    pub below_levels: Vec<usize>,
    pub kept_levels: Vec<usize>,
    pub kept: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PruneTrace {
    /// `4 * gamma`.
    pub quota: usize,
    pub points: Vec<PointPrune>,
}

impl PruneTrace {
    /// No point lost any edge.
    pub fn is_vacuous(&self) -> bool {
        self.points.iter().all(|p| p.dropped == 0)
    }

    pub fn dropped(&self) -> usize {
        self.points.iter().map(|p| p.dropped).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Pruned {
    /// The input edges with `survived` set.
    pub edges: Vec<RelaxedEdge>,
    pub trace: PruneTrace,
}

/// Keeps, for each target `q`, every incoming edge at level `>= l(q)` and the
/// edges of the first `4 * gamma` non-empty levels below `l(q)`, scanned from
/// `l(q) - 1` downward. `point_levels[q]` is `l(q)`. Edges already marked as
/// dropped are ignored.
pub fn prune(edges: &[RelaxedEdge], point_levels: &[usize], gamma: usize) -> Result<Pruned> {
    if gamma < 1 {
        return Err(Error::usage("gamma must be at least 1"));
    }
    let quota = gamma.saturating_mul(4);
    let n = point_levels.len();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        if e.target >= n {
            return Err(Error::usage(format!("edge target {} out of range", e.target)));
        }
        if e.survived {
            incoming[e.target].push(k);
        }
    }

    let decisions: Vec<(PointPrune, Vec<(usize, bool)>)> = incoming
        .par_iter()
        .enumerate()
        .map(|(q, ks)| {
            let lq = point_levels[q];
            let mut below: Vec<usize> = ks
                .iter()
                .map(|&k| edges[k].level)
                .filter(|&l| l < lq)
                .collect();
            below.sort_unstable_by(|a, b| b.cmp(a));
            below.dedup();
            let kept_levels: Vec<usize> = below.iter().copied().take(quota).collect();
            let floor = kept_levels.last().copied();
            let verdicts: Vec<(usize, bool)> = ks
                .iter()
                .map(|&k| {
                    let l = edges[k].level;
                    (k, l >= lq || floor.is_some_and(|f| l >= f))
                })
                .collect();
            let kept = verdicts.iter().filter(|v| v.1).count();
            let record = PointPrune {
                point: q,
                point_level: lq,
                below_levels: below,
                kept_levels,
                kept,
                dropped: verdicts.len() - kept,
            };
            (record, verdicts)
        })
        .collect();

    let mut out = edges.to_vec();
    let mut points = Vec::with_capacity(n);
    for (record, verdicts) in decisions {
        for (k, keep) in verdicts {
            out[k].survived = keep;
        }
        points.push(record);
    }
    Ok(Pruned {
        edges: out,
        trace: PruneTrace { quota, points },
    })
}

#[derive(Debug, Clone)]
pub struct RelaxedSpanner {
    edges: Vec<RelaxedEdge>,
    params: Params,
    levels: LevelStructure,
    divisor: f64,
    point_levels: Vec<usize>,
    trace: PruneTrace,
    h: Spanner,
    h_prime: Spanner,
    base: DiskGraph,
    inflated: DiskGraph,
}

impl RelaxedSpanner {
    /// Every union edge, ordered by source then target, with its prune verdict.
    pub fn edges(&self) -> &[RelaxedEdge] {
        &self.edges
    }

    pub fn retained(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .filter(|e| e.survived)
            .map(|e| (e.source, e.target))
            .collect()
    }

    pub fn retained_len(&self) -> usize {
        self.edges.iter().filter(|e| e.survived).count()
    }

    pub fn union_len(&self) -> usize {
        self.edges.len()
    }

    pub fn gamma(&self) -> usize {
        self.params.gamma
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Level structure of normalized `I`, shared by every union edge.
    pub fn levels(&self) -> &LevelStructure {
        &self.levels
    }

    /// Normalization divisor of `I`.
    pub fn divisor(&self) -> f64 {
        self.divisor
    }

    /// `l(q)` from the radii before inflation.
    pub fn point_levels(&self) -> &[usize] {
        &self.point_levels
    }

    pub fn trace(&self) -> &PruneTrace {
        &self.trace
    }

    pub fn h(&self) -> &Spanner {
        &self.h
    }

    pub fn h_prime(&self) -> &Spanner {
        &self.h_prime
    }

    /// Normalized `I`.
    pub fn base(&self) -> &DiskGraph {
        &self.base
    }

    /// Normalized `I'`.
    pub fn inflated(&self) -> &DiskGraph {
        &self.inflated
    }

    /// Re-derives every pruning property from the finished edge list.
    pub fn check_prune_structure(&self) -> PruneCheck {
        check_prune_structure(&self.edges, &self.point_levels, self.params.gamma)
    }
}

pub fn build_relaxed_spanner(
    metric: impl Into<Arc<Metric>>,
    r: &RadiusAssignment,
    params: &Params,
) -> Result<RelaxedSpanner> {
    build_relaxed_spanner_with(metric, r, params, SpannerOptions::default())
}

pub fn build_relaxed_spanner_with(
    metric: impl Into<Arc<Metric>>,
    r: &RadiusAssignment,
    params: &Params,
    opts: SpannerOptions,
) -> Result<RelaxedSpanner> {
    let metric = metric.into();
    let inflated_r = inflate_radii(r, params.eps);
    let (base, inflated) = rayon::join(
        || build_disk_graph(metric.clone(), r).and_then(|g| normalize(&g)),
        || build_disk_graph(metric.clone(), &inflated_r).and_then(|g| normalize(&g)),
    );
    let (base, _) = base?;
    let (inflated, _) = inflated?;
    let (h, h_prime) = rayon::join(
        || disk_spanner_with(&base, params, opts),
        || disk_spanner_with(&inflated, params, opts),
    );
    let mut h = h?;
    let mut h_prime = h_prime?;
    h.set_origin(Origin::H);
    h_prime.set_origin(Origin::HPrime);

    let levels = h.levels().clone();
    let mut union: BTreeMap<(usize, usize), RelaxedEdge> = BTreeMap::new();
    for e in h.edges() {
        union.insert(
            (e.source, e.target),
            RelaxedEdge {
                source: e.source,
                target: e.target,
                weight: metric.distance(e.source, e.target),
                level: levels.clamped_level(base.distance(e.source, e.target)),
                case: e.case,
                origin: Origin::H,
                survived: true,
            },
        );
    }
    for e in h_prime.edges() {
        union
            .entry((e.source, e.target))
            .and_modify(|u| u.origin = Origin::Both)
            .or_insert(RelaxedEdge {
                source: e.source,
                target: e.target,
                weight: metric.distance(e.source, e.target),
                level: levels.clamped_level(base.distance(e.source, e.target)),
                case: e.case,
                origin: Origin::HPrime,
                survived: true,
            });
    }
    let union: Vec<RelaxedEdge> = union.into_values().collect();

    let point_levels: Vec<usize> = (0..base.len())
        .map(|q| levels.point_level(base.radius(q)))
        .collect();
    let Pruned { edges, trace } = prune(&union, &point_levels, params.gamma)?;

    Ok(RelaxedSpanner {
        edges,
        params: *params,
        divisor: base.divisor(),
        levels,
        point_levels,
        trace,
        h,
        h_prime,
        base,
        inflated,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PruneCheck {
    /// Dropped edges at a level `>= l(q)`.
    pub protected_dropped: Vec<(usize, usize)>,
    /// Targets whose kept below-levels are not the nearest prefix of their
    /// non-empty below-levels.
    pub prefix_failures: Vec<usize>,
    /// Targets keeping more than `4 * gamma` below-levels.
    pub quota_failures: Vec<usize>,
    /// Pruning the survivors again changes nothing.
    pub idempotent: bool,
}

impl PruneCheck {
    pub fn pass(&self) -> bool {
        self.protected_dropped.is_empty()
            && self.prefix_failures.is_empty()
            && self.quota_failures.is_empty()
            && self.idempotent
    }
}

/// Checks a pruned edge list, treating every edge (dropped or not) as the
/// union that was pruned.
pub fn check_prune_structure(edges: &[RelaxedEdge], point_levels: &[usize], gamma: usize) -> PruneCheck {
    let quota = gamma.saturating_mul(4);
    let mut protected_dropped = Vec::new();
    let mut per_target: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for e in edges {
        let lq = point_levels[e.target];
        if e.level >= lq {
            if !e.survived {
                protected_dropped.push((e.source, e.target));
            }
            continue;
        }
        let slot = per_target.entry(e.target).or_default();
        slot.0.push(e.level);
        if e.survived {
            slot.1.push(e.level);
        }
    }
    let mut prefix_failures = Vec::new();
    let mut quota_failures = Vec::new();
    for (q, (mut all, mut kept)) in per_target {
        for v in [&mut all, &mut kept] {
            v.sort_unstable_by(|a, b| b.cmp(a));
            v.dedup();
        }
        if kept.len() > quota {
            quota_failures.push(q);
        }
        let expect_len = all.len().min(quota);
        if kept.len() != expect_len || kept[..] != all[..expect_len] {
            prefix_failures.push(q);
        }
        // a kept level must keep all of its edges
        let floor = kept.last().copied();
        let partial = edges.iter().any(|e| {
            e.target == q
                && e.level < point_levels[q]
                && !e.survived
                && floor.is_some_and(|f| e.level >= f)
        });
        if partial && !prefix_failures.contains(&q) {
            prefix_failures.push(q);
        }
    }
    let survivors: Vec<RelaxedEdge> = edges.iter().copied().filter(|e| e.survived).collect();
    let idempotent = match prune(&survivors, point_levels, gamma.max(1)) {
        Ok(again) => again.edges.iter().all(|e| e.survived),
        Err(_) => false,
    };
    PruneCheck {
        protected_dropped,
        prefix_failures,
        quota_failures,
        idempotent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(source: usize, target: usize, level: usize) -> RelaxedEdge {
        RelaxedEdge {
            source,
            target,
            weight: 1.0,
            level,
            case: InsertionCase::Small,
            origin: Origin::H,
            survived: true,
        }
    }

    #[test]
    fn protected_and_quota_edges_are_kept() {
        // l(q) = 5 for q = 0; incoming at 6 (protected) and 4 (first below)
        let edges = vec![edge(1, 0, 6), edge(2, 0, 4)];
        let p = prune(&edges, &[5, 0, 0], 1).unwrap();
        assert!(p.edges.iter().all(|e| e.survived));
        assert_eq!(p.trace.points[0].kept_levels, vec![4]);
    }

    #[test]
    fn only_the_nearest_levels_survive() {
        // l(q) = 20, ten distinct levels below it, quota 4
        let levels = [19, 17, 15, 14, 12, 9, 7, 4, 2, 0];
        let edges: Vec<_> = levels
            .iter()
            .enumerate()
            .map(|(k, &l)| edge(k + 1, 0, l))
            .collect();
        let mut pl = vec![0; 11];
        pl[0] = 20;
        let p = prune(&edges, &pl, 1).unwrap();
        let kept: Vec<usize> = p.edges.iter().filter(|e| e.survived).map(|e| e.level).collect();
        assert_eq!(kept, vec![19, 17, 15, 14]);
        assert_eq!(p.trace.points[0].dropped, 6);
        assert!(check_prune_structure(&p.edges, &pl, 1).pass());
    }

    #[test]
    fn every_edge_of_a_kept_level_survives() {
        let edges = vec![edge(1, 0, 3), edge(2, 0, 3), edge(3, 0, 1), edge(4, 0, 2)];
        let p = prune(&edges, &[9, 0, 0, 0, 0], 1).unwrap();
        assert!(p.edges.iter().all(|e| e.survived));
        // a fifth level, 5, pushes level 0 out of the quota
        let more: Vec<_> = (5..9).map(|s| edge(s, 0, 0)).chain([edge(9, 0, 5)]).collect();
        let p = prune(&[edges, more].concat(), &[9; 10], 1).unwrap();
        let dropped: Vec<_> = p.edges.iter().filter(|e| !e.survived).map(|e| e.source).collect();
        assert_eq!(dropped, vec![5, 6, 7, 8]);
    }

    #[test]
    fn zero_gamma_rejected() {
        assert!(matches!(prune(&[], &[], 0), Err(Error::Usage(_))));
    }

    #[test]
    fn structure_check_catches_faults() {
        let mut edges = vec![edge(1, 0, 5), edge(2, 0, 3), edge(3, 0, 2)];
        edges[0].survived = false;
        let c = check_prune_structure(&edges, &[4, 0, 0, 0], 1);
        assert_eq!(c.protected_dropped, vec![(1, 0)]);

        let mut edges = vec![edge(1, 0, 3), edge(2, 0, 2)];
        edges[0].survived = false;
        let c = check_prune_structure(&edges, &[4, 0, 0], 1);
        assert_eq!(c.prefix_failures, vec![0]);
    }

    #[test]
    fn uniform_radii_prune_nothing() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|k| vec![(k % 6) as f64 * 0.7, (k / 6) as f64 * 0.9])
            .collect();
        let r = RadiusAssignment::uniform(30, 2.0).unwrap();
        let params = Params::proof_safe(0.5).unwrap();
        let s = build_relaxed_spanner(Metric::euclidean(&pts).unwrap(), &r, &params).unwrap();
        assert!(s.point_levels().iter().all(|&l| l == 0));
        assert!(s.trace().is_vacuous());
        assert_eq!(s.retained_len(), s.union_len());
        assert!(s.check_prune_structure().pass());
        let union: std::collections::HashSet<_> = s
            .h()
            .edge_pairs()
            .into_iter()
            .chain(s.h_prime().edge_pairs())
            .collect();
        assert_eq!(union.len(), s.union_len());
    }
}
