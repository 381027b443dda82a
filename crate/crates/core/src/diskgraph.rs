//! Directed disk graphs and their geometric level structure.

use std::ops::Range;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{approx_eq, Metric};

/// Positive radius per point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusAssignment {
    radii: Vec<f64>,
    max: f64,
}

impl RadiusAssignment {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if let Some((p, r)) = radii
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(Error::usage(format!("radius of point {p} must be positive, got {r}")));
        }
        let max = radii.iter().copied().fold(0.0, f64::max);
        Ok(RadiusAssignment { radii, max })
    }

    pub fn uniform(n: usize, r: f64) -> Result<Self> {
        Self::new(vec![r; n])
    }

    #[inline]
    pub fn get(&self, p: usize) -> f64 {
        self.radii[p]
    }

    /// `M`, the largest radius.
    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.radii
    }

    fn divided(&self, divisor: f64) -> Self {
        RadiusAssignment {
            radii: self.radii.iter().map(|r| r / divisor).collect(),
            max: self.max / divisor,
        }
    }
}

/// Radii multiplied by `1 + eps`; the input is left untouched.
pub fn inflate_radii(r: &RadiusAssignment, eps: f64) -> RadiusAssignment {
    RadiusAssignment {
        radii: r.radii.iter().map(|x| (1.0 + eps) * x).collect(),
        max: (1.0 + eps) * r.max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// `I(V, E, r)`: an edge `p -> q` for every `p != q` with `d(p, q) <= r(p)`.
///
/// Lengths can be uniformly rescaled (see [`normalize`]). Membership is always
/// decided on the unscaled metric and radii, and every scaled quantity is the
/// unscaled one divided by the same positive divisor, so rescaling never
/// changes the edge set.
#[derive(Debug, Clone)]
pub struct DiskGraph {
    metric: Arc<Metric>,
    raw_radii: RadiusAssignment,
    divisor: f64,
    radii: RadiusAssignment,
    edges: Vec<Edge>,
    out: Vec<Range<usize>>,
}

pub fn build_disk_graph(metric: impl Into<Arc<Metric>>, radii: &RadiusAssignment) -> Result<DiskGraph> {
    let metric = metric.into();
    if radii.len() != metric.len() {
        return Err(Error::usage(format!(
            "{} radii for {} points",
            radii.len(),
            metric.len()
        )));
    }
    Ok(assemble(metric, radii.clone(), 1.0))
}

fn assemble(metric: Arc<Metric>, raw_radii: RadiusAssignment, divisor: f64) -> DiskGraph {
    let n = metric.len();
    let mut edges = Vec::new();
    let mut out = Vec::with_capacity(n);
    for p in 0..n {
        let start = edges.len();
        let rp = raw_radii.get(p);
        for q in 0..n {
            if p == q {
                continue;
            }
            let d = metric.distance(p, q);
            if d <= rp {
                edges.push(Edge {
                    source: p,
                    target: q,
                    weight: d / divisor,
                });
            }
        }
        out.push(start..edges.len());
    }
    let radii = if divisor == 1.0 {
        raw_radii.clone()
    } else {
        raw_radii.divided(divisor)
    };
    DiskGraph {
        metric,
        raw_radii,
        divisor,
        radii,
        edges,
        out,
    }
}

/// Rescales all lengths so the lightest edge weighs exactly 1. Returns the
/// graph and the factor applied to the input's lengths.
pub fn normalize(g: &DiskGraph) -> Result<(DiskGraph, f64)> {
    let raw_min = g
        .edges
        .iter()
        .map(|e| g.metric.distance(e.source, e.target))
        .fold(f64::INFINITY, f64::min);
    if !raw_min.is_finite() {
        return Err(Error::domain("cannot normalize an edgeless disk graph"));
    }
    if raw_min == g.divisor {
        return Ok((g.clone(), 1.0));
    }
    let scaled = assemble(g.metric.clone(), g.raw_radii.clone(), raw_min);
    Ok((scaled, g.divisor / raw_min))
}

impl DiskGraph {
    pub fn len(&self) -> usize {
        self.metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }

    pub fn metric(&self) -> &Arc<Metric> {
        &self.metric
    }

    /// Scaled distance.
    #[inline]
    pub fn distance(&self, p: usize, q: usize) -> f64 {
        if self.divisor == 1.0 {
            self.metric.distance(p, q)
        } else {
            self.metric.distance(p, q) / self.divisor
        }
    }

    /// Scaled radius of `p`.
    #[inline]
    pub fn radius(&self, p: usize) -> f64 {
        self.radii.get(p)
    }

    /// Scaled radii.
    pub fn radii(&self) -> &RadiusAssignment {
        &self.radii
    }

    /// Radii in the units of the underlying metric.
    pub fn raw_radii(&self) -> &RadiusAssignment {
        &self.raw_radii
    }

    /// Unscaled lengths are scaled lengths times this divisor.
    pub fn divisor(&self) -> f64 {
        self.divisor
    }

    /// Scaled `M`.
    pub fn max_radius(&self) -> f64 {
        self.radii.max()
    }

    /// Edges ordered by source, then target.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, p: usize) -> &[Edge] {
        &self.edges[self.out[p].clone()]
    }

    pub fn contains_edge(&self, p: usize, q: usize) -> bool {
        p < self.len()
            && self
                .out_edges(p)
                .binary_search_by_key(&q, |e| e.target)
                .is_ok()
    }

    pub fn min_edge_weight(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.weight).reduce(f64::min)
    }

    pub fn is_normalized(&self) -> bool {
        self.min_edge_weight().is_some_and(|w| approx_eq(w, 1.0))
    }

    pub fn level_structure(&self, alpha: f64) -> Result<LevelStructure> {
        level_structure(self.max_radius(), alpha)
    }
}

/// Distance scales `M_i = M / (1+alpha)^i` for `i` in `0..=L+1`, with `L` the
/// last index whose threshold is still at least 1.
///
/// Level `i` holds lengths in `(M_{i+1}, M_i]`; level `L` also absorbs anything
/// shorter. Lookups compare against the stored thresholds, never a logarithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStructure {
    alpha: f64,
    m: f64,
    top: usize,
    thresholds: Vec<f64>,
}

const MAX_LEVELS: usize = 50_000_000;

pub fn level_structure(m: f64, alpha: f64) -> Result<LevelStructure> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::usage(format!("alpha must be positive, got {alpha}")));
    }
    if !m.is_finite() || (m < 1.0 && !approx_eq(m, 1.0)) {
        return Err(Error::domain(format!("M must be at least 1 after normalization, got {m}")));
    }
    let mut thresholds = vec![m];
    loop {
        let next = thresholds[thresholds.len() - 1] / (1.0 + alpha);
        thresholds.push(next);
        if next < 1.0 && !approx_eq(next, 1.0) {
            break;
        }
        if thresholds.len() > MAX_LEVELS {
            return Err(Error::domain(format!(
                "level structure for M = {m}, alpha = {alpha} exceeds {MAX_LEVELS} levels"
            )));
        }
    }
    Ok(LevelStructure {
        alpha,
        m,
        top: thresholds.len() - 2,
        thresholds,
    })
}

impl LevelStructure {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `L`, the deepest level.
    pub fn top_level(&self) -> usize {
        self.top
    }

    pub fn level_count(&self) -> usize {
        self.top + 1
    }

    /// `M_i` for `i` in `0..=L+1`.
    pub fn threshold(&self, i: usize) -> f64 {
        self.thresholds[i]
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Number of levels `i <= L` with `w <= M_i` (tolerant), minus one.
    fn scan(&self, w: f64) -> Option<usize> {
        let upto = &self.thresholds[..=self.top];
        let covering = upto.partition_point(|&t| w <= t || approx_eq(w, t));
        covering.checked_sub(1)
    }

    /// Level of an edge of weight `w`.
    pub fn edge_level(&self, w: f64) -> Result<usize> {
        self.scan(w).ok_or_else(|| {
            Error::domain(format!("edge weight {w} exceeds M = {}", self.m))
        })
    }

    /// `l(p)` for a radius `r`: the band containing `r`. A radius above `M`
    /// gets 0. One below `M_{L+1}` is shorter than every edge and gets `L+1`,
    /// so all levels lie below it.
    pub fn point_level(&self, r: f64) -> usize {
        let floor = self.thresholds[self.top + 1];
        if r < floor && !approx_eq(r, floor) {
            return self.top + 1;
        }
        self.clamped_level(r)
    }

    /// Edge-level rule clamped to `[0, L]` for lengths that may fall outside
    /// `[1, M]`.
    pub fn clamped_level(&self, w: f64) -> usize {
        self.scan(w).unwrap_or(0)
    }
}
