//! A disk graph family with `n^2` edges none of which can be dropped: every
//! edge is the only path from its tail to its head.
//!
//! Points `x_1..x_n` (radius 1, spaced `1+eps` along a capped path) and
//! `y_1..y_n` with `r(y_i) = d(y_i, x_j) = 2^{i-1} n` for every `j`. The given
//! distance table is not a metric (the chained `y` distances exceed
//! the route through `X`), so the instance uses its shortest-path closure and
//! every structural claim is re-verified on the result.

use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::diskgraph::{build_disk_graph, DiskGraph, RadiusAssignment};
use crate::error::{Error, Result};
use crate::metric::{
    approx_eq, estimate_doubling_constant, metric_closure, validate_metric_with, DoublingEstimate,
    Metric, TriangleMode, ValidationConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    /// `x_j`, 1-based.
    X(usize),
    /// `y_i`, 1-based.
    Y(usize),
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::X(j) => write!(f, "x{j}"),
            Label::Y(i) => write!(f, "y{i}"),
        }
    }
}

/// Which structural claims hold on the closed metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralReport {
    pub points: usize,
    pub edges: usize,
    pub triangle_mode: TriangleMode,
    pub metric_valid: bool,
    /// Specification entries the closure shortened.
    pub closure_shortened: usize,
    pub y_to_x_equidistant: bool,
    pub x_spacing_exact: bool,
    /// `d(y_i, y_j) < 2^i n` for all `i > j`.
    pub y_gap_bound: bool,
    pub y_to_x_edges: usize,
    pub y_to_y_edges: usize,
    pub x_out_edges: usize,
    pub y_in_edges: usize,
    pub all_essential: bool,
}

#[derive(Debug, Clone)]
pub struct LowerBoundInstance {
    pub n: usize,
    pub eps: f64,
    /// The distance table before closure.
    pub spec: Vec<Vec<f64>>,
    pub metric: Arc<Metric>,
    pub radii: RadiusAssignment,
    pub labels: Vec<Label>,
    pub report: StructuralReport,
}

impl LowerBoundInstance {
    pub fn x(&self, j: usize) -> usize {
        j - 1
    }

    pub fn y(&self, i: usize) -> usize {
        self.n + i - 1
    }

    pub fn disk_graph(&self) -> DiskGraph {
        build_disk_graph(self.metric.clone(), &self.radii).expect("sizes match by construction")
    }
}

fn y_radius(n: usize, i: usize) -> f64 {
    (n as f64) * 2f64.powi(i as i32 - 1)
}

/// Distance table for ids `x_j = j-1`, `y_i = n+i-1`.
pub fn lower_bound_spec(n: usize, eps: f64) -> Vec<Vec<f64>> {
    let size = 2 * n;
    let nf = n as f64;
    let mut d = vec![vec![0.0; size]; size];
    for j in 0..n {
        for k in 0..n {
            if j != k {
                d[j][k] = ((1.0 + eps) * j.abs_diff(k) as f64).min(2.0 * nf);
            }
        }
    }
    for i in 1..=n {
        for j in 0..n {
            d[n + i - 1][j] = y_radius(n, i);
            d[j][n + i - 1] = y_radius(n, i);
        }
    }
    // consecutive y gaps 2^k n + eps, other pairs are sums of gaps
    for i in 1..=n {
        for j in 1..i {
            let s: f64 = (j..i).map(|k| y_radius(n, k + 1) + eps).sum();
            d[n + i - 1][n + j - 1] = s;
            d[n + j - 1][n + i - 1] = s;
        }
    }
    d
}

pub fn build_lower_bound_instance(n: usize, eps: f64) -> Result<LowerBoundInstance> {
    if n < 2 {
        return Err(Error::usage(format!("lower bound instance needs n >= 2, got {n}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::usage(format!("eps must lie in (0, 1), got {eps}")));
    }
    let spec = lower_bound_spec(n, eps);
    let metric = Arc::new(metric_closure(&spec)?);
    let size = 2 * n;
    let labels: Vec<Label> = (1..=n).map(Label::X).chain((1..=n).map(Label::Y)).collect();
    let radii = RadiusAssignment::new((0..size).map(|p| if p < n { 1.0 } else { y_radius(n, p - n + 1) }).collect())?;
    let fail = |what: String| Err(Error::Construction(what));

    let validation = validate_metric_with(
        &metric,
        &ValidationConfig {
            exhaustive_cap: 500,
            ..Default::default()
        },
    );
    if !validation.pass() {
        let v = validation.triangle_violations.first();
        return fail(format!("closure is not a metric: {v:?}"));
    }

    let mut shortened = 0;
    for p in 0..size {
        for q in 0..size {
            if metric.distance(p, q) < spec[p][q] && !approx_eq(metric.distance(p, q), spec[p][q]) {
                shortened += 1;
            }
        }
    }

    for i in 1..=n {
        for j in 0..n {
            let d = metric.distance(n + i - 1, j);
            if !approx_eq(d, y_radius(n, i)) {
                return fail(format!("d(y{i}, x{}) = {d}, expected {}", j + 1, y_radius(n, i)));
            }
        }
    }
    for j in 0..n - 1 {
        let d = metric.distance(j, j + 1);
        if !approx_eq(d, 1.0 + eps) {
            return fail(format!("d(x{}, x{}) = {d}, expected {}", j + 1, j + 2, 1.0 + eps));
        }
    }
    for i in 2..=n {
        for j in 1..i {
            let d = metric.distance(n + i - 1, n + j - 1);
            if !(d < 2.0 * y_radius(n, i)) {
                return fail(format!("d(y{i}, y{j}) = {d} is not below 2^{i} n"));
            }
        }
    }

    let g = build_disk_graph(metric.clone(), &radii)?;
    let mut y_to_x = 0;
    let mut y_to_y = 0;
    let mut x_out = 0;
    let mut y_in = 0;
    for e in g.edges() {
        match (labels[e.source], labels[e.target]) {
            (Label::Y(_), Label::X(_)) => y_to_x += 1,
            (Label::Y(_), Label::Y(_)) => {
                y_to_y += 1;
                y_in += 1;
            }
            (Label::X(_), Label::Y(_)) => {
                x_out += 1;
                y_in += 1;
            }
            (Label::X(_), Label::X(_)) => x_out += 1,
        }
    }
    if y_to_x != n * n || g.edge_count() != n * n {
        let extra = g
            .edges()
            .iter()
            .find(|e| !matches!((labels[e.source], labels[e.target]), (Label::Y(_), Label::X(_))));
        return fail(format!(
            "expected exactly {} y -> x edges, found {y_to_x} of {} (first other edge: {:?})",
            n * n,
            g.edge_count(),
            extra.map(|e| (labels[e.source].to_string(), labels[e.target].to_string()))
        ));
    }
    let essential = verify_non_sparsifiable(&g);
    if !essential.all_essential {
        return fail(format!("non-essential edges: {:?}", essential.non_essential));
    }

    let report = StructuralReport {
        points: size,
        edges: g.edge_count(),
        triangle_mode: validation.triangle_mode,
        metric_valid: validation.pass(),
        closure_shortened: shortened,
        y_to_x_equidistant: true,
        x_spacing_exact: true,
        y_gap_bound: true,
        y_to_x_edges: y_to_x,
        y_to_y_edges: y_to_y,
        x_out_edges: x_out,
        y_in_edges: y_in,
        all_essential: essential.all_essential,
    };
    Ok(LowerBoundInstance {
        n,
        eps,
        spec,
        metric,
        radii,
        labels,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EssentialReport {
    pub edges: usize,
    pub essential: Vec<(usize, usize)>,
    pub non_essential: Vec<(usize, usize)>,
    pub all_essential: bool,
}

/// An edge is essential if its head is unreachable from its tail once the
/// edge is removed.
pub fn verify_non_sparsifiable(g: &DiskGraph) -> EssentialReport {
    let n = g.len();
    let verdicts: Vec<bool> = g
        .edges()
        .par_iter()
        .map(|skip| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([skip.source]);
            seen[skip.source] = true;
            while let Some(u) = queue.pop_front() {
                for e in g.out_edges(u) {
                    if (u, e.target) == (skip.source, skip.target) || seen[e.target] {
                        continue;
                    }
                    if e.target == skip.target {
                        return false;
                    }
                    seen[e.target] = true;
                    queue.push_back(e.target);
                }
            }
            true
        })
        .collect();
    let mut essential = Vec::new();
    let mut non_essential = Vec::new();
    for (e, &ess) in g.edges().iter().zip(&verdicts) {
        if ess {
            essential.push((e.source, e.target));
        } else {
            non_essential.push((e.source, e.target));
        }
    }
    EssentialReport {
        edges: g.edge_count(),
        all_essential: non_essential.is_empty(),
        essential,
        non_essential,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingProfile {
    pub estimates: Vec<DoublingEstimate>,
    pub max_cover_count: usize,
}

/// Greedy cover counts for balls centered at every `y_i` and at `x_1`, with
/// radii `2^i n` for `i` in `0..=n` plus `n/2` and `2n`.
pub fn doubling_profile(inst: &LowerBoundInstance) -> DoublingProfile {
    let n = inst.n;
    let nf = n as f64;
    let mut radii: Vec<f64> = (0..=n).map(|i| nf * 2f64.powi(i as i32)).collect();
    radii.push(nf / 2.0);
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let centers: Vec<usize> = (1..=n).map(|i| inst.y(i)).chain([inst.x(1)]).collect();
    let estimates: Vec<DoublingEstimate> = centers
        .par_iter()
        .flat_map_iter(|&c| {
            radii
                .iter()
                .map(move |&r| estimate_doubling_constant(&inst.metric, c, r).expect("positive radius"))
        })
        .collect();
    DoublingProfile {
        max_cover_count: estimates.iter().map(|e| e.cover_count).max().unwrap_or(0),
        estimates,
    }
}
