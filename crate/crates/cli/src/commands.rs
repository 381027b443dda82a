//! `build`, `verify` and `bench`.

use std::sync::Arc;
use std::time::Instant;

use disk_spanner::diskgraph::{build_disk_graph, inflate_radii, normalize, DiskGraph};
use disk_spanner::oracle::{
    blocker_minimality_violations, certify_stretch_with, check_pivot_separation, edges_outside, size_report,
    CertifyOptions, SizeReport, StretchReport,
};
use disk_spanner::params::Overrides;
use disk_spanner::relaxed::{build_relaxed_spanner_with, PruneCheck, PruneTrace};
use disk_spanner::spanner::{disk_spanner_with, BlockerScope, InsertionCase, Origin, SpannerOptions};
use disk_spanner::{Metric, Params, RadiusAssignment, Regime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::families::{generate, Family, GenOptions};
use crate::instance::InstanceFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Relaxed,
}

#[derive(Debug, Clone, Copy)]
pub struct BuildConfig {
    pub mode: Mode,
    pub eps: f64,
    pub overrides: Overrides,
    pub blocker_scope: BlockerScope,
    pub per_edge: bool,
}

impl BuildConfig {
    pub fn new(mode: Mode, eps: f64) -> Self {
        BuildConfig {
            mode,
            eps,
            overrides: Overrides::default(),
            blocker_scope: BlockerScope::default(),
            per_edge: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub s: usize,
    pub t: usize,
    /// Length in the instance's own units.
    pub w: f64,
    pub level: usize,
    pub case: InsertionCase,
    pub origin: Origin,
    pub survived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub mode: Mode,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: usize,
    pub regime: Regime,
    pub outside_proof_regime: bool,
    pub blocker_scope: BlockerScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpannerFile {
    pub edges: Vec<EdgeRecord>,
    pub params: ParamsRecord,
}

impl SpannerFile {
    pub fn retained(&self) -> Vec<(usize, usize)> {
        self.edges.iter().filter(|e| e.survived).map(|e| (e.s, e.t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub edges: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inflated_edges: Option<usize>,
    /// Normalized `M`; absent for an edgeless graph.
    pub aspect_ratio: Option<f64>,
    pub top_level: Option<usize>,
    pub scale_divisor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MembershipReport {
    /// `E` or `E'`.
    pub universe: String,
    pub checked: usize,
    pub outside: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PivotSummary {
    pub total: usize,
    pub separation_pairs: usize,
    pub separation_violations: usize,
    pub blocker_minimality_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedSummary {
    pub h_edges: usize,
    pub h_prime_edges: usize,
    pub union_edges: usize,
    pub retained_edges: usize,
    pub dropped_edges: usize,
    pub prune_vacuous: bool,
    pub prune_check: PruneCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildReport {
    pub mode: Mode,
    pub regime: Regime,
    pub outside_proof_regime: bool,
    pub certified: bool,
    pub instance: InstanceSummary,
    pub membership: MembershipReport,
    pub stretch: StretchReport,
    pub size: SizeReport,
    pub pivots: Option<PivotSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxed: Option<RelaxedSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_trace: Option<PruneTrace>,
}

impl BuildReport {
    /// 2 if certification failed under proof-safe constants, else 0.
    pub fn exit_code(&self) -> u8 {
        if !self.certified && self.regime == Regime::ProofSafe {
            2
        } else {
            0
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub spanner: SpannerFile,
    pub report: BuildReport,
}

fn params_record(mode: Mode, p: &Params, scope: BlockerScope) -> ParamsRecord {
    ParamsRecord {
        mode,
        eps: p.eps,
        alpha: p.alpha,
        beta: p.beta,
        gamma: p.gamma,
        regime: p.regime,
        outside_proof_regime: p.regime == Regime::Override,
        blocker_scope: scope,
    }
}

fn empty_size(n: usize) -> SizeReport {
    SizeReport {
        n,
        top_level: 0,
        total_edges: 0,
        edges_per_level: Vec::new(),
        max_incoming_per_point_level: 0,
        pivots_added_per_level: Vec::new(),
        total_pivots: 0,
        ratio_edges_over_n: 0.0,
        incoming_bound: None,
        incoming_violations: Vec::new(),
    }
}

pub fn build(inst: &InstanceFile, cfg: &BuildConfig) -> CliResult<BuildOutput> {
    let params = Params::with_overrides(cfg.eps, cfg.overrides)?;
    let metric = Arc::new(inst.metric()?);
    let radii = inst.radius_assignment()?;
    if radii.len() != metric.len() {
        return Err(CliError::Usage("radii and points differ in number".into()));
    }
    let dim = inst.euclidean_dim();
    let opts = SpannerOptions {
        blocker_scope: cfg.blocker_scope,
    };
    let certify = CertifyOptions {
        per_edge_table: cfg.per_edge,
        regime: params.regime,
        ..Default::default()
    };
    let raw = build_disk_graph(metric.clone(), &radii)?;
    let bound = 1.0 + cfg.eps;
    let record = params_record(cfg.mode, &params, cfg.blocker_scope);

    if raw.edge_count() == 0 {
        let stretch = certify_stretch_with(&raw, &[], &raw, bound, certify)?;
        let report = BuildReport {
            mode: cfg.mode,
            regime: params.regime,
            outside_proof_regime: params.regime == Regime::Override,
            certified: stretch.pass,
            instance: InstanceSummary {
                n: raw.len(),
                edges: 0,
                inflated_edges: None,
                aspect_ratio: None,
                top_level: None,
                scale_divisor: None,
            },
            membership: MembershipReport {
                universe: "E".into(),
                checked: 0,
                outside: Vec::new(),
            },
            stretch,
            size: empty_size(raw.len()),
            pivots: None,
            relaxed: None,
            prune_trace: None,
        };
        return Ok(BuildOutput {
            spanner: SpannerFile {
                edges: Vec::new(),
                params: record,
            },
            report,
        });
    }

    match cfg.mode {
        Mode::Baseline => {
            let (g, _) = normalize(&raw)?;
            let s = disk_spanner_with(&g, &params, opts)?;
            let pairs = s.edge_pairs();
            let stretch = certify_stretch_with(&g, &pairs, &g, bound, certify)?;
            let sep = check_pivot_separation(&g, &s);
            let edges = s
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    s: e.source,
                    t: e.target,
                    w: metric.distance(e.source, e.target),
                    level: e.level,
                    case: e.case,
                    origin: e.origin,
                    survived: true,
                })
                .collect();
            let report = BuildReport {
                mode: cfg.mode,
                regime: params.regime,
                outside_proof_regime: params.regime == Regime::Override,
                certified: stretch.pass,
                instance: summary(&g, params.alpha, None),
                membership: MembershipReport {
                    universe: "E".into(),
                    checked: pairs.len(),
                    outside: edges_outside(&pairs, &g),
                },
                stretch,
                size: size_report(&s, dim),
                pivots: Some(PivotSummary {
                    total: s.pivot_history().len(),
                    separation_pairs: sep.pairs_checked,
                    separation_violations: sep.violations.len(),
                    blocker_minimality_violations: blocker_minimality_violations(&s).len(),
                }),
                relaxed: None,
                prune_trace: None,
            };
            Ok(BuildOutput {
                spanner: SpannerFile { edges, params: record },
                report,
            })
        }
        Mode::Relaxed => {
            let rs = build_relaxed_spanner_with(metric.clone(), &radii, &params, opts)?;
            let kept = rs.retained();
            let outside = edges_outside(&kept, rs.inflated());
            let stretch = certify_stretch_with(rs.base(), &kept, rs.inflated(), bound, certify)?;
            let sep = check_pivot_separation(rs.base(), rs.h());
            let prune_check = rs.check_prune_structure();
            let edges = rs
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    s: e.source,
                    t: e.target,
                    w: e.weight,
                    level: e.level,
                    case: e.case,
                    origin: e.origin,
                    survived: e.survived,
                })
                .collect();
            let report = BuildReport {
                mode: cfg.mode,
                regime: params.regime,
                outside_proof_regime: params.regime == Regime::Override,
                certified: stretch.pass && outside.is_empty(),
                instance: summary(rs.base(), params.alpha, Some(rs.inflated().edge_count())),
                membership: MembershipReport {
                    universe: "E'".into(),
                    checked: kept.len(),
                    outside,
                },
                stretch,
                size: size_report(&rs, dim),
                pivots: Some(PivotSummary {
                    total: rs.h().pivot_history().len(),
                    separation_pairs: sep.pairs_checked,
                    separation_violations: sep.violations.len(),
                    blocker_minimality_violations: blocker_minimality_violations(rs.h()).len(),
                }),
                relaxed: Some(RelaxedSummary {
                    h_edges: rs.h().len(),
                    h_prime_edges: rs.h_prime().len(),
                    union_edges: rs.union_len(),
                    retained_edges: rs.retained_len(),
                    dropped_edges: rs.trace().dropped(),
                    prune_vacuous: rs.trace().is_vacuous(),
                    prune_check,
                }),
                prune_trace: Some(rs.trace().clone()),
            };
            Ok(BuildOutput {
                spanner: SpannerFile { edges, params: record },
                report,
            })
        }
    }
}

fn summary(g: &DiskGraph, alpha: f64, inflated_edges: Option<usize>) -> InstanceSummary {
    InstanceSummary {
        n: g.len(),
        edges: g.edge_count(),
        inflated_edges,
        aspect_ratio: Some(g.max_radius()),
        top_level: g.level_structure(alpha).ok().map(|ls| ls.top_level()),
        scale_divisor: Some(g.divisor()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub bound: f64,
    pub mode: Mode,
    pub universe: String,
    pub edges_checked: usize,
    /// Retained edges not in the universe; certification stops if any.
    pub outside: Vec<(usize, usize)>,
    /// Recorded lengths that disagree with the instance metric.
    pub weight_mismatches: Vec<(usize, usize)>,
    pub stretch: Option<StretchReport>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn exit_code(&self) -> u8 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

/// Re-certifies a spanner file against its instance from scratch.
pub fn verify(inst: &InstanceFile, spanner: &SpannerFile, bound: f64) -> CliResult<VerifyReport> {
    if !(bound >= 1.0) {
        return Err(CliError::Usage(format!("bound must be at least 1, got {bound}")));
    }
    let metric = Arc::new(inst.metric()?);
    let radii = inst.radius_assignment()?;
    let n = metric.len();
    if let Some(e) = spanner.edges.iter().find(|e| e.s >= n || e.t >= n) {
        return Err(CliError::Usage(format!("spanner edge ({}, {}) out of range", e.s, e.t)));
    }
    let raw = build_disk_graph(metric.clone(), &radii)?;
    let (universe, allowed) = match spanner.params.mode {
        Mode::Baseline => ("E", raw.clone()),
        Mode::Relaxed => (
            "E'",
            build_disk_graph(metric.clone(), &inflate_radii(&radii, spanner.params.eps))?,
        ),
    };
    let kept = spanner.retained();
    let outside = edges_outside(&kept, &allowed);
    let weight_mismatches: Vec<(usize, usize)> = spanner
        .edges
        .iter()
        .filter(|e| !disk_spanner::metric::approx_eq(e.w, metric.distance(e.s, e.t)))
        .map(|e| (e.s, e.t))
        .collect();
    let stretch = if outside.is_empty() {
        let base = if raw.edge_count() == 0 { raw.clone() } else { normalize(&raw)?.0 };
        let opts = CertifyOptions {
            regime: spanner.params.regime,
            ..Default::default()
        };
        Some(certify_stretch_with(&base, &kept, &allowed, bound, opts)?)
    } else {
        None
    };
    let pass = outside.is_empty() && weight_mismatches.is_empty() && stretch.as_ref().is_some_and(|s| s.pass);
    Ok(VerifyReport {
        bound,
        mode: spanner.params.mode,
        universe: universe.into(),
        edges_checked: kept.len(),
        outside,
        weight_mismatches,
        stretch,
        pass,
    })
}

/// A benchmark grid; every combination of the listed values is one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub family: Family,
    #[serde(default)]
    pub n: Vec<usize>,
    /// Chain lengths, for `multiscale-chain`.
    #[serde(default)]
    pub levels: Option<Vec<usize>>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub rmin: Option<f64>,
    #[serde(default)]
    pub rmax: Option<f64>,
    /// Instance `eps` for `lowerbound`; defaults to the cell's `eps`.
    #[serde(default)]
    pub instance_eps: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<usize>,
    /// Record wall-clock build time; off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn default_eps() -> Vec<f64> {
    vec![0.5]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_dim() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub family: String,
    pub seed: u64,
    pub levels: Option<usize>,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "L")]
    pub top_level: usize,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: usize,
    #[serde(rename = "E")]
    pub e: usize,
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "H_prime")]
    pub h_prime: usize,
    #[serde(rename = "H_hat")]
    pub h_hat: usize,
    pub max_stretch_h: f64,
    pub max_stretch: f64,
    pub build_millis: u64,
    pub regime: Regime,
}

pub const BENCH_HEADER: [&str; 18] = [
    "family",
    "seed",
    "levels",
    "n",
    "M",
    "L",
    "eps",
    "alpha",
    "beta",
    "gamma",
    "E",
    "H",
    "H_prime",
    "H_hat",
    "max_stretch_h",
    "max_stretch",
    "build_millis",
    "regime",
];

pub fn bench_cell(spec: &SweepSpec, n: usize, levels: Option<usize>, eps: f64, seed: u64) -> CliResult<BenchRow> {
    let opts = GenOptions {
        n,
        eps: spec.instance_eps.unwrap_or(eps),
        dim: spec.dim,
        seed,
        levels,
        rmin: spec.rmin,
        rmax: spec.rmax,
    };
    let inst = generate(spec.family, &opts)?;
    let params = Params::with_overrides(
        eps,
        Overrides {
            alpha: spec.alpha,
            beta: spec.beta,
            gamma: spec.gamma,
        },
    )?;
    let metric: Arc<Metric> = Arc::new(inst.metric()?);
    let radii: RadiusAssignment = inst.radius_assignment()?;
    let start = Instant::now();
    let rs = build_relaxed_spanner_with(metric, &radii, &params, SpannerOptions::default())?;
    let millis = start.elapsed().as_millis() as u64;
    let bound = 1.0 + eps;
    let h = certify_stretch_with(rs.base(), &rs.h().edge_pairs(), rs.base(), bound, CertifyOptions::default())?;
    let hat = certify_stretch_with(rs.base(), &rs.retained(), rs.inflated(), bound, CertifyOptions::default())?;
    Ok(BenchRow {
        family: spec.family.to_string(),
        seed,
        levels,
        n: rs.base().len(),
        m: rs.levels().m(),
        top_level: rs.levels().top_level(),
        eps,
        alpha: params.alpha,
        beta: params.beta,
        gamma: params.gamma,
        e: rs.base().edge_count(),
        h: rs.h().len(),
        h_prime: rs.h_prime().len(),
        h_hat: rs.retained_len(),
        max_stretch_h: h.max_ratio,
        max_stretch: hat.max_ratio,
        build_millis: if spec.timing { millis } else { 0 },
        regime: params.regime,
    })
}

/// Runs every cell (in parallel) and returns rows in grid order.
pub fn bench(spec: &SweepSpec) -> CliResult<Vec<BenchRow>> {
    let levels: Vec<Option<usize>> = match &spec.levels {
        None => vec![None],
        Some(ls) => ls.iter().copied().map(Some).collect(),
    };
    let mut cells = Vec::new();
    for &n in &spec.n {
        for &l in &levels {
            for &eps in &spec.eps {
                for &seed in &spec.seeds {
                    cells.push((n, l, eps, seed));
                }
            }
        }
    }
    cells
        .par_iter()
        .map(|&(n, l, eps, seed)| bench_cell(spec, n, l, eps, seed))
        .collect()
}

pub fn bench_csv(rows: &[BenchRow]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(BENCH_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Usage(e.to_string()))
}
