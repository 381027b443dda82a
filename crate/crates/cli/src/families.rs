//! Seeded instance generators.

use std::fmt;

use disk_spanner::adversarial::build_lower_bound_instance;
use disk_spanner::Metric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::instance::{InstanceFile, InstanceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `n` pairs `x_j, y_j` whose disk graph has `n^2` essential edges.
    Lowerbound,
    /// Uniform points in the unit cube, all radii equal to `rmax`.
    Unitdisk,
    /// Uniform points in the unit cube, radii log-uniform in `[rmin, rmax]`.
    EuclidRandom,
    /// A cluster with tiny disks plus a chain of far points at geometrically
    /// growing distances, one per edge scale.
    MultiscaleChain,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Lowerbound => "lowerbound",
            Family::Unitdisk => "unitdisk",
            Family::EuclidRandom => "euclid-random",
            Family::MultiscaleChain => "multiscale-chain",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenOptions {
    pub n: usize,
    pub eps: f64,
    pub dim: usize,
    pub seed: u64,
    pub levels: Option<usize>,
    pub rmin: Option<f64>,
    pub rmax: Option<f64>,
}

impl GenOptions {
    pub fn new(n: usize) -> Self {
        GenOptions {
            n,
            eps: 0.25,
            dim: 2,
            seed: 0,
            levels: None,
            rmin: None,
            rmax: None,
        }
    }
}

pub const DEFAULT_RMIN: f64 = 0.02;
pub const DEFAULT_RMAX: f64 = 0.5;
pub const DEFAULT_UNIT_RADIUS: f64 = 0.25;
pub const DEFAULT_LEVELS: usize = 8;

pub fn generate(family: Family, opts: &GenOptions) -> CliResult<InstanceFile> {
    if opts.dim == 0 {
        return Err(CliError::Usage("dim must be at least 1".into()));
    }
    let mut inst = match family {
        Family::Lowerbound => lowerbound(opts)?,
        Family::Unitdisk => {
            let r = opts.rmax.unwrap_or(DEFAULT_UNIT_RADIUS);
            positive("rmax", r)?;
            let coords = cube_points(opts);
            let n = coords.len();
            InstanceFile::euclidean(coords, vec![r; n])
        }
        Family::EuclidRandom => euclid_random(opts)?,
        Family::MultiscaleChain => multiscale_chain(opts)?,
    };
    inst.dim = inst.dim.or(match inst.kind {
        InstanceKind::Euclidean => Some(opts.dim),
        _ => None,
    });
    let mut meta = serde_json::Map::new();
    meta.insert("family".into(), Value::from(family.to_string()));
    meta.insert("seed".into(), Value::from(opts.seed));
    meta.append(&mut inst.metadata);
    inst.metadata = meta;
    Ok(inst)
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

fn cube_points(opts: &GenOptions) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.n)
        .map(|_| (0..opts.dim).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

fn euclid_random(opts: &GenOptions) -> CliResult<InstanceFile> {
    let lo = opts.rmin.unwrap_or(DEFAULT_RMIN);
    let hi = opts.rmax.unwrap_or(DEFAULT_RMAX);
    positive("rmin", lo)?;
    positive("rmax", hi)?;
    if lo > hi {
        return Err(CliError::Usage(format!("rmin {lo} exceeds rmax {hi}")));
    }
    let coords = cube_points(opts);
    // radii from a separate stream so they do not shift with dim
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_5eed_5eed_5eed);
    let radii = (0..opts.n)
        .map(|_| if lo == hi { lo } else { rng.gen_range(lo.ln()..hi.ln()).exp() })
        .collect();
    let mut inst = InstanceFile::euclidean(coords, radii);
    inst.metadata.insert("rmin".into(), Value::from(lo));
    inst.metadata.insert("rmax".into(), Value::from(hi));
    Ok(inst)
}

fn lowerbound(opts: &GenOptions) -> CliResult<InstanceFile> {
    let lb = build_lower_bound_instance(opts.n, opts.eps)?;
    let labels: Vec<String> = lb.labels.iter().map(ToString::to_string).collect();
    let mut inst = InstanceFile::matrix(InstanceKind::SpecClosure, lb.spec, lb.radii.as_slice().to_vec());
    let r = &lb.report;
    let summary = format!(
        "{} edges, {}",
        r.edges,
        if r.all_essential { "all essential" } else { "not all essential" }
    );
    inst.metadata.insert("pairs".into(), Value::from(opts.n));
    inst.metadata.insert("eps".into(), Value::from(opts.eps));
    inst.metadata.insert("labels".into(), json!(labels));
    inst.metadata.insert("verification".into(), serde_json::to_value(r)?);
    inst.metadata.insert("summary".into(), Value::from(summary));
    Ok(inst)
}

/// Grid cluster `X` (spacing about 3, radius 1, so no edges inside it even
/// after inflating by up to 2x) and `levels` chain points `y_k` on a ray at
/// distance `s * 2^k` from the cluster center, `s` a hundred cluster
/// diameters. Each `y_k` reaches exactly the whole cluster and the chain
/// points closer in, so its edges into `X` sit at their own scale.
fn multiscale_chain(opts: &GenOptions) -> CliResult<InstanceFile> {
    let levels = opts.levels.unwrap_or(DEFAULT_LEVELS);
    if levels == 0 || opts.n <= levels {
        return Err(CliError::Usage(format!(
            "multiscale-chain needs 1 <= levels < n, got levels = {levels}, n = {}",
            opts.n
        )));
    }
    if levels > 900 {
        return Err(CliError::Usage(format!("levels = {levels} overflows the coordinate range")));
    }
    if opts.dim < 2 {
        return Err(CliError::Usage("multiscale-chain needs dim >= 2".into()));
    }
    let m = opts.n - levels;
    let cols = (m as f64).sqrt().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut coords: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let mut c = vec![0.0; opts.dim];
            c[0] = 3.0 * (k % cols) as f64 + rng.gen_range(-0.25..0.25);
            c[1] = 3.0 * (k / cols) as f64 + rng.gen_range(-0.25..0.25);
            c
        })
        .collect();
    let center: Vec<f64> = (0..opts.dim)
        .map(|a| coords.iter().map(|c| c[a]).sum::<f64>() / m as f64)
        .collect();
    let cluster = Metric::euclidean(&coords)?;
    let mut diameter: f64 = 1.0;
    for p in 0..m {
        for q in 0..p {
            diameter = diameter.max(cluster.distance(p, q));
        }
    }
    let s = 100.0 * diameter;
    for k in 0..levels {
        let mut c = center.clone();
        c[0] -= s * 2f64.powi(k as i32);
        coords.push(c);
    }
    let metric = Metric::euclidean(&coords)?;
    let radii: Vec<f64> = (0..opts.n)
        .map(|p| {
            if p < m {
                1.0
            } else {
                (0..m).map(|x| metric.distance(p, x)).fold(0.0, f64::max)
            }
        })
        .collect();
    let mut inst = InstanceFile::euclidean(coords, radii);
    inst.metadata.insert("levels".into(), Value::from(levels));
    inst.metadata.insert("cluster_points".into(), Value::from(m));
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use disk_spanner::diskgraph::{build_disk_graph, normalize};

    use super::*;

    #[test]
    fn seeded_generation_is_reproducible() {
        let mut o = GenOptions::new(50);
        o.seed = 7;
        let a = generate(Family::Unitdisk, &o).unwrap();
        let b = generate(Family::Unitdisk, &o).unwrap();
        assert_eq!(a, b);
        o.seed = 8;
        assert_ne!(generate(Family::Unitdisk, &o).unwrap(), a);
    }

    #[test]
    fn radii_are_within_range() {
        let mut o = GenOptions::new(200);
        o.rmin = Some(0.1);
        o.rmax = Some(0.3);
        let inst = generate(Family::EuclidRandom, &o).unwrap();
        assert!(inst.radii.iter().all(|&r| (0.1..=0.3).contains(&r)));
        o.rmin = Some(0.5);
        assert!(matches!(generate(Family::EuclidRandom, &o), Err(CliError::Usage(_))));
    }

    #[test]
    fn lowerbound_metadata_reports_census() {
        let mut o = GenOptions::new(4);
        o.eps = 0.25;
        let inst = generate(Family::Lowerbound, &o).unwrap();
        assert_eq!(inst.point_count(), 8);
        assert_eq!(inst.metadata["summary"], "16 edges, all essential");
    }

    #[test]
    fn chain_populates_one_scale_per_chain_point() {
        let mut o = GenOptions::new(40);
        o.levels = Some(12);
        let inst = generate(Family::MultiscaleChain, &o).unwrap();
        let g = build_disk_graph(inst.metric().unwrap(), &inst.radius_assignment().unwrap()).unwrap();
        let (g, _) = normalize(&g).unwrap();
        let ls = g.level_structure(0.05).unwrap();
        let levels: BTreeSet<usize> = g.edges().iter().map(|e| ls.edge_level(e.weight).unwrap()).collect();
        assert!(levels.len() >= 12, "{} levels", levels.len());
        // no edges inside the cluster
        assert!(g.edges().iter().all(|e| e.source >= 28));
    }
}
