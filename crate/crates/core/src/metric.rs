//! Finite metric spaces.
//!
//! A [`Metric`] is immutable after construction. Points are identified by
//! dense ids `0..n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance used when two lengths are tested for equality.
pub const REL_TOL: f64 = 1e-9;

/// `a == b` up to [`REL_TOL`] relative to the larger magnitude.
pub fn approx_eq(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs());
    scale.is_finite() && (a - b).abs() <= REL_TOL * scale
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Euclidean { dim: usize, coords: Vec<f64> },
    Matrix { dist: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    n: usize,
    kind: Kind,
}

impl Metric {
    /// Point set in `R^dim`, one coordinate vector per point.
    pub fn euclidean(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::usage(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::usage(format!("point {i} has a non-finite coordinate")));
            }
            coords.extend_from_slice(p);
        }
        Ok(Metric {
            n: points.len(),
            kind: Kind::Euclidean { dim, coords },
        })
    }

    /// Explicit `n x n` distance matrix. Only shape and finiteness are checked
    /// here; use [`validate_metric`] for the metric axioms.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::usage(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::usage(format!("row {i} has invalid distance {v}")));
            }
            dist.extend_from_slice(row);
        }
        Ok(Metric {
            n,
            kind: Kind::Matrix { dist },
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Euclidean dimension, `None` for matrix metrics.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            Kind::Euclidean { dim, .. } => Some(*dim),
            Kind::Matrix { .. } => None,
        }
    }

    /// Coordinates of point `p` for Euclidean metrics.
    pub fn coords(&self, p: usize) -> Option<&[f64]> {
        match &self.kind {
            Kind::Euclidean { dim, coords } => Some(&coords[p * dim..(p + 1) * dim]),
            Kind::Matrix { .. } => None,
        }
    }

    /// Row-major copy of the full distance matrix.
    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|p| (0..self.n).map(|q| self.distance(p, q)).collect())
            .collect()
    }

    /// `d(p, q)`. Panics if either id is out of range; see
    /// [`Metric::checked_distance`].
    #[inline]
    pub fn distance(&self, p: usize, q: usize) -> f64 {
        match &self.kind {
            Kind::Euclidean { dim, coords } => {
                let a = &coords[p * dim..(p + 1) * dim];
                let b = &coords[q * dim..(q + 1) * dim];
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            }
            Kind::Matrix { dist } => dist[p * self.n + q],
        }
    }

    pub fn checked_distance(&self, p: usize, q: usize) -> Result<f64> {
        if p >= self.n || q >= self.n {
            return Err(Error::usage(format!(
                "point id out of range: ({p}, {q}) with n = {}",
                self.n
            )));
        }
        Ok(self.distance(p, q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangleMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleViolation {
    pub p: usize,
    pub q: usize,
    pub via: usize,
    /// `d(p, q) - (d(p, via) + d(via, q))`, positive.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub symmetric: bool,
    pub zero_diagonal: bool,
    pub positive: bool,
    pub triangle_mode: TriangleMode,
    pub triples_checked: u64,
    /// First violations found, capped at [`ValidationConfig::max_reported`].
    pub triangle_violations: Vec<TriangleViolation>,
    pub triangle_violation_count: u64,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.symmetric && self.zero_diagonal && self.positive && self.triangle_violation_count == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationConfig {
    /// Largest `n` for which all `n^3` triples are checked.
    pub exhaustive_cap: usize,
    pub samples: u64,
    pub seed: u64,
    pub max_reported: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            exhaustive_cap: 500,
            samples: 2_000_000,
            seed: 0x5eed,
            max_reported: 16,
        }
    }
}

pub fn validate_metric(m: &Metric) -> ValidationReport {
    validate_metric_with(m, &ValidationConfig::default())
}

pub fn validate_metric_with(m: &Metric, cfg: &ValidationConfig) -> ValidationReport {
    let n = m.len();
    let mut symmetric = true;
    let mut zero_diagonal = true;
    let mut positive = true;
    for p in 0..n {
        if m.distance(p, p) != 0.0 {
            zero_diagonal = false;
        }
        for q in (p + 1)..n {
            let (a, b) = (m.distance(p, q), m.distance(q, p));
            if !approx_eq(a, b) {
                symmetric = false;
            }
            if a <= 0.0 || b <= 0.0 {
                positive = false;
            }
        }
    }

    let mut violations = Vec::new();
    let mut count = 0u64;
    let mut check = |p: usize, q: usize, s: usize| {
        let direct = m.distance(p, q);
        let detour = m.distance(p, s) + m.distance(s, q);
        if direct > detour && !approx_eq(direct, detour) {
            count += 1;
            if violations.len() < cfg.max_reported {
                violations.push(TriangleViolation {
                    p,
                    q,
                    via: s,
                    excess: direct - detour,
                });
            }
        }
    };

    let (mode, checked) = if n <= cfg.exhaustive_cap {
        for p in 0..n {
            for q in 0..n {
                for s in 0..n {
                    check(p, q, s);
                }
            }
        }
        (TriangleMode::Exhaustive, (n as u64).pow(3))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.samples {
            check(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        }
        (TriangleMode::Sampled, cfg.samples)
    };

    ValidationReport {
        n,
        symmetric,
        zero_diagonal,
        positive,
        triangle_mode: mode,
        triples_checked: checked,
        triangle_violations: violations,
        triangle_violation_count: count,
    }
}

/// All-pairs shortest-path closure of the complete graph weighted by `spec`.
///
/// The result is the largest metric dominated by `spec`.
pub fn metric_closure(spec: &[Vec<f64>]) -> Result<Metric> {
    let n = spec.len();
    for (i, row) in spec.iter().enumerate() {
        if row.len() != n {
            return Err(Error::usage(format!("spec row {i} has {} entries, expected {n}", row.len())));
        }
    }
    for p in 0..n {
        if spec[p][p] != 0.0 {
            return Err(Error::usage(format!("spec diagonal entry {p} is {}", spec[p][p])));
        }
        for q in (p + 1)..n {
            let v = spec[p][q];
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::usage(format!("spec entry ({p}, {q}) = {v} is not positive")));
            }
            if v != spec[q][p] {
                return Err(Error::usage(format!(
                    "spec is asymmetric at ({p}, {q}): {v} vs {}",
                    spec[q][p]
                )));
            }
        }
    }

    let mut d: Vec<f64> = spec.iter().flatten().copied().collect();
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            for j in 0..n {
                let via = dik + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    let rows: Vec<Vec<f64>> = d.chunks(n.max(1)).take(n).map(<[f64]>::to_vec).collect();
    Metric::from_matrix(&rows)
}

/// Pivot ids in insertion order, without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PivotSet {
    members: Vec<usize>,
}

impl PivotSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `p`; returns false if it was already a member.
    pub fn insert(&mut self, p: usize) -> bool {
        if self.members.contains(&p) {
            return false;
        }
        self.members.push(p);
        true
    }

    pub fn contains(&self, p: usize) -> bool {
        self.members.contains(&p)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_subset_of(&self, other: &PivotSet) -> bool {
        self.members.iter().all(|p| other.contains(*p))
    }
}

impl FromIterator<usize> for PivotSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = PivotSet::new();
        for p in iter {
            set.insert(p);
        }
        set
    }
}

/// Whether candidate `(d, id)` is strictly nearer than the incumbent: shorter
/// beyond tolerance, or tied within tolerance with a smaller id.
#[inline]
pub(crate) fn nearer(d: f64, id: usize, best_d: f64, best_id: Option<usize>) -> bool {
    match best_id {
        None => true,
        Some(b) => {
            if approx_eq(d, best_d) {
                id < b
            } else {
                d < best_d
            }
        }
    }
}

/// Nearest member of `pivots` to `x`, ties broken by smallest id. An empty set
/// yields `(None, +inf)`.
pub fn nearest_pivot(m: &Metric, x: usize, pivots: &PivotSet) -> (Option<usize>, f64) {
    let mut best: Option<usize> = None;
    let mut best_d = f64::INFINITY;
    for &p in pivots.members() {
        let d = m.distance(x, p);
        if nearer(d, p, best_d, best) {
            best = Some(p);
            best_d = d;
        }
    }
    (best, best_d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingEstimate {
    pub ball_center: usize,
    pub ball_radius: f64,
    pub cover_count: usize,
    /// Centers of the chosen half-radius balls, in selection order.
    pub centers: Vec<usize>,
}

impl DoublingEstimate {
    /// `ceil(log2(cover_count))`, the empirical doubling dimension witness.
    pub fn dimension_bound(&self) -> u32 {
        self.cover_count.next_power_of_two().trailing_zeros()
    }
}

/// Greedy farthest-point cover of `B(center, radius)` by balls of radius
/// `radius / 2`. The first ball is centered at `center`; each further center is
/// the uncovered in-ball point farthest from all chosen centers.
pub fn estimate_doubling_constant(m: &Metric, center: usize, radius: f64) -> Result<DoublingEstimate> {
    if !(radius > 0.0) {
        return Err(Error::usage(format!("ball radius must be positive, got {radius}")));
    }
    if center >= m.len() {
        return Err(Error::usage(format!("center {center} out of range")));
    }
    let ball: Vec<usize> = (0..m.len())
        .filter(|&p| m.distance(center, p) <= radius)
        .collect();
    let half = radius / 2.0;
    // distance from each ball point to its nearest chosen center
    let mut gap: Vec<f64> = ball.iter().map(|&p| m.distance(center, p)).collect();
    let mut centers = vec![center];
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for (idx, &g) in gap.iter().enumerate() {
            if g > half && pick.is_none_or(|(_, best)| g > best) {
                pick = Some((idx, g));
            }
        }
        let Some((idx, _)) = pick else { break };
        let c = ball[idx];
        centers.push(c);
        for (slot, &p) in gap.iter_mut().zip(&ball) {
            *slot = slot.min(m.distance(c, p));
        }
    }
    Ok(DoublingEstimate {
        ball_center: center,
        ball_radius: radius,
        cover_count: centers.len(),
        centers,
    })
}
