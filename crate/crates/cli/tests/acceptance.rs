//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p disk-spanner-cli --test acceptance`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use disk_spanner::adversarial::{build_lower_bound_instance, doubling_profile, verify_non_sparsifiable};
use disk_spanner::diskgraph::{build_disk_graph, normalize, DiskGraph};
use disk_spanner::metric::{approx_eq, validate_metric, TriangleMode};
use disk_spanner::oracle::{
    certify_stretch, check_packing, check_pivot_separation, shortest_paths_from, size_report, WeightedDigraph,
};
use disk_spanner::params::Overrides;
use disk_spanner::relaxed::{build_relaxed_spanner, RelaxedSpanner};
use disk_spanner::spanner::{disk_spanner, Spanner};
use disk_spanner::{Metric, Params, RadiusAssignment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spanner_cli::{generate, Family, GenOptions};

struct Verdict {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, v: &Verdict) -> bool {
    println!(
        "criterion {id:>2} [PRIMARY] {name}: {} ({})",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail
    );
    v.pass
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

const SUITE_N: [usize; 3] = [50, 100, 200];
const SUITE_EPS: [f64; 2] = [0.5, 1.0];
const SUITE_SEEDS: u64 = 20;

struct SuiteInstance {
    n: usize,
    seed: u64,
    metric: Arc<Metric>,
    radii: RadiusAssignment,
    graph: DiskGraph,
}

fn suite() -> Vec<SuiteInstance> {
    let mut out = Vec::new();
    for &n in &SUITE_N {
        for seed in 0..SUITE_SEEDS {
            let mut o = GenOptions::new(n);
            o.seed = seed;
            let inst = generate(Family::EuclidRandom, &o).expect("generate");
            let metric = Arc::new(inst.metric().expect("metric"));
            let radii = inst.radius_assignment().expect("radii");
            let raw = build_disk_graph(metric.clone(), &radii).expect("graph");
            let graph = normalize(&raw).expect("instance has edges").0;
            out.push(SuiteInstance {
                n,
                seed,
                metric,
                radii,
                graph,
            });
        }
    }
    out
}

struct BaselineRun {
    eps: f64,
    spanner: Spanner,
    ratio: f64,
    pass: bool,
}

struct RelaxedRun {
    eps: f64,
    spanner: RelaxedSpanner,
    ratio: f64,
    pass: bool,
    outside: usize,
}

fn criterion_1(suite: &[SuiteInstance]) -> (Verdict, Vec<Vec<BaselineRun>>) {
    let start = Instant::now();
    let runs: Vec<Vec<BaselineRun>> = suite
        .par_iter()
        .map(|s| {
            SUITE_EPS
                .iter()
                .map(|&eps| {
                    let params = Params::proof_safe(eps).unwrap();
                    let spanner = disk_spanner(&s.graph, &params).unwrap();
                    let r = certify_stretch(&s.graph, &spanner.edge_pairs(), &s.graph, 1.0 + eps).unwrap();
                    BaselineRun {
                        eps,
                        spanner,
                        ratio: r.max_ratio,
                        pass: r.pass && r.sampled_pass,
                    }
                })
                .collect()
        })
        .collect();
    let elapsed = start.elapsed();
    let all: Vec<&BaselineRun> = runs.iter().flatten().collect();
    let failed = all.iter().filter(|r| !r.pass).count();
    let worst = all.iter().map(|r| r.ratio / (1.0 + r.eps)).fold(0.0, f64::max);
    let v = Verdict {
        pass: failed == 0 && elapsed <= Duration::from_secs(60),
        detail: format!(
            "{} runs, {failed} failed, worst ratio/bound {worst:.4}, {}",
            all.len(),
            secs(elapsed)
        ),
    };
    (v, runs)
}

fn criterion_2(suite: &[SuiteInstance]) -> (Verdict, Vec<RelaxedRun>) {
    let start = Instant::now();
    let runs: Vec<RelaxedRun> = suite
        .par_iter()
        .flat_map_iter(|s| {
            SUITE_EPS.iter().map(move |&eps| {
                let params = Params::proof_safe(eps).unwrap();
                let spanner = build_relaxed_spanner(s.metric.clone(), &s.radii, &params).unwrap();
                let kept = spanner.retained();
                // membership straight from the definition of I'
                let outside = kept
                    .iter()
                    .filter(|&&(p, q)| {
                        let d = s.metric.distance(p, q);
                        let reach = (1.0 + eps) * s.radii.get(p);
                        !(d <= reach || approx_eq(d, reach))
                    })
                    .count();
                let r = certify_stretch(&s.graph, &kept, spanner.inflated(), 1.0 + eps).unwrap();
                RelaxedRun {
                    eps,
                    ratio: r.max_ratio,
                    pass: r.pass && r.sampled_pass,
                    outside,
                    spanner,
                }
            })
        })
        .collect();
    let elapsed = start.elapsed();
    let failed = runs.iter().filter(|r| !r.pass).count();
    let outside: usize = runs.iter().map(|r| r.outside).sum();
    let worst = runs.iter().map(|r| r.ratio / (1.0 + r.eps)).fold(0.0, f64::max);
    let v = Verdict {
        pass: failed == 0 && outside == 0 && elapsed <= Duration::from_secs(120),
        detail: format!(
            "{} runs, {failed} stretch failures, {outside} edges outside I', worst ratio/bound {worst:.4}, {}",
            runs.len(),
            secs(elapsed)
        ),
    };
    (v, runs)
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [4usize, 8, 16] {
        let inst = build_lower_bound_instance(n, 0.25).unwrap();
        let raw = inst.disk_graph();
        let ess = verify_non_sparsifiable(&raw);
        let val = validate_metric(&inst.metric);
        let g = normalize(&raw).unwrap().0;
        let s = disk_spanner(&g, &Params::proof_safe(0.25).unwrap()).unwrap();
        let full: HashSet<(usize, usize)> = g.edges().iter().map(|e| (e.source, e.target)).collect();
        let got: HashSet<(usize, usize)> = s.edge_pairs().into_iter().collect();
        let ok = raw.edge_count() >= n * n
            && ess.all_essential
            && ess.essential.len() == raw.edge_count()
            && val.pass()
            && val.triangle_mode == TriangleMode::Exhaustive
            && got == full;
        pass &= ok;
        notes.push(format!(
            "n={n}: {} edges, {}/{} essential, triangle {}, spanner keeps {}",
            raw.edge_count(),
            ess.essential.len(),
            ess.edges,
            if val.pass() { "ok" } else { "violated" },
            s.len()
        ));
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: pass && elapsed <= Duration::from_secs(30),
        detail: format!("{}; {}", notes.join("; "), secs(elapsed)),
    }
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let c8 = doubling_profile(&build_lower_bound_instance(8, 0.25).unwrap()).max_cover_count;
    let c16 = doubling_profile(&build_lower_bound_instance(16, 0.25).unwrap()).max_cover_count;
    let elapsed = start.elapsed();
    Verdict {
        pass: c16 <= 2 * c8 && elapsed <= Duration::from_secs(10),
        detail: format!("max cover count n=8: {c8}, n=16: {c16}, {}", secs(elapsed)),
    }
}

fn criterion_5(runs: &[Vec<BaselineRun>]) -> Verdict {
    let mut violations = 0;
    let mut worst_fill: f64 = 0.0;
    let mut checked = 0;
    for r in runs.iter().flatten() {
        let rep = size_report(&r.spanner, Some(2));
        let bound = rep.incoming_bound.expect("dimension given");
        let p = r.spanner.params();
        let expect = ((1.0 + p.alpha) / p.beta + 3.0).powi(2);
        assert!(approx_eq(bound, expect));
        violations += rep.incoming_violations.len();
        worst_fill = worst_fill.max(rep.max_incoming_per_point_level as f64 / bound);
        checked += 1;
    }
    Verdict {
        pass: violations == 0,
        detail: format!("{checked} spanners, {violations} violations, max incoming/bound {worst_fill:.4}"),
    }
}

fn criterion_6(suite: &[SuiteInstance], runs: &[Vec<BaselineRun>]) -> Verdict {
    let results: Vec<(usize, usize, usize, usize, f64)> = suite
        .par_iter()
        .zip(runs.par_iter())
        .flat_map_iter(|(s, rs)| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xba11 ^ s.seed ^ (s.n as u64) << 20);
            let centers: Vec<usize> = (0..16).map(|_| rng.gen_range(0..s.n)).collect();
            rs.iter().map(move |r| {
                let sep = check_pivot_separation(&s.graph, &r.spanner);
                let pack = check_packing(&s.graph, &r.spanner, 2, &centers);
                (
                    sep.pairs_checked,
                    sep.violations.len(),
                    pack.balls_checked,
                    pack.violations.len(),
                    pack.max_fill,
                )
            })
        })
        .collect();
    let pairs: usize = results.iter().map(|r| r.0).sum();
    let sep_bad: usize = results.iter().map(|r| r.1).sum();
    let balls: usize = results.iter().map(|r| r.2).sum();
    let pack_bad: usize = results.iter().map(|r| r.3).sum();
    let fill = results.iter().map(|r| r.4).fold(0.0, f64::max);
    Verdict {
        pass: sep_bad == 0 && pack_bad == 0,
        detail: format!(
            "{pairs} pivot pairs, {sep_bad} too close; {balls} balls, {pack_bad} over the packing bound, max fill {fill:.4}"
        ),
    }
}

struct ChainRun {
    levels: usize,
    spanner: RelaxedSpanner,
    stretch: f64,
}

fn criterion_7() -> (Verdict, Vec<ChainRun>) {
    let start = Instant::now();
    let n = 64;
    let eps = 0.5;
    let params = Params::with_overrides(
        eps,
        Overrides {
            gamma: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(params.prune_quota() < 8);
    let runs: Vec<ChainRun> = [8usize, 16, 32]
        .par_iter()
        .map(|&levels| {
            let mut o = GenOptions::new(n);
            o.levels = Some(levels);
            let inst = generate(Family::MultiscaleChain, &o).unwrap();
            let metric = Arc::new(inst.metric().unwrap());
            let radii = inst.radius_assignment().unwrap();
            let spanner = build_relaxed_spanner(metric, &radii, &params).unwrap();
            let stretch = certify_stretch(spanner.base(), &spanner.retained(), spanner.inflated(), 1.0 + eps)
                .unwrap()
                .max_ratio;
            ChainRun {
                levels,
                spanner,
                stretch,
            }
        })
        .collect();
    let elapsed = start.elapsed();
    let h: Vec<f64> = runs.iter().map(|r| r.spanner.h().len() as f64 / n as f64).collect();
    let hat: Vec<f64> = runs.iter().map(|r| r.spanner.retained_len() as f64 / n as f64).collect();
    let increasing = h.windows(2).all(|w| w[1] > w[0]);
    let growth = hat[2] / hat[0];
    let stretches: Vec<String> = runs.iter().map(|r| format!("{}:{:.4}", r.levels, r.stretch)).collect();
    let v = Verdict {
        pass: increasing && growth <= 1.25 && elapsed <= Duration::from_secs(120),
        detail: format!(
            "|H|/n = {:.3}/{:.3}/{:.3}, |Ĥ|/n = {:.3}/{:.3}/{:.3} (x{growth:.3}), override stretch {} [outside proof regime], {}",
            h[0],
            h[1],
            h[2],
            hat[0],
            hat[1],
            hat[2],
            stretches.join(" "),
            secs(elapsed)
        ),
    };
    (v, runs)
}

fn criterion_8(relaxed: &[RelaxedRun], chain: &[ChainRun]) -> Verdict {
    let checks: Vec<_> = relaxed
        .par_iter()
        .map(|r| &r.spanner)
        .chain(chain.par_iter().map(|r| &r.spanner))
        .map(|s| s.check_prune_structure())
        .collect();
    let failed = checks.iter().filter(|c| !c.pass()).count();
    let dropped: usize = relaxed
        .iter()
        .map(|r| &r.spanner)
        .chain(chain.iter().map(|r| &r.spanner))
        .map(|s| s.trace().dropped())
        .sum();
    Verdict {
        pass: failed == 0,
        detail: format!("{} relaxed runs, {failed} with structural faults, {dropped} edges pruned in total", checks.len()),
    }
}

fn run_cli(bin: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
    if out.status.code() == Some(0) {
        Ok(())
    } else {
        Err(format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn criterion_9() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_spanner");
    let dir = tempfile::tempdir().expect("tempdir");
    let sweep = r#"{"family":"euclid-random","n":[40,60],"eps":[0.5,1.0],"seeds":[3,4]}"#;
    fs::write(dir.path().join("sweep.json"), sweep).unwrap();
    let chain = r#"{"family":"multiscale-chain","n":[40],"levels":[4,8],"eps":[0.5],"gamma":1}"#;
    fs::write(dir.path().join("chain.json"), chain).unwrap();

    let pass = |tag: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let p = |name: &str| dir.path().join(format!("{tag}-{name}")).display().to_string();
        let gens: [(&str, &[&str]); 3] = [
            ("rand", &["euclid-random", "--n", "80", "--seed", "11"]),
            ("lb", &["lowerbound", "--n", "8", "--eps", "0.25"]),
            ("chain", &["multiscale-chain", "--n", "48", "--levels", "12"]),
        ];
        let mut files = Vec::new();
        for (name, args) in gens {
            let inst = p(&format!("{name}.json"));
            let mut a: Vec<&str> = vec!["gen"];
            a.extend_from_slice(args);
            a.extend_from_slice(&["-o", &inst]);
            run_cli(bin, &a)?;
            files.push(inst.clone());
            for mode in ["baseline", "relaxed"] {
                let out = p(&format!("{name}-{mode}.json"));
                let rep = p(&format!("{name}-{mode}-report.json"));
                run_cli(bin, &["build", "--mode", mode, "--eps", "0.25", "-i", &inst, "-o", &out, "--report", &rep])?;
                let ver = p(&format!("{name}-{mode}-verify.json"));
                run_cli(bin, &["verify", "-i", &inst, "-s", &out, "--bound", "1.25", "--report", &ver])?;
                files.extend([out, rep, ver]);
            }
        }
        for sweep in ["sweep", "chain"] {
            let csv = p(&format!("{sweep}.csv"));
            let spec = dir.path().join(format!("{sweep}.json")).display().to_string();
            run_cli(bin, &["bench", "--spec", &spec, "-o", &csv])?;
            files.push(csv);
        }
        Ok(files
            .into_iter()
            .map(|f| {
                let name = Path::new(&f).file_name().unwrap().to_string_lossy().trim_start_matches(tag).to_string();
                (name, fs::read(&f).unwrap())
            })
            .collect())
    };
    match (pass("a"), pass("b")) {
        (Ok(a), Ok(b)) => {
            let differing: Vec<&str> = a
                .iter()
                .zip(&b)
                .filter(|(x, y)| x.1 != y.1)
                .map(|(x, _)| x.0.as_str())
                .collect();
            Verdict {
                pass: differing.is_empty() && a.len() == b.len(),
                detail: format!("{} artifacts compared, {} differ {:?}", a.len(), differing.len(), differing),
            }
        }
        (Err(e), _) | (_, Err(e)) => Verdict {
            pass: false,
            detail: e,
        },
    }
}

/// Shortest simple-path lengths by exhaustive search over all simple paths.
fn enumerate_paths(n: usize, adj: &[Vec<(usize, f64)>], s: usize) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; n];
    let mut stack = vec![(s, 0.0f64, 1u32 << s)];
    while let Some((u, len, used)) = stack.pop() {
        if len < best[u] {
            best[u] = len;
        }
        for &(v, w) in &adj[u] {
            if used & (1 << v) == 0 {
                stack.push((v, len + w, used | 1 << v));
            }
        }
    }
    best
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut pairs = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let density = rng.gen_range(0.1..0.9);
        let mut adj = vec![Vec::new(); n];
        let mut edges = Vec::new();
        for s in 0..n {
            for t in 0..n {
                if s != t && rng.gen_bool(density) {
                    let w = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..10.0) };
                    adj[s].push((t, w));
                    edges.push((s, t, w));
                }
            }
        }
        let g = WeightedDigraph::from_edges(n, edges).unwrap();
        for s in 0..n {
            let fast = shortest_paths_from(&g, s).unwrap();
            let slow = enumerate_paths(n, &adj, s);
            for t in 0..n {
                pairs += 1;
                let (a, b) = (fast.dist[t], slow[t]);
                let same = (a.is_infinite() && b.is_infinite()) || approx_eq(a, b);
                // the reconstructed path must realize the distance
                let path = fast.path_to(t);
                let walked: f64 = path
                    .windows(2)
                    .map(|w| adj[w[0]].iter().filter(|e| e.0 == w[1]).map(|e| e.1).fold(f64::INFINITY, f64::min))
                    .sum();
                let path_ok = a.is_infinite() || approx_eq(walked, a) || (walked == 0.0 && a == 0.0);
                if !same || !path_ok {
                    mismatches += 1;
                }
            }
        }
    }
    Verdict {
        pass: mismatches == 0,
        detail: format!("200 graphs, {pairs} source-target pairs, {mismatches} mismatches"),
    }
}

fn main() {
    let total = Instant::now();
    let suite = suite();
    let mut ok = true;

    let (v1, base_runs) = criterion_1(&suite);
    ok &= report(1, "baseline stretch", &v1);
    let (v2, relaxed_runs) = criterion_2(&suite);
    ok &= report(2, "relaxed stretch and membership", &v2);
    ok &= report(3, "non-sparsifiability", &criterion_3());
    ok &= report(4, "constant doubling", &criterion_4());
    ok &= report(5, "per-level incoming bound", &criterion_5(&base_runs));
    ok &= report(6, "pivot separation and packing", &criterion_6(&suite, &base_runs));
    let (v7, chain_runs) = criterion_7();
    ok &= report(7, "size separation trend", &v7);
    ok &= report(8, "pruning structure", &criterion_8(&relaxed_runs, &chain_runs));
    ok &= report(9, "determinism", &criterion_9());
    ok &= report(10, "oracle validity", &criterion_10());

    println!(
        "acceptance: {} in {}",
        if ok { "ALL PASS" } else { "FAILURES" },
        secs(total.elapsed())
    );
    if !ok {
        std::process::exit(1);
    }
}
