use std::collections::BTreeSet;

use disk_spanner::adversarial::{build_lower_bound_instance, Label};
use disk_spanner::params::Overrides;
use disk_spanner::relaxed::build_relaxed_spanner;
use disk_spanner::Params;

fn gamma_one(eps: f64) -> Params {
    Params::with_overrides(
        eps,
        Overrides {
            gamma: Some(1),
            ..Default::default()
        },
    )
    .unwrap()
}

/// Per `x_j`: levels of all union `y -> x_j` edges and of the retained ones.
fn y_levels(n: usize) -> (Vec<(BTreeSet<usize>, BTreeSet<usize>)>, usize, usize) {
    let inst = build_lower_bound_instance(n, 0.25).unwrap();
    let rs = build_relaxed_spanner(inst.metric.clone(), &inst.radii, &gamma_one(0.25)).unwrap();
    let per_x = (1..=n)
        .map(|j| {
            let x = inst.x(j);
            let mut all = BTreeSet::new();
            let mut kept = BTreeSet::new();
            for e in rs.edges().iter().filter(|e| e.target == x) {
                if matches!(inst.labels[e.source], Label::Y(_)) {
                    all.insert(e.level);
                    if e.survived {
                        kept.insert(e.level);
                    }
                }
            }
            (all, kept)
        })
        .collect();
    (per_x, rs.retained_len(), inst.disk_graph().edge_count())
}

#[test]
fn gamma_one_keeps_four_y_levels_per_x() {
    let (per_x, _, _) = y_levels(8);
    for (j, (all, kept)) in per_x.iter().enumerate() {
        assert_eq!(kept.len(), all.len().min(4), "x{}", j + 1);
        assert_eq!(kept.len(), 4, "x{}", j + 1);
    }
}

/// Retained edges by endpoint kind: `(y -> x, x -> x, y -> y)`.
fn retained_kinds(n: usize) -> (usize, usize, usize, usize) {
    let inst = build_lower_bound_instance(n, 0.25).unwrap();
    let rs = build_relaxed_spanner(inst.metric.clone(), &inst.radii, &gamma_one(0.25)).unwrap();
    let is_x = |p: usize| matches!(inst.labels[p], Label::X(_));
    let (mut yx, mut xx, mut yy) = (0, 0, 0);
    for e in rs.edges().iter().filter(|e| e.survived) {
        match (is_x(e.source), is_x(e.target)) {
            (false, true) => yx += 1,
            (true, true) => xx += 1,
            (false, false) => yy += 1,
            (true, false) => panic!("x -> y edge {} -> {}", e.source, e.target),
        }
    }
    (yx, xx, yy, inst.disk_graph().edge_count())
}

#[test]
fn gamma_one_retained_size_against_full_graph() {
    for n in [8, 16, 32] {
        let (yx, xx, yy, full) = retained_kinds(n);
        assert_eq!(full, n * n);
        assert_eq!(yx, 4 * n);
        assert_eq!(xx, 2 * (n - 1));
        if n >= 16 {
            assert!(yx + xx + yy < full, "n = {n}: {}", yx + xx + yy);
        }
    }
    // at n = 8 the y -> y edges that only exist after inflation outweigh the
    // pruned y -> x edges
    assert_eq!(retained_kinds(8), (32, 14, 22, 64));
}
