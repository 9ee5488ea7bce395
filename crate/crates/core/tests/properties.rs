//! Property tests for the geometry transforms, the weight family and the
//! anchor pipeline, plus dense-sampling oracles for the projection scores.

use proptest::prelude::*;

use lanecast::geometry::{NtCoord, Point2, Polyline, Pose};
use lanecast::lanegraph::{
    distance_along_lane_score, prune_subset_duplicates, rank_anchors, retrieve_candidates,
    LaneGraph, LaneSegment, SegmentId,
};
use lanecast::objectives::{
    dac_max_depth, dac_partition, dac_weights, ewta_weights, rwta_weights, wta_weights,
    LossVector,
};

/// Random lane-like polyline: bounded per-step turn, segment lengths well
/// above the degeneracy threshold.
fn polyline_strategy(max_segments: usize) -> impl Strategy<Value = Polyline> {
    (
        2..=max_segments,
        proptest::collection::vec((-0.5f64..0.5, 2.0f64..10.0), max_segments),
        -3.15f64..3.15,
    )
        .prop_map(|(nseg, steps, heading0)| {
            let mut heading = heading0;
            let mut pts = vec![Point2::new(0.0, 0.0)];
            for (turn, len) in steps.into_iter().take(nseg) {
                heading += turn;
                let last = *pts.last().unwrap();
                pts.push(Point2::new(
                    last.x + len * heading.cos(),
                    last.y + len * heading.sin(),
                ));
            }
            Polyline::new(pts).expect("strategy produces valid polylines")
        })
}

fn loss_vector_strategy(max_m: usize) -> impl Strategy<Value = LossVector> {
    proptest::collection::vec(0.0f64..100.0, 1..=max_m)
        .prop_map(|v| LossVector::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn round_trip_nt_xy_interior(pl in polyline_strategy(8), x in -30.0f64..30.0, y in -30.0f64..30.0) {
        let q = Point2::new(x, y);
        let c = pl.project_xy_to_nt(q);
        // restrict to interior projections: l clear of every vertex
        let interior = pl
            .cumulative_arclen()
            .iter()
            .all(|&v| (c.l - v).abs() > 1e-7);
        if interior {
            let back = pl.nt_to_xy(c);
            prop_assert!(back.dist(q) < 1e-9, "{:?} -> {:?}", q, back);
        }
    }

    #[test]
    fn monotone_l_along_polyline(pl in polyline_strategy(8), fracs in proptest::collection::vec(0.0f64..1.0, 2..40)) {
        let mut fracs = fracs;
        fracs.sort_by(f64::total_cmp);
        let mut last = -1e-12;
        for f in fracs {
            let l = pl.project_xy_to_nt(pl.point_at(f * pl.total_len())).l;
            prop_assert!(l >= last - 1e-9, "l {} after {}", l, last);
            last = l;
        }
    }

    #[test]
    fn straight_resample_preserves_length(
        spacings in proptest::collection::vec(0.5f64..5.0, 1..10),
        p in 2usize..50,
        angle in -3.0f64..3.0,
    ) {
        let mut pts = vec![Point2::new(0.0, 0.0)];
        let (dx, dy) = (angle.cos(), angle.sin());
        let mut s = 0.0;
        for step in spacings {
            s += step;
            pts.push(Point2::new(s * dx, s * dy));
        }
        let pl = Polyline::new(pts).unwrap();
        let rs = pl.resample(p).unwrap();
        prop_assert_eq!(rs.points().len(), p);
        prop_assert!((rs.total_len() - pl.total_len()).abs() <= 1e-9 * pl.total_len());
    }

    #[test]
    fn reflection_negates_n(l in 0.5f64..9.5, n in 0.01f64..3.0) {
        let pl = Polyline::from_xy(&[[0.0, 0.0], [10.0, 0.0]]).unwrap();
        let up = pl.project_xy_to_nt(Point2::new(l, n));
        let down = pl.project_xy_to_nt(Point2::new(l, -n));
        prop_assert_eq!(up.n, -down.n);
        prop_assert_eq!(up.l, down.l);
    }

    #[test]
    fn weight_vectors_are_valid(losses in loss_vector_strategy(16), eps in 0.001f64..0.5, k_frac in 0.0f64..1.0, d_frac in 0.0f64..1.0) {
        let m = losses.len();
        let k = 1 + ((m - 1) as f64 * k_frac) as usize;
        let depth = 1 + ((dac_max_depth(m) - 1) as f64 * d_frac) as usize;
        let all = [
            wta_weights(&losses),
            rwta_weights(&losses, eps).unwrap(),
            ewta_weights(&losses, k).unwrap(),
            dac_weights(&losses, depth).unwrap(),
        ];
        for w in &all {
            prop_assert!(w.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!(w.values().iter().any(|&x| x > 0.0));
        }
        let sum = |i: usize| all[i].values().iter().sum::<f64>();
        prop_assert!((sum(0) - 1.0).abs() < 1e-9);
        prop_assert!((sum(1) - (1.0 + (m - 1) as f64 * eps)).abs() < 1e-9);
        prop_assert!((sum(2) - 1.0).abs() < 1e-9);
        prop_assert!((sum(3) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weights_depend_only_on_loss_order(losses in loss_vector_strategy(12), scale in 0.001f64..1000.0, eps in 0.01f64..0.5) {
        let scaled = LossVector::new(
            losses.values().iter().map(|&v| v * scale).collect()
        ).unwrap();
        let m = losses.len();
        let (a, b) = (wta_weights(&losses), wta_weights(&scaled));
        prop_assert_eq!(a.values(), b.values());
        let (a, b) = (rwta_weights(&losses, eps).unwrap(), rwta_weights(&scaled, eps).unwrap());
        prop_assert_eq!(a.values(), b.values());
        for k in 1..=m {
            let (a, b) = (ewta_weights(&losses, k).unwrap(), ewta_weights(&scaled, k).unwrap());
            prop_assert_eq!(a.values(), b.values());
        }
        for depth in 1..=dac_max_depth(m) {
            let (a, b) = (dac_weights(&losses, depth).unwrap(), dac_weights(&scaled, depth).unwrap());
            prop_assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn dac_equals_wta_at_max_depth_and_ewta_at_root(losses in loss_vector_strategy(16)) {
        let m = losses.len();
        let (deep, wta) = (dac_weights(&losses, dac_max_depth(m)).unwrap(), wta_weights(&losses));
        prop_assert_eq!(deep.values(), wta.values());
        let (root, uniform) = (dac_weights(&losses, 1).unwrap(), ewta_weights(&losses, m).unwrap());
        prop_assert_eq!(root.values(), uniform.values());
        let top1 = ewta_weights(&losses, 1).unwrap();
        prop_assert_eq!(top1.values(), wta.values());
    }

    #[test]
    fn dac_within_set_permutation_equivariance(
        losses in loss_vector_strategy(16),
        d_frac in 0.0f64..1.0,
        set_pick in 0.0f64..1.0,
        rot in 1usize..8,
    ) {
        let m = losses.len();
        let depth = 1 + ((dac_max_depth(m) - 1) as f64 * d_frac) as usize;
        let sets = dac_partition(m, depth);
        let set = sets[(set_pick * sets.len() as f64) as usize % sets.len()].clone();
        // rotate losses within the chosen set
        let mut perm: Vec<usize> = (0..m).collect();
        let members: Vec<usize> = set.clone().collect();
        let rotated: Vec<usize> = members
            .iter()
            .cycle()
            .skip(rot % members.len())
            .take(members.len())
            .cloned()
            .collect();
        for (a, b) in members.iter().zip(&rotated) {
            perm[*a] = *b;
        }
        let permuted = LossVector::new(
            (0..m).map(|i| losses.values()[perm[i]]).collect()
        ).unwrap();
        let w = dac_weights(&losses, depth).unwrap();
        let wp = dac_weights(&permuted, depth).unwrap();
        for i in 0..m {
            prop_assert_eq!(wp.values()[i], w.values()[perm[i]]);
        }
    }
}

// ---------------------------------------------------------------------------
// Dense-sampling oracle for the projection-based anchor scores
// ---------------------------------------------------------------------------

fn arc_fixture() -> Polyline {
    // gentle quarter arc, radius 20
    let pts: Vec<Point2> = (0..=40)
        .map(|i| {
            let phi = std::f64::consts::FRAC_PI_2 * i as f64 / 40.0;
            Point2::new(20.0 * phi.sin(), 20.0 * (1.0 - phi.cos()))
        })
        .collect();
    Polyline::new(pts).unwrap()
}

/// Unsigned distance by brute force over a dense resampling.
fn dense_distance(pl: &Polyline, q: Point2, step: f64) -> f64 {
    let n = (pl.total_len() / step).ceil() as usize;
    (0..=n)
        .map(|i| pl.point_at(pl.total_len() * i as f64 / n as f64).dist(q))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn dal_score_matches_dense_sampling_oracle() {
    let arc = arc_fixture();
    let graph = LaneGraph::new(vec![LaneSegment {
        id: "arc".into(),
        centerline: arc.clone(),
        successors: vec![],
        predecessors: vec![],
    }])
    .unwrap();
    let cand = retrieve_candidates(&graph, &["arc".into()], 1.0, 0.0)
        .unwrap()
        .pop()
        .unwrap();
    // past trajectory weaving around the arc; offsets stay away from zero
    // so the dense oracle's resolution (~step^2 / 8|n|) is meaningful
    let past: Vec<Point2> = (0..8)
        .map(|i| {
            let l = 3.0 + 3.0 * i as f64;
            let n = (0.5 + 0.3 * ((i as f64) * 0.9).sin()) * if i % 2 == 0 { 1.0 } else { -1.0 };
            arc.nt_to_xy(NtCoord::new(n, l))
        })
        .collect();
    let got = distance_along_lane_score(&cand, &past);
    let oracle: f64 = past
        .iter()
        .map(|&p| dense_distance(&cand.polyline, p, 2e-4))
        .sum();
    assert!(
        (got - oracle).abs() < 1e-6 * past.len() as f64,
        "got {got}, oracle {oracle}"
    );
}

#[test]
fn fork_ranking_matches_projection_oracle() {
    // three-branch fork; ground truth turns onto the middle branch
    let seg = |id: &str, pts: Vec<Point2>, succ: Vec<&str>, pred: Vec<&str>| LaneSegment {
        id: id.into(),
        centerline: Polyline::new(pts).unwrap(),
        successors: succ.into_iter().map(SegmentId::from).collect(),
        predecessors: pred.into_iter().map(SegmentId::from).collect(),
    };
    let line = |x0: f64, y0: f64, x1: f64, y1: f64| {
        (0..=10)
            .map(|i| {
                let t = i as f64 / 10.0;
                Point2::new(x0 + t * (x1 - x0), y0 + t * (y1 - y0))
            })
            .collect::<Vec<_>>()
    };
    let graph = LaneGraph::new(vec![
        seg("root", line(-30.0, 0.0, 0.0, 0.0), vec!["a", "b", "c"], vec![]),
        seg("a", line(0.0, 0.0, 40.0, 25.0), vec![], vec!["root"]),
        seg("b", line(0.0, 0.0, 45.0, 5.0), vec![], vec!["root"]),
        seg("c", line(0.0, 0.0, 40.0, -20.0), vec![], vec!["root"]),
    ])
    .unwrap();
    let cands = retrieve_candidates(
        &graph,
        &["root".into()],
        100.0,
        0.0,
    )
    .unwrap();
    assert_eq!(cands.len(), 3);
    // trajectory: straight along root, then onto branch b
    let mut past = line(-20.0, 0.0, 0.0, 0.0);
    past.extend(line(4.5, 0.5, 45.0, 5.0));
    let pose = Pose::new(*past.last().unwrap(), (5.0f64).atan2(45.0));
    let ranked = rank_anchors(cands.clone(), &past, &pose).unwrap();
    assert_eq!(ranked[0].segment_ids[1], SegmentId::from("b"));

    // the ranking order must agree with dense-sampling distance sums
    let mut oracle_scores: Vec<(f64, Vec<SegmentId>)> = cands
        .iter()
        .map(|c| {
            let s: f64 = past
                .iter()
                .map(|&p| dense_distance(&c.polyline, p, 2e-3))
                .sum();
            (s, c.segment_ids.clone())
        })
        .collect();
    oracle_scores.sort_by(|x, y| x.0.total_cmp(&y.0));
    let ranked_ids: Vec<Vec<SegmentId>> = ranked.iter().map(|c| c.segment_ids.clone()).collect();
    let oracle_ids: Vec<Vec<SegmentId>> = oracle_scores.into_iter().map(|(_, id)| id).collect();
    assert_eq!(ranked_ids, oracle_ids);
}

#[test]
fn prune_is_idempotent_on_random_subchains() {
    // fixed linear graph; candidates are random contiguous windows
    let mut segments = Vec::new();
    let names = ["s0", "s1", "s2", "s3", "s4"];
    for (i, name) in names.iter().enumerate() {
        let x0 = i as f64 * 10.0;
        segments.push(LaneSegment {
            id: (*name).into(),
            centerline: Polyline::from_xy(&[[x0, 0.0], [x0 + 10.0, 0.0]]).unwrap(),
            successors: if i + 1 < names.len() {
                vec![names[i + 1].into()]
            } else {
                vec![]
            },
            predecessors: if i > 0 { vec![names[i - 1].into()] } else { vec![] },
        });
    }
    let graph = LaneGraph::new(segments).unwrap();
    let mut rng = lanecast::synthgen::seeded_rng(404);
    use rand::Rng;
    for _ in 0..50 {
        let mut cands = Vec::new();
        for _ in 0..rng.gen_range(1..8) {
            let start = rng.gen_range(0..names.len());
            let end = rng.gen_range(start + 1..=names.len());
            let seeds: Vec<SegmentId> = vec![names[start].into()];
            let budget: f64 = (end - start - 1) as f64 * 10.0 - 5.0;
            let mut got = retrieve_candidates(&graph, &seeds, budget.max(0.0), 0.0).unwrap();
            cands.append(&mut got);
        }
        let once = prune_subset_duplicates(cands);
        let ids_once: Vec<Vec<SegmentId>> =
            once.iter().map(|c| c.segment_ids.clone()).collect();
        let twice = prune_subset_duplicates(once);
        let ids_twice: Vec<Vec<SegmentId>> =
            twice.iter().map(|c| c.segment_ids.clone()).collect();
        assert_eq!(ids_once, ids_twice);
        // no survivor contains another
        for a in &ids_twice {
            for b in &ids_twice {
                if a != b {
                    assert!(
                        !(b.len() >= a.len() && b.windows(a.len()).any(|w| w == a.as_slice())),
                        "{a:?} inside {b:?}"
                    );
                }
            }
        }
    }
}
