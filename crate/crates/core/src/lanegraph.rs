//! Lane-segment graph and candidate anchor retrieval.
//!
//! Retrieval runs in stages: find segments near the agent, traverse
//! successor/predecessor links into candidate chains, drop chains that are
//! contiguous subsequences of others, drop chains whose look-ahead points
//! coincide, then rank by distance-along-lane score with the centerline yaw
//! score as tie-break. The first ranked candidate for the full trajectory is
//! the oracle anchor.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, GeometryError, Point2, Polyline, Pose};

#[derive(Debug, Error)]
pub enum LaneGraphError {
    #[error("lane graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("duplicate segment id '{0}'")]
    DuplicateId(SegmentId),
    #[error("segment '{by}' references unknown segment '{referenced}'")]
    UnknownSegment { referenced: SegmentId, by: SegmentId },
    #[error("segment '{0}' links to itself")]
    SelfLoop(SegmentId),
    #[error("inconsistent link: '{from}' lists '{to}' as successor but '{to}' does not list '{from}' as predecessor")]
    MissingBackLink { from: SegmentId, to: SegmentId },
    #[error("inconsistent link: '{from}' lists '{to}' as predecessor but '{to}' does not list '{from}' as successor")]
    MissingForwardLink { from: SegmentId, to: SegmentId },
    #[error("seed list is empty")]
    NoSeeds,
    #[error("unknown seed segment '{0}'")]
    UnknownSeed(SegmentId),
    #[error("no anchor available")]
    NoAnchors,
}

/// Unique token identifying a lane segment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub String);

impl std::fmt::Display for SegmentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SegmentId {
    fn from(s: &str) -> Self {
        SegmentId(s.to_string())
    }
}

/// One lane segment: centerline plus graph links.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaneSegment {
    pub id: SegmentId,
    pub centerline: Polyline,
    #[serde(default)]
    pub successors: Vec<SegmentId>,
    #[serde(default)]
    pub predecessors: Vec<SegmentId>,
}

#[derive(Serialize, Deserialize)]
struct LaneGraphFile {
    segments: Vec<LaneSegment>,
}

/// Immutable collection of linked lane segments.
#[derive(Debug, Clone)]
pub struct LaneGraph {
    segments: BTreeMap<SegmentId, LaneSegment>,
}

impl LaneGraph {
    /// Build a graph, rejecting dangling references, self-loops and
    /// successor/predecessor lists that are not mutually consistent.
    pub fn new(segments: Vec<LaneSegment>) -> Result<Self, LaneGraphError> {
        let mut map = BTreeMap::new();
        for seg in segments {
            let id = seg.id.clone();
            if map.insert(id.clone(), seg).is_some() {
                return Err(LaneGraphError::DuplicateId(id));
            }
        }
        for seg in map.values() {
            for (list, forward) in [(&seg.successors, true), (&seg.predecessors, false)] {
                for other in list {
                    if *other == seg.id {
                        return Err(LaneGraphError::SelfLoop(seg.id.clone()));
                    }
                    let Some(target) = map.get(other) else {
                        return Err(LaneGraphError::UnknownSegment {
                            referenced: other.clone(),
                            by: seg.id.clone(),
                        });
                    };
                    if forward && !target.predecessors.contains(&seg.id) {
                        return Err(LaneGraphError::MissingBackLink {
                            from: seg.id.clone(),
                            to: other.clone(),
                        });
                    }
                    if !forward && !target.successors.contains(&seg.id) {
                        return Err(LaneGraphError::MissingForwardLink {
                            from: seg.id.clone(),
                            to: other.clone(),
                        });
                    }
                }
            }
        }
        Ok(Self { segments: map })
    }

    pub fn from_json(json: &str) -> Result<Self, LaneGraphError> {
        let file: LaneGraphFile = serde_json::from_str(json)?;
        Self::new(file.segments)
    }

    pub fn to_json(&self) -> String {
        let file = LaneGraphFile {
            segments: self.segments.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("lane graph serializes")
    }

    pub fn get(&self, id: &SegmentId) -> Option<&LaneSegment> {
        self.segments.get(id)
    }

    pub fn segments(&self) -> impl Iterator<Item = &LaneSegment> {
        self.segments.values()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// All centerlines, id-ordered (used by off-road checks and plots).
    pub fn centerlines(&self) -> Vec<&Polyline> {
        self.segments.values().map(|s| &s.centerline).collect()
    }

    /// Nearest segment to a point regardless of radius, ties by id.
    pub fn nearest_segment(&self, point: Point2) -> Option<SegmentId> {
        self.segments
            .values()
            .map(|s| (s.centerline.distance_to(point), s.id.clone()))
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }
}

/// A chain of connected segments forming one candidate anchor. Scores are
/// filled in by [`rank_anchors`].
#[derive(Debug, Clone)]
pub struct AnchorCandidate {
    pub segment_ids: Vec<SegmentId>,
    pub polyline: Polyline,
    pub dal_score: f64,
    pub yaw_score: f64,
}

impl AnchorCandidate {
    fn from_chain(graph: &LaneGraph, ids: Vec<SegmentId>) -> Result<Self, LaneGraphError> {
        let polyline = Polyline::concat(ids.iter().map(|id| {
            &graph
                .get(id)
                .expect("chain ids come from the graph")
                .centerline
        }))?;
        Ok(Self {
            segment_ids: ids,
            polyline,
            dal_score: 0.0,
            yaw_score: 0.0,
        })
    }
}

/// Segments whose centerline lies within `radius` of the pose position,
/// sorted ascending by distance with ties broken by id.
pub fn closest_segments(graph: &LaneGraph, pose: &Pose, radius: f64) -> Vec<SegmentId> {
    assert!(radius > 0.0, "radius must be positive");
    let mut hits: Vec<(f64, SegmentId)> = graph
        .segments()
        .map(|s| (s.centerline.distance_to(pose.position), s.id.clone()))
        .filter(|(d, _)| *d <= radius)
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    hits.into_iter().map(|(_, id)| id).collect()
}

/// Enumerate candidate chains: every maximal successor path from each seed
/// until the added arc length reaches `ahead`, combined with every maximal
/// predecessor path until `behind`. Paths are cut when a segment repeats
/// within one candidate; duplicate chains across seeds collapse.
pub fn retrieve_candidates(
    graph: &LaneGraph,
    seeds: &[SegmentId],
    ahead: f64,
    behind: f64,
) -> Result<Vec<AnchorCandidate>, LaneGraphError> {
    if seeds.is_empty() {
        return Err(LaneGraphError::NoSeeds);
    }
    let mut chains: Vec<Vec<SegmentId>> = Vec::new();
    for seed in seeds {
        if graph.get(seed).is_none() {
            return Err(LaneGraphError::UnknownSeed(seed.clone()));
        }
        for back in walk(graph, seed, behind, Direction::Backward, &[]) {
            // `back` is ordered seed-first; flip it so the chain reads
            // upstream-to-downstream, then extend forward avoiding repeats.
            let mut prefix: Vec<SegmentId> = back.clone();
            prefix.reverse();
            for fwd in walk(graph, seed, ahead, Direction::Forward, &back) {
                let mut chain = prefix.clone();
                chain.extend(fwd.into_iter().skip(1));
                if !chains.contains(&chain) {
                    chains.push(chain);
                }
            }
        }
    }
    chains
        .into_iter()
        .map(|ids| AnchorCandidate::from_chain(graph, ids))
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Forward,
    Backward,
}

/// Maximal paths from `seed` (inclusive, seed-first) following links in one
/// direction until the arc length added beyond the seed reaches `budget`.
fn walk(
    graph: &LaneGraph,
    seed: &SegmentId,
    budget: f64,
    dir: Direction,
    exclude: &[SegmentId],
) -> Vec<Vec<SegmentId>> {
    let mut paths = Vec::new();
    let mut stack = vec![(vec![seed.clone()], 0.0f64)];
    while let Some((path, acc)) = stack.pop() {
        let head = path.last().unwrap();
        let links = match dir {
            Direction::Forward => &graph.get(head).unwrap().successors,
            Direction::Backward => &graph.get(head).unwrap().predecessors,
        };
        let mut extended = false;
        if acc < budget {
            // reversed so the stack pops links in declaration order
            for next in links.iter().rev() {
                if path.contains(next) || (exclude.contains(next) && *next != path[0]) {
                    continue;
                }
                let len = graph.get(next).unwrap().centerline.total_len();
                let mut longer = path.clone();
                longer.push(next.clone());
                stack.push((longer, acc + len));
                extended = true;
            }
        }
        if !extended {
            paths.push(path);
        }
    }
    paths
}

/// Drop every candidate whose segment-id sequence is a contiguous
/// subsequence of another remaining candidate (longest survives). Output
/// keeps the input order of the survivors.
pub fn prune_subset_duplicates(cands: Vec<AnchorCandidate>) -> Vec<AnchorCandidate> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(cands[i].segment_ids.len()));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let sub = &cands[i].segment_ids;
        let contained = kept.iter().any(|&k| {
            let sup = &cands[k].segment_ids;
            sup.len() >= sub.len() && sup.windows(sub.len()).any(|w| w == sub.as_slice())
        });
        if !contained {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    let mut keep_flags = vec![false; cands.len()];
    for &i in &kept {
        keep_flags[i] = true;
    }
    cands
        .into_iter()
        .zip(keep_flags)
        .filter_map(|(c, keep)| keep.then_some(c))
        .collect()
}

/// Drop candidates whose look-ahead point (arc length `speed * horizon`
/// past the pose projection) falls within `tol` of an already-kept
/// candidate's look-ahead point. Input order is preserved.
pub fn heuristic_prune(
    cands: Vec<AnchorCandidate>,
    pose: &Pose,
    speed: f64,
    horizon: f64,
    tol: f64,
) -> Vec<AnchorCandidate> {
    assert!(speed >= 0.0, "speed must be non-negative");
    let mut kept: Vec<AnchorCandidate> = Vec::new();
    let mut kept_points: Vec<Point2> = Vec::new();
    for cand in cands {
        let proj = cand.polyline.project_xy_to_nt(pose.position);
        let look_ahead = cand.polyline.point_at(proj.l + speed * horizon);
        if kept_points.iter().all(|p| p.dist(look_ahead) > tol) {
            kept.push(cand);
            kept_points.push(look_ahead);
        }
    }
    kept
}

/// Sum of |n| over the projections of the past trajectory onto the
/// candidate; lower means the trajectory followed this anchor.
pub fn distance_along_lane_score(cand: &AnchorCandidate, past: &[Point2]) -> f64 {
    assert!(!past.is_empty(), "past trajectory must be non-empty");
    past.iter()
        .map(|&p| cand.polyline.project_xy_to_nt(p).n.abs())
        .sum()
}

/// Absolute wrapped difference between the pose yaw and the lane yaw at the
/// point closest to the pose; result in [0, pi].
pub fn centerline_yaw_score(cand: &AnchorCandidate, pose: &Pose) -> f64 {
    let proj = cand.polyline.project_xy_to_nt(pose.position);
    wrap_angle(pose.yaw - cand.polyline.yaw_at(proj.l)).abs()
}

/// dal scores quantized to 1e-6 m so float noise does not break ties.
const DAL_TIE_QUANTUM: f64 = 1e-6;

/// Rank candidates ascending by distance-along-lane score; ties within
/// 1e-6 m fall back to the yaw score, then to the id sequence. Errors when
/// no candidate is available (caller falls back to the nearest centerline).
pub fn rank_anchors(
    cands: Vec<AnchorCandidate>,
    past: &[Point2],
    pose: &Pose,
) -> Result<Vec<AnchorCandidate>, LaneGraphError> {
    if cands.is_empty() {
        return Err(LaneGraphError::NoAnchors);
    }
    let mut scored: Vec<AnchorCandidate> = cands
        .into_iter()
        .map(|mut c| {
            c.dal_score = distance_along_lane_score(&c, past);
            c.yaw_score = centerline_yaw_score(&c, pose);
            c
        })
        .collect();
    scored.sort_by(|a, b| {
        let qa = (a.dal_score / DAL_TIE_QUANTUM).round();
        let qb = (b.dal_score / DAL_TIE_QUANTUM).round();
        qa.total_cmp(&qb)
            .then_with(|| a.yaw_score.total_cmp(&b.yaw_score))
            .then_with(|| a.segment_ids.cmp(&b.segment_ids))
    });
    Ok(scored)
}

/// Retrieval knobs. The defaults cover a 6 s horizon at urban speeds and
/// are CLI-overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalParams {
    /// Search radius for seed segments (m).
    pub radius: f64,
    /// Successor traversal budget (m).
    pub ahead: f64,
    /// Predecessor traversal budget (m).
    pub behind: f64,
    /// Future horizon for the look-ahead pruning point (s).
    pub lookahead_horizon: f64,
    /// Two look-ahead points closer than this collapse to one anchor (m).
    pub lookahead_tol: f64,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        Self {
            radius: 10.0,
            ahead: 80.0,
            behind: 20.0,
            lookahead_horizon: 6.0,
            lookahead_tol: 2.0,
        }
    }
}

/// Full retrieval pipeline: seeds, traversal, both pruning passes, ranking.
/// When no segment lies within the radius, falls back to the single nearest
/// centerline.
pub fn retrieve_ranked_anchors(
    graph: &LaneGraph,
    pose: &Pose,
    speed: f64,
    past: &[Point2],
    params: &RetrievalParams,
) -> Result<Vec<AnchorCandidate>, LaneGraphError> {
    let mut seeds = closest_segments(graph, pose, params.radius);
    if seeds.is_empty() {
        match graph.nearest_segment(pose.position) {
            Some(id) => seeds = vec![id],
            None => return Err(LaneGraphError::NoAnchors),
        }
    }
    let cands = retrieve_candidates(graph, &seeds, params.ahead, params.behind)?;
    let cands = prune_subset_duplicates(cands);
    let cands = heuristic_prune(
        cands,
        pose,
        speed,
        params.lookahead_horizon,
        params.lookahead_tol,
    );
    rank_anchors(cands, past, pose)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(id: &str, pts: &[[f64; 2]], succ: &[&str], pred: &[&str]) -> LaneSegment {
        LaneSegment {
            id: id.into(),
            centerline: Polyline::from_xy(pts).unwrap(),
            successors: succ.iter().map(|s| SegmentId::from(*s)).collect(),
            predecessors: pred.iter().map(|s| SegmentId::from(*s)).collect(),
        }
    }

    fn ids(chain: &[&str]) -> Vec<SegmentId> {
        chain.iter().map(|s| SegmentId::from(*s)).collect()
    }

    fn chain_graph() -> LaneGraph {
        LaneGraph::new(vec![
            seg("a", &[[0.0, 0.0], [10.0, 0.0]], &["b"], &[]),
            seg("b", &[[10.0, 0.0], [20.0, 0.0]], &["c"], &["a"]),
            seg("c", &[[20.0, 0.0], [30.0, 0.0]], &[], &["b"]),
        ])
        .unwrap()
    }

    fn fork_graph() -> LaneGraph {
        LaneGraph::new(vec![
            seg("a", &[[0.0, 0.0], [10.0, 0.0]], &["b", "c"], &[]),
            seg("b", &[[10.0, 0.0], [20.0, 5.0]], &[], &["a"]),
            seg("c", &[[10.0, 0.0], [20.0, -5.0]], &[], &["a"]),
        ])
        .unwrap()
    }

    fn diamond_graph() -> LaneGraph {
        LaneGraph::new(vec![
            seg("a", &[[0.0, 0.0], [10.0, 0.0]], &["b", "c"], &[]),
            seg("b", &[[10.0, 0.0], [15.0, 5.0], [20.0, 0.0]], &["d"], &["a"]),
            seg("c", &[[10.0, 0.0], [15.0, -5.0], [20.0, 0.0]], &["d"], &["a"]),
            seg("d", &[[20.0, 0.0], [30.0, 0.0]], &[], &["b", "c"]),
        ])
        .unwrap()
    }

    fn chain_ids(cands: &[AnchorCandidate]) -> Vec<Vec<SegmentId>> {
        cands.iter().map(|c| c.segment_ids.clone()).collect()
    }

    #[test]
    fn graph_validation_rejects_bad_links() {
        let err = LaneGraph::new(vec![seg("a", &[[0.0, 0.0], [1.0, 0.0]], &["ghost"], &[])])
            .unwrap_err();
        assert!(matches!(err, LaneGraphError::UnknownSegment { .. }));

        let err = LaneGraph::new(vec![seg("a", &[[0.0, 0.0], [1.0, 0.0]], &["a"], &["a"])])
            .unwrap_err();
        assert!(matches!(err, LaneGraphError::SelfLoop(_)));

        // b missing the back link
        let err = LaneGraph::new(vec![
            seg("a", &[[0.0, 0.0], [1.0, 0.0]], &["b"], &[]),
            seg("b", &[[1.0, 0.0], [2.0, 0.0]], &[], &[]),
        ])
        .unwrap_err();
        assert!(matches!(err, LaneGraphError::MissingBackLink { .. }));
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let g = diamond_graph();
        let json = g.to_json();
        let back = LaneGraph::from_json(&json).unwrap();
        assert_eq!(back.len(), 4);
        assert!(LaneGraph::from_json("{\"segments\": [{\"id\": \"x\"}]}").is_err());
    }

    #[test]
    fn closest_segments_radius_and_order() {
        let g = LaneGraph::new(vec![
            seg("near", &[[0.0, 1.0], [10.0, 1.0]], &[], &[]),
            seg("far", &[[0.0, 3.0], [10.0, 3.0]], &[], &[]),
        ])
        .unwrap();
        let pose = Pose::new(Point2::new(5.0, 0.0), 0.0);
        assert_eq!(closest_segments(&g, &pose, 5.0), ids(&["near", "far"]));
        assert_eq!(closest_segments(&g, &pose, 2.0), ids(&["near"]));
        assert!(closest_segments(&g, &pose, 0.5).is_empty());
    }

    #[test]
    fn closest_segments_fork_fixture() {
        // pose 2 m before the fork point; root contains it, branches are 2 m away
        let g = LaneGraph::new(vec![
            seg("root", &[[0.0, -20.0], [0.0, 0.0]], &["l", "m", "r"], &[]),
            seg("l", &[[0.0, 0.0], [-15.0, 25.0]], &[], &["root"]),
            seg("m", &[[0.0, 0.0], [0.0, 30.0]], &[], &["root"]),
            seg("r", &[[0.0, 0.0], [15.0, 25.0]], &[], &["root"]),
        ])
        .unwrap();
        let pose = Pose::new(Point2::new(0.0, -2.0), std::f64::consts::FRAC_PI_2);
        assert_eq!(
            closest_segments(&g, &pose, 10.0),
            ids(&["root", "l", "m", "r"])
        );
    }

    #[test]
    fn retrieve_linear_chain() {
        let cands = retrieve_candidates(&chain_graph(), &ids(&["a"]), 100.0, 0.0).unwrap();
        assert_eq!(chain_ids(&cands), vec![ids(&["a", "b", "c"])]);
    }

    #[test]
    fn retrieve_respects_budget() {
        // first successor already meets the 10 m budget, traversal stops
        let cands = retrieve_candidates(&chain_graph(), &ids(&["a"]), 10.0, 0.0).unwrap();
        assert_eq!(chain_ids(&cands), vec![ids(&["a", "b"])]);
    }

    #[test]
    fn retrieve_behind_extends_backward() {
        let cands = retrieve_candidates(&chain_graph(), &ids(&["c"]), 0.0, 10.0).unwrap();
        assert_eq!(chain_ids(&cands), vec![ids(&["b", "c"])]);
    }

    #[test]
    fn retrieve_fork_branches() {
        let cands = retrieve_candidates(&fork_graph(), &ids(&["a"]), 100.0, 0.0).unwrap();
        assert_eq!(
            chain_ids(&cands),
            vec![ids(&["a", "b"]), ids(&["a", "c"])]
        );
    }

    #[test]
    fn retrieve_diamond_paths() {
        let cands = retrieve_candidates(&diamond_graph(), &ids(&["a"]), 100.0, 0.0).unwrap();
        assert_eq!(
            chain_ids(&cands),
            vec![ids(&["a", "b", "d"]), ids(&["a", "c", "d"])]
        );
    }

    #[test]
    fn retrieve_cuts_cycles() {
        let g = LaneGraph::new(vec![
            seg("a", &[[0.0, 0.0], [10.0, 0.0]], &["b"], &["b"]),
            seg("b", &[[10.0, 0.0], [10.0, 10.0], [0.0, 0.0]], &["a"], &["a"]),
        ])
        .unwrap();
        let cands = retrieve_candidates(&g, &ids(&["a"]), 1000.0, 0.0).unwrap();
        assert_eq!(chain_ids(&cands), vec![ids(&["a", "b"])]);
    }

    #[test]
    fn retrieve_dedupes_across_seeds() {
        let cands = retrieve_candidates(&chain_graph(), &ids(&["a", "b"]), 100.0, 100.0).unwrap();
        assert_eq!(chain_ids(&cands), vec![ids(&["a", "b", "c"])]);
    }

    #[test]
    fn candidate_polyline_concatenates() {
        let cands = retrieve_candidates(&chain_graph(), &ids(&["a"]), 100.0, 0.0).unwrap();
        assert_eq!(cands[0].polyline.total_len(), 30.0);
        assert_eq!(cands[0].polyline.points().len(), 4);
    }

    #[test]
    fn prune_subset_keeps_longest() {
        let g = chain_graph();
        let mk = |chain: &[&str]| AnchorCandidate::from_chain(&g, ids(chain)).unwrap();
        let out = prune_subset_duplicates(vec![mk(&["a", "b"]), mk(&["a", "b", "c"])]);
        assert_eq!(chain_ids(&out), vec![ids(&["a", "b", "c"])]);

        let out = prune_subset_duplicates(vec![mk(&["b", "c"]), mk(&["a", "b", "c"]), mk(&["a", "b"])]);
        assert_eq!(chain_ids(&out), vec![ids(&["a", "b", "c"])]);

        // disjoint chains untouched
        let out = prune_subset_duplicates(vec![mk(&["a"]), mk(&["c"])]);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn prune_subset_is_idempotent() {
        let g = diamond_graph();
        let mk = |chain: &[&str]| AnchorCandidate::from_chain(&g, ids(chain)).unwrap();
        let input = vec![mk(&["a", "b", "d"]), mk(&["a", "c", "d"]), mk(&["b", "d"]), mk(&["a"])];
        let once = prune_subset_duplicates(input);
        let twice = prune_subset_duplicates(once.clone());
        assert_eq!(chain_ids(&once), chain_ids(&twice));
    }

    #[test]
    fn heuristic_prune_drops_shared_lookahead() {
        // two branches diverging 40 m downstream; look-ahead 30 m falls
        // before the fork so the second candidate collapses onto the first
        let g = LaneGraph::new(vec![
            seg("a", &[[0.0, 0.0], [40.0, 0.0]], &["b", "c"], &[]),
            seg("b", &[[40.0, 0.0], [80.0, 0.0]], &[], &["a"]),
            seg("c", &[[40.0, 0.0], [68.0, 28.0]], &[], &["a"]),
        ])
        .unwrap();
        let cands = retrieve_candidates(&g, &ids(&["a"]), 100.0, 0.0).unwrap();
        assert_eq!(cands.len(), 2);
        let pose = Pose::new(Point2::new(0.0, 0.0), 0.0);
        let kept = heuristic_prune(cands.clone(), &pose, 5.0, 6.0, 2.0);
        assert_eq!(chain_ids(&kept), vec![ids(&["a", "b"])]);

        // slower agent: look-ahead 12 m, still before the fork -> same result
        let kept = heuristic_prune(cands.clone(), &pose, 2.0, 6.0, 2.0);
        assert_eq!(kept.len(), 1);

        // faster: look-ahead 60 m is past the fork, branches 20+ m apart
        let kept = heuristic_prune(cands, &pose, 10.0, 6.0, 2.0);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn dal_score_examples() {
        let g = chain_graph();
        let cand = AnchorCandidate::from_chain(&g, ids(&["a", "b", "c"])).unwrap();
        let on_line: Vec<Point2> = (0..5).map(|i| Point2::new(2.0 * i as f64, 0.0)).collect();
        assert!(distance_along_lane_score(&cand, &on_line) < 1e-12);
        let offset: Vec<Point2> = (0..5).map(|i| Point2::new(2.0 * i as f64, 1.0)).collect();
        assert!((distance_along_lane_score(&cand, &offset) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn yaw_score_examples() {
        let g = chain_graph();
        let cand = AnchorCandidate::from_chain(&g, ids(&["a"])).unwrap();
        let aligned = Pose::new(Point2::new(5.0, 0.0), 0.0);
        assert!(centerline_yaw_score(&cand, &aligned) < 1e-12);
        let opposing = Pose::new(Point2::new(5.0, 0.0), std::f64::consts::PI);
        assert!((centerline_yaw_score(&cand, &opposing) - std::f64::consts::PI).abs() < 1e-12);
        let skew = Pose::new(Point2::new(5.0, 0.0), 0.3);
        assert!((centerline_yaw_score(&cand, &skew) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rank_on_lane_first() {
        let g = fork_graph();
        let cands = retrieve_candidates(&g, &ids(&["a"]), 100.0, 0.0).unwrap();
        // past trajectory heading into branch b
        let past: Vec<Point2> = vec![
            Point2::new(5.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(12.0, 1.0),
            Point2::new(16.0, 3.0),
        ];
        let pose = Pose::new(past[3], (0.5f64).atan2(1.0));
        let ranked = rank_anchors(cands, &past, &pose).unwrap();
        assert_eq!(ranked[0].segment_ids, ids(&["a", "b"]));
        assert!(ranked[0].dal_score < ranked[1].dal_score);
    }

    #[test]
    fn rank_breaks_dal_ties_by_yaw() {
        // two straight lanes mirrored about the x axis; a pose on the x axis
        // has equal |n| sums but the yaw matches only one of them
        let g = LaneGraph::new(vec![
            seg("up", &[[0.0, 0.0], [20.0, 4.0]], &[], &[]),
            seg("down", &[[0.0, 0.0], [20.0, -4.0]], &[], &[]),
        ])
        .unwrap();
        let cands = retrieve_candidates(&g, &ids(&["down", "up"]), 10.0, 0.0).unwrap();
        let past = vec![Point2::new(0.0, 0.0)];
        let pose = Pose::new(Point2::new(0.0, 0.0), (4.0f64).atan2(20.0));
        let ranked = rank_anchors(cands, &past, &pose).unwrap();
        assert_eq!(ranked[0].segment_ids, ids(&["up"]));
    }

    #[test]
    fn rank_empty_errors() {
        let pose = Pose::new(Point2::new(0.0, 0.0), 0.0);
        assert!(matches!(
            rank_anchors(vec![], &[Point2::new(0.0, 0.0)], &pose),
            Err(LaneGraphError::NoAnchors)
        ));
    }

    #[test]
    fn rank_is_permutation() {
        let g = diamond_graph();
        let cands = retrieve_candidates(&g, &ids(&["a"]), 100.0, 0.0).unwrap();
        let n = cands.len();
        let past = vec![Point2::new(5.0, 1.0), Point2::new(9.0, 2.0)];
        let pose = Pose::new(past[1], 0.2);
        let ranked = rank_anchors(cands, &past, &pose).unwrap();
        assert_eq!(ranked.len(), n);
        let mut seen: Vec<Vec<SegmentId>> = chain_ids(&ranked);
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), n);
    }

    #[test]
    fn pipeline_falls_back_to_nearest() {
        let g = chain_graph();
        // pose far outside the 10 m radius still gets an anchor
        let pose = Pose::new(Point2::new(5.0, 500.0), 0.0);
        let past = vec![Point2::new(5.0, 500.0)];
        let ranked =
            retrieve_ranked_anchors(&g, &pose, 5.0, &past, &RetrievalParams::default()).unwrap();
        assert!(!ranked.is_empty());
    }
}
