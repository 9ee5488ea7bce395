//! Seeded synthetic data: multimodal point clouds for the toy experiments, a
//! car-pedestrian interaction generator with known joint goal modes, and lane
//! scenarios (graph plus lane-following agents) for the anchor pipeline.
//!
//! All generators are pure functions of (seed, config). The PRNG is ChaCha8
//! (portable, documented stream), so identical seeds reproduce identical
//! scenarios across platforms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Polyline};
use crate::lanegraph::{LaneGraph, LaneGraphError, LaneSegment, SegmentId};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("mode probabilities must sum to 1 (got {0})")]
    BadProbabilities(f64),
    #[error("mode sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    LaneGraph(#[from] LaneGraphError),
    #[error("agents JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Deterministic, portable RNG for everything in this crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn standard_normal(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

/// One isotropic Gaussian mode of a multimodal ground-truth distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub probability: f64,
}

impl ModeSpec {
    pub fn new(mean: Vec<f64>, sigma: f64, probability: f64) -> Self {
        Self {
            mean,
            sigma,
            probability,
        }
    }
}

pub fn validate_modes(modes: &[ModeSpec]) -> Result<(), SynthError> {
    let total: f64 = modes.iter().map(|m| m.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(SynthError::BadProbabilities(total));
    }
    for m in modes {
        if m.sigma.is_nan() || m.sigma <= 0.0 {
            return Err(SynthError::BadSigma(m.sigma));
        }
    }
    Ok(())
}

fn pick_mode(modes: &[ModeSpec], rng: &mut SeededRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, m) in modes.iter().enumerate() {
        acc += m.probability;
        if u < acc {
            return i;
        }
    }
    modes.len() - 1
}

/// Draw `n` points: mode chosen by probability, then isotropic Gaussian
/// around its mean.
pub fn sample_multimodal(
    modes: &[ModeSpec],
    n: usize,
    rng: &mut SeededRng,
) -> Result<Vec<Vec<f64>>, SynthError> {
    validate_modes(modes)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let m = &modes[pick_mode(modes, rng)];
        let point = m
            .mean
            .iter()
            .map(|&mu| mu + m.sigma * standard_normal(rng))
            .collect();
        out.push(point);
    }
    Ok(out)
}

/// The four-corner toy fixture: well-separated modes with non-uniform
/// probabilities, the setting where plain WTA leaves hypotheses untrained.
pub fn four_corner_modes(separation: f64, sigma: f64) -> Vec<ModeSpec> {
    let s = separation;
    vec![
        ModeSpec::new(vec![s, s], sigma, 0.4),
        ModeSpec::new(vec![-s, s], sigma, 0.3),
        ModeSpec::new(vec![-s, -s], sigma, 0.2),
        ModeSpec::new(vec![s, -s], sigma, 0.1),
    ]
}

// ---------------------------------------------------------------------------
// Car-pedestrian interaction scenes
// ---------------------------------------------------------------------------

/// Generator knobs for car-pedestrian scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpiConfig {
    pub t_obs: usize,
    /// Timestep between observations (s).
    pub dt: f64,
    /// Horizon after the last observation at which goals are defined (s).
    pub delta_t: f64,
    pub car_speed: [f64; 2],
    pub ped_speed: [f64; 2],
    /// Car distance behind the crossing at the last observation (m).
    pub car_distance: [f64; 2],
    /// Pedestrian distance from the crossing at the last observation (m).
    pub ped_distance: [f64; 2],
    /// Joint mode probabilities: (pass,wait), (pass,cross), (yield,cross),
    /// (yield,wait).
    pub mode_probs: [f64; 4],
    /// Fraction of full speed kept by a yielding car.
    pub yield_factor: f64,
    /// Std-dev of the Gaussian around each joint goal (m).
    pub goal_sigma: f64,
    /// When false the scene has a single (pass, wait) mode.
    pub crossing: bool,
}

impl Default for CpiConfig {
    fn default() -> Self {
        Self {
            t_obs: 4,
            dt: 0.5,
            delta_t: 3.0,
            car_speed: [8.0, 12.0],
            ped_speed: [1.0, 2.0],
            car_distance: [15.0, 25.0],
            ped_distance: [4.0, 7.0],
            mode_probs: [0.4, 0.2, 0.3, 0.1],
            yield_factor: 0.3,
            goal_sigma: 0.25,
            crossing: true,
        }
    }
}

/// One joint future outcome for both agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiMode {
    pub car_goal: Point2,
    pub ped_goal: Point2,
    pub probability: f64,
    pub sigma: f64,
}

/// A car approaching a crossing pedestrian, with multimodal joint goals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiScene {
    pub car_past: Vec<Point2>,
    pub ped_past: Vec<Point2>,
    pub modes: Vec<CpiMode>,
}

impl CpiScene {
    /// Reference point for centering model inputs and targets: the car's
    /// last observed position.
    pub fn reference(&self) -> Point2 {
        *self.car_past.last().unwrap()
    }

    /// Flattened model input: both past tracks relative to the reference,
    /// scaled like the lane-model encoding so the network sees O(1) values.
    pub fn input_vec(&self) -> Vec<f64> {
        let r = self.reference();
        let s = crate::learn::INPUT_SCALE;
        self.car_past
            .iter()
            .chain(self.ped_past.iter())
            .flat_map(|p| [s * (p.x - r.x), s * (p.y - r.y)])
            .collect()
    }

    /// Goal modes as centered 4-vectors (car goal, ped goal).
    pub fn mode_vectors(&self) -> Vec<(Vec<f64>, f64)> {
        let r = self.reference();
        self.modes
            .iter()
            .map(|m| {
                (
                    vec![
                        m.car_goal.x - r.x,
                        m.car_goal.y - r.y,
                        m.ped_goal.x - r.x,
                        m.ped_goal.y - r.y,
                    ],
                    m.probability,
                )
            })
            .collect()
    }

    /// Draw one centered joint-goal target from the scene's modes.
    pub fn draw_target(&self, rng: &mut SeededRng) -> Vec<f64> {
        let modes: Vec<ModeSpec> = self
            .mode_vectors()
            .into_iter()
            .zip(&self.modes)
            .map(|((mean, p), m)| ModeSpec::new(mean, m.sigma, p))
            .collect();
        sample_multimodal(&modes, 1, rng)
            .expect("scene modes are valid")
            .pop()
            .unwrap()
    }
}

/// Generate one car-pedestrian scene.
pub fn gen_cpi(rng: &mut SeededRng, config: &CpiConfig) -> Result<CpiScene, SynthError> {
    let sum: f64 = config.mode_probs.iter().sum();
    if config.crossing && (sum - 1.0).abs() > 1e-9 {
        return Err(SynthError::BadProbabilities(sum));
    }
    if config.t_obs < 2 {
        return Err(SynthError::BadConfig("t_obs must be >= 2".into()));
    }
    let uni = |rng: &mut SeededRng, range: [f64; 2]| rng.gen_range(range[0]..=range[1]);
    let v_car = uni(rng, config.car_speed);
    let v_ped = uni(rng, config.ped_speed);
    let d_car = uni(rng, config.car_distance);
    let d_ped = uni(rng, config.ped_distance);

    // car drives +x toward the crossing at the origin, ped walks +y
    let car_at = |t: f64| Point2::new(-d_car + v_car * t, 0.0);
    let ped_at = |t: f64| Point2::new(0.0, -d_ped + v_ped * t);
    let past_times = (0..config.t_obs).map(|i| {
        -(config.t_obs as f64 - 1.0 - i as f64) * config.dt
    });
    let car_past: Vec<Point2> = past_times.clone().map(car_at).collect();
    let ped_past: Vec<Point2> = past_times.map(ped_at).collect();

    let car_pass = car_at(config.delta_t);
    let car_yield = Point2::new(-d_car + v_car * config.yield_factor * config.delta_t, 0.0);
    let ped_cross = ped_at(config.delta_t);
    // a waiting pedestrian slows to a stop short of the crossing
    let ped_wait = Point2::new(0.0, (-d_ped + v_ped * 0.2 * config.delta_t).min(-1.0));

    let modes = if config.crossing {
        vec![
            CpiMode {
                car_goal: car_pass,
                ped_goal: ped_wait,
                probability: config.mode_probs[0],
                sigma: config.goal_sigma,
            },
            CpiMode {
                car_goal: car_pass,
                ped_goal: ped_cross,
                probability: config.mode_probs[1],
                sigma: config.goal_sigma,
            },
            CpiMode {
                car_goal: car_yield,
                ped_goal: ped_cross,
                probability: config.mode_probs[2],
                sigma: config.goal_sigma,
            },
            CpiMode {
                car_goal: car_yield,
                ped_goal: ped_wait,
                probability: config.mode_probs[3],
                sigma: config.goal_sigma,
            },
        ]
    } else {
        vec![CpiMode {
            car_goal: car_pass,
            ped_goal: ped_wait,
            probability: 1.0,
            sigma: config.goal_sigma,
        }]
    };

    Ok(CpiScene {
        car_past,
        ped_past,
        modes,
    })
}

// ---------------------------------------------------------------------------
// Lane scenarios
// ---------------------------------------------------------------------------

/// Shape of the generated lane graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneTopology {
    /// Trunk splitting into `n_branches` fanned-out arms.
    Fork,
    /// Trunk splitting into two mirrored bulges that merge into a tail.
    Diamond,
}

/// Generator knobs for lane scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaneScenarioConfig {
    pub topology: LaneTopology,
    pub n_branches: usize,
    /// Trunk length before the fork (m).
    pub trunk_len: f64,
    /// Branch arm length (m).
    pub branch_len: f64,
    /// Maximum total turn of the outermost branches (rad).
    pub max_turn: f64,
    /// Polyline discretization step (m).
    pub sample_step: f64,
    pub agent_count: usize,
    pub t_obs: usize,
    /// Total trajectory length in steps (past + future).
    pub t_total: usize,
    pub dt: f64,
    pub speed: [f64; 2],
    /// Std-dev of lateral noise around the followed centerline (m).
    pub lateral_sigma: f64,
    pub corridor_halfwidth: f64,
    /// Per-branch choice probabilities; empty means uniform.
    pub branch_probs: Vec<f64>,
    /// Latent future behavior: after t_obs the agent scales its speed by one
    /// of these factors (maintain / yield / accelerate). Unobservable from
    /// the past, so futures are multimodal even along a fixed anchor.
    pub future_speed_factors: Vec<f64>,
    pub future_speed_probs: Vec<f64>,
}

impl Default for LaneScenarioConfig {
    fn default() -> Self {
        Self {
            topology: LaneTopology::Fork,
            n_branches: 3,
            trunk_len: 40.0,
            branch_len: 70.0,
            max_turn: 0.9,
            sample_step: 2.0,
            agent_count: 48,
            t_obs: 8,
            t_total: 20,
            dt: 0.5,
            speed: [5.0, 8.0],
            lateral_sigma: 0.15,
            corridor_halfwidth: 2.0,
            branch_probs: Vec::new(),
            future_speed_factors: vec![1.0, 0.6, 1.3],
            future_speed_probs: vec![0.5, 0.3, 0.2],
        }
    }
}

/// One generated agent: observed past, ground-truth future, and the segment
/// chain it follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneAgent {
    pub past: Vec<Point2>,
    pub future: Vec<Point2>,
    pub chain: Vec<SegmentId>,
    pub speed: f64,
}

impl LaneAgent {
    /// Heading estimated from the last observed step.
    pub fn observed_yaw(&self) -> f64 {
        let n = self.past.len();
        let a = self.past[n - 2];
        let b = self.past[n - 1];
        (b.y - a.y).atan2(b.x - a.x)
    }
}

/// A lane graph plus agents following its branches.
#[derive(Debug, Clone)]
pub struct LaneScenario {
    pub graph: LaneGraph,
    pub agents: Vec<LaneAgent>,
    pub corridor_halfwidth: f64,
}

#[derive(Serialize, Deserialize)]
struct AgentsFile {
    corridor_halfwidth: f64,
    agents: Vec<LaneAgent>,
}

impl LaneScenario {
    /// Concatenated centerline of the chain an agent follows.
    pub fn chain_polyline(&self, agent: &LaneAgent) -> Polyline {
        Polyline::concat(
            agent
                .chain
                .iter()
                .map(|id| &self.graph.get(id).expect("chain ids in graph").centerline),
        )
        .expect("chain concatenates")
    }

    pub fn agents_json(&self) -> String {
        serde_json::to_string_pretty(&AgentsFile {
            corridor_halfwidth: self.corridor_halfwidth,
            agents: self.agents.clone(),
        })
        .expect("agents serialize")
    }

    pub fn graph_json(&self) -> String {
        self.graph.to_json()
    }

    pub fn from_jsons(graph_json: &str, agents_json: &str) -> Result<Self, SynthError> {
        let graph = LaneGraph::from_json(graph_json)?;
        let file: AgentsFile = serde_json::from_str(agents_json)?;
        Ok(Self {
            graph,
            agents: file.agents,
            corridor_halfwidth: file.corridor_halfwidth,
        })
    }
}

/// Arc (or straight, for tiny angles) of given length turning by `turn`,
/// starting at `start` with heading `heading`.
fn arc_polyline(
    start: Point2,
    heading: f64,
    length: f64,
    turn: f64,
    step: f64,
) -> Result<Polyline, SynthError> {
    let n = ((length / step).ceil() as usize).max(1);
    let mut pts = Vec::with_capacity(n + 1);
    if turn.abs() < 1e-6 {
        for i in 0..=n {
            let s = length * i as f64 / n as f64;
            pts.push(Point2::new(
                start.x + s * heading.cos(),
                start.y + s * heading.sin(),
            ));
        }
    } else {
        let radius = length / turn.abs();
        let sign = turn.signum();
        // center sits on the left (positive turn) or right of the heading
        let cx = start.x - sign * radius * heading.sin();
        let cy = start.y + sign * radius * heading.cos();
        let phi0 = (start.y - cy).atan2(start.x - cx);
        for i in 0..=n {
            let phi = phi0 + sign * turn.abs() * i as f64 / n as f64;
            pts.push(Point2::new(cx + radius * phi.cos(), cy + radius * phi.sin()));
        }
    }
    Polyline::new(pts).map_err(|e| SynthError::BadConfig(format!("arc: {e}")))
}

fn build_fork_graph(config: &LaneScenarioConfig) -> Result<LaneGraph, SynthError> {
    let trunk = arc_polyline(
        Point2::new(-config.trunk_len, 0.0),
        0.0,
        config.trunk_len,
        0.0,
        config.sample_step,
    )?;
    let k = config.n_branches;
    if k < 1 {
        return Err(SynthError::BadConfig("n_branches must be >= 1".into()));
    }
    let mut segments = Vec::with_capacity(k + 1);
    let branch_ids: Vec<SegmentId> = (0..k)
        .map(|i| SegmentId(format!("branch{i}")))
        .collect();
    segments.push(LaneSegment {
        id: "trunk".into(),
        centerline: trunk,
        successors: branch_ids.clone(),
        predecessors: vec![],
    });
    for (i, id) in branch_ids.iter().enumerate() {
        let turn = if k == 1 {
            0.0
        } else {
            -config.max_turn + 2.0 * config.max_turn * i as f64 / (k - 1) as f64
        };
        let centerline = arc_polyline(
            Point2::new(0.0, 0.0),
            0.0,
            config.branch_len,
            turn,
            config.sample_step,
        )?;
        segments.push(LaneSegment {
            id: id.clone(),
            centerline,
            successors: vec![],
            predecessors: vec!["trunk".into()],
        });
    }
    Ok(LaneGraph::new(segments)?)
}

fn build_diamond_graph(config: &LaneScenarioConfig) -> Result<LaneGraph, SynthError> {
    let trunk = arc_polyline(
        Point2::new(-config.trunk_len, 0.0),
        0.0,
        config.trunk_len,
        0.0,
        config.sample_step,
    )?;
    let span = config.branch_len;
    let bulge = span * config.max_turn / 4.0;
    let n = ((span / config.sample_step).ceil() as usize).max(2);
    let lobe = |sign: f64| -> Result<Polyline, SynthError> {
        let pts: Vec<Point2> = (0..=n)
            .map(|i| {
                let x = span * i as f64 / n as f64;
                let y = sign * bulge * (std::f64::consts::PI * x / span).sin();
                Point2::new(x, y)
            })
            .collect();
        Polyline::new(pts).map_err(|e| SynthError::BadConfig(format!("lobe: {e}")))
    };
    let tail = arc_polyline(
        Point2::new(span, 0.0),
        0.0,
        config.trunk_len,
        0.0,
        config.sample_step,
    )?;
    let segments = vec![
        LaneSegment {
            id: "trunk".into(),
            centerline: trunk,
            successors: vec!["upper".into(), "lower".into()],
            predecessors: vec![],
        },
        LaneSegment {
            id: "upper".into(),
            centerline: lobe(1.0)?,
            successors: vec!["tail".into()],
            predecessors: vec!["trunk".into()],
        },
        LaneSegment {
            id: "lower".into(),
            centerline: lobe(-1.0)?,
            successors: vec!["tail".into()],
            predecessors: vec!["trunk".into()],
        },
        LaneSegment {
            id: "tail".into(),
            centerline: tail,
            successors: vec![],
            predecessors: vec!["upper".into(), "lower".into()],
        },
    ];
    Ok(LaneGraph::new(segments)?)
}

/// Generate a lane scenario: graph plus agents following sampled branch
/// chains at sampled speeds with clamped lateral Gaussian noise.
pub fn gen_lane_scenario(
    rng: &mut SeededRng,
    config: &LaneScenarioConfig,
) -> Result<LaneScenario, SynthError> {
    if config.t_obs < 2 || config.t_total <= config.t_obs {
        return Err(SynthError::BadConfig(
            "need t_obs >= 2 and t_total > t_obs".into(),
        ));
    }
    let graph = match config.topology {
        LaneTopology::Fork => build_fork_graph(config)?,
        LaneTopology::Diamond => build_diamond_graph(config)?,
    };
    let chains: Vec<Vec<SegmentId>> = match config.topology {
        LaneTopology::Fork => (0..config.n_branches)
            .map(|i| vec!["trunk".into(), SegmentId(format!("branch{i}"))])
            .collect(),
        LaneTopology::Diamond => vec![
            vec!["trunk".into(), "upper".into(), "tail".into()],
            vec!["trunk".into(), "lower".into(), "tail".into()],
        ],
    };
    let probs = if config.branch_probs.is_empty() {
        vec![1.0 / chains.len() as f64; chains.len()]
    } else {
        if config.branch_probs.len() != chains.len() {
            return Err(SynthError::BadConfig(
                "branch_probs length does not match branch count".into(),
            ));
        }
        let total: f64 = config.branch_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SynthError::BadProbabilities(total));
        }
        config.branch_probs.clone()
    };

    let polylines: Vec<Polyline> = chains
        .iter()
        .map(|chain| {
            Polyline::concat(chain.iter().map(|id| &graph.get(id).unwrap().centerline))
                .expect("generated chains concatenate")
        })
        .collect();

    if config.future_speed_factors.is_empty()
        || config.future_speed_factors.len() != config.future_speed_probs.len()
    {
        return Err(SynthError::BadConfig(
            "future speed factors and probabilities must align".into(),
        ));
    }
    let prob_sum: f64 = config.future_speed_probs.iter().sum();
    if (prob_sum - 1.0).abs() > 1e-9 {
        return Err(SynthError::BadProbabilities(prob_sum));
    }
    let max_factor = config
        .future_speed_factors
        .iter()
        .cloned()
        .fold(1.0f64, f64::max);
    let max_travel = config.speed[1]
        * config.dt
        * (config.t_obs as f64 - 1.0 + max_factor * (config.t_total - config.t_obs) as f64);
    let shortest = polylines
        .iter()
        .map(|p| p.total_len())
        .fold(f64::INFINITY, f64::min);
    if max_travel + 2.0 > shortest {
        return Err(SynthError::BadConfig(format!(
            "agents would overrun the lanes: travel {max_travel:.1} m vs chain {shortest:.1} m"
        )));
    }

    let n_clamp = 0.8 * config.corridor_halfwidth;
    let mut agents = Vec::with_capacity(config.agent_count);
    for _ in 0..config.agent_count {
        let u: f64 = rng.gen();
        let mut branch = probs.len() - 1;
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                branch = i;
                break;
            }
        }
        let speed = rng.gen_range(config.speed[0]..=config.speed[1]);
        // latent behavior after the observation window
        let u: f64 = rng.gen();
        let mut mode = config.future_speed_factors.len() - 1;
        let mut acc_p = 0.0;
        for (i, &p) in config.future_speed_probs.iter().enumerate() {
            acc_p += p;
            if u < acc_p {
                mode = i;
                break;
            }
        }
        let future_speed = speed * config.future_speed_factors[mode];

        let pl = &polylines[branch];
        let travel = config.dt
            * (speed * (config.t_obs as f64 - 1.0)
                + future_speed * (config.t_total - config.t_obs) as f64);
        let slack = (pl.total_len() - travel - 4.0).max(0.0);
        let l0 = 2.0 + rng.gen::<f64>() * slack.min(6.0);
        let mut pts = Vec::with_capacity(config.t_total);
        let mut l = l0;
        for t in 0..config.t_total {
            if t > 0 {
                let v = if t < config.t_obs { speed } else { future_speed };
                l += v * config.dt;
            }
            let n = (config.lateral_sigma * standard_normal(rng)).clamp(-n_clamp, n_clamp);
            pts.push(pl.nt_to_xy(crate::geometry::NtCoord::new(n, l)));
        }
        let future = pts.split_off(config.t_obs);
        agents.push(LaneAgent {
            past: pts,
            future,
            chain: chains[branch].clone(),
            speed,
        });
    }

    let scenario = LaneScenario {
        graph,
        agents,
        corridor_halfwidth: config.corridor_halfwidth,
    };
    // corridor invariant holds by construction; verify before handing out
    for agent in &scenario.agents {
        let pl = scenario.chain_polyline(agent);
        for p in agent.past.iter().chain(&agent.future) {
            let d = pl.distance_to(*p);
            assert!(
                d <= config.corridor_halfwidth + 1e-9,
                "agent left its corridor: {d} m"
            );
        }
    }
    Ok(scenario)
}
