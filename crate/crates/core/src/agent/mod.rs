//! Assisted exploration agent. It proposes one point in gesture-feature space
//! per sound preset, and a human (or a simulated oracle) steers it with
//! binary guiding feedback and zone feedback.
//!
//! The explorer is a directional random walk. Every proposal moves all points
//! along a direction in the product space, plus Gaussian jitter. Positive
//! feedback keeps the direction and lengthens the step. Negative feedback
//! returns to the positions before the rejected proposal, turns the
//! direction away from itself, and shortens the step. Zone feedback jumps to
//! a distant region.

mod log;
mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::RegressionSet;

pub use self::log::{replay_log, AgentLog, LogEvent};
pub use oracle::{mean_distance, Feedback, SimulatedOracle, DEFAULT_PATIENCE};

/// Per-dimension bounds of the space the agent explores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub dims: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
}

impl FeatureSpace {
    pub fn new(dims: Vec<String>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        let s = FeatureSpace { dims, bounds };
        s.validate()?;
        Ok(s)
    }

    /// `[0, 1]` in every named dimension.
    pub fn unit(dims: &[&str]) -> Result<Self> {
        Self::new(
            dims.iter().map(|d| d.to_string()).collect(),
            vec![(0.0, 1.0); dims.len()],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.len() != self.bounds.len() {
            return Err(Error::param(
                "feature space needs ≥ 1 dimension with one bound pair each",
            ));
        }
        for (name, (lo, hi)) in self.dims.iter().zip(&self.bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param(format!(
                    "dimension {name} has invalid bounds ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn diagonal(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.len()
            && p.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn clamp(&self, p: &mut [f64]) {
        for (v, (lo, hi)) in p.iter_mut().zip(&self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|(lo, hi)| rng.random_range(*lo..=*hi))
            .collect()
    }
}

/// Tunable constants of the explorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Initial step as a fraction of the bounds diagonal; zone feedback
    /// resets to it.
    pub step_size: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub grow: f64,
    pub shrink: f64,
    /// Minimum jump per point on zone feedback, as a fraction of the diagonal.
    pub zone_fraction: f64,
    pub zone_attempts: usize,
    /// Move every point along one shared direction instead of independently.
    pub shared_direction: bool,
    /// Jitter standard deviation relative to the step length.
    pub jitter: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            step_size: 0.05,
            min_step: 0.01,
            max_step: 0.5,
            grow: 1.1,
            shrink: 0.9,
            zone_fraction: 0.25,
            zone_attempts: 1000,
            shared_direction: true,
            jitter: 0.25,
        }
    }
}

impl AgentConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.min_step > 0.0
            && self.min_step <= self.max_step
            && self.max_step <= 0.5
            && (0.0..=self.max_step).contains(&self.step_size)
            && self.grow >= 1.0
            && self.shrink > 0.0
            && self.shrink <= 1.0
            && self.zone_fraction >= 0.0
            && self.zone_attempts >= 1
            && self.jitter >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::param(
                "agent config needs 0 < min_step ≤ max_step ≤ 0.5, step_size ≤ max_step, grow ≥ 1, 0 < shrink ≤ 1",
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum HistoryEntry {
    Proposal { id: u64, points: Vec<Vec<f64>> },
    Guiding { sign: i8 },
    Zone,
}

/// Complete explorer state, including the PRNG, so a serialized state
/// resumes exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    space: FeatureSpace,
    config: AgentConfig,
    seed: u64,
    positions: Vec<Vec<f64>>,
    /// Unit vector over all points' coordinates, point-major.
    direction: Vec<f64>,
    step_size: f64,
    rng: ChaCha8Rng,
    next_id: u64,
    /// Positions before the latest proposal moved them.
    before_proposal: Option<Vec<Vec<f64>>>,
    /// The next proposal presents the current positions unmoved.
    fresh: bool,
    history: Vec<HistoryEntry>,
}

/// Points proposed for the preset slots, paired with the presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingProposal {
    pub id: u64,
    pub points: Vec<Vec<f64>>,
    pub presets: Vec<Vec<f64>>,
}

fn unit_vector(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1e-12 && n.is_finite() {
        v.iter_mut().for_each(|x| *x /= n);
        true
    } else {
        false
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if unit_vector(&mut v) {
            return v;
        }
    }
}

/// Unit vector at angle `theta` from `v`, turned toward a random orthogonal
/// direction. One-dimensional inputs come back unchanged.
fn rotate_away(rng: &mut ChaCha8Rng, v: &[f64], theta: f64) -> Vec<f64> {
    if v.len() < 2 {
        return v.to_vec();
    }
    let w = loop {
        let mut w: Vec<f64> = (0..v.len()).map(|_| rng.sample(StandardNormal)).collect();
        let along: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
        w.iter_mut().zip(v).for_each(|(a, b)| *a -= along * b);
        if unit_vector(&mut w) {
            break w;
        }
    };
    let mut out: Vec<f64> = v
        .iter()
        .zip(&w)
        .map(|(a, b)| theta.cos() * a + theta.sin() * b)
        .collect();
    unit_vector(&mut out);
    out
}

impl AgentState {
    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn n_presets(&self) -> usize {
        self.positions.len()
    }

    pub fn proposals_made(&self) -> u64 {
        self.next_id
    }

    /// Replaces the current positions (clamped into bounds), e.g. to start
    /// from a known configuration.
    pub fn with_positions(mut self, positions: Vec<Vec<f64>>) -> Result<Self> {
        if positions.len() != self.positions.len()
            || positions.iter().any(|p| p.len() != self.space.len())
        {
            return Err(Error::Schema(
                "positions do not match the agent's shape".into(),
            ));
        }
        self.positions = positions;
        for p in &mut self.positions {
            self.space.clamp(p);
        }
        Ok(self)
    }

    /// SHA-256 of the serialized state, hex encoded.
    pub fn state_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("agent state serializes");
        hex::encode(Sha256::digest(json))
    }

    fn random_direction(&mut self) -> Vec<f64> {
        let (n, d) = (self.positions.len(), self.space.len());
        if self.config.shared_direction {
            let u = random_unit(&mut self.rng, d);
            let s = (n as f64).sqrt();
            (0..n).flat_map(|_| u.iter().map(move |x| x / s)).collect()
        } else {
            random_unit(&mut self.rng, n * d)
        }
    }

    fn require_proposal(&self, action: &str) -> Result<()> {
        if self.next_id == 0 {
            return Err(Error::Protocol {
                action: action.into(),
                phase: "no proposal yet".into(),
                expected: vec!["propose".into()],
            });
        }
        Ok(())
    }
}

/// Fresh explorer with uniformly random positions and direction.
pub fn agent_init(
    space: FeatureSpace,
    n_presets: usize,
    seed: u64,
    config: AgentConfig,
) -> Result<AgentState> {
    space.validate()?;
    config.validate()?;
    if n_presets < 2 {
        return Err(Error::param("the agent needs at least 2 preset slots"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n_presets).map(|_| space.sample(&mut rng)).collect();
    let mut state = AgentState {
        step_size: config.step_size,
        space,
        config,
        seed,
        positions,
        direction: Vec::new(),
        rng,
        next_id: 0,
        before_proposal: None,
        fresh: true,
        history: Vec::new(),
    };
    state.direction = state.random_direction();
    Ok(state)
}

/// Next proposal. The first proposal after initialization or zone feedback
/// presents the current positions; later ones step along the direction by
/// `step_size · diagonal`, add jitter, and clamp into bounds.
pub fn agent_propose(
    mut state: AgentState,
    presets: &[Vec<f64>],
) -> Result<(MappingProposal, AgentState)> {
    if presets.len() != state.positions.len() {
        return Err(Error::Schema(format!(
            "{} presets for {} agent slots",
            presets.len(),
            state.positions.len()
        )));
    }
    if state.fresh {
        state.fresh = false;
        state.before_proposal = None;
    } else {
        let d = state.space.len();
        let len = state.step_size * state.space.diagonal();
        let sigma = len * state.config.jitter;
        state.before_proposal = Some(state.positions.clone());
        for (i, p) in state.positions.iter_mut().enumerate() {
            for (k, v) in p.iter_mut().enumerate() {
                let noise: f64 = if sigma > 0.0 {
                    state.rng.sample::<f64, _>(StandardNormal) * sigma
                } else {
                    0.0
                };
                *v += len * state.direction[i * d + k] + noise;
            }
        }
        for p in &mut state.positions {
            state.space.clamp(p);
        }
    }
    let id = state.next_id;
    state.next_id += 1;
    state.history.push(HistoryEntry::Proposal {
        id,
        points: state.positions.clone(),
    });
    let proposal = MappingProposal {
        id,
        points: state.positions.clone(),
        presets: presets.to_vec(),
    };
    Ok((proposal, state))
}

/// Applies binary guiding feedback to the latest proposal.
pub fn apply_guiding_feedback(mut state: AgentState, sign: i8) -> Result<AgentState> {
    state.require_proposal("guiding")?;
    match sign {
        1 => {
            state.step_size = (state.step_size * state.config.grow).min(state.config.max_step);
        }
        -1 => {
            if let Some(prev) = state.before_proposal.take() {
                state.positions = prev;
            }
            let theta = state.rng.random_range(0.0..=std::f64::consts::FRAC_PI_2);
            let reversed: Vec<f64> = state.direction.iter().map(|x| -x).collect();
            state.direction = if state.config.shared_direction {
                let n = state.positions.len();
                let d = state.space.len();
                let s = (n as f64).sqrt();
                let u: Vec<f64> = reversed[..d].iter().map(|x| x * s).collect();
                let u = rotate_away(&mut state.rng, &u, theta);
                (0..n).flat_map(|_| u.iter().map(move |x| x / s)).collect()
            } else {
                rotate_away(&mut state.rng, &reversed, theta)
            };
            state.step_size = (state.step_size * state.config.shrink)
                .clamp(state.config.min_step, state.config.max_step);
        }
        other => {
            return Err(Error::param(format!(
                "guiding feedback must be +1 or -1, got {other}"
            )))
        }
    }
    state.history.push(HistoryEntry::Guiding { sign });
    Ok(state)
}

/// Moves every point at least `zone_fraction · diagonal` away from where it
/// is, by rejection sampling. If no sample qualifies within the attempt
/// budget, the sample whose nearest point moved furthest is used. The
/// direction is redrawn and the step reset.
pub fn apply_zone_feedback(mut state: AgentState) -> Result<AgentState> {
    state.require_proposal("zone")?;
    let min_jump = state.config.zone_fraction * state.space.diagonal();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..state.config.zone_attempts {
        let candidate: Vec<Vec<f64>> = (0..state.positions.len())
            .map(|_| state.space.sample(&mut state.rng))
            .collect();
        let worst = candidate
            .iter()
            .zip(&state.positions)
            .map(|(c, p)| crate::models::euclidean(c, p))
            .fold(f64::INFINITY, f64::min);
        let done = worst >= min_jump;
        if best.as_ref().is_none_or(|(b, _)| worst > *b) {
            best = Some((worst, candidate));
        }
        if done {
            break;
        }
    }
    let (jump, positions) = best.expect("at least one zone attempt");
    if jump < min_jump {
        ::log::warn!(
            "zone feedback fell back to a {jump:.4} jump after {} attempts",
            state.config.zone_attempts
        );
    }
    state.positions = positions;
    state.direction = state.random_direction();
    state.step_size = state.config.step_size;
    state.before_proposal = None;
    state.fresh = true;
    state.history.push(HistoryEntry::Zone);
    Ok(state)
}

/// Outcome of a scripted agent-plus-oracle run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// Mean distance to the targets of each proposal, in order.
    pub distances: Vec<f64>,
    pub feedback: Vec<Feedback>,
    /// Distance of the first proposal.
    pub initial_distance: f64,
    /// Distance of the positions held after the last feedback.
    pub final_distance: f64,
}

impl SimulationReport {
    pub fn ratio(&self) -> f64 {
        if self.initial_distance > 0.0 {
            self.final_distance / self.initial_distance
        } else {
            0.0
        }
    }
}

/// Runs `iterations` rounds of propose then judge, returning the report and
/// the final state (whose history replays to itself).
pub fn simulate(
    mut state: AgentState,
    oracle: &mut SimulatedOracle,
    presets: &[Vec<f64>],
    iterations: usize,
) -> Result<(SimulationReport, AgentState)> {
    let mut distances = Vec::with_capacity(iterations);
    let mut feedback = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let (proposal, next) = agent_propose(state, presets)?;
        distances.push(oracle.distance(&proposal.points));
        let f = oracle.judge(&proposal.points)?;
        feedback.push(f);
        state = match f {
            Feedback::Guiding(sign) => apply_guiding_feedback(next, sign)?,
            Feedback::Zone => apply_zone_feedback(next)?,
        };
    }
    let initial_distance = distances
        .first()
        .copied()
        .unwrap_or_else(|| oracle.distance(state.positions()));
    let final_distance = oracle.distance(state.positions());
    Ok((
        SimulationReport {
            distances,
            feedback,
            initial_distance,
            final_distance,
        },
        state,
    ))
}

/// Training pairs in slot order: proposal points as inputs, presets as
/// targets. Nothing else enters the set.
pub fn build_training_set(proposal: &MappingProposal) -> Result<RegressionSet> {
    RegressionSet::new(proposal.points.clone(), proposal.presets.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn presets(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64, 10.0 * i as f64]).collect()
    }

    fn agent(seed: u64) -> AgentState {
        agent_init(
            FeatureSpace::unit(&["x", "y"]).unwrap(),
            4,
            seed,
            AgentConfig::default(),
        )
        .unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (norm(a) * norm(b))
    }

    #[test]
    fn init_is_seeded() {
        let (a, _) = agent_propose(agent(5), &presets(4)).unwrap();
        let (b, _) = agent_propose(agent(5), &presets(4)).unwrap();
        let (c, _) = agent_propose(agent(6), &presets(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
        assert!((norm(agent(5).direction()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn init_rejects_single_slot_and_bad_space() {
        let space = FeatureSpace::unit(&["x"]).unwrap();
        assert!(agent_init(space, 1, 0, AgentConfig::default()).is_err());
        assert!(FeatureSpace::new(vec!["x".into()], vec![(1.0, 1.0)]).is_err());
    }

    #[test]
    fn zero_step_proposals_stand_still() {
        let cfg = AgentConfig {
            step_size: 0.0,
            ..Default::default()
        };
        let s = agent_init(FeatureSpace::unit(&["x", "y"]).unwrap(), 3, 1, cfg).unwrap();
        let start = s.positions().to_vec();
        let (_, s) = agent_propose(s, &presets(3)).unwrap();
        let (p, _) = agent_propose(s, &presets(3)).unwrap();
        assert_eq!(p.points, start);
    }

    #[test]
    fn guiding_before_proposal_is_protocol_error() {
        assert!(matches!(
            apply_guiding_feedback(agent(0), 1),
            Err(Error::Protocol { .. })
        ));
        assert!(matches!(
            apply_zone_feedback(agent(0)),
            Err(Error::Protocol { .. })
        ));
    }

    #[test]
    fn positive_feedback_grows_step_and_keeps_direction() {
        let (_, s) = agent_propose(agent(2), &presets(4)).unwrap();
        let dir = s.direction().to_vec();
        let step = s.step_size();
        let s = apply_guiding_feedback(s, 1).unwrap();
        assert_eq!(s.direction(), dir.as_slice());
        assert!((s.step_size() - step * 1.1).abs() < 1e-15);
    }

    #[test]
    fn negative_feedback_reverses_and_reverts() {
        for seed in 0..50 {
            let (_, s) = agent_propose(agent(seed), &presets(4)).unwrap();
            let before = s.positions().to_vec();
            let (_, s) = agent_propose(s, &presets(4)).unwrap();
            let dir = s.direction().to_vec();
            let s = apply_guiding_feedback(s, -1).unwrap();
            assert!(cosine(s.direction(), &dir) <= 1e-12);
            assert!((norm(s.direction()) - 1.0).abs() < 1e-9);
            assert_eq!(s.positions(), before.as_slice());
        }
    }

    #[test]
    fn step_stays_within_limits() {
        let (_, mut s) = agent_propose(agent(3), &presets(4)).unwrap();
        for _ in 0..100 {
            s = apply_guiding_feedback(s, 1).unwrap();
        }
        assert_eq!(s.step_size(), 0.5);
        for _ in 0..100 {
            s = apply_guiding_feedback(s, -1).unwrap();
        }
        assert_eq!(s.step_size(), 0.01);
        assert!(apply_guiding_feedback(s, 0).is_err());
    }

    #[test]
    fn zone_jumps_far() {
        let space = FeatureSpace::unit(&["x"]).unwrap();
        let s = agent_init(space, 2, 9, AgentConfig::default()).unwrap();
        let s = s.with_positions(vec![vec![0.1], vec![0.1]]).unwrap();
        let (_, s) = agent_propose(s, &[vec![0.0], vec![1.0]]).unwrap();
        let z = apply_zone_feedback(s.clone()).unwrap();
        for p in z.positions() {
            assert!(p[0] >= 0.35 && p[0] <= 1.0, "{p:?}");
        }
        assert_eq!(z, apply_zone_feedback(s).unwrap());
        assert_eq!(z.step_size(), 0.05);
    }

    #[test]
    fn proposals_stay_in_bounds() {
        let mut s = agent(11);
        for i in 0..300 {
            let (p, next) = agent_propose(s, &presets(4)).unwrap();
            assert!(p.points.iter().all(|x| next.space().contains(x)));
            s = apply_guiding_feedback(next, if i % 3 == 0 { -1 } else { 1 }).unwrap();
        }
    }

    #[test]
    fn history_counts_every_event() {
        let (_, s) = agent_propose(agent(1), &presets(4)).unwrap();
        let s = apply_guiding_feedback(s, 1).unwrap();
        let (_, s) = agent_propose(s, &presets(4)).unwrap();
        let s = apply_zone_feedback(s).unwrap();
        assert_eq!(s.history().len(), 4);
        assert_eq!(s.proposals_made(), 2);
    }

    #[test]
    fn loop_converges_on_median() {
        let mut ratios: Vec<f64> = (0..20u64)
            .map(|seed| {
                let space = FeatureSpace::unit(&["x", "y"]).unwrap();
                let mut trng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let targets: Vec<Vec<f64>> = (0..4).map(|_| space.sample(&mut trng)).collect();
                let mut oracle = SimulatedOracle::new(targets, 0.0).unwrap();
                let s = agent_init(space, 4, seed, AgentConfig::default()).unwrap();
                simulate(s, &mut oracle, &presets(4), 200)
                    .unwrap()
                    .0
                    .ratio()
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        let median = 0.5 * (ratios[9] + ratios[10]);
        eprintln!("median ratio {median:.3} {ratios:?}");
        assert!(median < 0.5, "median ratio {median}");
    }

    #[test]
    fn positive_feedback_moves_along_direction() {
        let mut total = 0.0;
        for seed in 0..100 {
            let s = agent(seed).with_positions(vec![vec![0.5, 0.5]; 4]).unwrap();
            let (_, s) = agent_propose(s, &presets(4)).unwrap();
            let s = apply_guiding_feedback(s, 1).unwrap();
            let before: Vec<f64> = s.positions().concat();
            let dir = s.direction().to_vec();
            let (p, _) = agent_propose(s, &presets(4)).unwrap();
            let moved: Vec<f64> = p
                .points
                .concat()
                .iter()
                .zip(&before)
                .map(|(a, b)| a - b)
                .collect();
            total += cosine(&moved, &dir);
        }
        assert!(total / 100.0 > 0.7, "mean cosine {}", total / 100.0);
    }

    #[test]
    fn proposal_trains_a_fitting_model() {
        use crate::models::{mlp_init, mlp_predict, mlp_train};
        let (p, _) = agent_propose(
            agent(8),
            &[
                vec![0.1, 0.9],
                vec![0.9, 0.1],
                vec![0.5, 0.5],
                vec![0.2, 0.3],
            ],
        )
        .unwrap();
        let set = build_training_set(&p).unwrap();
        let (m, _) = mlp_train(mlp_init(&[2, 8, 2], 1).unwrap(), &set, 5000, 0.5).unwrap();
        for (x, y) in p.points.iter().zip(&p.presets) {
            let out = mlp_predict(&m, x).unwrap();
            for (a, b) in out.iter().zip(y) {
                assert!((a - b).abs() < 0.05, "{out:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn training_set_keeps_slot_order() {
        let (p, _) = agent_propose(agent(4), &presets(4)).unwrap();
        let set = build_training_set(&p).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.inputs(), p.points.as_slice());
        assert_eq!(set.targets(), presets(4).as_slice());
    }
}
