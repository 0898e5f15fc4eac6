//! Orchestration of the two workflows.
//!
//! An IML session collects recorded gesture examples paired with presets,
//! trains a regression model on them and runs it on live input. An AIML
//! session has no gesture recording: the agent proposes feature-space points
//! for the presets, each proposal is trained into a model immediately so the
//! user can play it, and the user's feedback steers the next proposal.
//!
//! Operations check the session phase first and raise a protocol error
//! naming the legal actions when called out of order. They either succeed
//! completely or leave the session unchanged.

mod protocol;
mod store;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};

use crate::agent::{
    agent_init, agent_propose, apply_guiding_feedback, apply_zone_feedback, build_training_set,
    AgentConfig, AgentState, FeatureSpace, MappingProposal,
};
use crate::corpus::{retrieve_knn, Corpus, UnitMatch, DESCRIPTOR_LEN};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureConfig, FeatureVector};
use crate::granular::{validate_preset, SynthPreset};
use crate::ingest::{parse_frame_line, FrameStream, Frames};
use crate::models::{mlp_init, mlp_loss, mlp_predict, mlp_train, MlpModel, RegressionSet};

pub use protocol::{parse_command, Command, Event, Hub, PROTOCOL_VERSION};
pub use store::{
    IndexEntry, MappingRecord, MappingStore, Provenance, MAPPING_FORMAT, MAPPING_FORMAT_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Iml,
    Aiml,
}

/// What the model's outputs drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthTarget {
    /// Six granular synthesis parameters.
    #[default]
    Granular,
    /// A 19-value audio descriptor used to retrieve a corpus unit.
    Corpus,
}

impl SynthTarget {
    pub fn output_dim(self) -> usize {
        match self {
            SynthTarget::Granular => SynthPreset::FIELDS.len(),
            SynthTarget::Corpus => DESCRIPTOR_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Idle,
    /// IML examples are being collected.
    Recording,
    /// AIML proposal trained and awaiting feedback.
    Proposed,
    /// AIML feedback given, awaiting the next proposal.
    Judged,
    Trained,
    Running,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Recording => "recording",
            Phase::Proposed => "proposed",
            Phase::Judged => "judged",
            Phase::Trained => "trained",
            Phase::Running => "running",
        }
    }
}

/// Actions legal in each phase.
pub fn legal_actions(mode: Mode, phase: Phase) -> &'static [&'static str] {
    match (mode, phase) {
        (Mode::Iml, Phase::Idle) => &["record", "presets"],
        (Mode::Iml, Phase::Recording) => &["record", "train", "presets"],
        (Mode::Iml, _) => &["record", "train", "predict", "frame", "save", "presets"],
        (Mode::Aiml, Phase::Idle) => &["propose", "presets"],
        (Mode::Aiml, Phase::Judged) => &["propose", "save", "presets"],
        (Mode::Aiml, _) => &[
            "predict", "frame", "guiding", "zone", "train", "save", "presets",
        ],
    }
}

/// MLP training hyperparameters; hidden layers use sigmoid units.
///
/// Training runs `epochs` epochs, then keeps going in further rounds of
/// `epochs` while the normalized loss is above `target_loss`, up to
/// `max_epochs` in total. Small example sets where two nearby inputs map to
/// distant presets need many more epochs than typical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub target_loss: Option<f64>,
    pub max_epochs: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            hidden: vec![8],
            epochs: 5000,
            learning_rate: 2.0,
            seed: 0,
            target_loss: Some(1e-5),
            max_epochs: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSettings {
    pub space: FeatureSpace,
    pub seed: u64,
    pub config: AgentConfig,
}

impl Default for AgentSettings {
    fn default() -> Self {
        AgentSettings {
            space: FeatureSpace::unit(&["x", "y"]).expect("two named dimensions"),
            seed: 0,
            config: AgentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub mode: Mode,
    pub target: SynthTarget,
    pub features: FeatureConfig,
    /// Presets as parameter vectors. Granular presets may also be written
    /// as objects with named fields.
    #[serde(deserialize_with = "presets_from_json")]
    pub presets: Vec<Vec<f64>>,
    pub train: TrainParams,
    /// Agent setup; AIML sessions use the default unit square when absent.
    pub agent: Option<AgentSettings>,
    /// Corpus file for the corpus target.
    pub corpus: Option<PathBuf>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            mode: Mode::Iml,
            target: SynthTarget::Granular,
            features: FeatureConfig::default(),
            presets: Vec::new(),
            train: TrainParams::default(),
            agent: None,
            corpus: None,
        }
    }
}

fn presets_from_json<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum PresetJson {
        Vector(Vec<f64>),
        Synth(SynthPreset),
    }
    Ok(Vec::<PresetJson>::deserialize(d)?
        .into_iter()
        .map(|p| match p {
            PresetJson::Vector(v) => v,
            PresetJson::Synth(s) => s.to_array().to_vec(),
        })
        .collect())
}

/// Reads a JSON array of presets, each a parameter array or a granular
/// preset object.
pub fn parse_presets_json(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut de = serde_json::Deserializer::from_str(text);
    let out = presets_from_json(&mut de)?;
    de.end()?;
    Ok(out)
}

/// Model input: a precomputed feature vector, or a window of frames to
/// extract features from.
#[derive(Debug, Clone)]
pub enum Input {
    Features(Vec<f64>),
    Frames(FrameStream),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Clamped preset parameters, or the predicted descriptor.
    pub params: Vec<f64>,
    /// Retrieved unit for the corpus target.
    pub unit: Option<UnitMatch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AimlAction {
    Propose,
    Guiding(i8),
    Zone,
    Save,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AimlOutcome {
    Proposal(MappingProposal),
    Feedback,
    Saved(Box<MappingRecord>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    id: String,
    config: SessionConfig,
    phase: Phase,
    examples: Option<RegressionSet>,
    /// Feature names of the recorded or proposed inputs.
    input_names: Option<Vec<String>>,
    model: Option<MlpModel>,
    loss_curve: Vec<f64>,
    agent: Option<AgentState>,
    proposal: Option<MappingProposal>,
    saves: u64,
    /// Record this session was loaded from.
    loaded_from: Option<String>,
    #[serde(skip)]
    corpus: Option<Arc<Corpus>>,
    #[serde(skip)]
    live: Option<Frames>,
}

/// New idle session. AIML sessions get a seeded agent with one slot per
/// preset.
pub fn create_session(id: impl Into<String>, config: SessionConfig) -> Result<Session> {
    config.features.validate()?;
    let dim = config.target.output_dim();
    check_presets(config.target, &config.presets)?;
    let agent = match config.mode {
        Mode::Iml => None,
        Mode::Aiml => {
            if config.presets.len() < 2 {
                return Err(Error::param("an AIML session needs at least 2 presets"));
            }
            let s = config.agent.clone().unwrap_or_default();
            Some(agent_init(s.space, config.presets.len(), s.seed, s.config)?)
        }
    };
    let corpus = match &config.corpus {
        Some(path) => Some(Arc::new(Corpus::load(path)?)),
        None => None,
    };
    debug_assert!(dim > 0);
    Ok(Session {
        id: id.into(),
        config,
        phase: Phase::Idle,
        examples: None,
        input_names: None,
        model: None,
        loss_curve: Vec::new(),
        agent,
        proposal: None,
        saves: 0,
        loaded_from: None,
        corpus,
        live: None,
    })
}

fn check_target(target: SynthTarget, v: &[f64]) -> Result<()> {
    if v.len() != target.output_dim() {
        return Err(Error::Schema(format!(
            "{} target needs {} values, got {}",
            match target {
                SynthTarget::Granular => "granular",
                SynthTarget::Corpus => "corpus",
            },
            target.output_dim(),
            v.len()
        )));
    }
    match target {
        SynthTarget::Granular => validate_preset(SynthPreset::from_slice(v)?).map(|_| ()),
        SynthTarget::Corpus if v.iter().all(|x| x.is_finite()) => Ok(()),
        SynthTarget::Corpus => Err(Error::Data("descriptor target is not finite".into())),
    }
}

fn check_presets(target: SynthTarget, presets: &[Vec<f64>]) -> Result<()> {
    presets.iter().try_for_each(|p| check_target(target, p))
}

impl Session {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn expected_actions(&self) -> Vec<String> {
        legal_actions(self.config.mode, self.phase)
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    pub fn presets(&self) -> &[Vec<f64>] {
        &self.config.presets
    }

    pub fn examples(&self) -> Option<&RegressionSet> {
        self.examples.as_ref()
    }

    pub fn model(&self) -> Option<&MlpModel> {
        self.model.as_ref()
    }

    pub fn loss_curve(&self) -> &[f64] {
        &self.loss_curve
    }

    pub fn agent(&self) -> Option<&AgentState> {
        self.agent.as_ref()
    }

    pub fn last_proposal(&self) -> Option<&MappingProposal> {
        self.proposal.as_ref()
    }

    pub fn corpus(&self) -> Option<&Corpus> {
        self.corpus.as_deref()
    }

    /// Uses `corpus` for unit retrieval.
    pub fn attach_corpus(&mut self, corpus: Arc<Corpus>) {
        self.corpus = Some(corpus);
    }

    fn require(&self, action: &str) -> Result<()> {
        if legal_actions(self.config.mode, self.phase).contains(&action) {
            Ok(())
        } else {
            Err(Error::Protocol {
                action: action.into(),
                phase: self.phase.name().into(),
                expected: self.expected_actions(),
            })
        }
    }

    fn features_of(&self, input: Input) -> Result<FeatureVector> {
        match input {
            Input::Features(v) => FeatureVector::indexed("f", v),
            Input::Frames(stream) => extract_features(&self.config.features, &stream),
        }
    }

    /// Replaces the presets. AIML keeps the slot count fixed; the change
    /// takes effect at the next proposal.
    pub fn set_presets(&mut self, presets: Vec<Vec<f64>>) -> Result<()> {
        self.require("presets")?;
        check_presets(self.config.target, &presets)?;
        if self.config.mode == Mode::Aiml && presets.len() != self.config.presets.len() {
            return Err(Error::Schema(format!(
                "AIML session has {} preset slots, got {} presets",
                self.config.presets.len(),
                presets.len()
            )));
        }
        self.config.presets = presets;
        Ok(())
    }
}

/// Adds one IML example: features of `input` paired with `target`.
pub fn record_example(session: &mut Session, input: Input, target: Vec<f64>) -> Result<()> {
    session.require("record")?;
    check_target(session.config.target, &target)?;
    let fv = session.features_of(input)?;
    if let Some(names) = &session.input_names {
        if names.len() != fv.len() {
            return Err(Error::Schema(format!(
                "example has {} features, earlier ones have {}",
                fv.len(),
                names.len()
            )));
        }
    }
    let names = fv.names().to_vec();
    match &mut session.examples {
        Some(set) => set.push(fv.into_values(), target)?,
        None => session.examples = Some(RegressionSet::new(vec![fv.into_values()], vec![target])?),
    }
    session.input_names.get_or_insert(names);
    if session.phase == Phase::Idle {
        session.phase = Phase::Recording;
    }
    Ok(())
}

fn fit(set: &RegressionSet, params: &TrainParams) -> Result<(MlpModel, Vec<f64>)> {
    if params.epochs == 0 {
        return Err(Error::param("training needs at least 1 epoch"));
    }
    let mut sizes = vec![set.input_dim()];
    sizes.extend(&params.hidden);
    sizes.push(set.output_dim());
    let (mut model, mut curve) = mlp_train(
        mlp_init(&sizes, params.seed)?,
        set,
        params.epochs,
        params.learning_rate,
    )?;
    if let Some(target) = params.target_loss {
        while curve.len() + params.epochs <= params.max_epochs && mlp_loss(&model, set)? > target {
            let (m, more) = mlp_train(model, set, params.epochs, params.learning_rate)?;
            model = m;
            curve.extend(more);
        }
    }
    Ok((model, curve))
}

/// Trains a fresh model (seeded from `params`) on the session's examples
/// and returns the loss curve. Retraining after adding examples starts over
/// from the same seed, so results depend only on the example set.
pub fn train_session(session: &mut Session, params: Option<TrainParams>) -> Result<Vec<f64>> {
    session.require("train")?;
    let params = params.unwrap_or_else(|| session.config.train.clone());
    let set = session
        .examples
        .as_ref()
        .ok_or_else(|| Error::insufficient("no examples recorded"))?;
    if session.config.mode == Mode::Iml && set.len() < 2 {
        return Err(Error::insufficient(format!(
            "training needs at least 2 examples, have {}",
            set.len()
        )));
    }
    let (model, curve) = fit(set, &params)?;
    session.model = Some(model);
    session.loss_curve = curve.clone();
    session.config.train = params;
    if session.config.mode == Mode::Iml {
        session.phase = Phase::Trained;
    }
    Ok(curve)
}

fn predict_features(session: &Session, features: &[f64]) -> Result<Prediction> {
    let model = session
        .model
        .as_ref()
        .ok_or_else(|| Error::param("session has no trained model"))?;
    if features.len() != model.input_dim() {
        return Err(Error::Schema(format!(
            "input has {} features, model expects {}",
            features.len(),
            model.input_dim()
        )));
    }
    let out = mlp_predict(model, features)?;
    match session.config.target {
        SynthTarget::Granular => {
            let preset = SynthPreset::from_slice(&out)?.clamped(None);
            Ok(Prediction {
                params: preset.to_array().to_vec(),
                unit: None,
            })
        }
        SynthTarget::Corpus => {
            let corpus = session
                .corpus
                .as_deref()
                .ok_or_else(|| Error::param("corpus target but no corpus loaded"))?;
            let unit = retrieve_knn(corpus, &out, 1, None)?[0];
            Ok(Prediction {
                params: out,
                unit: Some(unit),
            })
        }
    }
}

/// Runs the trained model on `input`. Granular outputs are clamped into
/// valid preset ranges; corpus outputs retrieve the nearest unit.
pub fn run_predict(session: &mut Session, input: Input) -> Result<Prediction> {
    session.require("predict")?;
    let fv = session.features_of(input)?;
    let p = predict_features(session, fv.values())?;
    session.phase = Phase::Running;
    Ok(p)
}

/// Feeds one or more live JSONL frames. Once a full feature window has
/// arrived, every frame yields the window's features and a prediction.
pub fn push_frames(
    session: &mut Session,
    payload: &str,
) -> Result<Vec<(FeatureVector, Prediction)>> {
    session.require("frame")?;
    let window = session.config.features.window.max(2);
    let mut live = session.live.clone();
    let mut out = Vec::new();
    for line in payload.lines().filter(|l| !l.trim().is_empty()) {
        let frame = parse_frame_line(line)?;
        live = Some(match (live, frame) {
            (None, f) => f,
            (Some(Frames::Marker(mut a)), Frames::Marker(b)) => {
                a.extend(b);
                let n = a.len().saturating_sub(window);
                a.drain(..n);
                Frames::Marker(a)
            }
            (Some(Frames::Imu(mut a)), Frames::Imu(b)) => {
                a.extend(b);
                let n = a.len().saturating_sub(window);
                a.drain(..n);
                Frames::Imu(a)
            }
            (Some(Frames::Emg(mut a)), Frames::Emg(b)) => {
                a.extend(b);
                let n = a.len().saturating_sub(window);
                a.drain(..n);
                Frames::Emg(a)
            }
            _ => return Err(Error::Schema("live frames changed kind".into())),
        });
        let frames = live.clone().expect("just set");
        let stream = FrameStream::new(frames)?;
        if stream.len() == window {
            let fv = extract_features(&session.config.features, &stream)?;
            let p = predict_features(session, fv.values())?;
            out.push((fv, p));
        }
    }
    session.live = live;
    session.phase = Phase::Running;
    Ok(out)
}

/// One AIML step. Proposing also trains the model on the proposal so the
/// mapping can be played at once.
pub fn aiml_step(session: &mut Session, action: AimlAction) -> Result<AimlOutcome> {
    let name = match action {
        AimlAction::Propose => "propose",
        AimlAction::Guiding(_) => "guiding",
        AimlAction::Zone => "zone",
        AimlAction::Save => "save",
    };
    session.require(name)?;
    let agent = session
        .agent
        .clone()
        .ok_or_else(|| Error::param("AIML session has no agent"))?;
    match action {
        AimlAction::Propose => {
            let (proposal, agent) = agent_propose(agent, &session.config.presets)?;
            let set = build_training_set(&proposal)?;
            let (model, curve) = fit(&set, &session.config.train)?;
            session.input_names = Some(agent.space().dims.clone());
            session.agent = Some(agent);
            session.examples = Some(set);
            session.model = Some(model);
            session.loss_curve = curve;
            session.proposal = Some(proposal.clone());
            session.phase = Phase::Proposed;
            Ok(AimlOutcome::Proposal(proposal))
        }
        AimlAction::Guiding(sign) => {
            session.agent = Some(apply_guiding_feedback(agent, sign)?);
            session.phase = Phase::Judged;
            Ok(AimlOutcome::Feedback)
        }
        AimlAction::Zone => {
            session.agent = Some(apply_zone_feedback(agent)?);
            session.phase = Phase::Judged;
            Ok(AimlOutcome::Feedback)
        }
        AimlAction::Save => Ok(AimlOutcome::Saved(Box::new(save_mapping(session, 0)?))),
    }
}

/// Snapshot of the trained mapping. `created_at` is seconds since the Unix
/// epoch, supplied by the caller.
pub fn save_mapping(session: &mut Session, created_at: u64) -> Result<MappingRecord> {
    session.require("save")?;
    let model = session
        .model
        .clone()
        .ok_or_else(|| Error::param("session has no trained model"))?;
    let provenance = Provenance {
        mode: session.config.mode,
        agent_state: session.agent.as_ref().map(AgentState::state_hash),
        proposal: session.proposal.as_ref().map(|p| p.id),
        loaded_from: session.loaded_from.clone(),
    };
    let record = MappingRecord {
        format: MAPPING_FORMAT.into(),
        version: MAPPING_FORMAT_VERSION,
        id: format!("{}-{}", session.id, session.saves),
        session_id: session.id.clone(),
        created_at,
        features: session.config.features.clone(),
        input_names: session.input_names.clone().unwrap_or_default(),
        target: session.config.target,
        corpus: session.config.corpus.clone(),
        presets: session.config.presets.clone(),
        train: session.config.train.clone(),
        model,
        examples: session.examples.clone(),
        provenance,
    };
    session.saves += 1;
    Ok(record)
}

/// Rebuilds a runnable IML session from a record. The examples travel
/// with it, so the mapping can be refined by recording and retraining.
pub fn load_mapping(record: &MappingRecord, session_id: impl Into<String>) -> Result<Session> {
    record.check_version()?;
    let config = SessionConfig {
        mode: Mode::Iml,
        target: record.target,
        features: record.features.clone(),
        presets: record.presets.clone(),
        train: record.train.clone(),
        agent: None,
        corpus: record.corpus.clone(),
    };
    let mut s = create_session(session_id, config)?;
    s.model = Some(record.model.clone());
    s.examples = record.examples.clone();
    s.input_names = Some(record.input_names.clone()).filter(|n| !n.is_empty());
    s.loaded_from = Some(record.id.clone());
    s.phase = Phase::Trained;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset(cutoff: f64, pitch: f64) -> Vec<f64> {
        SynthPreset {
            cutoff_hz: cutoff,
            pitch_shift: pitch,
            ..Default::default()
        }
        .to_array()
        .to_vec()
    }

    fn aiml() -> Session {
        let presets = vec![
            preset(200.0, -12.0),
            preset(800.0, -4.0),
            preset(3000.0, 4.0),
            preset(9000.0, 12.0),
        ];
        create_session(
            "a",
            SessionConfig {
                mode: Mode::Aiml,
                presets,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn default_config_is_iml_granular() {
        let s = create_session("s", SessionConfig::default()).unwrap();
        assert_eq!(
            (s.mode(), s.config().target, s.phase()),
            (Mode::Iml, SynthTarget::Granular, Phase::Idle)
        );
        assert!(s.agent().is_none());
        assert_eq!(aiml().agent().unwrap().n_presets(), 4);
    }

    #[test]
    fn unknown_feature_is_named() {
        let cfg = SessionConfig {
            features: FeatureConfig::with_features(&["qom", "sway"]),
            ..Default::default()
        };
        let err = create_session("s", cfg).unwrap_err();
        assert!(err.to_string().contains("sway"));
    }

    #[test]
    fn illegal_actions_name_legal_ones() {
        let mut s = aiml();
        match record_example(&mut s, Input::Features(vec![0.0, 0.0]), preset(500.0, 0.0)) {
            Err(Error::Protocol {
                action, expected, ..
            }) => {
                assert_eq!(action, "record");
                assert_eq!(expected, vec!["propose", "presets"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            aiml_step(&mut s, AimlAction::Guiding(1)),
            Err(Error::Protocol { .. })
        ));
        let mut iml = create_session("i", SessionConfig::default()).unwrap();
        assert!(matches!(
            run_predict(&mut iml, Input::Features(vec![0.0])),
            Err(Error::Protocol { .. })
        ));
    }

    #[test]
    fn single_example_is_insufficient() {
        let mut s = create_session("s", SessionConfig::default()).unwrap();
        record_example(&mut s, Input::Features(vec![0.0, 1.0]), preset(500.0, 0.0)).unwrap();
        assert!(matches!(
            train_session(&mut s, None),
            Err(Error::InsufficientData(_))
        ));
        assert_eq!(s.phase(), Phase::Recording);
    }

    #[test]
    fn proposal_trains_playable_model() {
        let mut s = aiml();
        let AimlOutcome::Proposal(p) = aiml_step(&mut s, AimlAction::Propose).unwrap() else {
            panic!()
        };
        let model = s.model().unwrap().clone();
        for (x, y) in p.points.iter().zip(&p.presets) {
            let out = mlp_predict(&model, x).unwrap();
            for k in 0..6 {
                let span = s.presets().iter().map(|v| v[k]).fold(f64::MIN, f64::max)
                    - s.presets().iter().map(|v| v[k]).fold(f64::MAX, f64::min);
                let err = (out[k] - y[k]).abs() / if span > 0.0 { span } else { 1.0 };
                assert!(err < 0.05, "slot param {k}: {err}");
            }
        }
        // the training set is the proposal and nothing else
        assert_eq!(s.examples().unwrap().inputs(), p.points.as_slice());
        let pred = run_predict(&mut s, Input::Features(p.points[0].clone())).unwrap();
        assert!(validate_preset(SynthPreset::from_slice(&pred.params).unwrap()).is_ok());
        aiml_step(&mut s, AimlAction::Guiding(-1)).unwrap();
        assert_eq!(s.phase(), Phase::Judged);
        assert!(matches!(
            aiml_step(&mut s, AimlAction::Zone),
            Err(Error::Protocol { .. })
        ));
    }

    #[test]
    fn aiml_save_then_load_predicts_identically() {
        let mut s = aiml();
        aiml_step(&mut s, AimlAction::Propose).unwrap();
        let AimlOutcome::Saved(rec) = aiml_step(&mut s, AimlAction::Save).unwrap() else {
            panic!()
        };
        assert_eq!(rec.provenance.mode, Mode::Aiml);
        let rec = MappingRecord::from_json(&rec.to_json()).unwrap();
        let mut loaded = load_mapping(&rec, "b").unwrap();
        for i in 0..100 {
            let x = vec![(i as f64 * 0.37).fract(), (i as f64 * 0.61).fract()];
            let a = run_predict(&mut s, Input::Features(x.clone())).unwrap();
            let b = run_predict(&mut loaded, Input::Features(x)).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(
            loaded.model().unwrap().to_json(),
            s.model().unwrap().to_json()
        );
    }

    #[test]
    fn aiml_presets_keep_slot_count() {
        let mut s = aiml();
        assert!(s.set_presets(vec![preset(100.0, 0.0); 3]).is_err());
        s.set_presets(vec![preset(100.0, 0.0); 4]).unwrap();
        let AimlOutcome::Proposal(p) = aiml_step(&mut s, AimlAction::Propose).unwrap() else {
            panic!()
        };
        assert_eq!(p.presets[0], preset(100.0, 0.0));
    }

    #[test]
    fn presets_accept_objects() {
        let cfg: SessionConfig =
            serde_json::from_str(r#"{"presets":[{"start_s":0,"duration_s":1,"speed":1,"pitch_shift":0,"cutoff_hz":500,"resonance":1}, [0,1,1,0,900,1]]}"#)
                .unwrap();
        assert_eq!(cfg.presets[0][4], 500.0);
        assert_eq!(cfg.presets[1][4], 900.0);
    }
}
