//! Versioned JSON messages and a transport-agnostic command hub.
//!
//! Every message carries `"v": 1`. Clients send `{"cmd": ...}` objects and
//! receive `{"evt": ...}` objects. Commands may name a session; when they
//! do not, the connection's most recently created or loaded session is used.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};

use super::{
    aiml_step, create_session, load_mapping, push_frames, record_example, run_predict,
    save_mapping, train_session, AimlAction, AimlOutcome, Input, MappingStore, Mode, Phase,
    Prediction, Session, SessionConfig, TrainParams,
};
use crate::error::{Error, ErrorKind, Result};
use crate::features::FeatureVector;
use crate::ingest::parse_frames_jsonl;

pub const PROTOCOL_VERSION: u32 = 1;

// one command per message; boxing the config would only complicate callers
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Command {
    Create {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        config: SessionConfig,
    },
    /// Adds an example from `features` or a JSONL `frames` window, paired
    /// with an explicit `target` or preset slot `preset`.
    Record {
        #[serde(default)]
        session: Option<String>,
        #[serde(default)]
        features: Option<Vec<f64>>,
        #[serde(default)]
        frames: Option<String>,
        #[serde(default)]
        target: Option<Vec<f64>>,
        #[serde(default)]
        preset: Option<usize>,
    },
    Train {
        #[serde(default)]
        session: Option<String>,
        #[serde(default)]
        params: Option<TrainParams>,
    },
    Predict {
        #[serde(default)]
        session: Option<String>,
        #[serde(default)]
        features: Option<Vec<f64>>,
        #[serde(default)]
        frames: Option<String>,
    },
    /// Live frames as ingest JSONL, one or more lines.
    Frame {
        #[serde(default)]
        session: Option<String>,
        payload: String,
    },
    Propose {
        #[serde(default)]
        session: Option<String>,
    },
    Guiding {
        #[serde(default)]
        session: Option<String>,
        sign: i8,
    },
    Zone {
        #[serde(default)]
        session: Option<String>,
    },
    Save {
        #[serde(default)]
        session: Option<String>,
    },
    /// Opens a stored mapping as a new session.
    Load {
        id: String,
        #[serde(default)]
        session: Option<String>,
    },
    Presets {
        #[serde(default)]
        session: Option<String>,
        presets: Vec<Vec<f64>>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Create { .. } => "create",
            Command::Record { .. } => "record",
            Command::Train { .. } => "train",
            Command::Predict { .. } => "predict",
            Command::Frame { .. } => "frame",
            Command::Propose { .. } => "propose",
            Command::Guiding { .. } => "guiding",
            Command::Zone { .. } => "zone",
            Command::Save { .. } => "save",
            Command::Load { .. } => "load",
            Command::Presets { .. } => "presets",
        }
    }

    /// `{"v":1, ...}` text of the command.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("commands serialize");
        v["v"] = PROTOCOL_VERSION.into();
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "evt", rename_all = "snake_case")]
pub enum Event {
    State {
        session: String,
        mode: Mode,
        phase: Phase,
        examples: usize,
        expected: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        loss: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        record: Option<String>,
    },
    Features {
        session: String,
        names: Vec<String>,
        values: Vec<f64>,
    },
    Params {
        session: String,
        values: Vec<f64>,
    },
    Proposal {
        session: String,
        id: u64,
        points: Vec<Vec<f64>>,
        presets: Vec<Vec<f64>>,
    },
    Unit {
        session: String,
        index: usize,
        distance: f64,
        source: String,
    },
    Error {
        kind: String,
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        command: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected: Option<Vec<String>>,
    },
}

impl Event {
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("events serialize");
        v["v"] = PROTOCOL_VERSION.into();
        v.to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text)?;
        check_version(&mut v)?;
        Ok(serde_json::from_value(v)?)
    }

    pub fn error(err: &Error, command: Option<&str>) -> Self {
        let kind = match err.kind() {
            ErrorKind::Data => "data",
            ErrorKind::Config => "config",
            ErrorKind::Divergence => "divergence",
            ErrorKind::Environment => "environment",
        };
        let expected = match err {
            Error::Protocol { expected, .. } => Some(expected.clone()),
            _ => None,
        };
        Event::Error {
            kind: kind.into(),
            message: err.to_string(),
            command: command.map(String::from),
            expected,
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Event::Error { .. })
    }
}

fn check_version(v: &mut serde_json::Value) -> Result<()> {
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::Schema("message must be a JSON object".into()))?;
    let found = obj.remove("v").and_then(|x| x.as_u64());
    match found {
        Some(n) if n == PROTOCOL_VERSION as u64 => Ok(()),
        Some(n) => Err(Error::Version {
            found: n as u32,
            expected: PROTOCOL_VERSION,
        }),
        None => Err(Error::Schema("message lacks protocol version `v`".into())),
    }
}

/// Parses one client message.
pub fn parse_command(text: &str) -> Result<Command> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    check_version(&mut v)?;
    Ok(serde_json::from_value(v)?)
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

/// Owns every live session. Each session sits behind its own lock, so
/// commands to one session apply in a total order while different sessions
/// proceed independently.
pub struct Hub {
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    store: Option<MappingStore>,
    counter: Mutex<u64>,
    clock: fn() -> u64,
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl Hub {
    pub fn new(store: Option<MappingStore>) -> Self {
        Hub {
            sessions: Mutex::new(HashMap::new()),
            store,
            counter: Mutex::new(0),
            clock: unix_now,
        }
    }

    /// Uses `clock` for record timestamps instead of the system time.
    pub fn with_clock(mut self, clock: fn() -> u64) -> Self {
        self.clock = clock;
        self
    }

    pub fn store(&self) -> Option<&MappingStore> {
        self.store.as_ref()
    }

    pub fn session(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        lock(&self.sessions).get(id).cloned()
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = lock(&self.sessions).keys().cloned().collect();
        ids.sort();
        ids
    }

    fn fresh_id(&self) -> String {
        let sessions = lock(&self.sessions);
        let mut n = lock(&self.counter);
        loop {
            *n += 1;
            let id = format!("s{}", *n);
            if !sessions.contains_key(&id) {
                return id;
            }
        }
    }

    fn insert(&self, session: Session) -> Result<String> {
        let id = session.id().to_string();
        let mut sessions = lock(&self.sessions);
        if sessions.contains_key(&id) {
            return Err(Error::param(format!("session `{id}` already exists")));
        }
        sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Creates a session and returns its state event.
    pub fn create(&self, id: Option<String>, config: SessionConfig) -> Result<Event> {
        let id = match id {
            Some(id) => id,
            None => self.fresh_id(),
        };
        let session = create_session(id, config)?;
        let ev = state_event(&session, None, None);
        self.insert(session)?;
        Ok(ev)
    }

    /// Writes every session to the store. Returns how many were written.
    pub fn persist(&self) -> Result<usize> {
        let Some(store) = &self.store else {
            return Ok(0);
        };
        let sessions: Vec<_> = lock(&self.sessions).values().cloned().collect();
        for s in &sessions {
            store.save_session(&lock(s))?;
        }
        Ok(sessions.len())
    }

    /// Reloads sessions persisted by an earlier run.
    pub fn restore(&self) -> Result<usize> {
        let Some(store) = &self.store else {
            return Ok(0);
        };
        let mut n = 0;
        for s in store.load_sessions()? {
            self.insert(s)?;
            n += 1;
        }
        Ok(n)
    }

    /// Handles one raw message; malformed input becomes an error event.
    pub fn handle_text(&self, text: &str, current: &mut Option<String>) -> Vec<Event> {
        match parse_command(text) {
            Ok(cmd) => self.handle(cmd, current),
            Err(e) => vec![Event::error(&e, None)],
        }
    }

    pub fn handle(&self, cmd: Command, current: &mut Option<String>) -> Vec<Event> {
        let name = cmd.name();
        match self.dispatch(cmd, current) {
            Ok(events) => events,
            Err(e) => vec![Event::error(&e, Some(name))],
        }
    }

    fn target_session(
        &self,
        named: Option<String>,
        current: &Option<String>,
    ) -> Result<Arc<Mutex<Session>>> {
        let id = named
            .or_else(|| current.clone())
            .ok_or_else(|| Error::Protocol {
                action: "command".into(),
                phase: "no session".into(),
                expected: vec!["create".into(), "load".into()],
            })?;
        self.session(&id)
            .ok_or_else(|| Error::Registry(format!("no session `{id}`")))
    }

    fn dispatch(&self, cmd: Command, current: &mut Option<String>) -> Result<Vec<Event>> {
        match cmd {
            Command::Create { id, config } => {
                let ev = self.create(id, config)?;
                if let Event::State { session, .. } = &ev {
                    *current = Some(session.clone());
                }
                Ok(vec![ev])
            }
            Command::Load { id, session } => {
                let store = self
                    .store
                    .as_ref()
                    .ok_or_else(|| Error::param("server has no mapping store"))?;
                let record = store.get(&id)?;
                let sid = match session {
                    Some(s) => s,
                    None => self.fresh_id(),
                };
                let s = load_mapping(&record, sid)?;
                let ev = state_event(&s, None, None);
                *current = Some(self.insert(s)?);
                Ok(vec![ev])
            }
            Command::Record {
                session,
                features,
                frames,
                target,
                preset,
            } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                let input = input_of(features, frames)?;
                let target = match (target, preset) {
                    (Some(t), None) => t,
                    (None, Some(i)) => s
                        .presets()
                        .get(i)
                        .cloned()
                        .ok_or_else(|| Error::param(format!("no preset slot {i}")))?,
                    _ => {
                        return Err(Error::Schema(
                            "record needs exactly one of `target` or `preset`".into(),
                        ))
                    }
                };
                record_example(&mut s, input, target)?;
                Ok(vec![state_event(&s, None, None)])
            }
            Command::Train { session, params } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                let curve = train_session(&mut s, params)?;
                Ok(vec![state_event(&s, curve.last().copied(), None)])
            }
            Command::Predict {
                session,
                features,
                frames,
            } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                let input = input_of(features, frames)?;
                let fv = match &input {
                    Input::Frames(stream) => Some(crate::features::extract_features(
                        &s.config().features,
                        stream,
                    )?),
                    Input::Features(_) => None,
                };
                let p = run_predict(&mut s, input)?;
                Ok(prediction_events(&s, fv, p))
            }
            Command::Frame { session, payload } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                let out = push_frames(&mut s, &payload)?;
                Ok(out
                    .into_iter()
                    .flat_map(|(fv, p)| prediction_events(&s, Some(fv), p))
                    .collect())
            }
            Command::Propose { session } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                let AimlOutcome::Proposal(p) = aiml_step(&mut s, AimlAction::Propose)? else {
                    unreachable!("propose yields a proposal")
                };
                let loss = s.loss_curve().last().copied();
                Ok(vec![
                    Event::Proposal {
                        session: s.id().into(),
                        id: p.id,
                        points: p.points,
                        presets: p.presets,
                    },
                    state_event(&s, loss, None),
                ])
            }
            Command::Guiding { session, sign } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                aiml_step(&mut s, AimlAction::Guiding(sign))?;
                Ok(vec![state_event(&s, None, None)])
            }
            Command::Zone { session } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                aiml_step(&mut s, AimlAction::Zone)?;
                Ok(vec![state_event(&s, None, None)])
            }
            Command::Save { session } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                let record = save_mapping(&mut s, (self.clock)())?;
                if let Some(store) = &self.store {
                    store.put(&record)?;
                }
                Ok(vec![state_event(&s, None, Some(record.id))])
            }
            Command::Presets { session, presets } => {
                let handle = self.target_session(session, current)?;
                let mut s = lock(&handle);
                s.set_presets(presets)?;
                Ok(vec![state_event(&s, None, None)])
            }
        }
    }
}

fn input_of(features: Option<Vec<f64>>, frames: Option<String>) -> Result<Input> {
    match (features, frames) {
        (Some(f), None) => Ok(Input::Features(f)),
        (None, Some(text)) => Ok(Input::Frames(parse_frames_jsonl(&text)?)),
        _ => Err(Error::Schema(
            "expected exactly one of `features` or `frames`".into(),
        )),
    }
}

fn state_event(s: &Session, loss: Option<f64>, record: Option<String>) -> Event {
    Event::State {
        session: s.id().into(),
        mode: s.mode(),
        phase: s.phase(),
        examples: s.examples().map_or(0, |e| e.len()),
        expected: s.expected_actions(),
        loss,
        record,
    }
}

fn prediction_events(s: &Session, fv: Option<FeatureVector>, p: Prediction) -> Vec<Event> {
    let mut out = Vec::with_capacity(3);
    let session = s.id().to_string();
    if let Some(fv) = fv {
        out.push(Event::Features {
            session: session.clone(),
            names: fv.names().to_vec(),
            values: fv.values().to_vec(),
        });
    }
    out.push(Event::Params {
        session: session.clone(),
        values: p.params,
    });
    if let (Some(u), Some(corpus)) = (p.unit, s.corpus()) {
        let source = corpus.units()[u.index].source_id.clone();
        out.push(Event::Unit {
            session,
            index: u.index,
            distance: u.distance,
            source,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn send(hub: &Hub, cur: &mut Option<String>, json: &str) -> Vec<Event> {
        hub.handle_text(json, cur)
    }

    #[test]
    fn version_is_required() {
        let hub = Hub::new(None);
        let mut cur = None;
        let ev = send(&hub, &mut cur, r#"{"cmd":"create"}"#);
        assert!(ev[0].is_error());
        let ev = send(&hub, &mut cur, r#"{"v":2,"cmd":"create"}"#);
        assert!(matches!(&ev[0], Event::Error { kind, .. } if kind == "config"));
        let ev = send(&hub, &mut cur, r#"{"v":1,"cmd":"create"}"#);
        assert!(matches!(&ev[0], Event::State { session, .. } if session == "s1"));
    }

    #[test]
    fn iml_round_trip_over_messages() {
        let hub = Hub::new(None);
        let mut cur = None;
        send(
            &hub,
            &mut cur,
            r#"{"v":1,"cmd":"create","config":{"presets":[[0,1,1,0,300,1],[0,1,1,0,3000,1]]}}"#,
        );
        send(
            &hub,
            &mut cur,
            r#"{"v":1,"cmd":"record","features":[0,0],"preset":0}"#,
        );
        let ev = send(
            &hub,
            &mut cur,
            r#"{"v":1,"cmd":"predict","features":[0,0]}"#,
        );
        match &ev[0] {
            Event::Error {
                kind,
                command,
                expected: Some(expected),
                ..
            } => {
                assert_eq!(
                    (kind.as_str(), command.as_deref()),
                    ("config", Some("predict"))
                );
                assert!(expected.contains(&"train".to_string()));
            }
            other => panic!("{other:?}"),
        }
        send(
            &hub,
            &mut cur,
            r#"{"v":1,"cmd":"record","features":[1,1],"preset":1}"#,
        );
        let ev = send(
            &hub,
            &mut cur,
            r#"{"v":1,"cmd":"train","params":{"epochs":300}}"#,
        );
        assert!(matches!(
            &ev[0],
            Event::State {
                phase: Phase::Trained,
                examples: 2,
                loss: Some(_),
                ..
            }
        ));
        let ev = send(
            &hub,
            &mut cur,
            r#"{"v":1,"cmd":"predict","features":[1,1]}"#,
        );
        let Event::Params { values, .. } = &ev[0] else {
            panic!("{ev:?}")
        };
        assert_eq!(values.len(), 6);
        let text = ev[0].to_json();
        assert_eq!(Event::from_json(&text).unwrap(), ev[0]);
    }

    #[test]
    fn commands_without_session_ask_for_create() {
        let hub = Hub::new(None);
        let ev = send(&hub, &mut None, r#"{"v":1,"cmd":"propose"}"#);
        let Event::Error { expected, .. } = &ev[0] else {
            panic!()
        };
        assert_eq!(
            expected.as_deref(),
            Some(&["create".to_string(), "load".to_string()][..])
        );
    }

    #[test]
    fn command_json_round_trips() {
        let c = Command::Guiding {
            session: Some("a".into()),
            sign: -1,
        };
        assert_eq!(parse_command(&c.to_json()).unwrap(), c);
    }
}
