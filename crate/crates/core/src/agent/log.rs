use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    agent_init, agent_propose, apply_guiding_feedback, apply_zone_feedback, AgentConfig,
    AgentState, FeatureSpace, HistoryEntry,
};
use crate::error::{Error, Result};

/// One line of a history log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Init {
        space: FeatureSpace,
        n_presets: usize,
        seed: u64,
        config: AgentConfig,
    },
    Proposal {
        id: u64,
        points: Vec<Vec<f64>>,
    },
    Guiding {
        sign: i8,
    },
    Zone,
}

impl From<&HistoryEntry> for LogEvent {
    fn from(h: &HistoryEntry) -> Self {
        match h {
            HistoryEntry::Proposal { id, points } => LogEvent::Proposal {
                id: *id,
                points: points.clone(),
            },
            HistoryEntry::Guiding { sign } => LogEvent::Guiding { sign: *sign },
            HistoryEntry::Zone => LogEvent::Zone,
        }
    }
}

/// Replayable record of an agent's life: the init parameters followed by
/// every proposal and feedback event.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentLog {
    pub events: Vec<LogEvent>,
}

impl AgentLog {
    pub fn from_state(state: &AgentState) -> Self {
        let mut events = vec![LogEvent::Init {
            space: state.space.clone(),
            n_presets: state.positions.len(),
            seed: state.seed,
            config: state.config.clone(),
        }];
        events.extend(state.history.iter().map(LogEvent::from));
        AgentLog { events }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("log events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: LogEvent = serde_json::from_str(line).map_err(|err| Error::Parse {
                row: i + 1,
                column: None,
                message: err.to_string(),
            })?;
            events.push(e);
        }
        Ok(AgentLog { events })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

/// Rebuilds the final agent state from a log. Every recorded proposal is
/// recomputed and must match bit for bit.
pub fn replay_log(log: &AgentLog) -> Result<AgentState> {
    let mut events = log.events.iter();
    let mut state = match events.next() {
        Some(LogEvent::Init {
            space,
            n_presets,
            seed,
            config,
        }) => agent_init(space.clone(), *n_presets, *seed, config.clone())?,
        _ => {
            return Err(Error::Data(
                "history log must start with an init event".into(),
            ))
        }
    };
    let placeholder = vec![Vec::new(); state.n_presets()];
    for (line, event) in events.enumerate() {
        state = match event {
            LogEvent::Init { .. } => {
                return Err(Error::Data(format!(
                    "second init event at line {}",
                    line + 2
                )))
            }
            LogEvent::Proposal { id, points } => {
                let (p, next) = agent_propose(state, &placeholder)?;
                if p.id != *id || p.points != *points {
                    return Err(Error::Data(format!(
                        "replay diverged at proposal {id} (line {})",
                        line + 2
                    )));
                }
                next
            }
            LogEvent::Guiding { sign } => apply_guiding_feedback(state, *sign)?,
            LogEvent::Zone => apply_zone_feedback(state)?,
        };
    }
    Ok(state)
}
