//! Gesture-to-sound mapping engine: sensor ingestion, motion and EMG
//! features, mapping models, granular and corpus-based synthesis, the
//! assisted exploration agent and the session layer tying them together.

// `!(x >= 0.0)` is how parameter checks reject NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the formulas in the numeric kernels
#![allow(clippy::needless_range_loop)]

pub mod agent;
pub mod corpus;
pub mod error;
pub mod features;
pub mod granular;
pub mod ingest;
pub mod models;
pub mod session;

pub use agent::{AgentConfig, AgentState, FeatureSpace, MappingProposal};
pub use corpus::{AudioUnit, Corpus, Descriptor};
pub use error::{Error, ErrorKind, Result};
pub use features::{FeatureConfig, FeatureVector};
pub use granular::SynthPreset;
pub use ingest::{AudioBuffer, FrameStream};
pub use models::{MlpModel, RegressionSet};
pub use session::{MappingRecord, Session, SessionConfig};
