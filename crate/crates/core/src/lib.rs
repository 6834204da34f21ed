//! Core library for simulating all-to-all information dissemination over
//! lossy broadcast wireless networks with random linear network coding.
//!
//! The crate is organized around five pieces:
//!
//! - [`galois`]: arithmetic over GF(2^q) for coefficients and symbols.
//! - [`coding`]: coded messages and per-node subspace buffers with
//!   incremental rank tracking, encoding and decoding.
//! - [`radio`]: topologies and the fading-channel reception model that
//!   yields per-link success probabilities.
//! - [`engine`]: the slotted Monte-Carlo simulation measuring stopping
//!   times and dimension traces, for the coded protocol and a
//!   random-selection baseline.
//! - [`bounds`]: exact-arithmetic evaluation of the analytic upper bound on
//!   the expected stopping time.

pub mod bounds;
pub mod coding;
pub mod engine;
pub mod galois;
pub mod radio;

pub use bounds::{BoundInput, BoundResult, CollisionBound};
pub use coding::{CodedMessage, InformationPacket, SubspaceBuffer};
pub use engine::{ExperimentSummary, NcTrialOutcome, Protocol, SimConfig, TrialResult};
pub use galois::{FieldContext, FieldElement};
pub use radio::{
    ChannelParams, ConnectivityClass, NodePosition, ReceptionMatrix, TopologySpec,
};
