//! Diurnal-pattern-aware peer grouping for unstructured P2P overlays.
//!
//! Peers whose time-of-day availability complements each other gossip their
//! way into small groups whose combined per-slot availability approaches 1.
//!
//! - [`availability`]: slot model and availability-vector arithmetic
//! - [`metrics`]: pairing scores between groups
//! - [`protocol`]: knownlist gossip, invitation and merge state machine
//! - [`simulator`]: population, overlay, round loop and random baseline
//! - [`analysis`]: cumulative-frequency histograms and run comparisons

pub mod analysis;
pub mod availability;
mod ids;
pub mod metrics;
pub mod protocol;
pub mod simulator;

pub use availability::{AvailabilityError, AvailabilityVector, GeneratorParams, SlotIndex, EPSILON};
pub use ids::{GroupId, PeerId};
pub use metrics::{Contribution, GroupSummary, Metric};
pub use protocol::{Group, KnownList, ProtocolError, ProtocolParams, World};
pub use simulator::{ChurnMode, RunMetrics, Scheme, SimConfig, SimError, Simulation};
