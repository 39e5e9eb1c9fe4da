//! Redundant placement of chained microservice candidates on heterogeneous
//! edge networks.
//!
//! A [`HetNetTopology`] of small-cell base stations, an [`ApplicationSpec`]
//! with a Markov [`CompositionModel`] over candidate choices, and timing
//! constants form an [`Instance`]. [`run_gass`] searches slot-encoded
//! [`PlacementVector`]s for the lowest sample-average response time and
//! [`run_saa_rp`] wraps it in replicated sample-average approximation.

// `!(x > 0.0)` is the idiom for rejecting NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod application;
pub mod baselines;
pub mod error;
pub mod evaluator;
pub mod ga;
pub mod gass;
pub mod placement;
pub mod rng;
pub mod saa;
pub mod scenario;
pub mod topology;

pub use application::{ApplicationSpec, Choice, CompositionModel, CompositionSample, EMPTY_SLOT};
pub use error::{Error, Result};
pub use evaluator::{Instance, ProcessorLocation, ResponseBreakdown, TimingParams, TimingRanges};
pub use ga::{ConvergenceTrace, GaConfig, SearchOutcome};
pub use gass::run_gass;
pub use placement::{solution_space_size, PlacementVector, Violation};
pub use rng::{stream, StreamKey, StreamRng};
pub use saa::{run_saa_rp, SaaConfig, SaaOutcome};
pub use topology::{HetNetTopology, Point, SbsNode};
