//! Adaptive stimuli token passing on dynamic graphs and adaptive
//! alpha-compression foraging on a periodic triangular lattice.

pub mod engine;
pub mod ergodicity;
pub mod error;
pub mod graph;
pub mod lattice;
pub mod live;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scenario;

pub use engine::{step, run_until, World};
pub use error::*;
pub use model::{AgentState, BehaviorGroup, ProtocolParams};
pub use rng::SimRng;
