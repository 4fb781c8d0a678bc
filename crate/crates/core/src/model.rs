//! Agent states, behavior groups and protocol parameters.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::ModelError;

/// The six-state automaton driven by the adaptive stimuli protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum AgentState {
    #[default]
    #[serde(rename = "U")]
    Unaware,
    #[serde(rename = "A0")]
    AwareEmpty,
    #[serde(rename = "AA")]
    AwareAlert,
    #[serde(rename = "AW")]
    AwareWitness,
    #[serde(rename = "AAW")]
    AwareAlertWitness,
    #[serde(rename = "AC")]
    AwareClear,
}

impl AgentState {
    pub const ALL: [AgentState; 6] = [
        AgentState::Unaware,
        AgentState::AwareEmpty,
        AgentState::AwareAlert,
        AgentState::AwareWitness,
        AgentState::AwareAlertWitness,
        AgentState::AwareClear,
    ];

    /// Wire tag used in every file and socket format.
    pub fn tag(self) -> &'static str {
        match self {
            AgentState::Unaware => "U",
            AgentState::AwareEmpty => "A0",
            AgentState::AwareAlert => "AA",
            AgentState::AwareWitness => "AW",
            AgentState::AwareAlertWitness => "AAW",
            AgentState::AwareClear => "AC",
        }
    }

    pub fn from_tag(tag: &str) -> Option<AgentState> {
        AgentState::ALL.into_iter().find(|s| s.tag() == tag)
    }

    pub fn is_aware(self) -> bool {
        self != AgentState::Unaware
    }

    pub fn has_alert_token(self) -> bool {
        matches!(self, AgentState::AwareAlert | AgentState::AwareAlertWitness)
    }

    /// Witness flag set (A_W or A_AW).
    pub fn has_witness_flag(self) -> bool {
        matches!(self, AgentState::AwareWitness | AgentState::AwareAlertWitness)
    }

    pub fn behavior_group(self) -> BehaviorGroup {
        match self {
            AgentState::Unaware => BehaviorGroup::Unaware,
            AgentState::AwareEmpty | AgentState::AwareAlert => BehaviorGroup::Mobile,
            AgentState::AwareWitness | AgentState::AwareAlertWitness | AgentState::AwareClear => {
                BehaviorGroup::Immobile
            }
        }
    }
}

impl fmt::Display for AgentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Coarse view of a state exposed to reconfiguration adversaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BehaviorGroup {
    Unaware,
    Mobile,
    Immobile,
}

impl BehaviorGroup {
    pub fn is_aware(self) -> bool {
        self != BehaviorGroup::Unaware
    }
}

pub fn behavior_group(state: AgentState) -> BehaviorGroup {
    state.behavior_group()
}

pub fn is_aware(state: AgentState) -> bool {
    state.is_aware()
}

pub fn has_alert_token(state: AgentState) -> bool {
    state.has_alert_token()
}

/// Maps a state vector to the group vector an adversary may observe.
pub fn group_vector(states: &[AgentState]) -> Vec<BehaviorGroup> {
    states.iter().map(|s| s.behavior_group()).collect()
}

/// Bounds `w` (concurrent stimuli), `p` (token generation probability) and
/// `delta_max` (degree bound used by the token walk).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    w: usize,
    p: f64,
    delta_max: usize,
}

impl ProtocolParams {
    pub fn new(w: usize, p: f64, delta_max: usize) -> Result<Self, ModelError> {
        if w == 0 {
            return Err(ModelError::InvalidParams("w must be at least 1".into()));
        }
        if !(p > 0.0 && p < 1.0 / w as f64) {
            return Err(ModelError::InvalidParams(format!("p = {p} must lie in (0, 1/w) with w = {w}")));
        }
        if delta_max == 0 {
            return Err(ModelError::InvalidParams("delta_max must be at least 1".into()));
        }
        Ok(ProtocolParams { w, p, delta_max })
    }

    /// `p` defaults to the midpoint `1/(2w)`.
    pub fn with_default_p(w: usize, delta_max: usize) -> Result<Self, ModelError> {
        Self::new(w, Self::default_p(w), delta_max)
    }

    pub fn default_p(w: usize) -> f64 {
        1.0 / (2.0 * w.max(1) as f64)
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta_max(&self) -> usize {
        self.delta_max
    }
}
