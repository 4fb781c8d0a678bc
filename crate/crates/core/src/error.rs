use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("scenario violation: {count} concurrent witnesses exceed w = {w} at iteration {iteration}")]
    WitnessOverflow { count: usize, w: usize, iteration: u64 },
    #[error("agent {agent} has degree {degree} above the bound {delta}")]
    DegreeExceeded { agent: usize, degree: usize, delta: usize },
    #[error("agent {agent} out of range for {n} agents")]
    UnknownAgent { agent: usize, n: usize },
    #[error("graph has {graph} vertices but the world has {world} agents")]
    SizeMismatch { graph: usize, world: usize },
    #[error("witness schedule event {index}: {msg}")]
    Schedule { index: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("malformed diff: edge ({0}, {1}) is not incident to reconfiguring vertex {2}")]
    MalformedDiff(usize, usize, usize),
    #[error("invalid reconfiguration of vertex {vertex} at iteration {iteration}")]
    InvalidReconfiguration { vertex: usize, iteration: u64 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("sites ({0}, {1}) and ({2}, {3}) are not adjacent")]
    NotAdjacent(i32, i32, i32, i32),
    #[error("coordinate ({q}, {r}) outside the {side}x{side} lattice")]
    OutOfRange { q: i32, r: i32, side: u32 },
    #[error("scenario violation: placing food at ({q}, {r}) would exceed w = {w} food sources")]
    FoodLimit { q: i32, r: i32, w: usize },
    #[error("no food at ({0}, {1})")]
    FoodNotFound(i32, i32),
    #[error("food already present at ({0}, {1})")]
    FoodExists(i32, i32),
    #[error("{agents} agents do not fit on {sites} sites")]
    TooManyAgents { agents: usize, sites: usize },
    #[error("lattice side must be at least 3, got {0}")]
    SideTooSmall(u32),
    #[error("agent {0} out of range")]
    UnknownAgent(usize),
    #[error("site ({0}, {1}) is already occupied")]
    Occupied(i32, i32),
    #[error("accepted move of agent {agent} from ({fq}, {fr}) is not a locally connected reconfiguration")]
    NotLocallyConnected { agent: usize, fq: i32, fr: i32 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("component is empty")]
    Empty,
    #[error("component is disconnected: agent {unreached} not reachable from agent {start}")]
    Disconnected { start: usize, unreached: usize },
    #[error("agent {0} out of range")]
    UnknownAgent(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ErgodicityError {
    #[error("configuration is disconnected")]
    Disconnected,
    #[error("pinned site is not occupied")]
    PinnedMissing,
    #[error("configuration contains {0} immobile agents; exactly one is required")]
    ImmobileCount(usize),
    #[error("comb precondition violated at lane {lane}, depth {depth}: {clause}")]
    NotCombable { lane: i32, depth: i32, clause: &'static str },
    #[error("comb at lane {lane}, depth {depth} did not reach a combed state: {clause}")]
    CombIncomplete { lane: i32, depth: i32, clause: &'static str },
    #[error("planner emitted an invalid move from ({0}, {1}) to ({2}, {3})")]
    InvalidMove(i32, i32, i32, i32),
    #[error("no route for agent at ({0}, {1}) to ({2}, {3})")]
    NoRoute(i32, i32, i32, i32),
    #[error("no progress: minimum spine length stuck at {0}")]
    NoProgress(u32),
    #[error("step budget exhausted in {0}")]
    Budget(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertificateError {
    #[error("move {index}: {reason}")]
    InvalidMove { index: usize, reason: String },
    #[error("initial configuration: {0}")]
    BadInitial(String),
    #[error("final configuration does not match the replayed configuration")]
    FinalMismatch,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid scenario field `{field}`: {msg}")]
    Field { field: String, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("output: {0}")]
    Output(String),
}

impl ScenarioError {
    pub fn field(field: impl Into<String>, msg: impl Into<String>) -> Self {
        ScenarioError::Field { field: field.into(), msg: msg.into() }
    }
}
