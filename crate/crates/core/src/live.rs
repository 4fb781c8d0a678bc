//! Live lattice session over a WebSocket.
//!
//! The session thread owns the simulation. Socket tasks only forward parsed
//! commands into a queue and relay broadcast frames; a lagging subscriber
//! loses its oldest frames and never blocks the simulation.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use crossbeam_channel::{Receiver, RecvTimeoutError, Sender};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, oneshot};

use crate::error::ScenarioError;
use crate::lattice::FoodEvent;
use crate::rng::SimRng;
use crate::scenario::{Event, Mode, Scenario, Simulation, TimedEvent};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    PlaceFood { q: i32, r: i32 },
    RemoveFood { q: i32, r: i32 },
    ShiftFood { from: [i32; 2], to: [i32; 2] },
    Pause,
    Resume,
    SetSpeed { ips: f64 },
    SetLambda { value: f64 },
    SetSeedReset { seed: u64 },
}

/// A command with an optional client-chosen id echoed in its ack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cmd_id: Option<u64>,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlFrame {
    Ack { cmd_id: Option<u64> },
    Error { msg: String },
}

/// Trajectory-relevant commands since the last reset; replaying them as a
/// schedule reproduces the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandLog {
    pub seed: u64,
    pub events: Vec<TimedEvent>,
}

impl CommandLog {
    pub fn replay_scenario(&self, base: &Scenario) -> Scenario {
        let mut sc = base.with_events(&self.events);
        sc.seed = self.seed;
        sc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiveConfig {
    /// Snapshot cadence in iterations.
    pub stride: u64,
    /// Iteration budget per second.
    pub ips: f64,
    /// Frames buffered per subscriber before the oldest are dropped.
    pub buffer: usize,
    pub start_paused: bool,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig { stride: 1000, ips: 100_000.0, buffer: 256, start_paused: false }
    }
}

pub enum Incoming {
    Command(Envelope),
    Malformed(String),
    Shutdown,
}

/// Simulation state driven by the session thread; usable directly in tests.
pub struct Session {
    scenario: Scenario,
    sim: Simulation,
    paused: bool,
    ips: f64,
    stride: u64,
    log: CommandLog,
    frames: broadcast::Sender<Arc<str>>,
    latest: Arc<Mutex<Option<Arc<str>>>>,
}

impl Session {
    pub fn new(scenario: Scenario, cfg: &LiveConfig) -> Result<(Session, broadcast::Receiver<Arc<str>>), ScenarioError> {
        if scenario.mode != Mode::Lattice {
            return Err(ScenarioError::field("mode", "the live service needs a lattice scenario"));
        }
        if cfg.stride == 0 {
            return Err(ScenarioError::field("stride", "must be at least 1"));
        }
        if !(cfg.ips > 0.0) {
            return Err(ScenarioError::field("ips", "must be positive"));
        }
        let sim = Simulation::new(&scenario, 0)?;
        let (frames, rx) = broadcast::channel(cfg.buffer.max(1));
        let log = CommandLog { seed: scenario.seed, events: Vec::new() };
        let s = Session { scenario, sim, paused: cfg.start_paused, ips: cfg.ips, stride: cfg.stride, log, frames, latest: Arc::new(Mutex::new(None)) };
        Ok((s, rx))
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Arc<str>> {
        self.frames.subscribe()
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn ips(&self) -> f64 {
        self.ips
    }

    pub fn log(&self) -> &CommandLog {
        &self.log
    }

    pub fn latest(&self) -> Option<Arc<str>> {
        self.latest.lock().unwrap().clone()
    }

    fn send(&self, frame: String) {
        // No subscribers is fine.
        let _ = self.frames.send(Arc::from(frame));
    }

    fn send_control(&self, f: ControlFrame) {
        self.send(serde_json::to_string(&f).expect("control frames serialize"));
    }

    pub fn emit_snapshot(&self) {
        if let Some(json) = self.sim.snapshot_json() {
            let frame: Arc<str> = Arc::from(json);
            *self.latest.lock().unwrap() = Some(frame.clone());
            let _ = self.frames.send(frame);
        }
    }

    /// Applies one command between iterations; emits an ack or error frame
    /// and, when applied, a fresh snapshot.
    pub fn handle(&mut self, env: Envelope) {
        match self.apply(env.command) {
            Ok(()) => {
                self.send_control(ControlFrame::Ack { cmd_id: env.cmd_id });
                self.emit_snapshot();
            }
            Err(msg) => self.send_control(ControlFrame::Error { msg }),
        }
    }

    pub fn reject(&self, msg: String) {
        self.send_control(ControlFrame::Error { msg });
    }

    fn apply(&mut self, cmd: Command) -> Result<(), String> {
        let event = match cmd {
            Command::Pause => {
                self.paused = true;
                return Ok(());
            }
            Command::Resume => {
                self.paused = false;
                return Ok(());
            }
            Command::SetSpeed { ips } => {
                if !(ips > 0.0) {
                    return Err(format!("set_speed: ips must be positive, got {ips}"));
                }
                self.ips = ips;
                return Ok(());
            }
            Command::SetSeedReset { seed } => {
                let mut sc = self.scenario.clone();
                sc.seed = seed;
                self.sim = Simulation::with_rng(&sc, SimRng::for_trial(seed, 0)).map_err(|e| e.to_string())?;
                self.log = CommandLog { seed, events: Vec::new() };
                return Ok(());
            }
            Command::PlaceFood { q, r } => Event::Food(FoodEvent::Place { q, r }),
            Command::RemoveFood { q, r } => Event::Food(FoodEvent::Remove { q, r }),
            Command::ShiftFood { from, to } => Event::Food(FoodEvent::Shift { from, to }),
            Command::SetLambda { value } => Event::SetLambda { value },
        };
        let timed = self.sim.inject(&event).map_err(|e| e.to_string())?;
        self.log.events.push(timed);
        Ok(())
    }

    /// Runs up to `k` iterations, emitting a snapshot on every stride tick.
    pub fn run(&mut self, k: u64) -> Result<(), ScenarioError> {
        for _ in 0..k {
            if self.paused {
                break;
            }
            self.sim.advance()?;
            if self.sim.tick() % self.stride == 0 {
                self.emit_snapshot();
            }
        }
        Ok(())
    }

    /// Session loop: drains commands between iterations and paces
    /// iterations to the speed budget. Returns on `Shutdown` or when every
    /// sender is gone.
    pub fn run_loop(mut self, rx: Receiver<Incoming>) -> CommandLog {
        self.emit_snapshot();
        let mut epoch = Instant::now();
        let mut done: f64 = 0.0;
        let mut ips = self.ips;
        loop {
            loop {
                match rx.try_recv() {
                    Ok(Incoming::Command(env)) => self.handle(env),
                    Ok(Incoming::Malformed(msg)) => self.reject(msg),
                    Ok(Incoming::Shutdown) | Err(crossbeam_channel::TryRecvError::Disconnected) => return self.log,
                    Err(crossbeam_channel::TryRecvError::Empty) => break,
                }
            }
            if self.paused {
                match rx.recv_timeout(Duration::from_millis(20)) {
                    Ok(Incoming::Command(env)) => self.handle(env),
                    Ok(Incoming::Malformed(msg)) => self.reject(msg),
                    Ok(Incoming::Shutdown) | Err(RecvTimeoutError::Disconnected) => return self.log,
                    Err(RecvTimeoutError::Timeout) => {}
                }
                epoch = Instant::now();
                done = 0.0;
                continue;
            }
            if ips != self.ips {
                ips = self.ips;
                epoch = Instant::now();
                done = 0.0;
            }
            let due = (epoch.elapsed().as_secs_f64() * ips - done).floor();
            if due < 1.0 {
                thread::sleep(Duration::from_millis(1));
                continue;
            }
            let k = due.min(50_000.0) as u64;
            if let Err(e) = self.run(k) {
                self.reject(format!("simulation halted: {e}"));
                self.paused = true;
            }
            done += k as f64;
        }
    }
}

/// Running server; dropping it does not stop the session, call `shutdown`.
pub struct LiveServer {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    commands: Sender<Incoming>,
    session: Option<thread::JoinHandle<CommandLog>>,
    server: tokio::task::JoinHandle<()>,
}

#[derive(Clone)]
struct AppState {
    commands: Sender<Incoming>,
    frames: broadcast::Sender<Arc<str>>,
    latest: Arc<Mutex<Option<Arc<str>>>>,
}

impl LiveServer {
    /// Binds `addr` (port busy fails here) and starts the session thread.
    pub async fn start(scenario: Scenario, addr: SocketAddr, cfg: LiveConfig) -> Result<LiveServer, ScenarioError> {
        let (session, _) = Session::new(scenario, &cfg)?;
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| ScenarioError::Output(format!("cannot bind {addr}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| ScenarioError::Output(e.to_string()))?;
        let (tx, rx) = crossbeam_channel::unbounded();
        let state = AppState { commands: tx.clone(), frames: session.frames.clone(), latest: session.latest.clone() };
        let handle = thread::Builder::new()
            .name("live-session".into())
            .spawn(move || session.run_loop(rx))
            .map_err(|e| ScenarioError::Output(e.to_string()))?;
        let app = Router::new().route("/ws", get(ws_handler)).route("/", get(|| async { "stimuli live service; connect to /ws\n" })).with_state(state);
        let (stop_tx, stop_rx) = oneshot::channel::<()>();
        let server = tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = stop_rx.await;
                })
                .await;
        });
        Ok(LiveServer { addr, stop: Some(stop_tx), commands: tx, session: Some(handle), server })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections, ends the session and returns its log.
    pub async fn shutdown(mut self) -> CommandLog {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        let _ = self.commands.send(Incoming::Shutdown);
        self.server.abort();
        let handle = self.session.take().expect("session joined once");
        tokio::task::spawn_blocking(move || handle.join().expect("session thread panicked")).await.expect("join task")
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = state.frames.subscribe();
    let first = state.latest.lock().unwrap().clone();
    let writer = tokio::spawn(async move {
        if let Some(f) = first {
            if sink.send(Message::Text(f.as_ref().into())).await.is_err() {
                return;
            }
        }
        loop {
            match frames.recv().await {
                Ok(f) => {
                    if sink.send(Message::Text(f.as_ref().into())).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => log::debug!("subscriber lagged, dropped {n} frames"),
                Err(broadcast::error::RecvError::Closed) => return,
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        let incoming = match msg {
            Message::Text(t) => match serde_json::from_str::<Envelope>(t.as_str()) {
                Ok(env) => Incoming::Command(env),
                Err(e) => Incoming::Malformed(format!("malformed command: {e}")),
            },
            Message::Close(_) => break,
            _ => continue,
        };
        if state.commands.send(incoming).is_err() {
            break;
        }
    }
    writer.abort();
}
