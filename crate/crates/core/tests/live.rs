use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use serde_json::Value;
use stimuli_core::live::{Command, CommandLog, Envelope, LiveConfig, LiveServer, Session};
use stimuli_core::scenario::{Scenario, Simulation};
use tokio::sync::broadcast::{self, error::TryRecvError};
use tokio_tungstenite::tungstenite::Message;

fn demo() -> Scenario {
    Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/live_demo.toml")).unwrap()
}

fn session(stride: u64) -> (Session, broadcast::Receiver<Arc<str>>) {
    Session::new(demo(), &LiveConfig { stride, buffer: 4096, ..Default::default() }).unwrap()
}

fn env(cmd_id: u64, command: Command) -> Envelope {
    Envelope { cmd_id: Some(cmd_id), command }
}

fn drain(rx: &mut broadcast::Receiver<Arc<str>>) -> Vec<Value> {
    let mut out = Vec::new();
    loop {
        match rx.try_recv() {
            Ok(f) => out.push(serde_json::from_str(&f).unwrap()),
            Err(TryRecvError::Empty) => return out,
            Err(e) => panic!("{e:?}"),
        }
    }
}

fn has_food(snap: &Value, q: i64, r: i64) -> bool {
    snap["food"].as_array().unwrap().iter().any(|f| f["q"] == q && f["r"] == r)
}

#[test]
fn wire_format_of_commands() {
    let e: Envelope = serde_json::from_str(r#"{"type":"place_food","q":3,"r":5}"#).unwrap();
    assert_eq!(e.command, Command::PlaceFood { q: 3, r: 5 });
    assert_eq!(e.cmd_id, None);
    let e: Envelope = serde_json::from_str(r#"{"type":"shift_food","from":[1,2],"to":[3,4],"cmd_id":7}"#).unwrap();
    assert_eq!(e, env(7, Command::ShiftFood { from: [1, 2], to: [3, 4] }));
    for t in ["pause", "resume"] {
        serde_json::from_str::<Envelope>(&format!(r#"{{"type":"{t}"}}"#)).unwrap();
    }
    serde_json::from_str::<Envelope>(r#"{"type":"set_speed","ips":10.0}"#).unwrap();
    serde_json::from_str::<Envelope>(r#"{"type":"set_seed_reset","seed":4}"#).unwrap();
    assert!(serde_json::from_str::<Envelope>(r#"{"type":"teleport"}"#).is_err());
}

#[test]
fn place_food_shows_in_next_snapshot() {
    let (mut s, mut rx) = session(1000);
    s.run(2500).unwrap();
    drain(&mut rx);
    s.handle(env(1, Command::PlaceFood { q: 3, r: 5 }));
    let frames = drain(&mut rx);
    assert_eq!(frames[0], serde_json::json!({"type": "ack", "cmd_id": 1}));
    assert!(has_food(&frames[1], 3, 5));
    assert_eq!(frames[1]["tick"], 2500);
    s.run(500).unwrap();
    let next = drain(&mut rx);
    assert!(has_food(next.last().unwrap(), 3, 5));
}

#[test]
fn pause_freezes_the_tick() {
    let (mut s, _rx) = session(1000);
    s.run(100).unwrap();
    s.handle(env(1, Command::Pause));
    assert!(s.is_paused());
    s.run(10_000).unwrap();
    assert_eq!(s.simulation().tick(), 100);
    s.handle(env(2, Command::Resume));
    s.run(50).unwrap();
    assert_eq!(s.simulation().tick(), 150);
}

#[test]
fn set_lambda_reaches_the_lattice() {
    let (mut s, _rx) = session(1000);
    s.handle(env(1, Command::SetLambda { value: 2.5 }));
    assert_eq!(s.simulation().lattice().unwrap().lambda(), 2.5);
    s.handle(env(2, Command::SetLambda { value: 4.0 }));
    assert_eq!(s.simulation().lattice().unwrap().lambda(), 4.0);
    assert_eq!(s.log().events.len(), 2);
}

#[test]
fn invalid_commands_produce_error_frames() {
    let (mut s, mut rx) = session(1000);
    let bad = [
        Command::PlaceFood { q: 40, r: 0 },
        Command::RemoveFood { q: 1, r: 1 },
        Command::SetLambda { value: -1.0 },
        Command::SetSpeed { ips: 0.0 },
        Command::ShiftFood { from: [0, 0], to: [1, 1] },
    ];
    for (i, c) in bad.into_iter().enumerate() {
        s.handle(env(i as u64, c));
    }
    s.reject("malformed command: eof".into());
    let frames = drain(&mut rx);
    assert_eq!(frames.len(), 6);
    assert!(frames.iter().all(|f| f["type"] == "error" && f["msg"].is_string()));
    assert!(s.log().events.is_empty());
    // w = 4 caps the food count.
    for i in 0..4 {
        s.handle(env(10 + i, Command::PlaceFood { q: i as i32, r: 0 }));
    }
    drain(&mut rx);
    s.handle(env(20, Command::PlaceFood { q: 9, r: 9 }));
    assert_eq!(drain(&mut rx)[0]["type"], "error");
}

#[test]
fn stride_frames_are_evenly_spaced() {
    let (mut s, mut rx) = session(1000);
    s.run(10_500).unwrap();
    let ticks: Vec<u64> = drain(&mut rx).iter().map(|f| f["tick"].as_u64().unwrap()).collect();
    assert_eq!(ticks, (1..=10).map(|i| i * 1000).collect::<Vec<_>>());
}

#[test]
fn subscribers_see_identical_frames() {
    let (mut s, mut a) = session(500);
    let mut b = s.subscribe();
    s.run(2000).unwrap();
    s.handle(env(1, Command::PlaceFood { q: 5, r: 5 }));
    s.run(2000).unwrap();
    let (fa, fb) = (drain(&mut a), drain(&mut b));
    assert_eq!(fa.len(), 10);
    assert_eq!(fa, fb);
}

#[test]
fn no_subscribers_is_fine() {
    let (mut s, rx) = session(10);
    drop(rx);
    s.run(5_000).unwrap();
    assert_eq!(s.simulation().tick(), 5_000);
}

#[test]
fn slow_subscriber_loses_oldest_frames() {
    let (mut s, mut rx) = Session::new(demo(), &LiveConfig { stride: 1, buffer: 8, ..Default::default() }).unwrap();
    s.run(100).unwrap();
    assert!(matches!(rx.try_recv(), Err(TryRecvError::Lagged(92))));
    let rest = drain(&mut rx);
    assert_eq!(rest.first().unwrap()["tick"], 93);
    assert_eq!(rest.last().unwrap()["tick"], 100);
}

fn replay(log: &CommandLog, ticks: u64) -> String {
    let sc = log.replay_scenario(&demo());
    let mut sim = Simulation::new(&sc, 0).unwrap();
    for _ in 0..ticks {
        sim.advance().unwrap();
    }
    sim.apply_due().unwrap();
    sim.snapshot_json().unwrap()
}

#[test]
fn command_log_replays_the_trajectory() {
    let (mut s, _rx) = session(1000);
    s.run(3000).unwrap();
    s.handle(env(1, Command::PlaceFood { q: 20, r: 20 }));
    s.run(40_000).unwrap();
    s.handle(env(2, Command::SetLambda { value: 2.0 }));
    s.handle(env(3, Command::ShiftFood { from: [20, 20], to: [10, 30] }));
    s.run(20_000).unwrap();
    s.handle(env(4, Command::RemoveFood { q: 10, r: 30 }));
    s.run(7_000).unwrap();
    let live = s.simulation().snapshot_json().unwrap();
    assert_eq!(replay(s.log(), s.simulation().tick()), live);

    s.handle(env(5, Command::SetSeedReset { seed: 77 }));
    assert_eq!(s.simulation().tick(), 0);
    assert!(s.log().events.is_empty());
    s.handle(env(6, Command::PlaceFood { q: 1, r: 2 }));
    s.run(5_000).unwrap();
    assert_eq!(s.log().seed, 77);
    assert_eq!(replay(s.log(), 5_000), s.simulation().snapshot_json().unwrap());
}

async fn next_json(ws: &mut (impl StreamExt<Item = Result<Message, tokio_tungstenite::tungstenite::Error>> + Unpin)) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next()).await.expect("frame in time").unwrap().unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn websocket_round_trip() {
    let cfg = LiveConfig { stride: 1000, ips: 200_000.0, buffer: 1024, start_paused: false };
    let server = LiveServer::start(demo(), "127.0.0.1:0".parse().unwrap(), cfg).await.unwrap();
    let url = format!("ws://{}/ws", server.addr());
    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    let first = next_json(&mut ws).await;
    assert!(first["agents"].is_array());

    ws.send(Message::text(r#"{"type":"place_food","q":3,"r":5,"cmd_id":42}"#)).await.unwrap();
    let mut acked = false;
    loop {
        let f = next_json(&mut ws).await;
        if f["type"] == "ack" {
            assert_eq!(f["cmd_id"], 42);
            acked = true;
        } else if acked && f["agents"].is_array() {
            assert!(has_food(&f, 3, 5));
            break;
        }
    }

    ws.send(Message::text("{not json")).await.unwrap();
    loop {
        let f = next_json(&mut ws).await;
        if f["type"] == "error" {
            assert!(f["msg"].as_str().unwrap().contains("malformed"));
            break;
        }
    }

    ws.send(Message::text(r#"{"type":"pause"}"#)).await.unwrap();
    loop {
        if next_json(&mut ws).await["type"] == "ack" {
            break;
        }
    }

    // A second client starts with the latest snapshot.
    let (mut ws2, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    assert!(has_food(&next_json(&mut ws2).await, 3, 5));

    let busy = LiveServer::start(demo(), server.addr(), LiveConfig::default()).await;
    assert!(busy.is_err());

    ws.close(None).await.unwrap();
    let log = server.shutdown().await;
    assert_eq!(log.events.len(), 1);
}

#[test]
fn graph_scenarios_are_refused() {
    let sc = Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/path2_witness.toml")).unwrap();
    assert!(Session::new(sc, &LiveConfig::default()).is_err());
}
