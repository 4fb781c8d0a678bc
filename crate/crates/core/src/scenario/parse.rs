//! Scenario documents (TOML) and their validation.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::error::ScenarioError;
use crate::graph::{BatchRule, ScriptedSequence};
use crate::lattice::FoodEvent;
use crate::model::{AgentState, ProtocolParams};

use super::{AdversarySpec, Event, GraphSpec, GraphTopology, InitialPlacement, LatticeSpec, Mode, Scenario, StopSpec, StopWhen, TimedEvent};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    mode: Spanned<String>,
    agents: Spanned<usize>,
    #[serde(default = "one")]
    trials: u64,
    #[serde(default)]
    seed: u64,
    stride: Option<Spanned<u64>>,
    snapshot_every: Option<Spanned<u64>>,
    ledger: Option<BatchRule>,
    initial_state: Option<Spanned<String>>,
    initial_states: Option<Spanned<Vec<String>>>,
    #[serde(default)]
    params: RawParams,
    stop: Spanned<RawStop>,
    graph: Option<Spanned<RawGraph>>,
    lattice: Option<Spanned<RawLattice>>,
    #[serde(default)]
    schedule: Vec<Spanned<RawEvent>>,
}

fn one() -> u64 {
    1
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawParams {
    w: Option<Spanned<usize>>,
    p: Option<Spanned<f64>>,
    delta: Option<Spanned<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStop {
    when: Spanned<String>,
    max_iters: u64,
    not_before: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    kind: Spanned<String>,
    rows: Option<usize>,
    cols: Option<usize>,
    extra: Option<usize>,
    max_degree: Option<usize>,
    edges: Option<Vec<(usize, usize)>>,
    file: Option<Spanned<String>>,
    adversary: Option<Spanned<String>>,
    rate: Option<f64>,
    side: Option<u32>,
    lambda: Option<f64>,
    validate: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    side: Spanned<u32>,
    lambda: Option<Spanned<f64>>,
    init: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    t: u64,
    op: String,
    agent: Option<usize>,
    q: Option<i32>,
    r: Option<i32>,
    from: Option<[i32; 2]>,
    to: Option<[i32; 2]>,
    value: Option<f64>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err(&self, field: &str, span: Range<usize>, msg: impl Into<String>) -> ScenarioError {
        ScenarioError::field(field, format!("line {}: {}", self.line(span), msg.into()))
    }
}

/// Parses and validates a scenario; relative file references resolve
/// against `base_dir`.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let cx = Ctx { text };

    let mode = match raw.mode.get_ref().as_str() {
        "graph" => Mode::Graph,
        "lattice" => Mode::Lattice,
        other => return Err(cx.err("mode", raw.mode.span(), format!("expected \"graph\" or \"lattice\", got {other:?}"))),
    };
    let n = *raw.agents.get_ref();
    if n == 0 {
        return Err(cx.err("agents", raw.agents.span(), "must be at least 1"));
    }

    let w = raw.params.w.as_ref().map(|s| *s.get_ref()).unwrap_or(1);
    if w == 0 {
        return Err(cx.err("params.w", raw.params.w.as_ref().unwrap().span(), "must be at least 1"));
    }
    let p = raw.params.p.as_ref().map(|s| *s.get_ref()).unwrap_or_else(|| ProtocolParams::default_p(w));
    // Validate p against w now; Δ is finalized per trial.
    if let Err(e) = ProtocolParams::new(w, p, 1) {
        let span = raw.params.p.as_ref().map(|s| s.span()).unwrap_or(0..0);
        return Err(cx.err("params.p", span, e.to_string()));
    }
    let delta = match &raw.params.delta {
        Some(d) if *d.get_ref() == 0 => return Err(cx.err("params.delta", d.span(), "must be at least 1")),
        Some(d) => Some(*d.get_ref()),
        None => None,
    };

    let initial = initial_states(&cx, &raw, n)?;

    let (graph, lattice) = match mode {
        Mode::Graph => {
            if let Some(l) = &raw.lattice {
                return Err(cx.err("lattice", l.span(), "not allowed in graph mode"));
            }
            let g = raw.graph.as_ref().ok_or_else(|| ScenarioError::field("graph", "graph mode requires a [graph] table"))?;
            (Some(graph_spec(&cx, g, n, base_dir)?), None)
        }
        Mode::Lattice => {
            if let Some(g) = &raw.graph {
                return Err(cx.err("graph", g.span(), "not allowed in lattice mode"));
            }
            let l = raw.lattice.as_ref().ok_or_else(|| ScenarioError::field("lattice", "lattice mode requires a [lattice] table"))?;
            (None, Some(lattice_spec(&cx, l, n)?))
        }
    };

    let stop_raw = raw.stop.get_ref();
    let when = match stop_raw.when.get_ref().as_str() {
        "all_aware" => StopWhen::AllAware,
        "all_unaware" => StopWhen::AllUnaware,
        "no_residuals" => StopWhen::NoResiduals,
        "never" => StopWhen::Never,
        other => {
            return Err(cx.err(
                "stop.when",
                stop_raw.when.span(),
                format!("expected all_aware, all_unaware, no_residuals or never, got {other:?}"),
            ))
        }
    };

    let mut schedule = Vec::with_capacity(raw.schedule.len());
    for (i, ev) in raw.schedule.iter().enumerate() {
        schedule.push(event(&cx, i, ev, mode)?);
    }
    for (i, pair) in schedule.windows(2).enumerate() {
        if pair[0].t > pair[1].t {
            return Err(cx.err(&format!("schedule[{}]", i + 1), raw.schedule[i + 1].span(), "events must be sorted by t"));
        }
    }
    check_schedule(&cx, &raw, &schedule, mode, n, w, lattice.as_ref())?;

    let last_event = schedule.last().map(|e| e.t).unwrap_or(0);
    let stop = StopSpec { when, max_iters: stop_raw.max_iters, not_before: stop_raw.not_before.unwrap_or(last_event) };

    let stride = match &raw.stride {
        Some(s) if *s.get_ref() == 0 => return Err(cx.err("stride", s.span(), "must be at least 1")),
        Some(s) => *s.get_ref(),
        None => {
            if n <= 64 {
                1
            } else {
                64
            }
        }
    };
    let snapshot_every = match &raw.snapshot_every {
        Some(s) if *s.get_ref() == 0 => return Err(cx.err("snapshot_every", s.span(), "must be at least 1")),
        Some(s) if mode == Mode::Graph => return Err(cx.err("snapshot_every", s.span(), "only available in lattice mode")),
        s => s.as_ref().map(|s| *s.get_ref()),
    };

    Ok(Scenario {
        mode,
        n,
        w,
        p,
        delta,
        initial,
        graph,
        lattice,
        schedule,
        stop,
        trials: raw.trials,
        seed: raw.seed,
        stride,
        snapshot_every,
        ledger: raw.ledger,
    })
}

fn initial_states(cx: &Ctx, raw: &RawScenario, n: usize) -> Result<Vec<AgentState>, ScenarioError> {
    match (&raw.initial_state, &raw.initial_states) {
        (Some(a), Some(_)) => Err(cx.err("initial_states", a.span(), "give initial_state or initial_states, not both")),
        (Some(tag), None) => {
            let s = AgentState::from_tag(tag.get_ref()).ok_or_else(|| cx.err("initial_state", tag.span(), format!("unknown state tag {:?}", tag.get_ref())))?;
            Ok(vec![s; n])
        }
        (None, Some(tags)) => {
            if tags.get_ref().len() != n {
                return Err(cx.err("initial_states", tags.span(), format!("expected {n} entries, got {}", tags.get_ref().len())));
            }
            tags.get_ref()
                .iter()
                .map(|t| AgentState::from_tag(t).ok_or_else(|| cx.err("initial_states", tags.span(), format!("unknown state tag {t:?}"))))
                .collect()
        }
        (None, None) => Ok(vec![AgentState::Unaware; n]),
    }
}

fn graph_spec(cx: &Ctx, g: &Spanned<RawGraph>, n: usize, base_dir: Option<&Path>) -> Result<GraphSpec, ScenarioError> {
    let raw = g.get_ref();
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| cx.err(&format!("graph.{name}"), g.span(), format!("required for kind {:?}", raw.kind.get_ref())));
    let topology = match raw.kind.get_ref().as_str() {
        "path" => GraphTopology::Path,
        "cycle" => {
            if n < 3 {
                return Err(cx.err("graph.kind", raw.kind.span(), "a cycle needs at least 3 agents"));
            }
            GraphTopology::Cycle
        }
        "complete" => GraphTopology::Complete,
        "grid" => {
            let (rows, cols) = (need(raw.rows, "rows")?, need(raw.cols, "cols")?);
            if rows * cols != n {
                return Err(cx.err("graph.rows", g.span(), format!("rows * cols = {} but agents = {n}", rows * cols)));
            }
            GraphTopology::Grid { rows, cols }
        }
        "random" => GraphTopology::Random { extra: raw.extra.unwrap_or(0), max_degree: need(raw.max_degree, "max_degree")? },
        "edges" => {
            let edges = raw.edges.clone().ok_or_else(|| cx.err("graph.edges", g.span(), "required for kind \"edges\""))?;
            let snap = crate::graph::GraphSnapshot::from_edges(n, &edges).map_err(|e| cx.err("graph.edges", g.span(), e.to_string()))?;
            if !snap.is_connected() {
                return Err(cx.err("graph.edges", g.span(), "graph must be connected"));
            }
            GraphTopology::Edges(edges)
        }
        "scripted" => {
            let file = raw.file.as_ref().ok_or_else(|| cx.err("graph.file", g.span(), "required for kind \"scripted\""))?;
            let mut path = PathBuf::from(file.get_ref());
            if path.is_relative() {
                if let Some(b) = base_dir {
                    path = b.join(path);
                }
            }
            let seq = ScriptedSequence::load(&path, n)?;
            if seq.initial().is_none() {
                return Err(cx.err("graph.file", file.span(), format!("{} has no graph at t = 0", path.display())));
            }
            GraphTopology::Scripted(seq)
        }
        other => return Err(cx.err("graph.kind", raw.kind.span(), format!("unknown graph kind {other:?}"))),
    };
    let adversary = match raw.adversary.as_ref().map(|a| a.get_ref().as_str()) {
        None | Some("static") => AdversarySpec::Static,
        Some("random_rewiring") => {
            let rate = raw.rate.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&rate) {
                return Err(cx.err("graph.rate", g.span(), "must lie in [0, 1]"));
            }
            AdversarySpec::RandomRewiring { rate, max_degree: need(raw.max_degree, "max_degree")? }
        }
        Some("lattice_movement") => {
            let side = raw.side.ok_or_else(|| cx.err("graph.side", g.span(), "required for the lattice_movement adversary"))?;
            if (side as usize).pow(2) < n || side < 4 {
                return Err(cx.err("graph.side", g.span(), format!("side {side} cannot hold {n} agents")));
            }
            AdversarySpec::LatticeMovement { side, lambda: raw.lambda.unwrap_or(4.0) }
        }
        Some(other) => return Err(cx.err("graph.adversary", raw.adversary.as_ref().unwrap().span(), format!("unknown adversary {other:?}"))),
    };
    if matches!(topology, GraphTopology::Scripted(_)) && adversary != AdversarySpec::Static {
        return Err(cx.err("graph.adversary", g.span(), "a scripted sequence is its own adversary"));
    }
    if matches!(adversary, AdversarySpec::LatticeMovement { .. }) && raw.kind.get_ref() != "path" {
        // The lattice placement decides the graph.
        return Err(cx.err("graph.kind", raw.kind.span(), "use kind = \"path\" as a placeholder with the lattice_movement adversary"));
    }
    Ok(GraphSpec { topology, adversary, validate: raw.validate.unwrap_or(true) })
}

fn lattice_spec(cx: &Ctx, l: &Spanned<RawLattice>, n: usize) -> Result<LatticeSpec, ScenarioError> {
    let raw = l.get_ref();
    let side = *raw.side.get_ref();
    if side < 4 {
        return Err(cx.err("lattice.side", raw.side.span(), "must be at least 4"));
    }
    if (side as usize) * (side as usize) < n {
        return Err(cx.err("lattice.side", raw.side.span(), format!("{n} agents do not fit on {side}x{side} sites")));
    }
    let lambda = raw.lambda.as_ref().map(|x| *x.get_ref()).unwrap_or(4.0);
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(cx.err("lattice.lambda", raw.lambda.as_ref().unwrap().span(), "must be positive"));
    }
    let init = match raw.init.as_ref().map(|s| s.get_ref().as_str()) {
        None | Some("random") => InitialPlacement::Random,
        Some("compressed") => InitialPlacement::Compressed,
        Some(other) => return Err(cx.err("lattice.init", raw.init.as_ref().unwrap().span(), format!("expected random or compressed, got {other:?}"))),
    };
    Ok(LatticeSpec { side, lambda, init })
}

fn event(cx: &Ctx, i: usize, ev: &Spanned<RawEvent>, mode: Mode) -> Result<TimedEvent, ScenarioError> {
    let raw = ev.get_ref();
    let field = format!("schedule[{i}]");
    let e = |msg: String| cx.err(&field, ev.span(), msg);
    let need_qr = || match (raw.q, raw.r) {
        (Some(q), Some(r)) => Ok((q, r)),
        _ => Err(e(format!("op {:?} needs q and r", raw.op))),
    };
    let kind = match (mode, raw.op.as_str()) {
        (Mode::Graph, "add_witness") => Event::AddWitness { agent: raw.agent.ok_or_else(|| e("add_witness needs agent".into()))? },
        (Mode::Graph, "remove_witness") => Event::RemoveWitness { agent: raw.agent.ok_or_else(|| e("remove_witness needs agent".into()))? },
        (Mode::Lattice, "place_food") => {
            let (q, r) = need_qr()?;
            Event::Food(FoodEvent::Place { q, r })
        }
        (Mode::Lattice, "remove_food") => {
            let (q, r) = need_qr()?;
            Event::Food(FoodEvent::Remove { q, r })
        }
        (Mode::Lattice, "shift_food") => match (raw.from, raw.to) {
            (Some(from), Some(to)) => Event::Food(FoodEvent::Shift { from, to }),
            _ => return Err(e("shift_food needs from and to".into())),
        },
        (Mode::Lattice, "set_lambda") => {
            let v = raw.value.ok_or_else(|| e("set_lambda needs value".into()))?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(e("lambda must be positive".into()));
            }
            Event::SetLambda { value: v }
        }
        (_, other) => return Err(e(format!("op {other:?} is not available in {mode:?} mode"))),
    };
    Ok(TimedEvent { t: raw.t, event: kind })
}

/// Dry-runs the schedule against the `w` bound and site/agent ranges.
fn check_schedule(cx: &Ctx, raw: &RawScenario, schedule: &[TimedEvent], mode: Mode, n: usize, w: usize, lattice: Option<&LatticeSpec>) -> Result<(), ScenarioError> {
    let fail = |i: usize, msg: String| cx.err(&format!("schedule[{i}]"), raw.schedule[i].span(), msg);
    match mode {
        Mode::Graph => {
            let mut live = vec![false; n];
            let mut count = 0;
            for (i, ev) in schedule.iter().enumerate() {
                match ev.event {
                    Event::AddWitness { agent } | Event::RemoveWitness { agent } if agent >= n => {
                        return Err(fail(i, format!("agent {agent} out of range (agents = {n})")))
                    }
                    Event::AddWitness { agent } => {
                        if live[agent] {
                            return Err(fail(i, format!("agent {agent} is already a witness")));
                        }
                        live[agent] = true;
                        count += 1;
                        if count > w {
                            return Err(fail(i, format!("{count} concurrent stimuli exceed w = {w}")));
                        }
                    }
                    Event::RemoveWitness { agent } => {
                        if !live[agent] {
                            return Err(fail(i, format!("agent {agent} is not a witness")));
                        }
                        live[agent] = false;
                        count -= 1;
                    }
                    _ => unreachable!(),
                }
            }
        }
        Mode::Lattice => {
            let side = lattice.map(|l| l.side as i32).unwrap_or(0);
            let mut food = std::collections::BTreeSet::new();
            let in_range = |q: i32, r: i32| (0..side).contains(&q) && (0..side).contains(&r);
            for (i, ev) in schedule.iter().enumerate() {
                match ev.event {
                    Event::Food(FoodEvent::Place { q, r }) => {
                        if !in_range(q, r) {
                            return Err(fail(i, format!("site ({q}, {r}) outside 0..{side}")));
                        }
                        if !food.insert((q, r)) {
                            return Err(fail(i, format!("food already at ({q}, {r})")));
                        }
                        if food.len() > w {
                            return Err(fail(i, format!("{} concurrent foods exceed w = {w}", food.len())));
                        }
                    }
                    Event::Food(FoodEvent::Remove { q, r }) => {
                        if !food.remove(&(q, r)) {
                            return Err(fail(i, format!("no food at ({q}, {r})")));
                        }
                    }
                    Event::Food(FoodEvent::Shift { from, to }) => {
                        if !in_range(to[0], to[1]) {
                            return Err(fail(i, format!("site ({}, {}) outside 0..{side}", to[0], to[1])));
                        }
                        if !food.remove(&(from[0], from[1])) {
                            return Err(fail(i, format!("no food at ({}, {})", from[0], from[1])));
                        }
                        if !food.insert((to[0], to[1])) {
                            return Err(fail(i, format!("food already at ({}, {})", to[0], to[1])));
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(())
}
