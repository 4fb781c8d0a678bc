//! Batch execution of scenario trials and their file outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::ScenarioError;
use crate::metrics::{convergence_report, Sample, TrialRecord};

use super::sim::Simulation;
use super::{Mode, Scenario};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `0` uses the rayon default.
    pub jobs: usize,
    pub trace: bool,
}

/// Everything one trial produces besides its record.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub record: TrialRecord,
    /// `(file name, JSON)` lattice snapshots.
    pub snapshots: Vec<(String, String)>,
    /// Newline-delimited trace records when tracing.
    pub trace: Option<String>,
    /// `k,D_k,C_k` rows when a ledger is configured.
    pub recurrence: Option<String>,
}

pub fn run_trial(sc: &Scenario, trial: u64, opts: &RunOptions) -> Result<TrialOutput, ScenarioError> {
    let mut sim = Simulation::new(sc, trial)?;
    if opts.trace {
        sim.enable_trace();
    }
    let mut snapshots = Vec::new();
    let mut trace = opts.trace.then(String::new);
    let mut samples: Vec<Sample> = Vec::new();
    let mut aware_completion = None;
    let satisfied = loop {
        sim.apply_due()?;
        let t = sim.tick();
        if aware_completion.is_none() && sim.world().all_aware() {
            aware_completion = Some(t);
        }
        let done = t >= sc.stop.not_before && sim.predicate(sc.stop.when);
        let last = done || t >= sc.stop.max_iters;
        if t % sc.stride == 0 || last {
            samples.push(sim.sample());
        }
        if sc.snapshot_every.is_some_and(|every| t % every == 0) && !last {
            if let Some(json) = sim.snapshot_json() {
                snapshots.push((format!("trial{trial:04}_t{t:012}.json"), json));
            }
        }
        if last {
            break done;
        }
        sim.step_once()?;
        if let Some(buf) = &mut trace {
            for r in sim.drain_trace() {
                buf.push_str(&serde_json::to_string(&r).map_err(|e| ScenarioError::Output(e.to_string()))?);
                buf.push('\n');
            }
        }
    };
    if let Some(json) = sim.snapshot_json() {
        snapshots.push((format!("trial{trial:04}_final.json"), json));
    }
    let ledger = sim.ledger();
    let record = TrialRecord {
        trial,
        seed: sc.seed.wrapping_add(trial),
        n: sc.n,
        converged: satisfied,
        iterations: sim.tick(),
        aware_completion,
        samples,
        ledger: ledger.map(|l| l.summary(sc.n)),
        batches: ledger.map(|l| l.batches().to_vec()).unwrap_or_default(),
    };
    Ok(TrialOutput { record, snapshots, trace, recurrence: ledger.map(|l| l.to_csv()) })
}

/// Runs all trials, at most `opts.jobs` at a time; results keep trial order.
pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> Result<Vec<TrialOutput>, ScenarioError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build().map_err(|e| ScenarioError::Output(e.to_string()))?;
    pool.install(|| (0..sc.trials).into_par_iter().map(|i| run_trial(sc, i, opts)).collect())
}

fn opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn metrics_csv(records: &[&TrialRecord]) -> String {
    let mut s = String::from("trial,iteration,phi_a,phi_at,phi,residuals,aware_fraction,perimeter,alpha\n");
    for r in records {
        for x in &r.samples {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.trial,
                x.iteration,
                x.phi_a,
                x.phi_at,
                x.phi,
                x.residuals,
                x.aware_fraction,
                opt(x.perimeter),
                opt(x.alpha)
            );
        }
    }
    s
}

pub fn summary_csv(records: &[&TrialRecord]) -> String {
    let mut s = String::from("trial,seed,n,converged,iterations,aware_completion,final_perimeter,final_alpha,batches,mean_batch_duration,u_c_estimate\n");
    for r in records {
        let last = r.samples.last();
        let l = r.ledger.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.n,
            r.converged,
            r.iterations,
            opt(r.aware_completion),
            opt(last.and_then(|x| x.perimeter)),
            opt(last.and_then(|x| x.alpha)),
            opt(l.map(|l| l.batches)),
            opt(l.map(|l| l.mean_duration)),
            opt(l.map(|l| l.u_c_estimate))
        );
    }
    s
}

fn write(path: PathBuf, body: &str) -> Result<(), ScenarioError> {
    fs::write(&path, body).map_err(|source| ScenarioError::Io { path, source })
}

fn mkdir(path: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })
}

/// Writes metrics.csv, summary.csv, report.csv and per-trial extras.
pub fn write_outputs(sc: &Scenario, outputs: &[TrialOutput], dir: &Path) -> Result<(), ScenarioError> {
    mkdir(dir)?;
    let records: Vec<&TrialRecord> = outputs.iter().map(|o| &o.record).collect();
    write(dir.join("metrics.csv"), &metrics_csv(&records))?;
    write(dir.join("summary.csv"), &summary_csv(&records))?;
    let owned: Vec<TrialRecord> = records.iter().map(|r| (*r).clone()).collect();
    write(dir.join("report.csv"), &convergence_report(&owned).to_csv())?;
    if sc.mode == Mode::Lattice {
        mkdir(&dir.join("snapshots"))?;
    }
    for (i, o) in outputs.iter().enumerate() {
        for (name, json) in &o.snapshots {
            write(dir.join("snapshots").join(name), json)?;
        }
        if let Some(t) = &o.trace {
            mkdir(&dir.join("trace"))?;
            write(dir.join("trace").join(format!("trial{i:04}.jsonl")), t)?;
        }
        if let Some(r) = &o.recurrence {
            mkdir(&dir.join("recurrence"))?;
            write(dir.join("recurrence").join(format!("trial{i:04}.csv")), r)?;
        }
    }
    Ok(())
}
