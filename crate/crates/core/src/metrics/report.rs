//! Per-trial records and cross-trial convergence summaries.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::{Batch, LedgerSummary};

/// One metric sample of a trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub iteration: u64,
    pub phi_a: usize,
    pub phi_at: usize,
    pub phi: usize,
    pub residuals: usize,
    pub aware_fraction: f64,
    pub perimeter: Option<u32>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub n: usize,
    pub converged: bool,
    pub iterations: u64,
    /// First iteration at which every agent was Aware.
    pub aware_completion: Option<u64>,
    pub samples: Vec<Sample>,
    pub ledger: Option<LedgerSummary>,
    #[serde(skip)]
    pub batches: Vec<Batch>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub trials: usize,
    pub converged: usize,
    pub mean: f64,
    pub median: f64,
    pub max: u64,
    pub mean_batch_duration: Option<f64>,
    pub u_c_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of ln(mean) against ln(n); needs two sizes.
    pub slope: Option<f64>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,trials,converged,mean,median,max,mean_batch_duration,u_c_estimate\n");
        let opt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.n,
                r.trials,
                r.converged,
                r.mean,
                r.median,
                r.max,
                opt(r.mean_batch_duration),
                opt(r.u_c_estimate)
            ));
        }
        if let Some(sl) = self.slope {
            s.push_str(&format!("# slope,{sl}\n"));
        }
        s
    }
}

pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Groups trials by `n`; statistics use the iteration counts of all trials.
pub fn convergence_report(trials: &[TrialRecord]) -> ConvergenceReport {
    let mut by_n: BTreeMap<usize, Vec<&TrialRecord>> = BTreeMap::new();
    for t in trials {
        by_n.entry(t.n).or_default().push(t);
    }
    let rows: Vec<ConvergenceRow> = by_n
        .into_iter()
        .map(|(n, ts)| {
            let mut its: Vec<u64> = ts.iter().map(|t| t.iterations).collect();
            its.sort_unstable();
            let k = its.len();
            let median = if k % 2 == 1 { its[k / 2] as f64 } else { (its[k / 2 - 1] + its[k / 2]) as f64 / 2.0 };
            let ledgers: Vec<_> = ts.iter().filter_map(|t| t.ledger).collect();
            let lmean = |f: &dyn Fn(&LedgerSummary) -> f64| {
                (!ledgers.is_empty()).then(|| ledgers.iter().map(f).sum::<f64>() / ledgers.len() as f64)
            };
            ConvergenceRow {
                n,
                trials: k,
                converged: ts.iter().filter(|t| t.converged).count(),
                mean: its.iter().sum::<u64>() as f64 / k as f64,
                median,
                max: *its.last().unwrap(),
                mean_batch_duration: lmean(&|l| l.mean_duration),
                u_c_estimate: lmean(&|l| l.u_c_estimate),
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.mean > 0.0).map(|r| (r.n as f64, r.mean)).collect();
    let slope = if rows.len() >= 2 { fit_loglog_slope(&pts) } else { None };
    ConvergenceReport { rows, slope }
}
