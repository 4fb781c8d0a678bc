//! Monte-Carlo harness for the drift bound on absorption time.

use crate::rng::SimRng;

/// Dominating chain: step down with probability `1/n`, up with `eta/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftChainSpec {
    pub eta: f64,
    pub n: f64,
    pub x0: u64,
}

/// Closed form `x0 * n / (1 - eta)`.
pub fn drift_expected(spec: &DriftChainSpec) -> f64 {
    spec.x0 as f64 * spec.n / (1.0 - spec.eta)
}

/// Empirical mean hitting time of 0 over `trials` runs.
pub fn drift_absorption_trials(spec: &DriftChainSpec, trials: u64, rng: &mut SimRng) -> f64 {
    assert!(trials >= 1 && spec.n >= 1.0 && (0.0..1.0).contains(&spec.eta));
    let down = 1.0 / spec.n;
    let up = down + spec.eta / spec.n;
    let mut total = 0u64;
    for _ in 0..trials {
        let mut x = spec.x0;
        let mut t = 0u64;
        while x > 0 {
            let u = rng.unit();
            t += 1;
            if u < down {
                x -= 1;
            } else if u < up {
                x += 1;
            }
        }
        total += t;
    }
    total as f64 / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_single_step() {
        let s = DriftChainSpec { eta: 0.0, n: 1.0, x0: 1 };
        assert_eq!(drift_absorption_trials(&s, 100, &mut SimRng::new(1)), 1.0);
        assert_eq!(drift_expected(&s), 1.0);
    }

    #[test]
    fn closed_forms() {
        assert!((drift_expected(&DriftChainSpec { eta: 0.5, n: 10.0, x0: 5 }) - 100.0).abs() < 1e-9);
        assert!((drift_expected(&DriftChainSpec { eta: 0.9, n: 20.0, x0: 3 }) - 600.0).abs() < 1e-9);
    }
}
