//! Ergodicity certificates: any hole-free-reachable connected configuration
//! with one pinned agent reduces to a straight line by valid moves, and the
//! reversed move list leads back.

mod certificate;
mod config;
mod frame;
mod planner;
mod spine;

pub use certificate::{verify_certificate, CertMove, MoveCertificate};
pub use config::{ConfigSnapshot, PlaneConfig};
pub use frame::{lane_depth, Frame};
pub use planner::{ring_sites, PlanStats, Planner};
pub use spine::{on_spine, SpineInfo};

use crate::error::ErgodicityError;
use crate::lattice::Site;

fn certificate_from(initial: &PlaneConfig, moves: &[(Site, Site)], fin: &PlaneConfig) -> MoveCertificate {
    MoveCertificate {
        initial: initial.snapshot(),
        moves: moves.iter().map(|(a, b)| CertMove { from: a.to_pair(), to: b.to_pair() }).collect(),
        final_config: fin.snapshot(),
    }
}

/// Certificate taking `initial` to a straight line, pointing in `direction`
/// when given.
pub fn reduce_to_line(initial: &PlaneConfig, direction: Option<usize>) -> Result<(MoveCertificate, PlanStats), ErgodicityError> {
    let mut planner = Planner::new(initial.clone());
    planner.reduce_to_line()?;
    if let Some(d) = direction {
        planner.reorient(d % 6)?;
    }
    let (fin, moves, stats) = planner.into_parts();
    Ok((certificate_from(initial, &moves, &fin), stats))
}

/// Certificate taking `a` to `b` through a common line: reduce both, align
/// the lines, then append the reversal of `b`'s reduction.
pub fn connect(a: &PlaneConfig, b: &PlaneConfig) -> Result<MoveCertificate, ErgodicityError> {
    if a.pinned() != b.pinned() || a.len() != b.len() {
        return Err(ErgodicityError::ImmobileCount(usize::from(a.pinned() != b.pinned())));
    }
    let (to_b, _) = reduce_to_line(b, None)?;
    let dir = PlaneConfig::from_snapshot(&to_b.final_config)?.line_direction().flatten();
    let (from_a, _) = reduce_to_line(a, dir)?;
    let mut moves = from_a.moves;
    moves.extend(to_b.moves.iter().rev().map(|m| CertMove { from: m.to, to: m.from }));
    Ok(MoveCertificate { initial: a.snapshot(), moves, final_config: b.snapshot() })
}
