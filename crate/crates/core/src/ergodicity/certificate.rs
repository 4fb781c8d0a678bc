//! Move certificates and their independent replay.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::CertificateError;
use crate::lattice::moves::compression_move_valid;
use crate::lattice::Site;

use super::config::ConfigSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertMove {
    pub from: [i32; 2],
    pub to: [i32; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveCertificate {
    pub initial: ConfigSnapshot,
    pub moves: Vec<CertMove>,
    #[serde(rename = "final")]
    pub final_config: ConfigSnapshot,
}

/// Replays every move from scratch; relies only on the move-validity rule.
pub fn verify_certificate(cert: &MoveCertificate) -> Result<(), CertificateError> {
    let pinned = Site::from(cert.initial.pinned);
    let mut occ: HashSet<Site> = HashSet::new();
    for &a in &cert.initial.agents {
        if !occ.insert(Site::from(a)) {
            return Err(CertificateError::BadInitial(format!("duplicate site {a:?}")));
        }
    }
    if !occ.contains(&pinned) {
        return Err(CertificateError::BadInitial("pinned site not occupied".into()));
    }
    for (index, m) in cert.moves.iter().enumerate() {
        let (from, to) = (Site::from(m.from), Site::from(m.to));
        let fail = |reason: &str| CertificateError::InvalidMove { index, reason: reason.to_string() };
        if from == pinned {
            return Err(fail("pinned agent moved"));
        }
        if !occ.contains(&from) {
            return Err(fail("no agent at source"));
        }
        if occ.contains(&to) {
            return Err(fail("target occupied"));
        }
        let Some(d) = from.direction_to(to) else { return Err(fail("sites not adjacent")) };
        if !compression_move_valid(|s| occ.contains(&s), from, d) {
            return Err(fail("move violates the local connectivity rule"));
        }
        occ.remove(&from);
        occ.insert(to);
    }
    let fin: HashSet<Site> = cert.final_config.agents.iter().map(|&a| Site::from(a)).collect();
    if fin != occ || cert.final_config.pinned != cert.initial.pinned || fin.len() != cert.final_config.agents.len() {
        return Err(CertificateError::FinalMismatch);
    }
    Ok(())
}
