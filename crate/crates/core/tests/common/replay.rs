use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use stimuli_core::scenario::{run_scenario, write_outputs, RunOptions, Scenario};

pub fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Runs `sc` twice (different thread counts) and compares every output byte.
pub fn replay_identical(sc: &Scenario) -> bool {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run_scenario(sc, &RunOptions { jobs: 1, trace: true }).unwrap();
    let ob = run_scenario(sc, &RunOptions { jobs: 3, trace: true }).unwrap();
    write_outputs(sc, &oa, a.path()).unwrap();
    write_outputs(sc, &ob, b.path()).unwrap();
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    !ta.is_empty() && ta == tb
}
