//! Trajectory log: JSON Lines, one `Episode` object per line in goal order.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::EvalError;
use crate::orchestrator::Episode;

pub const TRAJECTORY_FILE: &str = "trajectories.jsonl";

pub fn episode_line(ep: &Episode) -> String {
    let mut s = serde_json::to_string(ep).expect("episode serializes");
    s.push('\n');
    s
}

/// Writes a fresh log at `path`.
pub fn write_trajectory_log(episodes: &[Episode], path: &Path) -> Result<(), EvalError> {
    let mut f = fs::File::create(path).map_err(|e| EvalError::io(path, e))?;
    for ep in episodes {
        f.write_all(episode_line(ep).as_bytes()).map_err(|e| EvalError::io(path, e))?;
    }
    f.flush().map_err(|e| EvalError::io(path, e))
}

/// Appends records to an existing log, creating it when missing.
pub fn append_trajectory_log(episodes: &[Episode], path: &Path) -> Result<(), EvalError> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| EvalError::io(path, e))?;
    for ep in episodes {
        f.write_all(episode_line(ep).as_bytes()).map_err(|e| EvalError::io(path, e))?;
    }
    f.flush().map_err(|e| EvalError::io(path, e))
}

pub fn read_trajectory_log(path: &Path) -> Result<Vec<Episode>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::Log {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
