//! Plain timestep lists (`999,746,…,0`, noisy → clean) for interop.

use crate::error::{Error, Result};

/// Parses a comma-separated, strictly decreasing timestep list. Surrounding
/// brackets and whitespace are ignored. `K` is the list length minus one.
pub fn parse_timesteps(text: &str) -> Result<Vec<u32>> {
    let body = text.trim().trim_start_matches('[').trim_end_matches(']');
    let steps = body
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("timestep `{}`: {e}", s.trim())))
        })
        .collect::<Result<Vec<u32>>>()?;
    if steps.len() < 2 {
        return Err(Error::Parse("a timestep list needs at least two entries".into()));
    }
    if steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parse("timesteps must strictly decrease".into()));
    }
    Ok(steps)
}

pub fn emit_timesteps(steps: &[u32]) -> String {
    steps.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}
