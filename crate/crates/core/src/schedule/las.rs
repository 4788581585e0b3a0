use std::cmp::Ordering;

use super::{Algorithm, CandidateSet, LasConfig, Schedule};
use crate::error::{Error, Result};

/// Costs within this relative distance count as equal; the smaller index wins.
const TIE_REL: f64 = 1e-12;

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_REL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Surrogate objective of an index sequence, recomputed from scratch.
pub fn schedule_objective(cands: &CandidateSet, indices: &[usize], lambda: f64, alpha: f64) -> f64 {
    let eta = cands.etas(lambda);
    let ell = cands.log_gammas();
    let risks = cands.risks();
    let base: f64 = indices.windows(2).map(|w| (eta[w[1]] - eta[w[0]]) * risks[w[0]]).sum();
    let smooth: f64 = indices
        .windows(3)
        .map(|w| {
            let d = (ell[w[2]] - ell[w[1]]) - (ell[w[1]] - ell[w[0]]);
            d * d
        })
        .sum();
    if alpha == 0.0 {
        base
    } else {
        base + alpha * smooth
    }
}

fn finish(
    cands: &CandidateSet,
    cfg: &LasConfig,
    indices: Vec<usize>,
    algorithm: Algorithm,
    tie_breaks: usize,
) -> Schedule {
    let alpha = if algorithm == Algorithm::Exact { 0.0 } else { cfg.alpha };
    Schedule {
        gammas: indices.iter().map(|&i| cands.gammas()[i]).collect(),
        objective: schedule_objective(cands, &indices, cfg.lambda, alpha),
        indices,
        steps: cfg.steps,
        lambda: cfg.lambda,
        alpha,
        algorithm,
        tie_breaks,
    }
}

/// Exact first-order DP (`α = 0`) in `O(K n²)`.
///
/// `dp[k][j]` is the cheapest cost of reaching candidate `j` in exactly `k`
/// transitions from candidate 0; the last transition always lands on the
/// final candidate. Equal costs resolve to the smallest predecessor.
pub fn las_exact(cands: &CandidateSet, cfg: &LasConfig) -> Result<Schedule> {
    let n = cands.len();
    cfg.validate(n)?;
    if cfg.alpha != 0.0 {
        return Err(Error::InvalidConfig("las_exact requires alpha = 0".into()));
    }
    let k_steps = cfg.steps;
    let end = n - 1;
    if k_steps == 1 {
        return Ok(finish(cands, cfg, vec![0, end], Algorithm::Exact, 0));
    }
    let eta = cands.etas(cfg.lambda);
    let risk = cands.risks();
    let mut tie_breaks = 0;

    // Row k − 1 holds dp[k]; rows are filled for k = 1..K−1.
    let mut dp = vec![vec![f64::INFINITY; n]; k_steps];
    let mut par = vec![vec![usize::MAX; n]; k_steps];
    for j in 1..=end - (k_steps - 1) {
        dp[0][j] = (eta[j] - eta[0]) * risk[0];
        par[0][j] = 0;
    }
    for k in 2..k_steps {
        let max_j = end - (k_steps - k);
        for j in k..=max_j {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for i in (k - 1)..j {
                let prev = dp[k - 2][i];
                if !prev.is_finite() {
                    continue;
                }
                let c = prev + (eta[j] - eta[i]) * risk[i];
                if arg != usize::MAX && ties(c, best) {
                    tie_breaks += 1;
                } else if c < best {
                    best = c;
                    arg = i;
                }
            }
            dp[k - 1][j] = best;
            par[k - 1][j] = arg;
        }
    }

    let mut best = f64::INFINITY;
    let mut arg = usize::MAX;
    for i in (k_steps - 1)..end {
        let prev = dp[k_steps - 2][i];
        if !prev.is_finite() {
            continue;
        }
        let c = prev + (eta[end] - eta[i]) * risk[i];
        if arg != usize::MAX && ties(c, best) {
            tie_breaks += 1;
        } else if c < best {
            best = c;
            arg = i;
        }
    }

    let mut indices = vec![0; k_steps + 1];
    indices[k_steps] = end;
    indices[k_steps - 1] = arg;
    for k in (1..k_steps - 1).rev() {
        indices[k] = par[k][indices[k + 1]];
    }
    indices[0] = 0;
    debug_assert_eq!(par[0][indices[1]], 0);
    Ok(finish(cands, cfg, indices, Algorithm::Exact, tie_breaks))
}

#[derive(Debug, Clone, Copy)]
struct BeamState {
    a: usize,
    b: usize,
    cost: f64,
    /// Position of the parent state in the previous stage's list for `a`.
    parent: usize,
}

/// Beam-and-window DP for `α > 0`.
///
/// A state `(a, b, cost)` remembers the last two indices. From each state
/// the next index is searched in a window of radius `W` around the first
/// candidate whose log-SNR reaches `2ℓ_b − ℓ_a` (constant log-ratio
/// continuation), plus `E` evenly spaced global candidates. Each endpoint
/// keeps its `B` cheapest states.
pub fn las_beam(cands: &CandidateSet, cfg: &LasConfig) -> Result<Schedule> {
    let n = cands.len();
    cfg.validate(n)?;
    let k_steps = cfg.steps;
    let end = n - 1;
    if k_steps == 1 {
        return Ok(finish(cands, cfg, vec![0, end], Algorithm::Beam, 0));
    }
    let eta = cands.etas(cfg.lambda);
    let ell = cands.log_gammas();
    let risk = cands.risks();
    let alpha = cfg.alpha;
    let mut tie_breaks = 0;

    let extras: Vec<usize> = (1..=cfg.extra).map(|e| e * end / (cfg.extra + 1)).collect();

    // stages[k − 1][b] = S_k(b)
    let mut stages: Vec<Vec<Vec<BeamState>>> = Vec::with_capacity(k_steps - 1);
    let mut first = vec![Vec::new(); n];
    for (b, slot) in first.iter_mut().enumerate().take(end - (k_steps - 1) + 1).skip(1) {
        slot.push(BeamState {
            a: 0,
            b,
            cost: (eta[b] - eta[0]) * risk[0],
            parent: 0,
        });
    }
    stages.push(first);

    let mut window = Vec::new();
    for k in 2..k_steps {
        let max_idx = end - (k_steps - k);
        let prev = &stages[k - 2];
        let mut next: Vec<Vec<BeamState>> = vec![Vec::new(); n];
        for (b, states) in prev.iter().enumerate() {
            for (pos, st) in states.iter().enumerate() {
                let pred = 2.0 * ell[b] - ell[st.a];
                let j = ell.partition_point(|l| *l < pred).min(n);
                let j = if j == n { max_idx } else { j };
                let lo = (b + 1).max(j.saturating_sub(cfg.window));
                let hi = max_idx.min(j + cfg.window);
                window.clear();
                window.extend(lo..=hi);
                for &e in &extras {
                    if e > b && e <= max_idx && !(lo..=hi).contains(&e) {
                        window.push(e);
                    }
                }
                for &c in &window {
                    let step = (ell[c] - ell[b]) - (ell[b] - ell[st.a]);
                    let cost = st.cost + (eta[c] - eta[b]) * risk[b] + alpha * step * step;
                    next[c].push(BeamState {
                        a: b,
                        b: c,
                        cost,
                        parent: pos,
                    });
                }
            }
        }
        for states in next.iter_mut() {
            states.sort_by(|x, y| match x.cost.total_cmp(&y.cost) {
                Ordering::Equal => x.a.cmp(&y.a),
                o => o,
            });
            states.truncate(cfg.beam);
        }
        if next.iter().all(Vec::is_empty) {
            return Err(Error::SearchExhausted { stage: k });
        }
        stages.push(next);
    }

    let last = &stages[k_steps - 2];
    let mut best = f64::INFINITY;
    let mut pick: Option<(usize, usize)> = None;
    for (b, states) in last.iter().enumerate() {
        for (pos, st) in states.iter().enumerate() {
            let step = (ell[end] - ell[b]) - (ell[b] - ell[st.a]);
            let c = st.cost + (eta[end] - eta[b]) * risk[b] + alpha * step * step;
            if pick.is_some() && ties(c, best) {
                tie_breaks += 1;
            } else if c < best {
                best = c;
                pick = Some((b, pos));
            }
        }
    }
    let (mut b, mut pos) = pick.ok_or(Error::SearchExhausted { stage: k_steps })?;

    let mut indices = vec![0; k_steps + 1];
    indices[k_steps] = end;
    for k in (1..k_steps).rev() {
        let st = stages[k - 1][b][pos];
        indices[k] = st.b;
        indices[k - 1] = st.a;
        b = st.a;
        pos = st.parent;
    }
    Ok(finish(cands, cfg, indices, Algorithm::Beam, tie_breaks))
}

/// Exact DP when `α = 0`, beam DP otherwise.
pub fn las(cands: &CandidateSet, cfg: &LasConfig) -> Result<Schedule> {
    if cfg.alpha == 0.0 {
        las_exact(cands, cfg)
    } else {
        las_beam(cands, cfg)
    }
}
