//! Derivative-free minimization over measurement-tree angles: a full grid
//! scan followed by downhill-simplex refinement from the best grid points.
//!
//! Objectives take the flat parameter vector `[θ0, φ0, θ1, φ1, ..]` in
//! canonical node order and must be pure.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{fold_angles, MeasParams};

/// Initial simplex edge, in radians.
pub const SIMPLEX_EDGE: f64 = 0.1;
/// Extra restarts from a refined point while it keeps improving.
const MAX_RESTARTS: usize = 3;
const GRID_CHUNK: u64 = 1 << 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub grid_points_per_angle: usize,
    pub refine_starts: usize,
    pub simplex_max_iters: usize,
    pub simplex_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid_points_per_angle: 6,
            refine_starts: 4,
            simplex_max_iters: 400,
            simplex_tol: 1e-12,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points_per_angle < 2 {
            return Err(Error::Param("grid_points_per_angle must be at least 2".into()));
        }
        if self.refine_starts < 1 {
            return Err(Error::Param("refine_starts must be at least 1".into()));
        }
        if !(self.simplex_tol.is_finite() && self.simplex_tol >= 0.0) {
            return Err(Error::Param(format!("bad simplex_tol {}", self.simplex_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOutcome {
    pub best_value: f64,
    pub best_params: MeasParams,
    pub evaluations: u64,
    pub converged: bool,
    /// Best value seen on the grid, before refinement.
    pub grid_best: f64,
    pub restarts: usize,
    /// Best value so far after the grid and after each refinement.
    pub trace: Vec<f64>,
}

/// A grid point and its objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    /// Position in lexicographic grid order.
    pub index: u64,
    pub params: Vec<f64>,
    pub value: f64,
}

fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    key(a.value).total_cmp(&key(b.value)).then(a.index.cmp(&b.index))
}

/// θ values run over [0, π/2] with both ends; φ over [0, 2π) without 2π.
pub fn grid_axis(points: usize, is_theta: bool) -> Vec<f64> {
    (0..points)
        .map(|t| {
            if is_theta {
                FRAC_PI_2 * t as f64 / (points - 1) as f64
            } else {
                TAU * t as f64 / points as f64
            }
        })
        .collect()
}

/// Number of grid points for a tree over `measured` qubits.
pub fn grid_size(measured: usize, points: usize) -> Result<u64> {
    let n = MeasParams::scalar_count(measured) as u32;
    (points as u64)
        .checked_pow(n)
        .ok_or_else(|| Error::Param(format!("{points}^{n} grid points overflow")))
}

fn merge_top(mut a: Vec<Candidate>, b: Vec<Candidate>, keep: usize) -> Vec<Candidate> {
    a.extend(b);
    a.sort_by(rank);
    a.truncate(keep);
    a
}

/// Evaluates `objective` on every grid point and returns the best `keep`
/// candidates, ascending by value with ties broken by grid order.
///
/// Parameters vary lexicographically: the last scalar changes fastest.
/// The ranking does not depend on how the work is split across threads.
pub fn grid_scan<F>(objective: &F, measured: usize, config: &OptimizerConfig, keep: usize) -> Result<Vec<Candidate>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let g = config.grid_points_per_angle;
    let n = MeasParams::scalar_count(measured);
    let total = grid_size(measured, g)?;
    let theta = grid_axis(g, true);
    let phi = grid_axis(g, false);
    let keep = keep.max(1);
    let chunks = total.div_ceil(GRID_CHUNK);

    let top = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * GRID_CHUNK;
            let end = (start + GRID_CHUNK).min(total);
            let mut best: Vec<Candidate> = Vec::with_capacity(keep + 1);
            let mut params = vec![0.0; n];
            for index in start..end {
                let mut rest = index;
                for slot in (0..n).rev() {
                    let digit = (rest % g as u64) as usize;
                    rest /= g as u64;
                    params[slot] = if slot % 2 == 0 { theta[digit] } else { phi[digit] };
                }
                let value = objective(&params);
                let worse_than_all = best.len() == keep && key(value) >= key(best[keep - 1].value);
                if worse_than_all {
                    continue;
                }
                let cand = Candidate {
                    index,
                    params: params.clone(),
                    value,
                };
                let at = best.partition_point(|c| rank(c, &cand) == Ordering::Less);
                best.insert(at, cand);
                best.truncate(keep);
            }
            best
        })
        .reduce(Vec::new, |a, b| merge_top(a, b, keep));
    Ok(top)
}

fn fold_flat(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for pair in x.chunks_exact(2) {
        let (t, p) = fold_angles(pair[0], pair[1]);
        out.push(t);
        out.push(p);
    }
    out
}

fn measured_for(len: usize) -> Result<usize> {
    let nodes = len / 2 + 1;
    if !len.is_multiple_of(2) || len == 0 || !nodes.is_power_of_two() {
        return Err(Error::Param(format!("{len} scalars is not a qubit tree")));
    }
    Ok(nodes.trailing_zeros() as usize)
}

struct Refined {
    params: Vec<f64>,
    value: f64,
    evaluations: u64,
    converged: bool,
}

/// Downhill simplex from `start` with coefficients (1, 2, 0.5, 0.5).
///
/// The simplex moves in unbounded angle space; every point is folded into
/// θ ∈ [0, π/2], φ ∈ [0, 2π) before evaluation and the result is folded.
/// The initial edges have length [`SIMPLEX_EDGE`] with directions drawn
/// from `config.seed`. The returned value is never worse than the start.
pub fn simplex_refine<F>(objective: &F, start: &MeasParams, config: &OptimizerConfig) -> Result<OptimizerOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    let flat = start.to_flat();
    let measured = measured_for(flat.len())?;
    let r = nelder_mead(objective, &flat, config, config.seed);
    Ok(OptimizerOutcome {
        best_value: r.value,
        best_params: MeasParams::from_flat(measured, &r.params)?,
        evaluations: r.evaluations,
        converged: r.converged,
        grid_best: r.value,
        restarts: 0,
        trace: vec![r.value],
    })
}

fn nelder_mead<F>(objective: &F, start: &[f64], config: &OptimizerConfig, seed: u64) -> Refined
where
    F: Fn(&[f64]) -> f64,
{
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let n = start.len();
    let mut evaluations = 0u64;
    let mut f = |x: &[f64]| {
        evaluations += 1;
        key(objective(&fold_flat(x)))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut x = start.to_vec();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        x[i] += sign * SIMPLEX_EDGE;
        pts.push(x);
    }
    let mut vals: Vec<f64> = pts.iter().map(|x| f(x)).collect();
    let start_value = vals[0];

    let mut converged = false;
    for _ in 0..config.simplex_max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if vals[n] - vals[0] < config.simplex_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for x in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let toward = |t: f64, x: &[f64]| -> Vec<f64> { centroid.iter().zip(x).map(|(c, v)| c + t * (v - c)).collect() };

        let xr = toward(-ALPHA, &pts[n]);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = toward(-ALPHA * GAMMA, &pts[n]);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < vals[n] {
            let xc = toward(-ALPHA * RHO, &pts[n]);
            let fc = f(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = toward(RHO, &pts[n]);
            let fc = f(&xc);
            (xc, fc, fc < vals[n])
        };
        if accept {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        let best = pts[0].clone();
        for i in 1..=n {
            pts[i] = best.iter().zip(&pts[i]).map(|(b, v)| b + SIGMA * (v - b)).collect();
            vals[i] = f(&pts[i]);
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    let (params, value) = if vals[best] <= start_value {
        (fold_flat(&pts[best]), vals[best])
    } else {
        (fold_flat(start), start_value)
    };
    Refined {
        params,
        value,
        evaluations,
        converged,
    }
}

fn refine_with_restarts<F>(objective: &F, start: &[f64], config: &OptimizerConfig, seed: u64) -> (Refined, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let mut r = nelder_mead(objective, start, config, seed);
    let mut restarts = 0;
    while restarts < MAX_RESTARTS {
        let next = nelder_mead(objective, &r.params, config, seed.wrapping_add(restarts as u64 + 1));
        restarts += 1;
        let improved = next.value < r.value - config.simplex_tol;
        let evaluations = r.evaluations + next.evaluations;
        if next.value <= r.value {
            r = Refined { evaluations, ..next };
        } else {
            r.evaluations = evaluations;
        }
        if !improved {
            break;
        }
    }
    (r, restarts)
}

/// Grid scan, then simplex refinement from the `refine_starts` best grid
/// points (each restarted from its own result while it keeps improving).
/// Deterministic for a fixed objective and config.
pub fn optimize<F>(objective: &F, measured: usize, config: &OptimizerConfig) -> Result<OptimizerOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let starts = grid_scan(objective, measured, config, config.refine_starts)?;
    let grid_evals = grid_size(measured, config.grid_points_per_angle)?;
    let grid_best = starts[0].value;

    let refined: Vec<(Refined, usize)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, c)| refine_with_restarts(objective, &c.params, config, config.seed.wrapping_add(1000 * i as u64)))
        .collect();

    let mut trace = vec![grid_best];
    let mut best = 0;
    for (i, (r, _)) in refined.iter().enumerate() {
        if key(r.value) < key(refined[best].0.value) {
            best = i;
        }
        trace.push(key(refined[best].0.value).min(key(grid_best)));
    }
    let evaluations = grid_evals + refined.iter().map(|(r, _)| r.evaluations).sum::<u64>();
    let restarts = refined.iter().map(|(_, k)| k).sum();
    let (winner, _) = &refined[best];
    Ok(OptimizerOutcome {
        best_value: winner.value,
        best_params: MeasParams::from_flat(measured, &winner.params)?,
        evaluations,
        converged: winner.converged,
        grid_best,
        restarts,
        trace,
    })
}
