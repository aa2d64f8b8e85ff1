//! Brute-force reference computations and the self-check suite.
//!
//! The objective here is written from scratch on full density matrices:
//! measured states are formed as Σ P ρ P with Kronecker-product
//! projectors and every entropy comes from an explicit partial trace. It
//! shares only the `qstate` primitives with the fast evaluator in
//! [`crate::discord`].

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discord::{self, Objective};
use crate::entropy_flux;
use crate::error::{Error, Result};
use crate::measure::{apply_tree, optimal_tree_for_measured_state, tree_from_params, MeasParams, MeasurementTree};
use crate::optimizer::OptimizerConfig;
use crate::qstate::{matrix_entropy, partial_trace_raw, CMatrix, CVector, QState, SubsetSpec, C64};

pub const IDENTITY_TOL: f64 = 1e-9;
pub const AGREEMENT_TOL: f64 = 1e-10;
pub const INVARIANCE_TOL: f64 = 1e-10;
pub const EQUIVALENCE_TOL: f64 = 1e-5;
pub const ZERO_DISCORD_TOL: f64 = 1e-6;

fn kets(theta: f64, phi: f64) -> [CVector; 2] {
    let e = C64::new(phi.cos(), phi.sin());
    let (s, c) = (theta.sin(), theta.cos());
    [
        CVector::from_vec(vec![C64::new(c, 0.0), e * s]),
        CVector::from_vec(vec![C64::new(s, 0.0), -e * c]),
    ]
}

/// I ⊗ .. ⊗ |v⟩⟨v| ⊗ .. ⊗ I with the projector on `site`.
fn embed(dims: &[usize], site: usize, v: &CVector) -> CMatrix {
    let before: usize = dims[..site].iter().product();
    let after: usize = dims[site + 1..].iter().product();
    let p = v * v.adjoint();
    CMatrix::identity(before, before)
        .kronecker(&p)
        .kronecker(&CMatrix::identity(after, after))
}

fn entropy_on(dims: &[usize], m: &CMatrix, keep: &[usize]) -> f64 {
    if keep.is_empty() {
        return 0.0;
    }
    if keep.len() == dims.len() {
        return matrix_entropy(m);
    }
    matrix_entropy(&partial_trace_raw(m, dims, keep))
}

fn node_index(path: &[usize]) -> usize {
    let k = path.len();
    let bits = path.iter().fold(0usize, |acc, &b| acc * 2 + b);
    (1usize << k) - 1 + bits
}

/// Σ over outcome paths of length `depth` of P ρ P, with the angles of the
/// node reached by each path prefix.
fn measure_prefix(rho: &CMatrix, dims: &[usize], params: &[f64], depth: usize) -> CMatrix {
    let side = rho.nrows();
    let mut total = CMatrix::zeros(side, side);
    for bits in 0..(1usize << depth) {
        let path: Vec<usize> = (0..depth).map(|k| (bits >> (depth - 1 - k)) & 1).collect();
        let mut proj = CMatrix::identity(side, side);
        for k in 0..depth {
            let node = node_index(&path[..k]);
            let v = &kets(params[2 * node], params[2 * node + 1])[path[k]];
            proj *= embed(dims, k, v);
        }
        total += &proj * rho * &proj;
    }
    total
}

fn require_qubits(state: &QState, measured: usize) -> Result<()> {
    let dims = state.dims();
    if measured == 0 || measured > dims.len() || dims[..measured].iter().any(|&d| d != 2) {
        return Err(Error::Structure(format!(
            "cannot measure the first {measured} subsystems of dims {dims:?} as qubits"
        )));
    }
    Ok(())
}

/// Reference value of the multi-party objective at flat angles, the
/// leading `measured` subsystems measured and the rest forming the last
/// party.
pub fn oracle_objective(state: &QState, measured: usize, params: &[f64]) -> Result<f64> {
    require_qubits(state, measured)?;
    let dims = state.dims();
    let n = dims.len();
    if measured >= n || params.len() != MeasParams::scalar_count(measured) {
        return Err(Error::Param(format!(
            "{} angles for {measured} measured of {n} subsystems",
            params.len()
        )));
    }
    let rho = state.matrix();
    let all: Vec<usize> = (0..n).collect();
    let mut value = -(entropy_on(dims, rho, &all) - entropy_on(dims, rho, &[0]));
    for k in 1..=measured {
        let sigma = measure_prefix(rho, dims, params, k);
        let upper: Vec<usize> = if k == measured { all.clone() } else { (0..=k).collect() };
        let lower: Vec<usize> = (0..k).collect();
        value += entropy_on(dims, &sigma, &upper) - entropy_on(dims, &sigma, &lower);
    }
    Ok(value)
}

/// Reference value of the two-measurement bipartite objective.
pub fn oracle_two_meas(state: &QState, params: &[f64]) -> Result<f64> {
    if state.n_subsystems() != 2 || params.len() != 6 {
        return Err(Error::Param("two-measurement form needs 2 qubits and 6 angles".into()));
    }
    require_qubits(state, 2)?;
    let dims = state.dims();
    let rho = state.matrix();
    let sigma = measure_prefix(rho, dims, params, 2);
    let cond = |m: &CMatrix| entropy_on(dims, m, &[0, 1]) - entropy_on(dims, m, &[0]);
    Ok(cond(&sigma) - cond(rho))
}

/// The same state with every subsystem from position `level − 1` on merged
/// into one.
fn group_tail(state: &QState, level: usize) -> Result<QState> {
    let n = state.n_subsystems();
    if level < 2 || level > n {
        return Err(Error::Param(format!("level {level} outside 2..={n}")));
    }
    let mut dims = state.dims()[..level - 1].to_vec();
    dims.push(state.dims()[level - 1..].iter().product());
    QState::new(dims, state.matrix().clone())
}

fn axes(points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if points < 2 {
        return Err(Error::Param("need at least 2 points per angle".into()));
    }
    let theta = (0..points)
        .map(|t| t as f64 * FRAC_PI_2 / (points - 1) as f64)
        .collect();
    let phi = (0..points).map(|t| t as f64 * TAU / points as f64).collect();
    Ok((theta, phi))
}

/// Exact minimum of the `level`-party objective over the angle grid
/// (θ on [0, π/2] with both ends, φ on [0, 2π) without 2π, `points` each).
///
/// Subtrees of different outcomes are independent, so the grid minimum is
/// taken node by node: each child subtree is minimized for every choice of
/// its parent's angles.
pub fn dense_grid_min(state: &QState, level: usize, points: usize) -> Result<f64> {
    let s = group_tail(state, level)?;
    let measured = level - 1;
    require_qubits(&s, measured)?;
    let (theta, phi) = axes(points)?;
    let dims = s.dims().to_vec();
    let rho = s.matrix();
    let all: Vec<usize> = (0..dims.len()).collect();
    let constant = -(entropy_on(&dims, rho, &all) - entropy_on(&dims, rho, &[0]));
    let angles: Vec<(f64, f64)> = theta.iter().flat_map(|&t| phi.iter().map(move |&p| (t, p))).collect();
    Ok(constant + subtree_min(rho, &dims, measured, &angles))
}

/// min over the grid of Σ_j p_j (S_j + best subtree below j) for the
/// normalized conditional state `sigma` on `dims`.
fn subtree_min(sigma: &CMatrix, dims: &[usize], levels: usize, angles: &[(f64, f64)]) -> f64 {
    let keep: Vec<usize> = (1..dims.len()).collect();
    let child_dims = &dims[1..];
    let evaluate = |&(t, p): &(f64, f64)| -> f64 {
        let mut total = 0.0;
        for v in kets(t, p) {
            let proj = embed(dims, 0, &v);
            let branch = partial_trace_raw(&(&proj * sigma * &proj), dims, &keep);
            let prob = branch.trace().re;
            if prob < 1e-12 {
                continue;
            }
            let normalized = branch.unscale(prob);
            if levels == 1 {
                total += prob * matrix_entropy(&normalized);
            } else {
                total += prob * entropy_on(child_dims, &normalized, &[0]);
                total += prob * subtree_min(&normalized, child_dims, levels - 1, angles);
            }
        }
        total
    };
    if levels > 1 && sigma.nrows() > 8 {
        angles.par_iter().map(evaluate).reduce(|| f64::INFINITY, f64::min)
    } else {
        angles.iter().map(evaluate).fold(f64::INFINITY, f64::min)
    }
}

/// Minimum of [`oracle_objective`] over every point of the flat angle grid.
/// Exponential in the number of angles; for cross-checking small grids.
pub fn brute_force_grid_min(state: &QState, level: usize, points: usize) -> Result<f64> {
    let s = group_tail(state, level)?;
    let measured = level - 1;
    let (theta, phi) = axes(points)?;
    let n = MeasParams::scalar_count(measured);
    let total = (points as u64).pow(n as u32);
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; n];
    for index in 0..total {
        let mut rest = index;
        for slot in (0..n).rev() {
            let digit = (rest % points as u64) as usize;
            rest /= points as u64;
            x[slot] = if slot % 2 == 0 { theta[digit] } else { phi[digit] };
        }
        best = best.min(oracle_objective(&s, measured, &x)?);
    }
    Ok(best)
}

/// max |ρ − Σ P ρ P| entrywise, over the tree's full depth.
pub fn invariance_residual(state: &QState, tree: &MeasurementTree) -> Result<f64> {
    let measured = apply_tree(state, tree, tree.depth())?;
    Ok(state.max_abs_diff(&measured.post_state))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub check: String,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerifyReport {
    fn new(check: &str, violations: &[f64], tolerance: f64) -> Self {
        let max_violation = violations
            .iter()
            .map(|v| if v.is_nan() { f64::INFINITY } else { *v })
            .fold(0.0, f64::max);
        Self {
            check: check.to_string(),
            samples: violations.len(),
            max_violation,
            tolerance,
            pass: max_violation < tolerance,
        }
    }
}

/// A deliberate defect for exercising the failure path of the suite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Flips the sign of the monogamy term in the d-sum identity.
    FlipMonogamySign,
}

/// Reproducible random 3-qubit states and trees for sample `i`.
struct Sampler {
    seed: u64,
}

impl Sampler {
    fn rng(&self, i: usize, salt: u64) -> ChaCha8Rng {
        let mixed = self
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((i as u64) << 8)
            .wrapping_add(salt);
        ChaCha8Rng::seed_from_u64(mixed)
    }

    fn state(&self, dims: &[usize], i: usize, salt: u64) -> QState {
        let mut rng = self.rng(i, salt);
        let side: usize = dims.iter().product();
        let rank = rng.random_range(1..=side);
        QState::random(dims, rank, rng.random()).expect("valid dims")
    }

    fn params(&self, measured: usize, i: usize, salt: u64) -> MeasParams {
        let mut rng = self.rng(i, salt ^ 0xABCD);
        let flat: Vec<f64> = (0..MeasParams::scalar_count(measured))
            .map(|k| {
                if k % 2 == 0 {
                    rng.random_range(0.0..FRAC_PI_2)
                } else {
                    rng.random_range(0.0..TAU)
                }
            })
            .collect();
        MeasParams::from_flat(measured, &flat).expect("count matches")
    }

    fn tree(&self, dims: &[usize], measured: usize, i: usize, salt: u64) -> MeasurementTree {
        let p = self.params(measured, i, salt);
        tree_from_params(dims, &SubsetSpec::range(0, measured).expect("non-empty"), &p).expect("qubit tree")
    }
}

fn collect<F>(samples: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    (0..samples).into_par_iter().map(f).collect()
}

fn subset(i: &[usize]) -> SubsetSpec {
    SubsetSpec::of(i).expect("non-empty")
}

/// Entropy identities on random 3-qubit states and random trees:
/// the measured conditional entropy against the post-measurement form
/// (one and two measurements), the d-sum identity, the four-term
/// decomposition of the objective, and the post-measurement conditional
/// discord as a conditional-entropy change.
pub fn identity_suite(seed: u64, samples: usize) -> Result<Vec<VerifyReport>> {
    identity_suite_with(seed, samples, Fault::None)
}

pub fn identity_suite_with(seed: u64, samples: usize, fault: Fault) -> Result<Vec<VerifyReport>> {
    let sm = Sampler { seed };
    let dims = [2, 2, 2];
    let case = |i: usize| (sm.state(&dims, i, 1), sm.tree(&dims, 2, i, 1));
    // Reference measured states from the same angles the tree was built from.
    let raw = |rho: &QState, i: usize, depth: usize| -> Result<CMatrix> {
        let p = sm.params(2, i, 1).to_flat();
        Ok(measure_prefix(rho.matrix(), &dims, &p, depth))
    };

    let one_meas = collect(samples, |i| {
        let (s, t) = case(i);
        let lib = entropy_flux::measured_cond_entropy(&s, &t, 1, &subset(&[1]))?;
        let m = raw(&s, i, 1)?;
        Ok((lib - (entropy_on(&dims, &m, &[0, 1]) - entropy_on(&dims, &m, &[0]))).abs())
    })?;
    let two_meas = collect(samples, |i| {
        let (s, t) = case(i);
        let lib = entropy_flux::measured_cond_entropy(&s, &t, 2, &subset(&[2]))?;
        let m = raw(&s, i, 2)?;
        let measured_b = entropy_on(&dims, &m, &[0, 1]) - entropy_on(&dims, &m, &[0]);
        let rhs = entropy_on(&dims, &m, &[0, 1, 2]) - entropy_on(&dims, &m, &[0]) - measured_b;
        Ok((lib - rhs).abs())
    })?;
    let d_sum = collect(samples, |i| {
        let (s, t) = case(i);
        let d = entropy_flux::d_unminimized(&s, &t, &subset(&[0]), &subset(&[1, 2]))?;
        let (ab_c, ac_b) = entropy_flux::delta_cond_discord(&s, &t)?;
        let mut mono = entropy_flux::delta_monogamy(&s, &t)?;
        if fault == Fault::FlipMonogamySign {
            mono = -mono;
        }
        Ok((d - (ab_c + ac_b + mono)).abs())
    })?;
    let split = collect(samples, |i| {
        let (s, t) = case(i);
        let objective = discord::objective_tripartite(&s, &t)?;
        Ok((objective - entropy_flux::decomposition(&s, &t)?.total()).abs())
    })?;
    let post = collect(samples, |i| {
        let (s, t) = case(i);
        let lib = entropy_flux::delta_post_discord(&s, &t)?;
        let (m1, m2) = (raw(&s, i, 1)?, raw(&s, i, 2)?);
        let c_ab = |m: &CMatrix| entropy_on(&dims, m, &[0, 1, 2]) - entropy_on(&dims, m, &[0, 1]);
        Ok((lib - (c_ab(&m2) - c_ab(&m1))).abs())
    })?;
    let flux = collect(samples, |i| {
        let (s, t) = case(i);
        match entropy_flux::flux_report(&s, &t) {
            Ok(_) => Ok(0.0),
            Err(Error::Identity { violation, .. }) => Ok(violation),
            Err(e) => Err(e),
        }
    })?;

    let mut out = vec![
        VerifyReport::new("measured_cond_entropy", &one_meas, IDENTITY_TOL),
        VerifyReport::new("second_measurement", &two_meas, IDENTITY_TOL),
        VerifyReport::new("discord_sum", &d_sum, IDENTITY_TOL),
        VerifyReport::new("decomposition_sum", &split, IDENTITY_TOL),
        VerifyReport::new("post_discord_entropy_change", &post, IDENTITY_TOL),
        VerifyReport::new("flux_stage_identities", &flux, IDENTITY_TOL),
    ];
    out.sort_by(|a, b| a.check.cmp(&b.check));
    Ok(out)
}

/// The identity suite plus the structural properties: invariance of
/// measured states under their eigenbasis trees, equivalence of the one-
/// and two-measurement bipartite forms, non-negativity, zero discord of
/// measured states, product-state reductions, strong subadditivity and
/// agreement between the fast and reference objectives.
///
/// Checks that run the optimizer use `samples / 10` (at least one) cases.
pub fn verify_suite(seed: u64, samples: usize, fault: Fault) -> Result<Vec<VerifyReport>> {
    let sm = Sampler { seed };
    let few = samples.div_ceil(10).max(1);
    let cfg = OptimizerConfig {
        seed,
        ..OptimizerConfig::default()
    };
    let d3 = [2, 2, 2];
    let mut out = identity_suite_with(seed, samples, fault)?;

    let inv = collect(samples, |i| {
        let s = sm.state(&d3, i, 2);
        let depth = 1 + i % 2;
        let measured = apply_tree(&s, &sm.tree(&d3, 2, i, 2), depth)?.post_state;
        let t = optimal_tree_for_measured_state(&measured, depth)?;
        let post = apply_tree(&measured, &t, depth)?.post_state;
        Ok(measured.max_abs_diff(&post))
    })?;
    out.push(VerifyReport::new("measured_state_invariance", &inv, INVARIANCE_TOL));

    let equiv = collect(few, |i| {
        let s = sm.state(&[2, 2], i, 3);
        let one = discord::discord(&s, &[0, 1], 2, &cfg)?.value;
        let two = discord::discord_two_measurement(&s, &[0, 1], &cfg)?.value;
        Ok((one - two).abs())
    })?;
    out.push(VerifyReport::new(
        "two_measurement_equivalence",
        &equiv,
        EQUIVALENCE_TOL,
    ));

    let nonneg = collect(samples, |i| {
        let (s, t) = (sm.state(&d3, i, 4), sm.tree(&d3, 2, i, 4));
        Ok((-discord::objective_tripartite(&s, &t)?).max(0.0))
    })?;
    out.push(VerifyReport::new("objective_nonnegativity", &nonneg, IDENTITY_TOL));

    let zero = collect(few, |i| {
        let t = sm.tree(&d3, 2, i, 5);
        let s = apply_tree(&sm.state(&d3, i, 5), &t, 2)?.post_state;
        Ok(discord::discord(&s, &[0, 1, 2], 3, &cfg)?.value.max(0.0))
    })?;
    out.push(VerifyReport::new(
        "measured_state_zero_discord",
        &zero,
        ZERO_DISCORD_TOL,
    ));

    let reduction = collect(few, |i| {
        let ab = sm.state(&[2, 2], i, 6);
        let s = ab.tensor(&sm.state(&[2], i, 7));
        let tri = discord::discord(&s, &[0, 1, 2], 3, &cfg)?.value;
        let bi = discord::discord(&ab, &[0, 1], 2, &cfg)?.value;
        Ok((tri - bi).abs())
    })?;
    out.push(VerifyReport::new("product_reduction", &reduction, EQUIVALENCE_TOL));

    let delta_nonneg = collect(samples, |i| {
        let (s, t) = (sm.state(&d3, i, 8), sm.tree(&d3, 2, i, 8));
        let (ab_c, ac_b) = entropy_flux::delta_cond_discord(&s, &t)?;
        let bc = entropy_flux::delta_post_discord(&s, &t)?;
        let d = entropy_flux::d_unminimized(&s, &t, &subset(&[0]), &subset(&[1, 2]))?;
        Ok([ab_c, ac_b, bc, d]
            .into_iter()
            .map(|v| (-v).max(0.0))
            .fold(0.0, f64::max))
    })?;
    out.push(VerifyReport::new("delta_nonnegativity", &delta_nonneg, IDENTITY_TOL));

    let delta_red = collect(samples, |i| {
        let ab = sm.state(&[2, 2], i, 9);
        let s = ab.tensor(&sm.state(&[2], i, 10));
        let p = sm.params(2, i, 9);
        let t = tree_from_params(&d3, &subset(&[0, 1]), &p)?;
        let root = MeasParams {
            nodes: vec![p.nodes[0].clone()],
        };
        let t_ab = tree_from_params(&[2, 2], &subset(&[0]), &root)?;
        let (ab_c, _) = entropy_flux::delta_cond_discord(&s, &t)?;
        let d = entropy_flux::d_unminimized(&ab, &t_ab, &subset(&[0]), &subset(&[1]))?;
        Ok((ab_c - d).abs())
    })?;
    out.push(VerifyReport::new("delta_reduction", &delta_red, IDENTITY_TOL));

    let mono_product = collect(samples, |i| {
        let s = sm.state(&[2, 2], i, 11).tensor(&sm.state(&[2], i, 12));
        Ok(entropy_flux::delta_monogamy(&s, &sm.tree(&d3, 2, i, 11))?.abs())
    })?;
    out.push(VerifyReport::new("product_monogamy_zero", &mono_product, IDENTITY_TOL));

    let ssa = collect(samples, |i| {
        let s = sm.state(&d3, i, 13);
        let (a, b, c) = (subset(&[0]), subset(&[1]), subset(&[2]));
        let worst = [
            entropy_flux::cond_mutual_info(&s, &a, &b, &c)?,
            entropy_flux::cond_mutual_info(&s, &a, &c, &b)?,
            entropy_flux::cond_mutual_info(&s, &b, &c, &a)?,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        Ok((-worst).max(0.0))
    })?;
    out.push(VerifyReport::new("strong_subadditivity", &ssa, IDENTITY_TOL));

    let agree = collect(samples, |i| cross_check(&sm, i))?;
    out.push(VerifyReport::new("oracle_agreement", &agree, AGREEMENT_TOL));

    out.sort_by(|a, b| a.check.cmp(&b.check));
    Ok(out)
}

/// |fast − reference| for one random (state, tree) pair; the party count
/// cycles through 2, 3 and 4, with the two-measurement form on the side.
fn cross_check(sm: &Sampler, i: usize) -> Result<f64> {
    let n = 2 + i % 3;
    let dims = vec![2; n];
    let s = sm.state(&dims, i, 14);
    let p = sm.params(n - 1, i, 14).to_flat();
    let fast = Objective::standard(&s, n - 1)?.eval_angles(&p);
    let mut worst = (fast - oracle_objective(&s, n - 1, &p)?).abs();
    if n == 2 {
        let q = sm.params(2, i, 15).to_flat();
        let fast = Objective::two_measurement(&s)?.eval_angles(&q);
        worst = worst.max((fast - oracle_two_meas(&s, &q)?).abs());
    }
    Ok(worst)
}

/// Worst fast-versus-reference disagreement over `samples` random pairs.
pub fn cross_implementation(seed: u64, samples: usize) -> Result<VerifyReport> {
    let sm = Sampler { seed };
    let v = collect(samples, |i| cross_check(&sm, i))?;
    Ok(VerifyReport::new("oracle_agreement", &v, AGREEMENT_TOL))
}
