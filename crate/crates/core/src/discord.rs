//! Discord objectives and their minimization over measurement trees.
//!
//! For an N-party state with parties A1..AN and a tree measuring A1..A(N-1)
//! in turn, the objective is
//!
//!   −S(A2..AN | A1) + Σ_k S(Ak | Π^{A1..A(k-1)})
//!
//! which is the usual one-sided discord for N = 2. The two-measurement
//! bipartite form measures both parties and evaluates
//! S(B|A) after the measurement minus S(B|A) before it.

use serde::{Deserialize, Serialize};

use crate::entropy_flux::{self, Decomposition};
use crate::error::{Error, Result};
use crate::measure::{full_tree_from_params, qubit_kets, tree_from_params, MeasParams, MeasurementTree, PROB_EPS};
use crate::optimizer::{optimize, OptimizerConfig, OptimizerOutcome};
use crate::qstate::{eig2, entropy_from_eigenvalues, hermitian_eigenvalues, CMatrix, QState, SubsetSpec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Standard,
    TwoMeasurement,
}

/// Precomputed objective for one state and one measured block, evaluated
/// by contracting the density matrix with the tree's kets one level at a
/// time. Safe to share between threads.
#[derive(Clone, Debug)]
pub struct Objective {
    kind: Kind,
    dims: Vec<usize>,
    measured: usize,
    rho: Vec<C64>,
    constant: f64,
}

enum Source<'a> {
    Angles(&'a [f64]),
    Tree(&'a MeasurementTree),
}

impl Objective {
    /// The N-party objective for `state`, whose leading `measured`
    /// subsystems are measured and whose remaining subsystems together form
    /// the last party.
    pub fn standard(state: &QState, measured: usize) -> Result<Self> {
        let n = state.n_subsystems();
        if measured == 0 || measured >= n {
            return Err(Error::Structure(format!(
                "need 1..{} measured subsystems of {n}, got {measured}",
                n.saturating_sub(1)
            )));
        }
        let constant = -(state.entropy() - state.entropy_of(&[0]));
        Ok(Self::build(state, measured, Kind::Standard, constant))
    }

    /// The bipartite objective with both parties measured.
    pub fn two_measurement(state: &QState) -> Result<Self> {
        if state.n_subsystems() != 2 {
            return Err(Error::Structure(format!(
                "two-measurement form needs 2 subsystems, state has {}",
                state.n_subsystems()
            )));
        }
        let constant = -(state.entropy() - state.entropy_of(&[0]));
        Ok(Self::build(state, 2, Kind::TwoMeasurement, constant))
    }

    fn build(state: &QState, measured: usize, kind: Kind, constant: f64) -> Self {
        let side = state.side();
        let m = state.matrix();
        let mut rho = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                rho.push(m[(r, c)]);
            }
        }
        Self {
            kind,
            dims: state.dims().to_vec(),
            measured,
            rho,
            constant,
        }
    }

    pub fn measured(&self) -> usize {
        self.measured
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of angle scalars for a qubit tree.
    pub fn scalar_count(&self) -> usize {
        MeasParams::scalar_count(self.measured)
    }

    /// Objective at flat angles `[θ0, φ0, ..]` in canonical node order.
    /// Measured subsystems must be qubits.
    pub fn eval_angles(&self, params: &[f64]) -> f64 {
        debug_assert_eq!(params.len(), self.scalar_count());
        self.constant + self.visit(&Source::Angles(params), &self.rho, 0, 0, &mut Vec::new())
    }

    /// Objective for an explicit tree.
    pub fn eval_tree(&self, tree: &MeasurementTree) -> Result<f64> {
        tree.check_dims(&self.dims)?;
        if tree.depth() != self.measured {
            return Err(Error::Tree(format!(
                "tree measures {} subsystems, objective expects {}",
                tree.depth(),
                self.measured
            )));
        }
        Ok(self.constant + self.visit(&Source::Tree(tree), &self.rho, 0, 0, &mut Vec::new()))
    }

    fn visit(&self, src: &Source, sigma: &[C64], depth: usize, node: usize, path: &mut Vec<usize>) -> f64 {
        let local = &self.dims[depth..];
        let side: usize = local.iter().product();
        let d = local[0];
        let rest = side / d;
        let mut acc = 0.0;
        let mut child = vec![C64::new(0.0, 0.0); rest * rest];

        let mut branch = |j: usize, ket: &[C64], acc: &mut f64, path: &mut Vec<usize>| {
            contract(sigma, side, d, ket, &mut child);
            let p: f64 = (0..rest).map(|i| child[i * rest + i].re).sum();
            if p < PROB_EPS {
                return;
            }
            let last = depth + 1 == self.measured;
            match self.kind {
                Kind::Standard => {
                    if last {
                        *acc += p * entropy_of_buffer(&child, rest, p);
                    } else {
                        *acc += p * leading_entropy(&child, local[1], rest / local[1], p);
                    }
                }
                Kind::TwoMeasurement => {
                    // Accumulates H(p_jk) − H(p_j).
                    *acc += if last { -p * p.log2() } else { p * p.log2() };
                }
            }
            if !last {
                path.push(j);
                *acc += self.visit(src, &child, depth + 1, 2 * node + 1 + j, path);
                path.pop();
            }
        };

        match src {
            Source::Angles(params) => {
                let kets = qubit_kets(params[2 * node], params[2 * node + 1]);
                for (j, ket) in kets.iter().enumerate() {
                    branch(j, ket, &mut acc, path);
                }
            }
            Source::Tree(tree) => {
                let basis = tree.basis(path).expect("complete tree");
                for (j, ket) in basis.vectors().iter().enumerate() {
                    branch(j, ket.as_slice(), &mut acc, path);
                }
            }
        }
        acc
    }
}

/// out = ⟨v|σ|v⟩ over the leading factor (dimension d) of a row-major σ.
#[inline]
fn contract(sigma: &[C64], side: usize, d: usize, v: &[C64], out: &mut [C64]) {
    let rest = side / d;
    out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    for a in 0..d {
        for b in 0..d {
            let w = v[a].conj() * v[b];
            if w.norm_sqr() == 0.0 {
                continue;
            }
            for r in 0..rest {
                let row = &sigma[(a * rest + r) * side + b * rest..][..rest];
                let dst = &mut out[r * rest..][..rest];
                for (o, s) in dst.iter_mut().zip(row) {
                    *o += w * s;
                }
            }
        }
    }
}

/// Entropy of buf / p for a row-major n × n Hermitian buffer.
fn entropy_of_buffer(buf: &[C64], n: usize, p: f64) -> f64 {
    match n {
        1 => 0.0,
        2 => {
            let (a, b) = eig2(buf[0].re / p, buf[3].re / p, buf[1] / p);
            entropy_from_eigenvalues([a, b])
        }
        _ => {
            let m = CMatrix::from_row_slice(n, n, buf).unscale(p);
            entropy_from_eigenvalues(hermitian_eigenvalues(&m))
        }
    }
}

/// Entropy of the leading factor (dimension d, the rest of size r) of
/// buf / p.
fn leading_entropy(buf: &[C64], d: usize, r: usize, p: f64) -> f64 {
    let side = d * r;
    let mut m = vec![C64::new(0.0, 0.0); d * d];
    for a in 0..d {
        for b in 0..d {
            m[a * d + b] = (0..r).map(|k| buf[(a * r + k) * side + b * r + k]).sum();
        }
    }
    entropy_of_buffer(&m, d, p)
}

fn require(state: &QState, n: usize, tree: &MeasurementTree, depth: usize) -> Result<()> {
    if state.n_subsystems() != n {
        return Err(Error::Structure(format!(
            "expected {n} subsystems, state has {}",
            state.n_subsystems()
        )));
    }
    if tree.depth() != depth {
        return Err(Error::Tree(format!(
            "expected a tree over {depth} subsystems, got {}",
            tree.depth()
        )));
    }
    Ok(())
}

/// S(B | Π^A) − S(B | A) for a two-subsystem state.
pub fn objective_bipartite(state: &QState, tree: &MeasurementTree) -> Result<f64> {
    require(state, 2, tree, 1)?;
    Objective::standard(state, 1)?.eval_tree(tree)
}

/// S(B|A) of the state with both parties measured, minus S(B|A) of the
/// state itself.
pub fn objective_bipartite_two_meas(state: &QState, tree: &MeasurementTree) -> Result<f64> {
    require(state, 2, tree, 2)?;
    Objective::two_measurement(state)?.eval_tree(tree)
}

/// −S(BC | A) + S(B | Π^A) + S(C | Π^{AB}) for a three-subsystem state.
pub fn objective_tripartite(state: &QState, tree: &MeasurementTree) -> Result<f64> {
    require(state, 3, tree, 2)?;
    Objective::standard(state, 2)?.eval_tree(tree)
}

/// The N-party objective; the tree measures all but the last subsystem.
pub fn objective_npartite(state: &QState, tree: &MeasurementTree) -> Result<f64> {
    let n = state.n_subsystems();
    require(state, n, tree, n.saturating_sub(1))?;
    Objective::standard(state, n - 1)?.eval_tree(tree)
}

/// Reorders `state` so the parties come in `order` (the unlisted
/// subsystems follow in ascending order) and merges everything from
/// position `level − 1` on into one last party.
pub fn arrange(state: &QState, order: &[usize], level: usize) -> Result<QState> {
    let n = state.n_subsystems();
    if level < 2 || level > n {
        return Err(Error::Param(format!(
            "level {level} outside 2..={n} for a {n}-subsystem state"
        )));
    }
    let mut full: Vec<usize> = Vec::with_capacity(n);
    for &i in order {
        if i >= n || full.contains(&i) {
            return Err(Error::Param(format!(
                "order {order:?} is not a list of distinct subsystems below {n}"
            )));
        }
        full.push(i);
    }
    full.extend((0..n).filter(|i| !order.contains(i)));
    let permuted = state.permute(&full)?;
    let mut dims = permuted.dims()[..level - 1].to_vec();
    dims.push(permuted.dims()[level - 1..].iter().product());
    Ok(QState::from_parts(dims, permuted.matrix().clone()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub evaluations: u64,
    pub restarts: usize,
    pub grid_best: f64,
    pub converged: bool,
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscordResult {
    pub value: f64,
    #[serde(rename = "params")]
    pub optimal_params: MeasParams,
    /// The four-term split at the optimum; three-party discord only.
    pub decomposition: Option<Decomposition>,
    pub diagnostics: Diagnostics,
    pub order: Vec<usize>,
    pub level: usize,
}

impl DiscordResult {
    /// The optimal tree on the arranged state it was computed for.
    pub fn optimal_tree(&self, arranged: &QState) -> Result<MeasurementTree> {
        let dims = arranged.dims();
        if self.optimal_params.measured_count()? == dims.len() {
            return full_tree_from_params(dims, &self.optimal_params);
        }
        tree_from_params(dims, &SubsetSpec::range(0, self.level - 1)?, &self.optimal_params)
    }
}

fn require_qubits(arranged: &QState, measured: usize) -> Result<()> {
    if let Some(i) = (0..measured).find(|&i| arranged.dims()[i] != 2) {
        return Err(Error::Structure(format!(
            "measured party {i} has dimension {}, only qubits can be measured",
            arranged.dims()[i]
        )));
    }
    Ok(())
}

fn diagnostics(out: &OptimizerOutcome) -> Diagnostics {
    Diagnostics {
        evaluations: out.evaluations,
        restarts: out.restarts,
        grid_best: out.grid_best,
        converged: out.converged,
        trace: out.trace.clone(),
    }
}

/// Minimum of the `level`-party objective over qubit measurement trees,
/// with the parties taken in `order`.
///
/// The best value found is returned even when the simplex did not
/// converge; `diagnostics.converged` says which.
pub fn discord(state: &QState, order: &[usize], level: usize, config: &OptimizerConfig) -> Result<DiscordResult> {
    let arranged = arrange(state, order, level)?;
    let measured = level - 1;
    require_qubits(&arranged, measured)?;
    let objective = Objective::standard(&arranged, measured)?;
    let out = optimize(&|x: &[f64]| objective.eval_angles(x), measured, config)?;
    let decomposition = if level == 3 {
        let tree = tree_from_params(arranged.dims(), &SubsetSpec::range(0, 2)?, &out.best_params)?;
        Some(entropy_flux::decomposition(&arranged, &tree)?)
    } else {
        None
    };
    Ok(DiscordResult {
        value: out.best_value,
        optimal_params: out.best_params.clone(),
        decomposition,
        diagnostics: diagnostics(&out),
        order: order.to_vec(),
        level,
    })
}

/// Bipartite discord in the two-measurement form, minimized over trees
/// measuring both parties.
pub fn discord_two_measurement(state: &QState, order: &[usize], config: &OptimizerConfig) -> Result<DiscordResult> {
    let arranged = arrange(state, order, 2)?;
    require_qubits(&arranged, 2)?;
    let objective = Objective::two_measurement(&arranged)?;
    let out = optimize(&|x: &[f64]| objective.eval_angles(x), 2, config)?;
    Ok(DiscordResult {
        value: out.best_value,
        optimal_params: out.best_params.clone(),
        decomposition: None,
        diagnostics: diagnostics(&out),
        order: order.to_vec(),
        level: 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{apply_tree, projector_pair_from_angles, ProjectorBasis};
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> QState {
        let h = FRAC_1_SQRT_2;
        QState::pure(vec![2, 2], &[c(h), c(0.0), c(0.0), c(h)]).unwrap()
    }

    fn ghz(n: usize) -> QState {
        let mut a = vec![c(0.0); 1 << n];
        a[0] = c(FRAC_1_SQRT_2);
        a[(1 << n) - 1] = c(FRAC_1_SQRT_2);
        QState::pure(vec![2; n], &a).unwrap()
    }

    fn z(m: usize) -> MeasurementTree {
        MeasurementTree::computational(vec![2; m]).unwrap()
    }

    fn cc_pair() -> QState {
        let h = FRAC_1_SQRT_2;
        let a = QState::basis(vec![2, 2], &[0, 0]).unwrap();
        let b = QState::pure(vec![2, 2], &[c(0.0), c(0.0), c(h), c(h)]).unwrap();
        QState::mix(&a, &b, 0.5).unwrap()
    }

    fn cc_tree() -> MeasurementTree {
        let mut nodes = BTreeMap::new();
        nodes.insert(vec![], ProjectorBasis::computational(2));
        nodes.insert(vec![0], ProjectorBasis::computational(2));
        nodes.insert(vec![1], projector_pair_from_angles(FRAC_PI_4, 0.0));
        MeasurementTree::new(vec![2, 2], nodes).unwrap()
    }

    fn product(n: usize, seed: u64) -> QState {
        let mut s = QState::random(&[2], 2, seed).unwrap();
        for k in 1..n {
            s = s.tensor(&QState::random(&[2], 2, seed + k as u64).unwrap());
        }
        s
    }

    fn random_params(m: usize, seed: u64) -> MeasParams {
        let flat: Vec<f64> = (0..MeasParams::scalar_count(m))
            .map(|k| ((seed as f64 + 3.0) * 12.9898 + k as f64 * 78.233).sin() * 4.0)
            .collect();
        MeasParams::from_flat(m, &flat).unwrap()
    }

    #[test]
    fn bipartite_examples() {
        assert_abs_diff_eq!(objective_bipartite(&bell(), &z(1)).unwrap(), 1.0, epsilon = 1e-12);
        let t = tree_from_params(&[2, 2], &SubsetSpec::range(0, 1).unwrap(), &random_params(1, 1)).unwrap();
        assert_abs_diff_eq!(objective_bipartite(&product(2, 4), &t).unwrap(), 0.0, epsilon = 1e-12);
        let cl = QState::mix(
            &QState::basis(vec![2, 2], &[0, 0]).unwrap(),
            &QState::basis(vec![2, 2], &[1, 1]).unwrap(),
            0.5,
        )
        .unwrap();
        assert_abs_diff_eq!(objective_bipartite(&cl, &z(1)).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_measurement_examples() {
        assert_abs_diff_eq!(
            objective_bipartite_two_meas(&bell(), &z(2)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            objective_bipartite_two_meas(&cc_pair(), &cc_tree()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let t = full_tree_from_params(&[2, 2], &random_params(2, 2)).unwrap();
        let p = product(2, 8);
        // For a product state the objective is H(outcomes of B) − S(B) ≥ 0,
        // zero only in B's eigenbasis; an eigenbasis tree gives exactly 0.
        assert!(objective_bipartite_two_meas(&p, &t).unwrap() >= -1e-12);
        let eig = crate::measure::optimal_tree_for_measured_state(&p, 2).unwrap();
        assert_abs_diff_eq!(objective_bipartite_two_meas(&p, &eig).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn tripartite_examples() {
        assert_abs_diff_eq!(objective_tripartite(&ghz(3), &z(2)).unwrap(), 1.0, epsilon = 1e-12);
        for seed in 0..5 {
            let t = tree_from_params(&[2, 2, 2], &SubsetSpec::range(0, 2).unwrap(), &random_params(2, seed)).unwrap();
            let s = apply_tree(&QState::random(&[2, 2, 2], 3, seed).unwrap(), &t, 2)
                .unwrap()
                .post_state;
            assert_abs_diff_eq!(objective_tripartite(&s, &t).unwrap(), 0.0, epsilon = 1e-10);
        }
        let s = cc_pair().tensor(&QState::basis(vec![2], &[0]).unwrap());
        assert_abs_diff_eq!(objective_tripartite(&s, &cc_tree()).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn npartite_examples() {
        let t = tree_from_params(&[2; 4], &SubsetSpec::range(0, 3).unwrap(), &random_params(3, 5)).unwrap();
        assert_abs_diff_eq!(objective_npartite(&product(4, 1), &t).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(objective_npartite(&ghz(4), &z(3)).unwrap(), 1.0, epsilon = 1e-12);
        let s = apply_tree(&QState::random(&[2; 4], 5, 3).unwrap(), &t, 3)
            .unwrap()
            .post_state;
        assert_abs_diff_eq!(objective_npartite(&s, &t).unwrap(), 0.0, epsilon = 1e-10);

        let r = QState::random(&[2, 2, 2], 8, 11).unwrap();
        let t3 = tree_from_params(&[2; 3], &SubsetSpec::range(0, 2).unwrap(), &random_params(2, 6)).unwrap();
        assert_abs_diff_eq!(
            objective_npartite(&r, &t3).unwrap(),
            objective_tripartite(&r, &t3).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn objectives_are_nonnegative_and_match_decomposition() {
        for seed in 0..30 {
            let s = QState::random(&[2, 2, 2], 1 + seed as usize % 8, seed).unwrap();
            let t = tree_from_params(&[2; 3], &SubsetSpec::range(0, 2).unwrap(), &random_params(2, seed + 50)).unwrap();
            let v = objective_tripartite(&s, &t).unwrap();
            assert!(v >= -1e-9);
            let d = entropy_flux::decomposition(&s, &t).unwrap();
            assert_abs_diff_eq!(v, d.total(), epsilon = 1e-9);
        }
    }

    #[test]
    fn angles_and_tree_paths_agree() {
        let s = QState::random(&[2, 2, 2], 4, 2).unwrap();
        let p = random_params(2, 7);
        let t = tree_from_params(&[2; 3], &SubsetSpec::range(0, 2).unwrap(), &p).unwrap();
        let obj = Objective::standard(&s, 2).unwrap();
        assert_abs_diff_eq!(
            obj.eval_angles(&p.to_flat()),
            obj.eval_tree(&t).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn grouped_last_party() {
        // Level 2 on three qubits: B is the pair of the last two.
        let s = ghz(3);
        let a = arrange(&s, &[0], 2).unwrap();
        assert_eq!(a.dims(), &[2, 4]);
        assert_abs_diff_eq!(objective_bipartite(&a, &z(1)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn arrange_validates() {
        let s = ghz(3);
        assert!(arrange(&s, &[0, 0], 3).is_err());
        assert!(arrange(&s, &[3], 3).is_err());
        assert!(arrange(&s, &[], 1).is_err());
        assert!(arrange(&s, &[], 4).is_err());
        let a = arrange(&s, &[2, 0], 3).unwrap();
        assert_eq!(a.dims(), &[2, 2, 2]);
    }

    #[test]
    fn bell_and_ghz_discord() {
        let cfg = OptimizerConfig::default();
        let b = discord(&bell(), &[0, 1], 2, &cfg).unwrap();
        assert_abs_diff_eq!(b.value, 1.0, epsilon = 1e-6);
        let g = discord(&ghz(3), &[0, 1, 2], 3, &cfg).unwrap();
        assert_abs_diff_eq!(g.value, 1.0, epsilon = 1e-6);
        let d = g.decomposition.unwrap();
        assert_abs_diff_eq!(d.total(), g.value, epsilon = 1e-9);
        assert!(g.value <= g.diagnostics.grid_best + 1e-12);
    }

    #[test]
    fn product_discord_is_zero() {
        let cfg = OptimizerConfig::default();
        let r = discord(&product(3, 2), &[], 3, &cfg).unwrap();
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn two_measurement_discord_matches_one_sided() {
        let cfg = OptimizerConfig::default();
        for seed in 0..3 {
            let s = QState::random(&[2, 2], 2, seed).unwrap();
            let one = discord(&s, &[0, 1], 2, &cfg).unwrap().value;
            let two = discord_two_measurement(&s, &[0, 1], &cfg).unwrap().value;
            assert_abs_diff_eq!(one, two, epsilon = 1e-5);
        }
    }

    #[test]
    fn result_json_shape() {
        let r = discord(&bell(), &[0, 1], 2, &OptimizerConfig::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["params"]["nodes"].is_array());
        assert!(v["diagnostics"]["evaluations"].as_u64().unwrap() >= 36);
        let g = discord(&ghz(3), &[], 3, &OptimizerConfig::default()).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert!(v["decomposition"]["Delta_BC_PiA"].is_number());
    }
}
