//! Conditional projective measurement trees.
//!
//! A tree over `M` measured subsystems (always the leading positions
//! `0..M`) holds one orthonormal basis per outcome prefix: the root basis
//! measures subsystem 0, the basis stored under path `[j1, .., jk]`
//! measures subsystem `k` given earlier outcomes `j1..jk`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{
    eig_hermitian_matrix, hermitian_part, partial_trace_raw, strides, CMatrix, CVector, QState, SubsetSpec, C64,
};

/// Branches with probability below this carry no post-measurement state
/// and contribute nothing to entropy averages.
pub const PROB_EPS: f64 = 1e-12;

const BASIS_TOL: f64 = 1e-10;

/// A complete set of rank-1 orthogonal projectors on one subsystem,
/// stored as the orthonormal kets they project onto.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorBasis {
    dim: usize,
    vectors: Vec<CVector>,
}

impl ProjectorBasis {
    pub fn from_vectors(vectors: Vec<CVector>) -> Result<Self> {
        let dim = vectors.len();
        if dim < 2 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Tree(format!("a basis needs {dim} kets of length {dim}")));
        }
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let overlap = a.dotc(b);
                let expected = if i == j { 1.0 } else { 0.0 };
                if (overlap - C64::new(expected, 0.0)).norm() > BASIS_TOL {
                    return Err(Error::Tree(format!(
                        "kets {i} and {j} are not orthonormal (overlap {overlap})"
                    )));
                }
            }
        }
        Ok(Self { dim, vectors })
    }

    /// Computational basis {|0⟩, .., |dim-1⟩}.
    pub fn computational(dim: usize) -> Self {
        let vectors = (0..dim)
            .map(|k| {
                let mut v = CVector::zeros(dim);
                v[k] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        Self { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn projector(&self, k: usize) -> CMatrix {
        let v = &self.vectors[k];
        v * v.adjoint()
    }

    pub fn projectors(&self) -> Vec<CMatrix> {
        (0..self.dim).map(|k| self.projector(k)).collect()
    }
}

/// The qubit basis {cos θ|0⟩ + e^{iφ} sin θ|1⟩, sin θ|0⟩ − e^{iφ} cos θ|1⟩}.
pub fn projector_pair_from_angles(theta: f64, phi: f64) -> ProjectorBasis {
    let [a, b] = qubit_kets(theta, phi);
    ProjectorBasis {
        dim: 2,
        vectors: vec![CVector::from_column_slice(&a), CVector::from_column_slice(&b)],
    }
}

#[inline]
pub(crate) fn qubit_kets(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    [[C64::new(c, 0.0), e * s], [C64::new(s, 0.0), -e * c]]
}

/// Maps any (θ, φ) to the equivalent pair in θ ∈ [0, π/2], φ ∈ [0, 2π).
///
/// θ has period π, and θ → π − θ together with φ → φ + π leaves both
/// projectors (and their labels) unchanged.
pub fn fold_angles(theta: f64, phi: f64) -> (f64, f64) {
    let mut t = theta.rem_euclid(PI);
    let mut p = phi;
    if t > FRAC_PI_2 {
        t = PI - t;
        p += PI;
    }
    let mut p = p.rem_euclid(TAU);
    if p >= TAU {
        p = 0.0;
    }
    (t, p)
}

/// Outcome paths of every node of a tree over subsystems with the given
/// dimensions, depth by depth and lexicographic within a depth.
pub fn node_paths(measured_dims: &[usize]) -> Vec<Vec<usize>> {
    let mut all = Vec::new();
    let mut level: Vec<Vec<usize>> = vec![Vec::new()];
    for (depth, &d) in measured_dims.iter().enumerate() {
        all.extend(level.iter().cloned());
        if depth + 1 == measured_dims.len() {
            break;
        }
        level = level
            .into_iter()
            .flat_map(|p| {
                (0..d).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    all
}

/// Angles for one tree node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeAngles {
    pub path: Vec<usize>,
    pub theta: f64,
    pub phi: f64,
}

/// (θ, φ) per node of a qubit measurement tree, in canonical node order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasParams {
    pub nodes: Vec<NodeAngles>,
}

impl MeasParams {
    /// Nodes in a qubit tree over `measured` subsystems: 2^measured − 1.
    pub fn node_count(measured: usize) -> usize {
        (1usize << measured) - 1
    }

    /// Scalars in a qubit tree over `measured` subsystems: 2^(measured+1) − 2.
    pub fn scalar_count(measured: usize) -> usize {
        2 * Self::node_count(measured)
    }

    /// Builds params from `[θ0, φ0, θ1, φ1, ..]`, folding every pair into
    /// range.
    pub fn from_flat(measured: usize, flat: &[f64]) -> Result<Self> {
        if measured == 0 || flat.len() != Self::scalar_count(measured) {
            return Err(Error::Param(format!(
                "{} scalars given, a tree over {measured} qubits needs {}",
                flat.len(),
                Self::scalar_count(measured.max(1))
            )));
        }
        let nodes = node_paths(&vec![2; measured])
            .into_iter()
            .zip(flat.chunks_exact(2))
            .map(|(path, pair)| {
                let (theta, phi) = fold_angles(pair[0], pair[1]);
                NodeAngles { path, theta, phi }
            })
            .collect();
        Ok(Self { nodes })
    }

    /// Every node at the same angles; `(0, 0)` is the computational tree.
    pub fn uniform(measured: usize, theta: f64, phi: f64) -> Self {
        let flat: Vec<f64> = (0..Self::node_count(measured)).flat_map(|_| [theta, phi]).collect();
        Self::from_flat(measured, &flat).expect("count matches")
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.nodes.iter().flat_map(|n| [n.theta, n.phi]).collect()
    }

    /// Number of measured subsystems implied by the node count.
    pub fn measured_count(&self) -> Result<usize> {
        let n = self.nodes.len() + 1;
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Param(format!(
                "{} nodes is not 2^M - 1 for any M >= 1",
                self.nodes.len()
            )));
        }
        Ok(n.trailing_zeros() as usize)
    }

    /// Checks node paths and angle ranges.
    pub fn validate(&self) -> Result<usize> {
        let measured = self.measured_count()?;
        for (node, expected) in self.nodes.iter().zip(node_paths(&vec![2; measured])) {
            if node.path != expected {
                return Err(Error::Param(format!(
                    "node path {:?} where {:?} was expected",
                    node.path, expected
                )));
            }
            let theta_ok = node.theta.is_finite() && (-1e-12..=FRAC_PI_2 + 1e-12).contains(&node.theta);
            let phi_ok = node.phi.is_finite() && (-1e-12..TAU + 1e-12).contains(&node.phi);
            if !theta_ok || !phi_ok {
                return Err(Error::Param(format!(
                    "angles ({}, {}) at {:?} outside θ ∈ [0, π/2], φ ∈ [0, 2π)",
                    node.theta, node.phi, node.path
                )));
            }
        }
        Ok(measured)
    }
}

/// A complete conditional measurement tree over the leading `M` subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementTree {
    measured: SubsetSpec,
    measured_dims: Vec<usize>,
    nodes: BTreeMap<Vec<usize>, ProjectorBasis>,
}

impl MeasurementTree {
    pub fn new(measured_dims: Vec<usize>, nodes: BTreeMap<Vec<usize>, ProjectorBasis>) -> Result<Self> {
        let measured = SubsetSpec::range(0, measured_dims.len())?;
        let paths = node_paths(&measured_dims);
        if paths.len() != nodes.len() {
            return Err(Error::Tree(format!(
                "{} nodes given, a complete tree needs {}",
                nodes.len(),
                paths.len()
            )));
        }
        for path in &paths {
            let basis = nodes
                .get(path)
                .ok_or_else(|| Error::Tree(format!("missing basis for outcome path {path:?}")))?;
            let want = measured_dims[path.len()];
            if basis.dim() != want {
                return Err(Error::Tree(format!(
                    "basis at {path:?} has dimension {}, subsystem {} has {want}",
                    basis.dim(),
                    path.len()
                )));
            }
        }
        Ok(Self {
            measured,
            measured_dims,
            nodes,
        })
    }

    /// The same basis at every node.
    pub fn uniform(measured_dims: Vec<usize>, basis_for: impl Fn(usize) -> ProjectorBasis) -> Result<Self> {
        let nodes = node_paths(&measured_dims)
            .into_iter()
            .map(|p| {
                let b = basis_for(measured_dims[p.len()]);
                (p, b)
            })
            .collect();
        Self::new(measured_dims, nodes)
    }

    /// Computational basis at every node.
    pub fn computational(measured_dims: Vec<usize>) -> Result<Self> {
        Self::uniform(measured_dims, ProjectorBasis::computational)
    }

    pub fn measured(&self) -> &SubsetSpec {
        &self.measured
    }

    pub fn depth(&self) -> usize {
        self.measured_dims.len()
    }

    pub fn measured_dims(&self) -> &[usize] {
        &self.measured_dims
    }

    pub fn basis(&self, path: &[usize]) -> Option<&ProjectorBasis> {
        self.nodes.get(path)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&Vec<usize>, &ProjectorBasis)> {
        self.nodes.iter()
    }

    /// Errors unless `dims` starts with this tree's measured dimensions.
    pub(crate) fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if dims.len() < self.depth() || dims[..self.depth()] != self.measured_dims[..] {
            return Err(Error::Structure(format!(
                "tree measures dims {:?}, state has dims {dims:?}",
                self.measured_dims
            )));
        }
        Ok(())
    }

    /// Every outcome path of length `depth`, lexicographic.
    pub fn paths(&self, depth: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for &d in &self.measured_dims[..depth] {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..d).map(move |k| {
                        let mut q = p.clone();
                        q.push(k);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Builds a qubit tree over the leading `measured` positions of `dims`.
pub fn tree_from_params(dims: &[usize], measured: &SubsetSpec, params: &MeasParams) -> Result<MeasurementTree> {
    let m = measured.len();
    if measured.indices() != (0..m).collect::<Vec<_>>().as_slice() {
        return Err(Error::Tree(format!(
            "measured subsystems must be the leading positions, got {:?}; permute the state first",
            measured.indices()
        )));
    }
    if m >= dims.len() {
        return Err(Error::Tree(format!(
            "{m} measured subsystems leave none unmeasured out of {}",
            dims.len()
        )));
    }
    if let Some(i) = (0..m).find(|&i| dims[i] != 2) {
        return Err(Error::Tree(format!(
            "measured subsystem {i} has dimension {}, angle trees need qubits",
            dims[i]
        )));
    }
    let count = params.validate()?;
    if count != m {
        return Err(Error::Tree(format!(
            "{} nodes given, a tree over {m} qubits needs {}",
            params.nodes.len(),
            MeasParams::node_count(m)
        )));
    }
    let nodes = params
        .nodes
        .iter()
        .map(|n| (n.path.clone(), projector_pair_from_angles(n.theta, n.phi)))
        .collect();
    MeasurementTree::new(vec![2; m], nodes)
}

/// Same as [`tree_from_params`] for a whole-state measurement (every
/// subsystem measured), as used by the two-measurement bipartite form.
pub fn full_tree_from_params(dims: &[usize], params: &MeasParams) -> Result<MeasurementTree> {
    let m = params.validate()?;
    if m != dims.len() || dims.iter().any(|&d| d != 2) {
        return Err(Error::Tree(format!(
            "a full tree over dims {dims:?} needs {} qubit nodes",
            MeasParams::node_count(dims.len())
        )));
    }
    let nodes = params
        .nodes
        .iter()
        .map(|n| (n.path.clone(), projector_pair_from_angles(n.theta, n.phi)))
        .collect();
    MeasurementTree::new(vec![2; m], nodes)
}

/// One measurement branch.
#[derive(Clone, Debug)]
pub struct BranchOutcome {
    pub path: Vec<usize>,
    pub probability: f64,
    /// Normalized branch state; absent when `probability < PROB_EPS`.
    pub post_state: Option<QState>,
}

/// Result of [`apply_tree`].
#[derive(Clone, Debug)]
pub struct Measured {
    pub post_state: QState,
    pub branches: Vec<BranchOutcome>,
}

/// (I ⊗ |v⟩⟨v| ⊗ I) M (I ⊗ |v⟩⟨v| ⊗ I) with the projector on `site`.
pub(crate) fn project_site(m: &CMatrix, dims: &[usize], site: usize, v: &CVector) -> CMatrix {
    let st = strides(dims)[site];
    let d = dims[site];
    let side = m.nrows();
    // w[r, c] = Σ_ab conj(v_a) M[(r|a), (c|b)] v_b over the site digit.
    let digit = |i: usize| (i / st) % d;
    CMatrix::from_fn(side, side, |r, c| {
        let (rs, cs) = (digit(r), digit(c));
        let (r0, c0) = (r - rs * st, c - cs * st);
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..d {
            let va = v[a].conj();
            if va == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..d {
                acc += va * m[(r0 + a * st, c0 + b * st)] * v[b];
            }
        }
        v[rs] * acc * v[cs].conj()
    })
}

/// Applies the first `depth` levels of `tree` to `state`.
pub fn apply_tree(state: &QState, tree: &MeasurementTree, depth: usize) -> Result<Measured> {
    tree.check_dims(state.dims())?;
    if depth == 0 || depth > tree.depth() {
        return Err(Error::Param(format!("depth {depth} outside 1..={}", tree.depth())));
    }
    let dims = state.dims();
    let side = state.side();
    let mut post = CMatrix::zeros(side, side);
    let mut branches = Vec::new();
    let mut stack: Vec<(Vec<usize>, CMatrix)> = vec![(Vec::new(), state.matrix().clone())];
    while let Some((path, m)) = stack.pop() {
        if path.len() == depth {
            let p = m.trace().re;
            post += &m;
            let post_state = (p >= PROB_EPS).then(|| QState::from_parts(dims.to_vec(), hermitian_part(&m.unscale(p))));
            branches.push(BranchOutcome {
                path,
                probability: p.max(0.0),
                post_state,
            });
            continue;
        }
        let basis = &tree.nodes[&path];
        for k in (0..basis.dim()).rev() {
            let mut q = path.clone();
            q.push(k);
            let projected = project_site(&m, dims, path.len(), &basis.vectors[k]);
            stack.push((q, projected));
        }
    }
    Ok(Measured {
        post_state: QState::from_parts(dims.to_vec(), hermitian_part(&post)),
        branches,
    })
}

/// ⟨v|σ|v⟩ on the leading factor of σ (dimension `d`), leaving an
/// operator on the remaining factors.
pub(crate) fn contract_leading(sigma: &CMatrix, d: usize, v: &CVector) -> CMatrix {
    let rest = sigma.nrows() / d;
    CMatrix::from_fn(rest, rest, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                acc += v[a].conj() * sigma[(a * rest + r, b * rest + c)] * v[b];
            }
        }
        acc
    })
}

/// Fixed Hermitian operator with distinct, unrelated entries; used to split
/// ties when a conditional marginal is degenerate.
fn generic_hermitian(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| {
        let (a, b) = (r.min(c) as f64, r.max(c) as f64);
        if r == c {
            C64::new((a + 2.0).sqrt(), 0.0)
        } else {
            let z = C64::new(0.1 * (a + b + 3.0).sqrt(), 0.05 * (2.0 * a + b + 5.0).sqrt());
            if r < c {
                z
            } else {
                z.conj()
            }
        }
    })
}

/// Eigenbasis tree of a measured state.
///
/// Each node's basis diagonalizes the conditional marginal of its
/// subsystem, tilted by a fixed generic observable on the later
/// subsystems so that degenerate marginals still pick the basis in which
/// the conditional state is block diagonal. For a state produced by
/// [`apply_tree`] at depth `k`, applying the returned tree at depth `k`
/// leaves it unchanged.
pub fn optimal_tree_for_measured_state(state: &QState, measured: usize) -> Result<MeasurementTree> {
    let dims = state.dims();
    if measured == 0 || measured > dims.len() {
        return Err(Error::Tree(format!(
            "cannot measure {measured} of {} subsystems",
            dims.len()
        )));
    }
    let measured_dims = dims[..measured].to_vec();
    let mut nodes = BTreeMap::new();
    let mut stack: Vec<(Vec<usize>, CMatrix)> = vec![(Vec::new(), state.matrix().clone())];
    while let Some((path, sigma)) = stack.pop() {
        let site = path.len();
        let local_dims = &dims[site..];
        let d = local_dims[0];
        let basis = node_basis(&sigma, local_dims)?;
        if site + 1 < measured {
            for (k, v) in basis.vectors.iter().enumerate() {
                let mut q = path.clone();
                q.push(k);
                stack.push((q, contract_leading(&sigma, d, v)));
            }
        }
        nodes.insert(path, basis);
    }
    MeasurementTree::new(measured_dims, nodes)
}

fn node_basis(sigma: &CMatrix, local_dims: &[usize]) -> Result<ProjectorBasis> {
    let d = local_dims[0];
    if sigma.trace().re < PROB_EPS {
        return Ok(ProjectorBasis::computational(d));
    }
    let marginal = partial_trace_raw(sigma, local_dims, &[0]);
    let rest: usize = local_dims[1..].iter().product();
    let mut target = marginal;
    if rest > 1 {
        let tilt = CMatrix::identity(d, d).kronecker(&generic_hermitian(rest));
        let weighted = partial_trace_raw(&(tilt * sigma), local_dims, &[0]);
        target += weighted.scale(std::f64::consts::FRAC_1_PI);
    }
    let eig = eig_hermitian_matrix(&hermitian_part(&target))?;
    ProjectorBasis::from_vectors(eig.vectors)
}
