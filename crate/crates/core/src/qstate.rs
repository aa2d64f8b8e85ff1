//! Dense density matrices over an ordered list of subsystems.
//!
//! Subsystem 0 is the leftmost tensor factor, i.e. the most significant
//! digit of a row/column index. All entropies are in bits.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Maximum entrywise |M - M†| accepted for a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Maximum |tr M - 1| accepted for a density matrix.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this contribute nothing to an entropy.
pub const EIGEN_CLAMP: f64 = 1e-12;

const DEGENERACY_TOL: f64 = 1e-10;

/// Strictly increasing, non-empty list of subsystem positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetSpec(Vec<usize>);

impl SubsetSpec {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Subset("subset must be non-empty".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Subset(format!(
                "indices must be strictly increasing, got {indices:?}"
            )));
        }
        Ok(Self(indices))
    }

    /// Convenience constructor; sorts and deduplicates.
    pub fn of(indices: &[usize]) -> Result<Self> {
        let mut v = indices.to_vec();
        v.sort_unstable();
        v.dedup();
        Self::new(v)
    }

    /// Positions `start..end`.
    pub fn range(start: usize, end: usize) -> Result<Self> {
        Self::new((start..end).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_disjoint(&self, other: &SubsetSpec) -> bool {
        !self.0.iter().any(|&i| other.contains(i))
    }

    pub fn union(&self, other: &SubsetSpec) -> SubsetSpec {
        let mut v: Vec<usize> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        SubsetSpec(v)
    }

    pub(crate) fn check_within(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last < n => Ok(()),
            _ => Err(Error::Subset(format!(
                "subset {:?} out of range for {n} subsystems",
                self.0
            ))),
        }
    }
}

/// Outcome of [`validate`]: each invariant with its measured deviation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    pub hermitian_deviation: f64,
    pub trace_deviation: f64,
    pub min_eigenvalue: f64,
    pub hermitian: bool,
    pub unit_trace: bool,
    pub positive: bool,
}

impl ValidityReport {
    pub fn pass(&self) -> bool {
        self.hermitian && self.unit_trace && self.positive
    }

    fn describe(&self) -> String {
        format!(
            "hermitian deviation {:.3e}, trace deviation {:.3e}, min eigenvalue {:.3e}",
            self.hermitian_deviation, self.trace_deviation, self.min_eigenvalue
        )
    }
}

/// Checks the density-matrix invariants without constructing a state.
///
/// Fails only on structural problems (non-square matrix, side not equal to
/// the product of `dims`, a dimension below 2).
pub fn validate(dims: &[usize], matrix: &CMatrix) -> Result<ValidityReport> {
    check_structure(dims, matrix)?;
    let hermitian_deviation = hermitian_deviation(matrix);
    let trace_deviation = (matrix.trace() - C64::new(1.0, 0.0)).norm();
    let sym = hermitian_part(matrix);
    let min_eigenvalue = hermitian_eigenvalues(&sym).into_iter().fold(f64::INFINITY, f64::min);
    Ok(ValidityReport {
        hermitian_deviation,
        trace_deviation,
        min_eigenvalue,
        hermitian: hermitian_deviation < HERMITIAN_TOL,
        unit_trace: trace_deviation < TRACE_TOL,
        positive: min_eigenvalue >= -PSD_TOL,
    })
}

fn check_structure(dims: &[usize], matrix: &CMatrix) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::Structure(format!(
            "matrix is {}x{}, not square",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(Error::Structure(format!(
            "subsystem dimensions must be >= 2, got {dims:?}"
        )));
    }
    let side: usize = dims.iter().product();
    if side != matrix.nrows() {
        return Err(Error::Structure(format!(
            "dims {dims:?} need side {side}, matrix side is {}",
            matrix.nrows()
        )));
    }
    Ok(())
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix, unsorted.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        2 => {
            let (a, b) = eig2(m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
            vec![a, b]
        }
        _ => m.clone().symmetric_eigenvalues().iter().copied().collect(),
    }
}

/// Closed-form eigenvalues of [[a, z], [z*, d]], larger first.
#[inline]
pub(crate) fn eig2(a: f64, d: f64, z: C64) -> (f64, f64) {
    let half_tr = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + z.norm_sqr()).sqrt();
    (half_tr + half_gap, half_tr - half_gap)
}

/// -Σ λ log₂ λ over the given eigenvalues, skipping λ < [`EIGEN_CLAMP`].
pub fn entropy_from_eigenvalues<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let s: f64 = values
        .into_iter()
        .filter(|&l| l >= EIGEN_CLAMP)
        .map(|l| -l * l.log2())
        .sum();
    s.max(0.0)
}

/// Entropy of a unit-trace Hermitian matrix.
pub fn matrix_entropy(m: &CMatrix) -> f64 {
    entropy_from_eigenvalues(hermitian_eigenvalues(m))
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues descend. Each eigenvector has its first significant entry
/// made real and positive; degenerate eigenvalues are ordered by
/// lexicographic comparison of their eigenvector entries.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<CVector>,
}

pub fn eig_hermitian_matrix(m: &CMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Structure("eigendecomposition needs a square matrix".into()));
    }
    let dev = hermitian_deviation(m);
    if dev >= HERMITIAN_TOL {
        return Err(Error::Structure(format!(
            "matrix is not Hermitian (deviation {dev:.3e})"
        )));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut pairs: Vec<(f64, CVector)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&l, v)| (l, fix_phase(v.into_owned())))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() < DEGENERACY_TOL {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lex_cmp(&a.1, &b.1));
        start = end;
    }

    let (values, vectors) = pairs.into_iter().unzip();
    Ok(HermitianEigen { values, vectors })
}

fn fix_phase(mut v: CVector) -> CVector {
    if let Some(z) = v.iter().copied().find(|z| z.norm() > 1e-12) {
        let phase = z.conj() / z.norm();
        v *= phase;
    }
    let norm = v.norm();
    if norm > 0.0 {
        v /= C64::new(norm, 0.0);
    }
    v
}

fn lex_cmp(a: &CVector, b: &CVector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o.reverse();
        }
    }
    std::cmp::Ordering::Equal
}

/// Row-major strides: position 0 varies slowest.
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Flat-index offsets of every multi-index over `positions`.
fn offsets(dims: &[usize], strides: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * dims[p]);
        for &o in &out {
            for digit in 0..dims[p] {
                next.push(o + digit * strides[p]);
            }
        }
        out = next;
    }
    out
}

/// Partial trace of a raw matrix over every subsystem not in `keep`.
pub(crate) fn partial_trace_raw(matrix: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let st = strides(dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kept_off = offsets(dims, &st, keep);
    let traced_off = offsets(dims, &st, &traced);
    let n = kept_off.len();
    CMatrix::from_fn(n, n, |r, c| {
        traced_off
            .iter()
            .map(|&t| matrix[(kept_off[r] + t, kept_off[c] + t)])
            .sum()
    })
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QStateWire", into = "QStateWire")]
pub struct QState {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl QState {
    /// Builds a state, rejecting anything that fails [`validate`].
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let report = validate(&dims, &matrix)?;
        if !report.pass() {
            return Err(Error::InvalidState(report.describe()));
        }
        Ok(Self { dims, matrix })
    }

    /// Internal constructor for matrices that are valid by construction.
    pub(crate) fn from_parts(dims: Vec<usize>, matrix: CMatrix) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.nrows());
        Self { dims, matrix }
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) amplitude vector.
    pub fn pure(dims: Vec<usize>, amplitudes: &[C64]) -> Result<Self> {
        let v = CVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero amplitude vector".into()));
        }
        let v = v / C64::new(norm, 0.0);
        Self::new(dims, &v * v.adjoint())
    }

    /// Pure computational basis state |digits⟩.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(&d, &n)| d >= n) {
            return Err(Error::Structure(format!("digits {digits:?} do not fit dims {dims:?}")));
        }
        let st = strides(&dims);
        let idx: usize = digits.iter().zip(&st).map(|(d, s)| d * s).sum();
        let side: usize = dims.iter().product();
        let mut m = CMatrix::zeros(side, side);
        m[(idx, idx)] = C64::new(1.0, 0.0);
        Self::new(dims, m)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let side: usize = dims.iter().product();
        Self::new(dims, CMatrix::identity(side, side).scale(1.0 / side as f64))
    }

    /// Seeded random state: G·G† normalized, G a complex Gaussian matrix
    /// with `rank` columns.
    pub fn random(dims: &[usize], rank: usize, seed: u64) -> Result<Self> {
        let side: usize = dims.iter().product();
        if rank == 0 || rank > side {
            return Err(Error::Param(format!("rank {rank} out of range 1..={side}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(side, rank, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        let m = hermitian_part(&m.unscale(tr));
        Self::new(dims.to_vec(), m)
    }

    /// Convex combination w·a + (1-w)·b of two states on the same dims.
    pub fn mix(a: &QState, b: &QState, weight: f64) -> Result<Self> {
        if a.dims != b.dims {
            return Err(Error::Structure(format!(
                "cannot mix dims {:?} and {:?}",
                a.dims, b.dims
            )));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::Param(format!("mixing weight {weight} outside [0, 1]")));
        }
        Self::new(a.dims.clone(), a.matrix.scale(weight) + b.matrix.scale(1.0 - weight))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn validate(&self) -> ValidityReport {
        validate(&self.dims, &self.matrix).expect("state is structurally sound")
    }

    /// Kronecker product; dims concatenate.
    pub fn tensor(&self, other: &QState) -> QState {
        let dims = self.dims.iter().chain(&other.dims).copied().collect();
        QState::from_parts(dims, self.matrix.kronecker(&other.matrix))
    }

    /// Reduced state on `keep`.
    pub fn partial_trace(&self, keep: &SubsetSpec) -> Result<QState> {
        keep.check_within(self.n_subsystems())?;
        let dims = keep.indices().iter().map(|&i| self.dims[i]).collect();
        Ok(QState::from_parts(
            dims,
            partial_trace_raw(&self.matrix, &self.dims, keep.indices()),
        ))
    }

    /// Relabels subsystems: new position `i` holds old subsystem `order[i]`.
    pub fn permute(&self, order: &[usize]) -> Result<QState> {
        let n = self.n_subsystems();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&o| o >= n || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::Structure(format!("{order:?} is not a permutation of 0..{n}")));
        }
        let new_dims: Vec<usize> = order.iter().map(|&o| self.dims[o]).collect();
        let old_st = strides(&self.dims);
        let new_st = strides(&new_dims);
        let side = self.side();
        let map: Vec<usize> = (0..side)
            .map(|idx| {
                (0..n)
                    .map(|i| ((idx / new_st[i]) % new_dims[i]) * old_st[order[i]])
                    .sum()
            })
            .collect();
        let m = CMatrix::from_fn(side, side, |r, c| self.matrix[(map[r], map[c])]);
        Ok(QState::from_parts(new_dims, m))
    }

    pub fn eig_hermitian(&self) -> HermitianEigen {
        eig_hermitian_matrix(&self.matrix).expect("valid states are Hermitian")
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        matrix_entropy(&self.matrix)
    }

    /// Entropy of the reduced state on `subset`.
    pub fn subsystem_entropy(&self, subset: &SubsetSpec) -> Result<f64> {
        subset.check_within(self.n_subsystems())?;
        if subset.len() == self.n_subsystems() {
            return Ok(self.entropy());
        }
        Ok(matrix_entropy(&partial_trace_raw(
            &self.matrix,
            &self.dims,
            subset.indices(),
        )))
    }

    /// Entropy of the subsystems in `positions`; the empty set has entropy 0.
    pub(crate) fn entropy_of(&self, positions: &[usize]) -> f64 {
        if positions.is_empty() {
            return 0.0;
        }
        let subset = SubsetSpec::of(positions).expect("non-empty");
        self.subsystem_entropy(&subset).expect("positions in range")
    }

    /// Largest entrywise |self - other|.
    pub fn max_abs_diff(&self, other: &QState) -> f64 {
        (&self.matrix - &other.matrix).iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

#[derive(Serialize, Deserialize)]
struct QStateWire {
    dims: Vec<usize>,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<QStateWire> for QState {
    type Error = Error;

    fn try_from(w: QStateWire) -> Result<Self> {
        let n = w.matrix.len();
        if w.matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Structure(
                "matrix rows must all have the same length as the row count".into(),
            ));
        }
        let m = CMatrix::from_fn(n, n, |r, c| {
            let [re, im] = w.matrix[r][c];
            C64::new(re, im)
        });
        QState::new(w.dims, m)
    }
}

impl From<QState> for QStateWire {
    fn from(s: QState) -> Self {
        let n = s.side();
        let matrix = (0..n)
            .map(|r| (0..n).map(|c| [s.matrix[(r, c)].re, s.matrix[(r, c)].im]).collect())
            .collect();
        QStateWire { dims: s.dims, matrix }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ket0() -> QState {
        QState::basis(vec![2], &[0]).unwrap()
    }

    fn bell() -> QState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        QState::pure(vec![2, 2], &[c(h), c(0.0), c(0.0), c(h)]).unwrap()
    }

    fn ghz() -> QState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut a = vec![c(0.0); 8];
        a[0] = c(h);
        a[7] = c(h);
        QState::pure(vec![2, 2, 2], &a).unwrap()
    }

    fn diag(vals: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(vals.len(), vals.iter().map(|&v| c(v))))
    }

    /// Binary entropy written out directly.
    fn binary_entropy(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&[2], ket0().matrix()).unwrap().pass());
        assert!(validate(&[2], &diag(&[0.5, 0.5])).unwrap().pass());
        let r = validate(&[2], &diag(&[0.5, 0.4])).unwrap();
        assert!(!r.pass());
        assert!(!r.unit_trace);
        assert_abs_diff_eq!(r.trace_deviation, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn validate_structural_errors() {
        assert!(matches!(
            validate(&[2, 2], &diag(&[1.0, 0.0])),
            Err(Error::Structure(_))
        ));
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(validate(&[2], &rect), Err(Error::Structure(_))));
        assert!(QState::new(vec![2], diag(&[-0.1, 1.1])).is_err());
    }

    #[test]
    fn tensor_examples() {
        let one = QState::basis(vec![2], &[1]).unwrap();
        let t = ket0().tensor(&one);
        assert_eq!(t.dims(), &[2, 2]);
        assert_eq!(t, QState::basis(vec![2, 2], &[0, 1]).unwrap());

        let mixed = QState::maximally_mixed(vec![2]).unwrap();
        let t = mixed.tensor(&mixed);
        assert!(t.max_abs_diff(&QState::maximally_mixed(vec![2, 2]).unwrap()) < 1e-15);

        let phi_ab = bell().tensor(&ket0());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut a = vec![c(0.0); 8];
        a[0] = c(h); // |000>
        a[6] = c(h); // |110>
        let expected = QState::pure(vec![2, 2, 2], &a).unwrap();
        assert!(phi_ab.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn partial_trace_examples() {
        let s = QState::basis(vec![2, 2], &[0, 1]).unwrap();
        let r = s.partial_trace(&SubsetSpec::of(&[0]).unwrap()).unwrap();
        assert!(r.max_abs_diff(&ket0()) < 1e-15);

        let r = bell().partial_trace(&SubsetSpec::of(&[0]).unwrap()).unwrap();
        assert!(r.max_abs_diff(&QState::maximally_mixed(vec![2]).unwrap()) < 1e-15);

        // Summing the traced index of the 8x8 GHZ projector by hand leaves
        // weight 1/2 on |00> and |11>.
        let r = ghz().partial_trace(&SubsetSpec::of(&[0, 1]).unwrap()).unwrap();
        assert!(r.max_abs_diff(&QState::new(vec![2, 2], diag(&[0.5, 0.0, 0.0, 0.5])).unwrap()) < 1e-15);

        assert!(SubsetSpec::new(vec![]).is_err());
        assert!(ghz().partial_trace(&SubsetSpec::of(&[3]).unwrap()).is_err());
    }

    #[test]
    fn eig_examples() {
        let e = QState::maximally_mixed(vec![2]).unwrap().eig_hermitian();
        assert_abs_diff_eq!(e.values[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 0.5, epsilon = 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QState::pure(vec![2], &[c(h), c(h)]).unwrap();
        let e = plus.eig_hermitian();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[0][0].re, h, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[0][1].re, h, epsilon = 1e-12);

        let w = QState::new(vec![2], diag(&[0.25, 0.75])).unwrap();
        assert_eq!(w.eig_hermitian().values.len(), 2);
        assert_abs_diff_eq!(w.eig_hermitian().values[0], 0.75, epsilon = 1e-12);

        let mut bad = diag(&[0.5, 0.5]);
        bad[(0, 1)] = c(0.3);
        assert!(eig_hermitian_matrix(&bad).is_err());
    }

    #[test]
    fn degenerate_eigenvectors_are_deterministic() {
        let e = QState::maximally_mixed(vec![2, 2]).unwrap().eig_hermitian();
        // Lexicographically largest first among the degenerate block.
        assert_abs_diff_eq!(e.vectors[0][0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.vectors[3][3].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(ket0().entropy(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            QState::maximally_mixed(vec![2]).unwrap().entropy(),
            1.0,
            epsilon = 1e-12
        );
        let w = QState::new(vec![2], diag(&[0.75, 0.25])).unwrap();
        assert_abs_diff_eq!(w.entropy(), binary_entropy(0.25), epsilon = 1e-12);
        assert_abs_diff_eq!(w.entropy(), 0.811_278_124_459_132_9, epsilon = 1e-12);
    }

    #[test]
    fn subsystem_entropy_examples() {
        let a = SubsetSpec::of(&[0]).unwrap();
        assert_abs_diff_eq!(bell().subsystem_entropy(&a).unwrap(), 1.0, epsilon = 1e-12);
        let ab = SubsetSpec::of(&[0, 1]).unwrap();
        assert_abs_diff_eq!(ghz().subsystem_entropy(&ab).unwrap(), 1.0, epsilon = 1e-12);
        let abc = SubsetSpec::of(&[0, 1, 2]).unwrap();
        let pure = QState::random(&[2, 2, 2], 1, 11).unwrap();
        assert_abs_diff_eq!(pure.subsystem_entropy(&abc).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn random_state_contract() {
        let s = QState::random(&[2], 1, 7).unwrap();
        assert!(s.validate().pass());
        assert_abs_diff_eq!(s.entropy(), 0.0, epsilon = 1e-9);

        let s = QState::random(&[2, 2, 2], 8, 1).unwrap();
        assert!(s.validate().pass());
        assert!(s.eig_hermitian().values[7] > 1e-6);

        let again = QState::random(&[2, 2, 2], 8, 1).unwrap();
        assert_eq!(s.matrix(), again.matrix());

        assert!(QState::random(&[2], 0, 1).is_err());
        assert!(QState::random(&[2], 3, 1).is_err());
    }

    #[test]
    fn permute_moves_factors() {
        let s = QState::basis(vec![2, 2, 2], &[1, 0, 0]).unwrap();
        let p = s.permute(&[1, 2, 0]).unwrap();
        assert_eq!(p, QState::basis(vec![2, 2, 2], &[0, 0, 1]).unwrap());
        assert!(s.permute(&[0, 0, 1]).is_err());

        let mixed_dims = QState::random(&[2, 3], 2, 5).unwrap();
        let p = mixed_dims.permute(&[1, 0]).unwrap();
        assert_eq!(p.dims(), &[3, 2]);
        let back = p.permute(&[1, 0]).unwrap();
        assert!(back.max_abs_diff(&mixed_dims) < 1e-15);
    }

    #[test]
    fn json_round_trip_and_validation_on_load() {
        let s = QState::random(&[2, 2], 3, 4).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: QState = serde_json::from_str(&text).unwrap();
        assert!(back.max_abs_diff(&s) < 1e-15);

        let bad = r#"{"dims":[2],"matrix":[[[0.5,0],[0,0]],[[0,0],[0.4,0]]]}"#;
        assert!(serde_json::from_str::<QState>(bad).is_err());
        let wrong_dims = r#"{"dims":[3],"matrix":[[[1,0],[0,0]],[[0,0],[0,0]]]}"#;
        assert!(serde_json::from_str::<QState>(wrong_dims).is_err());
    }
}
