//! Conditional entropies, mutual informations and the discord terms built
//! from them, plus the stage-by-stage flux ledger of a measurement.
//!
//! Tripartite functions label subsystems 0, 1, 2 as A, B, C. J quantities
//! are evaluated on the state after the A measurement, K quantities after
//! the A and B measurements.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{apply_tree, MeasurementTree};
use crate::qstate::{QState, SubsetSpec};

/// Tolerance for the internal consistency checks in [`flux_report`].
pub const IDENTITY_TOL: f64 = 1e-9;

fn require_subsystems(state: &QState, n: usize) -> Result<()> {
    if state.n_subsystems() != n {
        return Err(Error::Structure(format!(
            "expected {n} subsystems, state has {}",
            state.n_subsystems()
        )));
    }
    Ok(())
}

fn require_depth(tree: &MeasurementTree, depth: usize) -> Result<()> {
    if tree.depth() < depth {
        return Err(Error::Tree(format!(
            "tree measures {} subsystems, {depth} needed",
            tree.depth()
        )));
    }
    Ok(())
}

/// S(target | given) = S(target ∪ given) − S(given).
pub fn cond_entropy(state: &QState, target: &SubsetSpec, given: &SubsetSpec) -> Result<f64> {
    let n = state.n_subsystems();
    target.check_within(n)?;
    given.check_within(n)?;
    if !target.is_disjoint(given) {
        return Err(Error::Subset(format!(
            "target {:?} overlaps given {:?}",
            target.indices(),
            given.indices()
        )));
    }
    let joint = target.union(given);
    Ok(state.entropy_of(joint.indices()) - state.entropy_of(given.indices()))
}

fn cond(state: &QState, target: &[usize], given: &[usize]) -> f64 {
    let mut joint: Vec<usize> = target.iter().chain(given).copied().collect();
    joint.sort_unstable();
    state.entropy_of(&joint) - state.entropy_of(given)
}

/// Σ_paths p · S(ρ_path) on the measured subsystems together with `target`,
/// over the first `depth` levels of `tree`.
///
/// The measured subsystems are pure in every branch, so this is the
/// average entropy of `target` conditioned on the outcomes.
pub fn measured_cond_entropy(state: &QState, tree: &MeasurementTree, depth: usize, target: &SubsetSpec) -> Result<f64> {
    target.check_within(state.n_subsystems())?;
    if target.indices().iter().any(|&i| i < depth) {
        return Err(Error::Subset(format!(
            "target {:?} overlaps the {depth} measured subsystems",
            target.indices()
        )));
    }
    let measured = apply_tree(state, tree, depth)?;
    let mut keep: Vec<usize> = (0..depth).collect();
    keep.extend_from_slice(target.indices());
    Ok(measured
        .branches
        .iter()
        .filter_map(|b| b.post_state.as_ref().map(|s| b.probability * s.entropy_of(&keep)))
        .sum())
}

/// Entropy of the next party conditioned on the first `depth` measurements.
///
/// The next party is subsystem `depth`, except at the tree's full depth
/// where it is every remaining subsystem.
pub fn cond_entropy_measured(state: &QState, tree: &MeasurementTree, depth: usize) -> Result<f64> {
    let n = state.n_subsystems();
    if depth >= n {
        return Err(Error::Param(format!("depth {depth} leaves no unmeasured subsystem")));
    }
    let target = if depth == tree.depth() {
        SubsetSpec::range(depth, n)?
    } else {
        SubsetSpec::of(&[depth])?
    };
    measured_cond_entropy(state, tree, depth, &target)
}

/// I(a : b) = S(a) + S(b) − S(ab).
pub fn mutual_info(state: &QState, a: &SubsetSpec, b: &SubsetSpec) -> Result<f64> {
    let n = state.n_subsystems();
    a.check_within(n)?;
    b.check_within(n)?;
    if !a.is_disjoint(b) {
        return Err(Error::Subset(format!(
            "{:?} and {:?} overlap",
            a.indices(),
            b.indices()
        )));
    }
    Ok(cmi(state, a.indices(), b.indices(), &[]))
}

/// I(a : b | given) = S(a | given) − S(a | b ∪ given).
pub fn cond_mutual_info(state: &QState, a: &SubsetSpec, b: &SubsetSpec, given: &SubsetSpec) -> Result<f64> {
    let n = state.n_subsystems();
    for s in [a, b, given] {
        s.check_within(n)?;
    }
    if !a.is_disjoint(b) || !a.is_disjoint(given) || !b.is_disjoint(given) {
        return Err(Error::Subset(format!(
            "need disjoint subsets, got {:?}, {:?} given {:?}",
            a.indices(),
            b.indices(),
            given.indices()
        )));
    }
    Ok(cmi(state, a.indices(), b.indices(), given.indices()))
}

fn cmi(state: &QState, a: &[usize], b: &[usize], given: &[usize]) -> f64 {
    let bg: Vec<usize> = {
        let mut v: Vec<usize> = b.iter().chain(given).copied().collect();
        v.sort_unstable();
        v
    };
    cond(state, a, given) - cond(state, a, &bg)
}

/// I(A : B : C) = I(A : C) − I(A : C | B) for a three-subsystem state.
pub fn tripartite_mutual_info(state: &QState) -> Result<f64> {
    require_subsystems(state, 3)?;
    Ok(MutualInfos::of(state).abc)
}

/// The conditional and tripartite mutual informations of one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutualInfos {
    /// I(A : B | C)
    pub ab_c: f64,
    /// I(A : C | B)
    pub ac_b: f64,
    /// I(B : C | A)
    pub bc_a: f64,
    /// I(A : B : C)
    pub abc: f64,
}

impl MutualInfos {
    fn of(state: &QState) -> Self {
        let ac_b = cmi(state, &[0], &[2], &[1]);
        Self {
            ab_c: cmi(state, &[0], &[1], &[2]),
            ac_b,
            bc_a: cmi(state, &[1], &[2], &[0]),
            abc: cmi(state, &[0], &[2], &[]) - ac_b,
        }
    }
}

/// The I, J and K families of a three-subsystem state under `tree`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MutualInfoFamilies {
    pub i: MutualInfos,
    pub j: MutualInfos,
    pub k: MutualInfos,
}

pub fn measured_mutual_infos(state: &QState, tree: &MeasurementTree) -> Result<MutualInfoFamilies> {
    require_subsystems(state, 3)?;
    require_depth(tree, 2)?;
    let m1 = apply_tree(state, tree, 1)?.post_state;
    let m2 = apply_tree(state, tree, 2)?.post_state;
    Ok(MutualInfoFamilies {
        i: MutualInfos::of(state),
        j: MutualInfos::of(&m1),
        k: MutualInfos::of(&m2),
    })
}

/// d = S(rest | Π^block) − S(rest | block) with `block` the leading
/// measured subsystems, measured by the first `block.len()` levels of
/// `tree`.
pub fn d_unminimized(
    state: &QState,
    tree: &MeasurementTree,
    measured_block: &SubsetSpec,
    rest: &SubsetSpec,
) -> Result<f64> {
    let m = measured_block.len();
    if m == 0 || measured_block.indices() != SubsetSpec::range(0, m)?.indices() {
        return Err(Error::Subset(format!(
            "measured block {:?} must be the leading subsystems",
            measured_block.indices()
        )));
    }
    let measured = measured_cond_entropy(state, tree, m, rest)?;
    Ok(measured - cond_entropy(state, rest, measured_block)?)
}

/// (Δ_{A;B|C}, Δ_{A;C|B}) = (I − J)(A : B | C), (I − J)(A : C | B).
pub fn delta_cond_discord(state: &QState, tree: &MeasurementTree) -> Result<(f64, f64)> {
    require_subsystems(state, 3)?;
    let m1 = apply_tree(state, tree, 1)?.post_state;
    let (i, j) = (MutualInfos::of(state), MutualInfos::of(&m1));
    Ok((i.ab_c - j.ab_c, i.ac_b - j.ac_b))
}

/// Δ_{B;C|Π^A} = J(B : C | A) − K(B : C | A).
pub fn delta_post_discord(state: &QState, tree: &MeasurementTree) -> Result<f64> {
    let f = measured_mutual_infos(state, tree)?;
    Ok(f.j.bc_a - f.k.bc_a)
}

/// Δ_{A:B:C} = I(A : B : C) − J(A : B : C). Either sign is possible.
pub fn delta_monogamy(state: &QState, tree: &MeasurementTree) -> Result<f64> {
    require_subsystems(state, 3)?;
    let m1 = apply_tree(state, tree, 1)?.post_state;
    Ok(MutualInfos::of(state).abc - MutualInfos::of(&m1).abc)
}

/// The four terms that add up to the tripartite discord objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    #[serde(rename = "Delta_AB_C")]
    pub delta_ab_c: f64,
    #[serde(rename = "Delta_AC_B")]
    pub delta_ac_b: f64,
    #[serde(rename = "Delta_BC_PiA")]
    pub delta_bc_pia: f64,
    #[serde(rename = "Delta_ABC")]
    pub delta_abc: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.delta_ab_c + self.delta_ac_b + self.delta_bc_pia + self.delta_abc
    }
}

pub fn decomposition(state: &QState, tree: &MeasurementTree) -> Result<Decomposition> {
    let f = measured_mutual_infos(state, tree)?;
    Ok(Decomposition {
        delta_ab_c: f.i.ab_c - f.j.ab_c,
        delta_ac_b: f.i.ac_b - f.j.ac_b,
        delta_bc_pia: f.j.bc_a - f.k.bc_a,
        delta_abc: f.i.abc - f.j.abc,
    })
}

/// Which point of the measurement sequence a report describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pre,
    AfterFirst,
    AfterSecond,
}

impl Stage {
    /// Column suffix used in flattened output.
    pub fn suffix(self) -> &'static str {
        match self {
            Stage::Pre => "pre",
            Stage::AfterFirst => "m1",
            Stage::AfterSecond => "m2",
        }
    }
}

/// Entropies and mutual informations at one stage, and the changes that
/// led to it from the previous stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub stage: Stage,
    pub ledger: BTreeMap<String, f64>,
    pub deltas: BTreeMap<String, f64>,
}

pub const TRIPARTITE_KEYS: [&str; 15] = [
    "S_A_BC",
    "S_B_AC",
    "S_C_AB",
    "I_AB_C",
    "I_AC_B",
    "I_BC_A",
    "I_ABC",
    "d_A_BC",
    "Delta_AB_C",
    "Delta_AC_B",
    "Delta_BC_PiA",
    "Delta_ABC",
    "Delta_BPiAC",
    "dS_PiA",
    "dS_B_PiA",
];

pub const BIPARTITE_KEYS: [&str; 5] = ["S_A_B", "S_B_A", "I_AB", "d_A_B", "dS_PiA"];

fn tripartite_ledger(s: &QState) -> BTreeMap<String, f64> {
    let mi = MutualInfos::of(s);
    [
        ("S_A_BC", cond(s, &[0], &[1, 2])),
        ("S_B_AC", cond(s, &[1], &[0, 2])),
        ("S_C_AB", cond(s, &[2], &[0, 1])),
        ("I_AB_C", mi.ab_c),
        ("I_AC_B", mi.ac_b),
        ("I_BC_A", mi.bc_a),
        ("I_ABC", mi.abc),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn bipartite_ledger(s: &QState) -> BTreeMap<String, f64> {
    [
        ("S_A_B", cond(s, &[0], &[1])),
        ("S_B_A", cond(s, &[1], &[0])),
        ("I_AB", cmi(s, &[0], &[1], &[])),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

struct Checker {
    worst: Option<(String, f64)>,
}

impl Checker {
    fn new() -> Self {
        Self { worst: None }
    }

    fn eq(&mut self, name: &str, lhs: f64, rhs: f64) {
        let v = (lhs - rhs).abs();
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v > IDENTITY_TOL && self.worst.as_ref().is_none_or(|(_, w)| v > *w) {
            self.worst = Some((name.to_string(), v));
        }
    }

    fn finish(self) -> Result<()> {
        match self.worst {
            None => Ok(()),
            Some((name, violation)) => Err(Error::Identity { name, violation }),
        }
    }
}

fn change(after: &BTreeMap<String, f64>, before: &BTreeMap<String, f64>, key: &str) -> f64 {
    after[key] - before[key]
}

/// Ledger at each stage of the measurement sequence.
///
/// Two-subsystem states give `pre` and `after_first`; three-subsystem
/// states also give `after_second` (the tree must then measure A and B).
/// Every discord term is computed from its mutual-information definition
/// and from its unminimized-discord form, and each stage-to-stage ledger
/// change is checked against the term it should equal; any disagreement
/// beyond [`IDENTITY_TOL`] is returned as [`Error::Identity`].
pub fn flux_report(state: &QState, tree: &MeasurementTree) -> Result<Vec<FluxReport>> {
    match state.n_subsystems() {
        2 => bipartite_flux(state, tree),
        3 => tripartite_flux(state, tree),
        n => Err(Error::Structure(format!(
            "flux reports need 2 or 3 subsystems, state has {n}"
        ))),
    }
}

fn bipartite_flux(state: &QState, tree: &MeasurementTree) -> Result<Vec<FluxReport>> {
    require_depth(tree, 1)?;
    let m1 = apply_tree(state, tree, 1)?.post_state;
    let (l0, l1) = (bipartite_ledger(state), bipartite_ledger(&m1));
    let d = measured_cond_entropy(state, tree, 1, &SubsetSpec::of(&[1])?)? - cond(state, &[1], &[0]);
    let ds = m1.entropy_of(&[0]) - state.entropy_of(&[0]);

    let mut c = Checker::new();
    c.eq("S_A_B change", change(&l1, &l0, "S_A_B"), d + ds);
    c.eq("S_B_A change", change(&l1, &l0, "S_B_A"), d);
    c.eq("I_AB change", change(&l1, &l0, "I_AB"), -d);
    c.finish()?;

    let deltas = [("d_A_B", d), ("dS_PiA", ds)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok(vec![
        FluxReport {
            stage: Stage::Pre,
            ledger: l0,
            deltas: BTreeMap::new(),
        },
        FluxReport {
            stage: Stage::AfterFirst,
            ledger: l1,
            deltas,
        },
    ])
}

fn tripartite_flux(state: &QState, tree: &MeasurementTree) -> Result<Vec<FluxReport>> {
    require_depth(tree, 2)?;
    let m1 = apply_tree(state, tree, 1)?.post_state;
    let m2 = apply_tree(state, tree, 2)?.post_state;
    let (l0, l1, l2) = (tripartite_ledger(state), tripartite_ledger(&m1), tripartite_ledger(&m2));
    let (i, j, k) = (MutualInfos::of(state), MutualInfos::of(&m1), MutualInfos::of(&m2));

    // Definitions as drops in mutual information.
    let delta_ab_c = i.ab_c - j.ab_c;
    let delta_ac_b = i.ac_b - j.ac_b;
    let delta_abc = i.abc - j.abc;
    let delta_bc_pia = j.bc_a - k.bc_a;
    let delta_bpiac = j.abc - k.abc;
    let delta_bpia_c = j.ab_c - k.ab_c;

    // Unminimized discords. After the A measurement, S(X | Π^A) of the
    // original state is S(X | A) of the measured one; likewise for B given
    // the A outcomes.
    let d_a = |x: &[usize]| cond(&m1, x, &[0]) - cond(state, x, &[0]);
    let d_a_bc = d_a(&[1, 2]);
    let d_a_b = d_a(&[1]);
    let d_a_c = d_a(&[2]);
    let d_b = |x: &[usize]| cond(&m2, x, &[1]) - cond(&m1, x, &[1]);
    let d_b_pia_c = d_b(&[0, 2]);
    let d_b_pia = d_b(&[0]);
    let d_b_c = d_b(&[2]);

    let ds_pia = m1.entropy_of(&[0]) - state.entropy_of(&[0]);
    let ds_b_pia = cond(&m2, &[1], &[0]) - cond(&m1, &[1], &[0]);

    let mut c = Checker::new();
    c.eq("Delta_AB_C d-form", delta_ab_c, d_a_bc - d_a_c);
    c.eq("Delta_AC_B d-form", delta_ac_b, d_a_bc - d_a_b);
    c.eq("Delta_ABC d-form", delta_abc, d_a_b + d_a_c - d_a_bc);
    c.eq("d_A_BC sum", d_a_bc, delta_ab_c + delta_ac_b + delta_abc);
    c.eq("Delta_BC_PiA d-form", delta_bc_pia, d_b_pia_c - d_b_pia);
    c.eq("Delta_BPiAC d-form", delta_bpiac, d_b_pia + d_b_c - d_b_pia_c);
    c.eq("Delta_BPiA_C d-form", delta_bpia_c, d_b_pia_c - d_b_c);

    c.eq("S_A_BC m1", change(&l1, &l0, "S_A_BC"), d_a_bc + ds_pia);
    c.eq("S_B_AC m1", change(&l1, &l0, "S_B_AC"), delta_ab_c);
    c.eq("S_C_AB m1", change(&l1, &l0, "S_C_AB"), delta_ac_b);
    c.eq("I_AB_C m1", change(&l1, &l0, "I_AB_C"), -delta_ab_c);
    c.eq("I_AC_B m1", change(&l1, &l0, "I_AC_B"), -delta_ac_b);
    c.eq("I_BC_A m1", change(&l1, &l0, "I_BC_A"), delta_abc);
    c.eq("I_ABC m1", change(&l1, &l0, "I_ABC"), -delta_abc);

    c.eq("S_A_BC m2", change(&l2, &l1, "S_A_BC"), delta_bpia_c);
    c.eq("S_B_AC m2", change(&l2, &l1, "S_B_AC"), delta_bc_pia + ds_b_pia);
    c.eq("S_C_AB m2", change(&l2, &l1, "S_C_AB"), delta_bc_pia);
    c.eq("I_BC_A m2", change(&l2, &l1, "I_BC_A"), -delta_bc_pia);
    c.eq("I_AC_B m2", change(&l2, &l1, "I_AC_B"), delta_bpiac);
    c.eq("I_ABC m2", change(&l2, &l1, "I_ABC"), -delta_bpiac);
    c.finish()?;

    let named =
        |pairs: &[(&str, f64)]| -> BTreeMap<String, f64> { pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect() };
    Ok(vec![
        FluxReport {
            stage: Stage::Pre,
            ledger: l0,
            deltas: BTreeMap::new(),
        },
        FluxReport {
            stage: Stage::AfterFirst,
            ledger: l1,
            deltas: named(&[
                ("d_A_BC", d_a_bc),
                ("Delta_AB_C", delta_ab_c),
                ("Delta_AC_B", delta_ac_b),
                ("Delta_ABC", delta_abc),
                ("dS_PiA", ds_pia),
            ]),
        },
        FluxReport {
            stage: Stage::AfterSecond,
            ledger: l2,
            deltas: named(&[
                ("Delta_BC_PiA", delta_bc_pia),
                ("Delta_BPiAC", delta_bpiac),
                ("dS_B_PiA", ds_b_pia),
            ]),
        },
    ])
}

/// Flattens reports into `KEY_stage` columns in canonical order. Keys with
/// no value at a stage (deltas before any measurement, for instance) map
/// to `None`.
pub fn flatten_reports(reports: &[FluxReport]) -> Vec<(String, Option<f64>)> {
    let bipartite = reports.first().is_some_and(|r| r.ledger.contains_key("S_A_B"));
    let keys: &[&str] = if bipartite { &BIPARTITE_KEYS } else { &TRIPARTITE_KEYS };
    let mut out = Vec::new();
    for r in reports {
        for key in keys {
            let value = r.ledger.get(*key).or_else(|| r.deltas.get(*key)).copied();
            out.push((format!("{key}_{}", r.stage.suffix()), value));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{tree_from_params, MeasParams, MeasurementTree};
    use crate::qstate::C64;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> QState {
        let h = FRAC_1_SQRT_2;
        QState::pure(vec![2, 2], &[c(h), c(0.0), c(0.0), c(h)]).unwrap()
    }

    fn ghz() -> QState {
        let mut a = vec![c(0.0); 8];
        a[0] = c(FRAC_1_SQRT_2);
        a[7] = c(FRAC_1_SQRT_2);
        QState::pure(vec![2, 2, 2], &a).unwrap()
    }

    fn classical_pair() -> QState {
        let a = QState::basis(vec![2, 2], &[0, 0]).unwrap();
        let b = QState::basis(vec![2, 2], &[1, 1]).unwrap();
        QState::mix(&a, &b, 0.5).unwrap()
    }

    fn subset(i: &[usize]) -> SubsetSpec {
        SubsetSpec::of(i).unwrap()
    }

    fn z(m: usize) -> MeasurementTree {
        MeasurementTree::computational(vec![2; m]).unwrap()
    }

    fn random_tree(m: usize, n: usize, seed: u64) -> MeasurementTree {
        let flat: Vec<f64> = (0..MeasParams::scalar_count(m))
            .map(|k| ((seed as f64 + 1.0) * 12.9898 + k as f64 * 78.233).sin() * 4.0)
            .collect();
        let p = MeasParams::from_flat(m, &flat).unwrap();
        tree_from_params(&vec![2; n], &SubsetSpec::range(0, m).unwrap(), &p).unwrap()
    }

    #[test]
    fn conditional_entropy_examples() {
        assert_abs_diff_eq!(
            cond_entropy(&bell(), &subset(&[1]), &subset(&[0])).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        let mixed = QState::maximally_mixed(vec![2, 2]).unwrap();
        assert_abs_diff_eq!(
            cond_entropy(&mixed, &subset(&[1]), &subset(&[0])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let a = QState::random(&[2], 2, 3).unwrap();
        let b = QState::random(&[2], 2, 4).unwrap();
        let ab = a.tensor(&b);
        assert_abs_diff_eq!(
            cond_entropy(&ab, &subset(&[1]), &subset(&[0])).unwrap(),
            b.entropy(),
            epsilon = 1e-12
        );
        assert!(cond_entropy(&ab, &subset(&[0, 1]), &subset(&[0])).is_err());
    }

    #[test]
    fn measured_conditional_entropy_examples() {
        assert_abs_diff_eq!(cond_entropy_measured(&bell(), &z(1), 1).unwrap(), 0.0, epsilon = 1e-12);
        let x = tree_from_params(&[2, 2], &subset(&[0]), &MeasParams::uniform(1, FRAC_PI_4, 0.0)).unwrap();
        let zero = QState::basis(vec![2, 2], &[0, 0]).unwrap();
        assert_abs_diff_eq!(cond_entropy_measured(&zero, &x, 1).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cond_entropy_measured(&ghz(), &z(2), 1).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn measured_entropy_matches_post_state_form() {
        for seed in 0..10 {
            let s = QState::random(&[2, 2, 2], 3, seed).unwrap();
            let t = random_tree(2, 3, seed);
            let m1 = apply_tree(&s, &t, 1).unwrap().post_state;
            let branch = measured_cond_entropy(&s, &t, 1, &subset(&[1])).unwrap();
            assert_abs_diff_eq!(branch, m1.entropy_of(&[0, 1]) - m1.entropy_of(&[0]), epsilon = 1e-10);
        }
    }

    #[test]
    fn mutual_information_examples() {
        let (a, b) = (subset(&[0]), subset(&[1]));
        assert_abs_diff_eq!(mutual_info(&bell(), &a, &b).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mutual_info(&classical_pair(), &a, &b).unwrap(), 1.0, epsilon = 1e-12);
        let p = QState::random(&[2], 2, 1)
            .unwrap()
            .tensor(&QState::random(&[2], 2, 2).unwrap());
        assert_abs_diff_eq!(mutual_info(&p, &a, &b).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conditional_mutual_information_examples() {
        let ab = QState::random(&[2, 2], 2, 5).unwrap();
        let s = ab.tensor(&QState::random(&[2], 2, 6).unwrap());
        let (a, b, cc) = (subset(&[0]), subset(&[1]), subset(&[2]));
        assert_abs_diff_eq!(
            cond_mutual_info(&s, &a, &b, &cc).unwrap(),
            mutual_info(&ab, &a, &b).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(cond_mutual_info(&ghz(), &b, &cc, &a).unwrap(), 1.0, epsilon = 1e-12);
        let p = QState::random(&[2], 1, 1)
            .unwrap()
            .tensor(&QState::random(&[2], 2, 2).unwrap())
            .tensor(&QState::random(&[2], 2, 3).unwrap());
        assert_abs_diff_eq!(cond_mutual_info(&p, &a, &b, &cc).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tripartite_mutual_information_examples() {
        // Pure GHZ: I(A:C) = 1 + 1 - 1 and I(A:C|B) = S_AB + S_BC - S_ABC - S_B = 1 + 1 - 0 - 1.
        assert_abs_diff_eq!(tripartite_mutual_info(&ghz()).unwrap(), 0.0, epsilon = 1e-12);
        // Classical mixture of |000> and |111>: I(A:C) = 1, I(A:C|B) = 1 + 1 - 1 - 1.
        let cl = QState::mix(
            &QState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap(),
            &QState::basis(vec![2, 2, 2], &[1, 1, 1]).unwrap(),
            0.5,
        )
        .unwrap();
        assert_abs_diff_eq!(tripartite_mutual_info(&cl).unwrap(), 1.0, epsilon = 1e-12);
        let ab = QState::random(&[2, 2], 3, 7).unwrap();
        let s = ab.tensor(&QState::random(&[2], 2, 8).unwrap());
        assert_abs_diff_eq!(tripartite_mutual_info(&s).unwrap(), 0.0, epsilon = 1e-12);
        assert!(tripartite_mutual_info(&bell()).is_err());
    }

    #[test]
    fn j_and_k_on_ghz() {
        let f = measured_mutual_infos(&ghz(), &z(2)).unwrap();
        assert_abs_diff_eq!(f.j.bc_a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.k.bc_a, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn i_j_k_agree_on_measured_states() {
        for seed in 0..5 {
            let t = random_tree(2, 3, seed + 40);
            let s = apply_tree(&QState::random(&[2, 2, 2], 4, seed).unwrap(), &t, 2)
                .unwrap()
                .post_state;
            let f = measured_mutual_infos(&s, &t).unwrap();
            for (x, y) in [(f.i, f.j), (f.i, f.k)] {
                assert_abs_diff_eq!(x.ab_c, y.ab_c, epsilon = 1e-9);
                assert_abs_diff_eq!(x.ac_b, y.ac_b, epsilon = 1e-9);
                assert_abs_diff_eq!(x.bc_a, y.bc_a, epsilon = 1e-9);
                assert_abs_diff_eq!(x.abc, y.abc, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn unminimized_discord_examples() {
        assert_abs_diff_eq!(
            d_unminimized(&bell(), &z(1), &subset(&[0]), &subset(&[1])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            d_unminimized(&ghz(), &z(2), &subset(&[0]), &subset(&[1, 2])).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let p = QState::random(&[2], 2, 1)
            .unwrap()
            .tensor(&QState::random(&[2], 2, 2).unwrap());
        let t = random_tree(1, 2, 3);
        assert_abs_diff_eq!(
            d_unminimized(&p, &t, &subset(&[0]), &subset(&[1])).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert!(d_unminimized(&ghz(), &z(2), &subset(&[1]), &subset(&[2])).is_err());
    }

    #[test]
    fn ghz_deltas_under_z_tree() {
        let (ab_c, ac_b) = delta_cond_discord(&ghz(), &z(2)).unwrap();
        assert_abs_diff_eq!(ab_c, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ac_b, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(delta_monogamy(&ghz(), &z(2)).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(delta_post_discord(&ghz(), &z(2)).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn deltas_reduce_on_product_placements() {
        let ab = QState::random(&[2, 2], 2, 9).unwrap();
        let s = ab.tensor(&QState::random(&[2], 2, 10).unwrap());
        let t = random_tree(2, 3, 11);
        let (ab_c, _) = delta_cond_discord(&s, &t).unwrap();
        let root = tree_from_params(
            &[2, 2],
            &subset(&[0]),
            &MeasParams {
                nodes: vec![MeasParams::from_flat(2, &t_flat(&t)).unwrap().nodes[0].clone()],
            },
        )
        .unwrap();
        let d_ab = d_unminimized(&ab, &root, &subset(&[0]), &subset(&[1])).unwrap();
        assert_abs_diff_eq!(ab_c, d_ab, epsilon = 1e-10);
        assert_abs_diff_eq!(delta_monogamy(&s, &t).unwrap(), 0.0, epsilon = 1e-10);

        let bc = bell();
        let s = QState::random(&[2], 2, 12).unwrap().tensor(&bc);
        assert!(delta_post_discord(&s, &z(2)).unwrap() > 0.5);

        let p = QState::random(&[2], 2, 1)
            .unwrap()
            .tensor(&QState::random(&[2], 2, 2).unwrap())
            .tensor(&QState::random(&[2], 2, 3).unwrap());
        let d = decomposition(&p, &t).unwrap();
        for v in [d.delta_ab_c, d.delta_ac_b, d.delta_bc_pia, d.delta_abc] {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
        }
    }

    fn t_flat(t: &MeasurementTree) -> Vec<f64> {
        // Recover angles from the stored kets: ket0 = (cos θ, e^{iφ} sin θ).
        t.nodes()
            .flat_map(|(_, b)| {
                let v = &b.vectors()[0];
                let theta = v[1].norm().atan2(v[0].norm());
                let phi = (v[1] * v[0].conj()).arg();
                [theta, phi]
            })
            .collect()
    }

    #[test]
    fn bell_flux() {
        let r = flux_report(&bell(), &z(1)).unwrap();
        assert_eq!(r.len(), 2);
        assert_abs_diff_eq!(r[1].deltas["d_A_B"], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].deltas["dS_PiA"], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].ledger["S_A_B"], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].ledger["S_A_B"], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].ledger["I_AB"], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].ledger["I_AB"], 1.0, epsilon = 1e-12);
        let flat = flatten_reports(&r);
        assert_eq!(flat.len(), 10);
        assert_eq!(flat[0].0, "S_A_B_pre");
        assert_eq!(flat[3], ("d_A_B_pre".to_string(), None));
    }

    #[test]
    fn ghz_flux() {
        let r = flux_report(&ghz(), &z(2)).unwrap();
        assert_eq!(r.len(), 3);
        let m1 = &r[1].deltas;
        assert_abs_diff_eq!(m1["Delta_AB_C"], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m1["Delta_AC_B"], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m1["Delta_ABC"], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m1["d_A_BC"], 1.0, epsilon = 1e-12);
        let flat = flatten_reports(&r);
        assert_eq!(flat.len(), 45);
        assert_eq!(flat.last().unwrap().0, "dS_B_PiA_m2");
    }

    #[test]
    fn flux_of_measured_state_is_flat() {
        let t = random_tree(2, 3, 77);
        let s = apply_tree(&QState::random(&[2, 2, 2], 3, 1).unwrap(), &t, 2)
            .unwrap()
            .post_state;
        let r = flux_report(&s, &t).unwrap();
        for rep in &r {
            for v in rep.deltas.values() {
                assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn flux_identities_hold_on_random_inputs() {
        for seed in 0..20 {
            let s = QState::random(&[2, 2, 2], 1 + (seed as usize % 8), seed).unwrap();
            flux_report(&s, &random_tree(2, 3, seed + 100)).unwrap();
            let b = QState::random(&[2, 2], 1 + (seed as usize % 4), seed).unwrap();
            flux_report(&b, &random_tree(1, 2, seed + 200)).unwrap();
        }
    }
}
