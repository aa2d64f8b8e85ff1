//! Named state families.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{CMatrix, QState, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// μ|GHZ⟩⟨GHZ| + (1 − μ)·I/8
    WernerGhz,
    /// μ|W⟩⟨W| + (1 − μ)·I/8
    WernerW,
    /// μ|Φ+⟩⟨Φ+| on AB + (1 − μ)|Φ+⟩⟨Φ+| on AC, the idle qubit in |0⟩
    BellMixture,
    /// μ|000⟩⟨000| + (1 − μ)|+++⟩⟨+++|
    ClassicalQuantumMix,
    /// (|00⟩⟨00| + |1+⟩⟨1+|)/2 ⊗ |0⟩⟨0|
    CcExample,
    Ghz,
    WState,
    /// A fixed mixed qubit state on every site.
    Product,
    Explicit,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::WernerGhz,
        Family::WernerW,
        Family::BellMixture,
        Family::ClassicalQuantumMix,
        Family::CcExample,
        Family::Ghz,
        Family::WState,
        Family::Product,
        Family::Explicit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::WernerGhz => "werner_ghz",
            Family::WernerW => "werner_w",
            Family::BellMixture => "bell_mixture",
            Family::ClassicalQuantumMix => "classical_quantum_mix",
            Family::CcExample => "cc_example",
            Family::Ghz => "ghz",
            Family::WState => "w_state",
            Family::Product => "product",
            Family::Explicit => "explicit",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::Param(format!("unknown state family '{name}'")))
    }

    pub fn takes_mu(self) -> bool {
        matches!(
            self,
            Family::WernerGhz | Family::WernerW | Family::BellMixture | Family::ClassicalQuantumMix
        )
    }

    /// Whether `qubits` may change the number of sites.
    fn takes_qubits(self) -> bool {
        matches!(self, Family::Ghz | Family::WState | Family::Product)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_matrix: Option<QState>,
    /// Number of qubits for ghz, w_state and product (default 3).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
}

impl StateSpec {
    pub fn family(family: Family) -> Self {
        Self {
            family,
            mu: None,
            explicit_matrix: None,
            qubits: None,
        }
    }

    pub fn with_mu(family: Family, mu: f64) -> Self {
        Self {
            mu: Some(mu),
            ..Self::family(family)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.family.takes_mu(), self.mu) {
            (true, None) => {
                return Err(Error::Param(format!("{} needs mu", self.family.name())));
            }
            (false, Some(_)) => {
                return Err(Error::Param(format!("{} takes no mu", self.family.name())));
            }
            (true, Some(mu)) if !(0.0..=1.0).contains(&mu) => {
                return Err(Error::Param(format!("mu {mu} outside [0, 1]")));
            }
            _ => {}
        }
        if (self.family == Family::Explicit) != self.explicit_matrix.is_some() {
            return Err(Error::Param(
                "explicit_matrix is required for, and only for, the explicit family".into(),
            ));
        }
        match self.qubits {
            Some(_) if !self.family.takes_qubits() => Err(Error::Param(format!(
                "{} has a fixed number of qubits",
                self.family.name()
            ))),
            Some(n) if n < 2 => Err(Error::Param(format!("need at least 2 qubits, got {n}"))),
            _ => Ok(()),
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn ket(n: usize, terms: &[(usize, f64)]) -> Vec<C64> {
    let mut a = vec![c(0.0); 1 << n];
    for &(i, amp) in terms {
        a[i] += c(amp);
    }
    a
}

pub fn ghz(n: usize) -> Result<QState> {
    QState::pure(
        vec![2; n],
        &ket(n, &[(0, FRAC_1_SQRT_2), ((1 << n) - 1, FRAC_1_SQRT_2)]),
    )
}

/// Equal superposition of the single-excitation basis states.
pub fn w_state(n: usize) -> Result<QState> {
    let amp = 1.0 / (n as f64).sqrt();
    let terms: Vec<(usize, f64)> = (0..n).map(|k| (1 << k, amp)).collect();
    QState::pure(vec![2; n], &ket(n, &terms))
}

fn product(n: usize) -> Result<QState> {
    let site = CMatrix::from_row_slice(2, 2, &[c(0.7), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.3)]);
    let one = QState::new(vec![2], site)?;
    let mut s = one.clone();
    for _ in 1..n {
        s = s.tensor(&one);
    }
    Ok(s)
}

fn werner(pure: QState, mu: f64) -> Result<QState> {
    let mixed = QState::maximally_mixed(pure.dims().to_vec())?;
    QState::mix(&pure, &mixed, mu)
}

pub fn build(spec: &StateSpec) -> Result<QState> {
    spec.validate()?;
    let mu = spec.mu.unwrap_or(0.0);
    let n = spec.qubits.unwrap_or(3);
    let h = FRAC_1_SQRT_2;
    match spec.family {
        Family::WernerGhz => werner(ghz(3)?, mu),
        Family::WernerW => werner(w_state(3)?, mu),
        Family::BellMixture => {
            // Index bits are A B C, A most significant.
            let ab = QState::pure(vec![2; 3], &ket(3, &[(0b000, h), (0b110, h)]))?;
            let ac = QState::pure(vec![2; 3], &ket(3, &[(0b000, h), (0b101, h)]))?;
            QState::mix(&ab, &ac, mu)
        }
        Family::ClassicalQuantumMix => {
            let zero = QState::basis(vec![2; 3], &[0, 0, 0])?;
            let plus = QState::pure(vec![2; 3], &[c(1.0); 8])?;
            QState::mix(&zero, &plus, mu)
        }
        Family::CcExample => {
            let a = QState::basis(vec![2, 2], &[0, 0])?;
            let b = QState::pure(vec![2, 2], &[c(0.0), c(0.0), c(h), c(h)])?;
            Ok(QState::mix(&a, &b, 0.5)?.tensor(&QState::basis(vec![2], &[0])?))
        }
        Family::Ghz => ghz(n),
        Family::WState => w_state(n),
        Family::Product => product(n),
        Family::Explicit => Ok(spec.explicit_matrix.clone().expect("validated")),
    }
}
