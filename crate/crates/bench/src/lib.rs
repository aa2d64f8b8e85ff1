//! Fixtures shared by the benchmarks.

use mdiscord::{states, Family, QState, StateSpec};

pub fn werner_ghz(mu: f64) -> QState {
    states::build(&StateSpec::with_mu(Family::WernerGhz, mu)).expect("mu in range")
}

pub fn werner_w(mu: f64) -> QState {
    states::build(&StateSpec::with_mu(Family::WernerW, mu)).expect("mu in range")
}

/// Fixed angles for an `m`-qubit measured prefix.
pub fn angles(m: usize) -> Vec<f64> {
    (0..mdiscord::MeasParams::scalar_count(m))
        .map(|k| 0.1 + 0.37 * k as f64)
        .collect()
}
