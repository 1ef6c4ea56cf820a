//! Parameter-counting lower bounds on entangler counts, and the size of the
//! configuration space.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::circuit::GateKind;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    StatePrep,
    UnitarySynthesis,
}

impl TaskKind {
    pub fn short_name(self) -> &'static str {
        match self {
            TaskKind::StatePrep => "sp",
            TaskKind::UnitarySynthesis => "u",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" | "state" | "state_prep" | "state-prep" => Ok(TaskKind::StatePrep),
            "u" | "unitary" | "unitary_synthesis" | "unitary-synthesis" => Ok(TaskKind::UnitarySynthesis),
            other => Err(Error::InvalidArgument(format!("unknown task `{other}`"))),
        }
    }
}

fn ceil_div(num: u128, den: u128) -> u128 {
    num.div_ceil(den)
}

/// Smallest entangler count whose free parameters can cover every target.
///
/// Targets carry `2^n − 1 − n` (states) or `4^n − 1 − 3n` (unitaries) free
/// parameters beyond those of the first rotation layer. A CNOT adds 2
/// independent parameters for state preparation and 4 for unitary synthesis;
/// the B gate commutes with no single-qubit rotation and adds 3 and 6.
pub fn lower_bound(task: TaskKind, kind: GateKind, n: usize) -> Result<u64> {
    // 4^n must fit the u128 arithmetic below
    if !(2..=60).contains(&n) {
        return Err(Error::InvalidQubitCount(n));
    }
    let n128 = n as u128;
    let (free, per_gate) = match task {
        TaskKind::StatePrep => ((1u128 << n) - 1 - n128, 2u128),
        TaskKind::UnitarySynthesis => ((1u128 << (2 * n)) - 1 - 3 * n128, 4u128),
    };
    let per_gate = match kind {
        GateKind::Cnot => per_gate,
        GateKind::B => per_gate / 2 * 3,
    };
    Ok(ceil_div(free, per_gate) as u64)
}

/// `(n(n−1)/2)^N`, exactly.
pub fn config_count(n: usize, size: usize) -> BigUint {
    BigUint::from(n * n.saturating_sub(1) / 2).pow(size as u32)
}

/// Base-10 order of magnitude, i.e. `floor(log10(x))`, for display of huge
/// counts.
pub fn order_of_magnitude(x: &BigUint) -> usize {
    x.to_string().len().saturating_sub(1)
}

/// `x` in `m.me<k>` form with two significant digits.
pub fn scientific(x: &BigUint) -> String {
    let digits = x.to_string();
    if digits.len() <= 2 {
        return digits;
    }
    let lead: u32 = digits[..3].parse().expect("decimal digits");
    let mut mant = (lead + 5) / 10;
    let mut exp = digits.len() - 1;
    if mant >= 100 {
        mant /= 10;
        exp += 1;
    }
    format!("{}.{}e{}", mant / 10, mant % 10, exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        use GateKind::*;
        use TaskKind::*;
        let sp: Vec<u64> = (2..=8).map(|n| lower_bound(StatePrep, Cnot, n).unwrap()).collect();
        assert_eq!(sp, vec![1, 2, 6, 13, 29, 60, 124]);
        let u: Vec<u64> = (2..=5).map(|n| lower_bound(UnitarySynthesis, Cnot, n).unwrap()).collect();
        assert_eq!(u, vec![3, 14, 61, 252]);
        assert_eq!(lower_bound(UnitarySynthesis, B, 4).unwrap(), 41);
        let spb: Vec<u64> = (2..=4).map(|n| lower_bound(StatePrep, B, n).unwrap()).collect();
        assert_eq!(spb, vec![1, 2, 4]);
        assert_eq!(lower_bound(UnitarySynthesis, B, 2).unwrap(), 2);
        assert_eq!(lower_bound(UnitarySynthesis, B, 3).unwrap(), 9);
        assert!(lower_bound(StatePrep, Cnot, 1).is_err());
    }

    #[test]
    fn b_bound_never_exceeds_cnot_bound() {
        for n in 2..=20 {
            for task in [TaskKind::StatePrep, TaskKind::UnitarySynthesis] {
                assert!(lower_bound(task, GateKind::B, n).unwrap() <= lower_bound(task, GateKind::Cnot, n).unwrap());
            }
        }
    }

    #[test]
    fn counts() {
        assert_eq!(config_count(3, 2), BigUint::from(9u32));
        assert_eq!(config_count(4, 6), BigUint::from(46656u32));
        assert_eq!(config_count(2, 3), BigUint::from(1u32));
        for n in 2..=8 {
            assert_eq!(config_count(n, 0), BigUint::from(1u32));
        }
        assert_eq!(order_of_magnitude(&config_count(5, 13)), 13);
        assert_eq!(order_of_magnitude(&config_count(8, 124)), 179);
        assert_eq!(scientific(&config_count(4, 6)), "4.7e4");
        assert_eq!(scientific(&config_count(3, 14)), "4.8e6");
    }
}
