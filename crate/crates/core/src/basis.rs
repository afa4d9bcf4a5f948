//! Measurement-basis circuits `B` with `B σ B† = Z_pivot`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    AllToAll,
    /// Nearest-neighbour chain `0 - 1 - ... - (n-1)`.
    Linear,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::AllToAll => "all-to-all",
            Topology::Linear => "linear",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-to-all" | "all_to_all" => Ok(Topology::AllToAll),
            "linear" => Ok(Topology::Linear),
            other => Err(Error::InvalidInput(format!("unknown topology '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledBasis {
    /// Gates of `B` in application order.
    pub circuit: Circuit,
    /// Qubit carrying `Z` after the transformation.
    pub pivot: usize,
    pub topology: Topology,
}

fn reject_identity(sigma: &PauliString) -> Result<()> {
    if sigma.is_identity() {
        return Err(Error::InvalidInput(
            "identity observable has no measurement basis; its expectation is 1".into(),
        ));
    }
    Ok(())
}

/// Rotates every `X` and `Y` factor onto `Z`: `X` by `H`, `Y` by `SDG` then
/// `H` (`S^3 = SDG`). Returns the layer and the resulting `I`/`Z` string.
pub fn compile_single_qubit_layer(sigma: &PauliString) -> Result<(Circuit, PauliString)> {
    reject_identity(sigma)?;
    let n = sigma.len();
    let mut layer = Circuit::new(n)?;
    let mut prime = Vec::with_capacity(n);
    for (q, &p) in sigma.word().iter().enumerate() {
        match p {
            Pauli::X => layer.push(Gate::H(q))?,
            Pauli::Y => {
                layer.push(Gate::Sdg(q))?;
                layer.push(Gate::H(q))?;
            }
            Pauli::I | Pauli::Z => {}
        }
        prime.push(if p == Pauli::I { Pauli::I } else { Pauli::Z });
    }
    Ok((layer, PauliString::new(prime)?))
}

/// Parity collected onto the lowest-index `Z` qubit by one CNOT from each
/// other `Z` qubit.
pub fn compile_all_to_all(sigma: &PauliString) -> Result<CompiledBasis> {
    let (mut circuit, prime) = compile_single_qubit_layer(sigma)?;
    let zs: Vec<usize> = (0..prime.len()).filter(|&q| prime.get(q) == Pauli::Z).collect();
    let pivot = zs[0];
    for &q in &zs[1..] {
        circuit.push(Gate::Cx(q, pivot))?;
    }
    Ok(CompiledBasis {
        circuit,
        pivot,
        topology: Topology::AllToAll,
    })
}

/// Parity swept down the chain onto qubit 0. Walking `i` from `m - 1` down
/// to 0, where `m` is the last `Z` qubit: a `Z` at `i` absorbs the parity
/// with `CX(i+1, i)`, an `I` at `i` moves it with `CX(i, i+1)` then
/// `CX(i+1, i)`.
pub fn compile_linear(sigma: &PauliString) -> Result<CompiledBasis> {
    let (mut circuit, prime) = compile_single_qubit_layer(sigma)?;
    let m = (0..prime.len())
        .rev()
        .find(|&q| prime.get(q) == Pauli::Z)
        .expect("non-identity string has a Z");
    for i in (0..m).rev() {
        if prime.get(i) == Pauli::I {
            circuit.push(Gate::Cx(i, i + 1))?;
        }
        circuit.push(Gate::Cx(i + 1, i))?;
    }
    Ok(CompiledBasis {
        circuit,
        pivot: 0,
        topology: Topology::Linear,
    })
}

pub fn compile(sigma: &PauliString, topology: Topology) -> Result<CompiledBasis> {
    match topology {
        Topology::AllToAll => compile_all_to_all(sigma),
        Topology::Linear => compile_linear(sigma),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gates;
    use proptest::prelude::*;

    fn conjugates_to_pivot(sigma: &str, b: &CompiledBasis) -> bool {
        let s: PauliString = sigma.parse().unwrap();
        let u = b.circuit.unitary().unwrap();
        let lhs = u.matmul(&s.matrix()).matmul(&u.adjoint());
        lhs.approx_eq(&PauliString::z_on(b.pivot, s.len()).matrix(), 1e-10)
    }

    #[test]
    fn layer_examples() {
        let (layer, prime) = compile_single_qubit_layer(&"XIZX".parse().unwrap()).unwrap();
        assert_eq!(layer.gates(), &[Gate::H(0), Gate::H(3)]);
        assert_eq!(prime.to_string(), "ZIZZ");
        let (layer, prime) = compile_single_qubit_layer(&"ZZZZ".parse().unwrap()).unwrap();
        assert!(layer.gates().is_empty());
        assert_eq!(prime.to_string(), "ZZZZ");
        let (layer, _) = compile_single_qubit_layer(&"YIII".parse().unwrap()).unwrap();
        assert_eq!(layer.gates(), &[Gate::Sdg(0), Gate::H(0)]);
        let r = gates::hadamard().matmul(&gates::phase_s().matmul(&gates::phase_s()).matmul(&gates::phase_s()));
        assert!(r
            .matmul(&gates::pauli_y())
            .matmul(&r.adjoint())
            .approx_eq(&gates::pauli_z(), 1e-15));
        assert!(compile_single_qubit_layer(&"III".parse().unwrap()).is_err());
    }

    #[test]
    fn all_to_all_examples() {
        let b = compile_all_to_all(&"XIZX".parse().unwrap()).unwrap();
        assert_eq!(
            b.circuit.gates(),
            &[Gate::H(0), Gate::H(3), Gate::Cx(2, 0), Gate::Cx(3, 0)]
        );
        assert_eq!(b.pivot, 0);
        assert!(conjugates_to_pivot("XIZX", &b));
        let b = compile_all_to_all(&"ZIII".parse().unwrap()).unwrap();
        assert!(b.circuit.gates().is_empty());
        let b = compile_all_to_all(&"IIYZ".parse().unwrap()).unwrap();
        assert_eq!(b.pivot, 2);
        assert!(conjugates_to_pivot("IIYZ", &b));
    }

    #[test]
    fn linear_examples() {
        let b = compile_linear(&"ZZ".parse().unwrap()).unwrap();
        assert_eq!(b.circuit.gates(), &[Gate::Cx(1, 0)]);
        let b = compile_linear(&"Z".parse().unwrap()).unwrap();
        assert!(b.circuit.gates().is_empty());
        let b = compile_linear(&"ZIZ".parse().unwrap()).unwrap();
        assert_eq!(b.circuit.gates(), &[Gate::Cx(1, 2), Gate::Cx(2, 1), Gate::Cx(1, 0)]);
        assert!(conjugates_to_pivot("ZIZ", &b));
        let b = compile_linear(&"IIXI".parse().unwrap()).unwrap();
        assert!(conjugates_to_pivot("IIXI", &b));
    }

    fn arb_sigma() -> impl Strategy<Value = String> {
        (1usize..=8)
            .prop_flat_map(|n| proptest::collection::vec(prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')], n))
            .prop_map(|v| v.into_iter().collect::<String>())
            .prop_filter("non-identity", |s| s.chars().any(|c| c != 'I'))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_strings_conjugate_to_pivot(sigma in arb_sigma()) {
            let s: PauliString = sigma.parse().unwrap();
            let n = s.len();
            for topo in [Topology::AllToAll, Topology::Linear] {
                let b = compile(&s, topo).unwrap();
                prop_assert!(conjugates_to_pivot(&sigma, &b));
                let cx: Vec<(usize, usize)> = b.circuit.gates().iter().filter_map(|g| match *g {
                    Gate::Cx(c, t) => Some((c, t)),
                    _ => None,
                }).collect();
                match topo {
                    Topology::AllToAll => prop_assert!(cx.len() < n.max(1)),
                    Topology::Linear => {
                        prop_assert!(cx.len() <= 2 * (n - 1));
                        prop_assert!(cx.iter().all(|&(c, t)| c.abs_diff(t) == 1));
                    }
                }
            }
        }
    }
}
