//! Pauli strings and real-weighted Pauli sums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{gates, kron_all, ComplexMatrix, C64, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => gates::pauli_i(),
            Pauli::X => gates::pauli_x(),
            Pauli::Y => gates::pauli_y(),
            Pauli::Z => gates::pauli_z(),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-qubit Paulis; position `i` acts on qubit `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(word: Vec<Pauli>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidInput("empty Pauli string".into()));
        }
        Ok(Self(word))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    /// `Z` on `qubit`, identity elsewhere.
    pub fn z_on(qubit: usize, n: usize) -> Self {
        let mut w = vec![Pauli::I; n];
        w[qubit] = Pauli::Z;
        Self(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn word(&self) -> &[Pauli] {
        &self.0
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.0[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// True when every factor is `I` or `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.0.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    /// Dense `2^n` matrix.
    pub fn matrix(&self) -> ComplexMatrix {
        let factors: Vec<ComplexMatrix> = self.0.iter().map(|p| p.matrix()).collect();
        kron_all(&factors)
    }

    /// Column action: returns `(j, phase)` with `P|i> = phase |j>`.
    pub fn apply_to_basis(&self, index: usize) -> (usize, C64) {
        let n = self.0.len();
        let mut out = index;
        let mut phase = ONE;
        for (q, &p) in self.0.iter().enumerate() {
            let shift = n - 1 - q;
            let b = (index >> shift) & 1;
            match p {
                Pauli::I => {}
                Pauli::X => out ^= 1 << shift,
                Pauli::Y => {
                    out ^= 1 << shift;
                    // Y|0> = i|1>, Y|1> = -i|0>
                    phase *= if b == 0 { I } else { -I };
                }
                Pauli::Z => {
                    if b == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        (out, phase)
    }

    /// `<psi|P|psi>` for a state vector.
    pub fn expectation_pure(&self, psi: &[C64]) -> f64 {
        let mut acc = ZERO;
        for (i, amp) in psi.iter().enumerate() {
            let (j, phase) = self.apply_to_basis(i);
            acc += psi[j].conj() * phase * amp;
        }
        acc.re
    }

    /// `Tr(P rho)` for a dense density matrix.
    pub fn expectation_dense(&self, rho: &ComplexMatrix) -> f64 {
        // Tr(P rho) = sum_i <i|P rho|i> = sum_i sum_j P[i][j] rho[j][i]; P is a signed permutation
        let mut acc = ZERO;
        for i in 0..rho.rows() {
            let (j, phase) = self.apply_to_basis(i);
            // P|i> = phase|j>  =>  P[j][i] = phase
            acc += phase * rho[(i, j)];
        }
        acc.re
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let word = s
            .trim()
            .chars()
            .enumerate()
            .map(|(i, c)| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidInput(format!("invalid Pauli character '{c}' at position {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(word)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Real-weighted sum of Pauli strings of one length.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let Some(n) = terms.first().map(|(_, p)| p.len()) else {
            return Err(Error::InvalidInput("observable has no terms".into()));
        };
        for (c, p) in &terms {
            if !c.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coefficient for {p}")));
            }
            if p.len() != n {
                return Err(Error::InvalidInput(format!(
                    "term {p} has length {}, expected {n}",
                    p.len()
                )));
            }
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn n_qubits(&self) -> usize {
        self.terms[0].1.len()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let dim = 1 << self.n_qubits();
        self.terms.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, (c, p)| {
            &acc + &p.matrix().scale_real(*c)
        })
    }

    /// Term-by-term expectation on a pure state.
    pub fn expectation_pure(&self, psi: &[C64]) -> f64 {
        self.terms.iter().map(|(c, p)| c * p.expectation_pure(psi)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arb_pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
        proptest::collection::vec(
            prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)],
            n,
        )
        .prop_map(|w| PauliString::new(w).unwrap())
    }

    fn random_state(rng: &mut impl Rng, n: usize) -> Vec<C64> {
        let mut psi: Vec<C64> = (0..1 << n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|z| *z /= norm);
        psi
    }

    #[test]
    fn parse_examples() {
        let p: PauliString = "XIZX".parse().unwrap();
        assert_eq!(p.word(), &[Pauli::X, Pauli::I, Pauli::Z, Pauli::X]);
        assert_eq!(p.weight(), 3);
        let id: PauliString = "IIII".parse().unwrap();
        assert!(id.is_identity());
        assert_eq!("ZY".parse::<PauliString>().unwrap().to_string(), "ZY");
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn observable_validation() {
        let a: PauliString = "ZI".parse().unwrap();
        let b: PauliString = "Z".parse().unwrap();
        assert!(Observable::new(vec![(1.0, a.clone()), (0.5, b)]).is_err());
        assert!(Observable::new(vec![(f64::NAN, a)]).is_err());
        assert!(Observable::new(vec![]).is_err());
    }

    #[test]
    fn observable_term_sum_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=5 {
            let terms = (0..6)
                .map(|_| {
                    let w = (0..n)
                        .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)])
                        .collect();
                    (rng.random_range(-2.0..2.0), PauliString::new(w).unwrap())
                })
                .collect();
            let obs = Observable::new(terms).unwrap();
            let psi = random_state(&mut rng, n);
            let direct = obs.matrix().apply(&psi);
            let expect: C64 = psi.iter().zip(&direct).map(|(a, b)| a.conj() * b).sum();
            assert!((obs.expectation_pure(&psi) - expect.re).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn text_round_trip(p in (1usize..8).prop_flat_map(arb_pauli_string)) {
            prop_assert_eq!(p.to_string().parse::<PauliString>().unwrap(), p);
        }

        #[test]
        fn dense_expectation_matches_matrix(p in arb_pauli_string(3), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = random_state(&mut rng, 3);
            let rho = ComplexMatrix::projector(&psi);
            let direct = p.matrix().matmul(&rho).trace().re;
            prop_assert!((p.expectation_dense(&rho) - direct).abs() < 1e-12);
            prop_assert!((p.expectation_pure(&psi) - direct).abs() < 1e-12);
        }
    }
}
