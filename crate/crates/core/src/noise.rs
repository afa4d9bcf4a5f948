//! Kraus channels and randomized noise models.
//!
//! Noise is attached to CNOT sites (one channel per unordered qubit pair,
//! applied after every CNOT on that pair) and to measurement sites (one
//! pre-measurement channel per qubit). Single-qubit gates are noiseless.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gates, kron, ComplexMatrix, C64, ZERO};
use crate::pauli::Pauli;

/// Completely positive map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<ComplexMatrix>,
    arity: usize,
}

fn check_rate(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::RateOutOfRange { name, value, lo, hi });
    }
    Ok(())
}

impl KrausChannel {
    /// Builds a channel, checking dimensions and trace preservation.
    pub fn new(ops: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let ch = Self::new_unchecked(ops)?;
        let dev = ch.trace_preservation_error();
        if dev > tol {
            return Err(Error::InvalidInput(format!(
                "Kraus operators are not trace preserving (deviation {dev:e})"
            )));
        }
        Ok(ch)
    }

    fn new_unchecked(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let arity = ops
            .first()
            .and_then(|k| k.qubit_count())
            .ok_or_else(|| Error::InvalidInput("channel needs square 2^k Kraus operators".into()))?;
        if ops.iter().any(|k| k.qubit_count() != Some(arity)) {
            return Err(Error::InvalidInput("Kraus operators differ in dimension".into()));
        }
        Ok(Self { ops, arity })
    }

    pub fn identity(arity: usize) -> Self {
        Self {
            ops: vec![ComplexMatrix::identity(1 << arity)],
            arity,
        }
    }

    /// Mixture of unitaries `sum_i w_i [U_i]`; zero-weight terms are dropped.
    fn mixture(terms: Vec<(f64, ComplexMatrix)>) -> Self {
        let arity = terms[0].1.qubit_count().expect("square qubit operator");
        let ops: Vec<ComplexMatrix> = terms
            .into_iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, u)| u.scale_real(w.sqrt()))
            .collect();
        if ops.is_empty() {
            return Self::identity(arity);
        }
        Self { ops, arity }
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    /// `max |sum K†K - I|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim();
        let sum = self
            .ops
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, k| &acc + &k.adjoint().matmul(k));
        sum.max_abs_diff(&ComplexMatrix::identity(d))
    }

    /// `max |sum K K† - I|`.
    pub fn unitality_error(&self) -> f64 {
        let d = self.dim();
        let sum = self
            .ops
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, k| &acc + &k.matmul(&k.adjoint()));
        sum.max_abs_diff(&ComplexMatrix::identity(d))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_error() <= tol
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.unitality_error() <= tol
    }

    /// Dual map `X -> sum K† X K`, as the channel with Kraus operators `K†`.
    /// Trace preserving only when `self` is unital.
    pub fn adjoint(&self) -> Self {
        Self {
            ops: self.ops.iter().map(ComplexMatrix::adjoint).collect(),
            arity: self.arity,
        }
    }

    /// `next ∘ self`: apply `self` first.
    pub fn then(&self, next: &KrausChannel) -> Result<Self> {
        if next.arity != self.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                found: next.arity,
            });
        }
        let mut ops = Vec::with_capacity(self.ops.len() * next.ops.len());
        for b in &next.ops {
            for a in &self.ops {
                ops.push(b.matmul(a));
            }
        }
        Ok(Self { ops, arity: self.arity })
    }

    /// Lifts a single-qubit channel onto position `slot` of a qubit pair.
    pub fn on_pair_slot(&self, slot: usize) -> Self {
        assert_eq!(self.arity, 1, "only single-qubit channels can be lifted");
        let id = ComplexMatrix::identity(2);
        let ops = self
            .ops
            .iter()
            .map(|k| if slot == 0 { kron(k, &id) } else { kron(&id, k) })
            .collect();
        Self { ops, arity: 2 }
    }

    /// Applies the channel to a `2^arity` matrix directly.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim();
        self.ops.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| {
            &acc + &k.matmul(rho).matmul(&k.adjoint())
        })
    }

    /// Superoperator on row-major vectorized matrices: `sum K ⊗ conj(K)`.
    pub fn superoperator(&self) -> ComplexMatrix {
        let d2 = self.dim() * self.dim();
        self.ops
            .iter()
            .fold(ComplexMatrix::zeros(d2, d2), |acc, k| &acc + &kron(k, &k.conj()))
    }
}

/// `(1 - 16 eps/15)[I] + (eps/15) sum_{P,Q} [P ⊗ Q]` over all 16 Pauli pairs.
pub fn depolarizing_2q(eps: f64) -> Result<KrausChannel> {
    check_rate("eps", eps, 0.0, 15.0 / 16.0)?;
    let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut terms = Vec::with_capacity(17);
    terms.push((1.0 - 16.0 * eps / 15.0, ComplexMatrix::identity(4)));
    for p in paulis {
        for q in paulis {
            terms.push((eps / 15.0, kron(&p.matrix(), &q.matrix())));
        }
    }
    Ok(KrausChannel::mixture(terms))
}

/// `(1 - eps)[I] + (eps/3)([X] + [Y] + [Z])`.
pub fn depolarizing_1q(eps: f64) -> Result<KrausChannel> {
    check_rate("eps", eps, 0.0, 0.75)?;
    Ok(KrausChannel::mixture(vec![
        (1.0 - eps, gates::pauli_i()),
        (eps / 3.0, gates::pauli_x()),
        (eps / 3.0, gates::pauli_y()),
        (eps / 3.0, gates::pauli_z()),
    ]))
}

/// `(1 - eta)[I] + eta [Z]`.
pub fn dephasing(eta: f64) -> Result<KrausChannel> {
    check_rate("eta", eta, 0.0, 1.0)?;
    Ok(KrausChannel::mixture(vec![
        (1.0 - eta, gates::pauli_i()),
        (eta, gates::pauli_z()),
    ]))
}

/// `(1 - p)[I] + p [X]`: classical readout flip when placed before a
/// Z-basis measurement.
pub fn bit_flip(p: f64) -> Result<KrausChannel> {
    check_rate("p", p, 0.0, 1.0)?;
    Ok(KrausChannel::mixture(vec![
        (1.0 - p, gates::pauli_i()),
        (p, gates::pauli_x()),
    ]))
}

/// Decay `|1> -> |0>` with probability `delta`.
pub fn amplitude_damping(delta: f64) -> Result<KrausChannel> {
    check_rate("delta", delta, 0.0, 1.0)?;
    let k0 = ComplexMatrix::from_real_diagonal(&[1.0, (1.0 - delta).sqrt()]);
    if delta == 0.0 {
        return Ok(KrausChannel {
            ops: vec![k0],
            arity: 1,
        });
    }
    let mut k1 = ComplexMatrix::zeros(2, 2);
    k1[(0, 1)] = C64::new(delta.sqrt(), 0.0);
    Ok(KrausChannel {
        ops: vec![k0, k1],
        arity: 1,
    })
}

fn prune(ch: KrausChannel) -> KrausChannel {
    let ops: Vec<ComplexMatrix> = ch
        .ops
        .into_iter()
        .filter(|k| k.data().iter().any(|&z| z != ZERO))
        .collect();
    KrausChannel { ops, arity: ch.arity }
}

/// CNOT error for the composite model:
/// `A_j(delta_j) ∘ A_i(delta_i) ∘ D_j(eta_j) ∘ D_i(eta_i) ∘ E_ij(eps_p)`,
/// with `i` the first and `j` the second qubit of the pair.
pub fn cnot_composite_channel(eps_p: f64, eta_i: f64, eta_j: f64, delta_i: f64, delta_j: f64) -> Result<KrausChannel> {
    let e = depolarizing_2q(eps_p)?;
    let di = dephasing(eta_i)?.on_pair_slot(0);
    let dj = dephasing(eta_j)?.on_pair_slot(1);
    let ai = amplitude_damping(delta_i)?.on_pair_slot(0);
    let aj = amplitude_damping(delta_j)?.on_pair_slot(1);
    Ok(prune(e.then(&di)?.then(&dj)?.then(&ai)?.then(&aj)?))
}

/// Error process attached to a qubit pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PairNoise {
    Depolarizing {
        eps: f64,
    },
    Composite {
        eps_p: f64,
        eta_i: f64,
        eta_j: f64,
        delta_i: f64,
        delta_j: f64,
    },
}

impl PairNoise {
    pub fn channel(&self) -> Result<KrausChannel> {
        match *self {
            PairNoise::Depolarizing { eps } => depolarizing_2q(eps),
            PairNoise::Composite {
                eps_p,
                eta_i,
                eta_j,
                delta_i,
                delta_j,
            } => cnot_composite_channel(eps_p, eta_i, eta_j, delta_i, delta_j),
        }
    }

    fn rates(&self) -> Vec<f64> {
        match *self {
            PairNoise::Depolarizing { eps } => vec![eps],
            PairNoise::Composite {
                eps_p,
                eta_i,
                eta_j,
                delta_i,
                delta_j,
            } => vec![eps_p, eta_i, eta_j, delta_i, delta_j],
        }
    }
}

/// Error process on a single qubit (state preparation or pre-measurement).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QubitNoise {
    /// Outcome flip with probability `p`.
    BitFlip {
        p: f64,
    },
    Depolarizing {
        eps: f64,
    },
    Dephasing {
        eta: f64,
    },
    AmplitudeDamping {
        delta: f64,
    },
    /// `A(delta) ∘ E(eps)`: depolarizing first, then amplitude damping.
    DampedDepolarizing {
        eps: f64,
        delta: f64,
    },
}

impl QubitNoise {
    pub fn channel(&self) -> Result<KrausChannel> {
        match *self {
            QubitNoise::BitFlip { p } => bit_flip(p),
            QubitNoise::Depolarizing { eps } => depolarizing_1q(eps),
            QubitNoise::Dephasing { eta } => dephasing(eta),
            QubitNoise::AmplitudeDamping { delta } => amplitude_damping(delta),
            QubitNoise::DampedDepolarizing { eps, delta } => depolarizing_1q(eps)?.then(&amplitude_damping(delta)?),
        }
    }

    fn rates(&self) -> Vec<f64> {
        match *self {
            QubitNoise::BitFlip { p } => vec![p],
            QubitNoise::Depolarizing { eps } => vec![eps],
            QubitNoise::Dephasing { eta } => vec![eta],
            QubitNoise::AmplitudeDamping { delta } => vec![delta],
            QubitNoise::DampedDepolarizing { eps, delta } => vec![eps, delta],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Two-qubit depolarizing gates and classical readout flips.
    Appc,
    /// Composite Pauli plus amplitude-damping gates and readout.
    Appe,
    /// Hand-written tables.
    Explicit,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "appc" => Ok(ModelKind::Appc),
            "appe" => Ok(ModelKind::Appe),
            "explicit" => Ok(ModelKind::Explicit),
            other => Err(Error::InvalidInput(format!("unknown model kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Appc => "appc",
            ModelKind::Appe => "appe",
            ModelKind::Explicit => "explicit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub qubits: [usize; 2],
    #[serde(flatten)]
    pub noise: PairNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitEntry {
    pub qubit: usize,
    #[serde(flatten)]
    pub noise: QubitNoise,
}

/// Sampled or explicit noise tables.
///
/// `pairs` is keyed by unordered pair stored as `[low, high]`; for composite
/// pair noise, `*_i` rates act on the low qubit. Missing entries mean
/// noiseless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Total error rate (`appc`) or per-site error rate (`appe`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Gate count the average rate was divided by (`appc`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_gates: Option<usize>,
    pub n_qubits: usize,
    #[serde(default)]
    pub pairs: Vec<PairEntry>,
    #[serde(default)]
    pub measurement: Vec<QubitEntry>,
    #[serde(default)]
    pub spam_init: Vec<QubitEntry>,
}

impl NoiseModel {
    /// A model without any noise.
    pub fn noiseless(n_qubits: usize) -> Self {
        Self {
            kind: ModelKind::Explicit,
            seed: None,
            eps: None,
            n_gates: None,
            n_qubits,
            pairs: Vec::new(),
            measurement: Vec::new(),
            spam_init: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: NoiseModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("noise model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        let mut seen = BTreeMap::new();
        for e in &self.pairs {
            let [i, j] = e.qubits;
            if i >= j || j >= n {
                return Err(Error::InvalidInput(format!(
                    "pair [{i}, {j}] must be ordered low < high < {n}"
                )));
            }
            if seen.insert((i, j), ()).is_some() {
                return Err(Error::InvalidInput(format!("duplicate pair [{i}, {j}]")));
            }
            check_all_rates(&e.noise.rates())?;
            e.noise.channel()?;
        }
        for list in [&self.measurement, &self.spam_init] {
            let mut seen = vec![false; n];
            for e in list.iter() {
                if e.qubit >= n || std::mem::replace(&mut seen[e.qubit], true) {
                    return Err(Error::InvalidInput(format!(
                        "qubit entry {} duplicated or out of range",
                        e.qubit
                    )));
                }
                check_all_rates(&e.noise.rates())?;
                e.noise.channel()?;
            }
        }
        Ok(())
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&PairNoise> {
        let key = [a.min(b), a.max(b)];
        self.pairs.iter().find(|e| e.qubits == key).map(|e| &e.noise)
    }

    /// Channel after a CNOT on `(a, b)` expressed on `[low, high]`.
    pub fn pair_channel(&self, a: usize, b: usize) -> Result<Option<KrausChannel>> {
        self.pair(a, b).map(PairNoise::channel).transpose()
    }

    pub fn measurement_noise(&self, q: usize) -> Option<&QubitNoise> {
        self.measurement.iter().find(|e| e.qubit == q).map(|e| &e.noise)
    }

    pub fn measurement_channel(&self, q: usize) -> Result<Option<KrausChannel>> {
        self.measurement_noise(q).map(QubitNoise::channel).transpose()
    }

    pub fn init_channel(&self, q: usize) -> Result<Option<KrausChannel>> {
        self.spam_init
            .iter()
            .find(|e| e.qubit == q)
            .map(|e| e.noise.channel())
            .transpose()
    }

    /// Copy with every entry touching `qubit` removed.
    pub fn without_qubit(&self, qubit: usize) -> Self {
        let mut m = self.clone();
        m.pairs.retain(|e| !e.qubits.contains(&qubit));
        m.measurement.retain(|e| e.qubit != qubit);
        m.spam_init.retain(|e| e.qubit != qubit);
        m
    }

    /// Copy with measurement errors removed.
    pub fn without_measurement_noise(&self) -> Self {
        let mut m = self.clone();
        m.measurement.clear();
        m
    }
}

fn check_all_rates(rates: &[f64]) -> Result<()> {
    for &r in rates {
        check_rate("rate", r, 0.0, 1.0)?;
    }
    Ok(())
}

fn uniform_around(rng: &mut ChaCha8Rng, nominal: f64) -> f64 {
    if nominal == 0.0 {
        return 0.0;
    }
    rng.random_range(0.5 * nominal..=1.5 * nominal)
}

/// Depolarizing model: average rate `eps_t / n_gates`, every pair and
/// readout rate drawn from `U[0.5 eps, 1.5 eps]`.
pub fn sample_model_appc(n: usize, n_gates: usize, eps_t: f64, seed: u64) -> Result<NoiseModel> {
    if n_gates == 0 {
        return Err(Error::InvalidInput("n_gates must be at least 1".into()));
    }
    if eps_t.is_nan() || eps_t < 0.0 {
        return Err(Error::InvalidInput(format!("eps_t must be non-negative, got {eps_t}")));
    }
    let eps = eps_t / n_gates as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let r = uniform_around(&mut rng, eps);
            pairs.push(PairEntry {
                qubits: [i, j],
                noise: PairNoise::Depolarizing { eps: r },
            });
        }
    }
    let measurement = (0..n)
        .map(|q| QubitEntry {
            qubit: q,
            noise: QubitNoise::BitFlip {
                p: uniform_around(&mut rng, eps),
            },
        })
        .collect();
    let model = NoiseModel {
        kind: ModelKind::Appc,
        seed: Some(seed),
        eps: Some(eps_t),
        n_gates: Some(n_gates),
        n_qubits: n,
        pairs,
        measurement,
        spam_init: Vec::new(),
    };
    model.validate()?;
    Ok(model)
}

/// Composite model with per-site error rate `eps` split evenly between
/// Pauli and amplitude-damping errors.
pub fn sample_model_appe(n: usize, eps: f64, seed: u64) -> Result<NoiseModel> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidInput(format!("eps must be non-negative, got {eps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let eps_p = uniform_around(&mut rng, eps / 6.0);
            let eta_i = uniform_around(&mut rng, eps / 6.0);
            let eta_j = uniform_around(&mut rng, eps / 6.0);
            let delta_i = uniform_around(&mut rng, eps / 2.0);
            let delta_j = uniform_around(&mut rng, eps / 2.0);
            pairs.push(PairEntry {
                qubits: [i, j],
                noise: PairNoise::Composite {
                    eps_p,
                    eta_i,
                    eta_j,
                    delta_i,
                    delta_j,
                },
            });
        }
    }
    let mut measurement = Vec::with_capacity(n);
    for q in 0..n {
        let e = uniform_around(&mut rng, 0.75 * eps);
        let delta = uniform_around(&mut rng, eps);
        measurement.push(QubitEntry {
            qubit: q,
            noise: QubitNoise::DampedDepolarizing { eps: e, delta },
        });
    }
    let model = NoiseModel {
        kind: ModelKind::Appe,
        seed: Some(seed),
        eps: Some(eps),
        n_gates: None,
        n_qubits: n,
        pairs,
        measurement,
        spam_init: Vec::new(),
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use proptest::prelude::*;

    fn random_density(seed: u64, dim: usize) -> ComplexMatrix {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..dim * dim)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let g = ComplexMatrix::from_vec(dim, dim, data).unwrap();
        let rho = g.matmul(&g.adjoint());
        let t = rho.trace().re;
        rho.scale_real(1.0 / t)
    }

    #[test]
    fn depolarizing_2q_examples() {
        let ch = depolarizing_2q(0.0).unwrap();
        assert_eq!(ch.kraus_ops().len(), 1);
        assert_eq!(ch.kraus_ops()[0], ComplexMatrix::identity(4));
        assert!(depolarizing_2q(0.3).unwrap().is_trace_preserving(1e-12));
        let full = depolarizing_2q(15.0 / 16.0).unwrap();
        for seed in 0..5 {
            let out = full.apply(&random_density(seed, 4));
            assert!(out.approx_eq(&ComplexMatrix::identity(4).scale_real(0.25), 1e-12));
        }
        assert!(depolarizing_2q(0.95).is_err());
        assert!(depolarizing_2q(-0.01).is_err());
    }

    #[test]
    fn depolarizing_1q_examples() {
        assert_eq!(depolarizing_1q(0.0).unwrap(), KrausChannel::identity(1));
        let full = depolarizing_1q(0.75).unwrap();
        let out = full.apply(&random_density(1, 2));
        assert!(out.approx_eq(&ComplexMatrix::identity(2).scale_real(0.5), 1e-12));
        // X and Y conjugations move |0><0| to |1><1|, Z leaves it
        let zero = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let out = depolarizing_1q(0.3).unwrap().apply(&zero);
        assert!(out.approx_eq(&ComplexMatrix::from_real_diagonal(&[0.8, 0.2]), 1e-15));
        assert!(depolarizing_1q(0.8).is_err());
    }

    #[test]
    fn dephasing_examples() {
        assert_eq!(dephasing(0.0).unwrap(), KrausChannel::identity(1));
        let rho = random_density(4, 2);
        let out = dephasing(0.5).unwrap().apply(&rho);
        assert!(out[(0, 1)].norm() < 1e-15 && out[(1, 0)].norm() < 1e-15);
        let plus = ComplexMatrix::identity(2).scale_real(0.5);
        let mut plus = plus;
        plus[(0, 1)] = C64::new(0.5, 0.0);
        plus[(1, 0)] = C64::new(0.5, 0.0);
        let out = dephasing(0.1).unwrap().apply(&plus);
        assert!((out[(0, 1)].re - 0.4).abs() < 1e-15);
    }

    #[test]
    fn amplitude_damping_examples() {
        assert_eq!(amplitude_damping(0.0).unwrap(), KrausChannel::identity(1));
        let one = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let out = amplitude_damping(1.0).unwrap().apply(&one);
        assert!(out.approx_eq(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0]), 1e-15));
        let ch = amplitude_damping(0.37).unwrap();
        assert!(ch.is_trace_preserving(1e-15));
        assert!(!ch.is_unital(1e-3));
        // dual of amplitude damping is unital
        assert!(ch.adjoint().is_unital(1e-15));
        assert!(!ch.adjoint().is_trace_preserving(1e-3));
        // matches the Pauli form (I+Z)/2 + sqrt(1-d)(I-Z)/2 and sqrt(d)(X+iY)/2
        let d: f64 = 0.37;
        let i2 = ComplexMatrix::identity(2);
        let z = gates::pauli_z();
        let k0 = &(&i2 + &z).scale_real(0.5) + &(&i2 - &z).scale_real(0.5 * (1.0 - d).sqrt());
        let k1 = (&gates::pauli_x() + &gates::pauli_y().scale(crate::linalg::I)).scale_real(0.5 * d.sqrt());
        assert!(ch.kraus_ops()[0].approx_eq(&k0, 1e-15));
        assert!(ch.kraus_ops()[1].approx_eq(&k1, 1e-15));
    }

    #[test]
    fn unital_channels() {
        assert!(depolarizing_2q(0.2).unwrap().is_unital(1e-12));
        assert!(dephasing(0.3).unwrap().is_unital(1e-12));
        assert!(depolarizing_2q(0.2).unwrap().adjoint().is_trace_preserving(1e-12));
        assert!(dephasing(0.3).unwrap().adjoint().is_trace_preserving(1e-12));
    }

    #[test]
    fn composite_examples() {
        let ch = cnot_composite_channel(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(ch.kraus_ops().len(), 1);
        assert!(ch.kraus_ops()[0].approx_eq(&ComplexMatrix::identity(4), 0.0));
        let ch = cnot_composite_channel(0.01, 0.02, 0.03, 0.04, 0.05).unwrap();
        assert!(ch.is_trace_preserving(1e-12));
        // only delta_i: |11> decays to |01> with weight delta_i
        let ch = cnot_composite_channel(0.0, 0.0, 0.0, 0.2, 0.0).unwrap();
        let out = ch.apply(&ComplexMatrix::from_real_diagonal(&[0.0, 0.0, 0.0, 1.0]));
        assert!(out.approx_eq(&ComplexMatrix::from_real_diagonal(&[0.0, 0.2, 0.0, 0.8]), 1e-15));
    }

    #[test]
    fn composite_order_matches_explicit_product() {
        // apply factors one at a time to a state and compare
        let rho = random_density(9, 4);
        let ch = cnot_composite_channel(0.05, 0.1, 0.02, 0.3, 0.15).unwrap();
        let mut step = depolarizing_2q(0.05).unwrap().apply(&rho);
        step = dephasing(0.1).unwrap().on_pair_slot(0).apply(&step);
        step = dephasing(0.02).unwrap().on_pair_slot(1).apply(&step);
        step = amplitude_damping(0.3).unwrap().on_pair_slot(0).apply(&step);
        step = amplitude_damping(0.15).unwrap().on_pair_slot(1).apply(&step);
        assert!(ch.apply(&rho).approx_eq(&step, 1e-14));
    }

    #[test]
    fn superoperator_matches_kraus_application() {
        let ch = cnot_composite_channel(0.05, 0.1, 0.02, 0.3, 0.15).unwrap();
        let rho = random_density(10, 4);
        let s = ch.superoperator();
        let v = s.apply(rho.data());
        let direct = ch.apply(&rho);
        for (a, b) in v.iter().zip(direct.data()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn appc_examples() {
        let m = sample_model_appc(4, 16, 0.0, 3).unwrap();
        assert!(m.pairs.iter().all(|e| e.noise == PairNoise::Depolarizing { eps: 0.0 }));
        assert!(m.measurement.iter().all(|e| e.noise == QubitNoise::BitFlip { p: 0.0 }));

        let m = sample_model_appc(4, 16, 0.1, 42).unwrap();
        assert_eq!(m.pairs.len(), 6);
        assert_eq!(m.measurement.len(), 4);
        let in_band = |r: f64| (0.003125..=0.009375).contains(&r);
        for e in &m.pairs {
            let PairNoise::Depolarizing { eps } = e.noise else {
                panic!()
            };
            assert!(in_band(eps), "{eps}");
        }
        for e in &m.measurement {
            let QubitNoise::BitFlip { p } = e.noise else { panic!() };
            assert!(in_band(p), "{p}");
        }
        assert_eq!(m, sample_model_appc(4, 16, 0.1, 42).unwrap());
        assert_ne!(m, sample_model_appc(4, 16, 0.1, 43).unwrap());
        assert!(sample_model_appc(4, 0, 0.1, 1).is_err());
    }

    #[test]
    fn appe_examples() {
        let m = sample_model_appe(4, 0.0, 1).unwrap();
        for e in &m.pairs {
            assert!(e.noise.channel().unwrap().kraus_ops()[0].approx_eq(&ComplexMatrix::identity(4), 0.0));
        }
        let m = sample_model_appe(5, 0.02, 7).unwrap();
        for e in &m.pairs {
            let PairNoise::Composite {
                eps_p,
                eta_i,
                eta_j,
                delta_i,
                delta_j,
            } = e.noise
            else {
                panic!()
            };
            for r in [eps_p, eta_i, eta_j] {
                assert!((0.5 * 0.02 / 6.0..=1.5 * 0.02 / 6.0).contains(&r));
            }
            for d in [delta_i, delta_j] {
                assert!((0.005..=0.015).contains(&d), "{d}");
            }
        }
        for e in &m.measurement {
            let QubitNoise::DampedDepolarizing { eps, delta } = e.noise else {
                panic!()
            };
            assert!((0.0075..=0.0225).contains(&eps));
            assert!((0.01..=0.03).contains(&delta));
        }
        assert_eq!(m, sample_model_appe(5, 0.02, 7).unwrap());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = sample_model_appe(3, 0.02, 99).unwrap();
        let back = NoiseModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let m = sample_model_appc(3, 9, 0.1, 5).unwrap();
        assert_eq!(NoiseModel::from_json(&m.to_json()).unwrap(), m);
        let text = m.to_json();
        assert!(text.contains("\"kind\": \"appc\""));
        assert!(text.contains("\"type\": \"depolarizing\""));
    }

    #[test]
    fn json_validation() {
        let bad = r#"{"kind":"explicit","n_qubits":2,"pairs":[{"qubits":[1,0],"type":"depolarizing","eps":0.1}]}"#;
        assert!(NoiseModel::from_json(bad).is_err());
        let bad = r#"{"kind":"explicit","n_qubits":2,"measurement":[{"qubit":0,"type":"bit_flip","p":1.5}]}"#;
        assert!(NoiseModel::from_json(bad).is_err());
        let ok = r#"{"kind":"explicit","n_qubits":2,"pairs":[{"qubits":[0,1],"type":"depolarizing","eps":0.1}],
                    "spam_init":[{"qubit":1,"type":"amplitude_damping","delta":0.1}]}"#;
        let m = NoiseModel::from_json(ok).unwrap();
        assert!(m.pair_channel(1, 0).unwrap().is_some());
        assert!(m.init_channel(1).unwrap().is_some());
        assert!(m.measurement_channel(0).unwrap().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_channels_are_trace_preserving(
            e in 0.0..0.9f64, a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64, d in 0.0..1.0f64
        ) {
            prop_assert!(cnot_composite_channel(e, a, b, c, d).unwrap().is_trace_preserving(1e-12));
            prop_assert!(depolarizing_1q(0.75 * a).unwrap().is_trace_preserving(1e-12));
            prop_assert!(amplitude_damping(c).unwrap().is_trace_preserving(1e-12));
            prop_assert!(amplitude_damping(c).unwrap().adjoint().is_unital(1e-12));
        }
    }

    #[test]
    fn bit_flip_confusion() {
        let zero = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let out = bit_flip(0.1).unwrap().apply(&zero);
        assert!((out[(1, 1)] - ONE.scale(0.1)).norm() < 1e-15);
    }
}
