//! Dense density-matrix simulation, dual-map propagation and the two
//! intermediate-measurement pipelines.
//!
//! A state on `n` qubits is a `2^n x 2^n` row-major matrix: memory is
//! `16 * 4^n` bytes and each gate costs `O(4^n)`, so a circuit with `n_G`
//! gates costs `O(n_G 4^n)`. Thirteen qubits (1 GiB) is the practical
//! ceiling.
//!
//! Circuits are lowered to a [`Program`] of local operations. Noiseless
//! single-qubit gates are buffered per qubit and folded into the next
//! operation touching that qubit, and a CNOT is fused with its noise channel
//! into one 16x16 superoperator.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{conditional_ancilla_state, gates, kron, ComplexMatrix, Tolerances, C64, ONE, ZERO};
use crate::noise::{KrausChannel, NoiseModel};
use crate::pauli::PauliString;

/// Density matrix on a qubit register.
///
/// Dual states produced by [`run_dual`] under non-unital noise may have trace
/// different from one; nothing here renormalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn zero_state(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        let mut matrix = ComplexMatrix::zeros(dim, dim);
        matrix[(0, 0)] = ONE;
        Self { n_qubits, matrix }
    }

    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let n_qubits = qubits_of_len(psi.len())?;
        Ok(Self {
            n_qubits,
            matrix: ComplexMatrix::projector(psi),
        })
    }

    /// Wraps a Hermitian matrix of qubit-register dimension.
    pub fn from_matrix(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let n_qubits = matrix
            .qubit_count()
            .ok_or_else(|| Error::InvalidInput("density matrix must be 2^n square".into()))?;
        let dev = matrix.hermitian_deviation();
        if dev > tol.hermitian {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        // Hermitian: Tr(rho^2) = sum |rho_ij|^2
        self.matrix.data().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(P rho)`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: p.len(),
            });
        }
        Ok(p.expectation_dense(&self.matrix))
    }

    /// `Tr(A rho)` for a dense operator.
    pub fn expectation_of(&self, a: &ComplexMatrix) -> Result<f64> {
        if a.rows() != self.dim() || !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.rows(),
            });
        }
        Ok(trace_of_product(a, &self.matrix).re)
    }
}

fn qubits_of_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidInput(format!("length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

/// `Tr(A B)` without forming the product.
fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let d = a.rows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Elementary operation of a lowered circuit. Two-qubit operators are
/// expressed on `(a, b)` with `a` the more significant local index.
#[derive(Debug, Clone, PartialEq)]
enum Op {
    Unitary1 { q: usize, u: [C64; 4] },
    Unitary2 { a: usize, b: usize, u: Vec<C64> },
    Super1 { q: usize, s: Vec<C64> },
    Super2 { a: usize, b: usize, s: Vec<C64> },
    Project { q: usize, outcome: usize },
}

impl Op {
    fn dual(&self) -> Op {
        match self {
            Op::Unitary1 { q, u } => Op::Unitary1 {
                q: *q,
                u: [u[0].conj(), u[2].conj(), u[1].conj(), u[3].conj()],
            },
            Op::Unitary2 { a, b, u } => Op::Unitary2 {
                a: *a,
                b: *b,
                u: adjoint_flat(u, 4),
            },
            Op::Super1 { q, s } => Op::Super1 {
                q: *q,
                s: adjoint_flat(s, 4),
            },
            Op::Super2 { a, b, s } => Op::Super2 {
                a: *a,
                b: *b,
                s: adjoint_flat(s, 16),
            },
            Op::Project { q, outcome } => Op::Project {
                q: *q,
                outcome: *outcome,
            },
        }
    }
}

fn adjoint_flat(m: &[C64], d: usize) -> Vec<C64> {
    let mut out = vec![ZERO; d * d];
    for r in 0..d {
        for c in 0..d {
            out[c * d + r] = m[r * d + c].conj();
        }
    }
    out
}

/// Superoperator of `X -> U X U†` in the row-major vectorization.
fn unitary_superop(u: &ComplexMatrix) -> ComplexMatrix {
    kron(u, &u.conj())
}

/// A lowered sequence of local operations on `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    n_qubits: usize,
    ops: Vec<Op>,
}

impl Program {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Hilbert-Schmidt dual: reversed order, every operation dualized.
    pub fn dual(&self) -> Program {
        Program {
            n_qubits: self.n_qubits,
            ops: self.ops.iter().rev().map(Op::dual).collect(),
        }
    }

    pub fn apply(&self, rho: &mut DensityMatrix) -> Result<()> {
        if rho.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: rho.n_qubits,
            });
        }
        let n = self.n_qubits;
        let data = rho.matrix.data_mut();
        for op in &self.ops {
            match op {
                Op::Unitary1 { q, u } => kernels::unitary1(data, n, *q, u),
                Op::Unitary2 { a, b, u } => kernels::unitary2(data, n, *a, *b, u),
                Op::Super1 { q, s } => kernels::super1(data, n, *q, s),
                Op::Super2 { a, b, s } => kernels::super2(data, n, *a, *b, s),
                Op::Project { q, outcome } => kernels::project(data, n, *q, *outcome),
            }
        }
        Ok(())
    }
}

/// Lowers gates and noise sites into a [`Program`].
pub struct ProgramBuilder<'m> {
    n_qubits: usize,
    model: &'m NoiseModel,
    pending: Vec<Option<ComplexMatrix>>,
    ops: Vec<Op>,
    pair_cache: HashMap<(usize, usize), Option<ComplexMatrix>>,
}

impl<'m> ProgramBuilder<'m> {
    /// Noise entries for qubits at or beyond `n_qubits` are ignored; qubits
    /// the model does not cover are noiseless.
    pub fn new(n_qubits: usize, model: &'m NoiseModel) -> Self {
        Self {
            n_qubits,
            model,
            pending: vec![None; n_qubits],
            ops: Vec::new(),
            pair_cache: HashMap::new(),
        }
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::InvalidInput(format!(
                "qubit {q} out of range for {}-qubit program",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Appends a gate; `noisy` attaches the model's pair channel to CNOTs.
    pub fn gate(&mut self, g: &Gate, noisy: bool) -> Result<&mut Self> {
        for q in g.qubits() {
            self.check(q)?;
        }
        match *g {
            Gate::Cx(c, t) => {
                if c == t {
                    return Err(Error::InvalidInput("CNOT control equals target".into()));
                }
                let (a, b) = (c.min(t), c.max(t));
                let local = if c < t {
                    gates::cnot()
                } else {
                    let sw = gates::swap();
                    sw.matmul(&gates::cnot()).matmul(&sw)
                };
                let noise = if noisy { self.pair_superop(a, b)? } else { None };
                self.two_qubit(a, b, local, noise.as_ref());
            }
            _ => {
                let q = g.qubits()[0];
                let m = g.matrix();
                let next = match self.pending[q].take() {
                    Some(p) => m.matmul(&p),
                    None => m,
                };
                self.pending[q] = Some(next);
            }
        }
        Ok(self)
    }

    pub fn circuit(&mut self, c: &Circuit, noisy: bool) -> Result<&mut Self> {
        if c.n_qubits() > self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: c.n_qubits(),
            });
        }
        for g in c.gates() {
            self.gate(g, noisy)?;
        }
        Ok(self)
    }

    /// Applies a single-qubit channel on `q`.
    pub fn channel1(&mut self, q: usize, ch: &KrausChannel) -> Result<&mut Self> {
        self.check(q)?;
        if ch.arity() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: ch.arity(),
            });
        }
        let mut s = ch.superoperator();
        if let Some(p) = self.pending[q].take() {
            s = s.matmul(&unitary_superop(&p));
        }
        self.ops.push(Op::Super1 { q, s: s.into_data() });
        Ok(self)
    }

    /// Pre-measurement readout channel of `q`, if the model defines one.
    pub fn readout(&mut self, q: usize) -> Result<&mut Self> {
        if q < self.model.n_qubits {
            if let Some(ch) = self.model.measurement_channel(q)? {
                self.channel1(q, &ch)?;
            }
        }
        Ok(self)
    }

    /// Unnormalized projection onto `|outcome>` of qubit `q`.
    pub fn project(&mut self, q: usize, outcome: usize) -> Result<&mut Self> {
        self.check(q)?;
        self.flush(q);
        self.ops.push(Op::Project {
            q,
            outcome: outcome & 1,
        });
        Ok(self)
    }

    pub fn finish(mut self) -> Program {
        for q in 0..self.n_qubits {
            self.flush(q);
        }
        Program {
            n_qubits: self.n_qubits,
            ops: self.ops,
        }
    }

    fn flush(&mut self, q: usize) {
        if let Some(p) = self.pending[q].take() {
            let d = p.data();
            self.ops.push(Op::Unitary1 {
                q,
                u: [d[0], d[1], d[2], d[3]],
            });
        }
    }

    fn pair_superop(&mut self, a: usize, b: usize) -> Result<Option<ComplexMatrix>> {
        if let Some(s) = self.pair_cache.get(&(a, b)) {
            return Ok(s.clone());
        }
        let s = if b < self.model.n_qubits {
            self.model.pair_channel(a, b)?.map(|ch| ch.superoperator())
        } else {
            None
        };
        self.pair_cache.insert((a, b), s.clone());
        Ok(s)
    }

    fn two_qubit(&mut self, a: usize, b: usize, u: ComplexMatrix, noise: Option<&ComplexMatrix>) {
        let id = ComplexMatrix::identity(2);
        let pa = self.pending[a].take();
        let pb = self.pending[b].take();
        let u = if pa.is_some() || pb.is_some() {
            let v = kron(pa.as_ref().unwrap_or(&id), pb.as_ref().unwrap_or(&id));
            u.matmul(&v)
        } else {
            u
        };
        match noise {
            Some(s) => self.ops.push(Op::Super2 {
                a,
                b,
                s: s.matmul(&unitary_superop(&u)).into_data(),
            }),
            None => self.ops.push(Op::Unitary2 { a, b, u: u.into_data() }),
        }
    }
}

/// Local kernels on a row-major `2^n x 2^n` buffer.
mod kernels {
    use crate::linalg::{C64, ZERO};

    #[inline]
    fn stride(n: usize, q: usize) -> usize {
        1 << (n - 1 - q)
    }

    /// Indices with the bits in `mask` cleared, ascending.
    fn bases(dim: usize, mask: usize) -> Vec<usize> {
        (0..dim).filter(|i| i & mask == 0).collect()
    }

    pub fn unitary1(d: &mut [C64], n: usize, q: usize, u: &[C64; 4]) {
        let dim = 1usize << n;
        let s = stride(n, q);
        // rows: rho <- U rho
        for hi in (0..dim).step_by(2 * s) {
            for r0 in hi..hi + s {
                let (top, bottom) = d.split_at_mut((r0 + s) * dim);
                let row0 = &mut top[r0 * dim..(r0 + 1) * dim];
                let row1 = &mut bottom[..dim];
                for (x, y) in row0.iter_mut().zip(row1.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = u[0] * a + u[1] * b;
                    *y = u[2] * a + u[3] * b;
                }
            }
        }
        // columns: rho <- rho U†
        let v = [u[0].conj(), u[1].conj(), u[2].conj(), u[3].conj()];
        for row in d.chunks_exact_mut(dim) {
            for hi in (0..dim).step_by(2 * s) {
                for c0 in hi..hi + s {
                    let (a, b) = (row[c0], row[c0 + s]);
                    row[c0] = a * v[0] + b * v[1];
                    row[c0 + s] = a * v[2] + b * v[3];
                }
            }
        }
    }

    pub fn unitary2(d: &mut [C64], n: usize, qa: usize, qb: usize, u: &[C64]) {
        let dim = 1usize << n;
        let (sa, sb) = (stride(n, qa), stride(n, qb));
        let offs = [0, sb, sa, sa + sb];
        let idx = bases(dim, sa | sb);
        let mut v = [ZERO; 4];
        for &rb in &idx {
            for c in 0..dim {
                for i in 0..4 {
                    v[i] = d[(rb + offs[i]) * dim + c];
                }
                for i in 0..4 {
                    let mut acc = ZERO;
                    for k in 0..4 {
                        acc += u[i * 4 + k] * v[k];
                    }
                    d[(rb + offs[i]) * dim + c] = acc;
                }
            }
        }
        for row in d.chunks_exact_mut(dim) {
            for &cb in &idx {
                for j in 0..4 {
                    v[j] = row[cb + offs[j]];
                }
                for j in 0..4 {
                    let mut acc = ZERO;
                    for k in 0..4 {
                        acc += v[k] * u[j * 4 + k].conj();
                    }
                    row[cb + offs[j]] = acc;
                }
            }
        }
    }

    pub fn super1(d: &mut [C64], n: usize, q: usize, s: &[C64]) {
        let dim = 1usize << n;
        let st = stride(n, q);
        let idx = bases(dim, st);
        let offs = [0, st];
        let mut v = [ZERO; 4];
        for &rb in &idx {
            for &cb in &idx {
                for i in 0..2 {
                    for j in 0..2 {
                        v[i * 2 + j] = d[(rb + offs[i]) * dim + cb + offs[j]];
                    }
                }
                for i in 0..2 {
                    for j in 0..2 {
                        let row = &s[(i * 2 + j) * 4..(i * 2 + j + 1) * 4];
                        let mut acc = ZERO;
                        for k in 0..4 {
                            acc += row[k] * v[k];
                        }
                        d[(rb + offs[i]) * dim + cb + offs[j]] = acc;
                    }
                }
            }
        }
    }

    pub fn super2(d: &mut [C64], n: usize, qa: usize, qb: usize, s: &[C64]) {
        let dim = 1usize << n;
        let (sa, sb) = (stride(n, qa), stride(n, qb));
        let offs = [0, sb, sa, sa + sb];
        let idx = bases(dim, sa | sb);
        let mut v = [ZERO; 16];
        for &rb in &idx {
            for &cb in &idx {
                for i in 0..4 {
                    let base = (rb + offs[i]) * dim + cb;
                    for j in 0..4 {
                        v[i * 4 + j] = d[base + offs[j]];
                    }
                }
                for i in 0..4 {
                    let base = (rb + offs[i]) * dim + cb;
                    for j in 0..4 {
                        let row = &s[(i * 4 + j) * 16..(i * 4 + j + 1) * 16];
                        let mut acc = ZERO;
                        for k in 0..16 {
                            acc += row[k] * v[k];
                        }
                        d[base + offs[j]] = acc;
                    }
                }
            }
        }
    }

    pub fn project(d: &mut [C64], n: usize, q: usize, outcome: usize) {
        let dim = 1usize << n;
        let s = stride(n, q);
        let keep = |i: usize| ((i & s != 0) as usize) == outcome;
        for (r, row) in d.chunks_exact_mut(dim).enumerate() {
            if !keep(r) {
                row.fill(ZERO);
                continue;
            }
            for (c, x) in row.iter_mut().enumerate() {
                if !keep(c) {
                    *x = ZERO;
                }
            }
        }
    }
}

/// Noiseless state vector `U|0...0>`.
pub fn statevector(c: &Circuit) -> Vec<C64> {
    let n = c.n_qubits();
    let dim = 1usize << n;
    let mut psi = vec![ZERO; dim];
    psi[0] = ONE;
    for g in c.gates() {
        match *g {
            Gate::Cx(ctl, tgt) => {
                let sc = 1usize << (n - 1 - ctl);
                let st = 1usize << (n - 1 - tgt);
                for i in 0..dim {
                    if i & sc != 0 && i & st == 0 {
                        psi.swap(i, i | st);
                    }
                }
            }
            _ => {
                let q = g.qubits()[0];
                let m = g.matrix();
                let s = 1usize << (n - 1 - q);
                for i in 0..dim {
                    if i & s == 0 {
                        let (a, b) = (psi[i], psi[i | s]);
                        psi[i] = m[(0, 0)] * a + m[(0, 1)] * b;
                        psi[i | s] = m[(1, 0)] * a + m[(1, 1)] * b;
                    }
                }
            }
        }
    }
    psi
}

fn require_model(nm: &NoiseModel, n: usize) -> Result<()> {
    if nm.n_qubits < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: nm.n_qubits,
        });
    }
    Ok(())
}

/// State preparation with the model's initialization channels applied.
pub fn initial_state(nm: &NoiseModel, n_qubits: usize) -> Result<DensityMatrix> {
    let mut rho = DensityMatrix::zero_state(n_qubits);
    let mut b = ProgramBuilder::new(n_qubits, nm);
    for q in 0..n_qubits.min(nm.n_qubits) {
        if let Some(ch) = nm.init_channel(q)? {
            b.channel1(q, &ch)?;
        }
    }
    b.finish().apply(&mut rho)?;
    Ok(rho)
}

/// POVM element of the all-zeros outcome on qubits `0..n`:
/// `⊗_q M_q†(|0><0|)` with `M_q` the pre-measurement channel of qubit `q`.
pub fn final_povm(nm: &NoiseModel, n: usize) -> Result<ComplexMatrix> {
    let zero = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
    let mut factors = Vec::with_capacity(n);
    for q in 0..n {
        let f = match q < nm.n_qubits {
            true => match nm.measurement_channel(q)? {
                Some(ch) => ch.adjoint().apply(&zero),
                None => zero.clone(),
            },
            false => zero.clone(),
        };
        factors.push(f);
    }
    Ok(crate::linalg::kron_all(&factors))
}

/// Noisy forward propagation `rho = U(init)`: each gate, then its noise.
pub fn run_forward(c: &Circuit, nm: &NoiseModel, init: &DensityMatrix) -> Result<DensityMatrix> {
    let n = c.n_qubits();
    if init.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: init.n_qubits(),
        });
    }
    let mut b = ProgramBuilder::new(n, nm);
    b.circuit(c, true)?;
    let mut rho = init.clone();
    b.finish().apply(&mut rho)?;
    Ok(rho)
}

/// Dual state `V̄(boundary)` of the noisy circuit `c_inv`: the elementary
/// channels in reverse order with adjoint Kraus operators.
pub fn run_dual(c_inv: &Circuit, nm: &NoiseModel, boundary: &ComplexMatrix) -> Result<DensityMatrix> {
    let n = c_inv.n_qubits();
    if boundary.rows() != 1 << n || !boundary.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: boundary.rows(),
        });
    }
    let mut b = ProgramBuilder::new(n, nm);
    b.circuit(c_inv, true)?;
    let mut rho = DensityMatrix {
        n_qubits: n,
        matrix: boundary.clone(),
    };
    b.finish().dual().apply(&mut rho)?;
    Ok(rho)
}

/// `Tr(O (rho rhō + rhō rho)/2) / Tr(rho rhō)`.
pub fn analytic_estimate(
    rho: &DensityMatrix,
    rho_bar: &DensityMatrix,
    obs: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<f64> {
    if rho.dim() != rho_bar.dim() || obs.rows() != rho.dim() || !obs.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: rho_bar.dim().max(obs.rows()),
        });
    }
    let den = trace_of_product(&rho.matrix, &rho_bar.matrix).re;
    if den.abs() < tol.denominator_floor {
        return Err(Error::DenominatorVanished(den));
    }
    let prod = rho.matrix.matmul(&rho_bar.matrix);
    // Tr(O rhō rho) is the conjugate of Tr(O rho rhō) for Hermitian factors
    let num = trace_of_product(obs, &prod).re;
    Ok(num / den)
}

/// Knobs shared by both pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    /// Register qubit whose Z value is measured mid-circuit ("qubit-1").
    pub pivot: usize,
    /// When false the intermediate step is ideal: no noise on the ancilla
    /// CNOT, no ancilla readout error, and no readout error on the
    /// projective intermediate measurement.
    pub noisy_intermediate: bool,
    pub tol: Tolerances,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            pivot: 0,
            noisy_intermediate: true,
            tol: Tolerances::default(),
        }
    }
}

/// Probabilities of the measurement circuit without an ancilla.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveResult {
    /// Final all-zeros probability with the intermediate step idle.
    pub p0: f64,
    /// Joint probability of intermediate outcome `b` and final all-zeros.
    pub p_tilde_0: f64,
    pub p_tilde_1: f64,
}

/// Post-selected ancilla statistics of the one-ancilla circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaResult {
    /// Probability of the all-zeros register outcome.
    pub p_tilde: f64,
    pub cond_x: f64,
    pub cond_y: f64,
    pub cond_z: f64,
    /// Joint probabilities `(register all-zeros, ancilla k)` for the ancilla
    /// measured in the X, Y and Z bases, in that order.
    pub outcomes: [[f64; 2]; 3],
}

fn check_pipeline_inputs(a: &Circuit, b: &Circuit, opts: &PipelineOptions) -> Result<usize> {
    let n = a.n_qubits();
    if b.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.n_qubits(),
        });
    }
    if opts.pivot >= n {
        return Err(Error::InvalidInput(format!(
            "pivot {} out of range for {n} qubits",
            opts.pivot
        )));
    }
    Ok(n)
}

/// Projective intermediate measurement of the pivot between `U = B·A` and
/// `U†`, plus the idle reference run.
pub fn run_pipeline_no_ancilla(
    a: &Circuit,
    b: &Circuit,
    nm: &NoiseModel,
    opts: &PipelineOptions,
) -> Result<ProjectiveResult> {
    let n = check_pipeline_inputs(a, b, opts)?;
    require_model(nm, n)?;
    let u = a.then(b)?;
    let mut prefix = ProgramBuilder::new(n, nm);
    prefix.circuit(&u, true)?;
    let mut mid = initial_state(nm, n)?;
    prefix.finish().apply(&mut mid)?;

    let mut suffix = ProgramBuilder::new(n, nm);
    suffix.circuit(&u.inverse(), true)?;
    let suffix = suffix.finish();
    let povm = final_povm(nm, n)?;

    let mut idle = mid.clone();
    suffix.apply(&mut idle)?;
    let p0 = idle.expectation_of(&povm)?;

    let mut joint = [0.0; 2];
    for (outcome, slot) in joint.iter_mut().enumerate() {
        let mut pb = ProgramBuilder::new(n, nm);
        if opts.noisy_intermediate {
            pb.readout(opts.pivot)?;
        }
        pb.project(opts.pivot, outcome)?;
        let mut branch = mid.clone();
        pb.finish().apply(&mut branch)?;
        suffix.apply(&mut branch)?;
        *slot = branch.expectation_of(&povm)?;
    }
    Ok(ProjectiveResult {
        p0,
        p_tilde_0: joint[0],
        p_tilde_1: joint[1],
    })
}

/// Ancilla rotations mapping its X, Y, Z onto the computational basis.
fn ancilla_rotations() -> [ComplexMatrix; 3] {
    [
        gates::hadamard(),
        gates::hadamard().matmul(&gates::phase_sdg()),
        ComplexMatrix::identity(2),
    ]
}

/// One-ancilla circuit: `U` on the register, CNOT(pivot -> ancilla), `U†`,
/// register readout, and post-selection on the all-zeros outcome. The
/// ancilla is qubit `n` of the noise model.
pub fn run_pipeline_ancilla(
    a: &Circuit,
    b: &Circuit,
    nm: &NoiseModel,
    opts: &PipelineOptions,
) -> Result<AncillaResult> {
    let n = check_pipeline_inputs(a, b, opts)?;
    require_model(nm, n)?;
    let total = n + 1;
    let u = a.then(b)?.widened(total)?;
    let mut pb = ProgramBuilder::new(total, nm);
    pb.circuit(&u, true)?;
    pb.gate(&Gate::Cx(opts.pivot, n), opts.noisy_intermediate)?;
    pb.circuit(&u.inverse(), true)?;
    let mut rho = initial_state(nm, total)?;
    pb.finish().apply(&mut rho)?;

    let povm = final_povm(nm, n)?;
    let (rho_a, p_tilde) = conditional_ancilla_state(rho.matrix(), &povm, &opts.tol)?;
    let readout = if opts.noisy_intermediate && n < nm.n_qubits {
        nm.measurement_channel(n)?
    } else {
        None
    };
    let mut outcomes = [[0.0; 2]; 3];
    let mut cond = [0.0; 3];
    for (i, r) in ancilla_rotations().iter().enumerate() {
        let mut s = r.matmul(&rho_a).matmul(&r.adjoint());
        if let Some(ch) = &readout {
            s = ch.apply(&s);
        }
        outcomes[i] = [s[(0, 0)].re, s[(1, 1)].re];
        cond[i] = (outcomes[i][0] - outcomes[i][1]) / p_tilde;
    }
    Ok(AncillaResult {
        p_tilde,
        cond_x: cond[0],
        cond_y: cond[1],
        cond_z: cond[2],
        outcomes,
    })
}

/// Draws `(k0, k1)` from a three-outcome multinomial with probabilities
/// `(p0, p1, rest)`.
fn trinomial(rng: &mut impl Rng, shots: u64, p0: f64, p1: f64) -> Result<(u64, u64)> {
    let clamp = |p: f64| p.clamp(0.0, 1.0);
    let p0 = clamp(p0);
    let k0 = Binomial::new(shots, p0)
        .map_err(|e| Error::InvalidInput(format!("binomial: {e}")))?
        .sample(rng);
    let rest = 1.0 - p0;
    let q1 = if rest > 0.0 { clamp(p1 / rest) } else { 0.0 };
    let k1 = Binomial::new(shots - k0, q1)
        .map_err(|e| Error::InvalidInput(format!("binomial: {e}")))?
        .sample(rng);
    Ok((k0, k1))
}

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(Error::InvalidInput("shot count must be at least 1".into()));
    }
    Ok(())
}

/// Finite-shot version of [`run_pipeline_no_ancilla`]: `shots` runs of the
/// idle circuit and `shots` runs of the measured circuit.
pub fn sample_projective(exact: &ProjectiveResult, shots: u64, rng: &mut impl Rng) -> Result<ProjectiveResult> {
    check_shots(shots)?;
    let (k_idle, _) = trinomial(rng, shots, exact.p0, 0.0)?;
    let (k0, k1) = trinomial(rng, shots, exact.p_tilde_0, exact.p_tilde_1)?;
    let f = shots as f64;
    Ok(ProjectiveResult {
        p0: k_idle as f64 / f,
        p_tilde_0: k0 as f64 / f,
        p_tilde_1: k1 as f64 / f,
    })
}

/// Finite-shot version of [`run_pipeline_ancilla`]: `shots` runs per ancilla
/// basis, post-selected on the all-zeros register outcome.
pub fn sample_ancilla(exact: &AncillaResult, shots: u64, rng: &mut impl Rng) -> Result<AncillaResult> {
    check_shots(shots)?;
    let mut outcomes = [[0.0; 2]; 3];
    let mut cond = [0.0; 3];
    let f = shots as f64;
    for i in 0..3 {
        let [q0, q1] = exact.outcomes[i];
        let (k0, k1) = trinomial(rng, shots, q0, q1)?;
        if k0 + k1 == 0 {
            return Err(Error::NoPostSelectedShots);
        }
        outcomes[i] = [k0 as f64 / f, k1 as f64 / f];
        cond[i] = (k0 as f64 - k1 as f64) / (k0 + k1) as f64;
    }
    Ok(AncillaResult {
        p_tilde: outcomes[2][0] + outcomes[2][1],
        cond_x: cond[0],
        cond_y: cond[1],
        cond_z: cond[2],
        outcomes,
    })
}
