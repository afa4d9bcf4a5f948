//! Dense complex linear algebra.
//!
//! Qubit ordering convention, used everywhere in this crate: in an `n`-qubit
//! register, qubit 0 is the most significant bit of a basis index, so basis
//! state `|q0 q1 ... q(n-1)>` has index `q0 * 2^(n-1) + ... + q(n-1)`.
//! Pauli strings are written in the same order (character `i` addresses
//! qubit `i`), and `kron(a, b)` places `a` on the more significant qubits.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Numerical tolerances and floors shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum deviation from Hermiticity accepted on input matrices.
    pub hermitian: f64,
    /// Maximum deviation from unitarity accepted for `U1Q` payloads.
    pub unitary: f64,
    /// Eigenvalue gap below which a 2x2 eigenproblem is flagged degenerate.
    pub degenerate_gap: f64,
    /// Smallest post-selection probability accepted.
    pub post_selection_floor: f64,
    /// Smallest estimator denominator accepted.
    pub denominator_floor: f64,
    /// Smallest Bloch norm for which tomography purification is defined.
    pub tomography_min_norm: f64,
    /// Trace-preservation tolerance for Kraus channels.
    pub channel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            unitary: 1e-10,
            degenerate_gap: 1e-12,
            post_selection_floor: 1e-12,
            denominator_floor: 1e-12,
            tomography_min_norm: 1e-9,
            channel: 1e-12,
        }
    }
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for
    /// literals.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged matrix literal");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Outer product `|v><v|`.
    pub fn projector(v: &[C64]) -> Self {
        let d = v.len();
        let mut m = Self::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] = v[r] * v[c].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * v` for a column vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.max_abs_diff(other) <= tol
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && self.adjoint().matmul(self).approx_eq(&Self::identity(self.rows), tol)
    }

    /// Number of qubits for a `2^n`-dimensional square matrix.
    pub fn qubit_count(&self) -> Option<usize> {
        (self.is_square() && self.rows.is_power_of_two()).then(|| self.rows.trailing_zeros() as usize)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product; `a` indexes the more significant block.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, m| kron(&acc, m))
}

/// Checks a target list against a register of `n` qubits.
pub fn validate_targets(targets: &[usize], n: usize) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(Error::InvalidInput(format!(
                "target qubit {t} out of range for {n}-qubit register"
            )));
        }
        if targets[..i].contains(&t) {
            return Err(Error::InvalidInput(format!("duplicate target qubit {t}")));
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// Lifts a `k`-qubit operator acting on `targets` (in order, `targets[0]`
/// most significant within `op`) to an `n`-qubit operator.
pub fn embed(op: &ComplexMatrix, targets: &[usize], n: usize) -> Result<ComplexMatrix> {
    validate_targets(targets, n)?;
    let k = targets.len();
    if op.qubit_count() != Some(k) {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            found: op.rows(),
        });
    }
    let dim = 1usize << n;
    let target_mask: usize = targets.iter().map(|&t| 1usize << (n - 1 - t)).sum();
    let sub = |idx: usize| -> usize { targets.iter().fold(0usize, |acc, &t| (acc << 1) | bit(idx, t, n)) };
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        let sr = sub(r);
        for c in 0..dim {
            if (r & !target_mask) != (c & !target_mask) {
                continue;
            }
            out[(r, c)] = op[(sr, sub(c))];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a 2x2 Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEig2 {
    /// Sorted descending.
    pub eigenvalues: [f64; 2],
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: [[C64; 2]; 2],
    /// Set when the eigenvalue gap is below the degeneracy tolerance; the
    /// eigenvectors are then the computational basis and carry no meaning.
    pub degenerate: bool,
}

impl HermitianEig2 {
    /// Eigenvector of the larger eigenvalue, `None` when degenerate.
    pub fn dominant(&self) -> Option<[C64; 2]> {
        (!self.degenerate).then_some(self.eigenvectors[0])
    }
}

/// Closed-form eigendecomposition of a 2x2 Hermitian matrix.
pub fn eig2_hermitian(m: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEig2> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.rows(),
        });
    }
    let dev = m.hermitian_deviation();
    if dev > tol.hermitian {
        return Err(Error::NotHermitian(dev));
    }
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    // Average the two off-diagonal entries to absorb sub-tolerance asymmetry.
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let eigenvalues = [mean + half_gap, mean - half_gap];
    if 2.0 * half_gap < tol.degenerate_gap {
        return Ok(HermitianEig2 {
            eigenvalues,
            eigenvectors: [[ONE, ZERO], [ZERO, ONE]],
            degenerate: true,
        });
    }
    let lam = eigenvalues[0];
    // Two candidate (unnormalized) eigenvectors; take the better conditioned.
    let v1 = [b, C64::new(lam - a, 0.0)];
    let v2 = [C64::new(lam - d, 0.0), b.conj()];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let (v, norm) = if n1 >= n2 { (v1, n1.sqrt()) } else { (v2, n2.sqrt()) };
    let mut top = [v[0] / norm, v[1] / norm];
    // Fix the global phase: first non-negligible component real positive.
    let pivot = if top[0].norm() > 1e-14 { top[0] } else { top[1] };
    let phase = pivot.conj() / pivot.norm();
    top = [top[0] * phase, top[1] * phase];
    let bottom = [-top[1].conj(), top[0].conj()];
    Ok(HermitianEig2 {
        eigenvalues,
        eigenvectors: [top, bottom],
        degenerate: false,
    })
}

/// Post-selected ancilla state.
///
/// `rho` lives on `n + 1` qubits with the ancilla as the last (least
/// significant) qubit; `final_povm` is the `n`-qubit register POVM element.
/// Returns the unnormalized ancilla block `Tr_reg[(E ⊗ I) rho]` and its trace.
pub fn conditional_ancilla_state(
    rho: &ComplexMatrix,
    final_povm: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<(ComplexMatrix, f64)> {
    let n_total = rho
        .qubit_count()
        .ok_or_else(|| Error::InvalidInput("state is not a qubit-register matrix".into()))?;
    if n_total == 0 {
        return Err(Error::InvalidInput("register needs an ancilla".into()));
    }
    let reg_dim = 1usize << (n_total - 1);
    if final_povm.rows() != reg_dim || !final_povm.is_square() {
        return Err(Error::DimensionMismatch {
            expected: reg_dim,
            found: final_povm.rows(),
        });
    }
    let mut rho_a = ComplexMatrix::zeros(2, 2);
    for x in 0..reg_dim {
        for y in 0..reg_dim {
            let e = final_povm[(y, x)];
            if e == ZERO {
                continue;
            }
            for a in 0..2 {
                for b in 0..2 {
                    rho_a[(a, b)] += e * rho[(2 * x + a, 2 * y + b)];
                }
            }
        }
    }
    let p = rho_a.trace().re;
    if p < tol.post_selection_floor {
        return Err(Error::PostSelectionStarved(p));
    }
    Ok((rho_a, p))
}

/// Single-qubit and two-qubit constant matrices.
pub mod gates {
    use super::*;

    pub fn pauli_i() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[[ONE, ZERO], [ZERO, -ONE]])
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        ComplexMatrix::from_rows(&[[h, h], [h, -h]])
    }

    pub fn phase_s() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[[ONE, ZERO], [ZERO, I]])
    }

    pub fn phase_sdg() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[[ONE, ZERO], [ZERO, -I]])
    }

    /// Control on the first (more significant) qubit.
    pub fn cnot() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        m
    }

    pub fn swap() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        m
    }

    /// `exp(i theta P / 2) = cos(theta/2) I + i sin(theta/2) P`.
    pub fn rotation(pauli: &ComplexMatrix, theta: f64) -> ComplexMatrix {
        let c = C64::new((0.5 * theta).cos(), 0.0);
        let s = C64::new(0.0, (0.5 * theta).sin());
        &pauli_i().scale(c) + &pauli.scale(s)
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
        let data = (0..rows * cols)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::from_vec(rows, cols, data).unwrap()
    }

    fn random_hermitian2(rng: &mut impl Rng) -> ComplexMatrix {
        let m = random_matrix(rng, 2, 2);
        (&m + &m.adjoint()).scale_real(0.5)
    }

    #[test]
    fn kron_identity_and_paulis() {
        assert_eq!(kron(&pauli_i(), &pauli_i()), ComplexMatrix::identity(4));
        assert_eq!(
            kron(&pauli_z(), &pauli_i()),
            ComplexMatrix::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0])
        );
        let xz = kron(&pauli_x(), &pauli_z());
        assert!(xz.matmul(&xz).approx_eq(&ComplexMatrix::identity(4), 1e-15));
        // upper-left block is zero, upper-right is Z
        assert_eq!(xz[(0, 0)], ZERO);
        assert_eq!(xz[(0, 2)], ONE);
        assert_eq!(xz[(1, 3)], -ONE);
    }

    #[test]
    fn kron_associative_and_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 2, 3);
            let b = random_matrix(&mut rng, 3, 2);
            let c = random_matrix(&mut rng, 2, 2);
            let left = kron(&kron(&a, &b), &c);
            let right = kron(&a, &kron(&b, &c));
            assert!(left.approx_eq(&right, 1e-12));
            let a2 = random_matrix(&mut rng, 2, 3);
            let s = C64::new(0.3, -1.2);
            let lhs = kron(&(&a + &a2.scale(s)), &b);
            let rhs = &kron(&a, &b) + &kron(&a2, &b).scale(s);
            assert!(lhs.approx_eq(&rhs, 1e-12));
        }
    }

    #[test]
    fn embed_examples() {
        let z0 = embed(&pauli_z(), &[0], 2).unwrap();
        assert_eq!(z0, ComplexMatrix::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
        let x1 = embed(&pauli_x(), &[1], 2).unwrap();
        assert!(x1.matmul(&x1).approx_eq(&ComplexMatrix::identity(4), 0.0));
        let swap = swap();
        let c10 = embed(&cnot(), &[1, 0], 2).unwrap();
        let c01 = embed(&cnot(), &[0, 1], 2).unwrap();
        assert!(c10.approx_eq(&swap.matmul(&c01).matmul(&swap), 0.0));
        // CNOT(1 -> 0) flips qubit 0 when qubit 1 is set: |01> -> |11>
        assert_eq!(c10[(3, 1)], ONE);
    }

    #[test]
    fn embed_rejects_bad_targets() {
        assert!(embed(&pauli_z(), &[2], 2).is_err());
        assert!(embed(&cnot(), &[1, 1], 2).is_err());
        assert!(embed(&cnot(), &[0], 2).is_err());
    }

    #[test]
    fn embed_disjoint_targets_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 4, 4);
            let b = random_matrix(&mut rng, 2, 2);
            let ea = embed(&a, &[3, 0], 4).unwrap();
            let eb = embed(&b, &[2], 4).unwrap();
            assert!(ea.matmul(&eb).approx_eq(&eb.matmul(&ea), 1e-12));
        }
    }

    #[test]
    fn eig2_examples() {
        let tol = Tolerances::default();
        let e = eig2_hermitian(&pauli_z(), &tol).unwrap();
        assert_eq!(e.eigenvalues, [1.0, -1.0]);
        assert!((e.eigenvectors[0][0] - ONE).norm() < 1e-15);
        let e = eig2_hermitian(&pauli_x(), &tol).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.eigenvectors[0][0].re - h).abs() < 1e-15);
        assert!((e.eigenvectors[0][1].re - h).abs() < 1e-15);

        let m = (&(&pauli_i() + &pauli_x().scale_real(0.6)) + &pauli_z().scale_real(0.8)).scale_real(0.5);
        let e = eig2_hermitian(&m, &tol).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14);
        let v = e.dominant().unwrap();
        let rho = ComplexMatrix::projector(&v);
        assert!(rho.approx_eq(&m, 1e-12));
        let ex = rho.matmul(&pauli_x()).trace().re;
        let ez = rho.matmul(&pauli_z()).trace().re;
        assert!((ex - 0.6).abs() < 1e-12 && (ez - 0.8).abs() < 1e-12);
    }

    #[test]
    fn eig2_degenerate_and_non_hermitian() {
        let tol = Tolerances::default();
        let e = eig2_hermitian(&ComplexMatrix::identity(2).scale_real(0.5), &tol).unwrap();
        assert!(e.degenerate);
        assert!(e.dominant().is_none());
        let bad = ComplexMatrix::from_rows(&[[ONE, ONE], [ZERO, ONE]]);
        assert!(matches!(eig2_hermitian(&bad, &tol), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig2_reconstruction_random() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let m = random_hermitian2(&mut rng);
            let e = eig2_hermitian(&m, &tol).unwrap();
            let mut rec = ComplexMatrix::zeros(2, 2);
            for i in 0..2 {
                rec = &rec + &ComplexMatrix::projector(&e.eigenvectors[i]).scale_real(e.eigenvalues[i]);
            }
            assert!(rec.approx_eq(&m, 1e-12), "{m:?}");
            let ip =
                e.eigenvectors[0][0].conj() * e.eigenvectors[1][0] + e.eigenvectors[0][1].conj() * e.eigenvectors[1][1];
            assert!(ip.norm() < 1e-12);
            assert!(e.eigenvalues[0] >= e.eigenvalues[1]);
        }
    }

    /// Element-wise partial trace written against explicit bit indices.
    fn brute_partial(rho: &ComplexMatrix, povm: &ComplexMatrix, n_reg: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = ZERO;
                // [(E ⊗ I) rho]_{(y,a),(y,b)} = sum_x E[y,x] rho[(x,a),(y,b)], traced over y
                for y in 0..(1 << n_reg) {
                    for x in 0..(1 << n_reg) {
                        acc += povm[(y, x)] * rho[((x << 1) | a, (y << 1) | b)];
                    }
                }
                out[(a, b)] = acc;
            }
        }
        out
    }

    #[test]
    fn conditional_ancilla_examples() {
        let tol = Tolerances::default();
        // |00> ⊗ |0>_a with povm |00><00|
        let mut psi = vec![ZERO; 8];
        psi[0] = ONE;
        let rho = ComplexMatrix::projector(&psi);
        let mut povm = ComplexMatrix::zeros(4, 4);
        povm[(0, 0)] = ONE;
        let (rho_a, p) = conditional_ancilla_state(&rho, &povm, &tol).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(rho_a, ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));

        // |11> ⊗ |+>_a is orthogonal to the povm support
        let mut psi = vec![ZERO; 8];
        psi[6] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi[7] = psi[6];
        let rho = ComplexMatrix::projector(&psi);
        assert!(matches!(
            conditional_ancilla_state(&rho, &povm, &tol),
            Err(Error::PostSelectionStarved(_))
        ));
    }

    #[test]
    fn conditional_ancilla_matches_brute_force() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            // random 2-qubit pure state (1 register qubit + ancilla)
            let mut psi: Vec<C64> = (0..4)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            psi.iter_mut().for_each(|z| *z /= norm);
            let rho = ComplexMatrix::projector(&psi);
            let povm = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
            let (rho_a, p) = conditional_ancilla_state(&rho, &povm, &tol).unwrap();
            let brute = brute_partial(&rho, &povm, 1);
            assert!(rho_a.approx_eq(&brute, 1e-14));
            assert!((p - (psi[0].norm_sqr() + psi[1].norm_sqr())).abs() < 1e-14);
            assert!(rho_a.is_hermitian(1e-12));
            let e = eig2_hermitian(&rho_a, &tol).unwrap();
            assert!(e.eigenvalues[1] > -1e-10);
        }
    }

    proptest! {
        #[test]
        fn conditional_state_is_psd(seed in any::<u64>(), n_reg in 1usize..3) {
            let tol = Tolerances::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 1 << (n_reg + 1);
            // mixed state from a random Gram matrix
            let g = random_matrix(&mut rng, dim, dim);
            let mut rho = g.matmul(&g.adjoint());
            let tr = rho.trace().re;
            rho = rho.scale_real(1.0 / tr);
            let diag: Vec<f64> = (0..1 << n_reg).map(|_| rng.random_range(0.0..1.0)).collect();
            let povm = ComplexMatrix::from_real_diagonal(&diag);
            if let Ok((rho_a, _)) = conditional_ancilla_state(&rho, &povm, &tol) {
                prop_assert!(rho_a.is_hermitian(1e-10));
                let e = eig2_hermitian(&rho_a, &tol).unwrap();
                prop_assert!(e.eigenvalues[1] >= -1e-10);
            }
        }
    }
}
