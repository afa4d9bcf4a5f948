//! Gate-list circuits, their exact inverses and the text file format.
//!
//! Rotation convention: `RX/RY/RZ(theta) = exp(+i theta P / 2)`. This is the
//! opposite sign to the common `exp(-i theta P / 2)`; circuit files written
//! for other tools need their angles negated.
//!
//! # File format
//!
//! ```text
//! file    := { blank | comment } header { line }
//! header  := "QUBITS" <n>
//! line    := [ gate ] [ comment ]
//! comment := "#" <anything to end of line>
//! gate    := ("H" | "S" | "SDG" | "X" | "Y" | "Z") <q>
//!          | ("RX" | "RY" | "RZ") <q> <angle>
//!          | ("CX" | "CNOT") <control> <target>
//!          | "U1Q" <q> <a_re> <a_im> <b_re> <b_im> <c_re> <c_im> <d_re> <d_im>
//! angle   := <float> | ["-"] "theta" | <float> "*theta"
//! ```
//!
//! `U1Q` lists the row-major entries of `[[a, b], [c, d]]`. Keywords are case
//! insensitive. `theta` marks the free parameter of an ansatz; circuits
//! containing it must be bound before simulation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{embed, gates, validate_targets, ComplexMatrix, C64};

/// Default cap for [`Circuit::unitary`].
pub const UNITARY_QUBIT_CAP: usize = 12;

/// Rotation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn matrix(self) -> ComplexMatrix {
        match self {
            Axis::X => gates::pauli_x(),
            Axis::Y => gates::pauli_y(),
            Axis::Z => gates::pauli_z(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    /// Arbitrary single-qubit unitary, row-major `[a, b, c, d]`.
    U1q(usize, [C64; 4]),
    /// Controlled-NOT `(control, target)`.
    Cx(usize, usize),
}

impl Gate {
    pub fn rotation(axis: Axis, qubit: usize, theta: f64) -> Gate {
        match axis {
            Axis::X => Gate::Rx(qubit, theta),
            Axis::Y => Gate::Ry(qubit, theta),
            Axis::Z => Gate::Rz(qubit, theta),
        }
    }

    /// Builds a `U1Q` gate, checking unitarity.
    pub fn u1q(qubit: usize, m: &ComplexMatrix, tol: f64) -> Result<Gate> {
        if m.rows() != 2 || m.cols() != 2 || !m.is_unitary(tol) {
            return Err(Error::InvalidInput("U1Q payload is not a 2x2 unitary".into()));
        }
        let d = m.data();
        Ok(Gate::U1q(qubit, [d[0], d[1], d[2], d[3]]))
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Cx(c, t) => vec![c, t],
            Gate::H(q)
            | Gate::S(q)
            | Gate::Sdg(q)
            | Gate::X(q)
            | Gate::Y(q)
            | Gate::Z(q)
            | Gate::Rx(q, _)
            | Gate::Ry(q, _)
            | Gate::Rz(q, _)
            | Gate::U1q(q, _) => vec![q],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cx(..))
    }

    /// Local matrix on [`Gate::qubits`].
    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            Gate::H(_) => gates::hadamard(),
            Gate::S(_) => gates::phase_s(),
            Gate::Sdg(_) => gates::phase_sdg(),
            Gate::X(_) => gates::pauli_x(),
            Gate::Y(_) => gates::pauli_y(),
            Gate::Z(_) => gates::pauli_z(),
            Gate::Rx(_, t) => gates::rotation(&Axis::X.matrix(), *t),
            Gate::Ry(_, t) => gates::rotation(&Axis::Y.matrix(), *t),
            Gate::Rz(_, t) => gates::rotation(&Axis::Z.matrix(), *t),
            Gate::U1q(_, m) => ComplexMatrix::from_rows(&[[m[0], m[1]], [m[2], m[3]]]),
            Gate::Cx(..) => gates::cnot(),
        }
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::S(q) => Gate::Sdg(q),
            Gate::Sdg(q) => Gate::S(q),
            Gate::Rx(q, t) => Gate::Rx(q, -t),
            Gate::Ry(q, t) => Gate::Ry(q, -t),
            Gate::Rz(q, t) => Gate::Rz(q, -t),
            Gate::U1q(q, m) => Gate::U1q(q, [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()]),
            ref g => g.clone(),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        validate_targets(&self.qubits(), n)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::Sdg(q) => write!(f, "SDG {q}"),
            Gate::X(q) => write!(f, "X {q}"),
            Gate::Y(q) => write!(f, "Y {q}"),
            Gate::Z(q) => write!(f, "Z {q}"),
            Gate::Rx(q, t) => write!(f, "RX {q} {t:?}"),
            Gate::Ry(q, t) => write!(f, "RY {q} {t:?}"),
            Gate::Rz(q, t) => write!(f, "RZ {q} {t:?}"),
            Gate::U1q(q, m) => {
                write!(f, "U1Q {q}")?;
                for z in m {
                    write!(f, " {:?} {:?}", z.re, z.im)?;
                }
                Ok(())
            }
            Gate::Cx(c, t) => write!(f, "CX {c} {t}"),
        }
    }
}

/// Ordered gate list on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidInput("circuit needs at least one qubit".into()));
        }
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(n_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Same gates on a larger register (extra qubits appended at the end).
    pub fn widened(&self, n_qubits: usize) -> Result<Self> {
        if n_qubits < self.n_qubits {
            return Err(Error::InvalidInput("cannot narrow a circuit".into()));
        }
        Ok(Self {
            n_qubits,
            gates: self.gates.clone(),
        })
    }

    /// `self` followed by `next`, i.e. the unitary `next · self`.
    pub fn then(&self, next: &Circuit) -> Result<Circuit> {
        if next.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: next.n_qubits,
            });
        }
        let mut gates = self.gates.clone();
        gates.extend(next.gates.iter().cloned());
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
        })
    }

    /// Reversed gate order with every gate replaced by its adjoint.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Dense unitary of the whole circuit, capped at [`UNITARY_QUBIT_CAP`].
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        self.unitary_capped(UNITARY_QUBIT_CAP)
    }

    pub fn unitary_capped(&self, cap: usize) -> Result<ComplexMatrix> {
        if self.n_qubits > cap {
            return Err(Error::RegisterTooLarge { n: self.n_qubits, cap });
        }
        let mut u = ComplexMatrix::identity(1 << self.n_qubits);
        for g in &self.gates {
            u = embed(&g.matrix(), &g.qubits(), self.n_qubits)?.matmul(&u);
        }
        Ok(u)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QUBITS {}", self.n_qubits)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let p = ParametricCircuit::from_str(s)?;
        if p.has_parameter() {
            return Err(Error::InvalidInput(
                "circuit contains the free parameter theta; bind it first".into(),
            ));
        }
        p.bind(0.0)
    }
}

/// Rotation angle, possibly proportional to the free parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Fixed(f64),
    /// `scale * theta`.
    Theta(f64),
}

impl Angle {
    pub fn value(self, theta: f64) -> f64 {
        match self {
            Angle::Fixed(v) => v,
            Angle::Theta(s) => s * theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TemplateGate {
    Fixed(Gate),
    Rotation { axis: Axis, qubit: usize, angle: Angle },
}

/// A circuit whose rotation angles may depend on one parameter `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricCircuit {
    n_qubits: usize,
    gates: Vec<TemplateGate>,
}

impl ParametricCircuit {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn has_parameter(&self) -> bool {
        self.gates.iter().any(|g| {
            matches!(
                g,
                TemplateGate::Rotation {
                    angle: Angle::Theta(_),
                    ..
                }
            )
        })
    }

    pub fn bind(&self, theta: f64) -> Result<Circuit> {
        let gates = self
            .gates
            .iter()
            .map(|g| match g {
                TemplateGate::Fixed(g) => g.clone(),
                TemplateGate::Rotation { axis, qubit, angle } => Gate::rotation(*axis, *qubit, angle.value(theta)),
            })
            .collect();
        Circuit::from_gates(self.n_qubits, gates)
    }
}

impl From<&Circuit> for ParametricCircuit {
    fn from(c: &Circuit) -> Self {
        Self {
            n_qubits: c.n_qubits,
            gates: c.gates.iter().cloned().map(TemplateGate::Fixed).collect(),
        }
    }
}

impl fmt::Display for ParametricCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QUBITS {}", self.n_qubits)?;
        for g in &self.gates {
            match g {
                TemplateGate::Fixed(g) => writeln!(f, "{g}")?,
                TemplateGate::Rotation { axis, qubit, angle } => {
                    let name = match axis {
                        Axis::X => "RX",
                        Axis::Y => "RY",
                        Axis::Z => "RZ",
                    };
                    match angle {
                        Angle::Fixed(v) => writeln!(f, "{name} {qubit} {v:?}")?,
                        Angle::Theta(s) => writeln!(f, "{name} {qubit} {s:?}*theta")?,
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("expected qubit index, found '{tok}'")))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("expected number, found '{tok}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite number '{tok}'")));
    }
    Ok(v)
}

fn parse_angle(tok: &str, line: usize) -> Result<Angle> {
    let lower = tok.to_ascii_lowercase();
    if lower == "theta" {
        return Ok(Angle::Theta(1.0));
    }
    if lower == "-theta" {
        return Ok(Angle::Theta(-1.0));
    }
    if let Some(scale) = lower.strip_suffix("*theta") {
        return Ok(Angle::Theta(parse_f64(scale, line)?));
    }
    Ok(Angle::Fixed(parse_f64(tok, line)?))
}

impl FromStr for ParametricCircuit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut circuit: Option<ParametricCircuit> = None;
        for (idx, raw) in s.lines().enumerate() {
            let line_no = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            let keyword = toks[0].to_ascii_uppercase();
            let args = &toks[1..];

            let Some(c) = circuit.as_mut() else {
                if keyword != "QUBITS" || args.len() != 1 {
                    return Err(Error::parse(line_no, "first statement must be 'QUBITS n'"));
                }
                let n = parse_usize(args[0], line_no)?;
                if n == 0 {
                    return Err(Error::parse(line_no, "QUBITS must be positive"));
                }
                circuit = Some(ParametricCircuit {
                    n_qubits: n,
                    gates: Vec::new(),
                });
                continue;
            };

            let expect = |k: usize| -> Result<()> {
                if args.len() == k {
                    Ok(())
                } else {
                    Err(Error::parse(
                        line_no,
                        format!("{keyword} takes {k} argument(s), found {}", args.len()),
                    ))
                }
            };
            let gate = match keyword.as_str() {
                "H" | "S" | "SDG" | "X" | "Y" | "Z" => {
                    expect(1)?;
                    let q = parse_usize(args[0], line_no)?;
                    TemplateGate::Fixed(match keyword.as_str() {
                        "H" => Gate::H(q),
                        "S" => Gate::S(q),
                        "SDG" => Gate::Sdg(q),
                        "X" => Gate::X(q),
                        "Y" => Gate::Y(q),
                        _ => Gate::Z(q),
                    })
                }
                "RX" | "RY" | "RZ" => {
                    expect(2)?;
                    let axis = match keyword.as_str() {
                        "RX" => Axis::X,
                        "RY" => Axis::Y,
                        _ => Axis::Z,
                    };
                    let qubit = parse_usize(args[0], line_no)?;
                    let angle = parse_angle(args[1], line_no)?;
                    match angle {
                        Angle::Fixed(t) => TemplateGate::Fixed(Gate::rotation(axis, qubit, t)),
                        angle => TemplateGate::Rotation { axis, qubit, angle },
                    }
                }
                "CX" | "CNOT" => {
                    expect(2)?;
                    let ctrl = parse_usize(args[0], line_no)?;
                    let tgt = parse_usize(args[1], line_no)?;
                    TemplateGate::Fixed(Gate::Cx(ctrl, tgt))
                }
                "U1Q" => {
                    expect(9)?;
                    let q = parse_usize(args[0], line_no)?;
                    let mut vals = [0.0; 8];
                    for (v, tok) in vals.iter_mut().zip(&args[1..]) {
                        *v = parse_f64(tok, line_no)?;
                    }
                    let entries: Vec<C64> = vals.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
                    let m = ComplexMatrix::from_vec(2, 2, entries).map_err(|e| Error::parse(line_no, e.to_string()))?;
                    TemplateGate::Fixed(Gate::u1q(q, &m, 1e-10).map_err(|e| Error::parse(line_no, e.to_string()))?)
                }
                other => return Err(Error::parse(line_no, format!("unknown gate '{other}'"))),
            };
            let qubits = match &gate {
                TemplateGate::Fixed(g) => g.qubits(),
                TemplateGate::Rotation { qubit, .. } => vec![*qubit],
            };
            validate_targets(&qubits, c.n_qubits).map_err(|e| Error::parse(line_no, e.to_string()))?;
            c.gates.push(gate);
        }
        circuit.ok_or_else(|| Error::parse(0, "missing 'QUBITS n' header"))
    }
}
