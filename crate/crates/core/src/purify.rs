//! Mitigated estimators built from pipeline statistics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig2_hermitian, ComplexMatrix, Tolerances, C64, ONE};
use crate::sim::{AncillaResult, ProjectiveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Unmitigated expectation.
    Raw,
    /// Projective intermediate measurement, no ancilla.
    DspProjective,
    /// Ancilla circuit with the `X`/`Z` ancilla expectations.
    DspPauli,
    /// Ancilla circuit with the purified ancilla state.
    DspTomography,
    /// Direct trace formula on simulated `rho` and its dual.
    Analytic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::DspProjective => "dsp_projective",
            Method::DspPauli => "dsp_pauli",
            Method::DspTomography => "dsp_tomography",
            Method::Analytic => "analytic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Side information reported next to an estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub p_tilde: Option<f64>,
    pub denominator: Option<f64>,
    /// `|<Y_a>|`; vanishes without noise but is never used for correction.
    pub cond_y_abs: Option<f64>,
    /// Purity of the ancilla state before purification.
    pub purity: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MitigatedEstimate {
    pub value: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl MitigatedEstimate {
    pub fn raw(value: f64) -> Self {
        Self {
            value,
            method: Method::Raw,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// `(P̃_00 - P̃_01) / P_0`.
pub fn estimate_projective(p00: f64, p01: f64, p0: f64, tol: &Tolerances) -> Result<MitigatedEstimate> {
    if p0 <= tol.denominator_floor {
        return Err(Error::DenominatorVanished(p0));
    }
    Ok(MitigatedEstimate {
        value: (p00 - p01) / p0,
        method: Method::DspProjective,
        diagnostics: Diagnostics {
            p_tilde: Some(p00 + p01),
            denominator: Some(p0),
            ..Diagnostics::default()
        },
    })
}

/// `<Z_a> / (1 + <X_a>)`.
pub fn estimate_pauli(cond_z: f64, cond_x: f64, tol: &Tolerances) -> Result<MitigatedEstimate> {
    let den = 1.0 + cond_x;
    if den <= tol.denominator_floor {
        return Err(Error::DenominatorCollapse(den));
    }
    Ok(MitigatedEstimate {
        value: cond_z / den,
        method: Method::DspPauli,
        diagnostics: Diagnostics {
            denominator: Some(den),
            ..Diagnostics::default()
        },
    })
}

/// Replaces the ancilla Bloch vector by the pure state along it, then
/// applies [`estimate_pauli`]. Vectors longer than one are first scaled back
/// onto the sphere.
pub fn tomography_purify(cond_x: f64, cond_y: f64, cond_z: f64, tol: &Tolerances) -> Result<MitigatedEstimate> {
    let norm = (cond_x * cond_x + cond_y * cond_y + cond_z * cond_z).sqrt();
    if norm.is_nan() || norm < tol.tomography_min_norm {
        return Err(Error::TomographyDegenerate(norm));
    }
    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    let (x, y, z) = (cond_x * scale, cond_y * scale, cond_z * scale);
    let half = 0.5;
    let rho = ComplexMatrix::from_rows(&[
        [ONE * (half * (1.0 + z)), C64::new(half * x, -half * y)],
        [C64::new(half * x, half * y), ONE * (half * (1.0 - z))],
    ]);
    let eig = eig2_hermitian(&rho, tol)?;
    let chi = eig.dominant().ok_or(Error::TomographyDegenerate(norm))?;
    let z_chi = chi[0].norm_sqr() - chi[1].norm_sqr();
    let x_chi = 2.0 * (chi[0].conj() * chi[1]).re;
    let mut est = estimate_pauli(z_chi, x_chi, tol)?;
    est.method = Method::DspTomography;
    est.diagnostics.cond_y_abs = Some(cond_y.abs());
    est.diagnostics.purity = Some(0.5 * (1.0 + x * x + y * y + z * z));
    Ok(est)
}

/// Estimate from the projective pipeline.
pub fn from_projective(r: &ProjectiveResult, tol: &Tolerances) -> Result<MitigatedEstimate> {
    estimate_projective(r.p_tilde_0, r.p_tilde_1, r.p0, tol)
}

/// Ancilla pipeline estimate, plain or tomography-purified.
pub fn from_ancilla(r: &AncillaResult, tomography: bool, tol: &Tolerances) -> Result<MitigatedEstimate> {
    let mut est = if tomography {
        tomography_purify(r.cond_x, r.cond_y, r.cond_z, tol)?
    } else {
        estimate_pauli(r.cond_z, r.cond_x, tol)?
    };
    est.diagnostics.p_tilde = Some(r.p_tilde);
    est.diagnostics.cond_y_abs = Some(r.cond_y.abs());
    Ok(est)
}

/// Ancilla statistics of the noiseless circuit given `z = <psi|Z_1|psi>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiselessReference {
    pub p_tilde: f64,
    pub x: f64,
    pub y: f64,
    pub z_a: f64,
}

pub fn noiseless_reference(z: f64) -> NoiselessReference {
    let p_tilde = 0.5 * (1.0 + z * z);
    NoiselessReference {
        p_tilde,
        x: 1.0 / p_tilde - 1.0,
        y: 0.0,
        z_a: z / p_tilde,
    }
}

/// Fidelity after purifying `F|psi><psi| + (p/M) sum_m |psi_m><psi_m|`.
pub fn equal_error_fidelity(f: f64, p: f64, m: f64) -> f64 {
    f * f / (f * f + p * p / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn projective_examples() {
        assert_eq!(estimate_projective(1.0, 0.0, 1.0, &tol()).unwrap().value, 1.0);
        assert!((estimate_projective(0.4, 0.1, 0.6, &tol()).unwrap().value - 0.5).abs() < 1e-15);
        assert!(matches!(
            estimate_projective(0.0, 0.0, 0.0, &tol()),
            Err(Error::DenominatorVanished(_))
        ));
    }

    #[test]
    fn pauli_examples() {
        assert_eq!(estimate_pauli(1.0, 0.0, &tol()).unwrap().value, 1.0);
        assert_eq!(estimate_pauli(0.0, 1.0, &tol()).unwrap().value, 0.0);
        assert!(matches!(
            estimate_pauli(0.1, -1.0, &tol()),
            Err(Error::DenominatorCollapse(_))
        ));
        for z in [-0.9, -0.3, 0.0, 0.25, 0.77] {
            let r = noiseless_reference(z);
            assert!((estimate_pauli(r.z_a, r.x, &tol()).unwrap().value - z).abs() < 1e-14);
        }
    }

    #[test]
    fn tomography_examples() {
        assert!(matches!(
            tomography_purify(0.0, 0.0, 0.0, &tol()),
            Err(Error::TomographyDegenerate(_))
        ));
        let (x, y, z) = (0.6, 0.0, 0.8);
        let pure = tomography_purify(x, y, z, &tol()).unwrap().value;
        assert!((pure - estimate_pauli(z, x, &tol()).unwrap().value).abs() < 1e-12);
        for q in [0.1, 0.5, 0.9] {
            let v = tomography_purify((1.0 - q) * x, 0.0, (1.0 - q) * z, &tol())
                .unwrap()
                .value;
            assert!((v - pure).abs() < 1e-12);
        }
        // unphysical vector is pulled back onto the sphere
        let v = tomography_purify(1.2, 0.0, 1.6, &tol()).unwrap().value;
        assert!((v - pure).abs() < 1e-12);
    }

    #[test]
    fn reference_examples() {
        assert_eq!(
            noiseless_reference(1.0),
            NoiselessReference {
                p_tilde: 1.0,
                x: 0.0,
                y: 0.0,
                z_a: 1.0
            }
        );
        assert_eq!(
            noiseless_reference(0.0),
            NoiselessReference {
                p_tilde: 0.5,
                x: 1.0,
                y: 0.0,
                z_a: 0.0
            }
        );
        let r = noiseless_reference(0.6);
        assert!((r.p_tilde - 0.68).abs() < 1e-15);
        assert!((r.x - 0.470_588_235_294_117_6).abs() < 1e-12);
        assert!((r.z_a - 0.882_352_941_176_470_6).abs() < 1e-12);
    }

    #[test]
    fn equal_error_examples() {
        assert_eq!(equal_error_fidelity(1.0, 0.0, 3.0), 1.0);
        assert!((equal_error_fidelity(0.9, 0.1, 10.0) - 0.81 / 0.811).abs() < 1e-15);
        let infid: Vec<f64> = (1..=16)
            .map(|m| 1.0 - equal_error_fidelity(0.9, 0.1, m as f64))
            .collect();
        assert!(infid.windows(2).all(|w| w[1] < w[0]));
    }

    proptest! {
        #[test]
        fn tomography_is_idempotent(theta in 0.0..3.1f64, phi in -3.1..3.1f64, len in 0.05..1.0f64) {
            let (x, y, z) = (len * theta.sin() * phi.cos(), len * theta.sin() * phi.sin(), len * theta.cos());
            prop_assume!(1.0 + theta.sin() * phi.cos() > 1e-3);
            let first = tomography_purify(x, y, z, &tol()).unwrap().value;
            let unit = (theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
            let again = tomography_purify(unit.0, unit.1, unit.2, &tol()).unwrap().value;
            prop_assert!((first - again).abs() < 1e-9 * (1.0 + first.abs()));
        }
    }
}
