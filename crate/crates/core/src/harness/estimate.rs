use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::basis::{compile, compile_single_qubit_layer, Topology};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::linalg::Tolerances;
use crate::noise::NoiseModel;
use crate::pauli::{Pauli, PauliString};
use crate::purify::{self, Diagnostics};
use crate::sim::{self, PipelineOptions, ProgramBuilder};

/// How an expectation value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Noiseless state vector.
    Ef,
    /// Noisy circuit measured directly, no mitigation.
    Raw,
    /// Projective intermediate measurement without ancilla.
    DspProjective,
    /// Ancilla circuit, `<Z_a>/(1+<X_a>)`.
    Dsp,
    /// Ancilla circuit with tomography purification.
    Tp,
    /// Trace formula on simulated `rho` and dual state.
    Analytic,
}

impl Estimator {
    pub const ALL: [Estimator; 6] = [
        Estimator::Ef,
        Estimator::Raw,
        Estimator::DspProjective,
        Estimator::Dsp,
        Estimator::Tp,
        Estimator::Analytic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Ef => "ef",
            Estimator::Raw => "raw",
            Estimator::DspProjective => "dsp_projective",
            Estimator::Dsp => "dsp",
            Estimator::Tp => "tp",
            Estimator::Analytic => "analytic",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateConfig {
    pub topology: Topology,
    /// 0 selects exact expectations.
    pub shots: u64,
    pub seed: u64,
    pub noisy_intermediate: bool,
    pub tol: Tolerances,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            topology: Topology::AllToAll,
            shots: 0,
            seed: 0,
            noisy_intermediate: true,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateOutput {
    pub value: f64,
    pub diagnostics: Diagnostics,
}

impl EstimateOutput {
    fn plain(value: f64) -> Self {
        Self {
            value,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Unmitigated `<sigma>` after the noisy circuit `a`: noiseless basis
/// rotation, readout channels, then the `Z` parity.
pub(crate) fn raw_expectation(a: &Circuit, sigma: &PauliString, nm: &NoiseModel) -> Result<f64> {
    let n = a.n_qubits();
    let (layer, prime) = compile_single_qubit_layer(sigma)?;
    let mut pb = ProgramBuilder::new(n, nm);
    pb.circuit(a, true)?.circuit(&layer, false)?;
    for q in 0..n {
        if prime.get(q) == Pauli::Z {
            pb.readout(q)?;
        }
    }
    let mut rho = sim::initial_state(nm, n)?;
    pb.finish().apply(&mut rho)?;
    rho.expectation(&prime)
}

fn check_lengths(a: &Circuit, sigma: &PauliString, nm: &NoiseModel) -> Result<()> {
    if sigma.len() != a.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: a.n_qubits(),
            found: sigma.len(),
        });
    }
    if nm.n_qubits < a.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: a.n_qubits(),
            found: nm.n_qubits,
        });
    }
    Ok(())
}

/// `<sigma>` on the state prepared by `a` under `nm`, by `method`.
///
/// The ancilla of the one-ancilla circuit is qubit `n` of `nm`; a model
/// covering only the register leaves it noiseless.
pub fn estimate_observable(
    a: &Circuit,
    sigma: &PauliString,
    nm: &NoiseModel,
    method: Estimator,
    cfg: &EstimateConfig,
) -> Result<EstimateOutput> {
    check_lengths(a, sigma, nm)?;
    if sigma.is_identity() {
        return Ok(EstimateOutput::plain(1.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if method == Estimator::Ef {
        return Ok(EstimateOutput::plain(sigma.expectation_pure(&sim::statevector(a))));
    }
    if method == Estimator::Raw {
        let v = raw_expectation(a, sigma, nm)?;
        if cfg.shots == 0 {
            return Ok(EstimateOutput::plain(v));
        }
        let p = (0.5 * (1.0 + v)).clamp(0.0, 1.0);
        let k = Binomial::new(cfg.shots, p)
            .map_err(|e| Error::InvalidInput(format!("binomial: {e}")))?
            .sample(&mut rng);
        return Ok(EstimateOutput::plain(2.0 * k as f64 / cfg.shots as f64 - 1.0));
    }

    let basis = compile(sigma, cfg.topology)?;
    let opts = PipelineOptions {
        pivot: basis.pivot,
        noisy_intermediate: cfg.noisy_intermediate,
        tol: cfg.tol,
    };
    let est = match method {
        Estimator::DspProjective => {
            let mut r = sim::run_pipeline_no_ancilla(a, &basis.circuit, nm, &opts)?;
            if cfg.shots > 0 {
                r = sim::sample_projective(&r, cfg.shots, &mut rng)?;
            }
            purify::from_projective(&r, &cfg.tol)?
        }
        Estimator::Dsp | Estimator::Tp => {
            let mut r = sim::run_pipeline_ancilla(a, &basis.circuit, nm, &opts)?;
            if cfg.shots > 0 {
                r = sim::sample_ancilla(&r, cfg.shots, &mut rng)?;
            }
            purify::from_ancilla(&r, method == Estimator::Tp, &cfg.tol)?
        }
        Estimator::Analytic => {
            let n = a.n_qubits();
            let u = a.then(&basis.circuit)?;
            let rho = sim::run_forward(&u, nm, &sim::initial_state(nm, n)?)?;
            let rho_bar = sim::run_dual(&u.inverse(), nm, &sim::final_povm(nm, n)?)?;
            let z = PauliString::z_on(basis.pivot, n).matrix();
            let value = sim::analytic_estimate(&rho, &rho_bar, &z, &cfg.tol)?;
            purify::MitigatedEstimate {
                value,
                method: purify::Method::Analytic,
                diagnostics: Diagnostics::default(),
            }
        }
        Estimator::Ef | Estimator::Raw => unreachable!("handled above"),
    };
    Ok(EstimateOutput {
        value: est.value,
        diagnostics: est.diagnostics,
    })
}
