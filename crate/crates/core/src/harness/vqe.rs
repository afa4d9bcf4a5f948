//! Variational energy of a Pauli-sum Hamiltonian with a one-parameter ansatz.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{estimate_observable, EstimateConfig, Estimator};
use super::{split_seed, with_pool};
use crate::basis::Topology;
use crate::circuit::ParametricCircuit;
use crate::error::{Error, Result};
use crate::noise::{sample_model_appc, sample_model_appe, ModelKind, NoiseModel};
use crate::pauli::{Observable, Pauli, PauliString};
use crate::sim;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianTerm {
    pub pauli: PauliString,
    pub coeff: f64,
}

/// Qubit Hamiltonian `sum_k h_k sigma_k` with coefficients in Hartree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub n_qubits: usize,
    pub terms: Vec<HamiltonianTerm>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub meta: serde_json::Value,
}

impl HamiltonianSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let h: HamiltonianSpec = serde_json::from_str(text)?;
        h.validate()?;
        Ok(h)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidInput("Hamiltonian has no terms".into()));
        }
        for t in &self.terms {
            if t.pauli.len() != self.n_qubits {
                return Err(Error::InvalidInput(format!(
                    "term {} does not have {} qubits",
                    t.pauli, self.n_qubits
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coefficient for {}", t.pauli)));
            }
        }
        Ok(())
    }

    /// Checks the 4-qubit two-electron layout: identity, four `Z`, six `ZZ`
    /// and four `X`/`Y` quartets.
    pub fn has_h2_structure(&self) -> bool {
        if self.n_qubits != 4 || self.terms.len() != 15 {
            return false;
        }
        let mut counts = [0usize; 4];
        for t in &self.terms {
            let w = t.pauli.word();
            let slot = if t.pauli.is_identity() {
                0
            } else if t.pauli.is_diagonal() && t.pauli.weight() == 1 {
                1
            } else if t.pauli.is_diagonal() && t.pauli.weight() == 2 {
                2
            } else if w.iter().all(|&p| matches!(p, Pauli::X | Pauli::Y))
                && w.iter().filter(|&&p| p == Pauli::Y).count() % 2 == 0
            {
                3
            } else {
                return false;
            };
            counts[slot] += 1;
        }
        counts == [1, 4, 6, 4]
    }

    pub fn observable(&self) -> Result<Observable> {
        Observable::new(self.terms.iter().map(|t| (t.coeff, t.pauli.clone())).collect())
    }
}

/// `sum_k h_k <sigma_k>` with every non-identity term estimated by `method`
/// on the bound ansatz.
pub fn vqe_energy(
    h: &HamiltonianSpec,
    ansatz: &ParametricCircuit,
    theta: f64,
    nm: &NoiseModel,
    method: Estimator,
    cfg: &EstimateConfig,
) -> Result<f64> {
    if ansatz.n_qubits() != h.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: h.n_qubits,
            found: ansatz.n_qubits(),
        });
    }
    let a = ansatz.bind(theta)?;
    let mut energy = 0.0;
    for (k, t) in h.terms.iter().enumerate() {
        if t.pauli.is_identity() {
            energy += t.coeff;
            continue;
        }
        let term_cfg = EstimateConfig {
            seed: split_seed(cfg.seed, k as u64),
            ..*cfg
        };
        let v = estimate_observable(&a, &t.pauli, nm, method, &term_cfg).map_err(|e| Error::Term {
            term: t.pauli.to_string(),
            source: Box::new(e),
        })?;
        energy += t.coeff * v.value;
    }
    Ok(energy)
}

/// Identity terms are added exactly so that a constant Hamiltonian gives a
/// constant energy.
fn noiseless_energy(h: &HamiltonianSpec, ansatz: &ParametricCircuit, theta: f64) -> Result<f64> {
    let psi = sim::statevector(&ansatz.bind(theta)?);
    Ok(h.terms
        .iter()
        .map(|t| match t.pauli.is_identity() {
            true => t.coeff,
            false => t.coeff * t.pauli.expectation_pure(&psi),
        })
        .sum())
}

pub const GRID_POINTS: usize = 401;
pub const THETA_TOL: f64 = 1e-6;

/// Noiseless energy minimum over `[-pi, pi]`: a 401-point grid (lowest
/// angle wins ties) refined by golden-section search between the grid
/// neighbours. The refined angle replaces the grid one only if strictly
/// lower in energy.
pub fn optimize_theta(h: &HamiltonianSpec, ansatz: &ParametricCircuit) -> Result<f64> {
    h.validate()?;
    let step = 2.0 * PI / (GRID_POINTS - 1) as f64;
    let grid = |i: usize| -PI + step * i as f64;
    let mut best = (0usize, noiseless_energy(h, ansatz, grid(0))?);
    for i in 1..GRID_POINTS {
        let e = noiseless_energy(h, ansatz, grid(i))?;
        if e < best.1 {
            best = (i, e);
        }
    }
    let (i, e_grid) = best;
    let (mut lo, mut hi) = (grid(i.saturating_sub(1)), grid((i + 1).min(GRID_POINTS - 1)));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = noiseless_energy(h, ansatz, x1)?;
    let mut f2 = noiseless_energy(h, ansatz, x2)?;
    while hi - lo > THETA_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = noiseless_energy(h, ansatz, x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = noiseless_energy(h, ansatz, x2)?;
        }
    }
    let refined = 0.5 * (lo + hi);
    let e_ref = noiseless_energy(h, ansatz, refined)?;
    Ok(if e_ref < e_grid { refined } else { grid(i) })
}

/// One bond distance of a VQE run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqePoint {
    pub distance: f64,
    pub hamiltonian: HamiltonianSpec,
    /// Fixed angle; `None` optimizes it noiselessly first.
    #[serde(default)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum VqeNoise {
    Noiseless,
    Explicit {
        model: NoiseModel,
    },
    /// `n_models` models with seeds split from `seed`. For `appc`, `eps`
    /// is the total rate spread over the ansatz CNOTs.
    Sampled {
        kind: ModelKind,
        eps: f64,
        n_models: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeConfig {
    pub points: Vec<VqePoint>,
    /// Ansatz in circuit-file text with the free parameter `theta`.
    pub ansatz: String,
    pub noise: VqeNoise,
    pub methods: Vec<Estimator>,
    pub topology: Topology,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeRow {
    pub distance: f64,
    pub theta: f64,
    pub method: Estimator,
    pub energy: f64,
    pub model_seed: Option<u64>,
}

fn models(cfg: &VqeConfig, n: usize, n_cnot: usize) -> Result<Vec<(Option<u64>, NoiseModel)>> {
    match &cfg.noise {
        VqeNoise::Noiseless => Ok(vec![(None, NoiseModel::noiseless(n + 1))]),
        VqeNoise::Explicit { model } => {
            model.validate()?;
            Ok(vec![(model.seed, model.clone())])
        }
        VqeNoise::Sampled {
            kind,
            eps,
            n_models,
            seed,
        } => (0..*n_models as u64)
            .map(|k| {
                let s = split_seed(*seed, k);
                let m = match kind {
                    ModelKind::Appc => sample_model_appc(n + 1, n_cnot.max(1), *eps, s)?,
                    ModelKind::Appe => sample_model_appe(n + 1, *eps, s)?,
                    ModelKind::Explicit => return Err(Error::InvalidInput("sampled noise needs appc or appe".into())),
                };
                Ok((Some(s), m))
            })
            .collect(),
    }
}

/// Energies for every point, model and method. The noiseless `ef` energy
/// is reported once per point without a model seed.
pub fn run_vqe(cfg: &VqeConfig, jobs: usize) -> Result<Vec<VqeRow>> {
    let ansatz: ParametricCircuit = cfg.ansatz.parse()?;
    if cfg.points.is_empty() {
        return Err(Error::InvalidInput("no bond distances given".into()));
    }
    for p in &cfg.points {
        p.hamiltonian.validate()?;
    }
    let n = ansatz.n_qubits();
    let n_cnot = ansatz.bind(0.0)?.cnot_count();
    let models = models(cfg, n, n_cnot)?;

    let thetas: Vec<f64> = cfg
        .points
        .iter()
        .map(|p| match p.theta {
            Some(t) => Ok(t),
            None => optimize_theta(&p.hamiltonian, &ansatz),
        })
        .collect::<Result<_>>()?;

    let noisy_methods: Vec<Estimator> = cfg.methods.iter().copied().filter(|&m| m != Estimator::Ef).collect();
    let tasks: Vec<(usize, usize)> = (0..cfg.points.len())
        .flat_map(|p| (0..models.len()).map(move |m| (p, m)))
        .collect();
    let results: Vec<Result<Vec<VqeRow>>> = with_pool(jobs, || {
        tasks
            .par_iter()
            .map(|&(pi, mi)| {
                let point = &cfg.points[pi];
                let (model_seed, nm) = &models[mi];
                let est = EstimateConfig {
                    topology: cfg.topology,
                    shots: cfg.shots,
                    seed: split_seed(cfg.seed, (pi * models.len() + mi) as u64),
                    ..EstimateConfig::default()
                };
                let mut rows = Vec::new();
                if mi == 0 && cfg.methods.contains(&Estimator::Ef) {
                    rows.push(VqeRow {
                        distance: point.distance,
                        theta: thetas[pi],
                        method: Estimator::Ef,
                        energy: vqe_energy(&point.hamiltonian, &ansatz, thetas[pi], nm, Estimator::Ef, &est)?,
                        model_seed: None,
                    });
                }
                for &m in &noisy_methods {
                    rows.push(VqeRow {
                        distance: point.distance,
                        theta: thetas[pi],
                        method: m,
                        energy: vqe_energy(&point.hamiltonian, &ansatz, thetas[pi], nm, m, &est)?,
                        model_seed: *model_seed,
                    });
                }
                Ok(rows)
            })
            .collect()
    })?;
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}
