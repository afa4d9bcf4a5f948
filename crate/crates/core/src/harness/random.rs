//! Random-circuit rescaling-factor sweep.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{raw_expectation, Estimator};
use super::{split_seed, with_pool};
use crate::basis::compile_all_to_all;
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{Tolerances, C64};
use crate::noise::{sample_model_appc, sample_model_appe, ModelKind, NoiseModel};
use crate::pauli::{Pauli, PauliString};
use crate::purify;
use crate::sim::{self, PipelineOptions};

/// Haar-random 2x2 unitary: Gram-Schmidt on a complex Gaussian matrix,
/// which equals QR with a positive diagonal in `R`.
pub fn haar_unitary_2x2(rng: &mut impl Rng) -> [C64; 4] {
    let mut gauss = || C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let g0 = [gauss(), gauss()];
    let g1 = [gauss(), gauss()];
    let n0 = (g0[0].norm_sqr() + g0[1].norm_sqr()).sqrt();
    let c0 = [g0[0] / n0, g0[1] / n0];
    let proj = c0[0].conj() * g1[0] + c0[1].conj() * g1[1];
    let r1 = [g1[0] - proj * c0[0], g1[1] - proj * c0[1]];
    let n1 = (r1[0].norm_sqr() + r1[1].norm_sqr()).sqrt();
    let c1 = [r1[0] / n1, r1[1] / n1];
    [c0[0], c1[0], c0[1], c1[1]]
}

/// A Haar layer on every qubit, then `n_g` rounds of a CNOT on a uniformly
/// random ordered pair followed by Haar gates on both of its qubits.
pub fn generate_random_circuit(n: usize, n_g: usize, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidInput("random circuits need at least two qubits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n)?;
    for q in 0..n {
        c.push(Gate::U1q(q, haar_unitary_2x2(&mut rng)))?;
    }
    for _ in 0..n_g {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        c.push(Gate::Cx(a, b))?;
        c.push(Gate::U1q(a, haar_unitary_2x2(&mut rng)))?;
        c.push(Gate::U1q(b, haar_unitary_2x2(&mut rng)))?;
    }
    Ok(c)
}

/// `Z` on qubit 0; every other qubit `I` or `Z` with probability 1/2.
pub fn sample_random_observable(n: usize, seed: u64) -> Result<PauliString> {
    if n == 0 {
        return Err(Error::InvalidInput("observable needs at least one qubit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![Pauli::Z];
    w.extend((1..n).map(|_| if rng.random_bool(0.5) { Pauli::Z } else { Pauli::I }));
    PauliString::new(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomTestConfig {
    pub n: usize,
    /// Gate density: the circuit has `round(g n^2)` CNOTs.
    pub g: f64,
    /// Total error rate; the per-gate average is `eps_t / n_g`.
    pub eps_t: f64,
    pub n_circuits: usize,
    pub seed: u64,
    pub model: ModelKind,
    /// Subset of `raw`, `dsp`, `tp`; unselected columns are written as NaN.
    pub methods: Vec<Estimator>,
}

impl RandomTestConfig {
    pub fn n_g(&self) -> usize {
        (self.g * (self.n * self.n) as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput("n must be at least 2".into()));
        }
        if self.n_g() < 1 {
            return Err(Error::InvalidInput("g n^2 must round to at least one gate".into()));
        }
        if self.eps_t.is_nan() || self.eps_t < 0.0 {
            return Err(Error::InvalidInput("eps_t must be non-negative".into()));
        }
        if self.model == ModelKind::Explicit {
            return Err(Error::InvalidInput("random test samples appc or appe models".into()));
        }
        for m in &self.methods {
            if !matches!(m, Estimator::Raw | Estimator::Dsp | Estimator::Tp) {
                return Err(Error::InvalidInput(format!(
                    "method {m} not available in the random test"
                )));
            }
        }
        Ok(())
    }

    fn wants(&self, m: Estimator) -> bool {
        self.methods.contains(&m)
    }

    /// Noise model over the register plus ancilla.
    pub fn sample_model(&self, seed: u64) -> Result<NoiseModel> {
        let n_g = self.n_g();
        match self.model {
            ModelKind::Appc => sample_model_appc(self.n + 1, n_g, self.eps_t, seed),
            ModelKind::Appe => sample_model_appe(self.n + 1, self.eps_t / n_g as f64, seed),
            ModelKind::Explicit => Err(Error::InvalidInput("explicit model in random test".into())),
        }
    }
}

/// One circuit of the sweep. Failed estimates are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub n_g: usize,
    pub eps_t: f64,
    pub model: ModelKind,
    pub circuit_id: usize,
    pub seed: u64,
    pub o_ef: f64,
    pub o_n: f64,
    pub o_dsp: f64,
    pub o_tp: f64,
    pub p_tilde: f64,
}

impl ExperimentRecord {
    pub fn value(&self, m: Estimator) -> f64 {
        match m {
            Estimator::Ef => self.o_ef,
            Estimator::Raw => self.o_n,
            Estimator::Dsp => self.o_dsp,
            Estimator::Tp => self.o_tp,
            _ => f64::NAN,
        }
    }

    /// Bitwise equality, treating NaN fields as equal to themselves.
    pub fn same_bits(&self, other: &Self) -> bool {
        let f = |r: &Self| [r.eps_t, r.o_ef, r.o_n, r.o_dsp, r.o_tp, r.p_tilde].map(f64::to_bits);
        self.n == other.n
            && self.n_g == other.n_g
            && self.model == other.model
            && self.circuit_id == other.circuit_id
            && self.seed == other.seed
            && f(self) == f(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub n_g: usize,
    pub eps_t: f64,
    pub model: ModelKind,
    pub method: Estimator,
    /// NaN when undefined.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomTestOutput {
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<SummaryRow>,
    /// Per-circuit failures as `(circuit_id, error name)`.
    pub failures: Vec<(usize, String)>,
    /// Records left out of each summary row's average.
    pub excluded: Vec<(Estimator, usize)>,
}

/// `mean |em| / mean |n|` over paired error lists.
pub fn rescaling_factor(em_errors: &[f64], n_errors: &[f64], tol: &Tolerances) -> Result<f64> {
    if em_errors.len() != n_errors.len() {
        return Err(Error::DimensionMismatch {
            expected: n_errors.len(),
            found: em_errors.len(),
        });
    }
    if em_errors.is_empty() {
        return Err(Error::InvalidInput("no records to average".into()));
    }
    let mean = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64;
    let den = mean(n_errors);
    if den <= tol.denominator_floor {
        return Err(Error::DenominatorVanished(den));
    }
    Ok(mean(em_errors) / den)
}

/// Rescaling factor of `method` over `records`; records with a non-finite
/// value are skipped and counted.
pub fn records_rescaling_factor(records: &[ExperimentRecord], method: Estimator) -> (Result<f64>, usize) {
    let mut em = Vec::new();
    let mut raw = Vec::new();
    let mut excluded = 0;
    for r in records {
        let v = r.value(method);
        if v.is_finite() && r.o_n.is_finite() && r.o_ef.is_finite() {
            em.push(v - r.o_ef);
            raw.push(r.o_n - r.o_ef);
        } else {
            excluded += 1;
        }
    }
    (rescaling_factor(&em, &raw, &Tolerances::default()), excluded)
}

fn run_one(cfg: &RandomTestConfig, id: usize) -> Result<(ExperimentRecord, Option<String>)> {
    let n = cfg.n;
    let n_g = cfg.n_g();
    let child = split_seed(cfg.seed, id as u64);
    let a = generate_random_circuit(n, n_g, split_seed(child, 0))?;
    let sigma = sample_random_observable(n, split_seed(child, 1))?;
    let nm = cfg.sample_model(split_seed(child, 2))?;

    let mut rec = ExperimentRecord {
        n,
        n_g,
        eps_t: cfg.eps_t,
        model: cfg.model,
        circuit_id: id,
        seed: child,
        o_ef: sigma.expectation_pure(&sim::statevector(&a)),
        o_n: f64::NAN,
        o_dsp: f64::NAN,
        o_tp: f64::NAN,
        p_tilde: f64::NAN,
    };
    let mut failure = None;
    if cfg.wants(Estimator::Raw) {
        rec.o_n = raw_expectation(&a, &sigma, &nm)?;
    }
    if cfg.wants(Estimator::Dsp) || cfg.wants(Estimator::Tp) {
        let basis = compile_all_to_all(&sigma)?;
        let opts = PipelineOptions {
            pivot: basis.pivot,
            ..PipelineOptions::default()
        };
        match sim::run_pipeline_ancilla(&a, &basis.circuit, &nm, &opts) {
            Ok(r) => {
                rec.p_tilde = r.p_tilde;
                for (m, tomography) in [(Estimator::Dsp, false), (Estimator::Tp, true)] {
                    if !cfg.wants(m) {
                        continue;
                    }
                    match purify::from_ancilla(&r, tomography, &opts.tol) {
                        Ok(e) if m == Estimator::Dsp => rec.o_dsp = e.value,
                        Ok(e) => rec.o_tp = e.value,
                        Err(e) => failure = Some(e.name().to_string()),
                    }
                }
            }
            Err(e) if e.is_input_error() => return Err(e),
            Err(e) => failure = Some(e.name().to_string()),
        }
    }
    Ok((rec, failure))
}

/// Runs the sweep on `jobs` worker threads (0 = all cores). Output is
/// ordered by circuit id and independent of `jobs`.
pub fn run_random_test(cfg: &RandomTestConfig, jobs: usize) -> Result<RandomTestOutput> {
    cfg.validate()?;
    let results: Vec<Result<(ExperimentRecord, Option<String>)>> = with_pool(jobs, || {
        (0..cfg.n_circuits).into_par_iter().map(|id| run_one(cfg, id)).collect()
    })?;
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        let (rec, fail) = r?;
        if let Some(f) = fail {
            failures.push((rec.circuit_id, f));
        }
        records.push(rec);
    }
    let mut summary = Vec::new();
    let mut excluded = Vec::new();
    if cfg.wants(Estimator::Raw) {
        for m in [Estimator::Dsp, Estimator::Tp] {
            if !cfg.wants(m) {
                continue;
            }
            let (r, skipped) = records_rescaling_factor(&records, m);
            summary.push(SummaryRow {
                n: cfg.n,
                n_g: cfg.n_g(),
                eps_t: cfg.eps_t,
                model: cfg.model,
                method: m,
                r: r.unwrap_or(f64::NAN),
            });
            excluded.push((m, skipped));
        }
    }
    Ok(RandomTestOutput {
        records,
        summary,
        failures,
        excluded,
    })
}

/// CSV text of `rows` with a header line.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    std::fs::write(path, csv_bytes(rows)?)?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
