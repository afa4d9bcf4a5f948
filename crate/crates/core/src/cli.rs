//! Command-line driver. Every command that writes files also writes a
//! `manifest.json` holding the full configuration, from which `rerun`
//! regenerates the same files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::basis::{compile, Topology};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::harness::vqe::{VqeNoise, VqePoint};
use crate::harness::{
    csv_bytes, estimate_observable, run_random_test, run_vqe, EstimateConfig, Estimator, HamiltonianSpec,
    RandomTestConfig, VqeConfig,
};
use crate::noise::{sample_model_appc, sample_model_appe, ModelKind, NoiseModel};
use crate::pauli::PauliString;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "dualpure",
    version,
    about = "Dual-state and tomography purification on a density-matrix simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a Pauli expectation value after a circuit.
    Estimate(EstimateArgs),
    /// Random-circuit sweep of rescaling factors.
    RandomTest(RandomTestArgs),
    /// Energies of the H2 ansatz per bond distance and method.
    Vqe(VqeArgs),
    /// Print the measurement-basis circuit for a Pauli string.
    CompileBasis(CompileBasisArgs),
    /// Sample an appc or appe noise model and print it as JSON.
    SampleNoise(SampleNoiseArgs),
    /// Re-run a manifest and compare the regenerated files byte for byte.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Circuit file.
    #[arg(long)]
    pub circuit: PathBuf,
    /// Pauli string, one character per qubit.
    #[arg(long)]
    pub observable: String,
    /// Noise model JSON; noiseless when omitted.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Comma-separated methods, or `all`.
    #[arg(long, default_value = "all")]
    pub method: String,
    #[arg(long, default_value = "all-to-all")]
    pub topology: Topology,
    /// Treat the intermediate CNOT and its readout as noiseless.
    #[arg(long)]
    pub ideal_intermediate: bool,
    /// Shots per setting; 0 gives exact expectations.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write estimate.csv and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RandomTestArgs {
    /// JSON config; the flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Gate density, `n_g = round(g n^2)`.
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub eps_t: Option<f64>,
    #[arg(long)]
    pub circuits: Option<usize>,
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Comma-separated subset of raw, dsp, tp.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VqeArgs {
    /// JSON config; when given the other inputs are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hamiltonian JSON, once per bond distance.
    #[arg(long)]
    pub hamiltonian: Vec<PathBuf>,
    /// Bond distance per Hamiltonian; defaults to `meta.distance_angstrom`.
    #[arg(long)]
    pub distance: Vec<f64>,
    /// Ansatz circuit file with the free parameter `theta`.
    #[arg(long)]
    pub ansatz: Option<PathBuf>,
    /// Fixed angle, either one for all points or one per point.
    #[arg(long, conflicts_with = "optimize")]
    pub theta: Vec<f64>,
    /// Optimize the angle noiselessly per point (the default without --theta).
    #[arg(long)]
    pub optimize: bool,
    /// Explicit noise model JSON.
    #[arg(long, conflicts_with = "model")]
    pub noise: Option<PathBuf>,
    /// Sample models of this kind instead.
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long, default_value_t = 0.02)]
    pub eps: f64,
    #[arg(long, default_value_t = 10)]
    pub models: usize,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    #[arg(long, default_value = "ef,raw,dsp,tp")]
    pub methods: String,
    #[arg(long, default_value = "linear")]
    pub topology: Topology,
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompileBasisArgs {
    pub pauli: String,
    #[arg(long, default_value = "all-to-all")]
    pub topology: Topology,
}

#[derive(Debug, Args)]
pub struct SampleNoiseArgs {
    #[arg(long)]
    pub model: ModelKind,
    /// Qubits covered, ancilla included.
    #[arg(long)]
    pub n: usize,
    /// Per-gate rate for appe, total rate for appc.
    #[arg(long)]
    pub eps: f64,
    /// CNOT count the appc total rate is spread over.
    #[arg(long)]
    pub n_gates: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Write the regenerated files here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Self-contained description of a run; embedded in every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum Job {
    Estimate(EstimateJob),
    RandomTest(RandomTestConfig),
    Vqe(VqeConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateJob {
    /// Circuit-file text.
    pub circuit: String,
    pub observable: String,
    pub noise: Option<NoiseModel>,
    pub methods: Vec<Estimator>,
    pub topology: Topology,
    pub noisy_intermediate: bool,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    #[serde(flatten)]
    pub job: Job,
    /// Root seeds; every other seed is split from these.
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub duration_s: f64,
    pub outputs: Vec<String>,
}

/// Files produced by a job plus the text printed to stdout.
pub struct JobOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: String,
}

#[derive(Serialize)]
struct EstimateRow {
    method: Estimator,
    value: f64,
    p_tilde: Option<f64>,
    denominator: Option<f64>,
    cond_y_abs: Option<f64>,
    purity: Option<f64>,
}

/// Exit status for a failed run: 2 for bad input, 3 for numerical failure.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse_methods(list: &str, allowed: &[Estimator]) -> Result<Vec<Estimator>> {
    if list.trim() == "all" {
        return Ok(allowed.to_vec());
    }
    let mut out = Vec::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let m: Estimator = tok.parse()?;
        if !allowed.contains(&m) {
            return Err(Error::InvalidInput(format!("method {m} not available here")));
        }
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no methods selected".into()));
    }
    Ok(out)
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:?}"))
}

impl Job {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            Job::Estimate(j) => std::iter::once(j.seed)
                .chain(j.noise.as_ref().and_then(|m| m.seed))
                .collect(),
            Job::RandomTest(c) => vec![c.seed],
            Job::Vqe(c) => match &c.noise {
                VqeNoise::Sampled { seed, .. } => vec![c.seed, *seed],
                VqeNoise::Explicit { model } => std::iter::once(c.seed).chain(model.seed).collect(),
                VqeNoise::Noiseless => vec![c.seed],
            },
        }
    }

    pub fn run(&self, jobs: usize) -> Result<JobOutput> {
        match self {
            Job::Estimate(j) => run_estimate_job(j),
            Job::RandomTest(c) => {
                let out = run_random_test(c, jobs)?;
                let mut report = String::new();
                for s in &out.summary {
                    let _ = writeln!(report, "r_{} = {:?}", s.method, s.r);
                }
                for (id, name) in &out.failures {
                    let _ = writeln!(report, "circuit {id} failed: {name}");
                }
                Ok(JobOutput {
                    files: vec![
                        ("records.csv".into(), csv_bytes(&out.records)?),
                        ("summary.csv".into(), csv_bytes(&out.summary)?),
                    ],
                    report,
                })
            }
            Job::Vqe(c) => {
                let rows = run_vqe(c, jobs)?;
                let mut report = String::new();
                for r in &rows {
                    let _ = writeln!(
                        report,
                        "{:.3}\t{}\t{:?}\t{}",
                        r.distance,
                        r.method,
                        r.energy,
                        r.model_seed.map_or_else(|| "-".into(), |s| s.to_string())
                    );
                }
                Ok(JobOutput {
                    files: vec![("vqe.csv".into(), csv_bytes(&rows)?)],
                    report,
                })
            }
        }
    }
}

fn run_estimate_job(j: &EstimateJob) -> Result<JobOutput> {
    let a: Circuit = j.circuit.parse()?;
    let sigma: PauliString = j.observable.parse()?;
    let nm = match &j.noise {
        Some(m) => {
            m.validate()?;
            m.clone()
        }
        None => NoiseModel::noiseless(a.n_qubits() + 1),
    };
    let cfg = EstimateConfig {
        topology: j.topology,
        shots: j.shots,
        seed: j.seed,
        noisy_intermediate: j.noisy_intermediate,
        ..EstimateConfig::default()
    };
    let mut rows = Vec::new();
    let mut report = String::from("method\tvalue\tp_tilde\tcond_y_abs\n");
    for &m in &j.methods {
        let e = estimate_observable(&a, &sigma, &nm, m, &cfg)?;
        let d = e.diagnostics;
        let _ = writeln!(
            report,
            "{m}\t{:?}\t{}\t{}",
            e.value,
            fmt_opt(d.p_tilde),
            fmt_opt(d.cond_y_abs)
        );
        rows.push(EstimateRow {
            method: m,
            value: e.value,
            p_tilde: d.p_tilde,
            denominator: d.denominator,
            cond_y_abs: d.cond_y_abs,
            purity: d.purity,
        });
    }
    Ok(JobOutput {
        files: vec![("estimate.csv".into(), csv_bytes(&rows)?)],
        report,
    })
}

/// Runs `job`, writes its files and manifest into `out`, returns the report.
pub fn run_and_record(job: Job, jobs: usize, out: &Path) -> Result<String> {
    let start = Instant::now();
    let result = job.run(jobs)?;
    let duration_s = start.elapsed().as_secs_f64();
    fs::create_dir_all(out)?;
    for (name, bytes) in &result.files {
        fs::write(out.join(name), bytes)?;
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        seeds: job.seeds(),
        job,
        jobs,
        duration_s,
        outputs: result.files.iter().map(|(n, _)| n.clone()).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(out.join(MANIFEST_FILE), text + "\n")?;
    Ok(result.report)
}

pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// Regenerates the outputs of the manifest at `path` and lists the files
/// whose bytes differ from those stored beside it.
pub fn rerun(path: &Path, out: Option<&Path>) -> Result<Vec<String>> {
    let manifest = load_manifest(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let result = match out {
        Some(o) => {
            run_and_record(manifest.job.clone(), manifest.jobs, o)?;
            manifest
                .outputs
                .iter()
                .map(|n| Ok((n.clone(), fs::read(o.join(n))?)))
                .collect::<Result<Vec<_>>>()?
        }
        None => manifest.job.run(manifest.jobs)?.files,
    };
    let mut differing = Vec::new();
    for name in &manifest.outputs {
        let old = fs::read(dir.join(name))?;
        let new = result.iter().find(|(n, _)| n == name).map(|(_, b)| b);
        if new != Some(&old) {
            differing.push(name.clone());
        }
    }
    Ok(differing)
}

fn estimate_job(a: &EstimateArgs) -> Result<Job> {
    let noise = match &a.noise {
        Some(p) => Some(NoiseModel::from_json(&read_text(p)?)?),
        None => None,
    };
    Ok(Job::Estimate(EstimateJob {
        circuit: read_text(&a.circuit)?,
        observable: a.observable.clone(),
        noise,
        methods: parse_methods(&a.method, &Estimator::ALL)?,
        topology: a.topology,
        noisy_intermediate: !a.ideal_intermediate,
        shots: a.shots,
        seed: a.seed,
    }))
}

fn random_test_config(a: &RandomTestArgs) -> Result<RandomTestConfig> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str(&read_text(p)?)?,
        None => RandomTestConfig {
            n: a.n
                .ok_or_else(|| Error::InvalidInput("either --config or --n is required".into()))?,
            g: 1.0,
            eps_t: 0.1,
            n_circuits: 25,
            seed: 0,
            model: ModelKind::Appc,
            methods: vec![Estimator::Raw, Estimator::Dsp, Estimator::Tp],
        },
    };
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(g) = a.g {
        cfg.g = g;
    }
    if let Some(e) = a.eps_t {
        cfg.eps_t = e;
    }
    if let Some(c) = a.circuits {
        cfg.n_circuits = c;
    }
    if let Some(m) = a.model {
        cfg.model = m;
    }
    if let Some(m) = &a.methods {
        cfg.methods = parse_methods(m, &[Estimator::Raw, Estimator::Dsp, Estimator::Tp])?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn vqe_config(a: &VqeArgs) -> Result<VqeConfig> {
    if let Some(p) = &a.config {
        return Ok(serde_json::from_str(&read_text(p)?)?);
    }
    if a.hamiltonian.is_empty() {
        return Err(Error::InvalidInput("at least one --hamiltonian is required".into()));
    }
    let ansatz_path = a
        .ansatz
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("--ansatz is required".into()))?;
    let k = a.hamiltonian.len();
    if !a.distance.is_empty() && a.distance.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} distances for {k} Hamiltonians",
            a.distance.len()
        )));
    }
    if a.theta.len() > 1 && a.theta.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} angles for {k} Hamiltonians",
            a.theta.len()
        )));
    }
    let mut points = Vec::with_capacity(k);
    for (i, path) in a.hamiltonian.iter().enumerate() {
        let h = HamiltonianSpec::load(path)?;
        let distance = match a.distance.get(i) {
            Some(&d) => d,
            None => h
                .meta
                .get("distance_angstrom")
                .and_then(|d| d.as_f64())
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "{}: no meta.distance_angstrom; pass --distance",
                        path.display()
                    ))
                })?,
        };
        let theta = match a.theta.len() {
            0 => None,
            1 => Some(a.theta[0]),
            _ => Some(a.theta[i]),
        };
        points.push(VqePoint {
            distance,
            hamiltonian: h,
            theta,
        });
    }
    let noise = match (&a.noise, a.model) {
        (Some(p), _) => VqeNoise::Explicit {
            model: NoiseModel::from_json(&read_text(p)?)?,
        },
        (None, Some(kind)) => VqeNoise::Sampled {
            kind,
            eps: a.eps,
            n_models: a.models,
            seed: a.noise_seed,
        },
        (None, None) => VqeNoise::Noiseless,
    };
    Ok(VqeConfig {
        points,
        ansatz: read_text(ansatz_path)?,
        noise,
        methods: parse_methods(&a.methods, &Estimator::ALL)?,
        topology: a.topology,
        shots: a.shots,
        seed: a.seed,
    })
}

/// Executes a parsed command line. Returns the process exit status for
/// runs that completed; errors map to a status through [`exit_code`].
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Estimate(a) => {
            let job = estimate_job(&a)?;
            let report = match &a.out {
                Some(out) => run_and_record(job, 1, out)?,
                None => job.run(1)?.report,
            };
            emit(&report);
        }
        Command::RandomTest(a) => {
            let report = run_and_record(Job::RandomTest(random_test_config(&a)?), a.jobs, &a.out)?;
            emit(&report);
            emit(&format!("wrote {}\n", a.out.display()));
        }
        Command::Vqe(a) => {
            let report = run_and_record(Job::Vqe(vqe_config(&a)?), a.jobs, &a.out)?;
            emit(&report);
            emit(&format!("wrote {}\n", a.out.display()));
        }
        Command::CompileBasis(a) => {
            let sigma: PauliString = a.pauli.parse()?;
            let b = compile(&sigma, a.topology)?;
            emit(&format!("# pivot {}\n{}", b.pivot, b.circuit));
        }
        Command::SampleNoise(a) => {
            let nm = match a.model {
                ModelKind::Appc => {
                    let g = a
                        .n_gates
                        .ok_or_else(|| Error::InvalidInput("appc needs --n-gates".into()))?;
                    sample_model_appc(a.n, g, a.eps, a.seed)?
                }
                ModelKind::Appe => sample_model_appe(a.n, a.eps, a.seed)?,
                ModelKind::Explicit => {
                    return Err(Error::InvalidInput("only appc and appe models can be sampled".into()))
                }
            };
            let text = nm.to_json() + "\n";
            match &a.out {
                Some(p) => fs::write(p, text)?,
                None => emit(&text),
            }
        }
        Command::Rerun(a) => {
            let differing = rerun(&a.manifest, a.out.as_deref())?;
            if differing.is_empty() {
                println!("all outputs identical");
            } else {
                for name in &differing {
                    eprintln!("differs: {name}");
                }
                return Ok(1);
            }
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_lists() {
        assert_eq!(parse_methods("all", &Estimator::ALL).unwrap().len(), 6);
        assert_eq!(
            parse_methods("dsp, tp,dsp", &Estimator::ALL).unwrap(),
            vec![Estimator::Dsp, Estimator::Tp]
        );
        assert!(parse_methods("ef", &[Estimator::Raw]).is_err());
        assert!(parse_methods("", &Estimator::ALL).is_err());
    }

    #[test]
    fn manifest_round_trips() {
        let job = Job::RandomTest(RandomTestConfig {
            n: 3,
            g: 1.0,
            eps_t: 0.1,
            n_circuits: 2,
            seed: u64::MAX - 3,
            model: ModelKind::Appe,
            methods: vec![Estimator::Raw, Estimator::Tp],
        });
        let m = RunManifest {
            version: "0".into(),
            seeds: job.seeds(),
            job,
            jobs: 1,
            duration_s: 0.25,
            outputs: vec!["records.csv".into()],
        };
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"command\":\"random-test\""));
        assert_eq!(serde_json::from_str::<RunManifest>(&text).unwrap(), m);
    }

    #[test]
    fn rerun_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let job = Job::Estimate(EstimateJob {
            circuit: "QUBITS 2\nH 0\nCX 0 1\n".into(),
            observable: "ZZ".into(),
            noise: Some(sample_model_appe(3, 0.05, 4).unwrap()),
            methods: vec![Estimator::Raw, Estimator::Tp],
            topology: Topology::Linear,
            noisy_intermediate: true,
            shots: 0,
            seed: 1,
        });
        run_and_record(job, 1, dir.path()).unwrap();
        let manifest = dir.path().join(MANIFEST_FILE);
        assert!(rerun(&manifest, None).unwrap().is_empty());
        fs::write(dir.path().join("estimate.csv"), "x\n").unwrap();
        assert_eq!(rerun(&manifest, None).unwrap(), vec!["estimate.csv".to_string()]);
    }
}
