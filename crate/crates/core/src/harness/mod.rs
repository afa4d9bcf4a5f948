//! Experiment drivers: single estimates, the random-circuit rescaling sweep
//! and the H2 energy study.

mod estimate;
pub mod random;
pub mod vqe;

pub use estimate::{estimate_observable, EstimateConfig, EstimateOutput, Estimator};
pub use random::{
    csv_bytes, generate_random_circuit, haar_unitary_2x2, rescaling_factor, run_random_test, sample_random_observable,
    ExperimentRecord, RandomTestConfig, RandomTestOutput, SummaryRow,
};
pub use vqe::{optimize_theta, run_vqe, vqe_energy, HamiltonianSpec, HamiltonianTerm, VqeConfig, VqeRow};

/// Child seed for task `id` of a run seeded with `seed`.
///
/// SplitMix64: the parent seed is advanced by `id + 1` golden-ratio
/// increments and passed through the SplitMix64 finalizer. Children of one
/// parent are decorrelated and independent of scheduling order.
pub fn split_seed(seed: u64, id: u64) -> u64 {
    let mut z = seed.wrapping_add(id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` on a pool of `jobs` threads (0 = rayon default).
pub(crate) fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> crate::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
