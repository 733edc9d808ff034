//! Problem generators, observation containers and evaluators.

mod bench;
mod observations;
pub mod qst;
mod synthetic;

pub use bench::{best_constant_step, GridOutcome, GridTrial, STEP_GRID};
pub use observations::{observe_tt, SamplingMode, SparseObservations};
pub use qst::{fidelity_diag, pauli_tt, qst_random_mpo, qst_random_mps, reconstruct_density, Mpo, MpoCore, Mps};
pub use synthetic::{
    add_noise, gen_synthetic_tt, manifold_dim, os_to_n, psnr, sample_uniform, EntrySource, NoisyObservations,
    DENSE_NOISE_LIMIT,
};
