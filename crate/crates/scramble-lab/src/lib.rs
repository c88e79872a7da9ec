//! Forced-measurement spin-chain circuits and their information dynamics.
//!
//! The library simulates a kicked Ising chain interleaved with random
//! projective measurements whose outcomes are forced rather than
//! Born-sampled, tracks the non-unitary evolution operator of each
//! trajectory, and measures scrambling through the operator-state map:
//! purity of the output block, operator entanglement entropies, and the
//! tripartite mutual information with its Haar-normalized variant.
//! Statistical layers average trajectory ensembles, fit purity power
//! laws, and locate the measurement-induced transition by finite-size
//! scaling collapse.
//!
//! Start from [`ModelParams`] and [`Propagator`] for the circuit,
//! [`sample_pattern`] and [`evolve`] for trajectories, and the
//! `examples/` directory for end-to-end recipes. The `scramble-lab`
//! binary drives full experiments from TOML configs.

pub mod analysis;
pub mod choi;
pub mod error;
pub mod haar;
pub mod record;
pub mod spin;
pub mod trajectory;

pub use analysis::{
    curve_crossing, default_fss_grids, ensemble_average, fss_scan, fss_scan_with, loglog_fit,
    saturation_check, EnsembleSeries, FitResult, FssOptions, FssPoint, FssResult, SaturationCheck,
};
pub use choi::{
    entropy_bundle, mutual_information, purity_cd, spatial_tmi_profile, subsystem_entropy,
    subsystem_entropy_with, tmi, EntropyBundle, EntropyPath, LegSet, PartitionSpec, SpatialTmi,
    TmiSample,
};
pub use error::{Error, Result};
pub use haar::{cached_haar_i3_reference, haar_i3_reference, sample_haar_unitary, HaarReference};
pub use record::{ObservableRecorder, Schedule};
pub use spin::{hamiltonian_matrix, Boundary, ModelParams, Outcome, Propagator, ZProjector};
pub use trajectory::{
    evolve, sample_pattern, EvolutionOperator, MeasurementEvent, MeasurementPattern, PatternSeed,
    Recorder, Redraw, SeriesMap, TrajectoryRecord,
};
