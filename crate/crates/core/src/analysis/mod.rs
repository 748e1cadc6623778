//! Security bounds, exact entropy and distance oracles, and the numerical
//! checks of the supporting lemmas.

pub mod bounds;
pub mod entropy;
pub mod mac_audit;
pub mod pa;
pub mod quantum;
pub mod sweeps;

pub use bounds::{
    binary_entropy, guess_bound, h_inverse, impersonation_epsilon, pa_bound, qidplus_epsilon,
    sigma, uncertainty_bound, BoundError, BoundReport, Term,
};
pub use entropy::{
    exact_measurement_entropy, hmin, hmin_smooth, split_witness, verify_entropy_splitting, EntropyError,
    JointDistribution, SplitOutcome,
};
pub use pa::{pa_exact_distance, PaError, PaFamily, PaReport};
pub use quantum::{markov_decompose_check, trace_distance, Branch, CqState, DensityMatrix, MarkovReport, QuantumError};
pub use mac_audit::{mac_extractor_audit, mac_extractor_sweep, mac_forgery_audit, ExtractorReport, ForgeryReport};
pub use sweeps::{run_all as run_sweeps, summarize, SweepPlan, SweepRow};
