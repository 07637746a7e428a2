//! Numerical bounds on the rate-distortion function of an i.i.d. source when
//! the per-step distortion also depends on the previous reconstruction symbol,
//! `d(x_i, y_i, y_{i-1})`.
//!
//! Achievable (inner) bounds come from memoryless and first-order Markov test
//! channels; converse (outer) bounds come from relaxing the memory argument
//! and from a shifted convex envelope. A small exhaustive codebook search
//! grounds both at tiny blocklengths.

pub mod curve;
pub mod error;
pub mod functional;
pub mod gaussian;
pub mod info;
pub mod inner;
pub mod markov;
pub mod oracle;
pub mod outer;
pub mod problem;
pub mod solver;

pub use curve::{lower_convex_envelope, BoundCurve, BoundId, ConvexEnvelope, CurvePoint, Witness};
pub use error::{Result, SrdError};
pub use functional::{convexity_report, lambda_value, memory_span, ConvexityReport};
pub use gaussian::{discretize, gaussian_curve, gaussian_feasibility, gaussian_rate_inner, GaussianFeasibility, GaussianSpec};
pub use info::{binary_entropy, entropy, mutual_information};
pub use inner::{
    feasibility_range, inner_curve, inner_curves, memoryless_curve, rate_inner_markov, rate_inner_memoryless,
    Achievable, FeasibilityRange, InnerPoint, FEASIBILITY_TOL,
};
pub use markov::{
    analyze_stationary, induced_output_chain, simulate_chain, stationary_distortion, stationary_distribution,
    stationary_rate, ChainValue, SimulationResult, StationaryAnalysis, StationaryDistribution,
};
pub use oracle::{
    operational_distortion, sandwich_check, sandwich_trend, OracleConfig, OracleResult, SandwichReport, SandwichTrend,
};
pub use outer::{
    blahut_arimoto, blahut_arimoto_sweep, blahut_arimoto_trace, dual_lower_bound, outer_curve, product_curve,
    rate_outer_envelope_shift, rate_outer_product, rate_outer_single, rate_outer_two_letter, shift_curve,
    two_letter_curve, OuterValue, RdPoint, ShiftedEnvelope, SingleLetterProblem,
};
pub use problem::{DistortionTensor, MarkovKernel, MemorylessKernel, SourcePmf};
pub use solver::SolverConfig;
