//! Infeasible-point subgradient methods for convex minimization over sets
//! that only admit approximate projections.
//!
//! Iterates may stay infeasible throughout a run; the projection accuracy is
//! tightened along the way so the method still converges to a feasible
//! optimum. Affine constraint sets are projected with truncated conjugate
//! gradients on the normal equations.

pub mod error;
pub mod instances;
pub mod linalg;
pub mod oracles;
pub mod projections;
pub mod schedules;
pub mod solver;

pub use error::{Error, Result};
pub use instances::{
    build_concat_dictionary, default_start, desk_instance, erc_check, generate_instance, hadamard,
    plant_sparse_solution, BpInstance,
};
pub use linalg::{cg_solve, sigma_min, solve_gram, CgOutcome, CgStopRule, DenseMatrix, GramFactorization};
pub use oracles::{
    eps_subgradient_wrap, l1_subgradient, l1_value, polyhedral_eval, EpsSubgradientOracle, FnOracle,
    GammaSchedule, L1Norm, PolyhedralObjective, SubgradientOracle,
};
pub use projections::{
    affine_project_exact, box_project, distance_bound_bp, Accuracy, AffineCgProjector, AffineExactProjector,
    AffineSet, BoxProjector, InexactProjector, PerturbedExactProjector, Projection, ProjectionCertificate,
};
pub use schedules::{
    dynamic_step, eps_bar, eps_tilde, harmonic_pair_schedule, AccuracyMode, BasisPursuitBound,
    DistanceBoundKind, DistanceBoundProvider, DynamicConfig, HarmonicPair, KnownOptimum, NormGrowthBound,
    PredeterminedSchedule, Sequence, StronglyConvexBound, WeakSharpBound,
};
pub use solver::{
    restart_with_lower_phi, solve_dynamic, solve_predetermined, SolveResult, SolveStatus, StoppingConfig,
    TraceRecord,
};
