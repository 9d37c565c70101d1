//! Worst-case asymptotic convergence rates of fixed-parameter first-order
//! methods on strongly convex quadratics, and the robust gain margin test
//! showing no such method beats `(sqrt(L) - sqrt(m)) / (sqrt(L) + sqrt(m))`.

pub mod cli;
pub mod error;
pub mod gain_margin;
pub mod lifting;
pub mod method_spec;
pub mod simulation;
pub mod spectral;

pub use error::{Error, Result};
pub use gain_margin::{
    margin_equivalence_check, pick_feasible, rho_star, theta, FeasibilityReport, ForbiddenSet, MarginProblem,
};
pub use lifting::{
    build_lifted_matrix, build_structure, characteristic_polynomial, companion_matrix, convolve_numerator,
    transfer_functions, LiftedSystem, QuadraticInstance, RationalFunction,
};
pub use method_spec::{fixed_point_residual, preset, validate, FunctionClass, Method, MethodSpec, Preset, Validation};
pub use simulation::{estimate_r_factor, make_quadratic, run, SimulationTrace, SpectrumPolicy};
pub use spectral::{
    certify_lower_bound, certify_lower_bound_until, polynomial_roots, spectral_radius_at, worst_case_rho, LowerBoundReport, RateReport,
    SweepOptions,
};
