//! Error norms, mesh-dependent seminorms, the `Π` mapping from trial to
//! test functions, stability measurements and observed convergence orders.

mod norms;
mod pi;
mod rates;
mod stability;

pub use norms::{
    error_broken_h2, error_norms, error_report, h1_seminorm, seminorm_broken_h2, seminorm_dual,
    trial_broken_h2, ErrorReport,
};
pub use pi::{
    build_pi, check_pi_constraints, mixed_difference, weighted_mixed_derivatives, ConstraintCheck,
};
pub use rates::{convergence_rates, mean_finite, observed_orders, ConvergenceRates};
pub use stability::{
    dual_gram, h1_gram, probe_vector, verify_stability, whitened_sigma, StabilityOptions,
    StabilityReport, INFSUP_MAX_DOFS,
};
