//! Numerical laboratory for the measurement-induced purification transition
//! of the (2,1) hybrid Brownian circuit.
//!
//! Two complementary routes into the same physics:
//!
//! * a large-N saddle-point/instanton solver for the reduced two-field action
//!   ([`model`], [`action`], [`optimizer`]) that locates the critical
//!   measurement rate γ_c = J/18 and the exponents ζ = 3/2 and μ = 1, and
//! * a finite-N Krylov exact-diagonalization simulator of the microscopic
//!   circuit ([`ed`]) producing purity and probability time series under two
//!   disorder-averaging protocols.
//!
//! All internal quantities are in units J = 1 (rates as γ/J, times as Jt);
//! physical-unit conversion belongs to I/O layers.

pub mod action;
pub mod ed;
pub mod model;
pub mod optimizer;

pub use action::{
    action_gradient, boundary_state, log_propagator, step_matrix, total_action,
    total_action_with_gradient, ActionBreakdown, ActionError, BoundarySpec, BoundaryWhich,
    FieldConfig, FieldGradient, RBitVec, TimeGrid,
};
pub use model::{
    broken_saddles, bulk_action_density, critical_gamma, delta_param, effective_kernel_action,
    instanton_action_mechanical, instanton_action_near_critical, instanton_seed, kink_action,
    kink_action_constant,
    phi4_residual, purity_dilute_gas, purity_estimate, trivial_saddle, CriticalTheory,
    ModelError, ModelParams, PurityInputs, PurityRegime, SaddleBranch, SaddlePoint, GAMMA_C,
};
pub use optimizer::{
    critical_fraction, default_k_grid, descend_ascend, entropy_series_prediction, fit_power_law,
    instanton_action, kc_scan_grid, locate_exchange, sweep_gamma, sweep_grid_for, DescentOutcome,
    DescentSettings, EntropyPoint, FitError, FitResult, InstantonResult, KcRow, KcScan,
    OptimizerError, SweepRow,
};
