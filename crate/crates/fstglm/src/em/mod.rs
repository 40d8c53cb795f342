//! EM machinery: conditional expectations and the penalized fit loop.

pub mod estep;
pub mod fit;

pub use estep::{
    e_lambda_skew, e_lambda_sym, e_lambdar_skew, e_lambdaz_sym, e_tau_inv, laplace_rate,
};
pub use fit::{
    fit, init_beta, m_step, penalized_objective, EStepQuantities, FitConfig, FitTrace, PriorSpec,
};
