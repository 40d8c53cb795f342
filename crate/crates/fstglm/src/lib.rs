//! Binary regression with heavy-tailed and skewed link functions, fitted by
//! a penalized EM algorithm that drives unneeded coefficients to exact zero.
//!
//! The link is the CDF of a (possibly skewed) Student-t variable, so the
//! response curve can be made heavier-tailed than probit and asymmetric
//! around its inflection point. Coefficients carry a Laplace-type prior,
//! implemented through latent scale variables, giving sparse MAP estimates.
//! The crate also ships seeded simulation designs, a text-to-features
//! pipeline (tokenizing, stop-word removal, information-gain vocabulary
//! selection), and evaluation utilities: seeded splits, grid search over
//! (nu, delta, gamma), and a repeated-split one-vs-rest corpus protocol.
//!
//! Everything numeric is generic over the scalar type via [`scalar::Real`];
//! `f64` aliases are exported at the crate root.

pub mod data;
pub mod dist;
pub mod em;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod sim;
pub mod text;

pub use data::Dataset;
pub use dist::{
    sample_latent, skew_t_cdf, skew_t_link, skew_t_pdf, LinkFamily, LinkSpec, SkewTDensityParams,
};
pub use em::{
    fit, init_beta, m_step, penalized_objective, EStepQuantities, FitConfig, FitTrace, PriorSpec,
};
pub use error::{Error, Result};
pub use eval::{
    grid_search, macro_average, micro_average, misclassification_rate, precision_recall_f1,
    refit_and_test, split_dataset, ConfusionCounts, GridSpec, Objective, Prf,
};
pub use model::{load_model, save_model, FittedModel};
pub use scalar::Real;
pub use sim::{gen_example1, gen_example2};
pub use text::{
    apply_stoplist, featurize, information_gain, select_top_k, tokenize, Corpus, Document,
    Stoplist, Vocabulary, WordCounts,
};

/// Concrete `f64` aliases for the main types.
pub type Dataset64 = Dataset<f64>;
pub type LinkSpec64 = LinkSpec<f64>;
pub type FittedModel64 = FittedModel<f64>;
pub type FitConfig64 = FitConfig<f64>;
pub type PriorSpec64 = PriorSpec<f64>;
pub type FitTrace64 = FitTrace<f64>;
pub type GridSpec64 = GridSpec<f64>;

/// Concrete `f32` aliases; same code paths, lower precision.
pub type Dataset32 = Dataset<f32>;
pub type LinkSpec32 = LinkSpec<f32>;
pub type FittedModel32 = FittedModel<f32>;
pub type FitConfig32 = FitConfig<f32>;
pub type PriorSpec32 = PriorSpec<f32>;
