//! The collapsed Gibbs sampler for the joint model and its single-response
//! baselines.

mod chain;
mod cmp;
mod data;
mod design;
mod loglik;
mod predict;
mod spec;
mod state;
mod updates;

pub use chain::{
    fit, fit_univariate_poisson, fit_univariate_weibull, gibbs_run, joint_loglik, run_chain,
    run_chain_from, run_chains, ChainOutput,
};
pub use cmp::{sample_cmp, sample_cmp_log};
pub use data::ArealDataset;
pub use design::{default_knots, Design};
pub use loglik::{poisson_loglik, weibull_loglik};
pub use predict::{
    posterior_predictive_replicates, predict_held_out, predict_linear, predict_state,
    sample_poisson_log, sample_poisson_log_real, sample_weibull, HeldOutRegions, Replicate,
};
pub use spec::{ChainConfig, ModelKind, UpdateMask, WapModelSpec, MH_TARGET_ACCEPTANCE};
pub use state::{Block, HyperPair, StateDims, WapState};
pub use updates::{
    latent_conditional, update_delta_mh, update_hyper_pair, update_latent_block, update_v_entry,
    LatentConditional, MhTuner,
};
