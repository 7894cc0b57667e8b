use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::data::ArealDataset;
use super::design::Design;
use super::loglik::{poisson_loglik, weibull_loglik};
use super::spec::{ChainConfig, ModelKind, WapModelSpec};
use super::state::{Block, WapState};
use super::updates::{
    update_delta_mh, update_hyper_pair, update_latent_block, update_v_entry, MhTuner,
};
use crate::error::{Result, WapError};
use crate::rng::substream;

/// Retained draws and traces of one chain.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub design: Arc<Design>,
    pub config: ChainConfig,
    pub draws: Vec<WapState>,
    /// Joint log-likelihood after every sweep, burn-in included.
    pub loglik: Vec<f64>,
    /// Log-likelihood of the retained draws, aligned with `draws`.
    pub retained_loglik: Vec<f64>,
    /// Post-burn-in MH acceptance rate of each shape coefficient.
    pub acceptance: Vec<f64>,
    /// MH step sizes at the end of the run.
    pub mh_steps: Vec<f64>,
}

impl ChainOutput {
    pub fn kind(&self) -> ModelKind {
        self.design.kind
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Keeps every `k`-th retained draw.
    pub fn thinned(&self, k: usize) -> Self {
        let k = k.max(1);
        let idx: Vec<usize> = (0..self.draws.len()).filter(|i| (i + 1) % k == 0).collect();
        Self {
            draws: idx.iter().map(|&i| self.draws[i].clone()).collect(),
            retained_loglik: idx.iter().map(|&i| self.retained_loglik[i]).collect(),
            ..self.clone()
        }
    }
}

/// Joint data log-likelihood of the branches the model uses.
pub fn joint_loglik(design: &Design, state: &WapState) -> Result<f64> {
    let mut total = 0.0;
    if design.kind.uses_weibull() {
        let rho = design.rho(&state.delta);
        total += weibull_loglik(&design.data.t, &rho, design.y_c(state).as_slice())?;
    }
    if design.kind.uses_counts() {
        total += poisson_loglik(&design.data.z, design.y_d(state).as_slice())?;
    }
    Ok(total)
}

fn sweep<R: Rng + ?Sized>(
    design: &Design,
    state: &mut WapState,
    tuner: &mut MhTuner,
    iteration: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<()> {
    let kind = design.kind;
    let spec = &design.spec;
    for b in Block::active(kind) {
        let next = update_latent_block(b, state, design, rng)?;
        *state.block_mut(b) = next;
    }
    if spec.updates.mixing {
        for b in Block::active(kind).filter(|b| b.has_mixing()) {
            let r = state.block(b).len();
            for s in 1..r {
                for j in 0..s {
                    let v = update_v_entry(b, s, j, state, spec, rng)?;
                    state.mixing_mut(b).expect("mixing block")[(s, j)] = v;
                }
            }
        }
    }
    if spec.updates.hyper {
        for b in Block::active(kind) {
            state.hyper[b.index()] = update_hyper_pair(b, state, spec, rng)?;
        }
    }
    if spec.updates.shape && kind.uses_weibull() {
        let adapt = (iteration < burn_in).then_some(iteration);
        update_delta_mh(state, design, tuner, adapt, rng);
    }
    Ok(())
}

/// Runs one chain from the default initial state.
pub fn run_chain<R: Rng + ?Sized>(
    design: Arc<Design>,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    let init = design.initial_state();
    run_chain_from(design, config, init, rng)
}

/// Runs one chain from a caller-supplied state.
pub fn run_chain_from<R: Rng + ?Sized>(
    design: Arc<Design>,
    config: &ChainConfig,
    init: WapState,
    rng: &mut R,
) -> Result<ChainOutput> {
    config.validate()?;
    if init.dims() != design.dims() {
        return Err(WapError::shape(format!(
            "initial state {:?} does not match design {:?}",
            init.dims(),
            design.dims()
        )));
    }
    let mut state = init;
    let mut tuner = MhTuner::new(state.delta.len(), design.spec.mh_step, design.spec.mh_adapt);
    let mut draws = Vec::with_capacity(config.retained());
    let mut loglik = Vec::with_capacity(config.iterations);
    let mut retained_loglik = Vec::with_capacity(config.retained());

    for it in 0..config.iterations {
        if it == config.burn_in {
            tuner.reset_counts();
        }
        sweep(&design, &mut state, &mut tuner, it, config.burn_in, rng)
            .map_err(|e| e.at_iteration(it))?;
        let ll = joint_loglik(&design, &state).map_err(|e| e.at_iteration(it))?;
        if !ll.is_finite() {
            return Err(WapError::Numeric(format!("log-likelihood is {ll}")).at_iteration(it));
        }
        loglik.push(ll);
        if config.keeps(it) {
            draws.push(state.clone());
            retained_loglik.push(ll);
        }
    }
    Ok(ChainOutput {
        design,
        config: config.clone(),
        draws,
        loglik,
        retained_loglik,
        acceptance: tuner.acceptance_rates(),
        mh_steps: tuner.steps(),
    })
}

/// Fits the joint Weibull-and-Poisson model.
pub fn gibbs_run<R: Rng + ?Sized>(
    spec: &WapModelSpec,
    data: &ArealDataset,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    fit(ModelKind::Wap, spec, data, config, rng)
}

/// Fits the Weibull-only model (no shared block).
pub fn fit_univariate_weibull<R: Rng + ?Sized>(
    spec: &WapModelSpec,
    data: &ArealDataset,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    fit(ModelKind::Weibull, spec, data, config, rng)
}

/// Fits the count-only model (no shared block).
pub fn fit_univariate_poisson<R: Rng + ?Sized>(
    spec: &WapModelSpec,
    data: &ArealDataset,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    fit(ModelKind::Poisson, spec, data, config, rng)
}

pub fn fit<R: Rng + ?Sized>(
    kind: ModelKind,
    spec: &WapModelSpec,
    data: &ArealDataset,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    config.validate()?;
    let design = Arc::new(Design::build(kind, spec, data)?);
    run_chain(design, config, rng)
}

/// Runs `config.chains` chains in parallel. Chain `k` draws from the stream
/// `substream(config.seed, &[k])`.
pub fn run_chains(
    kind: ModelKind,
    spec: &WapModelSpec,
    data: &ArealDataset,
    config: &ChainConfig,
) -> Result<Vec<ChainOutput>> {
    config.validate()?;
    let design = Arc::new(Design::build(kind, spec, data)?);
    (0..config.chains)
        .into_par_iter()
        .map(|k| {
            let mut rng: ChaCha8Rng = substream(config.seed, &[k as u64]);
            run_chain(Arc::clone(&design), config, &mut rng)
        })
        .collect()
}
