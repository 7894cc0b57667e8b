use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::spec::ModelKind;

/// Latent blocks of the model, in systematic-scan order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    Eta,
    EtaC,
    EtaD,
    BetaC,
    BetaD,
    GammaC,
    GammaD,
}

impl Block {
    pub const ALL: [Block; 7] = [
        Block::Eta,
        Block::EtaC,
        Block::EtaD,
        Block::BetaC,
        Block::BetaD,
        Block::GammaC,
        Block::GammaD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Eta => "eta",
            Block::EtaC => "eta_c",
            Block::EtaD => "eta_d",
            Block::BetaC => "beta_c",
            Block::BetaD => "beta_d",
            Block::GammaC => "gamma_c",
            Block::GammaD => "gamma_d",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Blocks carrying a lower-unit-triangular mixing matrix.
    pub fn has_mixing(self) -> bool {
        matches!(self, Block::Eta | Block::EtaC | Block::EtaD)
    }

    pub fn enters_weibull(self) -> bool {
        matches!(self, Block::Eta | Block::EtaC | Block::BetaC | Block::GammaC)
    }

    pub fn enters_counts(self) -> bool {
        matches!(self, Block::Eta | Block::EtaD | Block::BetaD | Block::GammaD)
    }

    pub fn active_in(self, kind: ModelKind) -> bool {
        match kind {
            ModelKind::Wap => true,
            ModelKind::Weibull => matches!(self, Block::EtaC | Block::BetaC | Block::GammaC),
            ModelKind::Poisson => matches!(self, Block::EtaD | Block::BetaD | Block::GammaD),
        }
    }

    pub fn active(kind: ModelKind) -> impl Iterator<Item = Block> {
        Block::ALL.into_iter().filter(move |b| b.active_in(kind))
    }
}

/// Shape and rate of the log-gamma prior on one block. The rate is stored on
/// the log scale so that extreme conditionals cannot underflow it to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPair {
    pub alpha: f64,
    pub log_kappa: f64,
}

impl HyperPair {
    pub fn new(alpha: f64, kappa: f64) -> Self {
        Self {
            alpha,
            log_kappa: kappa.ln(),
        }
    }

    pub fn kappa(&self) -> f64 {
        self.log_kappa.exp()
    }
}

impl Default for HyperPair {
    fn default() -> Self {
        Self::new(1.0, 1.0)
    }
}

/// All unknowns at one Gibbs iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct WapState {
    pub beta_c: DVector<f64>,
    pub beta_d: DVector<f64>,
    pub eta: DVector<f64>,
    pub eta_c: DVector<f64>,
    pub eta_d: DVector<f64>,
    pub gamma_c: DVector<f64>,
    pub gamma_d: DVector<f64>,
    /// Inverse mixing matrices (unit lower triangular).
    pub v_eta: DMatrix<f64>,
    pub v_eta_c: DMatrix<f64>,
    pub v_eta_d: DMatrix<f64>,
    pub delta: DVector<f64>,
    pub hyper: [HyperPair; 7],
}

/// Sizes needed to allocate a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateDims {
    pub p_c: usize,
    pub p_d: usize,
    pub r: usize,
    pub n_c: usize,
    pub n_d: usize,
    pub m: usize,
}

impl WapState {
    /// Latent vectors at zero, mixing matrices at the identity, hyper pairs at
    /// (1, 1), shape coefficients at `delta0`.
    pub fn initial(dims: StateDims, delta0: f64) -> Self {
        Self {
            beta_c: DVector::zeros(dims.p_c),
            beta_d: DVector::zeros(dims.p_d),
            eta: DVector::zeros(dims.r),
            eta_c: DVector::zeros(dims.r),
            eta_d: DVector::zeros(dims.r),
            gamma_c: DVector::zeros(dims.n_c),
            gamma_d: DVector::zeros(dims.n_d),
            v_eta: DMatrix::identity(dims.r, dims.r),
            v_eta_c: DMatrix::identity(dims.r, dims.r),
            v_eta_d: DMatrix::identity(dims.r, dims.r),
            delta: DVector::from_element(dims.m, delta0),
            hyper: [HyperPair::default(); 7],
        }
    }

    pub fn dims(&self) -> StateDims {
        StateDims {
            p_c: self.beta_c.len(),
            p_d: self.beta_d.len(),
            r: self.eta.len(),
            n_c: self.gamma_c.len(),
            n_d: self.gamma_d.len(),
            m: self.delta.len(),
        }
    }

    pub fn block(&self, b: Block) -> &DVector<f64> {
        match b {
            Block::Eta => &self.eta,
            Block::EtaC => &self.eta_c,
            Block::EtaD => &self.eta_d,
            Block::BetaC => &self.beta_c,
            Block::BetaD => &self.beta_d,
            Block::GammaC => &self.gamma_c,
            Block::GammaD => &self.gamma_d,
        }
    }

    pub fn block_mut(&mut self, b: Block) -> &mut DVector<f64> {
        match b {
            Block::Eta => &mut self.eta,
            Block::EtaC => &mut self.eta_c,
            Block::EtaD => &mut self.eta_d,
            Block::BetaC => &mut self.beta_c,
            Block::BetaD => &mut self.beta_d,
            Block::GammaC => &mut self.gamma_c,
            Block::GammaD => &mut self.gamma_d,
        }
    }

    /// Mixing matrix of an `eta`-type block.
    pub fn mixing(&self, b: Block) -> Option<&DMatrix<f64>> {
        match b {
            Block::Eta => Some(&self.v_eta),
            Block::EtaC => Some(&self.v_eta_c),
            Block::EtaD => Some(&self.v_eta_d),
            _ => None,
        }
    }

    pub fn mixing_mut(&mut self, b: Block) -> Option<&mut DMatrix<f64>> {
        match b {
            Block::Eta => Some(&mut self.v_eta),
            Block::EtaC => Some(&mut self.v_eta_c),
            Block::EtaD => Some(&mut self.v_eta_d),
            _ => None,
        }
    }

    pub fn hyper(&self, b: Block) -> HyperPair {
        self.hyper[b.index()]
    }

    /// `V b` for mixed blocks, the block itself otherwise.
    pub fn transformed(&self, b: Block) -> DVector<f64> {
        match self.mixing(b) {
            Some(v) => v * self.block(b),
            None => self.block(b).clone(),
        }
    }
}
