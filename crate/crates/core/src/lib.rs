//! Joint Weibull-and-Poisson (WAP) spatial modelling.
//!
//! The crate provides multivariate log-gamma (MLG) distribution machinery, a
//! fully conjugate collapsed Gibbs sampler for the joint model and its
//! single-response baselines, reduced-rank spatial bases, model diagnostics,
//! and a simulation harness for comparing the joint and separate fits.

pub mod basis;
pub mod calibration;
pub mod diagnostics;
pub mod error;
pub mod mlg;
pub mod rng;
pub mod sampler;
pub mod sim;

pub use basis::{BasisKind, BasisMatrix, Coord, KnotSet, ShapeDesign};
pub use error::{Result, WapError};
pub use mlg::{CmlgParams, MlgParams, NullBasis};
pub use sampler::{
    ArealDataset, Block, ChainConfig, ChainOutput, Design, HyperPair, ModelKind, UpdateMask,
    WapModelSpec, WapState,
};
