//! Single-site and block updates of the Gibbs sweep.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::cmp::sample_cmp_log;
use super::design::Design;
use super::spec::{WapModelSpec, MH_TARGET_ACCEPTANCE};
use super::state::{Block, HyperPair, WapState};
use crate::error::{Result, WapError};
use crate::mlg::{log_gamma_unit, CollapseSolver};

/// `log(exp(a) + exp(b))`.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// A conditional MLG full conditional in the collapsed form: the block is
/// drawn as the least-squares projection of `w` onto `h`, where
/// `w[i] = log G(alpha[i], 1) - log_kappa[i]`.
#[derive(Debug, Clone)]
pub struct LatentConditional {
    pub h: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub log_kappa: Vec<f64>,
}

impl LatentConditional {
    fn check(&self, block: Block) -> Result<()> {
        if let Some(i) = self.alpha.iter().position(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(WapError::Numeric(format!(
                "{}: shape {} at row {i}",
                block.name(),
                self.alpha[i]
            )));
        }
        if let Some(i) = self.log_kappa.iter().position(|k| !k.is_finite()) {
            return Err(WapError::Numeric(format!(
                "{}: log rate {} at row {i}",
                block.name(),
                self.log_kappa[i]
            )));
        }
        Ok(())
    }
}

/// Contribution of `block` to the Weibull and count linear predictors.
fn contribution(block: Block, s: &WapState, d: &Design) -> (DVector<f64>, DVector<f64>) {
    let n_c = d.data.n_c();
    let n_d = d.data.n_d();
    let b = s.block(block);
    let c = if block.enters_weibull() {
        match block {
            Block::Eta | Block::EtaC => &d.psi_c * b,
            Block::BetaC => &d.data.x_c * b,
            Block::GammaC => b.clone(),
            _ => unreachable!(),
        }
    } else {
        DVector::zeros(n_c)
    };
    let k = if block.enters_counts() {
        match block {
            Block::Eta | Block::EtaD => &d.psi_d * b,
            Block::BetaD => &d.data.x_d * b,
            Block::GammaD => b.clone(),
            _ => unreachable!(),
        }
    } else {
        DVector::zeros(n_d)
    };
    (c, k)
}

/// Assembles `(H, alpha-bar, log kappa-bar)` for a latent block given the rest
/// of the state.
pub fn latent_conditional(block: Block, s: &WapState, d: &Design) -> Result<LatentConditional> {
    if !block.active_in(d.kind) {
        return Err(WapError::State(format!(
            "block {} is not part of the {} model",
            block.name(),
            d.kind
        )));
    }
    let weibull_rows = block.enters_weibull() && d.kind.uses_weibull();
    let count_rows = block.enters_counts() && d.kind.uses_counts();
    let (own_c, own_d) = contribution(block, s, d);
    let g = s.block(block).len();

    let mut pieces: Vec<DMatrix<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut log_kappa = Vec::new();

    if weibull_rows {
        let offset = d.y_c(s) - own_c;
        let rho = d.rho(&s.delta);
        for i in 0..d.data.n_c() {
            alpha.push(1.0);
            log_kappa.push(rho[i] * d.log_t[i] + offset[i]);
        }
        pieces.push(match block {
            Block::Eta | Block::EtaC => d.psi_c.clone(),
            Block::BetaC => d.data.x_c.clone(),
            _ => DMatrix::identity(g, g),
        });
    }
    if count_rows {
        let offset = d.y_d(s) - own_d;
        let log_zeta = d.spec.zeta.ln();
        for i in 0..d.data.n_d() {
            alpha.push(d.count_shapes[i]);
            log_kappa.push(log_add_exp(offset[i], log_zeta));
        }
        pieces.push(match block {
            Block::Eta | Block::EtaD => d.psi_d.clone(),
            Block::BetaD => d.data.x_d.clone(),
            _ => DMatrix::identity(g, g),
        });
    }
    let hp = s.hyper(block);
    alpha.extend(std::iter::repeat_n(hp.alpha, g));
    log_kappa.extend(std::iter::repeat_n(hp.log_kappa, g));
    pieces.push(match s.mixing(block) {
        Some(v) => v.clone(),
        None => DMatrix::identity(g, g),
    });

    let rows: usize = pieces.iter().map(|p| p.nrows()).sum();
    let mut h = DMatrix::zeros(rows, g);
    let mut at = 0;
    for p in &pieces {
        h.rows_mut(at, p.nrows()).copy_from(p);
        at += p.nrows();
    }
    let cond = LatentConditional {
        h,
        alpha,
        log_kappa,
    };
    cond.check(block)?;
    Ok(cond)
}

/// Draws a latent block from its full conditional.
pub fn update_latent_block<R: Rng + ?Sized>(
    block: Block,
    s: &WapState,
    d: &Design,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let cond = latent_conditional(block, s, d)?;
    match block {
        Block::GammaC | Block::GammaD => {
            // H = [I; I], so the projection is the average of paired rows.
            let n = cond.h.ncols();
            let w: Vec<f64> = cond
                .alpha
                .iter()
                .zip(&cond.log_kappa)
                .map(|(&a, &lk)| log_gamma_unit(a, rng) - lk)
                .collect();
            Ok(DVector::from_fn(n, |i, _| 0.5 * (w[i] + w[n + i])))
        }
        Block::BetaC | Block::BetaD => {
            let solver = if block == Block::BetaC {
                d.beta_c_solver.as_ref()
            } else {
                d.beta_d_solver.as_ref()
            }
            .expect("solver exists for active beta blocks");
            Ok(solver.sample_log_rates(&cond.alpha, &cond.log_kappa, rng))
        }
        _ => {
            let solver = CollapseSolver::with_label(&cond.h, block.name())?;
            Ok(solver.sample_log_rates(&cond.alpha, &cond.log_kappa, rng))
        }
    }
}

/// Draws the strict-lower-triangle entry `(s, j)` of a block's mixing matrix.
///
/// The block's prior contributes one row with coefficient `b[j]`; the
/// log-gamma prior on the entry contributes a row with coefficient 1.
pub fn update_v_entry<R: Rng + ?Sized>(
    which: Block,
    s_row: usize,
    j: usize,
    state: &WapState,
    spec: &WapModelSpec,
    rng: &mut R,
) -> Result<f64> {
    let v = state.mixing(which).ok_or_else(|| {
        WapError::Index(format!("block {} has no mixing matrix", which.name()))
    })?;
    let r = v.nrows();
    if s_row <= j || s_row >= r {
        return Err(WapError::Index(format!(
            "mixing entry ({s_row}, {j}) is not in the strict lower triangle of a {r}x{r} matrix"
        )));
    }
    let b = state.block(which);
    let u_s = v.row(s_row).dot(&b.transpose());
    let offset = u_s - v[(s_row, j)] * b[j];
    let hp = state.hyper(which);
    let lk1 = hp.log_kappa + offset;
    if !lk1.is_finite() {
        return Err(WapError::Numeric(format!(
            "{} mixing entry ({s_row}, {j}): log rate {lk1}",
            which.name()
        )));
    }
    let w1 = log_gamma_unit(hp.alpha, rng) - lk1;
    let w2 = log_gamma_unit(spec.alpha_v, rng) - spec.kappa_v.ln();
    let h = b[j];
    Ok((h * w1 + w2) / (h * h + 1.0))
}

/// Gamma/CMP update of a block's `(alpha, kappa)` pair.
pub fn update_hyper_pair<R: Rng + ?Sized>(
    block: Block,
    state: &WapState,
    spec: &WapModelSpec,
    rng: &mut R,
) -> Result<HyperPair> {
    let u = state.transformed(block);
    let r1 = u.sum() + spec.hyper_r1;
    if !r1.is_finite() {
        return Err(WapError::Numeric(format!("{}: r1 update is {r1}", block.name())));
    }
    let log_neg_r2 = u
        .iter()
        .fold((-spec.hyper_r2).ln(), |acc, &x| log_add_exp(acc, x));
    if !log_neg_r2.is_finite() {
        return Err(WapError::Numeric(format!(
            "{}: r2 update overflowed",
            block.name()
        )));
    }
    let b = u.len() as f64 + spec.hyper_b;
    let current = state.hyper(block);
    let log_kappa = log_gamma_unit(current.alpha * b + 1.0, rng) - log_neg_r2;
    let x = sample_cmp_log(b * log_kappa + r1, b, rng)
        .map_err(|e| WapError::Numeric(format!("{} shape update: {e}", block.name())))?;
    Ok(HyperPair {
        alpha: x as f64 + 1.0,
        log_kappa,
    })
}

/// Random-walk step sizes on `log(delta)` and acceptance bookkeeping.
#[derive(Debug, Clone)]
pub struct MhTuner {
    pub log_steps: Vec<f64>,
    pub adapt: bool,
    pub proposed: Vec<usize>,
    pub accepted: Vec<usize>,
}

impl MhTuner {
    pub fn new(m: usize, step: f64, adapt: bool) -> Self {
        Self {
            log_steps: vec![step.ln(); m],
            adapt,
            proposed: vec![0; m],
            accepted: vec![0; m],
        }
    }

    pub fn steps(&self) -> Vec<f64> {
        self.log_steps.iter().map(|l| l.exp()).collect()
    }

    pub fn acceptance_rates(&self) -> Vec<f64> {
        self.accepted
            .iter()
            .zip(&self.proposed)
            .map(|(&a, &p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
            .collect()
    }

    pub fn reset_counts(&mut self) {
        self.proposed.iter_mut().for_each(|p| *p = 0);
        self.accepted.iter_mut().for_each(|a| *a = 0);
    }

    /// Robbins-Monro move of each log step toward the target acceptance.
    fn adapt_after(&mut self, iteration: usize, accepted: &[bool]) {
        let gain = 1.0 / ((iteration + 1) as f64).powf(0.6);
        for (ls, &acc) in self.log_steps.iter_mut().zip(accepted) {
            if ls.is_finite() {
                let a = if acc { 1.0 } else { 0.0 };
                *ls += gain * (a - MH_TARGET_ACCEPTANCE);
            }
        }
    }
}

/// Log target for one shape group on the `log(delta)` scale.
fn delta_log_target(
    delta: f64,
    members: &[usize],
    log_t: &DVector<f64>,
    y_c: &DVector<f64>,
    spec: &WapModelSpec,
) -> f64 {
    let ld = delta.ln();
    let mut lp = (spec.shape_prior_alpha - 1.0) * ld - delta / spec.shape_prior_scale + ld;
    for &i in members {
        lp += ld + (delta - 1.0) * log_t[i] + y_c[i] - (delta * log_t[i] + y_c[i]).exp();
    }
    lp
}

/// Metropolis-Hastings update of every shape coefficient. Returns the
/// per-group acceptance flags. Adaptation happens only when `burn_in` is set.
pub fn update_delta_mh<R: Rng + ?Sized>(
    state: &mut WapState,
    design: &Design,
    tuner: &mut MhTuner,
    burn_in: Option<usize>,
    rng: &mut R,
) -> Vec<bool> {
    let y_c = design.y_c(state);
    let members = design.shape.members();
    let mut flags = Vec::with_capacity(members.len());
    for (g, rows) in members.iter().enumerate() {
        let cur = state.delta[g];
        let step = tuner.log_steps[g].exp();
        let z: f64 = rng.sample(StandardNormal);
        let prop = (cur.ln() + step * z).exp();
        let log_ratio = if prop > 0.0 && prop.is_finite() {
            delta_log_target(prop, rows, &design.log_t, &y_c, &design.spec)
                - delta_log_target(cur, rows, &design.log_t, &y_c, &design.spec)
        } else {
            f64::NEG_INFINITY
        };
        let u: f64 = rng.random();
        let accept = log_ratio >= 0.0 || u.ln() < log_ratio;
        if accept {
            state.delta[g] = prop;
        }
        tuner.proposed[g] += 1;
        tuner.accepted[g] += accept as usize;
        flags.push(accept);
    }
    if let Some(it) = burn_in {
        if tuner.adapt {
            tuner.adapt_after(it, &flags);
        }
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_matches_direct() {
        assert!((log_add_exp(1.0, 2.0) - (1f64.exp() + 2f64.exp()).ln()).abs() < 1e-14);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 0.0), 0.0);
        assert!((log_add_exp(800.0, 800.0) - (800.0 + 2f64.ln())).abs() < 1e-12);
    }
}
