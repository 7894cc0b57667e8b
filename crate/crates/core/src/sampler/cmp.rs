//! Conway-Maxwell-Poisson sampling, pmf proportional to `lambda^x / (x!)^nu`.

use rand::Rng;

use crate::error::{Result, WapError};

/// Tail terms below this fraction of the running normalizer are dropped.
const TAIL_REL: f64 = 1e-12;

/// Modes beyond this are refused; the window would not fit in memory.
const MAX_MODE: f64 = 1e8;

/// Draws from CMP(lambda, nu).
pub fn sample_cmp<R: Rng + ?Sized>(lambda: f64, nu: f64, rng: &mut R) -> Result<u64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(WapError::domain(format!("CMP lambda must be positive, got {lambda}")));
    }
    sample_cmp_log(lambda.ln(), nu, rng)
}

/// Same as [`sample_cmp`] with `lambda` supplied on the log scale, which keeps
/// `exp(b log kappa + r1)` style rates from overflowing.
pub fn sample_cmp_log<R: Rng + ?Sized>(log_lambda: f64, nu: f64, rng: &mut R) -> Result<u64> {
    if !log_lambda.is_finite() {
        return Err(WapError::Numeric(format!("CMP log lambda is {log_lambda}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(WapError::domain(format!("CMP nu must be positive, got {nu}")));
    }
    let log_mode = log_lambda / nu;
    if log_mode > MAX_MODE.ln() {
        return Err(WapError::Numeric(format!(
            "CMP mode exp({log_mode:.3}) too large to enumerate"
        )));
    }
    // The pmf is log-concave with its peak at floor(lambda^(1/nu)).
    let mode = log_mode.exp().floor() as u64;
    let log_tail = TAIL_REL.ln();

    // Log terms relative to the mode term.
    let mut below = Vec::new();
    let mut sum: f64 = 1.0;
    let mut lt = 0.0;
    let mut x = mode;
    while x > 0 {
        lt += nu * (x as f64).ln() - log_lambda;
        x -= 1;
        if lt < log_tail + sum.ln() {
            break;
        }
        sum += lt.exp();
        below.push(lt);
    }
    let mut above = Vec::new();
    let mut lt = 0.0;
    let mut x = mode;
    loop {
        x += 1;
        lt += log_lambda - nu * (x as f64).ln();
        if lt < log_tail + sum.ln() {
            break;
        }
        sum += lt.exp();
        above.push(lt);
    }

    let lo = mode - below.len() as u64;
    let mut target = rng.random::<f64>() * sum;
    for (k, lt) in below.iter().rev().enumerate() {
        target -= lt.exp();
        if target < 0.0 {
            return Ok(lo + k as u64);
        }
    }
    target -= 1.0;
    if target < 0.0 {
        return Ok(mode);
    }
    for (k, lt) in above.iter().enumerate() {
        target -= lt.exp();
        if target < 0.0 {
            return Ok(mode + 1 + k as u64);
        }
    }
    // Rounding left a sliver of mass past the last term.
    Ok(mode + above.len() as u64)
}
