//! Flattening of sampler states into named scalar columns and back.

use wapmc_core::{Block, Design, WapState};

use crate::error::{CliError, Result};

fn blocks(design: &Design) -> impl Iterator<Item = Block> {
    Block::active(design.kind)
}

/// One name per scalar unknown of the fitted model, in a fixed order.
pub fn column_names(design: &Design) -> Vec<String> {
    let s = design.initial_state();
    let mut out = Vec::new();
    for b in blocks(design) {
        out.extend((0..s.block(b).len()).map(|i| format!("{}[{i}]", b.name())));
    }
    if design.kind.uses_weibull() {
        out.extend((0..s.delta.len()).map(|j| format!("delta[{j}]")));
    }
    for b in blocks(design).filter(|b| b.has_mixing()) {
        let r = s.block(b).len();
        for i in 0..r {
            for j in 0..i {
                out.push(format!("v_{}[{i},{j}]", b.name()));
            }
        }
    }
    for b in blocks(design) {
        out.push(format!("alpha_{}", b.name()));
        out.push(format!("log_kappa_{}", b.name()));
    }
    out
}

/// Values in the order of [`column_names`].
pub fn state_row(design: &Design, s: &WapState) -> Vec<f64> {
    let mut out = Vec::new();
    for b in blocks(design) {
        out.extend(s.block(b).iter().copied());
    }
    if design.kind.uses_weibull() {
        out.extend(s.delta.iter().copied());
    }
    for b in blocks(design).filter(|b| b.has_mixing()) {
        let v = s.mixing(b).expect("mixed block");
        for i in 0..v.nrows() {
            for j in 0..i {
                out.push(v[(i, j)]);
            }
        }
    }
    for b in blocks(design) {
        let h = s.hyper(b);
        out.push(h.alpha);
        out.push(h.log_kappa);
    }
    out
}

/// Rebuilds a state from a row written by [`state_row`]. Inactive blocks
/// keep their initial values.
pub fn state_from_row(design: &Design, row: &[f64]) -> Result<WapState> {
    let mut s = design.initial_state();
    let expected = column_names(design).len();
    if row.len() != expected {
        return Err(CliError::Argument(format!(
            "draw row has {} values, the model has {expected} columns",
            row.len()
        )));
    }
    let mut it = row.iter().copied();
    let mut next = || it.next().expect("length checked");
    for b in blocks(design) {
        for v in s.block_mut(b).iter_mut() {
            *v = next();
        }
    }
    if design.kind.uses_weibull() {
        for v in s.delta.iter_mut() {
            *v = next();
        }
    }
    for b in blocks(design).filter(|b| b.has_mixing()) {
        let v = s.mixing_mut(b).expect("mixed block");
        for i in 0..v.nrows() {
            for j in 0..i {
                v[(i, j)] = next();
            }
        }
    }
    for b in blocks(design) {
        let h = &mut s.hyper[b.index()];
        h.alpha = next();
        h.log_kappa = next();
    }
    Ok(s)
}
