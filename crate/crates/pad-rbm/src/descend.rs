//! Deterministic block coordinate descent on the perturbed energy, started
//! from a training example.
//!
//! Each half-update thresholds one layer against the other:
//! h ← [b̃ + W̃ᵀv > 0], then v ← [ã + W̃h > 0]. Both are exact minimizers of
//! the perturbed energy over their block, so the energy never increases.

use crate::error::{RbmError, Result};
use crate::model::BinaryState;
use crate::perturb::PerturbedParams;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescendResult {
    pub state: BinaryState,
    pub steps_taken: usize,
    /// True when a full sweep left the state unchanged before the cap.
    pub converged: bool,
}

fn threshold_hidden(v: &[u8], pp: &PerturbedParams) -> Vec<u8> {
    let p = &pp.params;
    (0..p.n_hidden())
        .map(|j| {
            let mut act = p.b[j];
            for (i, &vi) in v.iter().enumerate() {
                if vi == 1 {
                    act += p.w[[i, j]];
                }
            }
            u8::from(act > 0.0)
        })
        .collect()
}

fn threshold_visible(h: &[u8], pp: &PerturbedParams) -> Vec<u8> {
    let p = &pp.params;
    (0..p.n_visible())
        .map(|i| {
            let mut act = p.a[i];
            for (j, &hj) in h.iter().enumerate() {
                if hj == 1 {
                    act += p.w[[i, j]];
                }
            }
            u8::from(act > 0.0)
        })
        .collect()
}

/// One full sweep: hidden update from v, then visible update from the new h.
pub fn descend_sweep(s: &BinaryState, pp: &PerturbedParams) -> Result<BinaryState> {
    if s.v.len() != pp.n_visible() || s.h.len() != pp.n_hidden() {
        return Err(RbmError::DimensionMismatch(format!(
            "state is ({}, {}), model expects ({}, {})",
            s.v.len(),
            s.h.len(),
            pp.n_visible(),
            pp.n_hidden()
        )));
    }
    let h = threshold_hidden(&s.v, pp);
    let v = threshold_visible(&h, pp);
    Ok(BinaryState { v, h })
}

/// Run at most `k` sweeps from (v0, h-from-first-half-sweep), stopping early
/// at a fixed point.
pub fn perturb_and_descend(
    v0: &[u8],
    pp: &PerturbedParams,
    k: usize,
) -> Result<DescendResult> {
    if k == 0 {
        return Err(RbmError::InvalidArgument("step cap K must be >= 1".into()));
    }
    if v0.len() != pp.n_visible() {
        return Err(RbmError::DimensionMismatch(format!(
            "start vector has length {}, model expects {}",
            v0.len(),
            pp.n_visible()
        )));
    }
    let mut state = BinaryState {
        v: v0.to_vec(),
        h: threshold_hidden(v0, pp),
    };
    let mut steps_taken = 0;
    let mut converged = false;
    for _ in 0..k {
        let next = descend_sweep(&state, pp)?;
        steps_taken += 1;
        if next == state {
            converged = true;
            break;
        }
        state = next;
    }
    Ok(DescendResult {
        state,
        steps_taken,
        converged,
    })
}
