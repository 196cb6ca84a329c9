//! First- and second-order model perturbation at noise scale β.
//!
//! Noise-stream discipline (fixed so seeds are portable): visible biases in
//! ascending index order, then hidden biases in ascending order, then matched
//! pairs in ascending (i, j) order. Variables covered by a matched pair
//! receive pair noise only and consume nothing in the bias passes.

use crate::error::{RbmError, Result};
use crate::matching::Matching;
use crate::model::ModelParams;
use crate::noise::NoiseSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbOrder {
    First,
    Second,
}

/// A perturbed model θ̃ = (W̃, ã, b̃) together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedParams {
    pub params: ModelParams,
    pub beta: f64,
    pub order: PerturbOrder,
    /// Pairs that received 2x2 factor noise (second order only).
    pub matching: Option<Matching>,
}

impl PerturbedParams {
    pub fn n_visible(&self) -> usize {
        self.params.n_visible()
    }

    pub fn n_hidden(&self) -> usize {
        self.params.n_hidden()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(RbmError::InvalidArgument(format!(
            "beta must be finite and nonnegative, got {beta}"
        )));
    }
    Ok(())
}

/// Logistic noise on every bias, W untouched: ã_i = a_i + β·L_i,
/// b̃_j = b_j + β·L'_j.
pub fn perturb_first_order(
    p: &ModelParams,
    beta: f64,
    src: &mut NoiseSource,
) -> Result<PerturbedParams> {
    check_beta(beta)?;
    let mut out = p.clone();
    for i in 0..p.n_visible() {
        out.a[i] += beta * src.logistic();
    }
    for j in 0..p.n_hidden() {
        out.b[j] += beta * src.logistic();
    }
    Ok(PerturbedParams {
        params: out,
        beta,
        order: PerturbOrder::First,
        matching: None,
    })
}

/// Gumbel noise on the 2x2 factor of each matched (i, j), logistic bias noise
/// on every uncovered variable.
///
/// Per matched pair, four Gumbels ε(0,0), ε(0,1), ε(1,0), ε(1,1) are drawn in
/// that order and folded into the parameters as
/// W̃_ij = W_ij + β(ε(1,1) - ε(0,1) - ε(1,0) + ε(0,0)),
/// ã_i = a_i + β(ε(0,1) - ε(0,0)), b̃_j = b_j + β(ε(1,0) - ε(0,0)).
pub fn perturb_second_order(
    p: &ModelParams,
    mt: &Matching,
    beta: f64,
    src: &mut NoiseSource,
) -> Result<PerturbedParams> {
    check_beta(beta)?;
    let (n, m) = (p.n_visible(), p.n_hidden());
    // Revalidate against this model's shape.
    let mt = Matching::new(mt.pairs.clone(), n, m)?;
    let mut covered_v = vec![false; n];
    let mut covered_h = vec![false; m];
    for &(i, j) in &mt.pairs {
        covered_v[i] = true;
        covered_h[j] = true;
    }

    let mut out = p.clone();
    for i in 0..n {
        if !covered_v[i] {
            out.a[i] += beta * src.logistic();
        }
    }
    for j in 0..m {
        if !covered_h[j] {
            out.b[j] += beta * src.logistic();
        }
    }
    let mut pairs = mt.pairs.clone();
    pairs.sort_unstable();
    for &(i, j) in &pairs {
        let e00 = src.gumbel();
        let e01 = src.gumbel();
        let e10 = src.gumbel();
        let e11 = src.gumbel();
        out.w[[i, j]] += beta * (e11 - e01 - e10 + e00);
        out.a[i] += beta * (e01 - e00);
        out.b[j] += beta * (e10 - e00);
    }
    Ok(PerturbedParams {
        params: out,
        beta,
        order: PerturbOrder::Second,
        matching: Some(mt),
    })
}
