//! Block Gibbs sampling for CD/PCD, exact perturb-and-MAP at enumerable
//! scale, and the empirical log-partition upper-bound probe.

use crate::error::{RbmError, Result};
use crate::model::{
    bits_from_index, energy, hidden_conditional, visible_conditional, BinaryState, ModelParams,
};
use crate::noise::NoiseSource;

/// Joint-state limit for exact enumeration samplers: n + m <= 16.
pub const MAX_JOINT_BITS: usize = 16;

/// Persistent fantasy chains for PCD.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub particles: Vec<BinaryState>,
}

impl ChainState {
    /// Seed the chains from training examples, cycling if fewer examples
    /// than particles.
    pub fn from_data(examples: &[Vec<u8>], n_hidden: usize, count: usize) -> Result<Self> {
        if examples.is_empty() || count == 0 {
            return Err(RbmError::InvalidArgument(
                "chain initialization needs data and a positive particle count".into(),
            ));
        }
        let particles = (0..count)
            .map(|k| BinaryState {
                v: examples[k % examples.len()].clone(),
                h: vec![0; n_hidden],
            })
            .collect();
        Ok(Self { particles })
    }
}

fn sample_bits(probs: &ndarray::Array1<f64>, src: &mut NoiseSource) -> Vec<u8> {
    // One uniform per unit, ascending order.
    probs
        .iter()
        .map(|&p| u8::from(src.uniform_open() < p))
        .collect()
}

/// One block Gibbs sweep: resample h from v, then v from the new h.
pub fn gibbs_sweep(s: &BinaryState, p: &ModelParams, src: &mut NoiseSource) -> Result<BinaryState> {
    let h = sample_bits(&hidden_conditional(&s.v, p)?, src);
    let v = sample_bits(&visible_conditional(&h, p)?, src);
    Ok(BinaryState { v, h })
}

/// CD-k particles: per batch element, sample h from the data vector and run
/// k Gibbs sweeps.
pub fn cd_particles(
    batch: &[Vec<u8>],
    p: &ModelParams,
    k: usize,
    src: &mut NoiseSource,
) -> Result<Vec<BinaryState>> {
    if batch.is_empty() {
        return Err(RbmError::InvalidArgument("empty batch".into()));
    }
    if k == 0 {
        return Err(RbmError::InvalidArgument("K must be >= 1".into()));
    }
    batch
        .iter()
        .map(|v| {
            let h = sample_bits(&hidden_conditional(v, p)?, src);
            let mut state = BinaryState { v: v.clone(), h };
            for _ in 0..k {
                state = gibbs_sweep(&state, p, src)?;
            }
            Ok(state)
        })
        .collect()
}

/// Advance every persistent chain k sweeps under the current model.
pub fn pcd_update(
    cs: &ChainState,
    p: &ModelParams,
    k: usize,
    src: &mut NoiseSource,
) -> Result<ChainState> {
    if cs.particles.is_empty() {
        return Err(RbmError::State("chain state is uninitialized".into()));
    }
    if k == 0 {
        return Err(RbmError::InvalidArgument("K must be >= 1".into()));
    }
    let particles = cs
        .particles
        .iter()
        .map(|s| {
            let mut state = s.clone();
            for _ in 0..k {
                state = gibbs_sweep(&state, p, src)?;
            }
            Ok(state)
        })
        .collect::<Result<_>>()?;
    Ok(ChainState { particles })
}

fn check_joint_capacity(p: &ModelParams) -> Result<(usize, usize)> {
    let (n, m) = (p.n_visible(), p.n_hidden());
    if n + m > MAX_JOINT_BITS {
        return Err(RbmError::Capacity(format!(
            "n + m = {} exceeds the joint enumeration limit of {}",
            n + m,
            MAX_JOINT_BITS
        )));
    }
    Ok((n, m))
}

fn state_from_joint_index(idx: usize, n: usize, m: usize) -> BinaryState {
    BinaryState {
        v: bits_from_index(idx & ((1 << n) - 1), n),
        h: bits_from_index(idx >> n, m),
    }
}

/// Index maximizing -E(x) + β·ε(x) over a finite energy table.
pub fn argmax_perturbed(energies: &[f64], noise: &[f64], beta: f64) -> usize {
    let mut best_idx = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (idx, (&e, &eps)) in energies.iter().zip(noise.iter()).enumerate() {
        let score = -e + beta * eps;
        if score > best {
            best = score;
            best_idx = idx;
        }
    }
    best_idx
}

/// Exact perturb-and-MAP: one independent Gumbel per joint state, return
/// argmax of the perturbed negative energy. The result is an exact Gibbs
/// sample.
pub fn perturb_and_map_exact(p: &ModelParams, src: &mut NoiseSource) -> Result<BinaryState> {
    let (n, m) = check_joint_capacity(p)?;
    let count = 1usize << (n + m);
    let mut energies = Vec::with_capacity(count);
    for idx in 0..count {
        energies.push(energy(&state_from_joint_index(idx, n, m), p)?);
    }
    let noise: Vec<f64> = (0..count).map(|_| src.gumbel()).collect();
    Ok(state_from_joint_index(
        argmax_perturbed(&energies, &noise, 1.0),
        n,
        m,
    ))
}

/// Monte-Carlo estimate of E[max_x {-E(x) + β Σᵢ εᵢ(xᵢ)}] under fresh
/// first-order (per-variable) Gumbel noise, with its standard error.
///
/// The expectation upper-bounds log Z; this probe only reports the estimate.
pub fn logz_upper_bound_estimate(
    p: &ModelParams,
    trials: usize,
    beta: f64,
    src: &mut NoiseSource,
) -> Result<(f64, f64)> {
    let (n, m) = check_joint_capacity(p)?;
    if trials == 0 {
        return Err(RbmError::InvalidArgument("trials must be >= 1".into()));
    }
    let total_vars = n + m;
    let mut maxima = Vec::with_capacity(trials);
    let mut noise = vec![(0.0f64, 0.0f64); total_vars];
    for _ in 0..trials {
        // Two Gumbels per variable: noise for the 0 and 1 assignments, in
        // the same variable order as the perturbation stream discipline.
        for pair in noise.iter_mut() {
            *pair = (src.gumbel(), src.gumbel());
        }
        let mut best = f64::NEG_INFINITY;
        for idx in 0..1usize << total_vars {
            let s = state_from_joint_index(idx, n, m);
            let mut score = -energy(&s, p)?;
            for (var, &(e0, e1)) in noise.iter().enumerate() {
                let bit = if var < n { s.v[var] } else { s.h[var - n] };
                score += beta * if bit == 1 { e1 } else { e0 };
            }
            if score > best {
                best = score;
            }
        }
        maxima.push(best);
    }
    let mean = maxima.iter().sum::<f64>() / trials as f64;
    let stderr = if trials == 1 {
        0.0
    } else {
        let var = maxima.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    };
    Ok((mean, stderr))
}

/// Half the L1 distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
