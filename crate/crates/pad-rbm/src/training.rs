//! Gradient assembly and the training loop. PD, CD and PCD share the
//! positive phase and update rule; they differ only in how negative-phase
//! particles are produced.

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Normal};

use crate::descend::perturb_and_descend;
use crate::error::{RbmError, Result};
use crate::matching::{influence_weights, max_weight_matching, Matching};
use crate::model::{
    avg_log_likelihood_exact, hidden_conditional, visible_conditional, BinaryState, Dataset,
    ModelParams, MAX_ENUM_SIDE,
};
use crate::noise::NoiseSource;
use crate::perturb::{perturb_first_order, perturb_second_order, PerturbOrder};
use crate::samplers::{cd_particles, pcd_update, ChainState};

// Stream purposes, kept distinct so no two consumers share a noise stream.
const PURPOSE_INIT: u64 = 1;
const PURPOSE_PERTURB: u64 = 2;
const PURPOSE_GIBBS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Pd,
    Cd,
    Pcd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSharing {
    PerParticle,
    PerMinibatch,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    /// Sweeps per negative phase (descent sweeps for PD, Gibbs sweeps for
    /// CD/PCD).
    pub k: usize,
    pub beta: f64,
    pub perturb_order: PerturbOrder,
    pub noise_sharing: NoiseSharing,
    /// Recompute the second-order matching every this many steps.
    pub matching_cadence: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub momentum: f64,
    /// Persistent chain count (PCD only).
    pub particle_count: usize,
    /// Substitute p(h|v_final) for the binary h in PD negative statistics.
    pub pd_mean_field_hidden: bool,
    pub n_hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Pd,
            k: 10,
            beta: 1.0,
            perturb_order: PerturbOrder::First,
            noise_sharing: NoiseSharing::PerParticle,
            matching_cadence: 1,
            learning_rate: 0.05,
            epochs: 100,
            batch_size: 16,
            seed: 0,
            weight_decay: 0.0,
            momentum: 0.0,
            particle_count: 16,
            pd_mean_field_hidden: false,
            n_hidden: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(RbmError::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(RbmError::InvalidArgument("batch size must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(RbmError::InvalidArgument("K must be >= 1".into()));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(RbmError::InvalidArgument(format!(
                "beta must be nonnegative, got {}",
                self.beta
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(RbmError::InvalidArgument(
                "weight decay must be nonnegative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(RbmError::InvalidArgument(
                "momentum must be in [0, 1)".into(),
            ));
        }
        if self.matching_cadence == 0 {
            return Err(RbmError::InvalidArgument(
                "matching cadence must be >= 1".into(),
            ));
        }
        if self.particle_count == 0 {
            return Err(RbmError::InvalidArgument(
                "particle count must be >= 1".into(),
            ));
        }
        if self.n_hidden == 0 {
            return Err(RbmError::InvalidArgument(
                "hidden unit count must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Log-likelihood derivative estimate, positive minus negative phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub dw: Array2<f64>,
    pub da: Array1<f64>,
    pub db: Array1<f64>,
}

impl Gradient {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            dw: Array2::zeros((n, m)),
            da: Array1::zeros(n),
            db: Array1::zeros(m),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        let sq: f64 = self.dw.iter().map(|x| x * x).sum::<f64>()
            + self.da.iter().map(|x| x * x).sum::<f64>()
            + self.db.iter().map(|x| x * x).sum::<f64>();
        sq.sqrt()
    }
}

/// Per-step training telemetry.
#[derive(Debug, Clone)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub step: usize,
    /// Present only when the exact-enumeration oracle is applicable.
    pub exact_avg_loglik: Option<f64>,
    /// Mean per-bit mismatch after one deterministic reconstruction.
    pub recon_error: f64,
    pub grad_norm: f64,
    pub mean_hidden_activation: f64,
    pub wall_ms: f64,
}

/// Data-conditioned term of the gradient, exact (no sampling):
/// dW_ij = mean_k v_i σ_j(v), da_i = mean_k v_i, db_j = mean_k σ_j(v).
pub fn positive_phase(batch: &[Vec<u8>], p: &ModelParams) -> Result<Gradient> {
    if batch.is_empty() {
        return Err(RbmError::InvalidArgument("empty batch".into()));
    }
    let (n, m) = (p.n_visible(), p.n_hidden());
    let mut g = Gradient::zeros(n, m);
    for v in batch {
        let probs = hidden_conditional(v, p)?;
        for i in 0..n {
            if v[i] == 1 {
                g.da[i] += 1.0;
                for j in 0..m {
                    g.dw[[i, j]] += probs[j];
                }
            }
        }
        g.db += &probs;
    }
    let scale = 1.0 / batch.len() as f64;
    g.dw *= scale;
    g.da *= scale;
    g.db *= scale;
    Ok(g)
}

/// Model term of the gradient from fantasy particles:
/// dW_ij = mean v_i h_j, da_i = mean v_i, db_j = mean h_j.
pub fn negative_phase(particles: &[BinaryState]) -> Result<Gradient> {
    if particles.is_empty() {
        return Err(RbmError::InvalidArgument("empty particle list".into()));
    }
    let (n, m) = (particles[0].v.len(), particles[0].h.len());
    let mut g = Gradient::zeros(n, m);
    for s in particles {
        if s.v.len() != n || s.h.len() != m {
            return Err(RbmError::DimensionMismatch(
                "inconsistent particle shapes".into(),
            ));
        }
        for i in 0..n {
            if s.v[i] == 1 {
                g.da[i] += 1.0;
                for j in 0..m {
                    if s.h[j] == 1 {
                        g.dw[[i, j]] += 1.0;
                    }
                }
            }
        }
        for j in 0..m {
            g.db[j] += s.h[j] as f64;
        }
    }
    let scale = 1.0 / particles.len() as f64;
    g.dw *= scale;
    g.da *= scale;
    g.db *= scale;
    Ok(g)
}

/// Negative phase with p(h|v) in place of the binary h (variance reduction
/// option for PD).
pub fn negative_phase_mean_field(particles: &[BinaryState], p: &ModelParams) -> Result<Gradient> {
    if particles.is_empty() {
        return Err(RbmError::InvalidArgument("empty particle list".into()));
    }
    let (n, m) = (p.n_visible(), p.n_hidden());
    let mut g = Gradient::zeros(n, m);
    for s in particles {
        let probs = hidden_conditional(&s.v, p)?;
        for i in 0..n {
            if s.v[i] == 1 {
                g.da[i] += 1.0;
                for j in 0..m {
                    g.dw[[i, j]] += probs[j];
                }
            }
        }
        g.db += &probs;
    }
    let scale = 1.0 / particles.len() as f64;
    g.dw *= scale;
    g.da *= scale;
    g.db *= scale;
    Ok(g)
}

/// Entrywise positive minus negative phase.
pub fn assemble_gradient(pos: &Gradient, neg: &Gradient) -> Result<Gradient> {
    if pos.dw.dim() != neg.dw.dim() || pos.da.len() != neg.da.len() || pos.db.len() != neg.db.len()
    {
        return Err(RbmError::DimensionMismatch(
            "positive and negative phases have different shapes".into(),
        ));
    }
    Ok(Gradient {
        dw: &pos.dw - &neg.dw,
        da: &pos.da - &neg.da,
        db: &pos.db - &neg.db,
    })
}

/// PD fantasy particles: perturb, then descend from each data vector.
pub fn negative_particles_pd(
    batch: &[Vec<u8>],
    p: &ModelParams,
    matching: Option<&Matching>,
    cfg: &TrainConfig,
    step: usize,
) -> Result<Vec<BinaryState>> {
    if batch.is_empty() {
        return Err(RbmError::InvalidArgument("empty batch".into()));
    }
    let step_stream = NoiseSource::derive_stream(PURPOSE_PERTURB, step as u64);
    let perturb = |src: &mut NoiseSource| match cfg.perturb_order {
        PerturbOrder::First => perturb_first_order(p, cfg.beta, src),
        PerturbOrder::Second => {
            let mt = matching.ok_or_else(|| {
                RbmError::InvalidArgument("second-order perturbation needs a matching".into())
            })?;
            perturb_second_order(p, mt, cfg.beta, src)
        }
    };
    match cfg.noise_sharing {
        NoiseSharing::PerMinibatch => {
            let mut src = NoiseSource::new(cfg.seed, step_stream);
            let pp = perturb(&mut src)?;
            batch
                .iter()
                .map(|v| Ok(perturb_and_descend(v, &pp, cfg.k)?.state))
                .collect()
        }
        NoiseSharing::PerParticle => batch
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let mut src =
                    NoiseSource::new(cfg.seed, NoiseSource::derive_stream(step_stream, idx as u64));
                let pp = perturb(&mut src)?;
                Ok(perturb_and_descend(v, &pp, cfg.k)?.state)
            })
            .collect(),
    }
}

/// Momentum accumulator carried across steps.
#[derive(Debug, Clone)]
pub struct MomentumState {
    pub vw: Array2<f64>,
    pub va: Array1<f64>,
    pub vb: Array1<f64>,
}

impl MomentumState {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            vw: Array2::zeros((n, m)),
            va: Array1::zeros(n),
            vb: Array1::zeros(m),
        }
    }
}

/// Gradient-ascent update θ ← θ + lr·(g − wd·W), weight decay on W only,
/// with optional momentum.
pub fn sgd_step(
    p: &ModelParams,
    g: &Gradient,
    cfg: &TrainConfig,
    mom: &mut MomentumState,
) -> Result<ModelParams> {
    if g.dw.dim() != p.w.dim() || g.da.len() != p.a.len() || g.db.len() != p.b.len() {
        return Err(RbmError::DimensionMismatch(
            "gradient shape does not match model".into(),
        ));
    }
    let raw_w = &g.dw - &(cfg.weight_decay * &p.w);
    mom.vw = cfg.momentum * &mom.vw + &raw_w;
    mom.va = cfg.momentum * &mom.va + &g.da;
    mom.vb = cfg.momentum * &mom.vb + &g.db;
    Ok(ModelParams {
        w: &p.w + &(cfg.learning_rate * &mom.vw),
        a: &p.a + &(cfg.learning_rate * &mom.va),
        b: &p.b + &(cfg.learning_rate * &mom.vb),
    })
}

/// W ~ N(0, 0.01²), zero biases, from the run's init stream.
pub fn initialize_params(n: usize, m: usize, seed: u64) -> ModelParams {
    let mut src = NoiseSource::new(seed, NoiseSource::derive_stream(PURPOSE_INIT, 0));
    let normal = Normal::new(0.0, 0.01).unwrap();
    let w = Array2::from_shape_fn((n, m), |_| normal.sample(src.rng()));
    ModelParams {
        w,
        a: Array1::zeros(n),
        b: Array1::zeros(m),
    }
}

/// Deterministic one-pass reconstruction mismatch, averaged over the batch.
fn reconstruction_error(batch: &[Vec<u8>], p: &ModelParams) -> Result<f64> {
    let mut total = 0.0;
    for v in batch {
        let h: Vec<u8> = hidden_conditional(v, p)?
            .iter()
            .map(|&q| u8::from(q > 0.5))
            .collect();
        let probs = visible_conditional(&h, p)?;
        let mismatches = v
            .iter()
            .zip(probs.iter())
            .filter(|&(&vi, &q)| u8::from(q > 0.5) != vi)
            .count();
        total += mismatches as f64 / v.len() as f64;
    }
    Ok(total / batch.len() as f64)
}

fn mean_hidden_activation(batch: &[Vec<u8>], p: &ModelParams) -> Result<f64> {
    let mut total = 0.0;
    for v in batch {
        let probs = hidden_conditional(v, p)?;
        total += probs.iter().sum::<f64>() / probs.len() as f64;
    }
    Ok(total / batch.len() as f64)
}

/// Full training loop. Minibatches are taken in dataset order; everything is
/// deterministic given (dataset, cfg).
pub fn train(d: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, Vec<MetricsRecord>)> {
    cfg.validate()?;
    let (n, m) = (d.n, cfg.n_hidden);
    let mut params = initialize_params(n, m, cfg.seed);
    let mut metrics = Vec::new();
    let mut mom = MomentumState::zeros(n, m);
    let oracle_ok = n.min(m) <= MAX_ENUM_SIDE;

    let mut gibbs_src = NoiseSource::new(cfg.seed, NoiseSource::derive_stream(PURPOSE_GIBBS, 0));
    let mut chains = match cfg.algorithm {
        Algorithm::Pcd => Some(ChainState::from_data(&d.examples, m, cfg.particle_count)?),
        _ => None,
    };
    let mut cached_matching: Option<Matching> = None;

    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        for batch in d.examples.chunks(cfg.batch_size) {
            let started = Instant::now();
            let pos = positive_phase(batch, &params)?;
            let neg = match cfg.algorithm {
                Algorithm::Pd => {
                    if cfg.perturb_order == PerturbOrder::Second
                        && (cached_matching.is_none() || step.is_multiple_of(cfg.matching_cadence))
                    {
                        cached_matching =
                            Some(max_weight_matching(&influence_weights(&params))?);
                    }
                    let particles = negative_particles_pd(
                        batch,
                        &params,
                        cached_matching.as_ref(),
                        cfg,
                        step,
                    )?;
                    if cfg.pd_mean_field_hidden {
                        negative_phase_mean_field(&particles, &params)?
                    } else {
                        negative_phase(&particles)?
                    }
                }
                Algorithm::Cd => {
                    let particles = cd_particles(batch, &params, cfg.k, &mut gibbs_src)?;
                    negative_phase(&particles)?
                }
                Algorithm::Pcd => {
                    let cs = chains.take().expect("pcd chains initialized");
                    let advanced = pcd_update(&cs, &params, cfg.k, &mut gibbs_src)?;
                    let neg = negative_phase(&advanced.particles)?;
                    chains = Some(advanced);
                    neg
                }
            };
            let grad = assemble_gradient(&pos, &neg)?;
            params = sgd_step(&params, &grad, cfg, &mut mom)?;
            metrics.push(MetricsRecord {
                epoch,
                step,
                exact_avg_loglik: if oracle_ok {
                    Some(avg_log_likelihood_exact(d, &params)?)
                } else {
                    None
                },
                recon_error: reconstruction_error(batch, &params)?,
                grad_norm: grad.l2_norm(),
                mean_hidden_activation: mean_hidden_activation(batch, &params)?,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            });
            step += 1;
        }
    }
    Ok((params, metrics))
}
