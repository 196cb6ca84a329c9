//! Statistical and numerical self-checks on small models: sampler
//! exactness, the log-partition upper bound, and gradient fidelity against
//! finite differences.

use crate::error::{RbmError, Result};
use crate::model::{
    avg_log_likelihood_exact, bits_from_index, energy, log_partition_exact, log_sum_exp,
    BinaryState, Dataset, ModelParams,
};
use crate::noise::NoiseSource;
use crate::samplers::{logz_upper_bound_estimate, perturb_and_map_exact, tv_distance};
use crate::training::{assemble_gradient, positive_phase, Gradient};

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

/// Exact joint Gibbs distribution over all 2^(n+m) states, indexed with v in
/// the low bits.
pub fn exact_joint_distribution(p: &ModelParams) -> Result<Vec<f64>> {
    let (n, m) = (p.n_visible(), p.n_hidden());
    if n + m > crate::samplers::MAX_JOINT_BITS {
        return Err(RbmError::Capacity(format!(
            "n + m = {} exceeds the joint enumeration limit of {}",
            n + m,
            crate::samplers::MAX_JOINT_BITS
        )));
    }
    let weights: Vec<f64> = (0..1usize << (n + m))
        .map(|idx| {
            let s = BinaryState {
                v: bits_from_index(idx & ((1 << n) - 1), n),
                h: bits_from_index(idx >> n, m),
            };
            Ok(-energy(&s, p)?)
        })
        .collect::<Result<_>>()?;
    let log_z = log_sum_exp(&weights);
    Ok(weights.iter().map(|w| (w - log_z).exp()).collect())
}

fn pack(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .map(|(k, &bit)| (bit as usize) << k)
        .sum()
}

/// TV distance between the empirical perturb-and-MAP distribution and the
/// enumerated joint Gibbs distribution.
pub fn check_lemma1(
    p: &ModelParams,
    draws: usize,
    tv_threshold: f64,
    src: &mut NoiseSource,
) -> Result<CheckReport> {
    let oracle = exact_joint_distribution(p)?;
    let n = p.n_visible();
    let mut counts = vec![0usize; oracle.len()];
    for _ in 0..draws {
        let s = perturb_and_map_exact(p, src)?;
        counts[pack(&s.v) | (pack(&s.h) << n)] += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
    let tv = tv_distance(&empirical, &oracle);
    Ok(CheckReport {
        name: "lemma1".into(),
        statistic: tv,
        threshold: tv_threshold,
        passed: tv < tv_threshold,
        detail: format!("TV distance over {draws} draws"),
    })
}

/// First-order perturbation maxima vs the exact log partition function. The
/// statistic is (mean - log Z)/stderr; it must not fall below -3.
pub fn check_bound(p: &ModelParams, trials: usize, src: &mut NoiseSource) -> Result<CheckReport> {
    let exact = log_partition_exact(p)?;
    let (mean, stderr) = logz_upper_bound_estimate(p, trials, 1.0, src)?;
    let slack = if stderr > 0.0 {
        (mean - exact) / stderr
    } else if mean >= exact {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    Ok(CheckReport {
        name: "bound".into(),
        statistic: slack,
        threshold: -3.0,
        passed: mean >= exact - 3.0 * stderr,
        detail: format!("mean {mean:.6}, exact log Z {exact:.6}, stderr {stderr:.6}"),
    })
}

/// Exact model expectations of the sufficient statistics by joint
/// enumeration: the exact negative phase.
pub fn exact_negative_phase(p: &ModelParams) -> Result<Gradient> {
    let dist = exact_joint_distribution(p)?;
    let (n, m) = (p.n_visible(), p.n_hidden());
    let mut g = Gradient::zeros(n, m);
    for (idx, &prob) in dist.iter().enumerate() {
        let v = bits_from_index(idx & ((1 << n) - 1), n);
        let h = bits_from_index(idx >> n, m);
        for i in 0..n {
            if v[i] == 1 {
                g.da[i] += prob;
                for j in 0..m {
                    if h[j] == 1 {
                        g.dw[[i, j]] += prob;
                    }
                }
            }
        }
        for j in 0..m {
            g.db[j] += prob * h[j] as f64;
        }
    }
    Ok(g)
}

/// Assembled gradient (exact negative phase) vs central finite differences
/// of the exact average log-likelihood.
pub fn check_gradient(p: &ModelParams, d: &Dataset, fd_step: f64) -> Result<CheckReport> {
    let pos = positive_phase(&d.examples, p)?;
    let neg = exact_negative_phase(p)?;
    let grad = assemble_gradient(&pos, &neg)?;

    let mut max_rel = 0.0f64;
    let mut compare = |analytic: f64,
                       plus: &ModelParams,
                       minus: &ModelParams|
     -> Result<()> {
        let fd = (avg_log_likelihood_exact(d, plus)? - avg_log_likelihood_exact(d, minus)?)
            / (2.0 * fd_step);
        let rel = (analytic - fd).abs() / fd.abs().max(1e-8);
        if rel > max_rel {
            max_rel = rel;
        }
        Ok(())
    };
    let (n, m) = (p.n_visible(), p.n_hidden());
    for i in 0..n {
        for j in 0..m {
            let mut plus = p.clone();
            plus.w[[i, j]] += fd_step;
            let mut minus = p.clone();
            minus.w[[i, j]] -= fd_step;
            compare(grad.dw[[i, j]], &plus, &minus)?;
        }
    }
    for i in 0..n {
        let mut plus = p.clone();
        plus.a[i] += fd_step;
        let mut minus = p.clone();
        minus.a[i] -= fd_step;
        compare(grad.da[i], &plus, &minus)?;
    }
    for j in 0..m {
        let mut plus = p.clone();
        plus.b[j] += fd_step;
        let mut minus = p.clone();
        minus.b[j] -= fd_step;
        compare(grad.db[j], &plus, &minus)?;
    }
    Ok(CheckReport {
        name: "gradcheck".into(),
        statistic: max_rel,
        threshold: 1e-6,
        passed: max_rel < 1e-6,
        detail: format!("max relative error, step {fd_step:e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_model(n: usize, m: usize, seed: u64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sample = || rng.random::<f64>() * 2.0 - 1.0;
        ModelParams {
            w: Array2::from_shape_fn((n, m), |_| sample()),
            a: Array1::from_shape_fn(n, |_| sample()),
            b: Array1::from_shape_fn(m, |_| sample()),
        }
    }

    #[test]
    fn joint_distribution_normalized() {
        let p = random_model(2, 3, 0);
        let dist = exact_joint_distribution(&p).unwrap();
        assert_eq!(dist.len(), 32);
        assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lemma1_check_passes_on_small_model() {
        let p = random_model(2, 2, 1);
        let report = check_lemma1(&p, 50_000, 0.03, &mut NoiseSource::new(2, 0)).unwrap();
        assert!(report.passed, "TV = {}", report.statistic);
    }

    #[test]
    fn bound_check_passes() {
        let p = random_model(2, 2, 3);
        let report = check_bound(&p, 2000, &mut NoiseSource::new(4, 0)).unwrap();
        assert!(report.passed, "slack = {}", report.statistic);
    }

    #[test]
    fn gradient_check_passes() {
        let p = random_model(4, 3, 5);
        let d = Dataset::new(
            4,
            vec![vec![1, 0, 1, 0], vec![0, 1, 1, 1], vec![1, 1, 0, 0]],
        )
        .unwrap();
        let report = check_gradient(&p, &d, 1e-4).unwrap();
        assert!(report.passed, "max rel err = {}", report.statistic);
    }

    #[test]
    fn capacity_errors_propagate() {
        let p = ModelParams::zeros(10, 10);
        assert!(check_lemma1(&p, 10, 0.02, &mut NoiseSource::new(0, 0)).is_err());
        assert!(check_bound(&p, 10, &mut NoiseSource::new(0, 0)).is_err());
    }
}
