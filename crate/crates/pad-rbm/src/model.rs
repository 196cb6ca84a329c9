//! Binary RBM parameterization, energy, conditionals, and exact-enumeration
//! oracles for small models.
//!
//! The joint distribution is p(v,h) ∝ exp(-E(v,h)) with
//! E(v,h) = -(vᵀWh + aᵀv + bᵀh) over v ∈ {0,1}ⁿ, h ∈ {0,1}ᵐ.

use ndarray::{Array1, Array2};

use crate::error::{RbmError, Result};

/// Hard cap on the enumerated side of the partition-function sum.
pub const MAX_ENUM_SIDE: usize = 20;
/// Hard cap on n for full visible-distribution enumeration.
pub const MAX_VISIBLE_ENUM: usize = 16;

/// RBM parameters θ = (W, a, b) for n visible and m hidden binary units.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// n×m pairwise interaction matrix.
    pub w: Array2<f64>,
    /// Visible biases, length n.
    pub a: Array1<f64>,
    /// Hidden biases, length m.
    pub b: Array1<f64>,
}

impl ModelParams {
    pub fn new(w: Array2<f64>, a: Array1<f64>, b: Array1<f64>) -> Result<Self> {
        if w.nrows() != a.len() || w.ncols() != b.len() {
            return Err(RbmError::DimensionMismatch(format!(
                "W is {}x{} but a has length {} and b has length {}",
                w.nrows(),
                w.ncols(),
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() || b.is_empty() {
            return Err(RbmError::InvalidArgument(
                "model must have at least one visible and one hidden unit".into(),
            ));
        }
        let all_finite = w.iter().chain(a.iter()).chain(b.iter()).all(|x| x.is_finite());
        if !all_finite {
            return Err(RbmError::InvalidArgument(
                "model parameters must be finite".into(),
            ));
        }
        Ok(Self { w, a, b })
    }

    /// All-zero parameters for the given shape.
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            w: Array2::zeros((n, m)),
            a: Array1::zeros(n),
            b: Array1::zeros(m),
        }
    }

    pub fn n_visible(&self) -> usize {
        self.a.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.b.len()
    }
}

/// A joint binary configuration (v, h).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryState {
    pub v: Vec<u8>,
    pub h: Vec<u8>,
}

impl BinaryState {
    pub fn new(v: Vec<u8>, h: Vec<u8>) -> Result<Self> {
        if v.iter().chain(h.iter()).any(|&bit| bit > 1) {
            return Err(RbmError::InvalidArgument(
                "state entries must be 0 or 1".into(),
            ));
        }
        Ok(Self { v, h })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            v: vec![0; n],
            h: vec![0; m],
        }
    }
}

/// A set of visible training examples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub examples: Vec<Vec<u8>>,
}

impl Dataset {
    pub fn new(n: usize, examples: Vec<Vec<u8>>) -> Result<Self> {
        if examples.is_empty() {
            return Err(RbmError::InvalidArgument("dataset must be nonempty".into()));
        }
        for (k, ex) in examples.iter().enumerate() {
            if ex.len() != n {
                return Err(RbmError::InvalidArgument(format!(
                    "example {} has length {}, expected {}",
                    k,
                    ex.len(),
                    n
                )));
            }
            if ex.iter().any(|&bit| bit > 1) {
                return Err(RbmError::InvalidArgument(format!(
                    "example {} contains a non-binary entry",
                    k
                )));
            }
        }
        Ok(Self { n, examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

fn check_visible(v: &[u8], p: &ModelParams) -> Result<()> {
    if v.len() != p.n_visible() {
        return Err(RbmError::DimensionMismatch(format!(
            "visible vector has length {}, model expects {}",
            v.len(),
            p.n_visible()
        )));
    }
    Ok(())
}

fn check_hidden(h: &[u8], p: &ModelParams) -> Result<()> {
    if h.len() != p.n_hidden() {
        return Err(RbmError::DimensionMismatch(format!(
            "hidden vector has length {}, model expects {}",
            h.len(),
            p.n_hidden()
        )));
    }
    Ok(())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + eˣ), safe for large |x|.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable log Σ exp(xᵢ).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// E(v,h) = -(vᵀWh + aᵀv + bᵀh).
pub fn energy(s: &BinaryState, p: &ModelParams) -> Result<f64> {
    check_visible(&s.v, p)?;
    check_hidden(&s.h, p)?;
    let mut acc = 0.0;
    for (i, &vi) in s.v.iter().enumerate() {
        if vi == 0 {
            continue;
        }
        acc += p.a[i];
        for (j, &hj) in s.h.iter().enumerate() {
            if hj == 1 {
                acc += p.w[[i, j]];
            }
        }
    }
    for (j, &hj) in s.h.iter().enumerate() {
        if hj == 1 {
            acc += p.b[j];
        }
    }
    Ok(-acc)
}

/// p(hⱼ = 1 | v) = sigmoid(bⱼ + (Wᵀv)ⱼ) for each hidden unit.
pub fn hidden_conditional(v: &[u8], p: &ModelParams) -> Result<Array1<f64>> {
    check_visible(v, p)?;
    let mut out = p.b.clone();
    for (i, &vi) in v.iter().enumerate() {
        if vi == 1 {
            for j in 0..p.n_hidden() {
                out[j] += p.w[[i, j]];
            }
        }
    }
    out.mapv_inplace(sigmoid);
    Ok(out)
}

/// p(vᵢ = 1 | h) = sigmoid(aᵢ + (Wh)ᵢ) for each visible unit.
pub fn visible_conditional(h: &[u8], p: &ModelParams) -> Result<Array1<f64>> {
    check_hidden(h, p)?;
    let mut out = p.a.clone();
    for (j, &hj) in h.iter().enumerate() {
        if hj == 1 {
            for i in 0..p.n_visible() {
                out[i] += p.w[[i, j]];
            }
        }
    }
    out.mapv_inplace(sigmoid);
    Ok(out)
}

/// log Σ_h exp(-E(v,h)) = aᵀv + Σⱼ softplus(bⱼ + (Wᵀv)ⱼ).
///
/// The negated value is the free energy of v.
pub fn unnorm_log_marginal(v: &[u8], p: &ModelParams) -> Result<f64> {
    check_visible(v, p)?;
    let mut linear = 0.0;
    let mut acts = p.b.clone();
    for (i, &vi) in v.iter().enumerate() {
        if vi == 1 {
            linear += p.a[i];
            for j in 0..p.n_hidden() {
                acts[j] += p.w[[i, j]];
            }
        }
    }
    Ok(linear + acts.iter().map(|&x| softplus(x)).sum::<f64>())
}

/// Hidden-side mirror: log Σ_v exp(-E(v,h)) = bᵀh + Σᵢ softplus(aᵢ + (Wh)ᵢ).
pub fn unnorm_log_marginal_hidden(h: &[u8], p: &ModelParams) -> Result<f64> {
    check_hidden(h, p)?;
    let mut linear = 0.0;
    let mut acts = p.a.clone();
    for (j, &hj) in h.iter().enumerate() {
        if hj == 1 {
            linear += p.b[j];
            for i in 0..p.n_visible() {
                acts[i] += p.w[[i, j]];
            }
        }
    }
    Ok(linear + acts.iter().map(|&x| softplus(x)).sum::<f64>())
}

/// Unpack the low `len` bits of `index` into a bit vector, bit 0 first.
pub fn bits_from_index(index: usize, len: usize) -> Vec<u8> {
    (0..len).map(|k| ((index >> k) & 1) as u8).collect()
}

/// Exact log Z by enumerating the smaller of the two layers.
///
/// Requires min(n, m) ≤ 20.
pub fn log_partition_exact(p: &ModelParams) -> Result<f64> {
    let (n, m) = (p.n_visible(), p.n_hidden());
    let side = n.min(m);
    if side > MAX_ENUM_SIDE {
        return Err(RbmError::Capacity(format!(
            "min(n, m) = {} exceeds the enumeration limit of {}",
            side, MAX_ENUM_SIDE
        )));
    }
    let terms: Vec<f64> = if n <= m {
        (0..1usize << n)
            .map(|idx| unnorm_log_marginal(&bits_from_index(idx, n), p))
            .collect::<Result<_>>()?
    } else {
        (0..1usize << m)
            .map(|idx| unnorm_log_marginal_hidden(&bits_from_index(idx, m), p))
            .collect::<Result<_>>()?
    };
    Ok(log_sum_exp(&terms))
}

/// Exact averaged log-likelihood (1/N) Σₖ [log Σ_h exp(-E(v⁽ᵏ⁾,h)) - log Z].
pub fn avg_log_likelihood_exact(d: &Dataset, p: &ModelParams) -> Result<f64> {
    let log_z = log_partition_exact(p)?;
    let mut total = 0.0;
    for ex in &d.examples {
        total += unnorm_log_marginal(ex, p)? - log_z;
    }
    Ok(total / d.len() as f64)
}

/// Exact marginal p(v) for every v, indexed by the bit packing of
/// [`bits_from_index`]. Requires n ≤ 16.
pub fn exact_visible_distribution(p: &ModelParams) -> Result<Vec<f64>> {
    let n = p.n_visible();
    if n > MAX_VISIBLE_ENUM {
        return Err(RbmError::Capacity(format!(
            "n = {} exceeds the visible enumeration limit of {}",
            n, MAX_VISIBLE_ENUM
        )));
    }
    let log_z = log_partition_exact(p)?;
    (0..1usize << n)
        .map(|idx| Ok((unnorm_log_marginal(&bits_from_index(idx, n), p)? - log_z).exp()))
        .collect()
}
