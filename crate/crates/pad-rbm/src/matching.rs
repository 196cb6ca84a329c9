//! Maximum-weight bipartite matching over the |W| influence matrix, used to
//! pick the pairwise factors that receive second-order noise.

use ndarray::Array2;

use crate::error::{RbmError, Result};
use crate::model::ModelParams;

/// A partial matching between visible and hidden indices. No index repeats
/// on either side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn new(pairs: Vec<(usize, usize)>, n: usize, m: usize) -> Result<Self> {
        let mut rows = vec![false; n];
        let mut cols = vec![false; m];
        for &(i, j) in &pairs {
            if i >= n || j >= m {
                return Err(RbmError::InvalidArgument(format!(
                    "pair ({i}, {j}) out of range for {n}x{m}"
                )));
            }
            if rows[i] || cols[j] {
                return Err(RbmError::InvalidArgument(format!(
                    "pair ({i}, {j}) repeats a matched index"
                )));
            }
            rows[i] = true;
            cols[j] = true;
        }
        Ok(Self { pairs })
    }

    pub fn empty() -> Self {
        Self { pairs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Influence of each interaction: entry (i, j) = |W_{i,j}|.
pub fn influence_weights(p: &ModelParams) -> Array2<f64> {
    p.w.mapv(f64::abs)
}

/// Maximum-weight matching of size min(n, m) via the Hungarian algorithm on
/// the zero-padded square cost matrix. O(max(n,m)³).
pub fn max_weight_matching(weights: &Array2<f64>) -> Result<Matching> {
    let (n, m) = weights.dim();
    if n == 0 || m == 0 {
        return Ok(Matching::empty());
    }
    for &w in weights.iter() {
        if !w.is_finite() || w < 0.0 {
            return Err(RbmError::InvalidArgument(format!(
                "matching weights must be finite and nonnegative, got {w}"
            )));
        }
    }
    let size = n.max(m);
    // Minimize negated weights; padding stays at cost 0.
    let mut cost = vec![vec![0.0f64; size]; size];
    for i in 0..n {
        for j in 0..m {
            cost[i][j] = -weights[[i, j]];
        }
    }
    let assignment = solve_assignment(&cost);
    let mut pairs: Vec<(usize, usize)> = assignment
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < n && j < m)
        .map(|(i, &j)| (i, j))
        .collect();
    pairs.sort_unstable();
    Matching::new(pairs, n, m)
}

/// Hungarian algorithm with row/column potentials on a square cost matrix;
/// returns the column assigned to each row.
fn solve_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let size = cost.len();
    // 1-based sentinels in column 0, per the classical shortest augmenting
    // path formulation.
    let mut row_potential = vec![0.0f64; size + 1];
    let mut col_potential = vec![0.0f64; size + 1];
    let mut col_match = vec![0usize; size + 1]; // row matched to each column
    let mut col_prev = vec![0usize; size + 1];

    for row in 1..=size {
        col_match[0] = row;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = col_match[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=size {
                if used[j] {
                    continue;
                }
                let slack = cost[i0 - 1][j - 1] - row_potential[i0] - col_potential[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    col_prev[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=size {
                if used[j] {
                    row_potential[col_match[j]] += delta;
                    col_potential[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if col_match[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path.
        while j0 != 0 {
            let j1 = col_prev[j0];
            col_match[j0] = col_match[j1];
            j0 = j1;
        }
    }

    let mut assignment = vec![0usize; size];
    for j in 1..=size {
        if col_match[j] != 0 {
            assignment[col_match[j] - 1] = j - 1;
        }
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    // Brute force over all injections from the smaller side.
    fn brute_force_best(weights: &Array2<f64>) -> f64 {
        let (n, m) = weights.dim();
        fn recurse(
            weights: &Array2<f64>,
            row: usize,
            used: &mut Vec<bool>,
            acc: f64,
            best: &mut f64,
        ) {
            let (n, m) = weights.dim();
            if row == n {
                if acc > *best {
                    *best = acc;
                }
                return;
            }
            for j in 0..m {
                if !used[j] {
                    used[j] = true;
                    recurse(weights, row + 1, used, acc + weights[[row, j]], best);
                    used[j] = false;
                }
            }
        }
        let transposed;
        let w = if n <= m {
            weights
        } else {
            transposed = weights.t().to_owned();
            &transposed
        };
        let mut best = f64::NEG_INFINITY;
        recurse(w, 0, &mut vec![false; w.ncols()], 0.0, &mut best);
        best
    }

    fn total(weights: &Array2<f64>, mt: &Matching) -> f64 {
        mt.pairs.iter().map(|&(i, j)| weights[[i, j]]).sum()
    }

    #[test]
    fn identity_case() {
        let w = array![[1.0, 0.0], [0.0, 1.0]];
        let mt = max_weight_matching(&w).unwrap();
        assert_eq!(mt.pairs, vec![(0, 0), (1, 1)]);
        assert!((total(&w, &mt) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn picks_the_better_permutation() {
        let w = array![[3.0, 1.0], [2.0, 4.0]];
        let mt = max_weight_matching(&w).unwrap();
        assert_eq!(mt.pairs, vec![(0, 0), (1, 1)]);
        assert!((total(&w, &mt) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn rectangular_single_row() {
        let w = array![[2.0, 5.0, 1.0]];
        let mt = max_weight_matching(&w).unwrap();
        assert_eq!(mt.pairs, vec![(0, 1)]);
        assert!((total(&w, &mt) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_and_nonfinite() {
        assert!(max_weight_matching(&array![[1.0, -0.5]]).is_err());
        assert!(max_weight_matching(&array![[f64::NAN]]).is_err());
    }

    #[test]
    fn optimal_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let n = rng.random_range(1..=7);
            let m = rng.random_range(1..=7);
            let w = Array2::from_shape_fn((n, m), |_| {
                // Grid-valued weights avoid float ties in the comparison.
                rng.random_range(0..=100) as f64 / 10.0
            });
            let mt = max_weight_matching(&w).unwrap();
            assert_eq!(mt.len(), n.min(m));
            let got = total(&w, &mt);
            let best = brute_force_best(&w);
            assert!(
                (got - best).abs() < 1e-9,
                "got {got}, brute force {best}, weights {w:?}"
            );
        }
    }

    #[test]
    fn permutation_equivariant_totals() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..50 {
            let w = Array2::from_shape_fn((5, 4), |_| rng.random_range(0..=100) as f64);
            let mut swapped = w.clone();
            for j in 0..4 {
                swapped.swap([0, j], [3, j]);
            }
            let t1 = total(&w, &max_weight_matching(&w).unwrap());
            let t2 = total(&swapped, &max_weight_matching(&swapped).unwrap());
            assert!((t1 - t2).abs() < 1e-9);
        }
    }

    #[test]
    fn influence_is_absolute_value() {
        let p = ModelParams::new(
            array![[-3.0, 0.5], [0.0, 2.0]],
            array![0.0, 0.0],
            array![0.0, 0.0],
        )
        .unwrap();
        let infl = influence_weights(&p);
        assert_eq!(infl, array![[3.0, 0.5], [0.0, 2.0]]);
    }

    #[test]
    fn matching_invariants_enforced() {
        assert!(Matching::new(vec![(0, 0), (0, 1)], 2, 2).is_err());
        assert!(Matching::new(vec![(0, 0), (1, 0)], 2, 2).is_err());
        assert!(Matching::new(vec![(2, 0)], 2, 2).is_err());
        assert!(Matching::new(vec![(0, 0), (1, 1)], 2, 2).is_ok());
    }
}
