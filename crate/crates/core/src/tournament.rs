//! Ordered recursive-bisection tournament over ranked paths.
//!
//! A block of `m` consecutive paths splits into a left block holding the
//! first `ceil(m / 2)` and a right block with the rest. Each split goes left
//! with probability `gamma`, so leaf `i` is reached with probability
//! `gamma^m_i (1 - gamma)^(k_i - m_i)`, where `k_i` is its depth and `m_i`
//! the number of left turns on its trace.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, invalid, Result};
use crate::seeds;

/// Depth and left-turn count of one leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub depth: u32,
    pub left_turns: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TournamentTree {
    leaves: Vec<Leaf>,
}

/// Per-leaf selection probabilities for one bias value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDistribution {
    pub probabilities: Vec<f64>,
}

/// Enclosure of any stationary bias for a tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaBounds {
    /// `min_i m_i / k_i`.
    pub lower: f64,
    /// `max_i m_i / k_i`.
    pub upper: f64,
    /// `(1 / k_max, 1 - 1 / k_max)`, present only when every leaf turns both
    /// left and right at least once.
    pub depth_capped: Option<(f64, f64)>,
}

/// Builds the bisection tree over `n` ranked leaves.
pub fn build_tree(n: usize) -> Result<TournamentTree> {
    if n == 0 {
        return Err(invalid("n", "a tournament needs at least one path"));
    }
    let mut leaves = Vec::with_capacity(n);
    bisect(n, 0, 0, &mut leaves);
    Ok(TournamentTree { leaves })
}

fn bisect(m: usize, depth: u32, left_turns: u32, out: &mut Vec<Leaf>) {
    if m == 1 {
        out.push(Leaf { depth, left_turns });
        return;
    }
    let left = m.div_ceil(2);
    bisect(left, depth + 1, left_turns + 1, out);
    bisect(m - left, depth + 1, left_turns, out);
}

/// `gamma^m (1 - gamma)^(k - m)` with `0^0 = 1`, in log space for deep leaves.
pub(crate) fn leaf_probability(leaf: Leaf, gamma: f64) -> f64 {
    let right = leaf.depth - leaf.left_turns;
    if leaf.depth <= 32 {
        return gamma.powi(leaf.left_turns as i32) * (1.0 - gamma).powi(right as i32);
    }
    let term = |base: f64, exp: u32| {
        if exp == 0 {
            0.0
        } else {
            f64::from(exp) * base.ln()
        }
    };
    (term(gamma, leaf.left_turns) + term(1.0 - gamma, right)).exp()
}

impl TournamentTree {
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn max_depth(&self) -> u32 {
        self.leaves.iter().map(|l| l.depth).max().unwrap_or(0)
    }

    /// `sum_i 2^(-k_i)`.
    pub fn kraft_sum(&self) -> f64 {
        self.leaves.iter().map(|l| 0.5f64.powi(l.depth as i32)).sum()
    }

    /// Draws a leaf by walking the tree with one Bernoulli(gamma) per level.
    pub fn sample<R: Rng + ?Sized>(&self, gamma: f64, rng: &mut R) -> usize {
        let (mut lo, mut m) = (0, self.leaves.len());
        while m > 1 {
            let left = m.div_ceil(2);
            if rng.random::<f64>() < gamma {
                m = left;
            } else {
                lo += left;
                m -= left;
            }
        }
        lo
    }
}

pub fn selection_probabilities(tree: &TournamentTree, gamma: f64) -> Result<SelectionDistribution> {
    check_probability("gamma", gamma)?;
    Ok(SelectionDistribution {
        probabilities: tree
            .leaves
            .iter()
            .map(|&leaf| leaf_probability(leaf, gamma))
            .collect(),
    })
}

/// Samples one leaf index (0-based) from a freshly seeded generator.
pub fn sample_selection(tree: &TournamentTree, gamma: f64, seed: u64) -> Result<usize> {
    check_probability("gamma", gamma)?;
    Ok(tree.sample(gamma, &mut seeds::rng(seed)))
}

pub fn gamma_star_bounds(tree: &TournamentTree) -> Result<GammaBounds> {
    if tree.len() < 2 {
        return Err(invalid("n", "bounds need at least two paths"));
    }
    let ratios = tree
        .leaves
        .iter()
        .map(|l| f64::from(l.left_turns) / f64::from(l.depth));
    let lower = ratios.clone().fold(f64::INFINITY, f64::min);
    let upper = ratios.fold(f64::NEG_INFINITY, f64::max);
    let mixed = tree
        .leaves
        .iter()
        .all(|l| l.left_turns >= 1 && l.left_turns < l.depth);
    let depth_capped = mixed.then(|| {
        let k = f64::from(tree.max_depth());
        (1.0 / k, 1.0 - 1.0 / k)
    });
    Ok(GammaBounds {
        lower,
        upper,
        depth_capped,
    })
}
