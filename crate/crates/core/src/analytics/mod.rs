//! Closed-form expected throughput of tournament routing, its derivative in
//! the bias, the optimal-bias fixed point, and capacity upper bounds.
//!
//! Every quantity is evaluated on a [`ThroughputModel`]: a finite mixture of
//! scenarios, each a ranked list of paths with a swap weight and an
//! effective-capacity mass function. Two constructors exist:
//!
//! * [`ThroughputModel::averaged`] mixes over the number of paths `n` with
//!   weights `Pi_n`; rank `i` uses the fitted hop count `h_i` and one
//!   geometry-averaged link success probability.
//! * [`ThroughputModel::exact`] takes concrete per-edge probabilities for a
//!   fixed family of disjoint paths and mixes over which of them survive the
//!   window (a path with a zero-capacity link drops out of the tournament).

pub mod binomial;
mod optimize;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, invalid, Error, Result};
use crate::tournament::{build_tree, gamma_star_bounds, leaf_probability, TournamentTree};

pub use binomial::{binomial_pmf, binomial_tail, binomial_tails, ceff_pmf, ceff_pmf_uniform, tail_sum_s};
pub use optimize::{damped_fixed_point, golden_section_max, OptimalGamma, OptimizerOptions, SolveMethod};

use binomial::{capped_mean_slopes, capped_means, pmf_mean};

/// Largest path family the exact mode enumerates (2^n survival patterns).
pub const MAX_EXACT_PATHS: usize = 20;

/// Distribution of the number of feasible disjoint paths, indexed by `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCountDistribution {
    probabilities: Vec<f64>,
}

impl PathCountDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(invalid("Pi", "probabilities must be nonnegative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("Pi", format!("probabilities sum to {total}")));
        }
        Ok(Self { probabilities })
    }

    /// Empirical distribution from a histogram of path counts.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput("path-count histogram"));
        }
        Ok(Self {
            probabilities: counts
                .iter()
                .map(|&c| c as f64 / total as f64)
                .collect(),
        })
    }

    pub fn point_mass(n: usize) -> Self {
        let mut probabilities = vec![0.0; n + 1];
        probabilities[n] = 1.0;
        Self { probabilities }
    }

    pub fn probability(&self, n: usize) -> f64 {
        self.probabilities.get(n).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `(n, Pi_n)` for every `n` with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(n, &p)| (n, p))
    }

    pub fn max_n(&self) -> usize {
        self.support().map(|(n, _)| n).max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.support().map(|(n, p)| n as f64 * p).sum()
    }
}

/// Link success model behind a [`HopProfile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopSuccess {
    /// One probability for every link of every path.
    Averaged(f64),
    /// `per_edge[i][j]` is the success probability of hop `j` on path `i`.
    PerEdge(Vec<Vec<f64>>),
}

/// Per-rank path description: hop counts, swap weights and link success.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopProfile {
    hops: Vec<f64>,
    p_swap: f64,
    success: HopSuccess,
}

impl HopProfile {
    /// Ranked hop counts with a single averaged link success `p`.
    ///
    /// Hop counts may be fractional (fitted); weights use them as they are,
    /// while capacity tails use the nearest integer.
    pub fn averaged(hops: Vec<f64>, p_swap: f64, p: f64) -> Result<Self> {
        check_probability("p_swap", p_swap)?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid("p", format!("{p} is not in (0, 1]")));
        }
        check_hops(&hops)?;
        Ok(Self {
            hops,
            p_swap,
            success: HopSuccess::Averaged(p),
        })
    }

    /// `h_1` at rank 1 and `h_1 + c i^beta` at ranks `i = 2..=ranks`.
    pub fn from_power_law(
        h1: f64,
        c: f64,
        beta: f64,
        ranks: usize,
        p_swap: f64,
        p: f64,
    ) -> Result<Self> {
        let hops = (1..=ranks)
            .map(|i| {
                if i == 1 {
                    h1
                } else {
                    h1 + c * (i as f64).powf(beta)
                }
            })
            .collect();
        Self::averaged(hops, p_swap, p)
    }

    /// Concrete paths given by the success probability of each hop.
    pub fn exact(per_edge: Vec<Vec<f64>>, p_swap: f64) -> Result<Self> {
        check_probability("p_swap", p_swap)?;
        for path in &per_edge {
            if path.is_empty() {
                return Err(Error::EmptyInput("path has no hops"));
            }
            for &p in path {
                check_probability("hop probability", p)?;
            }
        }
        let hops: Vec<f64> = per_edge.iter().map(|p| p.len() as f64).collect();
        check_hops(&hops)?;
        Ok(Self {
            hops,
            p_swap,
            success: HopSuccess::PerEdge(per_edge),
        })
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    pub fn hops(&self) -> &[f64] {
        &self.hops
    }

    pub fn p_swap(&self) -> f64 {
        self.p_swap
    }

    pub fn success(&self) -> &HopSuccess {
        &self.success
    }

    /// `w_i = p_swap^(h_i - 1)`.
    pub fn weight(&self, rank: usize) -> f64 {
        self.p_swap.powf(self.hops[rank] - 1.0)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Effective-capacity mass function of the path at `rank` (0-based).
    pub fn ceff_pmf(&self, rank: usize, c0: u32) -> Vec<f64> {
        match &self.success {
            HopSuccess::Averaged(p) => {
                let hops = self.hops[rank].round().max(1.0) as u32;
                ceff_pmf_uniform(*p, hops, c0)
            }
            HopSuccess::PerEdge(per_edge) => {
                ceff_pmf(&per_edge[rank], c0).expect("validated at construction")
            }
        }
    }

    fn path_model(&self, rank: usize, c0: u32) -> PathModel {
        PathModel {
            weight: self.weight(rank),
            ceff_pmf: self.ceff_pmf(rank, c0),
        }
    }
}

fn check_hops(hops: &[f64]) -> Result<()> {
    if hops.iter().any(|&h| !(h >= 1.0) || !h.is_finite()) {
        return Err(invalid("hops", "hop counts must be finite and at least 1"));
    }
    if hops.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("hops", "hop counts must be nondecreasing in rank"));
    }
    Ok(())
}

/// One ranked path inside a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathModel {
    pub weight: f64,
    /// `P(C_eff = c)` for `c = 0..=c0`.
    pub ceff_pmf: Vec<f64>,
}

impl PathModel {
    pub fn mean_capacity(&self) -> f64 {
        pmf_mean(&self.ceff_pmf)
    }
}

/// A tournament over a fixed ranked path list, with its mixture weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    pub paths: Vec<PathModel>,
    tree: Option<TournamentTree>,
}

impl Scenario {
    pub fn new(probability: f64, paths: Vec<PathModel>) -> Result<Self> {
        let tree = if paths.is_empty() {
            None
        } else {
            Some(build_tree(paths.len())?)
        };
        Ok(Self {
            probability,
            paths,
            tree,
        })
    }

    pub fn tree(&self) -> Option<&TournamentTree> {
        self.tree.as_ref()
    }

    fn terms<'a>(&'a self, gamma: f64) -> impl Iterator<Item = (&'a PathModel, f64, u32, u32)> + 'a {
        let leaves = self.tree.as_ref().map(|t| t.leaves()).unwrap_or(&[]);
        self.paths
            .iter()
            .zip(leaves)
            .map(move |(path, &leaf)| (path, leaf_probability(leaf, gamma), leaf.depth, leaf.left_turns))
    }

    fn expected(&self, gamma: f64, f_r: u32, c0: u32) -> f64 {
        self.terms(gamma)
            .map(|(path, p_sel, _, _)| path.weight * capped_mean(path, f_r, p_sel, c0))
            .sum()
    }

    /// `(sum_i a_i m_i, sum_i a_i k_i)` with `a_i = w_i F_i'(p_i) p_i`.
    fn marginal_sums(&self, gamma: f64, f_r: u32, c0: u32) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for (path, p_sel, depth, left) in self.terms(gamma) {
            if depth == 0 {
                continue;
            }
            let a = path.weight * capped_mean_slope(path, f_r, p_sel, c0) * p_sel;
            num += a * f64::from(left);
            den += a * f64::from(depth);
        }
        (num, den)
    }

    fn ceiling(&self) -> f64 {
        self.paths.iter().map(|p| p.weight * p.mean_capacity()).sum()
    }

    fn max_weight(&self) -> f64 {
        self.paths.iter().map(|p| p.weight).fold(0.0, f64::max)
    }
}

/// `F_i(p) = sum_c S(f_r, p; c) P(C_eff = c)`.
fn capped_mean(path: &PathModel, f_r: u32, p_sel: f64, c0: u32) -> f64 {
    capped_means(f_r, p_sel, c0)
        .iter()
        .zip(&path.ceff_pmf)
        .map(|(s, m)| s * m)
        .sum()
}

/// `F_i'(p)`.
fn capped_mean_slope(path: &PathModel, f_r: u32, p_sel: f64, c0: u32) -> f64 {
    capped_mean_slopes(f_r, p_sel, c0)
        .iter()
        .zip(&path.ceff_pmf)
        .map(|(s, m)| s * m)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputModel {
    c0: u32,
    scenarios: Vec<Scenario>,
}

impl ThroughputModel {
    pub fn new(c0: u32, scenarios: Vec<Scenario>) -> Result<Self> {
        if c0 == 0 {
            return Err(invalid("c0", "must be at least 1"));
        }
        let total: f64 = scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-9 || scenarios.iter().any(|s| !(s.probability >= 0.0)) {
            return Err(invalid("scenarios", format!("probabilities sum to {total}")));
        }
        for s in &scenarios {
            for p in &s.paths {
                if p.ceff_pmf.len() != c0 as usize + 1 {
                    return Err(Error::IndexMismatch {
                        what: "effective-capacity pmf",
                        expected: c0 as usize + 1,
                        found: p.ceff_pmf.len(),
                    });
                }
            }
        }
        Ok(Self { c0, scenarios })
    }

    /// Fixed `n`: ranks `1..=n` of `profile`, every path always in the tournament.
    pub fn conditional(n: usize, profile: &HopProfile, c0: u32) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if profile.len() < n {
            return Err(invalid(
                "profile",
                format!("covers {} ranks, {n} required", profile.len()),
            ));
        }
        let paths = (0..n).map(|i| profile.path_model(i, c0)).collect();
        Self::new(c0, vec![Scenario::new(1.0, paths)?])
    }

    /// Mixture over the path count `n ~ Pi`. `n = 0` contributes nothing;
    /// `n = 1` is a single certain selection.
    pub fn averaged(pi: &PathCountDistribution, profile: &HopProfile, c0: u32) -> Result<Self> {
        if profile.len() < pi.max_n() {
            return Err(invalid(
                "profile",
                format!("covers {} ranks, Pi reaches n = {}", profile.len(), pi.max_n()),
            ));
        }
        let scenarios = pi
            .support()
            .map(|(n, prob)| {
                Scenario::new(prob, (0..n).map(|i| profile.path_model(i, c0)).collect())
            })
            .collect::<Result<_>>()?;
        Self::new(c0, scenarios)
    }

    /// Mixture over which paths of `profile` have every link holding a pair.
    ///
    /// Surviving paths keep their relative rank and carry their capacity
    /// distribution conditioned on `C_eff >= 1`.
    pub fn exact(profile: &HopProfile, c0: u32) -> Result<Self> {
        let n = profile.len();
        if n > MAX_EXACT_PATHS {
            return Err(invalid(
                "profile",
                format!("exact mode supports at most {MAX_EXACT_PATHS} paths, got {n}"),
            ));
        }
        let models: Vec<PathModel> = (0..n).map(|i| profile.path_model(i, c0)).collect();
        let survive: Vec<f64> = models.iter().map(|m| 1.0 - m.ceff_pmf[0]).collect();
        let conditioned: Vec<PathModel> = models
            .iter()
            .zip(&survive)
            .map(|(m, &q)| {
                let mut pmf = vec![0.0; m.ceff_pmf.len()];
                if q > 0.0 {
                    for c in 1..pmf.len() {
                        pmf[c] = m.ceff_pmf[c] / q;
                    }
                }
                PathModel {
                    weight: m.weight,
                    ceff_pmf: pmf,
                }
            })
            .collect();

        let mut scenarios = Vec::new();
        for mask in 0u32..(1 << n) {
            let mut prob = 1.0;
            for (i, &q) in survive.iter().enumerate() {
                prob *= if mask & (1 << i) != 0 { q } else { 1.0 - q };
            }
            if prob == 0.0 {
                continue;
            }
            let paths = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| conditioned[i].clone())
                .collect();
            scenarios.push(Scenario::new(prob, paths)?);
        }
        Self::new(c0, scenarios)
    }

    pub fn c0(&self) -> u32 {
        self.c0
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    /// `E[T_r(gamma)]`.
    pub fn expected(&self, gamma: f64, f_r: u32) -> Result<f64> {
        check_probability("gamma", gamma)?;
        Ok(self.expected_unchecked(gamma, f_r))
    }

    fn expected_unchecked(&self, gamma: f64, f_r: u32) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.probability * s.expected(gamma, f_r, self.c0))
            .sum()
    }

    /// `d E[T_r] / d gamma` on the open interval.
    pub fn derivative(&self, gamma: f64, f_r: u32) -> Result<f64> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Domain {
                what: "throughput derivative",
                gamma,
            });
        }
        let mut total = 0.0;
        for s in &self.scenarios {
            for (path, p_sel, depth, left) in s.terms(gamma) {
                if depth == 0 {
                    continue;
                }
                let a = path.weight * capped_mean_slope(path, f_r, p_sel, self.c0) * p_sel;
                let m = f64::from(left);
                let k = f64::from(depth);
                total += s.probability * a * (m / gamma - (k - m) / (1.0 - gamma));
            }
        }
        Ok(total)
    }

    /// Right-hand side of the stationarity condition,
    /// `sum Pi a_i m_i / sum Pi a_i k_i`. Returns `gamma` itself when every
    /// marginal gain vanishes.
    pub fn fixed_point_map(&self, gamma: f64, f_r: u32) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for s in &self.scenarios {
            let (a, b) = s.marginal_sums(gamma, f_r, self.c0);
            num += s.probability * a;
            den += s.probability * b;
        }
        if den > 0.0 {
            num / den
        } else {
            gamma
        }
    }

    /// The stationary bias, by damped fixed-point iteration with a
    /// golden-section fallback.
    pub fn optimal_gamma(&self, f_r: u32, opts: &OptimizerOptions) -> Result<OptimalGamma> {
        opts.validate()?;
        let (lo, hi) = (opts.eps, 1.0 - opts.eps);
        let value = |g: f64| self.expected_unchecked(g, f_r);
        match damped_fixed_point(|g| self.fixed_point_map(g, f_r), opts) {
            Ok((gamma, iterations)) => {
                let residual = (self.fixed_point_map(gamma, f_r) - gamma).abs();
                if self.is_local_max(gamma, f_r, lo, hi) || !opts.golden_fallback {
                    return Ok(OptimalGamma {
                        gamma,
                        method: SolveMethod::FixedPoint,
                        iterations,
                        residual,
                    });
                }
            }
            Err(e) if !opts.golden_fallback => return Err(e),
            Err(_) => {}
        }
        let (gamma, _) = golden_section_max(value, lo, hi, opts.tol.max(1e-12));
        Ok(OptimalGamma {
            gamma,
            method: SolveMethod::GoldenSection,
            iterations: 0,
            residual: (self.fixed_point_map(gamma, f_r) - gamma).abs(),
        })
    }

    fn is_local_max(&self, gamma: f64, f_r: u32, lo: f64, hi: f64) -> bool {
        let step = 1e-3;
        let center = self.expected_unchecked(gamma, f_r);
        let slack = 1e-12 * center.abs().max(1.0);
        [gamma - step, gamma + step]
            .into_iter()
            .filter(|g| (lo..=hi).contains(g))
            .all(|g| self.expected_unchecked(g, f_r) <= center + slack)
    }

    /// `(min, max)` of `m_i / k_i` over every tree with at least two leaves.
    pub fn bias_enclosure(&self) -> Option<(f64, f64)> {
        self.scenarios
            .iter()
            .filter_map(|s| s.tree())
            .filter_map(|t| gamma_star_bounds(t).ok())
            .fold(None, |acc, b| match acc {
                None => Some((b.lower, b.upper)),
                Some((lo, hi)) => Some((lo.min(b.lower), hi.max(b.upper))),
            })
    }

    /// `sum Pi sum_i w_i E[C_eff_i]`, a ceiling for any selection rule.
    pub fn capacity_ceiling(&self) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.probability * s.ceiling())
            .sum()
    }

    /// `sum Pi min{w_max f_r, sum_i w_i E[C_eff_i]}`.
    pub fn upper_bound(&self, f_r: u32) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.probability * (s.max_weight() * f64::from(f_r)).min(s.ceiling()))
            .sum()
    }

    /// `sum Pi sum_i w_i min{f_r p_i(gamma), E[C_eff_i]}`.
    pub fn envelope(&self, gamma: f64, f_r: u32) -> Result<f64> {
        check_probability("gamma", gamma)?;
        Ok(self
            .scenarios
            .iter()
            .map(|s| {
                s.probability
                    * s.terms(gamma)
                        .map(|(path, p_sel, _, _)| {
                            path.weight * (f64::from(f_r) * p_sel).min(path.mean_capacity())
                        })
                        .sum::<f64>()
            })
            .sum())
    }
}

/// Expected throughput with exactly `n` paths (ranks `1..=n` of `profile`).
pub fn expected_throughput_conditional(
    n: usize,
    profile: &HopProfile,
    c0: u32,
    f_r: u32,
    gamma: f64,
) -> Result<f64> {
    ThroughputModel::conditional(n, profile, c0)?.expected(gamma, f_r)
}

/// Expected throughput averaged over the path count.
pub fn expected_throughput(
    gamma: f64,
    pi: &PathCountDistribution,
    profile: &HopProfile,
    c0: u32,
    f_r: u32,
) -> Result<f64> {
    ThroughputModel::averaged(pi, profile, c0)?.expected(gamma, f_r)
}

pub fn throughput_derivative(
    gamma: f64,
    pi: &PathCountDistribution,
    profile: &HopProfile,
    c0: u32,
    f_r: u32,
) -> Result<f64> {
    ThroughputModel::averaged(pi, profile, c0)?.derivative(gamma, f_r)
}

pub fn optimal_gamma(
    pi: &PathCountDistribution,
    profile: &HopProfile,
    c0: u32,
    f_r: u32,
    tol: f64,
) -> Result<f64> {
    Ok(ThroughputModel::averaged(pi, profile, c0)?
        .optimal_gamma(f_r, &OptimizerOptions::with_tol(tol))?
        .gamma)
}

pub fn capacity_ceiling(profile: &HopProfile, pi: &PathCountDistribution, c0: u32) -> Result<f64> {
    Ok(ThroughputModel::averaged(pi, profile, c0)?.capacity_ceiling())
}

pub fn upper_bound_fr(
    f_r: u32,
    profile: &HopProfile,
    pi: &PathCountDistribution,
    c0: u32,
) -> Result<f64> {
    Ok(ThroughputModel::averaged(pi, profile, c0)?.upper_bound(f_r))
}

pub fn gamma_envelope(
    gamma: f64,
    f_r: u32,
    profile: &HopProfile,
    pi: &PathCountDistribution,
    c0: u32,
) -> Result<f64> {
    ThroughputModel::averaged(pi, profile, c0)?.envelope(gamma, f_r)
}

/// Fraction of the upper bound achieved; a measurement above the bound is
/// reported as a violation.
pub fn efficiency(measured: f64, bound: f64) -> Result<f64> {
    if !(bound > 0.0) {
        return Err(invalid("bound", format!("{bound} must be positive")));
    }
    if !(measured >= 0.0) {
        return Err(invalid("measured", format!("{measured} must be nonnegative")));
    }
    if measured > bound {
        return Err(Error::InvariantViolation(format!(
            "measured throughput {measured} exceeds bound {bound}"
        )));
    }
    Ok(measured / bound)
}
