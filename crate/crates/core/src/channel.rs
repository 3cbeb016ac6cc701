//! Lossy links and per-window entangled-pair generation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, invalid, Error, Result};
use crate::netgraph::{EdgeId, Network};
use crate::seeds;

/// Physical link parameters shared by every edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Attenuation per unit of (unit-square) length.
    pub alpha: f64,
    /// Generation attempts, and buffer size, per link per window.
    pub c0: u32,
    /// Bell-state measurement success probability.
    pub p_swap: f64,
}

impl ChannelParams {
    pub fn new(alpha: f64, c0: u32, p_swap: f64) -> Result<Self> {
        let params = Self { alpha, c0, p_swap };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha", format!("{} must be finite and >= 0", self.alpha)));
        }
        if self.c0 == 0 {
            return Err(invalid("c0", "must be at least 1"));
        }
        check_probability("p_swap", self.p_swap)
    }

    /// End-to-end swap success of a path with `hops` links.
    pub fn swap_weight(&self, hops: f64) -> f64 {
        self.p_swap.powf(hops - 1.0)
    }
}

/// Remaining entangled pairs on every edge during one window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityState {
    counts: Vec<u32>,
    c0: u32,
}

impl CapacityState {
    pub fn from_counts(counts: Vec<u32>, c0: u32) -> Result<Self> {
        if let Some(bad) = counts.iter().position(|&c| c > c0) {
            return Err(invalid(
                "capacity",
                format!("edge {bad} holds {} pairs, above c0 = {c0}", counts[bad]),
            ));
        }
        Ok(Self { counts, c0 })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn c0(&self) -> u32 {
        self.c0
    }

    pub fn get(&self, edge: EdgeId) -> u32 {
        self.counts[edge]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Smallest count along `edges` (the path's effective capacity).
    pub fn bottleneck(&self, edges: &[EdgeId]) -> u32 {
        edges.iter().map(|&e| self.counts[e]).min().unwrap_or(0)
    }

    /// Takes one pair from every edge if all of them still hold one.
    pub fn try_consume(&mut self, edges: &[EdgeId]) -> bool {
        if edges.is_empty() || edges.iter().any(|&e| self.counts[e] == 0) {
            return false;
        }
        for &e in edges {
            self.counts[e] -= 1;
        }
        true
    }
}

/// Photon survival probability `exp(-alpha * length)` over one link.
pub fn link_transmissivity(length: f64, alpha: f64) -> Result<f64> {
    if !(length >= 0.0) {
        return Err(invalid("length", format!("{length} must be >= 0")));
    }
    if !(alpha >= 0.0) {
        return Err(invalid("alpha", format!("{alpha} must be >= 0")));
    }
    if length == 0.0 || alpha == 0.0 {
        return Ok(1.0);
    }
    Ok((-alpha * length).exp())
}

/// Exact Binomial(n, p) draw.
///
/// Inversion of the CDF with one uniform for `n <= 1000`, using the symmetry
/// `Bin(n, p) = n - Bin(n, 1 - p)` so the starting mass `q^n` cannot
/// underflow. Larger `n` falls back to counting Bernoulli trials.
pub fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u32, p: f64) -> u32 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n > 1000 {
        return (0..n).filter(|_| rng.random::<f64>() < p).count() as u32;
    }
    let (flip, p) = if p > 0.5 { (true, 1.0 - p) } else { (false, p) };
    let q = 1.0 - p;
    let ratio = p / q;
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut mass = q.powi(n as i32);
    let mut cdf = mass;
    while u >= cdf && k < n {
        mass *= f64::from(n - k) / f64::from(k + 1) * ratio;
        k += 1;
        cdf += mass;
    }
    if flip {
        n - k
    } else {
        k
    }
}

/// Per-edge success probabilities `exp(-alpha * L_e)`.
pub fn edge_success_probabilities(net: &Network, alpha: f64) -> Vec<f64> {
    net.lengths().iter().map(|&l| (-alpha * l).exp()).collect()
}

/// Fresh Binomial(c0, exp(-alpha L_e)) pair counts on every edge.
pub fn sample_capacities(net: &Network, params: &ChannelParams, seed: u64) -> Result<CapacityState> {
    params.validate()?;
    let mut rng = seeds::rng(seed);
    Ok(sample_capacities_with(
        &edge_success_probabilities(net, params.alpha),
        params.c0,
        &mut rng,
    ))
}

pub(crate) fn sample_capacities_with<R: Rng + ?Sized>(
    success: &[f64],
    c0: u32,
    rng: &mut R,
) -> CapacityState {
    CapacityState {
        counts: success
            .iter()
            .map(|&p| sample_binomial(rng, c0, p))
            .collect(),
        c0,
    }
}

/// Geometry-averaged hop success: the mean of `exp(-alpha L_e)` over all edges.
pub fn mean_hop_success(net: &Network, alpha: f64) -> Result<f64> {
    if net.n_edges() == 0 {
        return Err(Error::EmptyInput("network has no edges"));
    }
    if !(alpha >= 0.0) {
        return Err(invalid("alpha", format!("{alpha} must be >= 0")));
    }
    let total: f64 = net.lengths().iter().map(|&l| (-alpha * l).exp()).sum();
    Ok(total / net.n_edges() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::generate_rgg;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn binomial_pmf_direct(n: u32, p: f64) -> Vec<f64> {
        // independent of the sampler: explicit n choose k products
        (0..=n)
            .map(|k| {
                let mut coeff = 1.0;
                for j in 0..k {
                    coeff *= f64::from(n - j) / f64::from(j + 1);
                }
                coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
            })
            .collect()
    }

    #[test]
    fn transmissivity_values() {
        assert_eq!(link_transmissivity(0.0, 3.0).unwrap(), 1.0);
        assert_eq!(link_transmissivity(0.7, 0.0).unwrap(), 1.0);
        let v = link_transmissivity(0.105, 1.0).unwrap();
        assert!((v - 0.900_324_2).abs() < 1e-6, "{v}");
        assert!(link_transmissivity(-0.1, 1.0).is_err());
        assert!(link_transmissivity(0.1, -1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(1.0, 5, 0.95).is_ok());
        assert!(ChannelParams::new(-1.0, 5, 0.95).is_err());
        assert!(ChannelParams::new(1.0, 0, 0.95).is_err());
        assert!(ChannelParams::new(1.0, 5, 1.2).is_err());
        assert!(ChannelParams::new(f64::NAN, 5, 0.5).is_err());
    }

    #[test]
    fn lossless_links_fill_every_buffer() {
        let net = generate_rgg(60, 0.2, 1).unwrap();
        let params = ChannelParams::new(0.0, 5, 0.9).unwrap();
        let caps = sample_capacities(&net, &params, 3).unwrap();
        assert!(caps.counts().iter().all(|&c| c == 5));
    }

    #[test]
    fn extreme_loss_empties_every_buffer() {
        let net = generate_rgg(60, 0.2, 1).unwrap();
        let params = ChannelParams::new(1e6, 5, 0.9).unwrap();
        let caps = sample_capacities(&net, &params, 3).unwrap();
        assert!(caps.counts().iter().all(|&c| c == 0));
    }

    #[test]
    fn binomial_mean_matches() {
        let mut rng = seeds::rng(11);
        let draws = 100_000;
        let total: u64 = (0..draws)
            .map(|_| u64::from(sample_binomial(&mut rng, 5, 0.9)))
            .sum();
        let mean = total as f64 / f64::from(draws);
        assert!((mean - 4.5).abs() / 4.5 < 0.01, "{mean}");
    }

    #[test]
    fn binomial_chi_square_goodness_of_fit() {
        for &(n, p) in &[(5u32, 0.9), (5, 0.3), (12, 0.55)] {
            let pmf = binomial_pmf_direct(n, p);
            let draws = 100_000usize;
            let mut counts = vec![0usize; n as usize + 1];
            let mut rng = seeds::rng(u64::from(n) * 1000 + (p * 100.0) as u64);
            for _ in 0..draws {
                counts[sample_binomial(&mut rng, n, p) as usize] += 1;
            }
            // pool cells with small expectations into their neighbour
            let mut stat = 0.0;
            let mut cells = 0;
            let (mut obs_acc, mut exp_acc) = (0.0, 0.0);
            for k in 0..=n as usize {
                obs_acc += counts[k] as f64;
                exp_acc += pmf[k] * draws as f64;
                if exp_acc >= 5.0 {
                    stat += (obs_acc - exp_acc).powi(2) / exp_acc;
                    cells += 1;
                    obs_acc = 0.0;
                    exp_acc = 0.0;
                }
            }
            if exp_acc > 0.0 {
                stat += (obs_acc - exp_acc).powi(2) / exp_acc;
                cells += 1;
            }
            let crit = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(0.99);
            assert!(stat < crit, "n={n} p={p}: chi2 {stat} >= {crit}");
        }
    }

    #[test]
    fn binomial_large_n_and_edges() {
        let mut rng = seeds::rng(5);
        assert_eq!(sample_binomial(&mut rng, 0, 0.4), 0);
        assert_eq!(sample_binomial(&mut rng, 7, 0.0), 0);
        assert_eq!(sample_binomial(&mut rng, 7, 1.0), 7);
        for _ in 0..100 {
            assert!(sample_binomial(&mut rng, 1000, 0.999) <= 1000);
            assert!(sample_binomial(&mut rng, 2000, 0.5) <= 2000);
        }
    }

    #[test]
    fn capacities_are_seed_deterministic() {
        let net = generate_rgg(80, 0.2, 2).unwrap();
        let params = ChannelParams::new(1.0, 5, 0.95).unwrap();
        let a = sample_capacities(&net, &params, 99).unwrap();
        let b = sample_capacities(&net, &params, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.counts().iter().all(|&c| c <= 5));
    }

    #[test]
    fn consume_is_all_or_nothing() {
        let mut caps = CapacityState::from_counts(vec![1, 0, 2], 3).unwrap();
        assert!(!caps.try_consume(&[0, 1]));
        assert_eq!(caps.counts(), &[1, 0, 2]);
        assert!(caps.try_consume(&[0, 2]));
        assert_eq!(caps.counts(), &[0, 0, 1]);
        assert!(!caps.try_consume(&[]));
        assert!(CapacityState::from_counts(vec![4], 3).is_err());
    }

    #[test]
    fn mean_hop_success_cases() {
        let single = Network::from_parts(vec![[0.2, 0.2], [0.2, 0.2]], vec![(0, 1)], 0.1).unwrap();
        assert_eq!(mean_hop_success(&single, 1.0).unwrap(), 1.0);

        let ln2 = std::f64::consts::LN_2;
        let two = Network::from_parts(
            vec![[0.0, 0.0], [0.0, 0.0], [ln2, 0.0]],
            vec![(0, 1), (1, 2)],
            1.0,
        )
        .unwrap();
        assert!((mean_hop_success(&two, 1.0).unwrap() - 0.75).abs() < 1e-15);

        let empty = Network::from_parts(vec![[0.0, 0.0], [0.5, 0.5]], vec![], 0.1).unwrap();
        assert_eq!(mean_hop_success(&empty, 1.0), Err(Error::EmptyInput("network has no edges")));
    }

    #[test]
    fn mean_hop_success_nonincreasing_in_alpha() {
        let net = generate_rgg(100, 0.2, 4).unwrap();
        let values: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 5.0, 20.0]
            .iter()
            .map(|&a| mean_hop_success(&net, a).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }
}
