//! Binomial tails, capped means and effective-capacity mass functions.

use crate::error::{check_probability, invalid, Error, Result};

/// Binomial(n, p) mass function over `0..=n`.
///
/// Terms are evaluated as `exp(ln C(n, k) + k ln p + (n - k) ln q)` with the
/// log-coefficient built by a running sum, so nothing overflows for large `n`.
pub fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let len = n as usize + 1;
    if p <= 0.0 {
        let mut pmf = vec![0.0; len];
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        let mut pmf = vec![0.0; len];
        pmf[n as usize] = 1.0;
        return pmf;
    }
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    let mut ln_coeff = 0.0;
    let mut pmf = Vec::with_capacity(len);
    for k in 0..=n {
        if k > 0 {
            ln_coeff += f64::from(n - k + 1).ln() - f64::from(k).ln();
        }
        pmf.push((ln_coeff + f64::from(k) * ln_p + f64::from(n - k) * ln_q).exp());
    }
    pmf
}

/// Upper tails `Q(c) = P(X >= c)` for `c = 0..=n + 1`, with `Q(0) = 1` and
/// `Q(n + 1) = 0`.
pub fn binomial_tails(n: u32, p: f64) -> Vec<f64> {
    let pmf = binomial_pmf(n, p);
    let mut tails = vec![0.0; pmf.len() + 1];
    for c in (0..pmf.len()).rev() {
        tails[c] = (tails[c + 1] + pmf[c]).min(1.0);
    }
    tails[0] = 1.0;
    tails
}

/// `P(Binomial(c0, p) >= c)` for `0 <= c <= c0 + 1`.
pub fn binomial_tail(c: u32, c0: u32, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    if c > c0 + 1 {
        return Err(invalid("c", format!("{c} exceeds c0 + 1 = {}", c0 + 1)));
    }
    Ok(binomial_tails(c0, p)[c as usize])
}

/// Mass function of the minimum of independent Binomial(c0, p_j) hop
/// capacities, over `0..=c0`.
pub fn ceff_pmf(hop_probs: &[f64], c0: u32) -> Result<Vec<f64>> {
    if hop_probs.is_empty() {
        return Err(Error::EmptyInput("path has no hops"));
    }
    for &p in hop_probs {
        check_probability("hop probability", p)?;
    }
    let mut joint = vec![1.0; c0 as usize + 2];
    for &p in hop_probs {
        for (j, q) in joint.iter_mut().zip(binomial_tails(c0, p)) {
            *j *= q;
        }
    }
    Ok(forward_difference(&joint))
}

/// [`ceff_pmf`] for `hops` links that share one success probability.
pub fn ceff_pmf_uniform(p: f64, hops: u32, c0: u32) -> Vec<f64> {
    let joint: Vec<f64> = binomial_tails(c0, p)
        .into_iter()
        .map(|q| q.powi(hops as i32))
        .collect();
    forward_difference(&joint)
}

fn forward_difference(tails: &[f64]) -> Vec<f64> {
    tails.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect()
}

/// `E[min(N, c)] = sum_{l=1..c} P(N >= l)` for `N ~ Binomial(f_r, p_sel)`.
pub fn tail_sum_s(f_r: u32, p_sel: f64, c: u32) -> f64 {
    let tails = binomial_tails(f_r, p_sel.clamp(0.0, 1.0));
    (1..=c.min(f_r) as usize).map(|l| tails[l]).sum()
}

/// `S(f_r, p; c)` for every `c = 0..=c0`.
pub(crate) fn capped_means(f_r: u32, p: f64, c0: u32) -> Vec<f64> {
    let tails = binomial_tails(f_r, p);
    let mut out = Vec::with_capacity(c0 as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for l in 1..=c0 as usize {
        if l <= f_r as usize {
            acc += tails[l];
        }
        out.push(acc);
    }
    out
}

/// `dS(f_r, p; c) / dp` for every `c = 0..=c0`, using
/// `d/dp P(N >= l) = f_r P(Binomial(f_r - 1, p) = l - 1)`.
pub(crate) fn capped_mean_slopes(f_r: u32, p: f64, c0: u32) -> Vec<f64> {
    let mut out = vec![0.0; c0 as usize + 1];
    if f_r == 0 {
        return out;
    }
    let pmf = binomial_pmf(f_r - 1, p);
    let mut acc = 0.0;
    for l in 1..=c0 as usize {
        if l <= f_r as usize {
            acc += f64::from(f_r) * pmf[l - 1];
        }
        out[l] = acc;
    }
    out
}

/// Mean of a mass function over `0..`.
pub(crate) fn pmf_mean(pmf: &[f64]) -> f64 {
    pmf.iter().enumerate().map(|(c, &m)| c as f64 * m).sum()
}
