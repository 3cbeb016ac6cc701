//! Post-processing of simulation output: fairness, curve fits and
//! indistinguishable-optimum intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// Jain index of one window, `None` when nothing was served.
pub fn jain_window(served: &[u32]) -> Option<f64> {
    let total: f64 = served.iter().map(|&u| f64::from(u)).sum();
    if total <= 0.0 {
        return None;
    }
    let squares: f64 = served.iter().map(|&u| f64::from(u).powi(2)).sum();
    Some(total * total / (served.len() as f64 * squares))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessEntry {
    pub mean_index: f64,
    /// Windows with nonzero service.
    pub windows: usize,
}

/// Mean Jain index over windows with nonzero service. Each slice lists the
/// per-path served counts of one window, one entry per available path.
pub fn jain_index<'a>(windows: impl IntoIterator<Item = &'a [u32]>) -> Result<FairnessEntry> {
    let mut sum = 0.0;
    let mut count = 0;
    for served in windows {
        if let Some(j) = jain_window(served) {
            sum += j;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData("no window served any request".into()));
    }
    Ok(FairnessEntry {
        mean_index: sum / count as f64,
        windows: count,
    })
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub n: usize,
}

pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::IndexMismatch {
            what: "regression y",
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} points for a line")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let (slope_se, intercept_se) = if n > 2 {
        let s2 = sse / (nf - 2.0);
        let slope_se = (s2 / sxx).sqrt();
        (slope_se, (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        slope_se,
        intercept_se,
        n,
    })
}

/// Coefficient of determination of `predicted` against `observed`.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let ss_tot: f64 = observed.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p).powi(2))
        .sum();
    if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Minimum observations per rank for the hop fit.
pub const MIN_RANK_SAMPLES: usize = 30;

/// Offset power law `h_i = h1 + c i^beta` for ranks `i > 1`, anchored at the
/// rank-1 mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopFit {
    pub h1: f64,
    pub c: f64,
    pub beta: f64,
    pub c_ci: (f64, f64),
    pub beta_ci: (f64, f64),
    /// In the original (hop) scale over ranks `2..=K`.
    pub r2: f64,
    pub rmse: f64,
    pub mean_hops: Vec<f64>,
    pub std_hops: Vec<f64>,
    pub samples: Vec<usize>,
}

impl HopFit {
    pub fn ranks(&self) -> usize {
        self.mean_hops.len()
    }

    pub fn predict(&self, rank: usize) -> f64 {
        if rank <= 1 {
            self.h1
        } else {
            self.h1 + self.c * (rank as f64).powf(self.beta)
        }
    }
}

/// Fits the offset power law to per-rank hop samples (`samples[i]` holds
/// rank `i + 1`) by least squares on `ln(mean h_i - h1)` against `ln i`.
pub fn fit_hop_profile(samples: &[Vec<f64>]) -> Result<HopFit> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} ranks, at least 3 required",
            samples.len()
        )));
    }
    if let Some(rank) = samples.iter().position(|s| s.len() < MIN_RANK_SAMPLES) {
        return Err(Error::InsufficientData(format!(
            "rank {} has {} samples, at least {MIN_RANK_SAMPLES} required",
            rank + 1,
            samples[rank].len()
        )));
    }
    let (mean_hops, std_hops): (Vec<f64>, Vec<f64>) =
        samples.iter().map(|s| crate::simengine::mean_std(s)).unzip();
    let h1 = mean_hops[0];
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (k, &m) in mean_hops.iter().enumerate().skip(1) {
        let excess = m - h1;
        if !(excess > 0.0) {
            return Err(Error::FitDomain(format!(
                "mean hop count at rank {} ({m}) does not exceed the rank-1 mean ({h1})",
                k + 1
            )));
        }
        lx.push(((k + 1) as f64).ln());
        ly.push(excess.ln());
    }
    let line = linear_regression(&lx, &ly)?;
    let beta = line.slope;
    let c = line.intercept.exp();
    let half = if line.n > 2 {
        let t = StudentsT::new(0.0, 1.0, (line.n - 2) as f64)
            .map_err(|e| invalid("fit", e.to_string()))?
            .inverse_cdf(0.975);
        (t * line.slope_se, t * line.intercept_se)
    } else {
        (f64::NAN, f64::NAN)
    };
    let observed = &mean_hops[1..];
    let predicted: Vec<f64> = (2..=mean_hops.len())
        .map(|i| h1 + c * (i as f64).powf(beta))
        .collect();
    let rmse = (observed
        .iter()
        .zip(&predicted)
        .map(|(o, p)| (o - p).powi(2))
        .sum::<f64>()
        / observed.len() as f64)
        .sqrt();
    Ok(HopFit {
        h1,
        c,
        beta,
        c_ci: ((line.intercept - half.1).exp(), (line.intercept + half.1).exp()),
        beta_ci: (beta - half.0, beta + half.0),
        r2: r_squared(observed, &predicted),
        rmse,
        mean_hops,
        std_hops,
        samples: samples.iter().map(Vec::len).collect(),
    })
}

/// `T(L) = A exp(-kappa L)` fitted on positive bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub kappa: f64,
    /// Of the log-linear regression.
    pub r2: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub bins: usize,
}

pub fn fit_exponential_decay(bins: &[(f64, f64)]) -> Result<DecayFit> {
    let positive: Vec<(f64, f64)> = bins.iter().copied().filter(|&(_, t)| t > 0.0).collect();
    if positive.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} bins with positive throughput, at least 3 required",
            positive.len()
        )));
    }
    let x: Vec<f64> = positive.iter().map(|b| b.0).collect();
    let y: Vec<f64> = positive.iter().map(|b| b.1.ln()).collect();
    let line = linear_regression(&x, &y)?;
    Ok(DecayFit {
        a: line.intercept.exp(),
        kappa: -line.slope,
        r2: line.r2,
        l_min: x.iter().copied().fold(f64::INFINITY, f64::min),
        l_max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        bins: positive.len(),
    })
}

/// Grid points statistically indistinguishable from the empirical optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumInterval {
    pub best: usize,
    pub best_gamma: f64,
    pub members: Vec<bool>,
    pub gammas: Vec<f64>,
}

impl OptimumInterval {
    pub fn lo(&self) -> f64 {
        self.included().fold(f64::INFINITY, f64::min)
    }

    pub fn hi(&self) -> f64 {
        self.included().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn included(&self) -> impl Iterator<Item = f64> + '_ {
        self.gammas
            .iter()
            .zip(&self.members)
            .filter(|(_, &m)| m)
            .map(|(&g, _)| g)
    }

    pub fn contains(&self, gamma: f64) -> bool {
        self.included().any(|g| (g - gamma).abs() < 1e-12)
    }
}

/// Paired-difference test against the best grid point. Point `gamma` is
/// kept when the mean of `T_t(best) - T_t(gamma)` is at most
/// `z s_D / sqrt(T)`.
pub fn indistinguishable_interval(series: &[(f64, Vec<f64>)], z: f64) -> Result<OptimumInterval> {
    let first = series
        .first()
        .ok_or(Error::EmptyInput("no bias values"))?;
    let t = first.1.len();
    if t < 2 {
        return Err(invalid("series", "at least two windows are required"));
    }
    if let Some(bad) = series.iter().find(|s| s.1.len() != t) {
        return Err(Error::IndexMismatch {
            what: "window series",
            expected: t,
            found: bad.1.len(),
        });
    }
    let means: Vec<f64> = series
        .iter()
        .map(|s| s.1.iter().sum::<f64>() / t as f64)
        .collect();
    let mut best = 0;
    for (k, &m) in means.iter().enumerate() {
        if m > means[best] {
            best = k;
        }
    }
    let reference = &series[best].1;
    let members = series
        .iter()
        .map(|(_, values)| {
            let diffs: Vec<f64> = reference.iter().zip(values).map(|(a, b)| a - b).collect();
            let (mean, sd) = crate::simengine::mean_std(&diffs);
            mean <= z * sd / (t as f64).sqrt()
        })
        .collect();
    Ok(OptimumInterval {
        best,
        best_gamma: series[best].0,
        members,
        gammas: series.iter().map(|s| s.0).collect(),
    })
}
