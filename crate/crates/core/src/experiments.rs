//! End-to-end experiment pipelines shared by the command-line driver and the
//! acceptance suite. Each pipeline returns plain row structs; formatting is
//! left to the caller.

use serde::{Deserialize, Serialize};

use crate::analytics::{HopProfile, OptimalGamma, OptimizerOptions, PathCountDistribution, ThroughputModel};
use crate::channel::mean_hop_success;
use crate::error::{invalid, Error, Result};
use crate::netgraph::Network;
use crate::seeds::{self, stream};
use crate::simengine::{
    collect_path_statistics, run_distance_sweep_on, run_sweep_on,
    DistanceTable, ExperimentConfig, PathStatistics, SweepSummary,
};
use crate::stats::{
    fit_exponential_decay, fit_hop_profile, indistinguishable_interval, jain_index,
    linear_regression, DecayFit, HopFit, OptimumInterval, MIN_RANK_SAMPLES, Z_95,
};

/// Windows sampled for the empirical path-count distribution and hop profile.
pub const DEFAULT_PROFILE_SAMPLES: usize = 2000;

/// Default confidence multiplier for optimum intervals.
pub const DEFAULT_Z: f64 = Z_95;

/// Analytic model inputs measured on one topology.
#[derive(Debug, Clone)]
pub struct AnalyticSetup {
    pub stats: PathStatistics,
    pub pi: PathCountDistribution,
    /// `None` when too few ranks were observed for a power-law fit; the
    /// profile then uses the per-rank empirical means.
    pub fit: Option<HopFit>,
    pub profile: HopProfile,
    pub hop_success: f64,
    pub model: ThroughputModel,
}

/// Measures `Pi_n` and the ranked hop profile on `net`, then assembles the
/// averaged throughput model.
pub fn analytic_setup(net: &Network, config: &ExperimentConfig, samples: usize) -> Result<AnalyticSetup> {
    if samples == 0 {
        return Err(invalid("profile_samples", "must be at least 1"));
    }
    let stats = collect_path_statistics(net, config, samples, stream::PROFILE)?;
    let pi = PathCountDistribution::from_counts(&stats.path_counts)?;
    let hop_success = mean_hop_success(net, config.channel.alpha)?;
    let ranks = pi.max_n().max(1);

    let fit = fit_ranked_hops(&stats).ok();
    let hops = match &fit {
        Some(f) => (1..=ranks).map(|i| f.predict(i)).collect(),
        None => empirical_hops(&stats, ranks),
    };
    let profile = HopProfile::averaged(hops, config.channel.p_swap, hop_success)?;
    let model = ThroughputModel::averaged(&pi, &profile, config.channel.c0)?;
    Ok(AnalyticSetup {
        stats,
        pi,
        fit,
        profile,
        hop_success,
        model,
    })
}

/// Power-law fit over the leading ranks that have enough observations.
pub fn fit_ranked_hops(stats: &PathStatistics) -> Result<HopFit> {
    let samples: Vec<Vec<f64>> = stats
        .rank_hops
        .iter()
        .take_while(|h| h.len() >= MIN_RANK_SAMPLES)
        .map(|h| h.iter().map(|&v| f64::from(v)).collect())
        .collect();
    fit_hop_profile(&samples)
}

fn empirical_hops(stats: &PathStatistics, ranks: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(ranks);
    let mut last: f64 = 1.0;
    for i in 0..ranks {
        let observed = stats.rank_hops.get(i).filter(|h| !h.is_empty());
        let mean = observed
            .map(|h| h.iter().map(|&v| f64::from(v)).sum::<f64>() / h.len() as f64)
            .unwrap_or(last + 1.0);
        last = mean.max(last);
        out.push(last);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub gamma: f64,
    pub expected: f64,
    pub derivative: f64,
    pub envelope: f64,
    pub upper_bound: f64,
}

pub fn analytic_curve(model: &ThroughputModel, gammas: &[f64], f_r: u32) -> Result<Vec<AnalyticRow>> {
    gammas
        .iter()
        .map(|&gamma| {
            Ok(AnalyticRow {
                gamma,
                expected: model.expected(gamma, f_r)?,
                derivative: model.derivative(gamma, f_r)?,
                envelope: model.envelope(gamma, f_r)?,
                upper_bound: model.upper_bound(f_r),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GammaSweep {
    pub summary: SweepSummary,
    pub setup: AnalyticSetup,
    pub analytic: Vec<AnalyticRow>,
}

/// Simulated throughput over the bias grid with the analytic overlay.
pub fn gamma_sweep(config: &ExperimentConfig, profile_samples: usize) -> Result<GammaSweep> {
    config.validate()?;
    let net = config.network()?;
    let summary = run_sweep_on(&net, config)?;
    let setup = analytic_setup(&net, config, profile_samples)?;
    let analytic = analytic_curve(&setup.model, &config.gammas, config.requests)?;
    Ok(GammaSweep {
        summary,
        setup,
        analytic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalRow {
    pub f_r: u32,
    pub gamma_num: f64,
    pub gamma_an: f64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub interval: OptimumInterval,
    pub analytic: OptimalGamma,
}

/// Numerical and analytic optimal bias for each request load.
pub fn optimal_gamma_table(
    config: &ExperimentConfig,
    loads: &[u32],
    profile_samples: usize,
    z: f64,
) -> Result<Vec<OptimalRow>> {
    config.validate()?;
    if loads.is_empty() {
        return Err(Error::EmptyInput("no request loads"));
    }
    let net = config.network()?;
    let setup = analytic_setup(&net, config, profile_samples)?;
    let opts = OptimizerOptions::default();
    loads
        .iter()
        .map(|&f_r| {
            let cfg = with_load(config, f_r)?;
            let summary = run_sweep_on(&net, &cfg)?;
            let interval = interval_of(&summary, z)?;
            let analytic = setup.model.optimal_gamma(f_r, &opts)?;
            Ok(OptimalRow {
                f_r,
                gamma_num: interval.best_gamma,
                gamma_an: analytic.gamma,
                interval_lo: interval.lo(),
                interval_hi: interval.hi(),
                interval,
                analytic,
            })
        })
        .collect()
}

pub fn interval_of(summary: &SweepSummary, z: f64) -> Result<OptimumInterval> {
    let series: Vec<(f64, Vec<f64>)> = summary
        .series
        .iter()
        .map(|s| (s.gamma, s.throughputs()))
        .collect();
    indistinguishable_interval(&series, z)
}

fn with_load(config: &ExperimentConfig, f_r: u32) -> Result<ExperimentConfig> {
    if f_r == 0 {
        return Err(invalid("loads", "request loads must be positive"));
    }
    Ok(ExperimentConfig {
        requests: f_r,
        ..config.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub f_r: u32,
    pub gamma_star: f64,
    pub mean: f64,
    pub sem: f64,
    pub upper_bound: f64,
    pub ceiling: f64,
    pub efficiency: f64,
}

/// Best simulated throughput against the load-dependent upper bound.
pub fn bounds_table(
    config: &ExperimentConfig,
    loads: &[u32],
    profile_samples: usize,
) -> Result<Vec<BoundsRow>> {
    config.validate()?;
    if loads.is_empty() {
        return Err(Error::EmptyInput("no request loads"));
    }
    let net = config.network()?;
    let setup = analytic_setup(&net, config, profile_samples)?;
    loads
        .iter()
        .map(|&f_r| {
            let cfg = with_load(config, f_r)?;
            let summary = run_sweep_on(&net, &cfg)?;
            let best = &summary.series[summary.argmax()];
            let upper_bound = setup.model.upper_bound(f_r);
            Ok(BoundsRow {
                f_r,
                gamma_star: best.gamma,
                mean: best.mean,
                sem: best.sem,
                upper_bound,
                ceiling: setup.model.capacity_ceiling(),
                efficiency: crate::analytics::efficiency(best.mean, upper_bound)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessRow {
    pub f_r: u32,
    pub gamma: f64,
    pub mean_j: f64,
    pub windows: usize,
}

/// Mean Jain index over the bias grid for each request load.
pub fn fairness_table(config: &ExperimentConfig, loads: &[u32]) -> Result<Vec<FairnessRow>> {
    config.validate()?;
    if loads.is_empty() {
        return Err(Error::EmptyInput("no request loads"));
    }
    let net = config.network()?;
    let mut rows = Vec::new();
    for &f_r in loads {
        let summary = run_sweep_on(&net, &with_load(config, f_r)?)?;
        for series in &summary.series {
            let entry = jain_index(
                series
                    .windows
                    .iter()
                    .flat_map(|w| w.pairs.iter().map(|p| p.served.as_slice())),
            )?;
            rows.push(FairnessRow {
                f_r,
                gamma: series.gamma,
                mean_j: entry.mean_index,
                windows: entry.windows,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipairRow {
    pub pairs: usize,
    pub gamma: f64,
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipairFit {
    pub gamma: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipairResult {
    pub rows: Vec<MultipairRow>,
    pub fits: Vec<MultipairFit>,
}

/// Aggregate throughput for `R = 1..=max_pairs` concurrent pairs.
pub fn multipair_table(config: &ExperimentConfig, max_pairs: usize) -> Result<MultipairResult> {
    config.validate()?;
    if max_pairs == 0 {
        return Err(invalid("max_pairs", "must be at least 1"));
    }
    let net = config.network()?;
    let mut rows = Vec::new();
    for r in 1..=max_pairs {
        let cfg = ExperimentConfig {
            pairs: r,
            ..config.clone()
        };
        let summary = run_sweep_on(&net, &cfg)?;
        rows.extend(summary.series.iter().map(|s| MultipairRow {
            pairs: r,
            gamma: s.gamma,
            mean: s.mean,
            std: s.std,
            sem: s.sem,
        }));
    }
    let mut fits = Vec::new();
    if max_pairs >= 2 {
        for &gamma in &config.gammas {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|row| row.gamma == gamma)
                .map(|row| (row.pairs as f64, row.mean))
                .unzip();
            let line = linear_regression(&x, &y)?;
            fits.push(MultipairFit {
                gamma,
                slope: line.slope,
                intercept: line.intercept,
                r2: line.r2,
            });
        }
    }
    Ok(MultipairResult { rows, fits })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub gamma: f64,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub table: DistanceTable,
    pub fits: Vec<DecayRow>,
}

/// Distance-binned throughput with an exponential fit per bias value, over
/// bins holding at least `min_bin_samples` pairs.
pub fn distance_table(
    config: &ExperimentConfig,
    n_bins: usize,
    min_bin_samples: usize,
) -> Result<DistanceResult> {
    config.validate()?;
    let net = config.network()?;
    let table = run_distance_sweep_on(&net, config, n_bins)?;
    let fits = config
        .gammas
        .iter()
        .map(|&gamma| {
            Ok(DecayRow {
                gamma,
                fit: fit_exponential_decay(&table.curve(gamma, min_bin_samples))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DistanceResult { table, fits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfitResult {
    pub fit: HopFit,
    /// Complete path sets entering the fit.
    pub samples: usize,
    pub topologies: usize,
    /// Windows drawn, including those with fewer than `max_paths` paths.
    pub windows: usize,
}

/// Offset power-law fit of ranked hop counts over an ensemble of topologies.
///
/// Only windows whose pair has the full `max_paths` disjoint paths are
/// kept, so every rank is averaged over the same `target_samples` pairs.
/// Topologies are drawn until the target is met.
pub fn hopfit_ensemble(
    config: &ExperimentConfig,
    target_samples: usize,
    samples_per_topology: usize,
) -> Result<HopfitResult> {
    config.validate()?;
    if target_samples == 0 || samples_per_topology == 0 {
        return Err(invalid("ensemble", "sample counts must be positive"));
    }
    let max_topologies = 20 * target_samples.div_ceil(samples_per_topology);
    let mut sets: Vec<Vec<u32>> = Vec::with_capacity(target_samples);
    let mut topologies = 0;
    while sets.len() < target_samples {
        if topologies == max_topologies {
            return Err(Error::InsufficientData(format!(
                "{} complete path sets after {topologies} topologies",
                sets.len()
            )));
        }
        let member = ExperimentConfig {
            seed: seeds::derive(config.seed, stream::HOPFIT, topologies as u64),
            ..config.clone()
        };
        let net = member.network()?;
        let stats = collect_path_statistics(&net, &member, samples_per_topology, stream::HOPFIT)?;
        sets.extend(stats.complete);
        topologies += 1;
    }
    sets.truncate(target_samples);
    let by_rank: Vec<Vec<f64>> = (0..config.max_paths)
        .map(|rank| sets.iter().map(|h| f64::from(h[rank])).collect())
        .collect();
    Ok(HopfitResult {
        fit: fit_hop_profile(&by_rank)?,
        samples: sets.len(),
        topologies,
        windows: topologies * samples_per_topology,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub alpha: f64,
    pub p_swap: f64,
    pub f_r: u32,
    pub gamma_star: f64,
}

/// Analytic optimal bias over an `(alpha, p_swap)` grid for each load.
///
/// Path statistics are re-measured per `alpha` since attenuation changes the
/// feasible subgraph; `p_swap` only rescales weights.
pub fn heatmap_table(
    config: &ExperimentConfig,
    alphas: &[f64],
    p_swaps: &[f64],
    loads: &[u32],
    profile_samples: usize,
) -> Result<Vec<HeatmapRow>> {
    config.validate()?;
    if alphas.is_empty() || p_swaps.is_empty() || loads.is_empty() {
        return Err(Error::EmptyInput("heatmap grid"));
    }
    let net = config.network()?;
    let opts = OptimizerOptions::default();
    let mut rows = Vec::new();
    for &alpha in alphas {
        let mut cfg = config.clone();
        cfg.channel.alpha = alpha;
        cfg.validate()?;
        let base = analytic_setup(&net, &cfg, profile_samples)?;
        for &p_swap in p_swaps {
            cfg.channel.p_swap = p_swap;
            cfg.validate()?;
            let profile =
                HopProfile::averaged(base.profile.hops().to_vec(), p_swap, base.hop_success)?;
            let model = ThroughputModel::averaged(&base.pi, &profile, cfg.channel.c0)?;
            for &f_r in loads {
                rows.push(HeatmapRow {
                    alpha,
                    p_swap,
                    f_r,
                    gamma_star: model.optimal_gamma(f_r, &opts)?.gamma,
                });
            }
        }
    }
    Ok(rows)
}
