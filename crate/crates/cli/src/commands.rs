use anyhow::Result;
use tournament_routing::experiments;

use crate::config::Config;
use crate::output::RunDir;

pub fn sweep_gamma(config: &Config, out: &mut RunDir) -> Result<()> {
    let sweep = experiments::gamma_sweep(&config.experiment(), config.simulation.profile_samples)?;
    let summary: Vec<_> = sweep
        .summary
        .series
        .iter()
        .map(|s| (s.gamma, s.mean, s.std, s.sem))
        .collect();
    out.write_csv("sweep_summary.csv", &["gamma", "mean_Tr", "std_Tr", "sem"], &summary)?;

    let windows: Vec<_> = sweep
        .summary
        .series
        .iter()
        .flat_map(|s| {
            s.windows
                .iter()
                .enumerate()
                .map(move |(t, w)| (s.gamma, t, w.n_paths(), w.throughput, w.served_total()))
        })
        .collect();
    out.write_csv(
        "sweep_windows.csv",
        &["gamma", "window", "n_t", "T_r", "served_total"],
        &windows,
    )?;

    let analytic: Vec<_> = sweep
        .analytic
        .iter()
        .map(|a| (a.gamma, a.expected, a.derivative, a.envelope, a.upper_bound))
        .collect();
    out.write_csv(
        "analytic.csv",
        &["gamma", "E_Tr", "dE_dgamma", "envelope", "upper_bound"],
        &analytic,
    )
}

pub fn optimal_gamma(config: &Config, out: &mut RunDir) -> Result<()> {
    let rows = experiments::optimal_gamma_table(
        &config.experiment(),
        &config.optimal_gamma.loads,
        config.simulation.profile_samples,
        config.optimal_gamma.z,
    )?;
    let table: Vec<_> = rows
        .iter()
        .map(|r| (r.f_r, r.gamma_num, r.gamma_an, r.interval_lo, r.interval_hi))
        .collect();
    out.write_csv(
        "optimal_gamma.csv",
        &["f_r", "gamma_star_num", "gamma_star_an", "interval_lo", "interval_hi"],
        &table,
    )?;
    let membership: Vec<_> = rows
        .iter()
        .flat_map(|r| {
            r.interval
                .gammas
                .iter()
                .zip(&r.interval.members)
                .map(move |(&g, &m)| (r.f_r, g, u8::from(m)))
        })
        .collect();
    out.write_csv("interval.csv", &["f_r", "gamma", "in_interval"], &membership)
}

pub fn heatmap(config: &Config, out: &mut RunDir) -> Result<()> {
    let rows = experiments::heatmap_table(
        &config.experiment(),
        &config.heatmap.alphas,
        &config.heatmap.p_swaps,
        &config.heatmap.loads,
        config.simulation.profile_samples,
    )?;
    let table: Vec<_> = rows
        .iter()
        .map(|r| (r.alpha, r.p_swap, r.f_r, r.gamma_star))
        .collect();
    out.write_csv("heatmap.csv", &["alpha", "p_swap", "f_r", "gamma_star"], &table)
}

pub fn distance(config: &Config, out: &mut RunDir) -> Result<()> {
    let mut cfg = config.experiment();
    cfg.windows = config.distance.windows;
    cfg.gammas = config.distance.gammas.clone();
    let result =
        experiments::distance_table(&cfg, config.distance.bins, config.distance.min_bin_samples)?;
    let table: Vec<_> = result
        .table
        .rows
        .iter()
        .map(|r| (r.gamma, r.bin_center, r.mean_throughput, r.samples))
        .collect();
    out.write_csv(
        "distance.csv",
        &["gamma", "bin_center_L", "mean_Tr", "n_samples"],
        &table,
    )?;
    let fits: Vec<_> = result
        .fits
        .iter()
        .map(|f| (f.gamma, f.fit.a, f.fit.kappa, f.fit.r2))
        .collect();
    out.write_csv("decay.csv", &["gamma", "A", "kappa", "r2"], &fits)
}

pub fn multipair(config: &Config, out: &mut RunDir) -> Result<()> {
    let mut cfg = config.experiment();
    cfg.gammas = config.multipair.gammas.clone();
    let result = experiments::multipair_table(&cfg, config.multipair.max_pairs)?;
    let table: Vec<_> = result
        .rows
        .iter()
        .map(|r| (r.pairs, r.gamma, r.mean, r.std, r.sem))
        .collect();
    out.write_csv("multipair.csv", &["R", "gamma", "mean_Tr", "std_Tr", "sem"], &table)?;
    let fits: Vec<_> = result
        .fits
        .iter()
        .map(|f| (f.gamma, f.slope, f.intercept, f.r2))
        .collect();
    out.write_csv("multipair_fit.csv", &["gamma", "slope", "intercept", "r2"], &fits)
}

pub fn fairness(config: &Config, out: &mut RunDir) -> Result<()> {
    let rows = experiments::fairness_table(&config.experiment(), &config.fairness.loads)?;
    let table: Vec<_> = rows
        .iter()
        .map(|r| (r.f_r, r.gamma, r.mean_j, r.windows))
        .collect();
    out.write_csv("fairness.csv", &["f_r", "gamma", "mean_J", "n_windows"], &table)
}

pub fn bounds(config: &Config, out: &mut RunDir) -> Result<()> {
    let rows = experiments::bounds_table(
        &config.experiment(),
        &config.bounds.loads,
        config.simulation.profile_samples,
    )?;
    let table: Vec<_> = rows
        .iter()
        .map(|r| {
            (
                r.f_r,
                r.gamma_star,
                r.mean,
                r.sem,
                r.upper_bound,
                r.ceiling,
                r.efficiency,
            )
        })
        .collect();
    out.write_csv(
        "bounds.csv",
        &[
            "f_r",
            "gamma_star",
            "mean_Tr",
            "sem",
            "upper_bound",
            "ceiling",
            "efficiency",
        ],
        &table,
    )
}

pub fn hopfit(config: &Config, out: &mut RunDir) -> Result<()> {
    let result = experiments::hopfit_ensemble(
        &config.experiment(),
        config.hopfit.samples,
        config.hopfit.samples_per_topology,
    )?;
    let fit = &result.fit;
    let table: Vec<_> = (0..fit.ranks())
        .map(|k| (k + 1, fit.mean_hops[k], fit.std_hops[k], fit.samples[k]))
        .collect();
    out.write_csv("hopfit.csv", &["rank", "mean_h", "std_h", "n"], &table)?;
    out.write_json(
        "hopfit_params.json",
        &serde_json::json!({
            "h1": fit.h1,
            "c": fit.c,
            "c_ci": [fit.c_ci.0, fit.c_ci.1],
            "beta": fit.beta,
            "beta_ci": [fit.beta_ci.0, fit.beta_ci.1],
            "r2": fit.r2,
            "rmse": fit.rmse,
            "samples": result.samples,
            "topologies": result.topologies,
            "windows": result.windows,
        }),
    )
}
