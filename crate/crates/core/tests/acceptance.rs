//! Acceptance suite. Every test prints one `criterion N ... PASS|FAIL` line
//! with the measured quantities before asserting.
//!
//! The paper-scale criteria run full Monte-Carlo ensembles (500-node graphs,
//! 1000 windows per bias value) and take a few minutes in total.

use std::sync::OnceLock;

use rand::Rng;
use tournament_routing::analytics::{
    ceff_pmf, HopProfile, OptimizerOptions, ThroughputModel,
};
use tournament_routing::channel::{edge_success_probabilities, ChannelParams};
use tournament_routing::experiments::{
    self, bounds_table, distance_table, fairness_table, gamma_sweep, hopfit_ensemble,
    multipair_table, optimal_gamma_table, GammaSweep, DEFAULT_PROFILE_SAMPLES, DEFAULT_Z,
};
use tournament_routing::netgraph::Network;
use tournament_routing::seeds;
use tournament_routing::simengine::{run_sweep_on, run_window, run_window_traced, ExperimentConfig};
use tournament_routing::stats::jain_window;
use tournament_routing::tournament::{build_tree, selection_probabilities};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{name}]: {verdict} | {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn paper() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn paper_sweep() -> &'static GammaSweep {
    static SWEEP: OnceLock<GammaSweep> = OnceLock::new();
    SWEEP.get_or_init(|| gamma_sweep(&paper(), DEFAULT_PROFILE_SAMPLES).unwrap())
}

fn paired(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn criterion_01_interior_optimum() {
    let summary = &paper_sweep().summary;
    let best = &summary.series[summary.argmax()];
    let first = &summary.series[0];
    let last = summary.series.last().unwrap();
    let (d_lo, se_lo) = paired(&best.throughputs(), &first.throughputs());
    let (d_hi, se_hi) = paired(&best.throughputs(), &last.throughputs());
    let pass = (0.35..=0.65).contains(&best.gamma) && d_lo > 3.0 * se_lo && d_hi > 3.0 * se_hi;
    report(
        1,
        "interior optimum",
        pass,
        format!(
            "argmax gamma={:.2} T={:.4}; vs 0.02: diff {:.4} ({:.1} SE); vs 0.98: diff {:.4} ({:.1} SE); means {:?}",
            best.gamma,
            best.mean,
            d_lo,
            d_lo / se_lo,
            d_hi,
            d_hi / se_hi,
            summary.means().iter().map(|m| (m * 1e3).round() / 1e3).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_02_analytic_simulation_agreement() {
    let sweep = paper_sweep();
    let mut worst: (f64, f64) = (0.0, 0.0);
    for (s, a) in sweep.summary.series.iter().zip(&sweep.analytic) {
        if !(0.1..=0.9).contains(&s.gamma) {
            continue;
        }
        let rel = (a.expected - s.mean).abs() / s.mean;
        if rel > worst.1 {
            worst = (s.gamma, rel);
        }
    }
    report(
        2,
        "analytic/simulation agreement",
        worst.1 <= 0.15,
        format!(
            "max relative gap {:.3} at gamma={:.2} (tolerance 0.15); fit={:?}",
            worst.1,
            worst.0,
            sweep.setup.fit.as_ref().map(|f| (f.h1, f.c, f.beta))
        ),
    );
}

#[test]
fn criterion_03_optimal_bias_agreement() {
    let rows = optimal_gamma_table(&paper(), &[20, 30, 40], DEFAULT_PROFILE_SAMPLES, DEFAULT_Z).unwrap();
    let pass = rows
        .iter()
        .all(|r| (r.gamma_num - r.gamma_an).abs() <= 0.1 && r.interval.contains(0.5));
    let detail = rows
        .iter()
        .map(|r| {
            format!(
                "f_r={} num={:.2} an={:.3} interval=[{:.2}, {:.2}]",
                r.f_r, r.gamma_num, r.gamma_an, r.interval_lo, r.interval_hi
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    report(3, "optimal-bias agreement", pass, detail);
}

/// Source 0, destination 1 and three node-disjoint chains of 2, 3 and 4 hops.
fn chain_network() -> Network {
    let positions = vec![
        [0.0, 0.5],
        [1.0, 0.5],
        [0.5, 0.5],
        [0.3, 0.8],
        [0.7, 0.8],
        [0.25, 0.2],
        [0.5, 0.1],
        [0.75, 0.2],
    ];
    let edges = vec![
        (0, 2),
        (2, 1),
        (0, 3),
        (3, 4),
        (4, 1),
        (0, 5),
        (5, 6),
        (6, 7),
        (7, 1),
    ];
    Network::from_parts(positions, edges, 0.6).unwrap()
}

fn chain_config(f_r: u32) -> ExperimentConfig {
    ExperimentConfig {
        n_nodes: 8,
        radius: 0.6,
        channel: ChannelParams {
            alpha: 2.0,
            c0: 3,
            p_swap: 0.8,
        },
        requests: f_r,
        windows: 1,
        ..ExperimentConfig::default()
    }
}

fn chain_model() -> ThroughputModel {
    let net = chain_network();
    let cfg = chain_config(1);
    let p = edge_success_probabilities(&net, cfg.channel.alpha);
    let per_edge = vec![
        vec![p[0], p[1]],
        vec![p[2], p[3], p[4]],
        vec![p[5], p[6], p[7], p[8]],
    ];
    let profile = HopProfile::exact(per_edge, cfg.channel.p_swap).unwrap();
    ThroughputModel::exact(&profile, cfg.channel.c0).unwrap()
}

#[test]
fn criterion_04_exact_oracle_equivalence() {
    let net = chain_network();
    let model = chain_model();
    let windows = 100_000u64;
    let mut lines = Vec::new();
    let mut pass = true;
    for &f_r in &[1u32, 5, 20] {
        let cfg = chain_config(f_r);
        for &gamma in &[0.2, 0.5, 0.8] {
            let (mut sum, mut sq) = (0.0, 0.0);
            for t in 0..windows {
                let seed = seeds::derive(4, u64::from(f_r), t);
                let tr = run_window(&net, 0, 1, gamma, &cfg, seed).unwrap().throughput;
                sum += tr;
                sq += tr * tr;
            }
            let n = windows as f64;
            let mean = sum / n;
            let se = ((sq / n - mean * mean) * n / (n - 1.0) / n).sqrt();
            let exact = model.expected(gamma, f_r).unwrap();
            let z = (mean - exact) / se;
            pass &= z.abs() <= 3.0;
            lines.push(format!("f_r={f_r} g={gamma}: exact {exact:.4} mc {mean:.4} z={z:+.2}"));
        }
    }
    report(4, "exact oracle equivalence", pass, lines.join("; "));
}

#[test]
fn criterion_05_derivative_check() {
    let model = chain_model();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for &f_r in &[1u32, 5, 20] {
        for k in 1..20 {
            let g = k as f64 / 20.0;
            let fd = (model.expected(g + h, f_r).unwrap() - model.expected(g - h, f_r).unwrap())
                / (2.0 * h);
            worst = worst.max((fd - model.derivative(g, f_r).unwrap()).abs());
        }
    }
    report(5, "derivative check", worst <= 1e-6, format!("max |analytic - FD| = {worst:.2e} (tolerance 1e-6)"));
}

#[test]
fn criterion_06_balanced_fixed_point() {
    let opts = OptimizerOptions::default();
    let mut worst: f64 = 0.0;
    for &n in &[2usize, 4, 8, 16] {
        let profile = HopProfile::averaged(vec![6.0; n], 0.95, 0.9).unwrap();
        let model = ThroughputModel::conditional(n, &profile, 5).unwrap();
        for &f_r in &[1u32, 10, 40] {
            let g = model.optimal_gamma(f_r, &opts).unwrap().gamma;
            worst = worst.max((g - 0.5).abs());
        }
    }
    report(6, "balanced fixed point", worst <= 1e-6, format!("max |gamma* - 0.5| = {worst:.2e} (tolerance 1e-6)"));
}

#[test]
fn criterion_07_bound_dominance_and_efficiency() {
    let result = bounds_table(&paper(), &[10, 20, 30, 40], DEFAULT_PROFILE_SAMPLES);
    match result {
        Ok(rows) => {
            let dominated = rows.iter().all(|r| r.mean <= r.upper_bound);
            let eta10 = rows[0].efficiency;
            let detail = rows
                .iter()
                .map(|r| format!("f_r={} T*={:.3} UB={:.3} eta={:.3}", r.f_r, r.mean, r.upper_bound, r.efficiency))
                .collect::<Vec<_>>()
                .join("; ");
            report(7, "bound dominance and efficiency", dominated && (0.75..=0.95).contains(&eta10), detail);
        }
        Err(e) => report(7, "bound dominance and efficiency", false, e.to_string()),
    }
}

#[test]
fn criterion_08_distance_scaling() {
    let cfg = ExperimentConfig {
        windows: 20_000,
        gammas: vec![0.0, 0.5, 1.0],
        ..paper()
    };
    let result = distance_table(&cfg, 12, 30).unwrap();
    let k: Vec<f64> = result.fits.iter().map(|f| f.fit.kappa).collect();
    let r2: Vec<f64> = result.fits.iter().map(|f| f.fit.r2).collect();
    let pass = k[1] < k[0] && k[1] < k[2] && r2.iter().all(|&r| r >= 0.8);
    report(
        8,
        "distance scaling",
        pass,
        format!(
            "kappa(0)={:.3} kappa(0.5)={:.3} kappa(1)={:.3}; R2 = {:.3}/{:.3}/{:.3}",
            k[0], k[1], k[2], r2[0], r2[1], r2[2]
        ),
    );
}

#[test]
fn criterion_09_multi_pair_scaling() {
    let cfg = ExperimentConfig {
        gammas: vec![0.02, 0.5, 0.98],
        ..paper()
    };
    let result = multipair_table(&cfg, 6).unwrap();
    let f = &result.fits;
    let pass = f[1].r2 >= 0.95 && f[1].slope > f[0].slope && f[1].slope > f[2].slope;
    report(
        9,
        "multi-pair scaling",
        pass,
        format!(
            "slopes {:.3}/{:.3}/{:.3} at gamma 0.02/0.5/0.98; R2(0.5)={:.4}",
            f[0].slope, f[1].slope, f[2].slope, f[1].r2
        ),
    );
}

#[test]
fn criterion_10_hop_profile_fit() {
    let result = hopfit_ensemble(&paper(), 15_000, 500).unwrap();
    let fit = &result.fit;
    let pass = result.samples >= 5000
        && (1.04..=1.24).contains(&fit.beta)
        && (0.12..=0.22).contains(&fit.c);
    report(
        10,
        "hop-profile fit",
        pass,
        format!(
            "{} complete sets from {} topologies, {} ranks: h1={:.3} c={:.4} [{:.4}, {:.4}] beta={:.4} [{:.4}, {:.4}] R2={:.4}",
            result.samples,
            result.topologies,
            fit.ranks(),
            fit.h1,
            fit.c,
            fit.c_ci.0,
            fit.c_ci.1,
            fit.beta,
            fit.beta_ci.0,
            fit.beta_ci.1,
            fit.r2
        ),
    );
}

fn is_unimodal(values: &[f64]) -> bool {
    let peak = values
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v > values[best] { k } else { best });
    values[..=peak].windows(2).all(|w| w[1] >= w[0]) && values[peak..].windows(2).all(|w| w[1] <= w[0])
}

#[test]
fn criterion_11_fairness() {
    let rows = fairness_table(&paper(), &[10, 40]).unwrap();
    let curve = |f_r: u32| -> Vec<(f64, f64)> {
        rows.iter().filter(|r| r.f_r == f_r).map(|r| (r.gamma, r.mean_j)).collect()
    };
    let (low, high) = (curve(10), curve(40));
    let j: Vec<f64> = low.iter().map(|p| p.1).collect();
    let peak = low[j
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v > j[best] { k } else { best })]
    .0;
    let ordered = low
        .iter()
        .zip(&high)
        .filter(|(a, _)| (0.3..=0.7).contains(&a.0))
        .all(|(a, b)| b.1 > a.1);
    let pass = is_unimodal(&j) && (0.35..=0.65).contains(&peak) && ordered;
    let fmt = |c: &[(f64, f64)]| c.iter().map(|p| format!("{:.3}", p.1)).collect::<Vec<_>>().join(",");
    report(
        11,
        "fairness",
        pass,
        format!("peak gamma={peak:.2}; J(f_r=10)=[{}]; J(f_r=40)=[{}]", fmt(&low), fmt(&high)),
    );
}

#[test]
fn criterion_12_property_suites() {
    let mut failures = Vec::new();

    // selection normalization and Kraft
    for n in 1..=64 {
        let tree = build_tree(n).unwrap();
        if tree.kraft_sum() > 1.0 + 1e-12 {
            failures.push(format!("Kraft violated for n={n}"));
        }
        for k in 0..=20 {
            let sum: f64 = selection_probabilities(&tree, k as f64 / 20.0)
                .unwrap()
                .probabilities
                .iter()
                .sum();
            if (sum - 1.0).abs() > 1e-12 {
                failures.push(format!("selection sum {sum} for n={n}"));
            }
        }
    }

    // effective-capacity normalization
    let mut rng = seeds::rng(12);
    for _ in 0..500 {
        let hops: Vec<f64> = (0..rng.random_range(1..12)).map(|_| rng.random::<f64>()).collect();
        let c0 = rng.random_range(1..30);
        let sum: f64 = ceff_pmf(&hops, c0).unwrap().iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            failures.push(format!("ceff pmf sums to {sum}"));
        }
    }

    // capacity conservation and Jain bounds on paper-parameter windows
    let cfg = paper();
    let net = cfg.network().unwrap();
    for t in 0..300u64 {
        let mut pick = seeds::rng(seeds::derive(12, 0, t));
        let src = pick.random_range(0..net.n_nodes());
        let dst = (src + 1 + pick.random_range(0..net.n_nodes() - 1)) % net.n_nodes();
        let gamma = (t % 11) as f64 / 10.0;
        let trace = run_window_traced(&net, &[(src, dst)], gamma, &cfg, t).unwrap();
        let mut used = vec![0u32; net.n_edges()];
        let pair = &trace.result.pairs[0];
        for (path, &u) in trace.path_edges[0].iter().zip(&pair.served) {
            for &e in path {
                used[e] += u;
            }
        }
        for e in 0..net.n_edges() {
            if trace.initial.get(e) - trace.residual.get(e) != used[e] {
                failures.push(format!("capacity not conserved on edge {e} in window {t}"));
            }
        }
        if let Some(j) = jain_window(&pair.served) {
            let n = pair.served.len() as f64;
            if j < 1.0 / n - 1e-12 || j > 1.0 + 1e-12 {
                failures.push(format!("Jain index {j} outside [1/{n}, 1]"));
            }
        }
    }

    // byte-identical reruns, independent of thread count
    let rerun_cfg = ExperimentConfig {
        windows: 200,
        ..paper()
    };
    let a = serde_json::to_string(&run_sweep_on(&net, &rerun_cfg).unwrap()).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| serde_json::to_string(&run_sweep_on(&net, &rerun_cfg).unwrap()).unwrap());
    if a != b {
        failures.push("sweep output differs between reruns".into());
    }
    let fit_a = serde_json::to_string(&experiments::analytic_setup(&net, &rerun_cfg, 300).unwrap().profile).unwrap();
    let fit_b = serde_json::to_string(&experiments::analytic_setup(&net, &rerun_cfg, 300).unwrap().profile).unwrap();
    if fit_a != fit_b {
        failures.push("analytic setup differs between reruns".into());
    }

    report(
        12,
        "property suites",
        failures.is_empty(),
        if failures.is_empty() {
            "normalization, Kraft, ceff, conservation, Jain bounds, reruns all hold".into()
        } else {
            failures.join("; ")
        },
    );
}
