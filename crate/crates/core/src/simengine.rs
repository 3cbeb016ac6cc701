//! Windowed routing simulation.
//!
//! A window samples fresh link capacities, finds edge-disjoint paths on the
//! feasible subgraph for each source-destination pair, then serves `f_r`
//! requests per pair through the tournament, consuming one pair per edge for
//! every accepted request. Throughput is the sum of swap weights
//! `p_swap^(h - 1)` over accepted requests.
//!
//! Seeds: window `t` of a sweep uses `derive(master, WINDOW, t)`. Below a
//! window seed, pair selection, capacity sampling and path selection each
//! draw from their own sub-stream, so every bias value of a sweep sees the
//! same pairs and capacities (common random numbers).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{edge_success_probabilities, sample_capacities_with, CapacityState, ChannelParams};
use crate::error::{check_probability, invalid, Result};
use crate::netgraph::{self, EdgeId, Network, NodeId, DEFAULT_MAX_PATHS};
use crate::seeds::{self, stream};
use crate::tournament::{build_tree, TournamentTree};

/// How requests of concurrent pairs are interleaved within a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServingOrder {
    /// Pair 1 request 1, pair 2 request 1, ..., pair 1 request 2, ...
    #[default]
    RoundRobin,
    /// All requests of pair 1, then all of pair 2, ...
    Sequential,
}

/// The 13-point bias grid `0.02, 0.10, ..., 0.98`.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..13).map(|k| (2 + 8 * k) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_nodes: usize,
    pub radius: f64,
    pub channel: ChannelParams,
    /// Requests per pair per window (`f_r`).
    pub requests: u32,
    /// Number of windows (`T`).
    pub windows: usize,
    pub gammas: Vec<f64>,
    /// Concurrent source-destination pairs per window (`R`).
    pub pairs: usize,
    pub max_paths: usize,
    pub seed: u64,
    pub serving_order: ServingOrder,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_nodes: 500,
            radius: 0.105,
            channel: ChannelParams {
                alpha: 1.0,
                c0: 5,
                p_swap: 0.95,
            },
            requests: 20,
            windows: 1000,
            gammas: default_gamma_grid(),
            pairs: 1,
            max_paths: DEFAULT_MAX_PATHS,
            seed: 1,
            serving_order: ServingOrder::RoundRobin,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(invalid("n_nodes", "must be at least 2"));
        }
        if !(self.radius > 0.0) || self.radius > std::f64::consts::SQRT_2 + 1e-9 {
            return Err(invalid("radius", format!("{} is not in (0, sqrt 2]", self.radius)));
        }
        self.channel.validate()?;
        if self.requests == 0 {
            return Err(invalid("requests", "must be at least 1"));
        }
        if self.windows == 0 {
            return Err(invalid("windows", "must be at least 1"));
        }
        if self.pairs == 0 {
            return Err(invalid("pairs", "must be at least 1"));
        }
        if self.max_paths == 0 {
            return Err(invalid("max_paths", "must be at least 1"));
        }
        for &g in &self.gammas {
            check_probability("gammas", g)?;
        }
        Ok(())
    }

    /// The topology implied by `n_nodes`, `radius` and the master seed.
    pub fn network(&self) -> Result<Network> {
        netgraph::generate_rgg(
            self.n_nodes,
            self.radius,
            seeds::derive(self.seed, stream::TOPOLOGY, 0),
        )
    }
}

/// Outcome for one source-destination pair in a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub source: NodeId,
    pub destination: NodeId,
    /// Hop count of each feasible path, in rank order.
    pub hops: Vec<u32>,
    /// Accepted requests per path (`u_i`).
    pub served: Vec<u32>,
    pub throughput: f64,
}

impl PairOutcome {
    pub fn n_paths(&self) -> usize {
        self.hops.len()
    }

    pub fn served_total(&self) -> u32 {
        self.served.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub pairs: Vec<PairOutcome>,
    /// Aggregate swap-weighted throughput over all pairs.
    pub throughput: f64,
}

impl WindowResult {
    /// Paths found, summed over pairs.
    pub fn n_paths(&self) -> usize {
        self.pairs.iter().map(PairOutcome::n_paths).sum()
    }

    pub fn served_total(&self) -> u32 {
        self.pairs.iter().map(PairOutcome::served_total).sum()
    }
}

/// One routing decision inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestEvent {
    pub pair: usize,
    /// Selected path rank, `None` when the pair has no feasible path.
    pub path: Option<usize>,
    pub accepted: bool,
    /// Smallest residual count along the selected path before the decision.
    pub bottleneck_before: u32,
}

/// A window result together with its capacity bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTrace {
    pub result: WindowResult,
    pub initial: CapacityState,
    pub residual: CapacityState,
    /// Per pair, per path: edge ids in the full network.
    pub path_edges: Vec<Vec<Vec<EdgeId>>>,
    pub events: Vec<RequestEvent>,
}

#[derive(Debug, Clone)]
struct PairRoutes {
    source: NodeId,
    destination: NodeId,
    paths: Vec<Vec<EdgeId>>,
    hops: Vec<u32>,
    tree: Option<TournamentTree>,
}

/// Everything about a window that does not depend on the bias.
#[derive(Debug, Clone)]
pub struct PreparedWindow {
    initial: CapacityState,
    routes: Vec<PairRoutes>,
    selection_seed: u64,
}

impl PreparedWindow {
    /// Samples capacities and discovers paths for `pairs` on the feasible
    /// subgraph.
    fn new(
        net: &Network,
        success: &[f64],
        pairs: &[(NodeId, NodeId)],
        c0: u32,
        max_paths: usize,
        window_seed: u64,
    ) -> Result<Self> {
        let mut cap_rng = seeds::rng(seeds::derive(window_seed, seeds::window::CAPACITY, 0));
        let initial = sample_capacities_with(success, c0, &mut cap_rng);
        let kept = netgraph::feasible_edge_ids(net, &initial)?;
        let feasible = netgraph::restrict(net, &kept);
        let routes = pairs
            .iter()
            .map(|&(src, dst)| {
                let mut set = netgraph::edge_disjoint_paths(&feasible, src, dst, max_paths)?;
                for path in &mut set.paths {
                    path.remap_edges(&kept);
                }
                let hops = set.paths.iter().map(|p| p.hops() as u32).collect();
                let tree = if set.is_empty() {
                    None
                } else {
                    Some(build_tree(set.len())?)
                };
                Ok(PairRoutes {
                    source: src,
                    destination: dst,
                    paths: set.paths.iter().map(|p| p.edges().to_vec()).collect(),
                    hops,
                    tree,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            initial,
            routes,
            selection_seed: seeds::derive(window_seed, seeds::window::SELECTION, 0),
        })
    }

    /// Per pair, the hop counts of the feasible paths.
    pub fn hop_counts(&self) -> impl Iterator<Item = &[u32]> {
        self.routes.iter().map(|r| r.hops.as_slice())
    }

    fn route(
        &self,
        gamma: f64,
        requests: u32,
        p_swap: f64,
        order: ServingOrder,
        mut log: Option<&mut Vec<RequestEvent>>,
    ) -> (WindowResult, CapacityState) {
        let mut caps = self.initial.clone();
        let mut rng = seeds::rng(self.selection_seed);
        let mut served: Vec<Vec<u32>> = self
            .routes
            .iter()
            .map(|r| vec![0; r.paths.len()])
            .collect();

        let schedule: Box<dyn Iterator<Item = usize>> = match order {
            ServingOrder::RoundRobin => Box::new(
                (0..requests).flat_map(|_| 0..self.routes.len()),
            ),
            ServingOrder::Sequential => Box::new(
                (0..self.routes.len()).flat_map(|k| std::iter::repeat_n(k, requests as usize)),
            ),
        };
        for k in schedule {
            let route = &self.routes[k];
            let Some(tree) = &route.tree else {
                if let Some(log) = log.as_deref_mut() {
                    log.push(RequestEvent {
                        pair: k,
                        path: None,
                        accepted: false,
                        bottleneck_before: 0,
                    });
                }
                continue;
            };
            let i = tree.sample(gamma, &mut rng);
            let edges = &route.paths[i];
            let bottleneck_before = caps.bottleneck(edges);
            let accepted = caps.try_consume(edges);
            if accepted {
                served[k][i] += 1;
            }
            if let Some(log) = log.as_deref_mut() {
                log.push(RequestEvent {
                    pair: k,
                    path: Some(i),
                    accepted,
                    bottleneck_before,
                });
            }
        }

        let pairs: Vec<PairOutcome> = self
            .routes
            .iter()
            .zip(served)
            .map(|(route, served)| {
                let throughput = route
                    .hops
                    .iter()
                    .zip(&served)
                    .map(|(&h, &u)| f64::from(u) * p_swap.powi(h as i32 - 1))
                    .sum();
                PairOutcome {
                    source: route.source,
                    destination: route.destination,
                    hops: route.hops.clone(),
                    served,
                    throughput,
                }
            })
            .collect();
        let throughput = pairs.iter().map(|p| p.throughput).sum();
        (WindowResult { pairs, throughput }, caps)
    }
}

/// Network plus cached per-edge success probabilities.
pub struct Simulator<'a> {
    net: &'a Network,
    success: Vec<f64>,
    config: &'a ExperimentConfig,
}

impl<'a> Simulator<'a> {
    pub fn new(net: &'a Network, config: &'a ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            net,
            success: edge_success_probabilities(net, config.channel.alpha),
            config,
        })
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn prepare(&self, pairs: &[(NodeId, NodeId)], window_seed: u64) -> Result<PreparedWindow> {
        for &(s, d) in pairs {
            if s == d {
                return Err(invalid("pairs", format!("source and destination coincide at {s}")));
            }
        }
        PreparedWindow::new(
            self.net,
            &self.success,
            pairs,
            self.config.channel.c0,
            self.config.max_paths,
            window_seed,
        )
    }

    pub fn route(&self, window: &PreparedWindow, gamma: f64) -> WindowResult {
        window
            .route(
                gamma,
                self.config.requests,
                self.config.channel.p_swap,
                self.config.serving_order,
                None,
            )
            .0
    }

    pub fn trace(&self, window: &PreparedWindow, gamma: f64) -> WindowTrace {
        let mut events = Vec::new();
        let (result, residual) = window.route(
            gamma,
            self.config.requests,
            self.config.channel.p_swap,
            self.config.serving_order,
            Some(&mut events),
        );
        WindowTrace {
            result,
            initial: window.initial.clone(),
            residual,
            path_edges: window.routes.iter().map(|r| r.paths.clone()).collect(),
            events,
        }
    }

    /// `count` distinct-endpoint pairs drawn uniformly for the window.
    pub fn draw_pairs(&self, window_seed: u64, count: usize) -> Vec<(NodeId, NodeId)> {
        let mut rng = seeds::rng(seeds::derive(window_seed, seeds::window::PAIRS, 0));
        (0..count).map(|_| random_pair(&mut rng, self.net.n_nodes())).collect()
    }

    /// Seed of window `index` on `stream_tag`.
    pub fn window_seed(&self, stream_tag: u64, index: usize) -> u64 {
        seeds::derive(self.config.seed, stream_tag, index as u64)
    }
}

fn random_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (NodeId, NodeId) {
    let src = rng.random_range(0..n);
    let mut dst = rng.random_range(0..n - 1);
    if dst >= src {
        dst += 1;
    }
    (src, dst)
}

fn check_gamma(gamma: f64) -> Result<()> {
    check_probability("gamma", gamma)
}

/// Runs one window for a single pair.
pub fn run_window(
    net: &Network,
    src: NodeId,
    dst: NodeId,
    gamma: f64,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<WindowResult> {
    Ok(run_window_traced(net, &[(src, dst)], gamma, config, seed)?.result)
}

/// Runs one window for several pairs sharing the window's capacity.
pub fn run_multi_pair_window(
    net: &Network,
    pairs: &[(NodeId, NodeId)],
    gamma: f64,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<WindowResult> {
    Ok(run_window_traced(net, pairs, gamma, config, seed)?.result)
}

/// Like [`run_multi_pair_window`], also returning the capacity trace.
pub fn run_window_traced(
    net: &Network,
    pairs: &[(NodeId, NodeId)],
    gamma: f64,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<WindowTrace> {
    check_gamma(gamma)?;
    if pairs.is_empty() {
        return Err(invalid("pairs", "at least one pair is required"));
    }
    for &(s, d) in pairs {
        if s >= net.n_nodes() || d >= net.n_nodes() {
            return Err(invalid("pairs", format!("pair ({s}, {d}) is out of range")));
        }
    }
    let sim = Simulator::new(net, config)?;
    let window = sim.prepare(pairs, seed)?;
    Ok(sim.trace(&window, gamma))
}

/// Per-window outcomes at one bias value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSeries {
    pub gamma: f64,
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
    pub windows: Vec<WindowResult>,
}

impl GammaSeries {
    fn from_windows(gamma: f64, windows: Vec<WindowResult>) -> Self {
        let raw: Vec<f64> = windows.iter().map(|w| w.throughput).collect();
        let (mean, std) = mean_std(&raw);
        Self {
            gamma,
            mean,
            std,
            sem: std / (raw.len() as f64).sqrt(),
            windows,
        }
    }

    pub fn throughputs(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.throughput).collect()
    }
}

/// Mean and sample (n - 1) standard deviation.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub series: Vec<GammaSeries>,
}

impl SweepSummary {
    pub fn means(&self) -> Vec<f64> {
        self.series.iter().map(|s| s.mean).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.series.iter().map(|s| s.gamma).collect()
    }

    /// Index of the largest mean throughput (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, s) in self.series.iter().enumerate() {
            if s.mean > self.series[best].mean {
                best = k;
            }
        }
        best
    }
}

/// Gamma sweep on the configuration's own topology.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepSummary> {
    config.validate()?;
    let net = config.network()?;
    run_sweep_on(&net, config)
}

/// Gamma sweep on a given topology.
///
/// Every window draws `config.pairs` uniform pairs; every bias value reuses
/// the same windows.
pub fn run_sweep_on(net: &Network, config: &ExperimentConfig) -> Result<SweepSummary> {
    let sim = Simulator::new(net, config)?;
    let per_window: Vec<Vec<WindowResult>> = (0..config.windows)
        .into_par_iter()
        .map(|t| {
            let seed = sim.window_seed(stream::WINDOW, t);
            let pairs = sim.draw_pairs(seed, config.pairs);
            let window = sim.prepare(&pairs, seed)?;
            Ok(config
                .gammas
                .iter()
                .map(|&g| sim.route(&window, g))
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut columns: Vec<Vec<WindowResult>> = config
        .gammas
        .iter()
        .map(|_| Vec::with_capacity(config.windows))
        .collect();
    for row in per_window {
        for (col, result) in columns.iter_mut().zip(row) {
            col.push(result);
        }
    }
    Ok(SweepSummary {
        series: config
            .gammas
            .iter()
            .zip(columns)
            .map(|(&g, windows)| GammaSeries::from_windows(g, windows))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub gamma: f64,
    pub bin_center: f64,
    pub mean_throughput: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    pub bin_edges: Vec<f64>,
    pub rows: Vec<DistanceRow>,
}

impl DistanceTable {
    /// `(bin_center, mean)` for bins of `gamma` with at least `min_samples`.
    pub fn curve(&self, gamma: f64, min_samples: usize) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.gamma == gamma && r.samples >= min_samples.max(1))
            .map(|r| (r.bin_center, r.mean_throughput))
            .collect()
    }
}

/// Throughput binned by source-destination separation, per bias value.
///
/// Bins are equal-width over the observed separation range; a single
/// observed separation yields one occupied bin.
pub fn run_distance_sweep(config: &ExperimentConfig, n_bins: usize) -> Result<DistanceTable> {
    config.validate()?;
    let net = config.network()?;
    run_distance_sweep_on(&net, config, n_bins)
}

pub fn run_distance_sweep_on(
    net: &Network,
    config: &ExperimentConfig,
    n_bins: usize,
) -> Result<DistanceTable> {
    if n_bins < 2 {
        return Err(invalid("n_bins", "must be at least 2"));
    }
    let sim = Simulator::new(net, config)?;
    let samples: Vec<(f64, Vec<f64>)> = (0..config.windows)
        .into_par_iter()
        .map(|t| {
            let seed = sim.window_seed(stream::DISTANCE, t);
            let pair = sim.draw_pairs(seed, 1)[0];
            let window = sim.prepare(&[pair], seed)?;
            let separation = net.distance(pair.0, pair.1);
            let tr = config
                .gammas
                .iter()
                .map(|&g| sim.route(&window, g).throughput)
                .collect();
            Ok((separation, tr))
        })
        .collect::<Result<_>>()?;
    Ok(bin_by_distance(&config.gammas, &samples, n_bins))
}

pub(crate) fn bin_by_distance(
    gammas: &[f64],
    samples: &[(f64, Vec<f64>)],
    n_bins: usize,
) -> DistanceTable {
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 0.0 };
    let bin_edges: Vec<f64> = (0..=n_bins).map(|k| lo + width * k as f64).collect();
    let index = |l: f64| {
        if width == 0.0 {
            0
        } else {
            (((l - lo) / width) as usize).min(n_bins - 1)
        }
    };
    let mut sums = vec![vec![0.0; n_bins]; gammas.len()];
    let mut counts = vec![0usize; n_bins];
    for (l, tr) in samples {
        let b = index(*l);
        counts[b] += 1;
        for (g, &v) in tr.iter().enumerate() {
            sums[g][b] += v;
        }
    }
    let mut rows = Vec::new();
    for (g, &gamma) in gammas.iter().enumerate() {
        for b in 0..n_bins {
            if counts[b] == 0 {
                continue;
            }
            let center = if width == 0.0 {
                lo
            } else {
                0.5 * (bin_edges[b] + bin_edges[b + 1])
            };
            rows.push(DistanceRow {
                gamma,
                bin_center: center,
                mean_throughput: sums[g][b] / counts[b] as f64,
                samples: counts[b],
            });
        }
    }
    DistanceTable { bin_edges, rows }
}

/// Feasible-path statistics gathered from sampled windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStatistics {
    /// `path_counts[n]` windows had exactly `n` feasible disjoint paths.
    pub path_counts: Vec<usize>,
    /// `rank_hops[i]` holds the hop counts observed at rank `i + 1`.
    pub rank_hops: Vec<Vec<u32>>,
    /// Hop counts of windows that found the full `max_paths` paths.
    pub complete: Vec<Vec<u32>>,
}

impl PathStatistics {
    pub fn empty(max_paths: usize) -> Self {
        Self {
            path_counts: vec![0; max_paths + 1],
            rank_hops: vec![Vec::new(); max_paths],
            complete: Vec::new(),
        }
    }

    pub fn samples(&self) -> usize {
        self.path_counts.iter().sum()
    }
}

/// Samples `samples` single-pair windows on `stream_tag` and records the
/// number of feasible paths and their hop counts by rank.
pub fn collect_path_statistics(
    net: &Network,
    config: &ExperimentConfig,
    samples: usize,
    stream_tag: u64,
) -> Result<PathStatistics> {
    let sim = Simulator::new(net, config)?;
    let per_window: Vec<Vec<u32>> = (0..samples)
        .into_par_iter()
        .map(|t| {
            let seed = sim.window_seed(stream_tag, t);
            let pair = sim.draw_pairs(seed, 1)[0];
            let window = sim.prepare(&[pair], seed)?;
            let hops = window.hop_counts().next().unwrap_or(&[]).to_vec();
            Ok(hops)
        })
        .collect::<Result<_>>()?;
    let mut stats = PathStatistics::empty(config.max_paths);
    for hops in per_window {
        stats.path_counts[hops.len()] += 1;
        for (rank, &h) in hops.iter().enumerate() {
            stats.rank_hops[rank].push(h);
        }
        if hops.len() == config.max_paths {
            stats.complete.push(hops);
        }
    }
    Ok(stats)
}
