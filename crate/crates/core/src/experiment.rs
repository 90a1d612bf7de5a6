//! Experiment harness: sectioned TOML configuration, seeded end-to-end
//! pipelines, and machine-readable CSV/text outputs.
//!
//! Every command is a pure function of (config, input files, seed): the
//! same inputs always produce byte-identical outputs. All randomness is
//! drawn from named streams derived from the single top-level seed.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{
    analytic_m, conjunction_bound, event_probability_bound, fit_probabilities, measured_diameter,
    scaling_experiment, tessellate_and_check, AnalysisError, ScalingSpec, TessellationReport,
};
use crate::embedding::{EmbedError, SwapChain};
use crate::lattice::{
    read_placement, write_placement, BaseGraph, Configuration, LatticeError, PlacementReadError,
};
use crate::model::{log_likelihood, LikelihoodModel, ModelError};
use crate::overlay::{
    generate_overlay, read_network, write_network, GeneratorSpec, NetworkReadError, OverlayNetwork,
    RepeaterGeneration,
};
use crate::routing::{default_hop_limit, route_ensemble, RouteError, RoutingMetric};
use crate::stream;

/// Command-level failure, mapped onto process exit codes:
/// 2 config validation, 3 input parse, 4 runtime guard, 1 I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("runtime guard: {0}")]
    Guard(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Parse { .. } => 3,
            CliError::Guard(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    fn config(key: &str, message: impl ToString) -> Self {
        CliError::Config {
            key: key.to_string(),
            message: message.to_string(),
        }
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        CliError::Guard(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Guard(e.to_string())
    }
}

impl From<RouteError> for CliError {
    fn from(e: RouteError) -> Self {
        CliError::Guard(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Guard(e.to_string())
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Guard(e.to_string())
    }
}

fn parse_error(path: &Path, message: impl ToString) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Overlay generator settings. `nodes = 0` fills the lattice; `levels = 0`
/// picks `floor(log2 side) + 1` so the longest level spans the side.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    pub nodes: u32,
    pub levels: u32,
    /// Per-level probability template; repeated/truncated to the level
    /// count.
    pub probabilities: Vec<f64>,
    /// Per-level candidate inclusion rates; empty picks rates from
    /// `links_per_level`.
    pub inclusion: Vec<f64>,
    pub links_per_level: f64,
    pub min_degree: u32,
    pub generation: String,
    pub fidelity_min: f64,
    pub fidelity_max: f64,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        Self {
            nodes: 0,
            levels: 0,
            probabilities: vec![1.0],
            inclusion: Vec::new(),
            links_per_level: 1.0,
            min_degree: 2,
            generation: "doubling".to_string(),
            fidelity_min: 1.0,
            fidelity_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaseGraphSection {
    pub dimension: u32,
    pub side: u32,
}

impl Default for BaseGraphSection {
    fn default() -> Self {
        Self {
            dimension: 2,
            side: 8,
        }
    }
}

/// Swap-chain settings. `stride = 0` samples every `node_count` steps.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub steps: u64,
    pub burn_in: f64,
    pub stride: u64,
    /// Diagnostics rows written over the run.
    pub checkpoints: u32,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            steps: 20_000,
            burn_in: 0.2,
            stride: 0,
            checkpoints: 100,
        }
    }
}

/// Routing settings. `hop_limit = 0` uses `4 (log2 n)^2 + 16`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingSection {
    pub trials: u32,
    pub hop_limit: u32,
    pub metric: String,
}

impl Default for RoutingSection {
    fn default() -> Self {
        Self {
            trials: 1000,
            hop_limit: 0,
            metric: "l1".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub gamma: f64,
    pub levels_m: u32,
    #[serde(rename = "K")]
    pub k_constant: f64,
    #[serde(rename = "Z")]
    pub z_constant: f64,
    /// Lattice sides for the scaling experiment.
    pub sizes: Vec<u32>,
    pub scaling_trials: u32,
    pub long_links_per_node: f64,
    /// Chain steps before routing in the scaling experiment; 0 routes on
    /// the planted placement.
    pub scaling_embed_steps: u64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            gamma: 0.8,
            levels_m: 2,
            k_constant: 1.0,
            z_constant: 1.0,
            sizes: vec![8, 16, 32, 64],
            scaling_trials: 500,
            long_links_per_node: 2.0,
            scaling_embed_steps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub generator: GeneratorSection,
    pub basegraph: BaseGraphSection,
    pub chain: ChainSection,
    pub routing: RoutingSection,
    pub analysis: AnalysisSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            generator: GeneratorSection::default(),
            basegraph: BaseGraphSection::default(),
            chain: ChainSection::default(),
            routing: RoutingSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::config("<file>", format!("{path:?}: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::config("<toml>", e))?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every numeric range, naming the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        let b = &self.basegraph;
        if b.dimension == 0 {
            return Err(CliError::config(
                "basegraph.dimension",
                "must be at least 1",
            ));
        }
        if b.side < 2 {
            return Err(CliError::config("basegraph.side", "must be at least 2"));
        }
        let capacity = (u64::from(b.side)).checked_pow(b.dimension);
        let g = &self.generator;
        if g.nodes > 0 {
            match capacity {
                Some(c) if u64::from(g.nodes) <= c => {}
                _ => {
                    return Err(CliError::config(
                        "generator.nodes",
                        format!(
                            "{} nodes exceed the {}^{} lattice",
                            g.nodes, b.side, b.dimension
                        ),
                    ))
                }
            }
        }
        if g.probabilities.is_empty() {
            return Err(CliError::config(
                "generator.probabilities",
                "must not be empty",
            ));
        }
        for &p in &g.probabilities {
            if !(p > 0.0 && p <= 1.0) {
                return Err(CliError::config(
                    "generator.probabilities",
                    format!("probability {p} outside (0, 1]"),
                ));
            }
        }
        if g.probabilities.windows(2).any(|w| w[1] > w[0]) {
            return Err(CliError::config(
                "generator.probabilities",
                "must be non-increasing across levels",
            ));
        }
        for &r in &g.inclusion {
            if !(0.0..=1.0).contains(&r) {
                return Err(CliError::config(
                    "generator.inclusion",
                    format!("rate {r} outside [0, 1]"),
                ));
            }
        }
        if !(g.links_per_level > 0.0) {
            return Err(CliError::config(
                "generator.links_per_level",
                "must be positive",
            ));
        }
        if g.min_degree == 0 {
            return Err(CliError::config(
                "generator.min_degree",
                "must be at least 1",
            ));
        }
        parse_generation(&g.generation)?;
        if !(0.0 <= g.fidelity_min && g.fidelity_min <= g.fidelity_max && g.fidelity_max <= 1.0) {
            return Err(CliError::config(
                "generator.fidelity_min",
                format!(
                    "range [{}, {}] must sit inside [0, 1]",
                    g.fidelity_min, g.fidelity_max
                ),
            ));
        }
        let c = &self.chain;
        if !(0.0..1.0).contains(&c.burn_in) {
            return Err(CliError::config("chain.burn_in", "must lie in [0, 1)"));
        }
        if c.checkpoints == 0 {
            return Err(CliError::config("chain.checkpoints", "must be at least 1"));
        }
        let r = &self.routing;
        if r.trials == 0 {
            return Err(CliError::config("routing.trials", "must be at least 1"));
        }
        parse_metric(&r.metric)?;
        let a = &self.analysis;
        if !(a.gamma > 0.25 * f64::from(b.dimension) && a.gamma < 1.0) {
            return Err(CliError::config(
                "analysis.gamma",
                format!("{} outside (k/4, 1) for k = {}", a.gamma, b.dimension),
            ));
        }
        if a.levels_m == 0 {
            return Err(CliError::config("analysis.levels_m", "must be at least 1"));
        }
        if !(a.k_constant > 0.0) {
            return Err(CliError::config("analysis.K", "must be positive"));
        }
        if !(a.z_constant > 0.0) {
            return Err(CliError::config("analysis.Z", "must be positive"));
        }
        if a.sizes.is_empty() || a.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config(
                "analysis.sizes",
                "must be non-empty and strictly ascending",
            ));
        }
        for &s in &a.sizes {
            if s < 2 || !s.is_power_of_two() {
                return Err(CliError::config(
                    "analysis.sizes",
                    format!("side {s} must be a power of two, at least 2"),
                ));
            }
        }
        if a.scaling_trials == 0 {
            return Err(CliError::config(
                "analysis.scaling_trials",
                "must be at least 1",
            ));
        }
        if !(a.long_links_per_node > 0.0) {
            return Err(CliError::config(
                "analysis.long_links_per_node",
                "must be positive",
            ));
        }
        Ok(())
    }

    /// Node count after resolving the full-lattice default.
    pub fn node_count(&self) -> u32 {
        if self.generator.nodes > 0 {
            self.generator.nodes
        } else {
            let capacity = u64::from(self.basegraph.side).pow(self.basegraph.dimension);
            u32::try_from(capacity).unwrap_or(u32::MAX)
        }
    }

    /// Level count after resolving the `floor(log2 side) + 1` default.
    pub fn level_count(&self) -> u32 {
        if self.generator.levels > 0 {
            self.generator.levels
        } else {
            32 - self.basegraph.side.leading_zeros()
        }
    }
}

fn parse_generation(name: &str) -> Result<RepeaterGeneration, CliError> {
    name.parse().map_err(|_| {
        CliError::config(
            "generator.generation",
            format!("`{name}` is not `doubling` or `nextgen`"),
        )
    })
}

fn parse_metric(name: &str) -> Result<RoutingMetric, CliError> {
    match name {
        "l1" => Ok(RoutingMetric::L1),
        "fidelity-tiebreak" => Ok(RoutingMetric::FidelityTieBreak),
        _ => Err(CliError::config(
            "routing.metric",
            format!("`{name}` is not `l1` or `fidelity-tiebreak`"),
        )),
    }
}

/// Builds the overlay generator settings from the config and seed.
pub fn generator_spec(config: &ExperimentConfig, seed: u64) -> Result<GeneratorSpec, CliError> {
    let levels = config.level_count();
    let mut spec = GeneratorSpec::new(
        config.node_count(),
        config.basegraph.side,
        config.basegraph.dimension,
        fit_probabilities(&config.generator.probabilities, levels),
        stream::derive_seed(seed, "generate"),
    );
    spec.generation = parse_generation(&config.generator.generation)?;
    if !config.generator.inclusion.is_empty() {
        spec.level_inclusion = Some(fit_probabilities(&config.generator.inclusion, levels));
    }
    spec.links_per_level = config.generator.links_per_level;
    spec.min_degree = config.generator.min_degree;
    spec.fidelity_range = (config.generator.fidelity_min, config.generator.fidelity_max);
    spec.validate()
        .map_err(|e| CliError::config("generator", e))?;
    Ok(spec)
}

fn read_network_file(path: &Path) -> Result<OverlayNetwork, CliError> {
    let file = File::open(path).map_err(|e| parse_error(path, e))?;
    read_network(BufReader::new(file)).map_err(|e| match e {
        NetworkReadError::Io(io) => CliError::Io(io),
        other => parse_error(path, other),
    })
}

fn read_placement_file(path: &Path, graph: BaseGraph) -> Result<Configuration, CliError> {
    let file = File::open(path).map_err(|e| parse_error(path, e))?;
    read_placement(graph, BufReader::new(file)).map_err(|e| match e {
        PlacementReadError::Io(io) => CliError::Io(io),
        other => parse_error(path, other),
    })
}

fn base_graph(config: &ExperimentConfig) -> Result<BaseGraph, CliError> {
    BaseGraph::new(config.basegraph.dimension, config.basegraph.side)
        .map_err(|e| CliError::config("basegraph", e))
}

fn output_file(out_dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(out_dir)?;
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}

/// Generates an overlay network and writes `network.txt`.
///
/// Prints the node and link counts; returns them for callers.
pub fn cmd_generate(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<(u32, usize), CliError> {
    let spec = generator_spec(config, seed)?;
    let network = generate_overlay(&spec).map_err(|e| CliError::Guard(e.to_string()))?;
    let mut w = output_file(out_dir, "network.txt")?;
    write_network(&network, &mut w)?;
    w.flush()?;
    println!(
        "nodes {} links {}",
        network.node_count(),
        network.links().len()
    );
    Ok((network.node_count(), network.links().len()))
}

/// Runs the swap chain on a network and writes `placement.txt` plus
/// `chain_diagnostics.csv` (`step,loglik,acceptance_rate` per checkpoint).
/// The log-likelihood column is the chain's stationary objective: the sum
/// of `-k ln d` over links.
pub fn cmd_embed(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    network_path: &Path,
) -> Result<PathBuf, CliError> {
    let network = read_network_file(network_path)?;
    let graph = base_graph(config)?;
    if u64::from(network.node_count()) > graph.site_count() {
        return Err(CliError::config(
            "basegraph.side",
            format!(
                "network has {} nodes but the lattice holds {}",
                network.node_count(),
                graph.site_count()
            ),
        ));
    }
    let occupied = graph.prefix_sites(u64::from(network.node_count()))?;
    let mut init_rng = stream::stream_rng(seed, "embed.init");
    let init = Configuration::random(graph, &occupied, &mut init_rng)?;
    let mut chain = SwapChain::new(&network, init, stream::derive_seed(seed, "embed.chain"))?;

    let mut diag = output_file(out_dir, "chain_diagnostics.csv")?;
    writeln!(diag, "step,loglik,acceptance_rate")?;
    let mut write_row = |step: u64, chain: &SwapChain| -> Result<(), CliError> {
        let loglik = log_likelihood(&network, chain.config(), LikelihoodModel::Kernel)?;
        let rate = if step == 0 {
            0.0
        } else {
            chain.acceptance_rate()
        };
        writeln!(diag, "{step},{loglik:.6},{rate:.6}").map_err(CliError::from)
    };
    write_row(0, &chain)?;
    let steps = config.chain.steps;
    let checkpoints = u64::from(config.chain.checkpoints);
    let chunk = (steps / checkpoints).max(1);
    let mut done = 0u64;
    while done < steps {
        let take = chunk.min(steps - done);
        chain.run(take)?;
        done += take;
        write_row(done, &chain)?;
    }
    diag.flush()?;

    let mut w = output_file(out_dir, "placement.txt")?;
    write_placement(chain.config(), &mut w)?;
    w.flush()?;
    println!(
        "steps {} accepted {} rate {:.4}",
        chain.step_count(),
        chain.accepted_swaps(),
        chain.acceptance_rate()
    );
    Ok(out_dir.join("placement.txt"))
}

/// Routes an ensemble over the network and placement and writes
/// `routes.csv`.
pub fn cmd_route(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    network_path: &Path,
    placement_path: &Path,
) -> Result<PathBuf, CliError> {
    let network = read_network_file(network_path)?;
    let graph = base_graph(config)?;
    let placement = read_placement_file(placement_path, graph)?;
    if placement.node_count() != network.node_count() {
        return Err(parse_error(
            placement_path,
            format!(
                "placement covers {} nodes, network has {}",
                placement.node_count(),
                network.node_count()
            ),
        ));
    }
    let n = u64::from(network.node_count());
    let hop_limit = match config.routing.hop_limit {
        0 => default_hop_limit(n),
        h => h,
    };
    let metric = parse_metric(&config.routing.metric)?;
    let summary = route_ensemble(
        &network,
        &placement,
        config.routing.trials,
        stream::derive_seed(seed, "route"),
        hop_limit,
        metric,
    )?;
    let mut w = output_file(out_dir, "routes.csv")?;
    writeln!(
        w,
        "side,n,k,trials,seed,mean_hops,median_hops,p95_hops,delivery_rate"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
        config.basegraph.side,
        n,
        config.basegraph.dimension,
        summary.trials,
        seed,
        summary.mean_hops,
        summary.median_hops,
        summary.p95_hops,
        summary.delivery_rate
    )?;
    w.flush()?;
    println!(
        "trials {} delivered {} mean_hops {:.3}",
        summary.trials, summary.delivered, summary.mean_hops
    );
    Ok(out_dir.join("routes.csv"))
}

fn write_tessellation_csv(
    out_dir: &Path,
    report: Option<&TessellationReport>,
) -> Result<(), CliError> {
    let mut w = output_file(out_dir, "tessellation.csv")?;
    writeln!(
        w,
        "gamma,levels_requested,levels_effective,clamped,events_violated,bound_value,measured_diameter,bound_holds"
    )?;
    if let Some(r) = report {
        let events: String = r
            .events_violated
            .iter()
            .map(|&v| if v { '1' } else { '0' })
            .collect();
        writeln!(
            w,
            "{:.6},{},{},{},{},{:.6},{},{}",
            r.gamma,
            r.requested_levels,
            r.effective_levels,
            r.clamped,
            events,
            r.bound_value,
            r.measured_diameter,
            r.bound_holds
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Measures the diameter, checks the tessellation bound, runs the scaling
/// experiment, and writes `scaling.csv`, `tessellation.csv`, and
/// `summary.txt`.
pub fn cmd_analyze(
    config: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    network_path: &Path,
    placement_path: &Path,
) -> Result<PathBuf, CliError> {
    let network = read_network_file(network_path)?;
    let graph = base_graph(config)?;
    let placement = read_placement_file(placement_path, graph)?;
    if placement.node_count() != network.node_count() {
        return Err(parse_error(
            placement_path,
            format!(
                "placement covers {} nodes, network has {}",
                placement.node_count(),
                network.node_count()
            ),
        ));
    }
    let a = &config.analysis;

    let realization =
        crate::overlay::realize_links(&network, stream::derive_seed(seed, "analyze.realize"));
    let diameter = measured_diameter(&realization, &placement)?;
    let tessellation = if graph.dimension() == 2 {
        Some(tessellate_and_check(
            &realization,
            &placement,
            a.gamma,
            a.levels_m,
        )?)
    } else {
        None
    };
    write_tessellation_csv(out_dir, tessellation.as_ref())?;

    let mut spec = ScalingSpec::new(
        a.sizes.clone(),
        a.scaling_trials,
        stream::derive_seed(seed, "analyze.scaling"),
    );
    spec.dimension = config.basegraph.dimension;
    spec.level_probabilities = config.generator.probabilities.clone();
    spec.long_links_per_node = a.long_links_per_node;
    spec.min_degree = config.generator.min_degree;
    spec.embed_steps = a.scaling_embed_steps;
    if config.routing.hop_limit > 0 {
        spec.hop_limit = Some(config.routing.hop_limit);
    }
    spec.metric = parse_metric(&config.routing.metric)?;
    let scaling = scaling_experiment(&spec)?;
    let mut w = output_file(out_dir, "scaling.csv")?;
    writeln!(w, "side,n,mean_hops,log2n_sq,ratio")?;
    for row in &scaling.rows {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6}",
            row.side, row.n, row.mean_hops, row.log2n_sq, row.ratio
        )?;
    }
    w.flush()?;

    let mut s = output_file(out_dir, "summary.txt")?;
    writeln!(s, "seed = {seed}")?;
    writeln!(s, "nodes = {}", network.node_count())?;
    writeln!(s, "links = {}", network.links().len())?;
    writeln!(s, "diameter = {}", diameter.diameter)?;
    writeln!(s, "diameter_exact = {}", diameter.exact)?;
    writeln!(s, "component_fraction = {:.6}", diameter.component_fraction)?;
    writeln!(s, "gamma = {:.6}", a.gamma)?;
    writeln!(s, "levels_m = {}", a.levels_m)?;
    writeln!(s, "K = {:.6}", a.k_constant)?;
    writeln!(s, "Z = {:.6}", a.z_constant)?;
    match tessellation.as_ref() {
        Some(t) => {
            writeln!(s, "tessellation_effective_levels = {}", t.effective_levels)?;
            writeln!(
                s,
                "tessellation_all_events_violated = {}",
                t.all_events_violated
            )?;
            writeln!(s, "tessellation_bound = {:.6}", t.bound_value)?;
            writeln!(s, "tessellation_bound_holds = {}", t.bound_holds)?;
        }
        None => writeln!(s, "tessellation = skipped (k != 2)")?,
    }
    let n_real = graph.site_count() as f64;
    match analytic_m(n_real, a.gamma, graph.dimension(), a.k_constant) {
        Ok(m) => writeln!(s, "analytic_m = {m:.6}")?,
        Err(e) => writeln!(s, "analytic_m = undefined ({e})")?,
    }
    match event_probability_bound(n_real, a.gamma, graph.dimension(), a.levels_m, a.z_constant) {
        Ok(b) => {
            writeln!(s, "event_bound_level_m = {:.6e}", b.value)?;
            writeln!(s, "event_bound_saturated = {}", b.saturated)?;
        }
        Err(e) => writeln!(s, "event_bound_level_m = undefined ({e})")?,
    }
    match conjunction_bound(n_real, a.gamma, graph.dimension(), a.levels_m, a.z_constant) {
        Ok(b) => writeln!(s, "conjunction_bound = {:.6e}", b.value)?,
        Err(e) => writeln!(s, "conjunction_bound = undefined ({e})")?,
    }
    s.flush()?;
    println!(
        "diameter {} ({} rows of scaling)",
        diameter.diameter,
        scaling.rows.len()
    );
    Ok(out_dir.join("summary.txt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        assert_eq!(config.node_count(), 64);
        assert_eq!(config.level_count(), 4);
    }

    #[test]
    fn empty_toml_gives_defaults() {
        let config = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(config, ExperimentConfig::default());
    }

    #[test]
    fn sections_parse_and_override() {
        let text = r#"
            seed = 7

            [generator]
            nodes = 9
            probabilities = [1.0, 0.5]
            min_degree = 1

            [basegraph]
            dimension = 2
            side = 4

            [chain]
            steps = 100
            burn_in = 0.1

            [routing]
            trials = 10
            metric = "fidelity-tiebreak"

            [analysis]
            gamma = 0.7
            K = 2.0
            sizes = [4, 8]
        "#;
        let config = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.generator.nodes, 9);
        assert_eq!(config.generator.probabilities, vec![1.0, 0.5]);
        assert_eq!(config.basegraph.side, 4);
        assert_eq!(config.chain.steps, 100);
        assert_eq!(config.routing.metric, "fidelity-tiebreak");
        assert_eq!(config.analysis.k_constant, 2.0);
        assert_eq!(config.analysis.sizes, vec![4, 8]);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentConfig::from_toml("unknown_knob = 3").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("unknown_knob"), "{err}");
        let err = ExperimentConfig::from_toml("[generator]\nwhatever = 1").unwrap_err();
        assert!(err.to_string().contains("whatever"), "{err}");
    }

    #[test]
    fn bad_values_name_the_key() {
        let cases = [
            ("[basegraph]\nside = 1", "basegraph.side"),
            (
                "[generator]\nnodes = 100\n[basegraph]\nside = 4",
                "generator.nodes",
            ),
            (
                "[generator]\nprobabilities = [0.5, 0.9]",
                "generator.probabilities",
            ),
            (
                "[generator]\nprobabilities = [1.5]",
                "generator.probabilities",
            ),
            (
                "[generator]\nlinks_per_level = 0.0",
                "generator.links_per_level",
            ),
            ("[generator]\nmin_degree = 0", "generator.min_degree"),
            ("[generator]\ngeneration = \"warp\"", "generator.generation"),
            (
                "[generator]\nfidelity_min = 0.9\nfidelity_max = 0.5",
                "generator.fidelity_min",
            ),
            ("[chain]\nburn_in = 1.5", "chain.burn_in"),
            ("[chain]\ncheckpoints = 0", "chain.checkpoints"),
            ("[routing]\ntrials = 0", "routing.trials"),
            ("[routing]\nmetric = \"a-star\"", "routing.metric"),
            ("[analysis]\ngamma = 0.2", "analysis.gamma"),
            ("[analysis]\nlevels_m = 0", "analysis.levels_m"),
            ("[analysis]\nK = 0.0", "analysis.K"),
            ("[analysis]\nZ = -1.0", "analysis.Z"),
            ("[analysis]\nsizes = [8, 4]", "analysis.sizes"),
            ("[analysis]\nsizes = [6]", "analysis.sizes"),
            ("[analysis]\nscaling_trials = 0", "analysis.scaling_trials"),
        ];
        for (text, key) in cases {
            let err = ExperimentConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
            assert!(err.to_string().contains(key), "`{text}` -> {err}");
        }
    }

    #[test]
    fn exit_codes_cover_all_variants() {
        assert_eq!(CliError::config("k", "m").exit_code(), 2);
        assert_eq!(parse_error(Path::new("x"), "m").exit_code(), 3);
        assert_eq!(CliError::Guard("g".into()).exit_code(), 4);
        assert_eq!(CliError::Io(std::io::Error::other("io")).exit_code(), 1);
    }

    #[test]
    fn generator_spec_resolves_defaults() {
        let config = ExperimentConfig::default();
        let spec = generator_spec(&config, 5).unwrap();
        assert_eq!(spec.node_count, 64);
        assert_eq!(spec.lattice_side, 8);
        assert_eq!(spec.level_probabilities.len(), 4);
        assert!(spec.level_probabilities.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn pipeline_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();
        let mut config = ExperimentConfig::default();
        config.basegraph.side = 4;
        config.chain.steps = 200;
        config.chain.checkpoints = 4;
        config.routing.trials = 50;
        config.analysis.sizes = vec![4];
        config.analysis.scaling_trials = 20;
        config.validate().unwrap();

        let (nodes, links) = cmd_generate(&config, 11, out).unwrap();
        assert_eq!(nodes, 16);
        assert!(links > 0);
        let network_path = out.join("network.txt");
        let placement = cmd_embed(&config, 11, out, &network_path).unwrap();
        let diag = fs::read_to_string(out.join("chain_diagnostics.csv")).unwrap();
        let mut lines = diag.lines();
        assert_eq!(lines.next(), Some("step,loglik,acceptance_rate"));
        // Header plus step-0 row plus 4 checkpoints.
        assert_eq!(diag.lines().count(), 6);
        assert!(diag.lines().last().unwrap().starts_with("200,"));

        cmd_route(&config, 11, out, &network_path, &placement).unwrap();
        let routes = fs::read_to_string(out.join("routes.csv")).unwrap();
        assert!(
            routes.starts_with("side,n,k,trials,seed,mean_hops,median_hops,p95_hops,delivery_rate")
        );
        assert_eq!(routes.lines().count(), 2);
        let row: Vec<&str> = routes.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[0], "4");
        assert_eq!(row[1], "16");
        assert_eq!(row[3], "50");
        let delivery: f64 = row[8].parse().unwrap();
        assert!((0.0..=1.0).contains(&delivery));

        cmd_analyze(&config, 11, out, &network_path, &placement).unwrap();
        let scaling = fs::read_to_string(out.join("scaling.csv")).unwrap();
        assert_eq!(
            scaling.lines().next(),
            Some("side,n,mean_hops,log2n_sq,ratio")
        );
        assert_eq!(scaling.lines().count(), 2);
        let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
        assert!(summary.contains("K = 1.000000"));
        assert!(summary.contains("Z = 1.000000"));
        assert!(summary.contains("diameter = "));
    }

    #[test]
    fn commands_are_byte_deterministic() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::default();
        config.basegraph.side = 4;
        config.chain.steps = 100;
        config.routing.trials = 20;
        config.analysis.sizes = vec![4];
        config.analysis.scaling_trials = 10;
        for out in [dir_a.path(), dir_b.path()] {
            cmd_generate(&config, 3, out).unwrap();
            let net = out.join("network.txt");
            let placement = cmd_embed(&config, 3, out, &net).unwrap();
            cmd_route(&config, 3, out, &net, &placement).unwrap();
            cmd_analyze(&config, 3, out, &net, &placement).unwrap();
        }
        for name in [
            "network.txt",
            "placement.txt",
            "chain_diagnostics.csv",
            "routes.csv",
            "scaling.csv",
            "tessellation.csv",
            "summary.txt",
        ] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
    }

    #[test]
    fn embed_rejects_oversized_network() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();
        let mut config = ExperimentConfig::default();
        config.basegraph.side = 8;
        cmd_generate(&config, 2, out).unwrap();
        // Shrink the lattice below the node count for the embed step.
        config.basegraph.side = 4;
        let err = cmd_embed(&config, 2, out, &out.join("network.txt")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("basegraph.side"), "{err}");
    }

    #[test]
    fn malformed_network_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("network.txt");
        fs::write(
            &path,
            "nodes 4 generation doubling\nlink 0 zero level 1 prob 0.5 fidelity 1\n",
        )
        .unwrap();
        let config = ExperimentConfig::default();
        let err = cmd_embed(&config, 1, dir.path(), &path).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn zero_steps_keeps_seeded_initial_placement() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();
        let mut config = ExperimentConfig::default();
        config.basegraph.side = 4;
        config.chain.steps = 0;
        cmd_generate(&config, 13, out).unwrap();
        cmd_embed(&config, 13, out, &out.join("network.txt")).unwrap();

        // Rebuild the expected initial placement from the same streams.
        let graph = BaseGraph::new(2, 4).unwrap();
        let occupied = graph.prefix_sites(16).unwrap();
        let mut rng = stream::stream_rng(13, "embed.init");
        let expected = Configuration::random(graph, &occupied, &mut rng).unwrap();
        let written = read_placement_file(&out.join("placement.txt"), graph).unwrap();
        assert_eq!(written.positions(), expected.positions());
    }
}
