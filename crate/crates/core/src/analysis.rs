//! Diameter measurement, box-tessellation diameter bounds, and the
//! polylogarithmic routing-scaling experiment.
//!
//! The diameter of a realized network is measured exactly by repeated BFS
//! on small graphs and estimated by seeded two-sweep probes on large ones.
//! Tessellation carves the lattice box into nested squares of side
//! `side^(gamma^i)` and checks whether every pair of sibling squares is
//! joined by a present link; when all levels pass, the diameter is bounded
//! by `2^(m+2) * side^(gamma^m)`.

use std::collections::HashMap;

use thiserror::Error;

use crate::embedding::{EmbedError, SwapChain};
use crate::lattice::{BaseGraph, Configuration, LatticeError};
use crate::overlay::{generate_overlay, GeneratorSpec, LinkRealization, OverlayError};
use crate::routing::{default_hop_limit, route_ensemble, RouteError, RoutingMetric};
use crate::stream;

/// Component size above which the diameter switches from exact all-pairs
/// BFS to the sampled two-sweep estimator.
pub const EXACT_DIAMETER_LIMIT: usize = 4096;

/// Start nodes probed by the sampled estimator.
pub const DIAMETER_SAMPLE_STARTS: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("tessellation is defined for 2-dimensional lattices, got k={0}")]
    UnsupportedDimension(u32),
    #[error("gamma {got} must lie strictly between {lo} and 1")]
    GammaOutOfRange { got: f64, lo: f64 },
    #[error("at least one tessellation level is required")]
    ZeroLevels,
    #[error("iterated logarithm undefined: need ln ln ln n > 0, got n = {0}")]
    IteratedLogDomain(f64),
    #[error("constant {name} must be positive, got {value}")]
    BadConstant { name: &'static str, value: f64 },
    #[error("scaling sides must be non-empty and strictly ascending")]
    SidesNotAscending,
    #[error("scaling side {0} must be a power of two, at least 2")]
    SideNotPowerOfTwo(u32),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Overlay(#[from] OverlayError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Adjacency lists of the present links, indexed by node.
fn present_adjacency(realization: &LinkRealization<'_>) -> Vec<Vec<u32>> {
    let n = realization.network().node_count() as usize;
    let mut adjacency = vec![Vec::new(); n];
    for link in realization.present_links() {
        adjacency[link.a.index()].push(link.b.0);
        adjacency[link.b.index()].push(link.a.0);
    }
    adjacency
}

/// BFS distances from `start`; `u32::MAX` marks unreachable nodes. Returns
/// the distance vector and the farthest reached node.
fn bfs(adjacency: &[Vec<u32>], start: u32) -> (Vec<u32>, u32, u32) {
    let mut dist = vec![u32::MAX; adjacency.len()];
    dist[start as usize] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut farthest = start;
    let mut eccentricity = 0;
    while let Some(v) = queue.pop_front() {
        let dv = dist[v as usize];
        for &w in &adjacency[v as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dv + 1;
                if dv + 1 > eccentricity {
                    eccentricity = dv + 1;
                    farthest = w;
                }
                queue.push_back(w);
            }
        }
    }
    (dist, farthest, eccentricity)
}

/// Flat compressed adjacency; node v's neighbors sit in
/// `targets[offsets[v]..offsets[v+1]]`. Fast to sweep for repeated BFS.
struct Csr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Csr {
    fn from_realization(realization: &LinkRealization<'_>) -> Self {
        let n = realization.network().node_count() as usize;
        let mut degree = vec![0u32; n + 1];
        for link in realization.present_links() {
            degree[link.a.index() + 1] += 1;
            degree[link.b.index() + 1] += 1;
        }
        let mut offsets = degree;
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; offsets[n] as usize];
        for link in realization.present_links() {
            targets[cursor[link.a.index()] as usize] = link.b.0;
            cursor[link.a.index()] += 1;
            targets[cursor[link.b.index()] as usize] = link.a.0;
            cursor[link.b.index()] += 1;
        }
        Self { offsets, targets }
    }

    fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// BFS from `start` reusing the caller's scratch buffers; returns the
    /// farthest node and its distance.
    fn bfs(&self, start: u32, dist: &mut [u32], queue: &mut Vec<u32>) -> (u32, u32) {
        dist.fill(u32::MAX);
        dist[start as usize] = 0;
        queue.clear();
        queue.push(start);
        let mut head = 0;
        let mut farthest = start;
        let mut eccentricity = 0;
        while head < queue.len() {
            let v = queue[head] as usize;
            head += 1;
            let next = dist[v] + 1;
            for &w in &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = next;
                    queue.push(w);
                    if next > eccentricity {
                        eccentricity = next;
                        farthest = w;
                    }
                }
            }
        }
        (farthest, eccentricity)
    }
}

/// Exact diameter over `members` by running 64 BFS sources per pass with
/// bitmask frontiers: one u64 per node tracks which sources reached it.
fn exact_diameter_bitset(csr: &Csr, members: &[u32]) -> u32 {
    let n = csr.node_count();
    let mut reached = vec![0u64; n];
    let mut frontier = vec![0u64; n];
    let mut next = vec![0u64; n];
    let mut diameter = 0u32;
    for batch in members.chunks(64) {
        reached.fill(0);
        frontier.fill(0);
        for (i, &s) in batch.iter().enumerate() {
            let bit = 1u64 << i;
            reached[s as usize] = bit;
            frontier[s as usize] = bit;
        }
        let mut depth = 0u32;
        loop {
            next.fill(0);
            for (v, &fv) in frontier.iter().enumerate() {
                if fv == 0 {
                    continue;
                }
                let span = csr.offsets[v] as usize..csr.offsets[v + 1] as usize;
                for &w in &csr.targets[span] {
                    let new = fv & !reached[w as usize];
                    if new != 0 {
                        next[w as usize] |= new;
                    }
                }
            }
            let mut any = false;
            for (nw, rw) in next.iter_mut().zip(&mut reached) {
                *nw &= !*rw;
                if *nw != 0 {
                    *rw |= *nw;
                    any = true;
                }
            }
            if !any {
                break;
            }
            depth += 1;
            diameter = diameter.max(depth);
            std::mem::swap(&mut frontier, &mut next);
        }
    }
    diameter
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiameterReport {
    /// Shortest-path diameter of the largest connected component.
    pub diameter: u64,
    /// True when computed by all-pairs BFS, false for the sampled estimate.
    pub exact: bool,
    pub component_nodes: u32,
    /// Largest-component share of all nodes.
    pub component_fraction: f64,
    /// BFS start nodes used.
    pub bfs_starts: u32,
}

/// Diameter of the largest component of the present links.
///
/// Components up to [`EXACT_DIAMETER_LIMIT`] nodes get exact all-pairs BFS.
/// Larger ones get a seeded two-sweep estimate from
/// [`DIAMETER_SAMPLE_STARTS`] start nodes, which never exceeds the true
/// diameter.
pub fn measured_diameter(
    realization: &LinkRealization<'_>,
    _config: &Configuration,
) -> Result<DiameterReport, AnalysisError> {
    let n = realization.network().node_count();
    if n == 0 {
        return Err(AnalysisError::EmptyGraph);
    }
    let csr = Csr::from_realization(realization);
    let mut dist = vec![u32::MAX; csr.node_count()];
    let mut queue = Vec::with_capacity(csr.node_count());
    // Largest connected component by flood fill.
    let mut assigned = vec![false; csr.node_count()];
    let mut largest: Vec<u32> = Vec::new();
    for start in 0..csr.node_count() as u32 {
        if assigned[start as usize] {
            continue;
        }
        csr.bfs(start, &mut dist, &mut queue);
        for &v in queue.iter() {
            assigned[v as usize] = true;
        }
        if queue.len() > largest.len() {
            largest = queue.clone();
        }
    }
    let members = largest;
    let component_nodes = members.len() as u32;
    let component_fraction = f64::from(component_nodes) / f64::from(n);
    if members.len() <= EXACT_DIAMETER_LIMIT {
        let diameter = exact_diameter_bitset(&csr, &members);
        Ok(DiameterReport {
            diameter: u64::from(diameter),
            exact: true,
            component_nodes,
            component_fraction,
            bfs_starts: component_nodes,
        })
    } else {
        // Two-sweep probes: BFS from a start, then BFS again from the
        // farthest node found; the larger eccentricity lower-bounds the
        // diameter. Starts are spread deterministically over the component.
        let starts = DIAMETER_SAMPLE_STARTS.min(members.len());
        let stride = members.len() / starts;
        let mut diameter = 0u32;
        for i in 0..starts {
            let start = members[i * stride];
            let (far, ecc1) = csr.bfs(start, &mut dist, &mut queue);
            let (_, ecc2) = csr.bfs(far, &mut dist, &mut queue);
            diameter = diameter.max(ecc1).max(ecc2);
        }
        Ok(DiameterReport {
            diameter: u64::from(diameter),
            exact: false,
            component_nodes,
            component_fraction,
            bfs_starts: starts as u32,
        })
    }
}

/// Nested-square tessellation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TessellationReport {
    pub gamma: f64,
    /// Levels requested by the caller.
    pub requested_levels: u32,
    /// Levels actually tessellated; smaller than requested when square
    /// sides shrink below 2 lattice spacings.
    pub effective_levels: u32,
    pub clamped: bool,
    /// Per level, true when every pair of occupied sibling squares is
    /// joined by at least one present link.
    pub events_violated: Vec<bool>,
    pub all_events_violated: bool,
    /// `2^(m+2) * side^(gamma^m)` at the effective level count m.
    pub bound_value: f64,
    pub measured_diameter: u64,
    /// True when the measured diameter is within the bound. Meaningful
    /// only when all events are violated.
    pub bound_holds: bool,
}

/// Identifies a square by the chain of per-level cell indices leading to it.
type SquareKey = Vec<(u64, u64)>;

/// Sibling cell pairs (lo, hi) under a shared parent that a present link
/// joins, collected per tessellation level.
type JoinedPairs = std::collections::HashSet<(SquareKey, (u64, u64), (u64, u64))>;

/// The chain of nested-square cell indices containing each node, one entry
/// per tessellation level.
fn square_keys(config: &Configuration, sides: &[f64]) -> Vec<SquareKey> {
    config
        .positions()
        .iter()
        .map(|pos| {
            let x = f64::from(pos.coords()[0]);
            let y = f64::from(pos.coords()[1]);
            let mut origin = (0.0f64, 0.0f64);
            let mut key: SquareKey = Vec::with_capacity(sides.len());
            for &s in sides {
                let cx = ((x - origin.0) / s).floor();
                let cy = ((y - origin.1) / s).floor();
                origin = (origin.0 + cx * s, origin.1 + cy * s);
                key.push((cx as u64, cy as u64));
            }
            key
        })
        .collect()
}

/// Tessellates the lattice box into nested squares and checks, level by
/// level, that every pair of occupied sibling squares is joined by a
/// present link. Empty squares take no part in the events.
pub fn tessellate_and_check(
    realization: &LinkRealization<'_>,
    config: &Configuration,
    gamma: f64,
    levels_m: u32,
) -> Result<TessellationReport, AnalysisError> {
    let graph = config.graph();
    if graph.dimension() != 2 {
        return Err(AnalysisError::UnsupportedDimension(graph.dimension()));
    }
    if !(gamma > 0.5 && gamma < 1.0) {
        return Err(AnalysisError::GammaOutOfRange {
            got: gamma,
            lo: 0.5,
        });
    }
    if levels_m == 0 {
        return Err(AnalysisError::ZeroLevels);
    }
    let side = f64::from(graph.side());
    // Square sides per level; stop once a square could hold at most one
    // lattice site per axis, which makes deeper events meaningless.
    let mut sides = Vec::new();
    for i in 1..=levels_m {
        let s = side.powf(gamma.powi(i as i32));
        if s < 2.0 {
            break;
        }
        sides.push(s);
    }
    let effective = sides.len() as u32;
    let clamped = effective < levels_m;
    let node_keys = square_keys(config, &sides);

    // Record which sibling square pairs are joined by a present link.
    let mut joined: Vec<JoinedPairs> = vec![JoinedPairs::new(); sides.len()];
    for link in realization.present_links() {
        let ka = &node_keys[link.a.index()];
        let kb = &node_keys[link.b.index()];
        for level in 0..sides.len() {
            if ka[..level] != kb[..level] {
                break; // different parents from here down
            }
            if ka[level] != kb[level] {
                let parent = ka[..level].to_vec();
                let (lo, hi) = if ka[level] <= kb[level] {
                    (ka[level], kb[level])
                } else {
                    (kb[level], ka[level])
                };
                joined[level].insert((parent, lo, hi));
            }
        }
    }

    // A level's event is violated when, within every occupied parent, every
    // pair of occupied sibling squares has a joining link.
    let mut events_violated = Vec::with_capacity(sides.len());
    for level in 0..sides.len() {
        let mut by_parent: HashMap<SquareKey, Vec<(u64, u64)>> = HashMap::new();
        for key in &node_keys {
            let children = by_parent.entry(key[..level].to_vec()).or_default();
            if !children.contains(&key[level]) {
                children.push(key[level]);
            }
        }
        let mut violated = true;
        'parents: for (parent, mut children) in by_parent {
            children.sort_unstable();
            for i in 0..children.len() {
                for j in i + 1..children.len() {
                    let pair = (parent.clone(), children[i], children[j]);
                    if !joined[level].contains(&pair) {
                        violated = false;
                        break 'parents;
                    }
                }
            }
        }
        events_violated.push(violated);
    }

    let all_events_violated = events_violated.iter().all(|&v| v);
    let bound_value = 2f64.powi(effective as i32 + 2) * side.powf(gamma.powi(effective as i32));
    let diameter = measured_diameter(realization, config)?;
    Ok(TessellationReport {
        gamma,
        requested_levels: levels_m,
        effective_levels: effective,
        clamped,
        events_violated,
        all_events_violated,
        bound_value,
        measured_diameter: diameter.diameter,
        bound_holds: diameter.diameter as f64 <= bound_value,
    })
}

/// Single-level tessellation implication.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleLevelReport {
    pub gamma: f64,
    /// True when every pair of occupied level-1 squares has a joining link.
    pub all_pairs_joined: bool,
    /// Largest induced-subgraph diameter over the occupied squares;
    /// `None` when some square is internally disconnected.
    pub max_square_diameter: Option<u64>,
    pub measured_diameter: u64,
    /// True when the implication could not be tested: premise false or a
    /// square internally disconnected.
    pub vacuous: bool,
    /// diameter <= 2 * max_square_diameter + 1, or true when vacuous.
    pub implication_holds: bool,
}

/// Checks the one-level bound: when every pair of occupied level-1 squares
/// is joined by a present link, the diameter is at most twice the largest
/// within-square diameter plus one.
pub fn single_level_check(
    realization: &LinkRealization<'_>,
    config: &Configuration,
    gamma: f64,
) -> Result<SingleLevelReport, AnalysisError> {
    let report = tessellate_and_check(realization, config, gamma, 1)?;
    let all_pairs_joined = report.events_violated.first().copied().unwrap_or(true);

    // Induced diameters within each occupied level-1 square.
    let side = f64::from(config.graph().side());
    let s1 = side.powf(gamma);
    let mut members: HashMap<(u64, u64), Vec<u32>> = HashMap::new();
    for (node, pos) in config.positions().iter().enumerate() {
        let cx = (f64::from(pos.coords()[0]) / s1).floor() as u64;
        let cy = (f64::from(pos.coords()[1]) / s1).floor() as u64;
        members.entry((cx, cy)).or_default().push(node as u32);
    }
    let adjacency = present_adjacency(realization);
    let mut max_square_diameter = Some(0u64);
    'squares: for nodes in members.values() {
        let index_of: HashMap<u32, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        let mut induced = vec![Vec::new(); nodes.len()];
        for (i, &v) in nodes.iter().enumerate() {
            for &w in &adjacency[v as usize] {
                if let Some(&j) = index_of.get(&w) {
                    induced[i].push(j);
                }
            }
        }
        for i in 0..nodes.len() as u32 {
            let (dist, _, ecc) = bfs(&induced, i);
            if dist.contains(&u32::MAX) {
                max_square_diameter = None;
                break 'squares;
            }
            max_square_diameter = max_square_diameter.map(|d| d.max(u64::from(ecc)));
        }
    }

    let vacuous = !all_pairs_joined || max_square_diameter.is_none();
    let implication_holds =
        vacuous || report.measured_diameter <= 2 * max_square_diameter.unwrap_or(0) + 1;
    Ok(SingleLevelReport {
        gamma,
        all_pairs_joined,
        max_square_diameter,
        measured_diameter: report.measured_diameter,
        vacuous,
        implication_holds,
    })
}

/// Closed-form level count where the tessellation bound turns
/// polylogarithmic:
/// `(ln ln n - ln ln ln n + ln(4 gamma - k) - ln K) / ln(1/gamma)`.
pub fn analytic_m(n: f64, gamma: f64, k: u32, big_k: f64) -> Result<f64, AnalysisError> {
    if !(big_k > 0.0) {
        return Err(AnalysisError::BadConstant {
            name: "K",
            value: big_k,
        });
    }
    let lo = f64::from(k) / 4.0;
    if !(gamma > lo && gamma < 1.0) {
        return Err(AnalysisError::GammaOutOfRange { got: gamma, lo });
    }
    let lll = n.ln().ln().ln();
    if !(lll > 0.0) {
        return Err(AnalysisError::IteratedLogDomain(n));
    }
    let numerator = n.ln().ln() - lll + (4.0 * gamma - f64::from(k)).ln() - big_k.ln();
    Ok(numerator / (1.0 / gamma).ln())
}

/// A probability bound together with an underflow/overflow marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventBound {
    pub value: f64,
    /// Natural log of the bound; finite even when `value` saturates.
    pub log_value: f64,
    /// True when the bound under- or overflowed f64 range.
    pub saturated: bool,
}

fn bound_from_log(log_value: f64) -> EventBound {
    let min_ln = f64::MIN_POSITIVE.ln();
    let max_ln = f64::MAX.ln();
    if log_value < min_ln {
        EventBound {
            value: 0.0,
            log_value,
            saturated: true,
        }
    } else if log_value > max_ln {
        EventBound {
            value: f64::INFINITY,
            log_value,
            saturated: true,
        }
    } else {
        EventBound {
            value: log_value.exp(),
            log_value,
            saturated: false,
        }
    }
}

/// Tail bound on a single level-i tessellation event:
/// `n^4 * exp(-Z * n^(gamma^(i-1)) * (4 gamma - k))`.
pub fn event_probability_bound(
    n: f64,
    gamma: f64,
    k: u32,
    level_i: u32,
    z: f64,
) -> Result<EventBound, AnalysisError> {
    if !(z > 0.0) {
        return Err(AnalysisError::BadConstant {
            name: "Z",
            value: z,
        });
    }
    if level_i == 0 {
        return Err(AnalysisError::ZeroLevels);
    }
    let slack = 4.0 * gamma - f64::from(k);
    if slack < 0.0 {
        let lo = f64::from(k) / 4.0;
        return Err(AnalysisError::GammaOutOfRange { got: gamma, lo });
    }
    let scale = n.powf(gamma.powi(level_i as i32 - 1));
    Ok(bound_from_log(4.0 * n.ln() - z * scale * slack))
}

/// Union bound over all m levels: m times the level-m event bound.
pub fn conjunction_bound(
    n: f64,
    gamma: f64,
    k: u32,
    levels_m: u32,
    z: f64,
) -> Result<EventBound, AnalysisError> {
    let level = event_probability_bound(n, gamma, k, levels_m, z)?;
    Ok(bound_from_log(f64::from(levels_m).ln() + level.log_value))
}

/// Parameters of the routing-scaling experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSpec {
    /// Lattice sides, strictly ascending powers of two.
    pub sides: Vec<u32>,
    /// Routes per size.
    pub trials: u32,
    pub dimension: u32,
    /// Per-level link probability template; extended by repeating the last
    /// entry or truncated to match each size's level count.
    pub level_probabilities: Vec<f64>,
    /// Expected long links per node, shared across levels >= 2, so that
    /// each size keeps the same total long-link budget per node.
    pub long_links_per_node: f64,
    pub min_degree: u32,
    /// Swap-chain steps before routing; 0 routes on the planted placement.
    pub embed_steps: u64,
    /// Hop budget; `None` uses the default `4 (log2 n)^2 + 16`.
    pub hop_limit: Option<u32>,
    pub metric: RoutingMetric,
    pub seed: u64,
}

impl ScalingSpec {
    pub fn new(sides: Vec<u32>, trials: u32, seed: u64) -> Self {
        Self {
            sides,
            trials,
            dimension: 2,
            level_probabilities: vec![1.0],
            long_links_per_node: 2.0,
            min_degree: 2,
            embed_steps: 0,
            hop_limit: None,
            metric: RoutingMetric::L1,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub side: u32,
    pub n: u64,
    pub mean_hops: f64,
    pub log2n_sq: f64,
    pub ratio: f64,
    pub delivery_rate: f64,
}

/// Rows ordered by n ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
}

/// Level count for a power-of-two side: spans 1, 2, 4, ..., side.
fn level_count(side: u32) -> u32 {
    side.trailing_zeros() + 1
}

/// Extends or truncates the probability template to `levels` entries.
pub(crate) fn fit_probabilities(template: &[f64], levels: u32) -> Vec<f64> {
    let last = *template.last().unwrap_or(&1.0);
    (0..levels as usize)
        .map(|i| template.get(i).copied().unwrap_or(last))
        .collect()
}

/// Runs the mean-hops experiment across sizes and reports
/// `mean_hops / (log2 n)^2` per size.
pub fn scaling_experiment(spec: &ScalingSpec) -> Result<ScalingReport, AnalysisError> {
    if spec.sides.is_empty() || spec.sides.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::SidesNotAscending);
    }
    for &side in &spec.sides {
        if side < 2 || !side.is_power_of_two() {
            return Err(AnalysisError::SideNotPowerOfTwo(side));
        }
    }
    if spec.trials == 0 {
        return Err(AnalysisError::NoTrials);
    }
    if !(spec.long_links_per_node > 0.0) {
        return Err(AnalysisError::BadConstant {
            name: "long_links_per_node",
            value: spec.long_links_per_node,
        });
    }
    let generate_seed = stream::derive_seed(spec.seed, "scaling.generate");
    let embed_seed = stream::derive_seed(spec.seed, "scaling.embed");
    let route_seed = stream::derive_seed(spec.seed, "scaling.route");
    let mut rows = Vec::with_capacity(spec.sides.len());
    for (idx, &side) in spec.sides.iter().enumerate() {
        let n = u64::from(side).pow(spec.dimension);
        let levels = level_count(side);
        let mut gen_spec = GeneratorSpec::new(
            n as u32,
            side,
            spec.dimension,
            fit_probabilities(&spec.level_probabilities, levels),
            stream::mix_index(generate_seed, idx as u64),
        );
        gen_spec.min_degree = spec.min_degree;
        // Fixed long-link budget per node, split across the long levels.
        gen_spec.links_per_level = spec.long_links_per_node / f64::from(levels.max(2) - 1);
        let network = generate_overlay(&gen_spec)?;
        let config = if spec.embed_steps == 0 {
            Configuration::planted(config_graph(spec.dimension, side)?, n as u32)?
        } else {
            let graph = config_graph(spec.dimension, side)?;
            let occupied = graph.prefix_sites(n)?;
            let mut init_rng = stream::indexed_rng(embed_seed, "scaling.init", idx as u64);
            let init = Configuration::random(graph, &occupied, &mut init_rng)?;
            let mut chain =
                SwapChain::new(&network, init, stream::mix_index(embed_seed, idx as u64))?;
            chain.run(spec.embed_steps)?;
            chain.into_config()
        };
        let hop_limit = spec.hop_limit.unwrap_or_else(|| default_hop_limit(n));
        let summary = route_ensemble(
            &network,
            &config,
            spec.trials,
            stream::mix_index(route_seed, idx as u64),
            hop_limit,
            spec.metric,
        )?;
        let log2n_sq = (n as f64).log2().powi(2);
        rows.push(ScalingRow {
            side,
            n,
            mean_hops: summary.mean_hops,
            log2n_sq,
            ratio: summary.mean_hops / log2n_sq,
            delivery_rate: summary.delivery_rate,
        });
    }
    Ok(ScalingReport { rows })
}

fn config_graph(dimension: u32, side: u32) -> Result<BaseGraph, AnalysisError> {
    Ok(BaseGraph::new(dimension, side)?)
}
