//! Leveled entangled overlay networks.
//!
//! An overlay network is a set of nodes joined by probabilistic entangled
//! links. Each link carries a level: under the doubling architecture a
//! level-l link spans `2^(l-1)` hops of the underlying repeater chain, under
//! next-generation repeaters it spans `l` hops. Links exist only with a
//! per-link probability, so any notion of "the" topology is a draw: a
//! [`LinkRealization`] freezes one such draw for routing and analysis.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::lattice::{ring_offsets, BaseGraph, LatticeError};
use crate::stream;

/// Dense overlay node identifier, `0..node_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Repeater architecture; fixes how link level maps to spanned hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepeaterGeneration {
    Doubling,
    NextGeneration,
}

impl fmt::Display for RepeaterGeneration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Doubling => write!(f, "doubling"),
            Self::NextGeneration => write!(f, "nextgen"),
        }
    }
}

impl FromStr for RepeaterGeneration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "doubling" => Ok(Self::Doubling),
            "nextgen" => Ok(Self::NextGeneration),
            other => Err(format!(
                "unknown generation `{other}` (expected doubling|nextgen)"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OverlayError {
    #[error("link level must be at least 1")]
    LevelZero,
    #[error("level {0} overflows the hop distance range")]
    LevelTooLarge(u32),
    #[error("link endpoints must differ, got {0} twice")]
    SelfLink(NodeId),
    #[error("node {node} out of range for a network of {count} nodes")]
    NodeOutOfRange { node: NodeId, count: u32 },
    #[error("duplicate link between {0} and {1}")]
    DuplicateLink(NodeId, NodeId),
    #[error("link probability must lie in (0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("fidelity must lie in [0, 1], got {0}")]
    FidelityOutOfRange(f64),
    #[error("mixture is empty")]
    EmptyMixture,
    #[error("mixture weight {0} is negative")]
    NegativeWeight(f64),
    #[error("mixture weights sum to {0}, expected 1 within 1e-9")]
    WeightsNotNormalized(f64),
    #[error("overlap magnitude {0} exceeds 1")]
    OverlapTooLarge(f64),
    #[error("network must contain at least {needed} nodes, got {got}")]
    TooFewNodes { needed: u32, got: u32 },
    #[error("{needed} nodes exceed the lattice capacity of {available} sites")]
    CapacityExceeded { needed: u64, available: u64 },
    #[error("level_probabilities must be non-increasing (level {0} rises)")]
    ProbabilitiesIncrease(u32),
    #[error("level_probabilities must not be empty")]
    NoLevels,
    #[error("inclusion rate {0} must lie in [0, 1]")]
    InclusionOutOfRange(f64),
    #[error("inclusion rates cover {got} levels, spec has {expected}")]
    InclusionCount { expected: usize, got: usize },
    #[error("links_per_level must be positive, got {0}")]
    LinksPerLevelNotPositive(f64),
    #[error("min_degree must be at least 1")]
    MinDegreeZero,
    #[error("fidelity range [{0}, {1}] is invalid")]
    BadFidelityRange(f64, f64),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Hops spanned by a level-`level` link under `generation`.
///
/// Doubling: `2^(level-1)`. Next generation: `level`.
pub fn hop_distance(level: u32, generation: RepeaterGeneration) -> Result<u64, OverlayError> {
    if level == 0 {
        return Err(OverlayError::LevelZero);
    }
    match generation {
        RepeaterGeneration::Doubling => {
            if level > 63 {
                return Err(OverlayError::LevelTooLarge(level));
            }
            Ok(1u64 << (level - 1))
        }
        RepeaterGeneration::NextGeneration => Ok(u64::from(level)),
    }
}

/// Fidelity of an entangled state against a target state, given the mixture
/// weights and precomputed overlaps: `F = sum_i p_i |<Psi|psi_i>|^2`.
///
/// Weights must be non-negative and sum to 1 within 1e-9; overlap magnitudes
/// must not exceed 1.
pub fn entanglement_fidelity(mixture: &[(f64, Complex64)]) -> Result<f64, OverlayError> {
    if mixture.is_empty() {
        return Err(OverlayError::EmptyMixture);
    }
    let mut total_weight = 0.0;
    let mut fidelity = 0.0;
    for &(weight, overlap) in mixture {
        if weight < 0.0 {
            return Err(OverlayError::NegativeWeight(weight));
        }
        let mag_sq = overlap.norm_sqr();
        if mag_sq > 1.0 + 1e-9 {
            return Err(OverlayError::OverlapTooLarge(mag_sq.sqrt()));
        }
        total_weight += weight;
        fidelity += weight * mag_sq;
    }
    if (total_weight - 1.0).abs() > 1e-9 {
        return Err(OverlayError::WeightsNotNormalized(total_weight));
    }
    Ok(fidelity.clamp(0.0, 1.0))
}

/// A probabilistic entangled link between two overlay nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EntangledLink {
    pub a: NodeId,
    pub b: NodeId,
    pub level: u32,
    pub probability: f64,
    pub fidelity: f64,
}

impl EntangledLink {
    pub fn other_end(&self, node: NodeId) -> Option<NodeId> {
        if node == self.a {
            Some(self.b)
        } else if node == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// A validated overlay network with adjacency prebuilt per node.
#[derive(Debug, Clone)]
pub struct OverlayNetwork {
    node_count: u32,
    links: Vec<EntangledLink>,
    generation: RepeaterGeneration,
    adjacency: Vec<Vec<(NodeId, u32)>>,
}

impl OverlayNetwork {
    pub fn new(
        node_count: u32,
        links: Vec<EntangledLink>,
        generation: RepeaterGeneration,
    ) -> Result<Self, OverlayError> {
        if node_count == 0 {
            return Err(OverlayError::TooFewNodes { needed: 1, got: 0 });
        }
        let mut adjacency = vec![Vec::new(); node_count as usize];
        let mut seen = HashSet::with_capacity(links.len());
        for (idx, link) in links.iter().enumerate() {
            if link.level == 0 {
                return Err(OverlayError::LevelZero);
            }
            if link.a == link.b {
                return Err(OverlayError::SelfLink(link.a));
            }
            for node in [link.a, link.b] {
                if node.0 >= node_count {
                    return Err(OverlayError::NodeOutOfRange {
                        node,
                        count: node_count,
                    });
                }
            }
            if !(link.probability > 0.0 && link.probability <= 1.0) {
                return Err(OverlayError::ProbabilityOutOfRange(link.probability));
            }
            if !(0.0..=1.0).contains(&link.fidelity) {
                return Err(OverlayError::FidelityOutOfRange(link.fidelity));
            }
            let key = (link.a.min(link.b), link.a.max(link.b));
            if !seen.insert(key) {
                return Err(OverlayError::DuplicateLink(key.0, key.1));
            }
            adjacency[link.a.index()].push((link.b, idx as u32));
            adjacency[link.b.index()].push((link.a, idx as u32));
        }
        Ok(Self {
            node_count,
            links,
            generation,
            adjacency,
        })
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    pub fn links(&self) -> &[EntangledLink] {
        &self.links
    }

    pub fn generation(&self) -> RepeaterGeneration {
        self.generation
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency.get(node.index()).map_or(0, Vec::len)
    }

    /// Entangled contacts of `node` with the joining link.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = (NodeId, &EntangledLink)> {
        self.adjacency
            .get(node.index())
            .into_iter()
            .flatten()
            .map(|&(peer, idx)| (peer, &self.links[idx as usize]))
    }

    pub fn neighbor_ids(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency
            .get(node.index())
            .into_iter()
            .flatten()
            .map(|&(peer, _)| peer)
    }

    pub fn link_between(&self, a: NodeId, b: NodeId) -> Option<&EntangledLink> {
        self.adjacency
            .get(a.index())?
            .iter()
            .find(|&&(peer, _)| peer == b)
            .map(|&(_, idx)| &self.links[idx as usize])
    }
}

/// Parameters for the planted overlay generator.
///
/// Nodes are laid out on a virtual lattice (row-major prefix of the sites),
/// every pair of adjacent nodes gets a level-1 link, and each level `l >= 2`
/// adds links between nodes at exact lattice separation `hop_distance(l)`,
/// each candidate pair kept with a per-level inclusion rate. The layout is
/// the planted ground truth that embedding experiments try to recover.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub node_count: u32,
    pub lattice_side: u32,
    pub dimension: u32,
    /// Link existence probability per level; non-increasing, in (0, 1].
    pub level_probabilities: Vec<f64>,
    pub generation: RepeaterGeneration,
    /// Per-pair inclusion rates per level. `None` picks rates so each node
    /// expects about `links_per_level` links at every level >= 2. Level 1 is
    /// always complete: the lattice backbone is never thinned.
    pub level_inclusion: Option<Vec<f64>>,
    pub links_per_level: f64,
    /// Best-effort degree floor, capped at `node_count - 1`.
    pub min_degree: u32,
    /// Per-link fidelity sampled uniformly from this inclusive range.
    pub fidelity_range: (f64, f64),
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(
        node_count: u32,
        lattice_side: u32,
        dimension: u32,
        level_probabilities: Vec<f64>,
        seed: u64,
    ) -> Self {
        Self {
            node_count,
            lattice_side,
            dimension,
            level_probabilities,
            generation: RepeaterGeneration::Doubling,
            level_inclusion: None,
            links_per_level: 1.0,
            min_degree: 2,
            fidelity_range: (1.0, 1.0),
            seed,
        }
    }

    pub fn levels(&self) -> u32 {
        self.level_probabilities.len() as u32
    }

    /// Checks every range and capacity constraint; returns the base graph
    /// these settings generate over.
    pub fn validate(&self) -> Result<BaseGraph, OverlayError> {
        if self.node_count < 2 {
            return Err(OverlayError::TooFewNodes {
                needed: 2,
                got: self.node_count,
            });
        }
        let graph = BaseGraph::new(self.dimension, self.lattice_side)?;
        if u64::from(self.node_count) > graph.site_count() {
            return Err(OverlayError::CapacityExceeded {
                needed: u64::from(self.node_count),
                available: graph.site_count(),
            });
        }
        if self.level_probabilities.is_empty() {
            return Err(OverlayError::NoLevels);
        }
        for (i, &p) in self.level_probabilities.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(OverlayError::ProbabilityOutOfRange(p));
            }
            if i > 0 && p > self.level_probabilities[i - 1] {
                return Err(OverlayError::ProbabilitiesIncrease(i as u32 + 1));
            }
        }
        if let Some(rates) = &self.level_inclusion {
            if rates.len() != self.level_probabilities.len() {
                return Err(OverlayError::InclusionCount {
                    expected: self.level_probabilities.len(),
                    got: rates.len(),
                });
            }
            for &r in rates {
                if !(0.0..=1.0).contains(&r) {
                    return Err(OverlayError::InclusionOutOfRange(r));
                }
            }
        }
        if !(self.links_per_level > 0.0) {
            return Err(OverlayError::LinksPerLevelNotPositive(self.links_per_level));
        }
        if self.min_degree == 0 {
            return Err(OverlayError::MinDegreeZero);
        }
        let (lo, hi) = self.fidelity_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(OverlayError::BadFidelityRange(lo, hi));
        }
        Ok(graph)
    }
}

/// Generates a planted overlay network from `spec`.
///
/// Deterministic for a given spec: topology, fidelity and degree-repair
/// draws run on separate named streams so that changing one knob never
/// perturbs the draws of another.
pub fn generate_overlay(spec: &GeneratorSpec) -> Result<OverlayNetwork, OverlayError> {
    let graph = spec.validate()?;
    let occupied = u64::from(spec.node_count);
    let mut topology = stream::stream_rng(spec.seed, "generate.topology");
    let mut fidelities = stream::stream_rng(spec.seed, "generate.fidelity");
    let mut repair = stream::stream_rng(spec.seed, "generate.degree");

    let mut links: Vec<EntangledLink> = Vec::new();
    let mut present: HashSet<(u32, u32)> = HashSet::new();
    let mut degrees = vec![0u32; spec.node_count as usize];
    let (flo, fhi) = spec.fidelity_range;

    let push_link = |a: u32,
                     b: u32,
                     level: u32,
                     links: &mut Vec<EntangledLink>,
                     present: &mut HashSet<(u32, u32)>,
                     degrees: &mut [u32],
                     fid_rng: &mut rand_chacha::ChaCha12Rng| {
        let key = (a.min(b), a.max(b));
        if !present.insert(key) {
            return false;
        }
        links.push(EntangledLink {
            a: NodeId(a),
            b: NodeId(b),
            level,
            probability: spec.level_probabilities[(level - 1) as usize],
            fidelity: fid_rng.gen_range(flo..=fhi),
        });
        degrees[a as usize] += 1;
        degrees[b as usize] += 1;
        true
    };

    for level in 1..=spec.levels() {
        let separation = hop_distance(level, spec.generation)?;
        let candidates = candidate_pairs(&graph, occupied, separation);
        if candidates.is_empty() {
            continue;
        }
        let rate = if level == 1 {
            1.0
        } else if let Some(rates) = &spec.level_inclusion {
            rates[(level - 1) as usize]
        } else {
            // Expected per-node degree at this level ~= links_per_level.
            let per_pair =
                spec.links_per_level * f64::from(spec.node_count) / (2.0 * candidates.len() as f64);
            per_pair.min(1.0)
        };
        for (a, b) in candidates {
            if rate >= 1.0 || topology.gen::<f64>() < rate {
                push_link(
                    a,
                    b,
                    level,
                    &mut links,
                    &mut present,
                    &mut degrees,
                    &mut fidelities,
                );
            }
        }
    }

    // Degree repair: nodes below the floor link to the nearest unlinked node
    // at a level-consistent separation, chosen uniformly among candidates.
    let target = spec.min_degree.min(spec.node_count - 1);
    for node in 0..spec.node_count {
        'levels: for level in 1..=spec.levels() {
            if degrees[node as usize] >= target {
                break;
            }
            let separation = hop_distance(level, spec.generation)?;
            let mut partners = partners_at(&graph, occupied, node, separation);
            while degrees[node as usize] < target && !partners.is_empty() {
                let pick = repair.gen_range(0..partners.len());
                let partner = partners.swap_remove(pick);
                let key = (node.min(partner), node.max(partner));
                if present.contains(&key) {
                    continue;
                }
                push_link(
                    node,
                    partner,
                    level,
                    &mut links,
                    &mut present,
                    &mut degrees,
                    &mut fidelities,
                );
            }
            if degrees[node as usize] >= target {
                break 'levels;
            }
        }
    }

    OverlayNetwork::new(spec.node_count, links, spec.generation)
}

/// Unordered occupied pairs at exact L1 separation, each counted once.
fn candidate_pairs(graph: &BaseGraph, occupied: u64, separation: u64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let offsets: Vec<Vec<i64>> = ring_offsets(graph.dimension(), separation)
        .into_iter()
        .filter(|o| lex_positive(o))
        .collect();
    for site in 0..occupied {
        let pos = graph.site_position(site).expect("occupied site in range");
        for off in &offsets {
            if let Some(peer) = offset_site(graph, pos.coords(), off) {
                if peer < occupied {
                    out.push((site as u32, peer as u32));
                }
            }
        }
    }
    out
}

/// Occupied nodes at exact L1 separation from `node`, both ring halves.
fn partners_at(graph: &BaseGraph, occupied: u64, node: u32, separation: u64) -> Vec<u32> {
    let pos = graph
        .site_position(u64::from(node))
        .expect("node site in range");
    ring_offsets(graph.dimension(), separation)
        .iter()
        .filter_map(|off| offset_site(graph, pos.coords(), off))
        .filter(|&s| s < occupied)
        .map(|s| s as u32)
        .collect()
}

fn offset_site(graph: &BaseGraph, coords: &[u32], offset: &[i64]) -> Option<u64> {
    let mut idx = 0u64;
    for (&c, &o) in coords.iter().zip(offset) {
        let v = i64::from(c) + o;
        if v < 0 || v >= i64::from(graph.side()) {
            return None;
        }
        idx = idx * u64::from(graph.side()) + v as u64;
    }
    Some(idx)
}

fn lex_positive(offset: &[i64]) -> bool {
    for &v in offset {
        if v != 0 {
            return v > 0;
        }
    }
    false
}

/// One Bernoulli draw per link, in link order, on the `realize` stream.
pub fn realize_links(network: &OverlayNetwork, seed: u64) -> LinkRealization<'_> {
    let mut rng = stream::stream_rng(seed, "realize");
    let present = network
        .links()
        .iter()
        .map(|link| rng.gen::<f64>() < link.probability)
        .collect();
    LinkRealization {
        network,
        present,
        seed,
    }
}

/// A frozen draw of link presence for one routing or analysis pass.
#[derive(Debug, Clone)]
pub struct LinkRealization<'a> {
    network: &'a OverlayNetwork,
    present: Vec<bool>,
    seed: u64,
}

impl<'a> LinkRealization<'a> {
    pub fn network(&self) -> &'a OverlayNetwork {
        self.network
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_present(&self, link_index: usize) -> bool {
        self.present.get(link_index).copied().unwrap_or(false)
    }

    pub fn present_count(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn present_links(&self) -> impl Iterator<Item = &EntangledLink> + '_ {
        self.network
            .links()
            .iter()
            .zip(&self.present)
            .filter_map(|(link, &p)| p.then_some(link))
    }

    pub fn present_neighbors(
        &self,
        node: NodeId,
    ) -> impl Iterator<Item = (NodeId, &EntangledLink)> + '_ {
        self.network.adjacency[node.index()]
            .iter()
            .filter(|&&(_, idx)| self.present[idx as usize])
            .map(|&(peer, idx)| (peer, &self.network.links[idx as usize]))
    }
}

#[derive(Debug, Error)]
pub enum NetworkReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] OverlayError),
}

/// Serializes probabilities and fidelities at 17 significant digits so the
/// text form round-trips to the identical f64.
pub(crate) fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_network<W: Write>(network: &OverlayNetwork, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "nodes {} generation {}",
        network.node_count(),
        network.generation()
    )?;
    for link in network.links() {
        writeln!(
            w,
            "link {} {} level {} prob {} fidelity {}",
            link.a,
            link.b,
            link.level,
            format_f64(link.probability),
            format_f64(link.fidelity),
        )?;
    }
    Ok(())
}

pub fn read_network<R: BufRead>(reader: R) -> Result<OverlayNetwork, NetworkReadError> {
    let parse = |line: usize, message: String| NetworkReadError::Parse { line, message };
    let mut header: Option<(u32, RepeaterGeneration)> = None;
    let mut links = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match fields[0] {
            "nodes" => {
                if header.is_some() {
                    return Err(parse(lineno, "duplicate header".into()));
                }
                if fields.len() != 4 || fields[2] != "generation" {
                    return Err(parse(
                        lineno,
                        "expected `nodes <count> generation <doubling|nextgen>`".into(),
                    ));
                }
                let count: u32 = fields[1]
                    .parse()
                    .map_err(|e| parse(lineno, format!("bad node count: {e}")))?;
                let generation = fields[3]
                    .parse::<RepeaterGeneration>()
                    .map_err(|e| parse(lineno, e))?;
                header = Some((count, generation));
            }
            "link" => {
                if header.is_none() {
                    return Err(parse(lineno, "link before header".into()));
                }
                if fields.len() != 9
                    || fields[3] != "level"
                    || fields[5] != "prob"
                    || fields[7] != "fidelity"
                {
                    return Err(parse(
                        lineno,
                        "expected `link <a> <b> level <l> prob <p> fidelity <f>`".into(),
                    ));
                }
                let num = |s: &str, what: &str| -> Result<f64, NetworkReadError> {
                    s.parse()
                        .map_err(|e| parse(lineno, format!("bad {what}: {e}")))
                };
                let id = |s: &str| -> Result<u32, NetworkReadError> {
                    s.parse()
                        .map_err(|e| parse(lineno, format!("bad node id: {e}")))
                };
                links.push(EntangledLink {
                    a: NodeId(id(fields[1])?),
                    b: NodeId(id(fields[2])?),
                    level: fields[4]
                        .parse()
                        .map_err(|e| parse(lineno, format!("bad level: {e}")))?,
                    probability: num(fields[6], "probability")?,
                    fidelity: num(fields[8], "fidelity")?,
                });
            }
            other => return Err(parse(lineno, format!("unknown record `{other}`"))),
        }
    }
    let (count, generation) = header.ok_or_else(|| parse(0, "missing `nodes` header".into()))?;
    Ok(OverlayNetwork::new(count, links, generation)?)
}
