//! Decentralized position-swap embedding.
//!
//! Two candidate nodes exchange lattice positions under a Metropolis rule.
//! Each candidate only learns the positions of its own entangled contacts
//! (a [`NeighborReport`]), so every acceptance decision is computable from
//! two reports and the two candidate positions; nothing global is consulted.
//!
//! The acceptance compares the product of incident link distances (k-th
//! powers) before and after the hypothetical swap. A proposal is accepted
//! with probability 1 when the post-swap product does not exceed the
//! pre-swap one, and with the ratio otherwise, which makes the stationary
//! distribution over placements proportional to the product of `d^(-k)`
//! over all links: the kernel likelihood of [`crate::model`]. The exact
//! posterior and stationarity checks below verify that without sampling.

use std::collections::HashMap;

use itertools::Itertools;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::lattice::{l1_distance, BaseGraph, Configuration, LatticeError, LatticePosition};
use crate::model::{log_likelihood, LikelihoodModel, ModelError};
use crate::overlay::{NodeId, OverlayNetwork};
use crate::stream;

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("swap chain needs at least 2 placed nodes, got {0}")]
    TooFewNodes(u32),
    #[error("{nodes} nodes give {states} placements, above the limit of {limit}")]
    StateSpaceTooLarge { nodes: u32, states: u64, limit: u64 },
    #[error("occupied set has {got} positions for {expected} nodes")]
    OccupiedCountMismatch { expected: u32, got: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What a node knows when negotiating a swap: the identities and current
/// positions of its direct entangled contacts, and nothing else.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborReport {
    pub owner: NodeId,
    pub neighbors: Vec<(NodeId, LatticePosition)>,
}

/// Builds the report for `node` from the current configuration.
pub fn collect_neighbor_positions(
    network: &OverlayNetwork,
    config: &Configuration,
    node: NodeId,
) -> Result<NeighborReport, EmbedError> {
    let mut neighbors = Vec::with_capacity(network.degree(node));
    for (peer, _) in network.neighbors(node) {
        neighbors.push((peer, config.position(peer)?.clone()));
    }
    Ok(NeighborReport {
        owner: node,
        neighbors,
    })
}

/// Pre-swap incident-distance product: every contact of x measured from
/// x's position and every contact of y from y's, each distance raised to
/// the lattice dimension. Empty reports give the neutral 1.
pub fn zeta_quantity(
    pos_x: &LatticePosition,
    pos_y: &LatticePosition,
    report_x: &NeighborReport,
    report_y: &NeighborReport,
    dimension: u32,
) -> Result<f64, EmbedError> {
    let k = dimension as i32;
    let mut product = 1.0;
    for (_, p) in &report_x.neighbors {
        product *= (l1_distance(pos_x, p)? as f64).powi(k);
    }
    for (_, p) in &report_y.neighbors {
        product *= (l1_distance(pos_y, p)? as f64).powi(k);
    }
    Ok(product)
}

/// Post-swap incident-distance product: x's contacts measured from y's
/// position and vice versa. When x and y are each other's contacts, the
/// counterpart is taken at its post-swap position, so the mutual link
/// contributes its (unchanged) distance to both products and cancels in
/// the acceptance ratio. A zero factor cannot arise from consistent
/// reports; if one does, it is floored at 1 rather than zeroing the
/// product.
pub fn phi_quantity(
    pos_x: &LatticePosition,
    pos_y: &LatticePosition,
    report_x: &NeighborReport,
    report_y: &NeighborReport,
    dimension: u32,
) -> Result<f64, EmbedError> {
    let k = dimension as i32;
    let mut product = 1.0;
    let mut factor = |d: u64| {
        product *= (d.max(1) as f64).powi(k);
    };
    for (peer, p) in &report_x.neighbors {
        let effective = if *peer == report_y.owner { pos_x } else { p };
        factor(l1_distance(pos_y, effective)?);
    }
    for (peer, p) in &report_y.neighbors {
        let effective = if *peer == report_x.owner { pos_y } else { p };
        factor(l1_distance(pos_x, effective)?);
    }
    Ok(product)
}

/// Metropolis acceptance for a proposed swap: 1 when the post-swap product
/// does not exceed the pre-swap one, the ratio otherwise. Degenerate zero
/// products accept.
pub fn swap_probability(zeta: f64, phi: f64) -> f64 {
    if phi <= 0.0 || zeta >= phi {
        1.0
    } else {
        zeta / phi
    }
}

/// Zeta, phi and the acceptance probability for swapping `x` and `y` in
/// `config`, computed exactly as the chain computes them.
pub fn proposal_quantities(
    network: &OverlayNetwork,
    config: &Configuration,
    x: NodeId,
    y: NodeId,
) -> Result<(f64, f64, f64), EmbedError> {
    let report_x = collect_neighbor_positions(network, config, x)?;
    let report_y = collect_neighbor_positions(network, config, y)?;
    let pos_x = config.position(x)?;
    let pos_y = config.position(y)?;
    let k = config.graph().dimension();
    let zeta = zeta_quantity(pos_x, pos_y, &report_x, &report_y, k)?;
    let phi = phi_quantity(pos_x, pos_y, &report_x, &report_y, k)?;
    Ok((zeta, phi, swap_probability(zeta, phi)))
}

/// Record of one evaluated swap proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDecision {
    pub x: NodeId,
    pub y: NodeId,
    pub zeta: f64,
    pub phi: f64,
    pub probability: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    /// The proposal distribution placed its self-loop mass; nothing moves.
    SelfLoop,
    Swap(SwapDecision),
}

/// The position-swap Markov chain over one overlay and configuration.
#[derive(Debug)]
pub struct SwapChain<'a> {
    network: &'a OverlayNetwork,
    config: Configuration,
    rng: ChaCha12Rng,
    rng_seed: u64,
    step_count: u64,
    proposed_swaps: u64,
    accepted_swaps: u64,
}

impl<'a> SwapChain<'a> {
    pub fn new(
        network: &'a OverlayNetwork,
        config: Configuration,
        seed: u64,
    ) -> Result<Self, EmbedError> {
        if network.node_count() < 2 {
            return Err(EmbedError::TooFewNodes(network.node_count()));
        }
        if config.node_count() != network.node_count() {
            return Err(EmbedError::OccupiedCountMismatch {
                expected: network.node_count(),
                got: config.node_count() as usize,
            });
        }
        Ok(Self {
            network,
            config,
            rng: stream::stream_rng(seed, "chain"),
            rng_seed: seed,
            step_count: 0,
            proposed_swaps: 0,
            accepted_swaps: 0,
        })
    }

    /// Proposes either a self-loop (`None`) or an unordered node pair.
    ///
    /// With n placed nodes there are n + C(n,2) outcomes, each pair carrying
    /// probability 1/(n + C(n,2)) and the self-loop the remaining n shares.
    pub fn propose_pair(&mut self) -> Option<(NodeId, NodeId)> {
        let n = u64::from(self.network.node_count());
        let pairs = n * (n - 1) / 2;
        let ticket = self.rng.gen_range(0..n + pairs);
        if ticket < n {
            return None;
        }
        loop {
            let a = self.rng.gen_range(0..n) as u32;
            let b = self.rng.gen_range(0..n) as u32;
            if a != b {
                return Some((NodeId(a.min(b)), NodeId(a.max(b))));
            }
        }
    }

    /// One chain step: propose, evaluate, and apply on acceptance.
    pub fn step(&mut self) -> Result<StepOutcome, EmbedError> {
        self.step_count += 1;
        let Some((x, y)) = self.propose_pair() else {
            return Ok(StepOutcome::SelfLoop);
        };
        self.proposed_swaps += 1;
        let (zeta, phi, probability) = proposal_quantities(self.network, &self.config, x, y)?;
        let accepted = probability >= 1.0 || self.rng.gen::<f64>() < probability;
        if accepted {
            self.accepted_swaps += 1;
            self.config.swap(x, y)?;
        }
        Ok(StepOutcome::Swap(SwapDecision {
            x,
            y,
            zeta,
            phi,
            probability,
            accepted,
        }))
    }

    pub fn run(&mut self, steps: u64) -> Result<&Configuration, EmbedError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(&self.config)
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn into_config(self) -> Configuration {
        self.config
    }

    pub fn network(&self) -> &'a OverlayNetwork {
        self.network
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn proposed_swaps(&self) -> u64 {
        self.proposed_swaps
    }

    pub fn accepted_swaps(&self) -> u64 {
        self.accepted_swaps
    }

    /// Accepted over proposed swaps; self-loops don't count as proposals.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed_swaps == 0 {
            0.0
        } else {
            self.accepted_swaps as f64 / self.proposed_swaps as f64
        }
    }
}

fn factorial_guard(nodes: u32, limit: u64) -> Result<u64, EmbedError> {
    let mut states = 1u64;
    for i in 2..=u64::from(nodes) {
        states = states.checked_mul(i).filter(|&s| s <= limit).ok_or(
            EmbedError::StateSpaceTooLarge {
                nodes,
                states: u64::MAX,
                limit,
            },
        )?;
    }
    if states > limit {
        return Err(EmbedError::StateSpaceTooLarge {
            nodes,
            states,
            limit,
        });
    }
    Ok(states)
}

/// Exact posterior over all bijections of the nodes onto `occupied`,
/// under the kernel likelihood and a uniform prior.
///
/// States are permutations: node `i` sits at `occupied[perm[i]]`.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    pub occupied: Vec<LatticePosition>,
    pub permutations: Vec<Vec<u32>>,
    pub probabilities: Vec<f64>,
    index: HashMap<Vec<u32>, usize>,
}

impl ExactPosterior {
    pub fn len(&self) -> usize {
        self.permutations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutations.is_empty()
    }

    pub fn probability_of(&self, perm: &[u32]) -> Option<f64> {
        self.index.get(perm).map(|&i| self.probabilities[i])
    }
}

pub const POSTERIOR_STATE_LIMIT: u64 = 1_000_000;
pub const TRANSITION_MATRIX_STATE_LIMIT: u64 = 5_040;

fn configuration_for(
    graph: BaseGraph,
    occupied: &[LatticePosition],
    perm: &[u32],
) -> Result<Configuration, EmbedError> {
    let positions = perm.iter().map(|&i| occupied[i as usize].clone()).collect();
    Ok(Configuration::new(graph, positions)?)
}

pub fn exact_posterior(
    network: &OverlayNetwork,
    graph: BaseGraph,
    occupied: &[LatticePosition],
) -> Result<ExactPosterior, EmbedError> {
    let n = network.node_count();
    if occupied.len() != n as usize {
        return Err(EmbedError::OccupiedCountMismatch {
            expected: n,
            got: occupied.len(),
        });
    }
    factorial_guard(n, POSTERIOR_STATE_LIMIT)?;

    let mut permutations = Vec::new();
    let mut logs = Vec::new();
    for perm in (0..n).permutations(n as usize) {
        let config = configuration_for(graph, occupied, &perm)?;
        logs.push(log_likelihood(network, &config, LikelihoodModel::Kernel)?);
        permutations.push(perm);
    }
    // Normalize in log space; a uniform prior cancels.
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let index = permutations
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    Ok(ExactPosterior {
        occupied: occupied.to_vec(),
        permutations,
        probabilities,
        index,
    })
}

/// The full transition matrix of the swap chain over every placement,
/// entry `[i][j]` being the probability of moving from state i to j in one
/// step. Row-stochastic by construction.
pub fn transition_matrix(
    network: &OverlayNetwork,
    graph: BaseGraph,
    occupied: &[LatticePosition],
    posterior: &ExactPosterior,
) -> Result<Vec<Vec<f64>>, EmbedError> {
    let n = network.node_count();
    factorial_guard(n, TRANSITION_MATRIX_STATE_LIMIT)?;
    let states = posterior.len();
    let pairs = u64::from(n) * u64::from(n - 1) / 2;
    let omega = 1.0 / (u64::from(n) + pairs) as f64;

    let mut t = vec![vec![0.0; states]; states];
    for (si, perm) in posterior.permutations.iter().enumerate() {
        let config = configuration_for(graph, occupied, perm)?;
        // Self-loop proposals.
        t[si][si] += u64::from(n) as f64 * omega;
        for x in 0..n {
            for y in (x + 1)..n {
                let (_, _, accept) = proposal_quantities(network, &config, NodeId(x), NodeId(y))?;
                let mut swapped = perm.clone();
                swapped.swap(x as usize, y as usize);
                let sj = posterior.index[&swapped];
                t[si][sj] += omega * accept;
                t[si][si] += omega * (1.0 - accept);
            }
        }
    }
    Ok(t)
}

/// Max-norm residual of the exact posterior under one chain step:
/// `max_j |(pi T)_j - pi_j|`. Zero (to rounding) iff the posterior is
/// stationary for the chain.
pub fn stationarity_check(
    network: &OverlayNetwork,
    graph: BaseGraph,
    occupied: &[LatticePosition],
) -> Result<f64, EmbedError> {
    let posterior = exact_posterior(network, graph, occupied)?;
    let t = transition_matrix(network, graph, occupied, &posterior)?;
    let mut residual: f64 = 0.0;
    for (j, &pi_j) in posterior.probabilities.iter().enumerate() {
        let mass: f64 = posterior
            .probabilities
            .iter()
            .zip(&t)
            .map(|(&pi, row)| pi * row[j])
            .sum();
        residual = residual.max((mass - pi_j).abs());
    }
    Ok(residual)
}

/// Max violation of detailed balance `pi_i T_ij = pi_j T_ji` over all state
/// pairs that differ by one swap.
pub fn detailed_balance_residual(
    network: &OverlayNetwork,
    graph: BaseGraph,
    occupied: &[LatticePosition],
) -> Result<f64, EmbedError> {
    let posterior = exact_posterior(network, graph, occupied)?;
    let t = transition_matrix(network, graph, occupied, &posterior)?;
    let mut residual: f64 = 0.0;
    for (i, row_i) in t.iter().enumerate() {
        for (j, &t_ij) in row_i.iter().enumerate().skip(i + 1) {
            let forward = posterior.probabilities[i] * t_ij;
            let backward = posterior.probabilities[j] * t[j][i];
            residual = residual.max((forward - backward).abs());
        }
    }
    Ok(residual)
}

/// The permutation key of a configuration relative to an occupied set.
pub fn permutation_of(
    config: &Configuration,
    graph: BaseGraph,
    occupied: &[LatticePosition],
) -> Result<Vec<u32>, EmbedError> {
    let mut site_to_slot = HashMap::with_capacity(occupied.len());
    for (slot, pos) in occupied.iter().enumerate() {
        site_to_slot.insert(graph.site_index(pos)?, slot as u32);
    }
    config
        .positions()
        .iter()
        .map(|p| {
            let site = graph.site_index(p)?;
            site_to_slot
                .get(&site)
                .copied()
                .ok_or_else(|| EmbedError::Lattice(LatticeError::OutOfBounds(p.clone())))
        })
        .collect()
}

/// Runs the chain from a seeded uniform start and histograms the visited
/// placements after burn-in, sampling every `stride` steps.
pub fn empirical_distribution(
    network: &OverlayNetwork,
    graph: BaseGraph,
    occupied: &[LatticePosition],
    seed: u64,
    steps: u64,
    burn_in_fraction: f64,
    stride: u64,
) -> Result<HashMap<Vec<u32>, f64>, EmbedError> {
    let mut init_rng = stream::stream_rng(seed, "embed.init");
    let config = Configuration::random(graph, occupied, &mut init_rng)?;
    let mut chain = SwapChain::new(network, config, stream::derive_seed(seed, "embed.chain"))?;
    let burn_in = (steps as f64 * burn_in_fraction) as u64;
    let stride = stride.max(1);
    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    let mut samples = 0u64;
    for step in 1..=steps {
        chain.step()?;
        if step > burn_in && (step - burn_in).is_multiple_of(stride) {
            let key = permutation_of(chain.config(), graph, occupied)?;
            *counts.entry(key).or_insert(0) += 1;
            samples += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / samples as f64))
        .collect())
}

/// Total variation distance between the exact posterior and an empirical
/// distribution over the same state space.
pub fn total_variation(posterior: &ExactPosterior, empirical: &HashMap<Vec<u32>, f64>) -> f64 {
    let mut tv = 0.0;
    for (perm, &p) in posterior.permutations.iter().zip(&posterior.probabilities) {
        let q = empirical.get(perm).copied().unwrap_or(0.0);
        tv += (p - q).abs();
    }
    // States outside the posterior support carry no mass by construction.
    tv / 2.0
}
