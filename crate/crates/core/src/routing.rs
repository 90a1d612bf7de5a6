//! Greedy decentralized routing over a realized overlay.
//!
//! Each forwarding step consults only the current node's present links and
//! the positions of their far ends, and picks the unvisited neighbor with
//! the smallest L1 distance to the target. Visited nodes are never
//! re-entered, so every route terminates: delivered, dead-ended, or out of
//! hop budget.

use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use thiserror::Error;

use crate::embedding::NeighborReport;
use crate::lattice::{l1_distance, Configuration, LatticeError, LatticePosition};
use crate::overlay::{realize_links, LinkRealization, NodeId, OverlayNetwork};
use crate::stream;

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("source and target must differ")]
    SameEndpoints,
    #[error("hop limit must be at least 1")]
    ZeroHopLimit,
    #[error("routing needs at least 2 nodes, got {0}")]
    TooFewNodes(u32),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteStatus {
    Delivered,
    DeadEnd,
    HopLimitExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingOutcome {
    pub path: Vec<NodeId>,
    pub hops: u32,
    pub status: RouteStatus,
}

/// Forwarding rule. Both minimize L1 distance to the target; the fidelity
/// variant breaks distance ties by the larger link fidelity before falling
/// back to the smaller node id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoutingMetric {
    #[default]
    L1,
    FidelityTieBreak,
}

/// Default hop budget: `4 (log2 n)^2 + 16` for a base graph of n sites.
pub fn default_hop_limit(site_count: u64) -> u32 {
    let log2 = (site_count.max(2) as f64).log2();
    (4.0 * log2 * log2).round() as u32 + 16
}

/// The report a router consults at `node`: its present-link neighbors and
/// their current positions.
pub fn realized_report(
    realization: &LinkRealization<'_>,
    config: &Configuration,
    node: NodeId,
) -> Result<NeighborReport, RouteError> {
    let mut neighbors = Vec::new();
    for (peer, _) in realization.present_neighbors(node) {
        neighbors.push((peer, config.position(peer)?.clone()));
    }
    Ok(NeighborReport {
        owner: node,
        neighbors,
    })
}

/// The unvisited neighbor closest to the target in L1 distance, ties broken
/// by the smaller node id. `None` when every neighbor is visited.
pub fn greedy_next(
    target_pos: &LatticePosition,
    report: &NeighborReport,
    visited: &HashSet<NodeId>,
) -> Result<Option<NodeId>, RouteError> {
    let mut best: Option<(u64, NodeId)> = None;
    for (peer, pos) in &report.neighbors {
        if visited.contains(peer) {
            continue;
        }
        let d = l1_distance(pos, target_pos)?;
        if best.is_none_or(|(bd, bid)| (d, *peer) < (bd, bid)) {
            best = Some((d, *peer));
        }
    }
    Ok(best.map(|(_, id)| id))
}

fn greedy_next_with_metric(
    realization: &LinkRealization<'_>,
    config: &Configuration,
    current: NodeId,
    target_pos: &LatticePosition,
    visited: &HashSet<NodeId>,
    metric: RoutingMetric,
) -> Result<Option<NodeId>, RouteError> {
    // Rank: distance ascending, then fidelity descending when enabled,
    // then node id ascending.
    let mut best: Option<(u64, f64, NodeId)> = None;
    for (peer, link) in realization.present_neighbors(current) {
        if visited.contains(&peer) {
            continue;
        }
        let d = l1_distance(config.position(peer)?, target_pos)?;
        let fid = match metric {
            RoutingMetric::L1 => 0.0,
            RoutingMetric::FidelityTieBreak => link.fidelity,
        };
        let better = match best {
            None => true,
            Some((bd, bf, bid)) => (d, -fid, peer) < (bd, -bf, bid),
        };
        if better {
            best = Some((d, -fid, peer));
        }
    }
    Ok(best.map(|(_, _, id)| id))
}

/// Routes one message greedily from `source` to `target` over the frozen
/// link realization.
pub fn route(
    realization: &LinkRealization<'_>,
    config: &Configuration,
    source: NodeId,
    target: NodeId,
    hop_limit: u32,
    metric: RoutingMetric,
) -> Result<RoutingOutcome, RouteError> {
    if source == target {
        return Err(RouteError::SameEndpoints);
    }
    if hop_limit == 0 {
        return Err(RouteError::ZeroHopLimit);
    }
    let target_pos = config.position(target)?.clone();
    let mut visited = HashSet::from([source]);
    let mut path = vec![source];
    let mut current = source;
    let mut hops = 0u32;
    loop {
        let next =
            greedy_next_with_metric(realization, config, current, &target_pos, &visited, metric)?;
        let Some(next) = next else {
            return Ok(RoutingOutcome {
                path,
                hops,
                status: RouteStatus::DeadEnd,
            });
        };
        visited.insert(next);
        path.push(next);
        hops += 1;
        current = next;
        if current == target {
            return Ok(RoutingOutcome {
                path,
                hops,
                status: RouteStatus::Delivered,
            });
        }
        if hops >= hop_limit {
            return Ok(RoutingOutcome {
                path,
                hops,
                status: RouteStatus::HopLimitExceeded,
            });
        }
    }
}

/// Aggregates of a routing ensemble. Hop statistics cover delivered routes
/// only; the delivery rate accounts for the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub trials: u32,
    pub delivered: u32,
    pub delivery_rate: f64,
    pub mean_hops: f64,
    pub median_hops: f64,
    pub p95_hops: f64,
    pub hop_histogram: BTreeMap<u32, u32>,
}

/// Runs `trials` independent routes: fresh link realization, uniformly
/// random source/target pair, one greedy route each. Fully determined by
/// `seed`.
pub fn route_ensemble(
    network: &OverlayNetwork,
    config: &Configuration,
    trials: u32,
    seed: u64,
    hop_limit: u32,
    metric: RoutingMetric,
) -> Result<EnsembleSummary, RouteError> {
    if network.node_count() < 2 {
        return Err(RouteError::TooFewNodes(network.node_count()));
    }
    if trials == 0 {
        return Err(RouteError::NoTrials);
    }
    if hop_limit == 0 {
        return Err(RouteError::ZeroHopLimit);
    }
    let n = network.node_count();
    let mut pair_rng = stream::stream_rng(seed, "route.pairs");
    let realization_seed = stream::derive_seed(seed, "route.realization");
    let mut delivered_hops: Vec<u32> = Vec::new();
    let mut histogram = BTreeMap::new();
    for trial in 0..trials {
        let realization = realize_links(
            network,
            stream::mix_index(realization_seed, u64::from(trial)),
        );
        let source = NodeId(pair_rng.gen_range(0..n));
        let target = loop {
            let t = NodeId(pair_rng.gen_range(0..n));
            if t != source {
                break t;
            }
        };
        let outcome = route(&realization, config, source, target, hop_limit, metric)?;
        if outcome.status == RouteStatus::Delivered {
            delivered_hops.push(outcome.hops);
            *histogram.entry(outcome.hops).or_insert(0) += 1;
        }
    }
    let delivered = delivered_hops.len() as u32;
    delivered_hops.sort_unstable();
    let mean = if delivered == 0 {
        f64::NAN
    } else {
        delivered_hops.iter().map(|&h| f64::from(h)).sum::<f64>() / f64::from(delivered)
    };
    Ok(EnsembleSummary {
        trials,
        delivered,
        delivery_rate: f64::from(delivered) / f64::from(trials),
        mean_hops: mean,
        median_hops: median(&delivered_hops),
        p95_hops: percentile(&delivered_hops, 0.95),
        hop_histogram: histogram,
    })
}

fn median(sorted: &[u32]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => f64::from(sorted[n / 2]),
        n => f64::from(sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    }
}

/// Nearest-rank percentile of a sorted sample.
fn percentile(sorted: &[u32], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    f64::from(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BaseGraph;
    use crate::overlay::{generate_overlay, EntangledLink, GeneratorSpec, RepeaterGeneration};
    use proptest::prelude::*;
    use rand::Rng;

    fn certain_link(a: u32, b: u32) -> EntangledLink {
        EntangledLink {
            a: NodeId(a),
            b: NodeId(b),
            level: 1,
            probability: 1.0,
            fidelity: 1.0,
        }
    }

    fn full_lattice(side: u32) -> (OverlayNetwork, Configuration) {
        let spec = GeneratorSpec::new(side * side, side, 2, vec![1.0], 1);
        let net = generate_overlay(&spec).unwrap();
        let graph = BaseGraph::new(2, side).unwrap();
        let config = Configuration::planted(graph, side * side).unwrap();
        (net, config)
    }

    #[test]
    fn greedy_next_minimizes_distance_with_id_tie_break() {
        let report = NeighborReport {
            owner: NodeId(0),
            neighbors: vec![
                (NodeId(3), LatticePosition::new(vec![2, 2])),
                (NodeId(1), LatticePosition::new(vec![1, 3])),
                (NodeId(2), LatticePosition::new(vec![3, 1])),
            ],
        };
        let target = LatticePosition::new(vec![4, 4]);
        // Distances: node 3 -> 4, nodes 1 and 2 -> 4 as well; all tie, the
        // smallest id wins.
        let next = greedy_next(&target, &report, &HashSet::new()).unwrap();
        assert_eq!(next, Some(NodeId(1)));
        let visited = HashSet::from([NodeId(1)]);
        assert_eq!(
            greedy_next(&target, &report, &visited).unwrap(),
            Some(NodeId(2))
        );
        let all: HashSet<NodeId> = [1, 2, 3].map(NodeId).into();
        assert_eq!(greedy_next(&target, &report, &all).unwrap(), None);
    }

    #[test]
    fn adjacent_route_takes_one_hop() {
        let net =
            OverlayNetwork::new(2, vec![certain_link(0, 1)], RepeaterGeneration::Doubling).unwrap();
        let graph = BaseGraph::new(2, 3).unwrap();
        let config = Configuration::planted(graph, 2).unwrap();
        let realization = realize_links(&net, 0);
        let out = route(
            &realization,
            &config,
            NodeId(0),
            NodeId(1),
            10,
            RoutingMetric::L1,
        )
        .unwrap();
        assert_eq!(out.status, RouteStatus::Delivered);
        assert_eq!(out.hops, 1);
        assert_eq!(out.path, vec![NodeId(0), NodeId(1)]);
    }

    #[test]
    fn isolated_source_dead_ends_immediately() {
        let net =
            OverlayNetwork::new(3, vec![certain_link(1, 2)], RepeaterGeneration::Doubling).unwrap();
        let graph = BaseGraph::new(2, 3).unwrap();
        let config = Configuration::planted(graph, 3).unwrap();
        let realization = realize_links(&net, 0);
        let out = route(
            &realization,
            &config,
            NodeId(0),
            NodeId(2),
            10,
            RoutingMetric::L1,
        )
        .unwrap();
        assert_eq!(out.status, RouteStatus::DeadEnd);
        assert_eq!(out.path, vec![NodeId(0)]);
        assert_eq!(out.hops, 0);
    }

    #[test]
    fn route_rejects_equal_endpoints() {
        let net =
            OverlayNetwork::new(2, vec![certain_link(0, 1)], RepeaterGeneration::Doubling).unwrap();
        let graph = BaseGraph::new(2, 3).unwrap();
        let config = Configuration::planted(graph, 2).unwrap();
        let realization = realize_links(&net, 0);
        assert_eq!(
            route(
                &realization,
                &config,
                NodeId(0),
                NodeId(0),
                10,
                RoutingMetric::L1
            ),
            Err(RouteError::SameEndpoints)
        );
    }

    #[test]
    fn pure_lattice_routes_match_l1_distance() {
        let (net, config) = full_lattice(8);
        let realization = realize_links(&net, 42);
        let mut rng = stream::stream_rng(7, "test.pairs");
        for _ in 0..200 {
            let s = NodeId(rng.gen_range(0..64));
            let t = NodeId(rng.gen_range(0..64));
            if s == t {
                continue;
            }
            let d = config.distance_between(s, t).unwrap();
            let out = route(&realization, &config, s, t, 1_000, RoutingMetric::L1).unwrap();
            assert_eq!(out.status, RouteStatus::Delivered);
            assert_eq!(u64::from(out.hops), d, "route {s}->{t}");
        }
    }

    #[test]
    fn hop_limit_is_reported() {
        let (net, config) = full_lattice(8);
        let realization = realize_links(&net, 42);
        let out = route(
            &realization,
            &config,
            NodeId(0),
            NodeId(63),
            3,
            RoutingMetric::L1,
        )
        .unwrap();
        assert_eq!(out.status, RouteStatus::HopLimitExceeded);
        assert_eq!(out.hops, 3);
    }

    #[test]
    fn fidelity_tie_break_prefers_higher_fidelity() {
        // Two neighbors equally close to the target; the second carries the
        // better link fidelity.
        let mut low = certain_link(0, 1);
        low.fidelity = 0.5;
        let mut high = certain_link(0, 2);
        high.fidelity = 0.9;
        let target = certain_link(1, 3);
        let target2 = certain_link(2, 3);
        let net = OverlayNetwork::new(
            4,
            vec![low, high, target, target2],
            RepeaterGeneration::Doubling,
        )
        .unwrap();
        let graph = BaseGraph::new(2, 4).unwrap();
        let config = Configuration::new(
            graph,
            vec![
                LatticePosition::new(vec![0, 0]),
                LatticePosition::new(vec![0, 1]),
                LatticePosition::new(vec![1, 0]),
                LatticePosition::new(vec![1, 1]),
            ],
        )
        .unwrap();
        let realization = realize_links(&net, 0);
        let l1 = route(
            &realization,
            &config,
            NodeId(0),
            NodeId(3),
            10,
            RoutingMetric::L1,
        )
        .unwrap();
        assert_eq!(l1.path[1], NodeId(1), "id tie-break");
        let fid = route(
            &realization,
            &config,
            NodeId(0),
            NodeId(3),
            10,
            RoutingMetric::FidelityTieBreak,
        )
        .unwrap();
        assert_eq!(fid.path[1], NodeId(2), "fidelity tie-break");
    }

    #[test]
    fn forced_pair_ensemble_is_exact() {
        let net =
            OverlayNetwork::new(2, vec![certain_link(0, 1)], RepeaterGeneration::Doubling).unwrap();
        let graph = BaseGraph::new(2, 3).unwrap();
        let config = Configuration::planted(graph, 2).unwrap();
        let summary = route_ensemble(&net, &config, 50, 9, 10, RoutingMetric::L1).unwrap();
        assert_eq!(summary.delivered, 50);
        assert_eq!(summary.delivery_rate, 1.0);
        assert_eq!(summary.mean_hops, 1.0);
        assert_eq!(summary.median_hops, 1.0);
        assert_eq!(summary.p95_hops, 1.0);
    }

    #[test]
    fn full_lattice_ensemble_delivers_everything() {
        let (net, config) = full_lattice(8);
        let summary = route_ensemble(&net, &config, 500, 3, 1_000, RoutingMetric::L1).unwrap();
        assert_eq!(summary.delivery_rate, 1.0);
        assert!(summary.mean_hops > 0.0);
    }

    #[test]
    fn ensemble_is_deterministic() {
        let (net, config) = full_lattice(8);
        let a = route_ensemble(&net, &config, 200, 5, 100, RoutingMetric::L1).unwrap();
        let b = route_ensemble(&net, &config, 200, 5, 100, RoutingMetric::L1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_hop_limit_matches_formula() {
        assert_eq!(default_hop_limit(4096), 4 * 144 + 16);
        assert_eq!(default_hop_limit(64), 4 * 36 + 16);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn routes_never_revisit(seed in 0u64..2000) {
            let spec = GeneratorSpec::new(36, 6, 2, vec![0.9, 0.6, 0.4], seed);
            let net = generate_overlay(&spec).unwrap();
            let graph = BaseGraph::new(2, 6).unwrap();
            let config = Configuration::planted(graph, 36).unwrap();
            let realization = realize_links(&net, seed ^ 0xabcd);
            let mut rng = stream::stream_rng(seed, "prop.pairs");
            let s = NodeId(rng.gen_range(0..36));
            let t = NodeId((s.0 + 1 + rng.gen_range(0..35)) % 36);
            let out = route(&realization, &config, s, t, 64, RoutingMetric::L1).unwrap();
            let unique: HashSet<_> = out.path.iter().collect();
            prop_assert_eq!(unique.len(), out.path.len());
            if out.status == RouteStatus::Delivered {
                prop_assert_eq!(*out.path.last().unwrap(), t);
                prop_assert_eq!(out.path.len(), out.hops as usize + 1);
            }
        }
    }
}
