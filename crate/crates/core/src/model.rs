//! Connection-probability model over an embedded overlay.
//!
//! Given a placement of the overlay nodes on the lattice, each link gets a
//! structural term `d^(-k) / H` where `d` is the L1 distance between its
//! endpoints, `k` the lattice dimension, and `H` the normalizer at the
//! link's first endpoint. A per-link correction constant `c` makes the
//! modeled probability match the link's own existence probability exactly;
//! that identity is the probability-preservation contract of the embedding.

use thiserror::Error;

use crate::lattice::{l1_distance, Configuration, LatticeError};
use crate::overlay::{EntangledLink, NodeId, OverlayNetwork};

/// Structural factors below this floor are clamped before taking logs, so a
/// single far-flung link cannot collapse a whole likelihood sum to -inf.
pub const STRUCTURAL_FACTOR_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("node {0} has no entangled contacts, normalizer undefined")]
    IsolatedNode(NodeId),
    #[error("configuration places {got} nodes, network has {expected}")]
    NodeCountMismatch { expected: u32, got: u32 },
    #[error("link endpoints coincide at distance 0")]
    CoincidentEndpoints,
    #[error("level {0} has no base-graph distance")]
    BadLevel(u32),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Which form the per-node normalizer takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizerForm {
    /// `H = sum_z d(pos(x), pos(z))^(-k)` over the contacts z of x.
    #[default]
    InverseKPower,
    /// Comparison variant: the plain distance sum `H = sum_z d(pos(x), pos(z))`.
    DistanceSum,
}

/// Likelihood variants over the same per-link decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodModel {
    /// `sum ln(d^(-k)/H + c)`; by construction each factor equals the link
    /// probability, so this is placement-independent. Kept for the
    /// preservation identity and diagnostics.
    Exact,
    /// `sum ln(d^(-k)/H)` with the correction dropped; factors are clamped
    /// at [`STRUCTURAL_FACTOR_FLOOR`].
    Structural,
    /// `sum ln(d^(-k))`, no normalizer. This is the exact stationary kernel
    /// of the position-swap chain: its acceptance ratio is the ratio of
    /// these products over the links touching the swapped pair.
    Kernel,
}

fn check_counts(network: &OverlayNetwork, config: &Configuration) -> Result<(), ModelError> {
    if network.node_count() != config.node_count() {
        return Err(ModelError::NodeCountMismatch {
            expected: network.node_count(),
            got: config.node_count(),
        });
    }
    Ok(())
}

/// Normalizer at `node` under the default inverse-k-power form.
pub fn normalizer(
    network: &OverlayNetwork,
    config: &Configuration,
    node: NodeId,
) -> Result<f64, ModelError> {
    normalizer_with_form(network, config, node, NormalizerForm::InverseKPower)
}

pub fn normalizer_with_form(
    network: &OverlayNetwork,
    config: &Configuration,
    node: NodeId,
    form: NormalizerForm,
) -> Result<f64, ModelError> {
    check_counts(network, config)?;
    let k = config.graph().dimension() as i32;
    let here = config.position(node)?;
    let mut sum = 0.0;
    let mut contacts = 0usize;
    for (peer, _) in network.neighbors(node) {
        let d = l1_distance(here, config.position(peer)?)?;
        if d == 0 {
            return Err(ModelError::CoincidentEndpoints);
        }
        contacts += 1;
        sum += match form {
            NormalizerForm::InverseKPower => (d as f64).powi(-k),
            NormalizerForm::DistanceSum => d as f64,
        };
    }
    if contacts == 0 {
        return Err(ModelError::IsolatedNode(node));
    }
    Ok(sum)
}

/// Structural term of one link: `d(a, b)^(-k) / H(a)`, the correction-free
/// part of its modeled connection probability.
pub fn structural_connection_probability(
    network: &OverlayNetwork,
    config: &Configuration,
    link: &EntangledLink,
) -> Result<f64, ModelError> {
    let k = config.graph().dimension() as i32;
    let d = l1_distance(config.position(link.a)?, config.position(link.b)?)?;
    if d == 0 {
        return Err(ModelError::CoincidentEndpoints);
    }
    let h = normalizer(network, config, link.a)?;
    Ok((d as f64).powi(-k) / h)
}

/// Correction constant `c = Pr - d^(-k)/H` for one link.
pub fn correction_constant(
    network: &OverlayNetwork,
    config: &Configuration,
    link: &EntangledLink,
) -> Result<f64, ModelError> {
    Ok(link.probability - structural_connection_probability(network, config, link)?)
}

/// Modeled connection probability `d^(-k)/H + c`. Evaluating the sum in
/// this order reproduces the link's own probability to within rounding;
/// tests pin the agreement at 1e-12.
pub fn connection_probability(
    network: &OverlayNetwork,
    config: &Configuration,
    link: &EntangledLink,
) -> Result<f64, ModelError> {
    let structural = structural_connection_probability(network, config, link)?;
    let c = link.probability - structural;
    Ok(structural + c)
}

/// Log-likelihood of a configuration under the chosen model. Any factor
/// that is not strictly positive yields the -inf sentinel.
pub fn log_likelihood(
    network: &OverlayNetwork,
    config: &Configuration,
    model: LikelihoodModel,
) -> Result<f64, ModelError> {
    check_counts(network, config)?;
    let k = f64::from(config.graph().dimension());
    let mut total = 0.0;
    for link in network.links() {
        let d = l1_distance(config.position(link.a)?, config.position(link.b)?)?;
        if d == 0 {
            return Err(ModelError::CoincidentEndpoints);
        }
        let term = match model {
            LikelihoodModel::Exact => {
                let factor = connection_probability(network, config, link)?;
                if factor <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                factor.ln()
            }
            LikelihoodModel::Structural => {
                let factor = structural_connection_probability(network, config, link)?;
                if factor <= 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                factor.max(STRUCTURAL_FACTOR_FLOOR).ln()
            }
            LikelihoodModel::Kernel => -k * (d as f64).ln(),
        };
        total += term;
    }
    Ok(total)
}

/// Base-graph distance a level-`level` link should span under doubling:
/// `2^(level-1)`.
pub fn level_distance(level: u32) -> Result<u64, ModelError> {
    crate::overlay::hop_distance(level, crate::overlay::RepeaterGeneration::Doubling)
        .map_err(|_| ModelError::BadLevel(level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BaseGraph, LatticePosition};
    use crate::overlay::{EntangledLink, OverlayNetwork, RepeaterGeneration};

    fn link(a: u32, b: u32, p: f64) -> EntangledLink {
        EntangledLink {
            a: NodeId(a),
            b: NodeId(b),
            level: 1,
            probability: p,
            fidelity: 1.0,
        }
    }

    fn config_on_line(coords: &[u32]) -> Configuration {
        let graph = BaseGraph::new(1, 32).unwrap();
        let positions = coords
            .iter()
            .map(|&c| LatticePosition::new(vec![c]))
            .collect();
        Configuration::new(graph, positions).unwrap()
    }

    /// Node 0 with contacts at L1 distances 1, 2 and 4 on a 2-d lattice.
    fn star_fixture() -> (OverlayNetwork, Configuration) {
        let graph = BaseGraph::new(2, 8).unwrap();
        let positions = vec![
            LatticePosition::new(vec![0, 0]),
            LatticePosition::new(vec![0, 1]),
            LatticePosition::new(vec![1, 1]),
            LatticePosition::new(vec![2, 2]),
        ];
        let config = Configuration::new(graph, positions).unwrap();
        let links = vec![link(0, 1, 0.9), link(0, 2, 0.5), link(0, 3, 0.25)];
        let net = OverlayNetwork::new(4, links, RepeaterGeneration::Doubling).unwrap();
        (net, config)
    }

    #[test]
    fn normalizer_single_contact_unit_distance() {
        let net =
            OverlayNetwork::new(2, vec![link(0, 1, 1.0)], RepeaterGeneration::Doubling).unwrap();
        let graph = BaseGraph::new(2, 4).unwrap();
        let config = Configuration::new(
            graph,
            vec![
                LatticePosition::new(vec![0, 0]),
                LatticePosition::new(vec![0, 1]),
            ],
        )
        .unwrap();
        assert_eq!(normalizer(&net, &config, NodeId(0)).unwrap(), 1.0);
    }

    #[test]
    fn normalizer_inverse_square_contacts() {
        let (net, config) = star_fixture();
        // 1 + 2^-2 + 4^-2 = 1.3125
        let h = normalizer(&net, &config, NodeId(0)).unwrap();
        assert!((h - 1.3125).abs() < 1e-15, "got {h}");
    }

    #[test]
    fn normalizer_k1_single_contact() {
        let net =
            OverlayNetwork::new(2, vec![link(0, 1, 1.0)], RepeaterGeneration::Doubling).unwrap();
        let config = config_on_line(&[0, 2]);
        assert_eq!(normalizer(&net, &config, NodeId(0)).unwrap(), 0.5);
    }

    #[test]
    fn normalizer_literal_sum_variant() {
        let (net, config) = star_fixture();
        let h =
            normalizer_with_form(&net, &config, NodeId(0), NormalizerForm::DistanceSum).unwrap();
        assert_eq!(h, 7.0);
    }

    #[test]
    fn normalizer_rejects_isolated_node() {
        let net =
            OverlayNetwork::new(3, vec![link(0, 1, 1.0)], RepeaterGeneration::Doubling).unwrap();
        let graph = BaseGraph::new(2, 4).unwrap();
        let config = Configuration::planted(graph, 3).unwrap();
        assert_eq!(
            normalizer(&net, &config, NodeId(2)),
            Err(ModelError::IsolatedNode(NodeId(2)))
        );
    }

    #[test]
    fn normalizer_shrinks_as_contacts_recede() {
        let net =
            OverlayNetwork::new(2, vec![link(0, 1, 1.0)], RepeaterGeneration::Doubling).unwrap();
        let mut last = f64::INFINITY;
        for d in 1u32..6 {
            let config = config_on_line(&[0, d]);
            let h = normalizer(&net, &config, NodeId(0)).unwrap();
            assert!(h < last);
            last = h;
        }
    }

    #[test]
    fn correction_vanishes_when_structural_term_matches() {
        // Single mutual contact at distance 1: structural term is exactly 1.
        let net =
            OverlayNetwork::new(2, vec![link(0, 1, 1.0)], RepeaterGeneration::Doubling).unwrap();
        let config = config_on_line(&[3, 4]);
        let c = correction_constant(&net, &config, &net.links()[0]).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn correction_balances_structural_excess() {
        // Contacts at distances 1 and 2 with k=2: H = 1 + 1/4 = 1.25, so
        // the unit link's structural term is 0.8; with Pr = 0.5 the
        // correction is -0.3.
        let links = vec![link(0, 1, 0.5), link(0, 2, 0.5)];
        let net = OverlayNetwork::new(3, links, RepeaterGeneration::Doubling).unwrap();
        let graph = BaseGraph::new(2, 4).unwrap();
        let config = Configuration::new(
            graph,
            vec![
                LatticePosition::new(vec![0, 0]),
                LatticePosition::new(vec![0, 1]),
                LatticePosition::new(vec![0, 2]),
            ],
        )
        .unwrap();
        let s = structural_connection_probability(&net, &config, &net.links()[0]).unwrap();
        assert!((s - 0.8).abs() < 1e-15);
        let c = correction_constant(&net, &config, &net.links()[0]).unwrap();
        assert!((c + 0.3).abs() < 1e-15, "got {c}");
    }

    #[test]
    fn structural_term_with_far_contacts() {
        let (net, config) = star_fixture();
        // Link 0-2 spans distance 2 with H = 1.3125: 0.25 / 1.3125.
        let s = structural_connection_probability(&net, &config, &net.links()[1]).unwrap();
        assert!((s - 0.19047619047619047).abs() < 1e-15, "got {s}");
    }

    #[test]
    fn connection_probability_reproduces_link_probability() {
        let (net, config) = star_fixture();
        for l in net.links() {
            let p = connection_probability(&net, &config, l).unwrap();
            assert!(
                (p - l.probability).abs() <= 1e-12,
                "{p} vs {}",
                l.probability
            );
        }
    }

    #[test]
    fn level_distance_doubles() {
        assert_eq!(level_distance(1).unwrap(), 1);
        assert_eq!(level_distance(2).unwrap(), 2);
        assert_eq!(level_distance(4).unwrap(), 8);
        assert!(level_distance(0).is_err());
    }

    #[test]
    fn log_likelihood_of_empty_network_is_zero() {
        let net = OverlayNetwork::new(2, vec![], RepeaterGeneration::Doubling).unwrap();
        let config = config_on_line(&[0, 1]);
        assert_eq!(
            log_likelihood(&net, &config, LikelihoodModel::Exact).unwrap(),
            0.0
        );
        assert_eq!(
            log_likelihood(&net, &config, LikelihoodModel::Kernel).unwrap(),
            0.0
        );
    }

    #[test]
    fn log_likelihood_sums_factor_logs() {
        // Exact model factors equal the link probabilities, so two links
        // with probabilities 0.25, or 0.5 and 0.2, pin the sums.
        let net =
            OverlayNetwork::new(2, vec![link(0, 1, 0.25)], RepeaterGeneration::Doubling).unwrap();
        let config = config_on_line(&[0, 1]);
        let ll = log_likelihood(&net, &config, LikelihoodModel::Exact).unwrap();
        assert!((ll - (-1.3862943611198906)).abs() < 1e-12);

        let links = vec![link(0, 1, 0.5), link(1, 2, 0.2)];
        let net = OverlayNetwork::new(3, links, RepeaterGeneration::Doubling).unwrap();
        let config = config_on_line(&[0, 1, 2]);
        let ll = log_likelihood(&net, &config, LikelihoodModel::Exact).unwrap();
        assert!((ll - (-2.3025850929940455)).abs() < 1e-12, "got {ll}");
    }

    #[test]
    fn kernel_likelihood_decomposes_locally() {
        // Moving a node changes only the kernel terms of links touching it.
        let links = vec![link(0, 1, 0.9), link(2, 3, 0.9)];
        let net = OverlayNetwork::new(4, links, RepeaterGeneration::Doubling).unwrap();
        let before = config_on_line(&[0, 1, 4, 6]);
        let after = config_on_line(&[0, 1, 4, 9]);
        let k = 1.0;
        let term01 = |c: &Configuration| {
            -k * (c.distance_between(NodeId(0), NodeId(1)).unwrap() as f64).ln()
        };
        assert_eq!(term01(&before), term01(&after));
        let ll_b = log_likelihood(&net, &before, LikelihoodModel::Kernel).unwrap();
        let ll_a = log_likelihood(&net, &after, LikelihoodModel::Kernel).unwrap();
        let moved_b = -k * (2f64).ln();
        let moved_a = -k * (5f64).ln();
        assert!((ll_a - ll_b - (moved_a - moved_b)).abs() < 1e-12);
    }

    #[test]
    fn structural_likelihood_clamps_instead_of_diverging() {
        let net =
            OverlayNetwork::new(2, vec![link(0, 1, 1.0)], RepeaterGeneration::Doubling).unwrap();
        let config = config_on_line(&[0, 31]);
        let ll = log_likelihood(&net, &config, LikelihoodModel::Structural).unwrap();
        assert!(ll.is_finite());
    }
}
