//! Verifies the swap chain targets its claimed stationary distribution.
//!
//! On a 4-node path network placed over four sites of a 3x3 lattice the
//! state space has only 4! = 24 placements, so everything is checkable
//! exactly: the posterior `pi proportional to product of d^(-k)` over
//! links, the full one-step transition matrix, the stationarity residual
//! `max |pi T - pi|`, and detailed balance `pi_i T_ij = pi_j T_ji`. A
//! sampling run then shows the empirical histogram converging to the same
//! posterior in total variation. Run with
//! `cargo run --example stationarity_check`.

use basegraph::embedding::{
    detailed_balance_residual, empirical_distribution, exact_posterior, stationarity_check,
    total_variation,
};
use basegraph::lattice::{BaseGraph, LatticePosition};
use basegraph::overlay::{EntangledLink, OverlayNetwork, RepeaterGeneration};
use basegraph::NodeId;

fn main() {
    let links = [(0, 1), (1, 2), (2, 3)]
        .into_iter()
        .map(|(a, b)| EntangledLink {
            a: NodeId(a),
            b: NodeId(b),
            level: 1,
            probability: 0.8,
            fidelity: 1.0,
        })
        .collect();
    let network = OverlayNetwork::new(4, links, RepeaterGeneration::Doubling).expect("valid");
    let graph = BaseGraph::new(2, 3).expect("valid lattice");
    let occupied: Vec<LatticePosition> = [(0, 0), (1, 0), (2, 1), (1, 2)]
        .into_iter()
        .map(|(x, y)| LatticePosition::new(vec![x, y]))
        .collect();

    let posterior = exact_posterior(&network, graph, &occupied).expect("tiny state space");
    println!(
        "state space: {} placements of 4 nodes on 4 sites",
        posterior.len()
    );

    let mut ranked: Vec<(usize, f64)> = posterior
        .probabilities
        .iter()
        .copied()
        .enumerate()
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("\nmost and least likely placements:");
    for &(i, p) in ranked.iter().take(2).chain(ranked.iter().rev().take(1)) {
        println!("  perm {:?}  pi = {:.5}", posterior.permutations[i], p);
    }

    let stationarity = stationarity_check(&network, graph, &occupied).expect("tiny state space");
    let balance = detailed_balance_residual(&network, graph, &occupied).expect("tiny state space");
    println!("\nstationarity residual  max|pi T - pi|     = {stationarity:.3e}");
    println!("detailed balance       max|pi_i T_ij - pi_j T_ji| = {balance:.3e}");

    println!("\nsampling convergence (burn-in 20%, stride 4):");
    println!("{:>8} {:>10}", "steps", "TV");
    for steps in [1_000u64, 10_000, 100_000] {
        let empirical = empirical_distribution(&network, graph, &occupied, 1, steps, 0.2, 4)
            .expect("chain runs");
        println!(
            "{:>8} {:>10.4}",
            steps,
            total_variation(&posterior, &empirical)
        );
    }
}
