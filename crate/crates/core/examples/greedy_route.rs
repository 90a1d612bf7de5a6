//! Routes one message across a realized overlay and prints each hop.
//!
//! Link presence is drawn once per link from its probability, then the
//! router repeatedly forwards to the unvisited neighbor whose lattice
//! position is L1-closest to the target — the only information a node
//! needs is its own neighborhood, so routing is fully decentralized.
//! Run with `cargo run --example greedy_route`.

use basegraph::lattice::{l1_distance, Configuration};
use basegraph::overlay::{generate_overlay, realize_links, GeneratorSpec};
use basegraph::routing::{default_hop_limit, route, RoutingMetric};
use basegraph::NodeId;

fn main() {
    let spec = GeneratorSpec::new(256, 16, 2, vec![1.0, 0.9, 0.8, 0.7, 0.6], 5);
    let network = generate_overlay(&spec).expect("valid generator settings");
    let graph = spec.validate().expect("already validated");
    let config = Configuration::planted(graph, network.node_count()).expect("fits");
    let realization = realize_links(&network, 17);

    let source = NodeId(0);
    let target = NodeId(255);
    let hop_limit = default_hop_limit(graph.site_count());
    let outcome = route(
        &realization,
        &config,
        source,
        target,
        hop_limit,
        RoutingMetric::L1,
    )
    .expect("routable endpoints");

    let target_pos = config.position(target).expect("placed");
    println!(
        "route {} -> {}: {:?} in {} hops (limit {})\n",
        source, target, outcome.status, outcome.hops, hop_limit
    );
    println!(
        "{:>4} {:>6} {:>10} {:>12}",
        "hop", "node", "site", "to target"
    );
    for (i, &node) in outcome.path.iter().enumerate() {
        let pos = config.position(node).expect("placed");
        println!(
            "{:>4} {:>6} {:>10} {:>12}",
            i,
            node.0,
            format!("{:?}", pos.coords()),
            l1_distance(pos, target_pos).expect("same dimension"),
        );
    }

    let direct =
        l1_distance(config.position(source).expect("placed"), target_pos).expect("same dimension");
    println!(
        "\nlattice-only distance {direct}, long links cut it to {} hops",
        outcome.hops
    );
}
