//! Measures delivery statistics over many random source/target pairs.
//!
//! Each trial draws a fresh link realization and a fresh endpoint pair,
//! routes greedily, and feeds the hop count into an ensemble summary.
//! The histogram at the bottom shows how tightly greedy paths concentrate
//! around the mean. Run with `cargo run --example route_ensemble`.

use basegraph::lattice::Configuration;
use basegraph::overlay::{generate_overlay, GeneratorSpec};
use basegraph::routing::{default_hop_limit, route_ensemble, RoutingMetric};

fn main() {
    let spec = GeneratorSpec::new(1024, 32, 2, vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5], 3);
    let network = generate_overlay(&spec).expect("valid generator settings");
    let graph = spec.validate().expect("already validated");
    let config = Configuration::planted(graph, network.node_count()).expect("fits");

    let hop_limit = default_hop_limit(graph.site_count());
    let summary = route_ensemble(&network, &config, 2_000, 21, hop_limit, RoutingMetric::L1)
        .expect("ensemble parameters");

    println!(
        "{} trials on {} nodes (hop limit {hop_limit})",
        summary.trials, spec.node_count
    );
    println!(
        "delivered      {} ({:.1}%)",
        summary.delivered,
        100.0 * summary.delivery_rate
    );
    println!("mean hops      {:.2}", summary.mean_hops);
    println!("median hops    {:.1}", summary.median_hops);
    println!("95th pct hops  {:.1}", summary.p95_hops);

    let peak = summary.hop_histogram.values().copied().max().unwrap_or(1);
    println!("\n{:>4}  {:>5}", "hops", "count");
    for (&hops, &count) in &summary.hop_histogram {
        let bar = "#".repeat((count * 40).div_ceil(peak) as usize);
        println!("{hops:>4}  {count:>5}  {bar}");
    }
}
