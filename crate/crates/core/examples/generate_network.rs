//! Builds a leveled overlay network and prints its shape.
//!
//! Nodes are planted on an 8x8 lattice. Level-1 links form the full
//! lattice; higher levels span 2, 4, and 8 lattice steps with decreasing
//! probability, mirroring how repeater chains double their reach per
//! entanglement-swapping round. Run with
//! `cargo run --example generate_network`.

use basegraph::overlay::{generate_overlay, hop_distance, GeneratorSpec};

fn main() {
    let spec = GeneratorSpec::new(
        64,                          // nodes
        8,                           // lattice side
        2,                           // lattice dimension
        vec![1.0, 0.9, 0.81, 0.729], // per-level link probabilities
        42,                          // seed
    );
    let network = generate_overlay(&spec).expect("valid generator settings");

    println!(
        "{} nodes, {} links, {} levels\n",
        network.node_count(),
        network.links().len(),
        spec.levels()
    );
    println!(
        "{:>5} {:>10} {:>7} {:>12}",
        "level", "span", "links", "probability"
    );
    for level in 1..=spec.levels() {
        let count = network.links().iter().filter(|l| l.level == level).count();
        println!(
            "{:>5} {:>10} {:>7} {:>12.4}",
            level,
            hop_distance(level, spec.generation).unwrap(),
            count,
            spec.level_probabilities[(level - 1) as usize],
        );
    }

    let sample = &network.links()[network.links().len() / 2];
    println!(
        "\nsample link: {} -- {} at level {} (prob {:.3}, fidelity {:.3})",
        sample.a, sample.b, sample.level, sample.probability, sample.fidelity
    );
    let degrees: Vec<usize> = network.nodes().map(|v| network.degree(v)).collect();
    println!(
        "degree min {} / max {}",
        degrees.iter().min().unwrap(),
        degrees.iter().max().unwrap()
    );
}
