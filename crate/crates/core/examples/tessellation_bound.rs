//! Checks the tessellation diameter bound on seeded instances.
//!
//! The side-64 box is carved into nested squares of side 64^(0.8^i). When
//! every pair of occupied sibling squares is joined by a present link at
//! both levels, the diameter obeys 2^(m+2) * 64^(0.8^m). Instances where
//! some square pair stays unjoined are reported as non-qualifying.
//! Run with `cargo run --release --example tessellation_bound`.

use basegraph::lattice::{BaseGraph, Configuration};
use basegraph::overlay::{generate_overlay, realize_links, GeneratorSpec};
use basegraph::tessellate_and_check;

fn main() {
    let side = 64u32;
    let levels = (side.trailing_zeros() + 1) as usize;
    let (gamma, m) = (0.8, 2);
    let mut qualifying = 0;
    let mut excluded = 0;
    let mut worst: f64 = 0.0;

    for seed in 0..10u64 {
        let mut spec = GeneratorSpec::new(side * side, side, 2, vec![1.0; levels], seed);
        spec.links_per_level = 2.0;
        let network = generate_overlay(&spec).expect("valid spec");
        let graph = BaseGraph::new(2, side).expect("valid graph");
        let config = Configuration::planted(graph, side * side).expect("fits");
        let realization = realize_links(&network, seed ^ 0x9e37);
        let report = tessellate_and_check(&realization, &config, gamma, m)
            .expect("valid tessellation inputs");
        let events: String = report
            .events_violated
            .iter()
            .map(|&v| if v { 'V' } else { '-' })
            .collect();
        println!(
            "seed {seed:>2}: events {events}  diameter {:>3}  bound {:.2}  holds {}",
            report.measured_diameter, report.bound_value, report.bound_holds
        );
        if report.all_events_violated {
            qualifying += 1;
            worst = worst.max(report.measured_diameter as f64 / report.bound_value);
            assert!(
                report.bound_holds,
                "bound must hold on qualifying instances"
            );
        } else {
            excluded += 1;
        }
    }
    println!("\nqualifying {qualifying}, excluded {excluded}; worst diameter/bound = {worst:.4}");
}
