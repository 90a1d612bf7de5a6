//! Measures how greedy routing scales with lattice size.
//!
//! On planted instances whose long links follow the inverse-square
//! distance law, the mean greedy hop count grows like (log2 n)^2, so the
//! ratio mean_hops / (log2 n)^2 should stay within a constant band across
//! sizes. Run with `cargo run --release --example scaling_experiment`.

use basegraph::{scaling_experiment, ScalingSpec};

fn main() {
    let mut spec = ScalingSpec::new(vec![8, 16, 32, 64], 2000, 7);
    spec.long_links_per_node = 2.0;
    let report = scaling_experiment(&spec).expect("valid spec");

    println!(
        "{:>6} {:>8} {:>10} {:>10} {:>8} {:>9}",
        "side", "n", "mean_hops", "log2n_sq", "ratio", "delivery"
    );
    for row in &report.rows {
        println!(
            "{:>6} {:>8} {:>10.3} {:>10.1} {:>8.4} {:>9.4}",
            row.side, row.n, row.mean_hops, row.log2n_sq, row.ratio, row.delivery_rate
        );
    }
    let min = report
        .rows
        .iter()
        .map(|r| r.ratio)
        .fold(f64::INFINITY, f64::min);
    let max = report.rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    println!(
        "\nratio spread max/min = {:.3} (flat ratios indicate (log n)^2 scaling)",
        max / min
    );
}
