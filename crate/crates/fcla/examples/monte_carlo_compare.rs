//! Paired Monte Carlo comparison: every scheme sees the same random
//! scenarios, so the mean gains are per-seed dominance statements rather
//! than noise.
//!
//! ```bash
//! cargo run --release --example monte_carlo_compare
//! ```

use fcla::array::ArrayConfig;
use fcla::channel::ScenarioParams;
use fcla::experiment::{monte_carlo, PointSetup};
use fcla::solver::{SolverOptions, Variant};

fn main() {
    let trials = 20;
    let setup = PointSetup {
        array: ArrayConfig::new(4, 4, 0.5, 3.0e9).unwrap(),
        scenario: ScenarioParams::new(4, 11, 1.0),
        solver: SolverOptions::new(Variant::FixedFp),
    };
    println!("running {trials} paired trials x {} variants...", Variant::ALL.len());
    let report = monte_carlo(&setup, &Variant::ALL, trials, 1);

    let fixed = report.variant(Variant::FixedFp).unwrap().final_mean;
    println!("\nmean final sum rate over {trials} trials:");
    for vr in &report.variants {
        println!(
            "  {:>15}: {:.4} bits ({:+.1}% vs fixed)",
            vr.variant.label(),
            vr.final_mean,
            (vr.final_mean / fixed - 1.0) * 100.0
        );
    }

    // Paired seeds make per-trial comparisons meaningful.
    let adam = report.variant(Variant::FpMaAdam).unwrap();
    let fixed_traces = &report.variant(Variant::FixedFp).unwrap().traces;
    let wins = adam
        .traces
        .iter()
        .zip(fixed_traces)
        .filter(|(a, f)| a.last() > f.last())
        .count();
    println!("\nmovable beats fixed on {wins}/{trials} paired seeds");

    println!("\nmean trace (fixed vs movable):");
    let fixed_mean = &report.variant(Variant::FixedFp).unwrap().mean_trace;
    for (i, (f, a)) in fixed_mean.iter().zip(&adam.mean_trace).enumerate() {
        println!("  iter {i:2}: {f:8.4} | {a:8.4}");
    }
}
