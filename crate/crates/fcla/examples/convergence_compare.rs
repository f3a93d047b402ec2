//! All five optimization schemes on one scenario: per-iteration sum rates
//! of the full alternating loop.
//!
//! ```bash
//! cargo run --release --example convergence_compare
//! ```

use fcla::array::ArrayConfig;
use fcla::channel::sample_scenario;
use fcla::solver::{run_fp_loop, SolverOptions, Variant};

fn main() {
    let config = ArrayConfig::new(4, 4, 0.5, 3.0e9).unwrap();
    let scenario = sample_scenario(1, 4, 11, 1.0);

    let mut traces = Vec::new();
    for variant in Variant::ALL {
        let mut options = SolverOptions::new(variant);
        options.max_outer_iterations = 15;
        let outcome = run_fp_loop(&config, &scenario, &options).unwrap();
        traces.push((variant, outcome.trace.sum_rates()));
    }

    print!("iter");
    for (variant, _) in &traces {
        print!(" | {:>15}", variant.label());
    }
    println!();
    let len = traces[0].1.len();
    for i in 0..len {
        print!("{i:4}");
        for (_, rates) in &traces {
            print!(" | {:15.4}", rates[i]);
        }
        println!();
    }

    println!("\nfinal rates relative to the fixed array:");
    let fixed = traces[0].1.last().copied().unwrap();
    for (variant, rates) in &traces[1..] {
        let last = rates.last().unwrap();
        println!(
            "  {:>15}: {:.4} bits ({:+.1}%)",
            variant.label(),
            last,
            (last / fixed - 1.0) * 100.0
        );
    }
}
