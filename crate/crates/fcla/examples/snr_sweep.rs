//! A config-driven sweep through the library API: vary the SNR, run the
//! paired Monte Carlo comparison at each point, and write the same
//! run.json/CSV outputs the `fcla` binary produces.
//!
//! ```bash
//! cargo run --release --example snr_sweep
//! ```

use fcla::experiment::{load_config, run_experiment, write_outputs};

const CONFIG: &str = r#"
[array]
layers = 4
antennas_per_layer = 4
radius_m = 0.5
carrier_hz = 3.0e9

[scenario]
users = 4
paths = 11
noise_variance = 1.0

[solver]
max_outer_iterations = 10

[experiment]
variants = ["fixed_fp", "fp_ma_adam"]
trials = 5
base_seed = 1

[sweep]
axis = "snr_db"
values = [-10.0, -5.0, 0.0, 5.0]
"#;

fn main() {
    let cfg = load_config(CONFIG).unwrap();
    println!(
        "sweeping {} over {:?} ({} trials per point)...",
        cfg.sweep.as_ref().unwrap().axis.column_name(),
        cfg.sweep.as_ref().unwrap().values,
        cfg.experiment.trials
    );
    let run = run_experiment(&cfg).unwrap();

    println!("\nmean final sum rate (bits):");
    print!("{:>8}", "snr_db");
    for vr in &run.points[0].report.variants {
        print!(" | {:>12}", vr.variant.label());
    }
    println!();
    for point in &run.points {
        print!("{:8.1}", point.value.unwrap());
        for vr in &point.report.variants {
            print!(" | {:12.4}", vr.final_mean);
        }
        println!();
    }

    let out = std::path::Path::new("out/snr_sweep");
    write_outputs(&run, out).unwrap();
    println!("\nwrote {}/run.json, trace.csv, final.csv", out.display());
}
