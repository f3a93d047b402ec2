//! One constrained grid-search + Adam position pass: how much the surrogate
//! objective improves when antennas revolve and layers slide, with the
//! spacing constraints enforced throughout.
//!
//! ```bash
//! cargo run --release --example position_search
//! ```

use fcla::array::{check_feasible, default_layout, ArrayConfig};
use fcla::channel::{build_channel, sample_scenario};
use fcla::fp::{build_surrogates, matched_filter, solve_beamformer, AuxiliaryVariables};
use fcla::position::{grad_psi, grad_z, PositionOptions, PositionProblem};

fn main() {
    let config = ArrayConfig::new(4, 4, 0.5, 3.0e9).unwrap();
    let layout = default_layout(&config);
    let scenario = sample_scenario(21, 4, 11, 1.0);
    let noise = scenario.noise_variances();

    // Freeze a beamformer and its auxiliaries, as the outer loop would.
    let h = build_channel(&config, &layout, &scenario);
    let f0 = matched_filter(&h, 1.0);
    let aux = AuxiliaryVariables::optimal(&h, &f0, noise);
    let (beamformer, _) = solve_beamformer(&build_surrogates(&h, &aux, noise), 1.0).unwrap();
    let aux = AuxiliaryVariables::optimal(&h, &beamformer, noise);

    // Analytic gradients at the starting point.
    println!("gradients at the uniform layout:");
    for m in 0..config.num_layers() {
        let g_z = grad_z(&config, &layout, &scenario, &h, &beamformer, &aux, m);
        let g_psi: Vec<String> = (0..config.antennas_per_layer())
            .map(|n| {
                format!(
                    "{:+.3}",
                    grad_psi(&config, &layout, &scenario, &h, &beamformer, &aux, m, n)
                )
            })
            .collect();
        println!("  layer {m}: d/dpsi = [{}], d/dz = {g_z:+.3}", g_psi.join(", "));
    }

    let mut problem = PositionProblem::new(&config, &scenario, layout.clone(), &beamformer, &aux);
    let opts = PositionOptions::default();
    println!("\nsurrogate objective before: {:+.6}", problem.objective());
    problem.optimize_psi(&opts);
    println!("after the angle pass      : {:+.6}", problem.objective());
    problem.optimize_z(&opts);
    println!("after the height pass     : {:+.6}", problem.objective());

    let moved = problem.layout();
    assert!(check_feasible(&config, moved).is_feasible());
    println!("\nantenna movement (feasible layout preserved):");
    for m in 0..config.num_layers() {
        let angles: Vec<String> = (0..config.antennas_per_layer())
            .map(|n| format!("{:.3}->{:.3}", layout.psi(m, n), moved.psi(m, n)))
            .collect();
        println!(
            "  layer {m}: psi {}, z {:.4} -> {:.4} m",
            angles.join(", "),
            layout.z(m),
            moved.z(m)
        );
    }
}
