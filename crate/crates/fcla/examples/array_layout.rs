//! Cylindrical array geometry: build a configuration, inspect the spacing
//! limits, lay antennas out, and check feasibility.
//!
//! ```bash
//! cargo run --release --example array_layout
//! ```

use fcla::array::{
    check_feasible, default_layout, position_of, wrapped_angular_distance, ArrayConfig,
};

fn main() {
    // Four stacked rings of four antennas on a 0.5 m radius at 3 GHz.
    let config = ArrayConfig::new(4, 4, 0.5, 3.0e9).unwrap();
    println!("wavelength      : {:.6} m", config.wavelength_m());
    println!("psi_min         : {:.6} rad (chord = half wavelength)", config.psi_min());
    println!("z_min           : {:.6} m", config.z_min());

    let layout = default_layout(&config);
    println!("\nuniform layout ({} antennas):", config.num_antennas());
    for m in 0..config.num_layers() {
        for n in 0..config.antennas_per_layer() {
            let p = position_of(&config, &layout, m, n);
            println!(
                "  layer {m} slot {n}: psi = {:.4} rad, position = ({:+.3}, {:+.3}, {:.3}) m",
                layout.psi(m, n),
                p.x,
                p.y,
                p.z
            );
        }
    }
    assert!(check_feasible(&config, &layout).is_feasible());
    println!("\nuniform layout is feasible");

    // Nudge two antennas together until they violate the angular constraint.
    let mut broken = layout.clone();
    broken.set_psi(0, 1, broken.psi(0, 0) + config.psi_min() / 2.0);
    let report = check_feasible(&config, &broken);
    println!(
        "after moving layer 0 slot 1 within psi_min of slot 0: feasible = {}, violations = {:?}",
        report.is_feasible(),
        report.violations
    );
    println!(
        "their wrapped angular distance: {:.4} rad < psi_min {:.4}",
        wrapped_angular_distance(broken.psi(0, 0), broken.psi(0, 1)),
        config.psi_min()
    );

    // A small ring leaves almost no angular slack: the same four antennas
    // need 86% of the ring just for their minimum spacing.
    let tight = ArrayConfig::new(4, 4, 0.04, 3.0e9).unwrap();
    println!(
        "\nR = 0.04 m: psi_min = {:.4} rad, N * psi_min = {:.4} of 2*pi = {:.4}",
        tight.psi_min(),
        4.0 * tight.psi_min(),
        std::f64::consts::TAU
    );
}
