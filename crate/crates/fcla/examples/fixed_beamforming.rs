//! Fractional-programming beamforming on a fixed array: the closed-form
//! auxiliary updates and the bisection-constrained precoder solve, iterated
//! to convergence.
//!
//! ```bash
//! cargo run --release --example fixed_beamforming
//! ```

use fcla::array::{default_layout, ArrayConfig};
use fcla::channel::{build_channel, sample_scenario};
use fcla::fp::{
    build_surrogates, lagrangian_value, matched_filter, solve_beamformer, sum_rate,
    AuxiliaryVariables,
};

fn main() {
    let config = ArrayConfig::new(4, 4, 0.5, 3.0e9).unwrap();
    let layout = default_layout(&config);
    let scenario = sample_scenario(7, 4, 11, 1.0);
    let noise = scenario.noise_variances();
    let power = 1.0;

    let h = build_channel(&config, &layout, &scenario);
    let mut beamformer = matched_filter(&h, power);
    println!(
        "matched filter start: {:.4} bits, transmit power {:.6}",
        sum_rate(&h, &beamformer, noise),
        beamformer.power()
    );

    println!("\niter |   sum rate | surrogate (nats) |   lambda | power");
    for iter in 1..=12 {
        let aux = AuxiliaryVariables::optimal(&h, &beamformer, noise);
        let surrogates = build_surrogates(&h, &aux, noise);
        let (f_new, lambda) = solve_beamformer(&surrogates, power).unwrap();
        beamformer = f_new;
        println!(
            "{iter:4} | {:10.6} | {:16.6} | {lambda:8.4} | {:.9}",
            sum_rate(&h, &beamformer, noise),
            lagrangian_value(&h, &beamformer, &aux, noise),
            beamformer.power()
        );
    }

    println!("\nper-user SINRs at the fixed point:");
    for k in 0..4 {
        println!("  user {k}: {:.4}", fcla::fp::sinr(&h, &beamformer, noise, k));
    }
}
