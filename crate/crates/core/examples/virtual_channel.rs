//! Virtual channel matrix of a sparse two-path channel and the round trip
//! through the physical antenna domain.
//!
//! cargo run --example virtual_channel

use beamtrack::channel::{physical_angle_to_direction, steering_grid, ChannelState, ModelParams, VirtualChannelMatrix, HALF_WAVELENGTH};
use num_complex::Complex64;

fn main() -> beamtrack::Result<()> {
    let params = ModelParams::with_path_snr(8, 4, 2, 100.0)?;
    let state = ChannelState::new(
        vec![2, 5],
        vec![1, 3],
        vec![Complex64::new(0.8, -0.3), Complex64::new(-0.2, 0.5)],
        &params,
    )?;
    let vcm = VirtualChannelMatrix::assemble(&state, &params);
    println!("nonzero bins: {}", vcm.nonzero_bins());
    for r in 0..params.n_rx {
        let row: Vec<String> = (0..params.n_tx).map(|c| format!("{:5.2}", vcm.matrix[(r, c)].norm())).collect();
        println!("  {}", row.join(" "));
    }

    let h = vcm.to_physical();
    let back = VirtualChannelMatrix::from_physical(&h);
    println!("round-trip error: {:.2e}", back.matrix.max_abs_diff(&vcm.matrix));

    let a = steering_grid(params.n_tx);
    let gram = a.adjoint().matmul(&a);
    println!("grid orthonormality error: {:.2e}", gram.max_abs_diff(&beamtrack::channel::ComplexMatrix::identity(params.n_tx)));
    println!("30 deg -> direction {}", physical_angle_to_direction(std::f64::consts::FRAC_PI_6, HALF_WAVELENGTH));
    Ok(())
}
