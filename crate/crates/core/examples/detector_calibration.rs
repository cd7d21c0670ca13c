//! Empirical error rates of the energy detector against the closed forms.
//!
//! cargo run --release --example detector_calibration

use beamtrack::channel::{ChannelState, ModelParams};
use beamtrack::sensing::{filter_bank_output, DetectorSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> beamtrack::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "snr_db", "p_fa", "emp_fa", "p_md", "emp_md");
    for snr_db in [0.0, 5.0, 10.0, 20.0] {
        let snr = 10f64.powf(snr_db / 10.0);
        let params = ModelParams::with_path_snr(8, 1, 1, snr)?;
        let d = DetectorSpec::new(0.05, &params)?;
        let empty = ChannelState::new(vec![0], vec![0], vec![Complex64::new(0.0, 0.0)], &params)?;
        let mut fa = 0;
        let mut md = 0;
        for _ in 0..n {
            if filter_bank_output(&empty, 0, &params, &mut rng)[0].norm_sqr() >= d.threshold {
                fa += 1;
            }
            let occupied = ChannelState::random(&params, &mut rng);
            let col = occupied.columns[0];
            if filter_bank_output(&occupied, col, &params, &mut rng)[0].norm_sqr() < d.threshold {
                md += 1;
            }
        }
        println!(
            "{snr_db:>8.1} {:>10.4} {:>10.4} {:>10.6} {:>10.6}",
            d.p_fa,
            fa as f64 / n as f64,
            d.p_md,
            md as f64 / n as f64
        );
    }
    Ok(())
}
