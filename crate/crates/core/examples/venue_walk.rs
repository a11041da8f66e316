//! Venue random walks on the 4D lattice, with a classical Wiener walk for
//! comparison.

use granular_spacetime::rng::RngStream;
use granular_spacetime::walk::{self, WalkConfig, WienerScaling};

fn main() -> granular_spacetime::Result<()> {
    let rng = RngStream::new(7, 0);
    for ds2 in [false, true] {
        let config = WalkConfig {
            steps: 400,
            ds2_conservation: ds2,
            ..WalkConfig::default()
        };
        let s = walk::run_walk(&config, 5000, rng, 1)?;
        println!("ds² paired = {ds2}");
        println!(
            "  variance x,y,z,t: {:?}",
            s.displacement_variance.map(|v| (v * 10.0).round() / 10.0)
        );
        println!(
            "  superluminal: {:.3} per step, {:.3} per {}-step segment",
            s.superluminal_fraction, s.superluminal_fraction_segment, s.segment_length
        );
    }

    let xs = walk::wiener_terminals(10_000, 2000, WienerScaling::Uniform, rng.substream(1), 1)?;
    let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
    println!("Wiener terminal variance {var:.3}");
    Ok(())
}
