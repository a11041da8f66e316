use granular_spacetime::rng::RngStream;
use granular_spacetime::spread::{self, ComponentLaw, MetricFluctuationSpec};

fn main() -> granular_spacetime::Result<()> {
    let spec = MetricFluctuationSpec {
        sigma: 1.0,
        distribution: ComponentLaw::Bimodal,
    };
    let v = spread::metric_average_variance(&spec, &[1, 10, 100, 1000], 10_000, RngStream::new(3, 0), 1)?;
    for (m, var) in &v.points {
        println!("m = {m:>4}: Var = {var:.3e}");
    }
    println!("log-log slope {:.3}", v.log_log_slope);

    let recs = spread::uncertainty_product(
        &spec,
        1.0,
        &[1.0, 2.0, 4.0, 8.0, 16.0],
        16.0,
        10_000,
        RngStream::new(3, 1),
        1,
    )?;
    for r in recs {
        println!(
            "V = {:>4}: Δg = {:.3e}, ΔQ·Δg·p = {:.4}",
            r.volume, r.delta_g, r.product
        );
    }
    Ok(())
}
