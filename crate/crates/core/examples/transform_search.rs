//! Enumerates coordinate transforms with entries in {0, ±1, ±i} and counts the
//! ones that turn the complex two-slit metric into a real one.

use granular_spacetime::search::{self, ReferenceMetric, SearchSpec, Subspace};

fn main() -> granular_spacetime::Result<()> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());

    let spec = SearchSpec::new(Subspace::ZtRows);
    let r = search::run_search(&spec, workers)?;
    println!(
        "z,t rows free: {} candidates, {} real, {} invertible, {} classes",
        r.candidates_examined, r.real_metric_hits, r.invertible_hits, r.distinct_classes
    );
    for m in r.hit_exemplars.iter().take(3) {
        println!("  #{:<12} {}", m.index, m.entries_string());
    }

    // A sparse pass over the full 5^16 space.
    let mut spec = SearchSpec::new(Subspace::Full);
    spec.sample_stride = 25_400;
    for reference in [ReferenceMetric::TwoSlit1976, ReferenceMetric::PlaneWave2016] {
        spec.reference = reference;
        let r = search::run_search(&spec, workers)?;
        println!(
            "full space {reference:?}: {} sampled, hit rate 1/{:.0}",
            r.candidates_examined,
            1.0 / r.hit_rate()
        );
    }
    Ok(())
}
