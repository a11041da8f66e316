use granular_spacetime::metric;
use granular_spacetime::search;

fn main() {
    for v in search::verify_f_transforms() {
        println!(
            "{:<3} |det A| = {:.3}  matched: {:<8}  max err {:.1e}",
            v.name,
            v.det_transform,
            v.matched.map_or("none".to_string(), |c| format!("{c:?}")),
            v.direct.max_error
        );
    }
    for f in metric::f_metric_catalog() {
        println!("{} at α = 0.3: |det| = {:.1e}", f.name, f.at(0.3).det().norm());
    }
}
