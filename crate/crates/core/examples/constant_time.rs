//! Prediction time stays flat as the bounds grow; exact profiling does not.

use std::time::Instant;

use reuseprof::{compute_profile, flatten, parse_trace, BoundVector, Predictor};

fn main() -> reuseprof::Result<()> {
    let trace = parse_trace(include_str!("../data/matvec3.trace"))?;
    for scale in [1u64, 2, 5, 10, 100] {
        let target = [48 * scale, 32 * scale, 19 * scale];
        let start = Instant::now();
        let p = Predictor::new(&trace)?.predict(&target)?;
        println!(
            "predict {:>18}: {:>8.3} ms for {:>14} accesses",
            format!("{target:?}"),
            start.elapsed().as_secs_f64() * 1e3,
            p.histogram.total()
        );
    }
    let start = Instant::now();
    let flat = flatten(&trace, &BoundVector::from_values(&trace, &[48, 32, 19])?)?;
    let h = compute_profile(&flat);
    println!(
        "exact profile at [48, 32, 19]: {:.3} ms for {} accesses",
        start.elapsed().as_secs_f64() * 1e3,
        h.total()
    );
    Ok(())
}
