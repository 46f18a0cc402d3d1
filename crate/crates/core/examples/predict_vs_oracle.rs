//! Predict the three-level kernel at growing bounds and check each
//! prediction against the exact profile.

use reuseprof::{
    compare_profiles, exact_profile, flatten, hit_rate, parse_trace, BoundVector, CacheConfig,
    Predictor,
};

fn main() -> reuseprof::Result<()> {
    let trace = parse_trace(include_str!("../data/matvec3.trace"))?;
    let mut predictor = Predictor::new(&trace)?;
    let cache = CacheConfig::REFERENCE;
    println!(
        "{:>14} {:>10} {:>9} {:>9} {:>9}  method",
        "bounds", "accesses", "accuracy", "hit pred", "hit exact"
    );
    for target in [[4, 4, 4], [8, 7, 9], [16, 12, 10], [30, 20, 12]] {
        let predicted = predictor.predict(&target)?;
        let exact = exact_profile(&flatten(
            &trace,
            &BoundVector::from_values(&trace, &target)?,
        )?);
        let cmp = compare_profiles(&predicted.histogram, &exact);
        println!(
            "{:>14} {:>10} {:>9.4} {:>9.4} {:>9.4}  {}",
            format!("{target:?}"),
            predicted.histogram.total(),
            cmp.accuracy,
            hit_rate(&predicted.histogram, &cache)?,
            hit_rate(&exact, &cache)?,
            predicted.method
        );
    }
    Ok(())
}
