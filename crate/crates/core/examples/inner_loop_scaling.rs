//! Fit per-distance linear laws to three small samples and evaluate them at
//! k = 102.

use reuseprof::extrapolate::{classify_distances, fit_stable, SampleSet};
use reuseprof::ReuseHistogram;

fn main() -> reuseprof::Result<()> {
    let samples = SampleSet::from_histograms(
        vec!["k".into()],
        [
            (
                vec![2],
                ReuseHistogram::from([(0, 5), (1, 9), (2, 5), (-1, 7)]),
            ),
            (
                vec![3],
                ReuseHistogram::from([(0, 7), (1, 13), (2, 8), (-1, 9)]),
            ),
            (
                vec![4],
                ReuseHistogram::from([(0, 9), (1, 17), (2, 11), (-1, 11)]),
            ),
        ],
    )?;
    let classes = classify_distances(&samples)?;
    let model = fit_stable(&samples, &classes)?;
    println!(
        "{:>8} {:>6} {:>6} {:>8}",
        "distance", "base", "incr", "k=102"
    );
    for d in model.distances() {
        println!(
            "{d:>8} {:>6} {:>6} {:>8}",
            model.base(d).unwrap_or_default(),
            model.increment(d, 0).unwrap_or_default(),
            model.frequency_at(d, &[102]).unwrap_or_default()
        );
    }
    Ok(())
}
