//! Hit probability against stack distance, and the hit rate of one
//! predicted profile under several cache geometries.

use reuseprof::{hit_probability, hit_rate, parse_trace, predict_profile, CacheConfig};

fn main() -> reuseprof::Result<()> {
    let reference = CacheConfig::REFERENCE;
    println!("{reference}");
    for d in [-1, 0, 31, 512, 1024, 2048, 3072, 4096] {
        println!(
            "  P(hit | D={d:>5}) = {:.6}",
            hit_probability(d, &reference)
        );
    }

    let trace = parse_trace(include_str!("../data/matvec3.trace"))?;
    let profile = predict_profile(&trace, &trace.declared_bounds())?;
    println!("\nmatvec3 at {}", profile.target);
    for (size, ways, line) in [
        (8 * 1024, 8, 64),
        (32 * 1024, 8, 64),
        (64 * 1024, 32, 32),
        (1 << 20, 16, 64),
    ] {
        let config = CacheConfig::new(size, ways, line)?;
        println!("  {config}: {:.4}", hit_rate(&profile.histogram, &config)?);
    }
    Ok(())
}
