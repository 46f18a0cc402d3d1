//! Generate random kernels, predict each at moderate bounds, and compare
//! with the exact profile.
//!
//!     cargo run --example random_kernels [SEED] [DEPTH]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reuseprof::{
    compare_profiles, exact_profile, flatten, generate_kernel, lower_kernel, BoundVector,
    EmissionTemplate, GenOptions, Predictor,
};

fn main() -> reuseprof::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let depth = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..8 {
        let kernel = generate_kernel(&GenOptions::with_depth(depth), &mut rng);
        let trace = lower_kernel(&kernel, &EmissionTemplate::default())?;
        let target: Vec<u64> = [20, 16, 10][..depth].to_vec();
        let predicted = Predictor::new(&trace)?.predict(&target)?;
        let exact = exact_profile(&flatten(
            &trace,
            &BoundVector::from_values(&trace, &target)?,
        )?);
        let cmp = compare_profiles(&predicted.histogram, &exact);
        println!(
            "#{n} {:>3} statements  accuracy {:.4}  residual {:?}  {}",
            kernel.statements.len(),
            cmp.accuracy,
            predicted.residual(),
            predicted.method
        );
    }
    Ok(())
}
