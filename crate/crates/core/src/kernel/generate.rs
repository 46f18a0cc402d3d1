//! Seeded random kernels for property tests and the `gen` subcommand.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{Access, KernelDef, LoopDef, StatementDef};
use crate::trace::Index;

const LOOP_VARS: [&str; 3] = ["i", "j", "k"];
const SCALARS: [&str; 3] = ["alpha", "beta", "tmp"];
const VECTORS: [&str; 4] = ["x", "y", "z", "w"];
const MATRICES: [&str; 4] = ["A", "B", "C", "D"];

#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    /// Loop depth, 1 to 3.
    pub depth: usize,
    pub max_statements: usize,
    pub max_reads: usize,
    /// Inclusive range the loop bounds written into the kernel are drawn from.
    pub bounds: (u64, u64),
    /// Probability that an index slot is an integer constant instead of a
    /// loop variable. Zero gives kernels indexed by bare loop variables only.
    pub constant_index_prob: f64,
}

impl GenOptions {
    pub fn with_depth(depth: usize) -> Self {
        GenOptions {
            depth,
            ..Self::default()
        }
    }
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            depth: 2,
            max_statements: 3,
            max_reads: 3,
            bounds: (16, 512),
            constant_index_prob: 0.0,
        }
    }
}

/// Draw a random perfectly nested kernel.
///
/// Arrays have rank 1 or 2 (never above the depth), index slots use
/// distinct loop variables, and about a quarter of accesses are scalars
/// when any are declared.
pub fn generate_kernel<R: Rng + ?Sized>(options: &GenOptions, rng: &mut R) -> KernelDef {
    let depth = options.depth.clamp(1, LOOP_VARS.len());
    let vars: Vec<&str> = LOOP_VARS[..depth].to_vec();
    let loops = vars
        .iter()
        .map(|v| LoopDef {
            var: v.to_string(),
            bound: rng.random_range(options.bounds.0.max(1)..=options.bounds.1.max(1)),
        })
        .collect();

    let mut scalars: Vec<&str> = SCALARS.to_vec();
    scalars.shuffle(rng);
    scalars.truncate(rng.random_range(0..=2));
    let mut preamble: Vec<String> = Vec::new();
    if rng.random_bool(0.5) {
        preamble.push("retval".into());
    }
    preamble.extend(scalars.iter().map(|s| s.to_string()));

    let access = |rng: &mut R| -> Access {
        if !scalars.is_empty() && rng.random_bool(0.25) {
            return Access::scalar(*scalars.choose(rng).expect("non-empty"));
        }
        let rank = rng.random_range(1..=depth.min(2));
        let name = if rank == 1 {
            VECTORS.choose(rng)
        } else {
            MATRICES.choose(rng)
        }
        .expect("non-empty");
        let mut slots = vars.clone();
        slots.shuffle(rng);
        let indices = slots[..rank]
            .iter()
            .map(|v| {
                if options.constant_index_prob > 0.0 && rng.random_bool(options.constant_index_prob)
                {
                    Index::Const(rng.random_range(0..4))
                } else {
                    Index::Var(v.to_string())
                }
            })
            .collect();
        Access::array(*name, indices)
    };

    let statements = (0..rng.random_range(0..=options.max_statements))
        .map(|_| {
            let write = access(rng);
            let reads = (0..rng.random_range(0..=options.max_reads))
                .map(|_| access(rng))
                .collect();
            StatementDef { write, reads }
        })
        .collect();

    KernelDef {
        preamble,
        loops,
        statements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{lower_kernel, parse_kernel, EmissionTemplate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_for_a_seed() {
        let opts = GenOptions::with_depth(3);
        let a = generate_kernel(&opts, &mut ChaCha8Rng::seed_from_u64(7));
        let b = generate_kernel(&opts, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn generated_kernels_are_valid_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for depth in 1..=3 {
            for _ in 0..50 {
                let opts = GenOptions {
                    constant_index_prob: 0.2,
                    ..GenOptions::with_depth(depth)
                };
                let k = generate_kernel(&opts, &mut rng);
                assert_eq!(k.loops.len(), depth);
                k.validate().unwrap();
                lower_kernel(&k, &EmissionTemplate::default()).unwrap();
                assert_eq!(parse_kernel(&k.to_dsl()).unwrap(), k);
            }
        }
    }
}
