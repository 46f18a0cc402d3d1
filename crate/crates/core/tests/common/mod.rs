//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use reuseprof::{FlatTrace, ReuseHistogram};

/// Hit probability by exact rational summation:
/// `sum_{a<A} C(D,a) (S-1)^(D-a) / S^D`.
pub fn exact_hit_probability(distance: i64, sets: u64, ways: u64) -> f64 {
    if distance < 0 {
        return 0.0;
    }
    let d = distance as u64;
    if d < ways {
        return 1.0;
    }
    let s = BigUint::from(sets);
    let s1 = BigUint::from(sets - 1);
    let mut numer = BigUint::zero();
    let mut binom = BigUint::one();
    for a in 0..ways {
        if a > 0 {
            binom = binom * BigUint::from(d - a + 1) / BigUint::from(a);
        }
        numer += &binom * s1.pow((d - a) as u32);
    }
    let denom = s.pow(d as u32);
    BigRational::new(numer.into(), denom.into())
        .to_f64()
        .expect("finite ratio")
}

/// Quadratic reuse profile straight from the definition: for each access,
/// collect the distinct symbols since the previous access to the same one.
pub fn naive_profile(ids: &[u32]) -> ReuseHistogram {
    let mut h = BTreeMap::new();
    for (i, &x) in ids.iter().enumerate() {
        let d = match ids[..i].iter().rposition(|&y| y == x) {
            None => -1,
            Some(p) => {
                let mut seen: Vec<u32> = ids[p + 1..i].to_vec();
                seen.sort_unstable();
                seen.dedup();
                seen.len() as i64
            }
        };
        *h.entry(d).or_insert(0u64) += 1;
    }
    h.into_iter().collect()
}

/// A random scalar-only trace.
pub fn random_trace<R: Rng>(rng: &mut R, max_len: usize, max_alphabet: usize) -> FlatTrace {
    let len = rng.random_range(0..=max_len);
    let alphabet = rng.random_range(1..=max_alphabet);
    let names: Vec<String> = (0..alphabet).map(|n| format!("s{n}")).collect();
    let picks: Vec<&str> = (0..len)
        .map(|_| names[rng.random_range(0..alphabet)].as_str())
        .collect();
    FlatTrace::from_names(&picks)
}

pub fn data(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}
