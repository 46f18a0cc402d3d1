//! Reuse-distance profiles for loop-nest array kernels without running them.
//!
//! A kernel is lowered to a loop-annotated memory trace, profiled exactly at
//! a few small loop bounds, and the profile at the real bounds is
//! extrapolated from those samples. The [`cache`] module turns any profile
//! into an expected hit rate for a set-associative cache.
//!
//! ```
//! use reuseprof::{lower_kernel, parse_kernel, predict_profile, EmissionTemplate};
//!
//! let kernel = parse_kernel("scalar retval; scalar alpha; for k < 102 { A[0][k] = alpha * A[0][k]; B[0][k] = alpha; }")?;
//! let trace = lower_kernel(&kernel, &EmissionTemplate::default())?;
//! let profile = predict_profile(&trace, &trace.declared_bounds())?;
//! assert_eq!(profile.histogram.get(-1), 207);
//! # Ok::<(), reuseprof::Error>(())
//! ```

pub mod cache;
pub mod cli;
pub mod error;
pub mod extrapolate;
pub mod flatten;
pub mod kernel;
pub mod oracle;
pub mod profile;
pub mod trace;

pub use cache::{hit_probability, hit_rate, CacheConfig};
pub use error::{Error, Result};
pub use extrapolate::{
    collect_samples, predict_profile, PredictedProfile, PredictionMethod, Predictor, Provenance,
};
pub use flatten::{flatten, flatten_with, BoundVector, FlattenOptions, SIZE_LIMIT_ENV};
pub use kernel::{
    generate_kernel, lower_kernel, parse_kernel, EmissionTemplate, GenOptions, KernelDef,
};
pub use oracle::{compare_profiles, exact_profile, ComparisonReport};
pub use profile::{compute_profile, ReuseHistogram, COLD_MISS};
pub use trace::{
    parse_trace, render_trace, trace_length, AnnotatedTrace, FlatTrace, Symbol, Token,
};
