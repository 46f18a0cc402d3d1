//! Lower a kernel to its loop-annotated trace and unroll it at small bounds.
//!
//!     cargo run --example lower_kernel [KERNEL_FILE]

use reuseprof::{flatten, lower_kernel, parse_kernel, BoundVector, EmissionTemplate};

const DEFAULT: &str = include_str!("../data/matvec3.kernel");

fn main() -> reuseprof::Result<()> {
    let source = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).expect("readable kernel file"),
        None => DEFAULT.to_string(),
    };
    let kernel = parse_kernel(&source)?;
    let trace = lower_kernel(&kernel, &EmissionTemplate::default())?;
    println!("trace:   {trace}");
    println!("loops:   {}", trace.declared_bounds());

    let small = BoundVector::from_values(&trace, &vec![2; trace.depth()])?;
    let flat = flatten(&trace, &small)?;
    println!(
        "at {small}: {} symbols, {} distinct",
        flat.len(),
        flat.distinct()
    );
    let head: Vec<String> = flat
        .ids()
        .iter()
        .take(24)
        .map(|&id| flat.symbol(id).to_string())
        .collect();
    println!("first 24: {}", head.join(" "));
    Ok(())
}
