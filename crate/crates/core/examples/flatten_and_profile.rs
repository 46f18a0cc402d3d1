//! Exact profiles of the single-loop kernel at k = 2, 3, 4, computed both
//! with the literal window scan and with the tree-based oracle.

use reuseprof::{
    compute_profile, exact_profile, flatten, lower_kernel, parse_kernel, BoundVector,
    EmissionTemplate,
};

fn main() -> reuseprof::Result<()> {
    let kernel = parse_kernel(include_str!("../data/inner_loop.kernel"))?;
    let trace = lower_kernel(&kernel, &EmissionTemplate::default())?;
    println!("{trace}");
    for k in 2..=4 {
        let flat = flatten(&trace, &BoundVector::from_values(&trace, &[k])?)?;
        let scan = compute_profile(&flat);
        let tree = exact_profile(&flat);
        assert_eq!(scan, tree);
        println!("k={k}: {} accesses  {scan}", flat.len());
    }
    Ok(())
}
