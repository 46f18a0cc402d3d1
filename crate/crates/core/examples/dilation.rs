//! Predict a volatile block whose distances spread out as the inner bound
//! grows: start, size and offsets at k = 102 from the blocks at k = 2, 3, 4.

use reuseprof::extrapolate::VolatileModel;

fn main() -> reuseprof::Result<()> {
    let k2 = [(7, 4), (9, 1), (10, 2), (11, 1)];
    let k3 = [(9, 6), (12, 1), (13, 2), (14, 2), (15, 1)];
    let k4 = [(11, 8), (15, 1), (16, 2), (17, 2), (18, 2), (19, 1)];
    let model = VolatileModel::fit([&k2, &k3, &k4], 2)?;

    for k in [5, 10, 102] {
        let offsets = model.offsets_at(k)?;
        println!(
            "k={k}: start {}, size {}, offsets {:?} .. {:?}",
            model.start_at(k).unwrap_or_default(),
            model.size_at(k),
            &offsets[..offsets.len().min(4)],
            offsets.last()
        );
    }
    let block = model.predict(102)?;
    println!("k=102 block head: {:?}", &block[..4]);
    Ok(())
}
