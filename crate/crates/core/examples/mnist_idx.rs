//! IDX encoding and parsing. With two paths, loads real MNIST files
//! (optionally gzipped); otherwise round-trips a synthetic data set.
//!
//!     cargo run --release --example mnist_idx -- train-images-idx3-ubyte.gz train-labels-idx1-ubyte.gz

use std::path::Path;

use guided_es::dataset::{load_mnist, parse_idx_images, parse_idx_labels, synthetic_blobs};
use guided_es::linalg::RngSeed;

fn main() -> guided_es::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [images, labels] = args.as_slice() {
        let data = load_mnist(Path::new(images), Path::new(labels), Some(1000))?;
        println!("loaded {} images of {} pixels", data.len(), data.feature_dim());
        let mut counts = [0usize; 10];
        for &l in data.labels() {
            counts[l] += 1;
        }
        println!("label counts {counts:?}");
        return Ok(());
    }

    let data = synthetic_blobs(10, 5, 16, 0.1, RngSeed(1))?;
    let (img, lbl) = data.to_idx(&[4, 4])?;
    println!("encoded {} image bytes, {} label bytes", img.len(), lbl.len());
    let back = parse_idx_images(&img)?;
    let labels = parse_idx_labels(&lbl, Some(10))?;
    println!("parsed {} rows x {} cols, labels match: {}", back.rows, back.cols, labels == data.labels());

    let mut bad = img.clone();
    bad[3] = 0x01;
    match parse_idx_images(&bad) {
        Err(e) => println!("corrupted magic: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
