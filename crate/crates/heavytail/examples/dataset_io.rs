//! Saving and loading datasets: the on-disk format keeps a content hash, so
//! silent corruption is caught at load time.

use heavytail::{Dataset, NoiseFamily, NoiseSpec, ProblemFamily, RngSpec};

fn main() {
    let dim = 3;
    let noise = NoiseSpec::new(NoiseFamily::StudentT { nu: 2.0 }, 1.0, dim).unwrap();
    let family = ProblemFamily::quad_plus_sine(dim, 0.5, noise).unwrap();
    let mut rng = RngSpec::new(123).build();
    let dataset = family.make_dataset(100, &mut rng).unwrap();

    let dir = std::env::temp_dir().join("heavytail_dataset_io");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("demo.htds");
    dataset.save(&path).unwrap();
    let bytes = std::fs::metadata(&path).unwrap().len();
    println!(
        "saved {} records of width {} to {} ({bytes} bytes)",
        dataset.n(),
        dataset.width(),
        path.display()
    );
    println!("content hash: {:#018x}", dataset.content_hash());

    let loaded = Dataset::load(&path).unwrap();
    println!("round trip is bit-exact: {}", loaded == dataset);

    // flip one payload byte and watch the load fail
    let mut raw = std::fs::read(&path).unwrap();
    let mid = raw.len() / 2;
    raw[mid] ^= 0x01;
    let corrupt = dir.join("corrupt.htds");
    std::fs::write(&corrupt, &raw).unwrap();
    match Dataset::load(&corrupt) {
        Err(e) => println!("corrupted copy rejected: {e}"),
        Ok(_) => println!("corrupted copy loaded (this should not happen)"),
    }

    // truncation is caught before the hash is even checked
    let cut = dir.join("truncated.htds");
    std::fs::write(&cut, &raw[..raw.len() - 9]).unwrap();
    match Dataset::load(&cut) {
        Err(e) => println!("truncated copy rejected: {e}"),
        Ok(_) => println!("truncated copy loaded (this should not happen)"),
    }

    std::fs::remove_dir_all(&dir).ok();
}
