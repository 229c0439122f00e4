//! Index a Python repository and list what was stored.
//!
//!     cargo run --example index_repository -- [REPO_DIR]
//!
//! Without an argument a small demo repository is generated.

use std::path::PathBuf;

use saracoder::store::{index_repository, load_index, IndexConfig};

const DEMO: &[(&str, &str)] = &[
    (
        "shop/cart.py",
        "from shop.pricing import discount\n\ndef total(items, code):\n    subtotal = sum(i.price for i in items)\n    rate = discount(code)\n    return subtotal * (1 - rate)\n",
    ),
    ("shop/pricing.py", "RATES = {'SPRING': 0.1}\n\ndef discount(code):\n    return RATES.get(code, 0.0)\n"),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scratch = tempfile::tempdir()?;
    let repo = match std::env::args_os().nth(1) {
        Some(path) => PathBuf::from(path),
        None => {
            for (path, source) in DEMO {
                let full = scratch.path().join(path);
                std::fs::create_dir_all(full.parent().unwrap())?;
                std::fs::write(full, source)?;
            }
            scratch.path().to_path_buf()
        }
    };
    let out = scratch.path().join(".index");
    let manifest = index_repository(&repo, &out, &IndexConfig::default())?;
    println!(
        "{} files, {} snippets (h={}, w={}), {} skipped",
        manifest.file_count,
        manifest.snippet_count,
        manifest.h,
        manifest.w,
        manifest.skipped_files.len()
    );

    let store = load_index(&out)?;
    for record in store.iter().take(8) {
        let anchor = record.text.lines().last().unwrap_or("");
        println!("{:<28} {:>2} nodes  {anchor}", record.id, record.slice.len());
    }
    Ok(())
}
