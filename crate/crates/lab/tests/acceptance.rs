//! Prints one line per criterion. Exits nonzero when a criterion fails that is
//! not listed in `KNOWN_SHORTFALLS`.

use fredholm_lab::acceptance::{run_all, KNOWN_SHORTFALLS};

fn main() {
    println!("acceptance suite");
    let results = run_all(|r| println!("{}", r.line()));
    let passed = results.iter().filter(|r| r.pass).count();
    let unexpected: Vec<u8> = results.iter().filter(|r| !r.pass && !r.known_shortfall).map(|r| r.id).collect();
    println!(
        "{passed}/{} criteria passed; known shortfalls {KNOWN_SHORTFALLS:?}; unexpected failures {unexpected:?}",
        results.len()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
