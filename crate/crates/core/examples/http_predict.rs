//! Sends one masked sequence to a fill-mask server.
//!
//! ```text
//! cargo run --example http_predict [ENDPOINT] [SEQUENCE]
//! ```
//!
//! Defaults to `http://127.0.0.1:8765` and `int a = <mask> ;`.

use mutamask::predict::HttpPredictor;

fn main() {
    let mut args = std::env::args().skip(1);
    let endpoint = args
        .next()
        .unwrap_or_else(|| "http://127.0.0.1:8765".into());
    let sequence = args.next().unwrap_or_else(|| "int a = <mask> ;".into());
    let client = HttpPredictor::new(&endpoint, 5_000, 1);
    match client.fill_mask(&sequence) {
        Ok(preds) => {
            for p in preds {
                println!("{} {:?} {:.3}", p.rank, p.token, p.score);
            }
        }
        Err(e) => {
            eprintln!("{endpoint}: {e}");
            std::process::exit(3);
        }
    }
}
