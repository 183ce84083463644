#![allow(dead_code)]

pub mod chain;
pub mod faults;
pub mod gen;

use std::path::{Path, PathBuf};

use mutamask::lang::{compile_source, parse_test_file, CheckedProgram, TestCase};
use mutamask::masking::OperatorFamily;
use mutamask::mutagen::{generate, Generation};
use mutamask::predict::FixturePredictor;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(rel)
}

pub fn program(rel: &str) -> CheckedProgram {
    compile_source(&std::fs::read_to_string(fixture(rel)).unwrap()).unwrap()
}

pub fn tests(rel: &str) -> Vec<TestCase> {
    parse_test_file(&std::fs::read_to_string(fixture(rel)).unwrap()).unwrap()
}

pub fn generate_with_fixture(program: &CheckedProgram, predictions: &str) -> Generation {
    let predictor = FixturePredictor::load(&fixture(predictions)).unwrap();
    generate(program, &predictor)
}

/// Viable replacements at the site of `family` whose original text is
/// `original`, in rank order.
pub fn viable_at(gen: &Generation, family: OperatorFamily, original: &str) -> Vec<String> {
    gen.viable()
        .filter(|m| m.site.family == family && m.site.original == original)
        .map(|m| m.replacement.clone())
        .collect()
}

/// A received request: path and body.
pub type Handler = dyn Fn(&str, &str) -> (u16, String) + Send + Sync;

/// Minimal HTTP/1.1 server on an ephemeral port; answers every request
/// with `handler(path, body)` and closes the connection. Returns the
/// base URL.
pub fn serve(handler: Box<Handler>) -> String {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let mut reader = BufReader::new(stream);
            let mut line = String::new();
            if reader.read_line(&mut line).is_err() {
                continue;
            }
            let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
            let mut length = 0;
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
                    break;
                }
                if let Some((k, v)) = h.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap_or(0);
                    }
                }
            }
            let mut body = vec![0; length];
            if reader.read_exact(&mut body).is_err() {
                continue;
            }
            let (status, reply) = handler(&path, &String::from_utf8_lossy(&body));
            let mut stream = reader.into_inner();
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    format!("http://{addr}")
}

pub fn viable_programs(gen: &Generation) -> Vec<mutamask::analysis::MutantProgram> {
    gen.viable()
        .map(|m| mutamask::analysis::MutantProgram {
            id: m.id,
            program: std::sync::Arc::clone(m.program.as_ref().unwrap()),
        })
        .collect()
}
