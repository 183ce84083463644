//! Random well-typed programs and a deterministic stand-in model.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use mutamask::masking::MaskedSequence;
use mutamask::predict::{ranked, PredictError, Prediction, Predictor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: &[&str] = &[
    "+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||", "++", "--", "!", " +",
    " -", "0", "1", "2", "7", "a", "b", "x", "f", "arr", "get", "test", "true", "false", "null",
    "'c'", "\"s\"", "int", "boolean", "C", "length", "x + 1", "a - b", "-",
];

/// Deterministic pseudo-model: five vocabulary tokens chosen from a hash
/// of the seed and the masked text.
pub struct HashPredictor(pub u64);

impl Predictor for HashPredictor {
    fn predict(&self, seq: &MaskedSequence) -> Result<Vec<Prediction>, PredictError> {
        let mut h = DefaultHasher::new();
        (self.0, seq.text()).hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        let mut score = 1.0;
        Ok(ranked((0..5).map(|_| {
            score *= rng.gen_range(0.1..1.0);
            (VOCAB[rng.gen_range(0..VOCAB.len())].to_string(), score)
        })))
    }

    fn describe(&self) -> String {
        format!("hash ({})", self.0)
    }
}

fn int_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..7) {
            0 => "a".into(),
            1 => "b".into(),
            2 => "x".into(),
            3 => "f".into(),
            4 => format!("arr[{}]", rng.gen_range(0..8)),
            5 => "arr.length".into(),
            _ => rng.gen_range(0..50).to_string(),
        };
    }
    match rng.gen_range(0..5) {
        0 => format!("-({})", int_expr(rng, depth - 1)),
        1 => format!("({})", int_expr(rng, depth - 1)),
        2 => format!("get({})", int_expr(rng, depth - 1)),
        _ => {
            let op = ["+", "-", "*", "/", "%"][rng.gen_range(0..5)];
            format!(
                "{} {op} {}",
                int_expr(rng, depth - 1),
                int_expr(rng, depth - 1)
            )
        }
    }
}

fn bool_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        let op = ["<", "<=", ">", ">=", "==", "!="][rng.gen_range(0..6)];
        return format!("{} {op} {}", int_expr(rng, 1), int_expr(rng, 1));
    }
    match rng.gen_range(0..3) {
        0 => format!("!({})", bool_expr(rng, depth - 1)),
        1 => format!(
            "{} && {}",
            bool_expr(rng, depth - 1),
            bool_expr(rng, depth - 1)
        ),
        _ => format!(
            "{} || {}",
            bool_expr(rng, depth - 1),
            bool_expr(rng, depth - 1)
        ),
    }
}

fn stmt(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..6) {
        0 => format!("x = {};", int_expr(rng, 2)),
        1 => format!("x += {};", int_expr(rng, 1)),
        2 => "x++;".into(),
        3 => format!("arr[{}] = {};", rng.gen_range(0..8), int_expr(rng, 2)),
        4 => format!(
            "if ({}) {{ f = {}; }} else {{ x--; }}",
            bool_expr(rng, 1),
            int_expr(rng, 1)
        ),
        _ => format!("flag = {};", bool_expr(rng, 1)),
    }
}

/// A well-typed class; `long` methods exceed the predictor window.
pub fn program_text(seed: u64, long: bool) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = if long {
        rng.gen_range(120..200)
    } else {
        rng.gen_range(1..8)
    };
    let body: Vec<String> = (0..n).map(|_| stmt(&mut rng)).collect();
    format!(
        "class C {{\n    int f;\n    boolean flag;\n    int[] arr = new int[8];\n\n    \
         int get(int i) {{\n        return arr[(i % 8 + 8) % 8];\n    }}\n\n    \
         int run(int a, int b) {{\n        int x = {};\n        {}\n        return x;\n    }}\n\n    \
         boolean test(int a, int b) {{\n        int x = a;\n        return {};\n    }}\n}}\n",
        // `x` is not in scope in its own initializer.
        int_expr(&mut rng, 2).replace('x', "b"),
        body.join("\n        "),
        bool_expr(&mut rng, 2),
    )
}
