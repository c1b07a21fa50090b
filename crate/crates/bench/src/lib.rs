//! Synthetic inputs for the benchmarks.

use mutascope_core::matrix::{Outcome, OutcomeMatrix, TestOutcome};
use mutascope_core::{Mutant, Span};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A Python module with `n` small functions, each carrying a few mutable operators.
pub fn python_module(n: usize) -> String {
    let mut src = String::from("import math\n\n");
    for i in 0..n {
        src.push_str(&format!(
            "def f{i}(a, b):\n    # branch on {i}\n    if a > b and not a == {i}:\n        return a + b * 2\n    while b <= 10:\n        b += 1\n    return 'done' if b != a else True\n\n\n"
        ));
    }
    src
}

/// A random matrix with the given shape; about a fifth of the cells are uncovered.
pub fn random_matrix(mutants: u32, tests: usize, seed: u64) -> OutcomeMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<String> = (0..tests).map(|t| format!("t.py::test_{t}")).collect();
    let ms = (1..=mutants)
        .map(|id| Mutant {
            id,
            operator_id: "AOR".into(),
            file: "m.py".into(),
            span: Span::new(id as usize, id as usize + 1),
            line: id,
            original: "+".into(),
            replacement: "-".into(),
        })
        .collect();
    let mut m = OutcomeMatrix::new(ms, ids.clone());
    for id in 1..=mutants {
        for t in &ids {
            if rng.random_bool(0.8) {
                let o = Outcome::ALL[rng.random_range(0..4)];
                m.insert(id, t.clone(), TestOutcome::new(o, 1));
            }
        }
    }
    m
}

/// Two samples of length `n` with distinct values.
pub fn samples(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || (0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    (draw(), draw())
}
