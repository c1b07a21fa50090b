use std::collections::HashMap;

use mutascope_core::frontend::{extract_methods, tokenize, TokenKind};
use mutascope_core::matrix::{Outcome, OutcomeMatrix, TestOutcome};
use mutascope_core::mutation::{apply_mutant, generate_mutants, Mutant, MutationOperator};
use mutascope_core::scoring::{score_matrix, MethodScore};
use mutascope_core::study::{cohens_d, effect_label, mann_whitney_u, select_groups, RandomPolicy};
use mutascope_core::workspace::SourceFile;
use mutascope_core::Span;
use proptest::prelude::*;

const FRAGMENTS: &[&str] = &[
    "a", "b", "x1", "+", "-", "*", "/", "%", "1", "0", "2.5", "0x0", "True", "False", "None", "not", "and", "or", "==",
    "!=", "<", "<=", ">", ">=", "+=", "-=", "(", ")", "[", "]", ":", ",", " ", " ", "\n", "\n    ", "'s + 1'",
    "\"q == 2\"", "# note + 1\n", "def f(a):", "class C:", "return", "if", "\\\n", "\t", "'''x\n+ y'''",
];

fn python_like() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(FRAGMENTS), 0..60).prop_map(|v| v.concat())
}

fn outcome_cell() -> impl Strategy<Value = Option<Outcome>> {
    prop::option::of(prop::sample::select(Outcome::ALL.to_vec()))
}

fn mutant(id: u32) -> Mutant {
    Mutant {
        id,
        operator_id: "AOR".into(),
        file: "m.py".into(),
        span: Span::new(id as usize, id as usize + 1),
        line: id,
        original: "+".into(),
        replacement: "-".into(),
    }
}

fn build(n_mutants: usize, n_tests: usize, cells: &[Option<Outcome>]) -> OutcomeMatrix {
    let tests: Vec<String> = (0..n_tests).map(|t| format!("t{t}")).collect();
    let mut m = OutcomeMatrix::new((1..=n_mutants as u32).map(mutant).collect(), tests.clone());
    for (i, cell) in cells.iter().enumerate().take(n_mutants * n_tests) {
        if let Some(o) = cell {
            m.insert((i / n_tests) as u32 + 1, tests[i % n_tests].clone(), TestOutcome::new(*o, 1));
        }
    }
    m
}

fn sample(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1000i32..1000, len).prop_map(|v| v.into_iter().map(|x| x as f64 / 8.0).collect())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn tokenize_is_lossless(src in python_like()) {
        let toks = tokenize(src.as_bytes(), "p.py").unwrap();
        let joined: String = toks.iter().map(|t| t.text.as_str()).collect();
        prop_assert_eq!(&joined, &src);
        let mut at = 0;
        for t in &toks {
            prop_assert_eq!(t.span.start, at);
            prop_assert!(t.span.end > t.span.start);
            at = t.span.end;
        }
    }

    #[test]
    fn tokenize_is_lossless_on_any_text(src in any::<String>()) {
        let toks = tokenize(src.as_bytes(), "p.py").unwrap();
        prop_assert_eq!(toks.iter().map(|t| t.text.as_str()).collect::<String>(), src);
    }

    #[test]
    fn extraction_is_deterministic(src in python_like()) {
        let toks = tokenize(src.as_bytes(), "p.py").unwrap();
        let a = extract_methods(&toks, "p.py");
        prop_assert_eq!(&a, &extract_methods(&toks, "p.py"));
        for m in &a {
            prop_assert!(m.line_range.0 <= m.line_range.1);
        }
        prop_assert!(a.windows(2).all(|w| w[0].span.start <= w[1].span.start));
    }

    #[test]
    fn mutants_are_pure_applicable_and_revertible(src in python_like()) {
        let tokens = tokenize(src.as_bytes(), "m.py").unwrap();
        let kinds: HashMap<usize, TokenKind> = tokens.iter().map(|t| (t.span.start, t.kind)).collect();
        let file = SourceFile { path: "m.py".into(), tokens, methods: vec![], is_test_file: false };
        let files = [file];
        let ms = generate_mutants(&files, &MutationOperator::ALL);
        prop_assert_eq!(&ms, &generate_mutants(&files, &MutationOperator::ALL));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.py");
        std::fs::write(&path, &src).unwrap();
        for (i, m) in ms.iter().enumerate() {
            prop_assert_eq!(m.id as usize, i + 1);
            prop_assert_ne!(&m.original, &m.replacement);
            let kind = kinds[&m.span.start];
            prop_assert!(!matches!(kind, TokenKind::StringLiteral | TokenKind::Comment | TokenKind::Whitespace));
            let applied = apply_mutant(dir.path(), m).unwrap();
            applied.revert().unwrap();
            prop_assert_eq!(std::fs::read_to_string(&path).unwrap(), src.clone());
        }
    }

    #[test]
    fn timeouts_never_move_method_scores(
        cells in prop::collection::vec(outcome_cell(), 25),
        extra in prop::collection::vec(any::<bool>(), 25),
    ) {
        let base = build(5, 5, &cells);
        let injected: Vec<Option<Outcome>> = cells
            .iter()
            .zip(&extra)
            .map(|(c, add)| if c.is_none() && *add { Some(Outcome::Timeout) } else { *c })
            .collect();
        let after = score_matrix(&build(5, 5, &injected));
        let before = score_matrix(&base);
        for (a, b) in before.methods.iter().zip(&after.methods) {
            prop_assert_eq!(a.score, b.score);
        }
    }

    #[test]
    fn flipping_pass_to_fail_is_monotone(mut cells in prop::collection::vec(outcome_cell(), 25), pick in 0usize..25) {
        cells[pick] = Some(Outcome::Pass);
        let mut flipped = cells.clone();
        flipped[pick] = Some(Outcome::Fail);
        let (a, b) = (score_matrix(&build(5, 5, &cells)), score_matrix(&build(5, 5, &flipped)));
        let t = pick % 5;
        prop_assert!(b.methods[t].score >= a.methods[t].score);
        prop_assert!(b.suite.unwrap().score >= a.suite.unwrap().score);
    }

    #[test]
    fn suite_kills_bound_method_kills(cells in prop::collection::vec(outcome_cell(), 25)) {
        let s = score_matrix(&build(5, 5, &cells));
        let suite = s.suite.unwrap();
        let max_killed = s.methods.iter().map(|m| m.killed).max().unwrap_or(0);
        prop_assert!(suite.killed >= max_killed);
        prop_assert!(suite.score <= num_rational::Ratio::from_integer(1));
        for m in &s.methods {
            if let Some(x) = m.score {
                prop_assert!(x <= num_rational::Ratio::from_integer(1));
            }
        }
    }

    #[test]
    fn mann_whitney_symmetry(a in sample(1..12), b in sample(1..12)) {
        let ab = mann_whitney_u(&a, &b);
        let ba = mann_whitney_u(&b, &a);
        prop_assert!(close(ab.u_a + ab.u_b, (a.len() * b.len()) as f64));
        prop_assert!((0.0..=1.0).contains(&ab.p));
        prop_assert!(close(ab.p, ba.p));
        prop_assert!(close(ab.u_a, ba.u_b));
    }

    #[test]
    fn cohens_d_invariances(a in sample(2..15), b in sample(2..15), k in -100i32..100, c in 1u32..50) {
        let Ok(d) = cohens_d(&a, &b) else { return Ok(()); };
        let shift = |xs: &[f64]| xs.iter().map(|x| x + k as f64).collect::<Vec<_>>();
        let scale = |xs: &[f64]| xs.iter().map(|x| x * c as f64 / 4.0).collect::<Vec<_>>();
        prop_assert!(close(cohens_d(&shift(&a), &shift(&b)).unwrap(), d));
        prop_assert!(close(cohens_d(&scale(&a), &scale(&b)).unwrap(), d));
        prop_assert_eq!(cohens_d(&b, &a).unwrap(), -d);
    }

    #[test]
    fn effect_labels_are_monotone(x in 0.0f64..5.0, y in 0.0f64..5.0) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(effect_label(lo) <= effect_label(hi));
        prop_assert_eq!(effect_label(-x), effect_label(x));
    }

    #[test]
    fn groups_are_deterministic_and_disjoint(
        killed in prop::collection::vec((0u64..6, 0u64..6), 3..40),
        k in 1usize..20,
        seed in any::<u64>(),
    ) {
        let scores: Vec<MethodScore> = killed
            .iter()
            .enumerate()
            .map(|(i, (kl, sv))| {
                let col = std::iter::repeat(Outcome::Fail).take(*kl as usize)
                    .chain(std::iter::repeat(Outcome::Pass).take(*sv as usize + 1));
                mutascope_core::scoring::method_score(&format!("t{i:02}"), col)
            })
            .collect();
        let refs: Vec<&MethodScore> = scores.iter().collect();
        let g = select_groups(&refs, k, seed, RandomPolicy::Disjoint).unwrap();
        prop_assert_eq!(&g, &select_groups(&refs, k, seed, RandomPolicy::Disjoint).unwrap());
        prop_assert_eq!(g.best.len(), g.k);
        prop_assert_eq!(g.worst.len(), g.k);
        prop_assert_eq!(g.random.len(), g.k);
        let mut all: Vec<&String> = g.best.iter().chain(&g.worst).chain(&g.random).collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), 3 * g.k);
    }
}
