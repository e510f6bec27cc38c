mod common;

use num_bigint::BigInt;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polyopt::alloc::{dfs_schedule, max_live, recycle, verify_allocation};
use polyopt::count::{CostModel, CountOps, OpStats};
use polyopt::driver::{optimize, shift_search, Level, OptimizerSettings};
use polyopt::eval::{equivalent, MERSENNE_31};
use polyopt::frontend::{emit, parse_expression, Dialect, EmitSettings};
use polyopt::horner::{apply_scheme_all, HornerOrder, SchemeScorer};
use polyopt::poly::{normalize, Monomial, Polynomial, Symbols};
use polyopt::program::Program;
use polyopt::simplify::{compact, cse, greedy_round, lower_tree, merge_operators, partial_factor, simplify, GreedySettings, Method};

const VARS: usize = 5;

fn symbols() -> Symbols {
    Symbols::new(["a", "b", "c", "d", "e"]).unwrap()
}

fn raw_terms() -> impl Strategy<Value = Vec<(i64, Vec<u32>)>> {
    let coeff = (-9i64..=9).prop_filter("nonzero", |c| *c != 0);
    prop::collection::vec((coeff, prop::collection::vec(0u32..4, VARS)), 1..25)
}

fn build(raw: &[(i64, Vec<u32>)]) -> Polynomial {
    normalize(raw.iter().map(|(c, es)| (BigInt::from(*c), monomial(es))).collect())
}

fn monomial(es: &[u32]) -> Monomial {
    Monomial::from_pairs(es.iter().enumerate().map(|(v, &e)| (v as u32, e)))
}

fn poly() -> impl Strategy<Value = Polynomial> {
    raw_terms().prop_map(|raw| build(&raw)).prop_filter("non-constant", |p| !p.variables().is_empty())
}

/// A polynomial and a random order of its variables.
fn poly_and_order() -> impl Strategy<Value = (Polynomial, HornerOrder)> {
    (poly(), any::<u64>()).prop_map(|(p, seed)| {
        let mut vars = p.variables();
        vars.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        (p, HornerOrder::new(vars))
    })
}

fn same(a: &Polynomial, b: &Program) -> bool {
    equivalent(a, b, 20, MERSENNE_31)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_canonical(raw in raw_terms(), seed in any::<u64>()) {
        let p = build(&raw);
        prop_assert_eq!(normalize(p.terms().to_vec()), p.clone());
        let mut shuffled = raw.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(build(&shuffled), p);
    }

    #[test]
    fn counts_add_up(a in poly(), b in poly()) {
        let sum = a.count_ops() + b.count_ops();
        let both = [a, b];
        let total: OpStats = both.iter().map(|p| p.count_ops()).fold(OpStats::default(), |x, y| x + y);
        prop_assert_eq!(sum, total);
    }

    #[test]
    fn scorer_matches_cse((p, order) in poly_and_order()) {
        let polys = std::slice::from_ref(&p);
        let mut scorer = SchemeScorer::new(polys, CostModel::default());
        let fast = scorer.score(&order.sequence).unwrap();
        let slow = cse(&apply_scheme_all(polys, &order).unwrap()).count_ops();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn every_transform_preserves_value((p, order) in poly_and_order()) {
        let model = CostModel::default();
        let tree = apply_scheme_all(std::slice::from_ref(&p), &order).unwrap();
        prop_assert!(equivalent(&p, &tree, 20, MERSENNE_31));
        let merged = merge_operators(&tree);
        prop_assert!(equivalent(&p, &merged, 20, MERSENNE_31));
        prop_assert!(same(&p, &lower_tree(&merged, true)));
        let mut prog = cse(&tree);
        prop_assert!(same(&p, &prog));
        let before = prog.count_ops().total;
        compact(&mut prog, &model).unwrap();
        prop_assert!(same(&p, &prog));
        prop_assert!(prog.count_ops().total <= before);
        let settings = GreedySettings::default();
        let before = prog.count_ops().total;
        greedy_round(&mut prog, &settings, &model).unwrap();
        prop_assert!(same(&p, &prog));
        prop_assert!(prog.count_ops().total <= before);
        partial_factor(&mut prog, &model).unwrap();
        prop_assert!(same(&p, &prog));
        for method in [Method::None, Method::Cse, Method::Greedy, Method::CseGreedy] {
            prop_assert!(same(&p, &simplify(&tree, method, &settings, &model).unwrap()), "{}", method);
        }
        let scheduled = dfs_schedule(&prog).unwrap();
        prop_assert!(same(&p, &scheduled));
        let recycled = recycle(&scheduled);
        prop_assert!(same(&p, &recycled));
        prop_assert!(verify_allocation(&scheduled, &recycled));
        let mut slots: Vec<u32> = recycled.instructions.iter().map(|i| i.target).collect();
        slots.sort_unstable();
        slots.dedup();
        prop_assert_eq!(slots.len(), max_live(&scheduled));
    }

    #[test]
    fn display_reparses(p in poly()) {
        let text = p.display(&symbols()).to_string();
        prop_assert_eq!(parse_expression(&text, &symbols()).unwrap(), p);
    }

    #[test]
    fn plain_output_reparses(p in poly()) {
        let r = optimize(std::slice::from_ref(&p), &OptimizerSettings::preset(Level::O2)).unwrap();
        let text = emit(&r.program, &symbols(), &EmitSettings::new(Dialect::Plain));
        let mut syms = symbols();
        for k in 1..=r.program.max_temp() {
            syms.push(format!("Z{}_", k)).unwrap();
        }
        // Temporaries are reassigned; substitute statement by statement.
        let mut values: Vec<Option<Polynomial>> = vec![None; syms.len()];
        let mut last = Polynomial::zero();
        for line in text.lines() {
            let (lhs, rhs) = line.split_once(" = ").unwrap();
            let mut value = parse_expression(rhs.trim_end_matches(';'), &syms).unwrap();
            for (id, v) in values.iter().enumerate() {
                if let Some(v) = v {
                    value = value.substitute(id as u32, v);
                }
            }
            if let Some(id) = syms.id(lhs) {
                values[id as usize] = Some(value.clone());
            }
            last = value;
        }
        prop_assert_eq!(last, p);
    }

    #[test]
    fn fortran_lines_fit(p in poly(), width in 40usize..100) {
        let r = optimize(std::slice::from_ref(&p), &OptimizerSettings::preset(Level::O1)).unwrap();
        let mut settings = EmitSettings::new(Dialect::Fortran);
        settings.line_width = width;
        let text = emit(&r.program, &symbols(), &settings);
        for line in text.lines() {
            prop_assert!(line.len() <= width, "{:?}", line);
        }
    }

    #[test]
    fn shifts_shrink_and_preserve(p in poly()) {
        let groups = vec![vec![0, 1, 2], vec![3, 4]];
        let s = shift_search(std::slice::from_ref(&p), &groups).unwrap();
        prop_assert!(s.polys[0].num_terms() <= p.num_terms());
        prop_assert_eq!(s.rules.is_empty(), s.polys[0] == p);
        let r = optimize(&s.polys, &OptimizerSettings::preset(Level::O1)).unwrap();
        prop_assert!(same(&p, &s.compose(&r.program)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn all_levels_preserve_value(p in poly(), seed in 0u64..1000) {
        for level in [Level::O0, Level::O1, Level::O2, Level::O3] {
            let mut s = OptimizerSettings::preset(level);
            s.seed = seed;
            s.mcts.num_expand = 100;
            let r = optimize(std::slice::from_ref(&p), &s).unwrap();
            prop_assert!(same(&p, &r.program), "{}", level);
            prop_assert_eq!(r.after, r.program.count_ops());
            prop_assert!(r.after.total <= r.before.total, "{}", level);
        }
    }

    #[test]
    fn shared_outputs_preserve_value(a in poly(), b in poly()) {
        let polys = [a, b];
        let r = optimize(&polys, &OptimizerSettings::preset(Level::O2)).unwrap();
        prop_assert!(equivalent(&polys[..], &r.program, 20, MERSENNE_31));
        prop_assert_eq!(common::expand_program(&r.program), polys.to_vec());
    }
}
