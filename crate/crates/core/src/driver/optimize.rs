//! The optimization pipeline.

use std::time::{Duration, Instant};

use crate::alloc::{dfs_schedule, recycle};
use crate::count::{CostModel, CountOps, OpStats};
use crate::driver::settings::{HornerSource, Level, OptimizerSettings};
use crate::error::{Error, Result};
use crate::horner::{apply_scheme_all, occurrence_orders, HornerOrder};
use crate::mcts::mcts_search;
use crate::poly::{Monomial, Polynomial, Symbols, VarId};
use crate::program::{Output, Program};
use crate::simplify::{simplify, GreedySettings};

/// Result of [`optimize`].
#[derive(Clone, Debug)]
pub struct Optimized {
    /// Scheduled code with recycled temporaries. Outputs are named `F` or
    /// `F1, F2, ...` in input order.
    pub program: Program,
    /// `program` before temporaries were recycled, in single-assignment form.
    pub scheduled: Program,
    pub before: OpStats,
    pub after: OpStats,
    /// `None` at `O0`.
    pub order: Option<HornerOrder>,
    /// A time limit cut the search or the greedy pass short.
    pub timed_out: bool,
}

/// Optimizes the polynomials together into one program.
pub fn optimize(polys: &[Polynomial], settings: &OptimizerSettings) -> Result<Optimized> {
    settings.validate()?;
    if polys.is_empty() {
        return Err(Error::EmptyInput);
    }
    let model = CostModel::default();
    let before = polys.iter().fold(OpStats::default(), |acc, p| acc + p.count_ops_with(&model));
    if settings.level == Level::O0 {
        let mut program = Program::new();
        for (i, p) in polys.iter().enumerate() {
            let value = program.push_polynomial(p);
            program.outputs.push(Output::new(crate::simplify::output_name(i, polys.len()), value));
        }
        let scheduled = dfs_schedule(&program)?;
        let program = recycle(&scheduled);
        let after = program.count_ops_with(&model);
        return Ok(Optimized { program, scheduled, before, after, order: None, timed_out: false });
    }
    let (orders, mut timed_out) = candidate_orders(polys, settings, model)?;
    let start = Instant::now();
    let budget = (settings.greedy.time_limit > 0.0).then(|| Duration::from_secs_f64(settings.greedy.time_limit));
    let mut best: Option<(u64, Program, HornerOrder)> = None;
    for order in orders {
        let mut greedy = settings.greedy;
        if let Some(b) = budget {
            let left = b.saturating_sub(start.elapsed());
            if left.is_zero() && best.is_some() {
                timed_out = true;
                break;
            }
            greedy = GreedySettings { time_limit: left.as_secs_f64().max(1e-3), ..greedy };
        }
        let tree = apply_scheme_all(polys, &order)?;
        let prog = simplify(&tree, settings.method, &greedy, &model)?;
        let total = prog.count_ops_with(&model).total;
        if best.as_ref().is_none_or(|(t, _, _)| total < *t) {
            best = Some((total, prog, order));
        }
    }
    if budget.is_some_and(|b| start.elapsed() >= b) {
        timed_out = true;
    }
    let (_, prog, order) = best.expect("at least one candidate order");
    let scheduled = dfs_schedule(&prog)?;
    let program = recycle(&scheduled);
    let after = program.count_ops_with(&model);
    Ok(Optimized { program, scheduled, before, after, order: Some(order), timed_out })
}

/// The orders to try, and whether the search ran out of time.
fn candidate_orders(polys: &[Polynomial], settings: &OptimizerSettings, model: CostModel) -> Result<(Vec<HornerOrder>, bool)> {
    if let Some(order) = &settings.scheme {
        return Ok((vec![order.clone()], false));
    }
    match settings.horner {
        HornerSource::Occurrence => Ok((occurrence_orders(polys, settings.direction), false)),
        HornerSource::Mcts => {
            let result = mcts_search(polys, &settings.effective_mcts(), model)?;
            Ok((result.best.into_iter().map(|(o, _)| o).collect(), result.timed_out))
        }
    }
}

/// Polynomials grouped by their part in some variables. The keys are
/// opaque: optimization treats the contents as separate outputs, so terms
/// with different keys are never combined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketedExpression {
    pub entries: Vec<(Monomial, Polynomial)>,
}

impl BracketedExpression {
    /// Brackets `p` in `vars`; keys in the polynomial's term order.
    pub fn new(p: &Polynomial, vars: &[VarId]) -> Self {
        let mut entries: Vec<(Monomial, Vec<(num_bigint::BigInt, Monomial)>)> = Vec::new();
        for (c, m) in p.terms() {
            let (key, rest): (Vec<_>, Vec<_>) = m.factors().iter().partition(|(v, _)| vars.contains(v));
            let key = Monomial::from_pairs(key);
            let rest = Monomial::from_pairs(rest);
            match entries.iter_mut().find(|(k, _)| *k == key) {
                Some((_, terms)) => terms.push((c.clone(), rest)),
                None => entries.push((key, vec![(c.clone(), rest)])),
            }
        }
        let entries = entries.into_iter().map(|(k, ts)| (k, crate::poly::normalize(ts))).collect();
        BracketedExpression { entries }
    }

    pub fn contents(&self) -> Vec<Polynomial> {
        self.entries.iter().map(|(_, p)| p.clone()).collect()
    }

    /// `sum key * content`.
    pub fn expand(&self) -> Polynomial {
        self.entries
            .iter()
            .fold(Polynomial::zero(), |acc, (k, p)| acc.add(&p.mul_monomial(&1.into(), k)))
    }

    /// Count of the contents alone; the keys cost nothing.
    pub fn count_ops(&self) -> OpStats {
        self.entries.iter().fold(OpStats::default(), |acc, (_, p)| acc + p.count_ops())
    }

    /// A key as an identifier fragment, e.g. `u2v` for `u^2*v`, `1` for the
    /// empty key.
    pub fn key_label(key: &Monomial, symbols: &Symbols) -> String {
        if key.is_one() {
            return "1".into();
        }
        key.factors()
            .iter()
            .map(|&(v, e)| if e == 1 { symbols.name(v).to_string() } else { format!("{}{}", symbols.name(v), e) })
            .collect()
    }
}

/// One shared program for all bracket contents; output `i` is the content of
/// entry `i`.
pub fn optimize_bracketed(b: &BracketedExpression, settings: &OptimizerSettings) -> Result<Optimized> {
    optimize(&b.contents(), settings)
}
