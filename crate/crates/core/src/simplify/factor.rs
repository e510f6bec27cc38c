//! Partial factorization of sums.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::count::{rhs_cost, CostModel};
use crate::error::Result;
use crate::program::{Factor, Instruction, Operand, Program, Rhs, TempId, Term, Value};

/// A term of a sum seen as `coeff * product of factors`. `source` is the
/// instruction index of the product that the term reads, and whether the sum
/// is its only reader.
struct View {
    term: usize,
    coeff: BigInt,
    factors: Vec<Factor>,
    source: Option<(usize, bool)>,
}

/// The rewrite of one sum when `operand` is pulled out of `members`.
struct Plan {
    sum: usize,
    members: Vec<usize>,
    /// New right-hand sides for the single-use products that stay in use.
    rewritten: Vec<(usize, Rhs)>,
    /// Instructions to add, in order.
    added: Vec<Instruction>,
    new_sum: Rhs,
    gain: i64,
}

/// Pulls an operand shared by several terms of a sum out of those terms, as
/// in `2x + y + xyz + xz^2 -> y + x (2 + yz + z^2)`. Terms that read a product
/// used nowhere else are looked through. At most one factorization per sum
/// is done; returns whether anything changed.
pub fn partial_factor(prog: &mut Program, model: &CostModel) -> Result<bool> {
    let uses = prog.use_counts();
    let index: HashMap<TempId, usize> =
        prog.instructions.iter().enumerate().map(|(i, ins)| (ins.target, i)).collect();
    // instructions that can be reused, with their position (None when added)
    let mut existing: HashMap<Rhs, (TempId, Option<usize>)> =
        prog.instructions.iter().enumerate().map(|(i, ins)| (ins.rhs.clone(), (ins.target, Some(i)))).collect();
    let mut next = prog.max_temp() + 1;
    let mut touched = vec![false; prog.instructions.len()];
    let mut plans = Vec::new();
    for s in 0..prog.instructions.len() {
        if touched[s] || !prog.instructions[s].rhs.is_sum() {
            continue;
        }
        let Some(plan) = best_plan(prog, s, &uses, &index, &existing, &touched, &mut next, model) else {
            continue;
        };
        touched[s] = true;
        for &(j, _) in &plan.rewritten {
            touched[j] = true;
        }
        for &m in &plan.members {
            if let Some((j, true)) = source_of(prog, s, m, &uses, &index) {
                touched[j] = true;
            }
        }
        for ins in &plan.added {
            existing.insert(ins.rhs.clone(), (ins.target, None));
        }
        plans.push(plan);
    }
    if plans.is_empty() {
        return Ok(false);
    }
    for plan in plans {
        for (j, rhs) in plan.rewritten {
            prog.instructions[j].rhs = rhs;
        }
        prog.instructions[plan.sum].rhs = plan.new_sum;
        prog.instructions.extend(plan.added);
    }
    prog.tidy()?;
    Ok(true)
}

fn source_of(
    prog: &Program,
    s: usize,
    term: usize,
    uses: &HashMap<TempId, usize>,
    index: &HashMap<TempId, usize>,
) -> Option<(usize, bool)> {
    let Rhs::Sum { terms, .. } = &prog.instructions[s].rhs else { return None };
    let Operand::Temp(t) = terms[term].operand else { return None };
    let j = *index.get(&t)?;
    let owned = uses.get(&t) == Some(&1);
    matches!(prog.instructions[j].rhs, Rhs::Product { .. }).then_some((j, owned))
}

#[allow(clippy::too_many_arguments)]
fn best_plan(
    prog: &Program,
    s: usize,
    uses: &HashMap<TempId, usize>,
    index: &HashMap<TempId, usize>,
    existing: &HashMap<Rhs, (TempId, Option<usize>)>,
    touched: &[bool],
    next: &mut TempId,
    model: &CostModel,
) -> Option<Plan> {
    let Rhs::Sum { terms, .. } = &prog.instructions[s].rhs else { return None };
    let mut views = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        match source_of(prog, s, i, uses, index) {
            Some((j, owned)) if !touched[j] => {
                let Rhs::Product { coeff, factors } = &prog.instructions[j].rhs else { unreachable!() };
                views.push(View { term: i, coeff: &t.coeff * coeff, factors: factors.clone(), source: Some((j, owned)) });
            }
            Some(_) => {}
            None => views.push(View { term: i, coeff: t.coeff.clone(), factors: vec![Factor::new(t.operand, 1)], source: None }),
        }
    }
    let mut counts: HashMap<Operand, usize> = HashMap::new();
    for v in &views {
        for f in &v.factors {
            *counts.entry(f.operand).or_default() += 1;
        }
    }
    let mut shared: Vec<(Operand, usize)> = counts.into_iter().filter(|&(_, c)| c >= 2).collect();
    shared.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut best: Option<(usize, Plan)> = None;
    for (y, count) in shared {
        if let Some((c, _)) = &best {
            if count < *c {
                break;
            }
        }
        let mut probe = *next;
        let plan = simulate(prog, s, y, &views, existing, touched, &mut probe, model);
        if plan.gain > 0 && best.as_ref().is_none_or(|(_, b)| plan.gain > b.gain) {
            best = Some((count, plan));
        }
    }
    let (_, plan) = best?;
    *next += plan.added.len() as TempId;
    Some(plan)
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    prog: &Program,
    s: usize,
    y: Operand,
    views: &[View],
    existing: &HashMap<Rhs, (TempId, Option<usize>)>,
    touched: &[bool],
    next: &mut TempId,
    model: &CostModel,
) -> Plan {
    let Rhs::Sum { constant, terms } = &prog.instructions[s].rhs else { unreachable!() };
    let mut before = rhs_cost(&prog.instructions[s].rhs, model) as i64;
    let mut after = 0i64;
    let mut added = Vec::new();
    let mut rewritten = Vec::new();
    let mut members = Vec::new();
    let mut inner = Rhs::sum(0, Vec::new());
    // reuse only instructions that cannot depend on the sum and keep their value
    let reusable = |rhs: &Rhs, rewritten: &[(usize, Rhs)]| match existing.get(rhs) {
        Some(&(t, None)) => Some(t),
        Some(&(t, Some(i))) if i < s && !touched[i] && rewritten.iter().all(|&(j, _)| j != i) => Some(t),
        _ => None,
    };
    let mut emit = |rhs: Rhs, after: &mut i64, added: &mut Vec<Instruction>, rewritten: &[(usize, Rhs)]| -> Value {
        if let Some(v) = rhs.as_trivial() {
            return v;
        }
        if let Some(t) = reusable(&rhs, rewritten) {
            return Value::Operand(Operand::Temp(t));
        }
        if let Some(ins) = added.iter().find(|i| i.rhs == rhs) {
            return Value::Operand(Operand::Temp(ins.target));
        }
        *after += rhs_cost(&rhs, model) as i64;
        let t = *next;
        *next += 1;
        added.push(Instruction { target: t, rhs });
        Value::Operand(Operand::Temp(t))
    };
    for v in views {
        if !v.factors.iter().any(|f| f.operand == y) {
            continue;
        }
        members.push(v.term);
        let rest: Vec<Factor> = v
            .factors
            .iter()
            .map(|f| if f.operand == y { Factor::new(f.operand, f.exp - 1) } else { *f })
            .filter(|f| f.exp > 0)
            .collect();
        if let Some((j, true)) = v.source {
            before += rhs_cost(&prog.instructions[j].rhs, model) as i64;
        }
        let mut product = Rhs::product(1, rest);
        product.canonicalize();
        let value = match (v.source, product.as_trivial()) {
            (_, Some(val)) => val,
            (Some((j, true)), None) => {
                after += rhs_cost(&product, model) as i64;
                rewritten.push((j, product));
                Value::Operand(Operand::Temp(prog.instructions[j].target))
            }
            (Some((_, false)), None) => emit(product, &mut after, &mut added, &rewritten),
            (None, None) => unreachable!("a plain operand has a single factor"),
        };
        crate::simplify::cse::push_term(&mut inner, v.coeff.clone(), value);
    }
    inner.canonicalize();
    let all = members.len() == terms.len() && constant.is_zero();
    let rest_terms: Vec<Term> = terms.iter().enumerate().filter(|(i, _)| !members.contains(i)).map(|(_, t)| t.clone()).collect();
    let inner_value = emit(inner, &mut after, &mut added, &rewritten);
    let mut pulled = Rhs::product(1, vec![Factor::new(y, 1)]);
    crate::simplify::cse::push_factor(&mut pulled, inner_value, 1);
    pulled.canonicalize();
    let new_sum = if all {
        pulled
    } else {
        let mut sum = Rhs::Sum { constant: constant.clone(), terms: rest_terms };
        match &pulled {
            Rhs::Product { coeff, factors } if factors.len() == 1 && factors[0].exp == 1 => {
                crate::simplify::cse::push_term(&mut sum, coeff.clone(), Value::Operand(factors[0].operand));
            }
            _ => {
                let v = emit(pulled, &mut after, &mut added, &rewritten);
                crate::simplify::cse::push_term(&mut sum, BigInt::from(1), v);
            }
        }
        sum.canonicalize();
        sum
    };
    after += rhs_cost(&new_sum, model) as i64;
    Plan { sum: s, members, rewritten, added, new_sum, gain: before - after }
}
