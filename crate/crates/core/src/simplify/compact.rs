//! Absorbing single-use instructions into their only reader.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use crate::count::{rhs_cost, CostModel};
use crate::error::Result;
use crate::program::{is_unit, Factor, Operand, Program, Rhs, TempId, Term};

/// Inlines a temporary read exactly once into its reader when both use the
/// same operator and the merged instruction costs no more than the two
/// separately. Coefficients of single-use products are also hoisted into the
/// reading sum, and common factors of single-use sums into their reader. Repeats until nothing changes, then tidies the program.
pub fn compact(prog: &mut Program, model: &CostModel) -> Result<()> {
    loop {
        prog.tidy()?;
        if !compact_pass(prog, model) {
            return Ok(());
        }
    }
}

fn compact_pass(prog: &mut Program, model: &CostModel) -> bool {
    let uses = prog.use_counts();
    let index: HashMap<TempId, usize> =
        prog.instructions.iter().enumerate().map(|(i, ins)| (ins.target, i)).collect();
    let mut changed = false;
    for i in 0..prog.instructions.len() {
        let operands = prog.instructions[i].rhs.operands();
        for op in operands {
            let Operand::Temp(t) = op else { continue };
            if uses.get(&t) != Some(&1) {
                continue;
            }
            let Some(&j) = index.get(&t) else { continue };
            if j >= i {
                continue;
            }
            let parent = &prog.instructions[i].rhs;
            let child = &prog.instructions[j].rhs;
            let before = rhs_cost(parent, model) + rhs_cost(child, model);
            if let Some(merged) = absorb(parent, t, child) {
                if rhs_cost(&merged, model) <= before {
                    prog.instructions[i].rhs = merged;
                    // the child is now unread and disappears in tidy
                    changed = true;
                    continue;
                }
            }
            if let Some((parent, child)) = hoist(&prog.instructions[i].rhs, t, &prog.instructions[j].rhs) {
                if rhs_cost(&parent, model) + rhs_cost(&child, model) < before {
                    prog.instructions[i].rhs = parent;
                    prog.instructions[j].rhs = child;
                    changed = true;
                    continue;
                }
            }
            if let Some((parent, child)) = pull_content(&prog.instructions[i].rhs, t, &prog.instructions[j].rhs) {
                if rhs_cost(&parent, model) + rhs_cost(&child, model) < before {
                    prog.instructions[i].rhs = parent;
                    prog.instructions[j].rhs = child;
                    changed = true;
                }
            }
        }
    }
    changed
}

/// `parent` with the single read of `t` replaced by `child`, when the result
/// still has a single operator.
fn absorb(parent: &Rhs, t: TempId, child: &Rhs) -> Option<Rhs> {
    let target = Operand::Temp(t);
    let mut out = match (parent, child) {
        (Rhs::Sum { constant, terms }, Rhs::Sum { constant: k, terms: ts }) => {
            let c = &terms.iter().find(|x| x.operand == target)?.coeff;
            let mut terms: Vec<Term> = terms.iter().filter(|x| x.operand != target).cloned().collect();
            terms.extend(ts.iter().map(|x| Term { coeff: c * &x.coeff, operand: x.operand }));
            Rhs::Sum { constant: constant + c * k, terms }
        }
        (Rhs::Sum { constant, terms }, Rhs::Product { coeff: d, factors }) => match factors.as_slice() {
            [f] if f.exp == 1 => {
                let mut terms = terms.clone();
                let x = terms.iter_mut().find(|x| x.operand == target)?;
                x.coeff *= d;
                x.operand = f.operand;
                Rhs::Sum { constant: constant.clone(), terms }
            }
            _ => return None,
        },
        (Rhs::Product { coeff, factors }, Rhs::Product { coeff: d, factors: fs }) => {
            let e = factors.iter().find(|x| x.operand == target)?.exp;
            let mut factors: Vec<Factor> = factors.iter().filter(|x| x.operand != target).copied().collect();
            factors.extend(fs.iter().map(|x| Factor::new(x.operand, x.exp * e)));
            Rhs::Product { coeff: coeff * num_traits::pow(d.clone(), e as usize), factors }
        }
        _ => return None,
    };
    out.canonicalize();
    Some(out)
}

/// Moves a non-unit coefficient of a product read by a sum into the sum's
/// term coefficient.
fn hoist(parent: &Rhs, t: TempId, child: &Rhs) -> Option<(Rhs, Rhs)> {
    let (Rhs::Sum { constant, terms }, Rhs::Product { coeff: d, factors }) = (parent, child) else {
        return None;
    };
    if is_unit(d) && !d.is_negative() {
        return None;
    }
    let mut terms = terms.clone();
    let x = terms.iter_mut().find(|x| x.operand == Operand::Temp(t))?;
    x.coeff *= d;
    Some((Rhs::Sum { constant: constant.clone(), terms }, Rhs::Product { coeff: BigInt::one(), factors: factors.clone() }))
}

/// Divides a single-use sum by the gcd of its coefficients and multiplies
/// its reader by it, as in `y * (4y + 4x) -> 4 * y * (y + x)`.
fn pull_content(parent: &Rhs, t: TempId, child: &Rhs) -> Option<(Rhs, Rhs)> {
    let Rhs::Sum { constant, terms } = child else { return None };
    let g = terms.iter().fold(constant.clone(), |g, x| g.gcd(&x.coeff));
    if g <= BigInt::one() {
        return None;
    }
    let target = Operand::Temp(t);
    let mut parent = parent.clone();
    match &mut parent {
        Rhs::Sum { terms, .. } => terms.iter_mut().find(|x| x.operand == target)?.coeff *= &g,
        Rhs::Product { coeff, factors } => {
            let e = factors.iter().find(|x| x.operand == target)?.exp;
            *coeff *= num_traits::pow(g.clone(), e as usize);
        }
    }
    let terms = terms.iter().map(|x| Term { coeff: &x.coeff / &g, operand: x.operand }).collect();
    Some((parent, Rhs::Sum { constant: constant / &g, terms }))
}
