//! Linear shifts of variables that shorten a polynomial.
//!
//! A shift `x -> x + a*y` or `x -> x + a` replaces the input by the
//! polynomial in the shifted variables. Shifts are kept only when they
//! lower the number of terms. Only integer shift amounts are tried.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial, Symbols, VarId};
use crate::program::{Instruction, Operand, Output, Program, Rhs, Term, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShiftRule {
    /// `target -> target + coeff * source`
    VarPlusVar { target: VarId, coeff: BigInt, source: VarId },
    /// `target -> target + coeff`
    VarPlusConst { target: VarId, coeff: BigInt },
}

impl ShiftRule {
    pub fn target(&self) -> VarId {
        match self {
            ShiftRule::VarPlusVar { target, .. } | ShiftRule::VarPlusConst { target, .. } => *target,
        }
    }

    /// The polynomial substituted for the target.
    fn image(&self) -> Polynomial {
        match self {
            ShiftRule::VarPlusVar { target, coeff, source } => {
                Polynomial::var(*target).add(&Polynomial::var(*source).scale(coeff))
            }
            ShiftRule::VarPlusConst { target, coeff } => Polynomial::var(*target).add(&Polynomial::constant(coeff.clone())),
        }
    }

    pub fn apply(&self, p: &Polynomial) -> Polynomial {
        p.substitute(self.target(), &self.image())
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, symbols }
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a ShiftRule,
    symbols: &'a Symbols,
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |v: VarId| self.symbols.name(v);
        let sign = |c: &BigInt| if c.is_negative() { "-" } else { "+" };
        match self.rule {
            ShiftRule::VarPlusVar { target, coeff, source } => {
                let t = name(*target);
                if coeff.abs().is_one() {
                    write!(f, "{} -> {} {} {}", t, t, sign(coeff), name(*source))
                } else {
                    write!(f, "{} -> {} {} {}*{}", t, t, sign(coeff), coeff.abs(), name(*source))
                }
            }
            ShiftRule::VarPlusConst { target, coeff } => {
                write!(f, "{} -> {} {} {}", name(*target), name(*target), sign(coeff), coeff.abs())
            }
        }
    }
}

/// Outcome of [`shift_search`].
#[derive(Clone, Debug)]
pub struct Shifted {
    /// Accepted rules in the order they were applied.
    pub rules: Vec<ShiftRule>,
    pub polys: Vec<Polynomial>,
    /// Computes the shifted variables from the original ones. Output `i`
    /// holds the value of variable `unshift_vars[i]` to feed into `polys`.
    pub unshift: Program,
    pub unshift_vars: Vec<VarId>,
}

impl Shifted {
    /// `prog`, written over the shifted variables, preceded by the unshift
    /// code so that it reads the original variables. Temporaries of `prog`
    /// are renumbered after those of the unshift code.
    pub fn compose(&self, prog: &Program) -> Program {
        let offset = self.unshift.max_temp();
        let subst = |o: Operand| match o {
            Operand::Temp(t) => Operand::Temp(t + offset),
            Operand::Var(v) => match self.unshift_vars.iter().position(|&u| u == v) {
                Some(i) => match self.unshift.outputs[i].value {
                    Value::Operand(op) => op,
                    Value::Const(_) => unreachable!("shifted variables are computed"),
                },
                None => o,
            },
        };
        let mut out = Program { instructions: self.unshift.instructions.clone(), outputs: Vec::new() };
        for ins in &prog.instructions {
            let mut rhs = ins.rhs.clone();
            rhs.map_operands(subst);
            out.instructions.push(Instruction { target: ins.target + offset, rhs });
        }
        for o in &prog.outputs {
            let mut o = o.clone();
            if let Value::Operand(op) = o.value {
                o.value = Value::Operand(subst(op));
            }
            out.outputs.push(o);
        }
        out
    }
}

fn num_terms(polys: &[Polynomial]) -> usize {
    polys.iter().map(Polynomial::num_terms).sum()
}

/// Candidate shifts of variables within one group. For `c x^k m` next to
/// `b x^(k-1) y m`, `x -> x - b/(k c) y` removes the second term; with `d
/// x^(k-1) m` instead, `x -> x - d/(k c)` does. Linear pairs are the case
/// `k = 1`. Only integer ratios are kept.
fn candidates(polys: &[Polynomial], group: &[VarId]) -> BTreeSet<ShiftRule> {
    let mut out = BTreeSet::new();
    for p in polys {
        let coeff_of = |m: &Monomial| -> Option<&BigInt> {
            p.terms().binary_search_by(|(_, t)| m.cmp(t)).ok().map(|i| &p.terms()[i].0)
        };
        for (c, m) in p.terms() {
            for &x in group {
                let k = m.exponent(x);
                if k == 0 {
                    continue;
                }
                let (rest, _) = m.split_var(x);
                let lower = rest.mul(&Monomial::var_pow(x, k - 1));
                let denom = c * BigInt::from(k);
                if let Some(d) = coeff_of(&lower) {
                    if d.is_multiple_of(&denom) {
                        out.insert(ShiftRule::VarPlusConst { target: x, coeff: -(d / &denom) });
                    }
                }
                for &y in group {
                    if y == x {
                        continue;
                    }
                    if let Some(b) = coeff_of(&lower.mul(&Monomial::var(y))) {
                        if b.is_multiple_of(&denom) {
                            out.insert(ShiftRule::VarPlusVar { target: x, coeff: -(b / &denom), source: y });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Applies the shift that removes the most terms until none removes any.
/// `groups` lists disjoint sets of variables that may be mixed; constant
/// shifts are tried for every listed variable.
pub fn shift_search(polys: &[Polynomial], groups: &[Vec<VarId>]) -> Result<Shifted> {
    let mut seen = BTreeSet::new();
    for v in groups.iter().flatten() {
        if !seen.insert(*v) {
            return Err(Error::InvalidSetting(format!("variable {} is in more than one shift group", v)));
        }
    }
    let mut current = polys.to_vec();
    let mut rules = Vec::new();
    loop {
        let size = num_terms(&current);
        let mut best: Option<(usize, ShiftRule, Vec<Polynomial>)> = None;
        for group in groups {
            for rule in candidates(&current, group) {
                if rule_is_trivial(&rule) {
                    continue;
                }
                let next: Vec<Polynomial> = current.iter().map(|p| rule.apply(p)).collect();
                let n = num_terms(&next);
                if n < size && best.as_ref().is_none_or(|(b, _, _)| n < *b) {
                    best = Some((n, rule, next));
                }
            }
        }
        match best {
            Some((_, rule, next)) => {
                rules.push(rule);
                current = next;
            }
            None => break,
        }
    }
    let (unshift, unshift_vars) = unshift_program(&rules);
    Ok(Shifted { rules, polys: current, unshift, unshift_vars })
}

fn rule_is_trivial(rule: &ShiftRule) -> bool {
    match rule {
        ShiftRule::VarPlusVar { coeff, .. } | ShiftRule::VarPlusConst { coeff, .. } => coeff.is_zero(),
    }
}

/// The shifted polynomial `q` satisfies `q(S1(S2(...v))) = p(v)` with `Si`
/// the rules; evaluating `p` at `w` means feeding `q` the values
/// `...S2^-1(S1^-1(w))`, one instruction per rule.
fn unshift_program(rules: &[ShiftRule]) -> (Program, Vec<VarId>) {
    let mut prog = Program::new();
    let mut current: Vec<(VarId, Operand)> = Vec::new();
    let lookup = |current: &[(VarId, Operand)], v: VarId| {
        current.iter().find(|(u, _)| *u == v).map(|&(_, o)| o).unwrap_or(Operand::Var(v))
    };
    for (k, rule) in rules.iter().enumerate() {
        let target = rule.target();
        let x = lookup(&current, target);
        let rhs = match rule {
            ShiftRule::VarPlusVar { coeff, source, .. } => {
                Rhs::sum(0, vec![Term::new(1, x), Term::new(-coeff, lookup(&current, *source))])
            }
            ShiftRule::VarPlusConst { coeff, .. } => Rhs::sum(-coeff, vec![Term::new(1, x)]),
        };
        let t = k as u32 + 1;
        prog.instructions.push(Instruction { target: t, rhs });
        current.retain(|(u, _)| *u != target);
        current.push((target, Operand::Temp(t)));
    }
    current.sort();
    let vars = current.iter().map(|&(v, _)| v).collect();
    prog.outputs = current.iter().map(|&(v, o)| Output::new(format!("v{}", v), Value::Operand(o))).collect();
    (prog, vars)
}

/// Parses `x,y;z,w` into groups of variable ids.
pub fn parse_groups(spec: &str, symbols: &Symbols) -> Result<Vec<Vec<VarId>>> {
    spec.split(';')
        .filter(|g| !g.trim().is_empty())
        .map(|g| {
            g.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| symbols.id(s).ok_or_else(|| Error::UnknownSymbol(s.to_string())))
                .collect()
        })
        .collect()
}
