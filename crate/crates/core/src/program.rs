//! Straight-line evaluation programs.
//!
//! A program is an ordered list of intermediate expressions `Z_k = rhs` and a
//! list of named outputs. Every right-hand side uses a single operator type:
//! a sum of coefficient-weighted operands plus a constant, or a coefficient
//! times a product of operand powers.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial, VarId};

/// Identifier of a temporary. Before recycling every temporary is assigned
/// exactly once; after recycling it names a storage slot.
pub type TempId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    Var(VarId),
    Temp(TempId),
}

/// `coeff * operand` inside a sum.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: BigInt,
    pub operand: Operand,
}

/// `operand ^ exp` inside a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub operand: Operand,
    pub exp: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rhs {
    Sum { constant: BigInt, terms: Vec<Term> },
    Product { coeff: BigInt, factors: Vec<Factor> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub target: TempId,
    pub rhs: Rhs,
}

/// What an output evaluates to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Const(BigInt),
    Operand(Operand),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub value: Value,
    /// The output is `value / denominator`; 1 for integer inputs.
    pub denominator: BigInt,
}

impl Output {
    pub fn new(name: impl Into<String>, value: Value) -> Self {
        Output { name: name.into(), value, denominator: BigInt::one() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub instructions: Vec<Instruction>,
    pub outputs: Vec<Output>,
}

impl Term {
    pub fn new(coeff: impl Into<BigInt>, operand: Operand) -> Self {
        Term { coeff: coeff.into(), operand }
    }
}

impl Factor {
    pub fn new(operand: Operand, exp: u32) -> Self {
        Factor { operand, exp }
    }
}

impl Rhs {
    pub fn sum(constant: impl Into<BigInt>, terms: Vec<Term>) -> Rhs {
        Rhs::Sum { constant: constant.into(), terms }
    }

    pub fn product(coeff: impl Into<BigInt>, factors: Vec<Factor>) -> Rhs {
        Rhs::Product { coeff: coeff.into(), factors }
    }

    pub fn operands(&self) -> Vec<Operand> {
        match self {
            Rhs::Sum { terms, .. } => terms.iter().map(|t| t.operand).collect(),
            Rhs::Product { factors, .. } => factors.iter().map(|f| f.operand).collect(),
        }
    }

    pub fn for_each_operand(&self, mut f: impl FnMut(Operand)) {
        match self {
            Rhs::Sum { terms, .. } => terms.iter().for_each(|t| f(t.operand)),
            Rhs::Product { factors, .. } => factors.iter().for_each(|x| f(x.operand)),
        }
    }

    pub fn map_operands(&mut self, mut f: impl FnMut(Operand) -> Operand) {
        match self {
            Rhs::Sum { terms, .. } => terms.iter_mut().for_each(|t| t.operand = f(t.operand)),
            Rhs::Product { factors, .. } => {
                factors.iter_mut().for_each(|x| x.operand = f(x.operand))
            }
        }
    }

    /// Merges repeated operands, drops zero terms and sorts operands so that
    /// equal expressions compare equal.
    pub fn canonicalize(&mut self) {
        match self {
            Rhs::Sum { terms, .. } => {
                terms.sort_by(|a, b| a.operand.cmp(&b.operand));
                let mut out: Vec<Term> = Vec::with_capacity(terms.len());
                for t in terms.drain(..) {
                    match out.last_mut() {
                        Some(last) if last.operand == t.operand => last.coeff += t.coeff,
                        _ => out.push(t),
                    }
                }
                out.retain(|t| !t.coeff.is_zero());
                *terms = out;
            }
            Rhs::Product { coeff, factors } => {
                factors.sort_by(|a, b| a.operand.cmp(&b.operand));
                let mut out: Vec<Factor> = Vec::with_capacity(factors.len());
                for f in factors.drain(..) {
                    match out.last_mut() {
                        Some(last) if last.operand == f.operand => last.exp += f.exp,
                        _ => out.push(f),
                    }
                }
                out.retain(|f| f.exp > 0);
                if coeff.is_zero() {
                    out.clear();
                }
                *factors = out;
            }
        }
    }

    /// The value of the rhs when it needs no instruction of its own.
    pub fn as_trivial(&self) -> Option<Value> {
        match self {
            Rhs::Sum { constant, terms } => match terms.as_slice() {
                [] => Some(Value::Const(constant.clone())),
                [t] if constant.is_zero() && t.coeff.is_one() => Some(Value::Operand(t.operand)),
                _ => None,
            },
            Rhs::Product { coeff, factors } => {
                if coeff.is_zero() {
                    return Some(Value::Const(BigInt::zero()));
                }
                match factors.as_slice() {
                    [] => Some(Value::Const(coeff.clone())),
                    [f] if f.exp == 1 && coeff.is_one() => Some(Value::Operand(f.operand)),
                    _ => None,
                }
            }
        }
    }

    pub fn is_sum(&self) -> bool {
        matches!(self, Rhs::Sum { .. })
    }
}

impl Program {
    pub fn new() -> Self {
        Program::default()
    }

    /// Largest temporary id in use (0 if none).
    pub fn max_temp(&self) -> TempId {
        let mut m = 0;
        for ins in &self.instructions {
            m = m.max(ins.target);
            ins.rhs.for_each_operand(|o| {
                if let Operand::Temp(t) = o {
                    m = m.max(t);
                }
            });
        }
        for o in &self.outputs {
            if let Value::Operand(Operand::Temp(t)) = o.value {
                m = m.max(t);
            }
        }
        m
    }

    /// Smallest temporary id in use (0 if none).
    pub fn min_temp(&self) -> TempId {
        self.instructions.iter().map(|i| i.target).min().unwrap_or(0)
    }

    /// Distinct temporaries defined by the program.
    pub fn num_temps(&self) -> usize {
        self.instructions.iter().map(|i| i.target).collect::<HashSet<_>>().len()
    }

    /// Number of reads of every temporary, outputs included.
    pub fn use_counts(&self) -> HashMap<TempId, usize> {
        let mut uses: HashMap<TempId, usize> = HashMap::new();
        for ins in &self.instructions {
            ins.rhs.for_each_operand(|o| {
                if let Operand::Temp(t) = o {
                    *uses.entry(t).or_default() += 1;
                }
            });
        }
        for o in &self.outputs {
            if let Value::Operand(Operand::Temp(t)) = o.value {
                *uses.entry(t).or_default() += 1;
            }
        }
        uses
    }

    /// Checks that every temporary is defined before it is read.
    pub fn check_def_before_use(&self) -> Result<()> {
        let mut defined: HashSet<TempId> = HashSet::new();
        for ins in &self.instructions {
            let mut bad = None;
            ins.rhs.for_each_operand(|o| {
                if let Operand::Temp(t) = o {
                    if !defined.contains(&t) {
                        bad = Some(t);
                    }
                }
            });
            if let Some(t) = bad {
                return Err(Error::UndefinedTemp(t));
            }
            defined.insert(ins.target);
        }
        for o in &self.outputs {
            if let Value::Operand(Operand::Temp(t)) = o.value {
                if !defined.contains(&t) {
                    return Err(Error::UndefinedTemp(t));
                }
            }
        }
        Ok(())
    }

    /// Checks the single-assignment property.
    pub fn is_ssa(&self) -> bool {
        let mut seen = HashSet::new();
        self.instructions.iter().all(|i| seen.insert(i.target))
    }

    /// The straightforward program for an expanded polynomial: one product
    /// per term that needs it, then one sum.
    pub fn from_polynomial(name: &str, poly: &Polynomial) -> Program {
        let mut prog = Program::new();
        let value = prog.push_polynomial(poly);
        prog.outputs.push(Output::new(name, value));
        prog
    }

    /// Appends instructions computing `poly` and returns its value.
    pub fn push_polynomial(&mut self, poly: &Polynomial) -> Value {
        let mut next = self.max_temp() + 1;
        let mut constant = BigInt::zero();
        let mut terms = Vec::new();
        for (c, m) in poly.terms() {
            if m.is_one() {
                constant += c;
                continue;
            }
            match monomial_operand(m) {
                Some(op) => terms.push(Term::new(c.clone(), op)),
                None => {
                    let factors = m
                        .factors()
                        .iter()
                        .map(|&(v, e)| Factor::new(Operand::Var(v), e))
                        .collect();
                    if poly.num_terms() == 1 {
                        let t = next;
                        self.instructions
                            .push(Instruction { target: t, rhs: Rhs::product(c.clone(), factors) });
                        return Value::Operand(Operand::Temp(t));
                    }
                    let t = next;
                    next += 1;
                    self.instructions
                        .push(Instruction { target: t, rhs: Rhs::product(1, factors) });
                    terms.push(Term::new(c.clone(), Operand::Temp(t)));
                }
            }
        }
        let rhs = Rhs::Sum { constant, terms };
        match rhs.as_trivial() {
            Some(v) => v,
            None => {
                let rhs = match &rhs {
                    // a lone scaled operand is a product, not a sum
                    Rhs::Sum { constant, terms } if constant.is_zero() && terms.len() == 1 => {
                        Rhs::product(terms[0].coeff.clone(), vec![Factor::new(terms[0].operand, 1)])
                    }
                    _ => rhs,
                };
                self.instructions.push(Instruction { target: next, rhs });
                Value::Operand(Operand::Temp(next))
            }
        }
    }
}

impl Rhs {
    /// Replaces reads of `t` by `value`; constants fold into the constant
    /// term or the coefficient.
    pub fn substitute(&mut self, t: TempId, value: &Value) {
        let target = Operand::Temp(t);
        match (self, value) {
            (Rhs::Sum { terms, .. }, Value::Operand(o)) => {
                terms.iter_mut().filter(|x| x.operand == target).for_each(|x| x.operand = *o)
            }
            (Rhs::Product { factors, .. }, Value::Operand(o)) => {
                factors.iter_mut().filter(|x| x.operand == target).for_each(|x| x.operand = *o)
            }
            (Rhs::Sum { constant, terms }, Value::Const(k)) => {
                terms.retain(|x| {
                    if x.operand == target {
                        *constant += &x.coeff * k;
                        false
                    } else {
                        true
                    }
                });
            }
            (Rhs::Product { coeff, factors }, Value::Const(k)) => {
                factors.retain(|x| {
                    if x.operand == target {
                        *coeff *= num_traits::pow(k.clone(), x.exp as usize);
                        false
                    } else {
                        true
                    }
                });
            }
        }
    }
}

/// Appends instructions, reusing an existing temporary for a right-hand side
/// seen before when deduplication is on.
#[derive(Debug)]
pub struct ProgramBuilder {
    pub program: Program,
    seen: Option<HashMap<Rhs, TempId>>,
    next: TempId,
}

impl ProgramBuilder {
    pub fn new(dedup: bool) -> Self {
        ProgramBuilder { program: Program::new(), seen: dedup.then(HashMap::new), next: 1 }
    }

    /// Canonicalizes `rhs` and returns its value, emitting an instruction
    /// unless the rhs is trivial or already computed.
    pub fn emit(&mut self, mut rhs: Rhs) -> Value {
        rhs.canonicalize();
        if let Some(v) = rhs.as_trivial() {
            return v;
        }
        if let Some(seen) = &self.seen {
            if let Some(&t) = seen.get(&rhs) {
                return Value::Operand(Operand::Temp(t));
            }
        }
        let t = self.next;
        self.next += 1;
        if let Some(seen) = &mut self.seen {
            seen.insert(rhs.clone(), t);
        }
        self.program.instructions.push(Instruction { target: t, rhs });
        Value::Operand(Operand::Temp(t))
    }

    pub fn finish(self) -> Program {
        self.program
    }
}

impl Program {
    /// Folds trivial instructions into their users, merges instructions with
    /// equal right-hand sides, drops unused ones and renumbers temporaries
    /// from 1. Expects single assignment; restores def-before-use order first.
    pub fn tidy(&mut self) -> Result<()> {
        self.topo_sort()?;
        let mut resolved: HashMap<TempId, Value> = HashMap::new();
        let mut seen: HashMap<Rhs, TempId> = HashMap::new();
        let mut kept = Vec::with_capacity(self.instructions.len());
        for mut ins in std::mem::take(&mut self.instructions) {
            let mut reads = Vec::new();
            ins.rhs.for_each_operand(|o| {
                if let Operand::Temp(t) = o {
                    if resolved.contains_key(&t) {
                        reads.push(t);
                    }
                }
            });
            for t in reads {
                ins.rhs.substitute(t, &resolved[&t]);
            }
            ins.rhs.canonicalize();
            if let Some(v) = ins.rhs.as_trivial() {
                resolved.insert(ins.target, v);
                continue;
            }
            if let Some(&e) = seen.get(&ins.rhs) {
                resolved.insert(ins.target, Value::Operand(Operand::Temp(e)));
                continue;
            }
            seen.insert(ins.rhs.clone(), ins.target);
            kept.push(ins);
        }
        self.instructions = kept;
        for o in &mut self.outputs {
            if let Value::Operand(Operand::Temp(t)) = o.value {
                if let Some(v) = resolved.get(&t) {
                    o.value = v.clone();
                }
            }
        }
        self.remove_dead();
        self.renumber();
        Ok(())
    }

    /// Drops instructions whose result is never read.
    pub fn remove_dead(&mut self) {
        let mut live: HashSet<TempId> = HashSet::new();
        for o in &self.outputs {
            if let Value::Operand(Operand::Temp(t)) = o.value {
                live.insert(t);
            }
        }
        let mut keep = vec![false; self.instructions.len()];
        for (i, ins) in self.instructions.iter().enumerate().rev() {
            if live.contains(&ins.target) {
                keep[i] = true;
                ins.rhs.for_each_operand(|o| {
                    if let Operand::Temp(t) = o {
                        live.insert(t);
                    }
                });
            }
        }
        let mut i = 0;
        self.instructions.retain(|_| {
            i += 1;
            keep[i - 1]
        });
    }

    /// Renames temporaries to `1..=n` in instruction order.
    pub fn renumber(&mut self) {
        let map: HashMap<TempId, TempId> =
            self.instructions.iter().enumerate().map(|(i, ins)| (ins.target, i as TempId + 1)).collect();
        let rename = |o: Operand| match o {
            Operand::Temp(t) => Operand::Temp(map[&t]),
            v => v,
        };
        for ins in &mut self.instructions {
            ins.target = map[&ins.target];
            ins.rhs.map_operands(rename);
        }
        for o in &mut self.outputs {
            if let Value::Operand(op) = o.value {
                o.value = Value::Operand(rename(op));
            }
        }
    }

    /// Reorders a single-assignment program so that every temporary is
    /// defined before it is read. Already ordered programs are unchanged.
    pub fn topo_sort(&mut self) -> Result<()> {
        let index: HashMap<TempId, usize> =
            self.instructions.iter().enumerate().map(|(i, ins)| (ins.target, i)).collect();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.instructions.len()];
        let mut order = Vec::with_capacity(self.instructions.len());
        for start in 0..self.instructions.len() {
            if state[start] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
            state[start] = 1;
            stack.push((start, deps(&self.instructions[start].rhs, &index)));
            while let Some((i, pending)) = stack.last_mut() {
                match pending.pop() {
                    Some(d) => match state[d] {
                        0 => {
                            state[d] = 1;
                            let ds = deps(&self.instructions[d].rhs, &index);
                            stack.push((d, ds));
                        }
                        1 => return Err(Error::Cycle(self.instructions[d].target)),
                        _ => {}
                    },
                    None => {
                        let i = *i;
                        state[i] = 2;
                        order.push(i);
                        stack.pop();
                    }
                }
            }
        }
        let mut slots: Vec<Option<Instruction>> = std::mem::take(&mut self.instructions).into_iter().map(Some).collect();
        self.instructions = order.into_iter().map(|i| slots[i].take().expect("each once")).collect();
        self.check_def_before_use()
    }
}

/// Instruction indices read by `rhs`, last operand first so that popping
/// visits operands in order.
fn deps(rhs: &Rhs, index: &HashMap<TempId, usize>) -> Vec<usize> {
    let mut out = Vec::new();
    rhs.for_each_operand(|o| {
        if let Operand::Temp(t) = o {
            if let Some(&i) = index.get(&t) {
                out.push(i);
            }
        }
    });
    out.reverse();
    out
}

fn monomial_operand(m: &Monomial) -> Option<Operand> {
    match m.factors() {
        [(v, 1)] => Some(Operand::Var(*v)),
        _ => None,
    }
}

/// `true` when multiplying by `c` costs nothing (signs are free).
pub fn is_unit(c: &BigInt) -> bool {
    c.abs().is_one()
}
