#![allow(dead_code)]

use num_bigint::BigInt;
use rand::Rng;

use polyopt::poly::{normalize, Monomial, Polynomial, VarId};
use polyopt::program::{Operand, Program, Rhs, Value};

/// `terms` random terms over `vars` variables with exponents up to
/// `max_exp` and nonzero coefficients in `[-9, 9]`.
pub fn random_poly<R: Rng>(rng: &mut R, vars: usize, terms: usize, max_exp: u32) -> Polynomial {
    let raw = (0..terms)
        .map(|_| {
            let mut c: i64 = 0;
            while c == 0 {
                c = rng.gen_range(-9..=9);
            }
            let m = Monomial::from_pairs((0..vars as VarId).map(|v| (v, rng.gen_range(0..=max_exp))));
            (BigInt::from(c), m)
        })
        .collect();
    normalize(raw)
}

/// Symbolic evaluation of a program, one polynomial per output, ignoring
/// denominators.
pub fn expand_program(prog: &Program) -> Vec<Polynomial> {
    let mut temps: std::collections::HashMap<u32, Polynomial> = Default::default();
    let get = |temps: &std::collections::HashMap<u32, Polynomial>, o: Operand| match o {
        Operand::Var(v) => Polynomial::var(v),
        Operand::Temp(t) => temps[&t].clone(),
    };
    for ins in &prog.instructions {
        let value = match &ins.rhs {
            Rhs::Sum { constant, terms } => terms
                .iter()
                .fold(Polynomial::constant(constant.clone()), |acc, t| acc.add(&get(&temps, t.operand).scale(&t.coeff))),
            Rhs::Product { coeff, factors } => factors
                .iter()
                .fold(Polynomial::constant(coeff.clone()), |acc, f| acc.mul(&get(&temps, f.operand).pow(f.exp))),
        };
        temps.insert(ins.target, value);
    }
    prog.outputs
        .iter()
        .map(|o| match &o.value {
            Value::Const(c) => Polynomial::constant(c.clone()),
            Value::Operand(op) => get(&temps, *op),
        })
        .collect()
}
