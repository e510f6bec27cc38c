//! Exact evaluation modulo a prime, used as a probabilistic identity test.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::program::{Operand, Program, Rhs, Value};
use crate::tree::{ExprTree, Node};

/// 2^31 - 1.
pub const MERSENNE_31: u64 = (1 << 31) - 1;

pub fn residue(c: &BigInt, p: u64) -> u64 {
    c.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits in u64")
}

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

pub fn pow_mod(mut base: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    base %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, base, p);
        }
        base = mul_mod(base, base, p);
        e >>= 1;
    }
    r
}

/// Inverse modulo a prime; `None` for zero.
pub fn inv_mod(a: u64, p: u64) -> Option<u64> {
    if a % p == 0 {
        None
    } else {
        Some(pow_mod(a, p - 2, p))
    }
}

/// Something that can be evaluated exactly at a point modulo a prime.
pub trait EvalMod {
    /// One more than the largest variable id referenced.
    fn var_bound(&self) -> usize;

    /// Values of all outputs, in order.
    fn eval_mod(&self, point: &[u64], p: u64) -> Result<Vec<u64>>;
}

impl EvalMod for Polynomial {
    fn var_bound(&self) -> usize {
        Polynomial::var_bound(self)
    }

    fn eval_mod(&self, point: &[u64], p: u64) -> Result<Vec<u64>> {
        let mut acc = 0u64;
        for (c, m) in self.terms() {
            let mut t = residue(c, p);
            for &(v, e) in m.factors() {
                let x = *point.get(v as usize).ok_or(Error::MissingVariable(v))?;
                t = mul_mod(t, pow_mod(x, e as u64, p), p);
            }
            acc = add_mod(acc, t, p);
        }
        Ok(vec![acc])
    }
}

impl EvalMod for [Polynomial] {
    fn var_bound(&self) -> usize {
        self.iter().map(|q| q.var_bound()).max().unwrap_or(0)
    }

    fn eval_mod(&self, point: &[u64], p: u64) -> Result<Vec<u64>> {
        let mut out = Vec::with_capacity(self.len());
        for q in self {
            out.extend(q.eval_mod(point, p)?);
        }
        Ok(out)
    }
}

impl EvalMod for Program {
    fn var_bound(&self) -> usize {
        let mut m = 0usize;
        for ins in &self.instructions {
            ins.rhs.for_each_operand(|o| {
                if let Operand::Var(v) = o {
                    m = m.max(v as usize + 1);
                }
            });
        }
        for o in &self.outputs {
            if let Value::Operand(Operand::Var(v)) = o.value {
                m = m.max(v as usize + 1);
            }
        }
        m
    }

    /// Runs the instructions in order; temporaries may be overwritten.
    fn eval_mod(&self, point: &[u64], p: u64) -> Result<Vec<u64>> {
        let size = self.max_temp() as usize + 1;
        let mut temps: Vec<Option<u64>> = vec![None; size];
        let read = |o: Operand, temps: &[Option<u64>]| -> Result<u64> {
            match o {
                Operand::Var(v) => point.get(v as usize).copied().ok_or(Error::MissingVariable(v)),
                Operand::Temp(t) => temps[t as usize].ok_or(Error::UndefinedTemp(t)),
            }
        };
        for ins in &self.instructions {
            let value = match &ins.rhs {
                Rhs::Sum { constant, terms } => {
                    let mut acc = residue(constant, p);
                    for t in terms {
                        let x = read(t.operand, &temps)?;
                        acc = add_mod(acc, mul_mod(residue(&t.coeff, p), x, p), p);
                    }
                    acc
                }
                Rhs::Product { coeff, factors } => {
                    let mut acc = residue(coeff, p);
                    for f in factors {
                        let x = read(f.operand, &temps)?;
                        acc = mul_mod(acc, pow_mod(x, f.exp as u64, p), p);
                    }
                    acc
                }
            };
            temps[ins.target as usize] = Some(value);
        }
        let mut out = Vec::with_capacity(self.outputs.len());
        for o in &self.outputs {
            let v = match &o.value {
                Value::Const(c) => residue(c, p),
                Value::Operand(op) => read(*op, &temps)?,
            };
            let d = residue(&o.denominator, p);
            let inv = inv_mod(d, p).ok_or_else(|| Error::DenominatorVanishes(o.name.clone()))?;
            out.push(mul_mod(v, inv, p));
        }
        Ok(out)
    }
}

impl EvalMod for ExprTree {
    fn var_bound(&self) -> usize {
        self.nodes()
            .iter()
            .filter_map(|n| match n {
                Node::Var(v) => Some(*v as usize + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Values of all roots; children precede parents, so one pass suffices.
    fn eval_mod(&self, point: &[u64], p: u64) -> Result<Vec<u64>> {
        let mut vals = Vec::with_capacity(self.len());
        for n in self.nodes() {
            let v = match n {
                Node::Const(c) => residue(c, p),
                Node::Var(v) => *point.get(*v as usize).ok_or(Error::MissingVariable(*v))?,
                Node::Pow(b, e) => pow_mod(vals[*b as usize], *e as u64, p),
                Node::Add(cs) => cs.iter().fold(0, |acc, &c| add_mod(acc, vals[c as usize], p)),
                Node::Mul(cs) => cs.iter().fold(1 % p, |acc, &c| mul_mod(acc, vals[c as usize], p)),
            };
            vals.push(v);
        }
        Ok(self.roots().iter().map(|&r| vals[r as usize]).collect())
    }
}

/// Draws a uniformly random point in `[0, p)^n`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, n: usize, p: u64) -> Vec<u64> {
    (0..n).map(|_| rng.gen_range(0..p)).collect()
}

/// Compares two subjects at `trials` random points; stops at the first
/// mismatch. Evaluation errors count as a mismatch.
pub fn equivalent_with<A, B, R>(a: &A, b: &B, trials: usize, p: u64, rng: &mut R) -> bool
where
    A: EvalMod + ?Sized,
    B: EvalMod + ?Sized,
    R: Rng + ?Sized,
{
    let n = a.var_bound().max(b.var_bound());
    for _ in 0..trials {
        let point = random_point(rng, n, p);
        match (a.eval_mod(&point, p), b.eval_mod(&point, p)) {
            (Ok(x), Ok(y)) if x == y => {}
            _ => return false,
        }
    }
    true
}

/// [`equivalent_with`] using a fixed-seed generator.
pub fn equivalent<A, B>(a: &A, b: &B, trials: usize, p: u64) -> bool
where
    A: EvalMod + ?Sized,
    B: EvalMod + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_e9a1);
    equivalent_with(a, b, trials, p, &mut rng)
}
