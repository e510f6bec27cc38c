//! Operation counting.
//!
//! Conventions: a square costs one multiplication; a power `x^n` with `n >= 3`
//! is one `P` entry whose weight in the total is [`CostModel::power_cost`];
//! multiplying by `+1` or `-1` is free because signs fold into additions.

use std::fmt;
use std::ops::{Add, AddAssign};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::poly::Polynomial;
use crate::program::{is_unit, Program, Rhs};
use crate::tree::{ExprTree, Node};

/// Multiplications needed to raise to the `n`-th power by repeated squaring.
pub fn binary_power_cost(n: u32) -> u64 {
    if n <= 1 {
        return 0;
    }
    (31 - n.leading_zeros()) as u64 + n.count_ones() as u64 - 1
}

/// Pluggable weights for the operation count.
#[derive(Clone, Copy)]
pub struct CostModel {
    /// Weight of `x^n` for `n >= 2`; `power_cost(2)` is counted as a multiplication.
    pub power_cost: fn(u32) -> u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { power_cost: binary_power_cost }
    }
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostModel").finish_non_exhaustive()
    }
}

/// Operation statistics in the `1P 16M 5A : 23` format.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpStats {
    /// Powers with exponent three or more.
    pub powers: u64,
    /// Multiplications, squares included.
    pub multiplications: u64,
    pub additions: u64,
    /// `additions + multiplications + sum of power weights`.
    pub total: u64,
}

impl OpStats {
    pub(crate) fn count_mul(&mut self, n: u64) {
        self.multiplications += n;
        self.total += n;
    }

    pub(crate) fn count_add(&mut self, n: u64) {
        self.additions += n;
        self.total += n;
    }

    pub(crate) fn count_power(&mut self, exp: u32, model: &CostModel) {
        match exp {
            0 | 1 => {}
            2 => self.count_mul(1),
            _ => {
                self.powers += 1;
                self.total += (model.power_cost)(exp);
            }
        }
    }
}

impl Add for OpStats {
    type Output = OpStats;

    fn add(self, o: OpStats) -> OpStats {
        OpStats {
            powers: self.powers + o.powers,
            multiplications: self.multiplications + o.multiplications,
            additions: self.additions + o.additions,
            total: self.total + o.total,
        }
    }
}

impl AddAssign for OpStats {
    fn add_assign(&mut self, o: OpStats) {
        *self = *self + o;
    }
}

impl fmt::Display for OpStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}P {}M {}A : {}",
            self.powers, self.multiplications, self.additions, self.total
        )
    }
}

/// Anything whose evaluation cost can be counted.
pub trait CountOps {
    fn count_ops_with(&self, model: &CostModel) -> OpStats;

    fn count_ops(&self) -> OpStats {
        self.count_ops_with(&CostModel::default())
    }
}

impl CountOps for Polynomial {
    /// Cost of the fully expanded form.
    fn count_ops_with(&self, model: &CostModel) -> OpStats {
        let mut s = OpStats::default();
        for (c, m) in self.terms() {
            let k = m.num_factors() as u64;
            if k == 0 {
                continue;
            }
            s.count_mul(k - 1 + u64::from(!is_unit(c)));
            for &(_, e) in m.factors() {
                s.count_power(e, model);
            }
        }
        if self.num_terms() > 1 {
            s.count_add(self.num_terms() as u64 - 1);
        }
        s
    }
}

impl CountOps for ExprTree {
    /// Every node reachable from a root is counted once, so shared subtrees
    /// are paid for a single time.
    fn count_ops_with(&self, model: &CostModel) -> OpStats {
        let live = self.reachable();
        let mut s = OpStats::default();
        for (i, n) in self.nodes().iter().enumerate() {
            if !live[i] {
                continue;
            }
            match n {
                Node::Const(_) | Node::Var(_) => {}
                Node::Pow(_, e) => s.count_power(*e, model),
                Node::Add(cs) => s.count_add(cs.len().saturating_sub(1) as u64),
                Node::Mul(cs) => {
                    let mut coeff = BigInt::from(1);
                    let mut k = 0u64;
                    for &c in cs {
                        match self.node(c) {
                            Node::Const(v) => coeff *= v,
                            _ => k += 1,
                        }
                    }
                    if k > 0 {
                        s.count_mul(k - 1 + u64::from(!is_unit(&coeff)));
                    }
                }
            }
        }
        s
    }
}

/// Cost of a single right-hand side.
pub fn rhs_ops(rhs: &Rhs, model: &CostModel) -> OpStats {
    let mut s = OpStats::default();
    match rhs {
        Rhs::Sum { constant, terms } => {
            let n = terms.len() + usize::from(!constant.is_zero());
            s.count_add(n.saturating_sub(1) as u64);
            s.count_mul(terms.iter().filter(|t| !is_unit(&t.coeff)).count() as u64);
        }
        Rhs::Product { coeff, factors } => {
            if !factors.is_empty() && !coeff.is_zero() {
                s.count_mul(factors.len() as u64 - 1 + u64::from(!is_unit(coeff)));
                for f in factors {
                    s.count_power(f.exp, model);
                }
            }
        }
    }
    s
}

/// Weighted total of a single right-hand side.
pub fn rhs_cost(rhs: &Rhs, model: &CostModel) -> u64 {
    rhs_ops(rhs, model).total
}

impl CountOps for Program {
    fn count_ops_with(&self, model: &CostModel) -> OpStats {
        let mut s = OpStats::default();
        for ins in &self.instructions {
            s += rhs_ops(&ins.rhs, model);
        }
        for o in &self.outputs {
            if !num_traits::One::is_one(&o.denominator) {
                s.count_mul(1);
            }
        }
        s
    }
}
