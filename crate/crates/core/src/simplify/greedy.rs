//! Greedy extraction of small repeated subexpressions.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::count::{rhs_cost, CostModel};
use crate::error::{Error, Result};
use crate::program::{is_unit, Factor, Instruction, Operand, Program, Rhs, Term};

/// A small pattern counted across the program. Operands of commutative keys
/// are stored in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubexprKey {
    /// `x^n`, `n >= 2`.
    Power(Operand, u32),
    /// `x^a * y^b`.
    Product((Operand, u32), (Operand, u32)),
    /// `c * x`, `c >= 2`.
    ConstMul(BigInt, Operand),
    /// `x + c`.
    ConstAdd(BigInt, Operand),
    /// `x + y`.
    Sum(Operand, Operand),
    /// `x - y`.
    Difference(Operand, Operand),
    /// `a*x + b*y` with coprime `a > 0` and `b`, not both units.
    Linear(BigInt, Operand, BigInt, Operand),
    /// `a*x + c` with coprime `a > 1` and `c`.
    ScaledAdd(BigInt, Operand, BigInt),
}

impl SubexprKey {
    /// The instruction computing the pattern.
    pub fn rhs(&self) -> Rhs {
        match self {
            SubexprKey::Power(x, n) => Rhs::product(1, vec![Factor::new(*x, *n)]),
            SubexprKey::Product((x, a), (y, b)) => Rhs::product(1, vec![Factor::new(*x, *a), Factor::new(*y, *b)]),
            SubexprKey::ConstMul(c, x) => Rhs::product(c.clone(), vec![Factor::new(*x, 1)]),
            SubexprKey::ConstAdd(c, x) => Rhs::sum(c.clone(), vec![Term::new(1, *x)]),
            SubexprKey::Sum(x, y) => Rhs::sum(0, vec![Term::new(1, *x), Term::new(1, *y)]),
            SubexprKey::Difference(x, y) => Rhs::sum(0, vec![Term::new(1, *x), Term::new(-1, *y)]),
            SubexprKey::Linear(a, x, b, y) => Rhs::sum(0, vec![Term::new(a.clone(), *x), Term::new(b.clone(), *y)]),
            SubexprKey::ScaledAdd(a, x, c) => Rhs::sum(c.clone(), vec![Term::new(a.clone(), *x)]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedySettings {
    /// Percentage of the candidate substitutions applied per round.
    pub max_perc: f64,
    /// Minimum number of substitutions tried per round.
    pub min_num: usize,
    /// Seconds; 0 means no limit.
    pub time_limit: f64,
}

impl Default for GreedySettings {
    fn default() -> Self {
        GreedySettings { max_perc: 5.0, min_num: 10, time_limit: 0.0 }
    }
}

impl GreedySettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_perc > 0.0 && self.max_perc <= 100.0) {
            return Err(Error::InvalidSetting(format!("greedy max percentage {} not in (0, 100]", self.max_perc)));
        }
        if self.min_num == 0 {
            return Err(Error::InvalidSetting("greedy minimum number must be at least 1".into()));
        }
        if !(self.time_limit >= 0.0) {
            return Err(Error::InvalidSetting(format!("negative greedy time limit {}", self.time_limit)));
        }
        Ok(())
    }
}

/// Marks the constant of a sum or the coefficient of a product.
const SCALAR: usize = usize::MAX;
const NONE: usize = usize::MAX - 1;

#[derive(Clone, Debug)]
struct Occurrence {
    instr: usize,
    atoms: [usize; 2],
    /// The occurrence equals `lambda * pattern`.
    lambda: BigInt,
    saving: u64,
}

fn m(c: &BigInt) -> u64 {
    u64::from(!is_unit(c))
}

/// gcd of `a` and `b` carrying the sign of `a`.
fn sign_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let g = a.gcd(b);
    if a.is_negative() {
        -g
    } else {
        g
    }
}

fn collect(prog: &Program, model: &CostModel) -> HashMap<SubexprKey, Vec<Occurrence>> {
    let mut out: HashMap<SubexprKey, Vec<Occurrence>> = HashMap::new();
    let w = |e: u32| if e >= 2 { (model.power_cost)(e) } else { 0 };
    for (i, ins) in prog.instructions.iter().enumerate() {
        let mut push = |key: SubexprKey, atoms: [usize; 2], lambda: BigInt, saving: u64| {
            out.entry(key).or_default().push(Occurrence { instr: i, atoms, lambda, saving });
        };
        match &ins.rhs {
            Rhs::Sum { constant, terms } => {
                for (a, ta) in terms.iter().enumerate() {
                    if !is_unit(&ta.coeff) {
                        push(SubexprKey::ConstMul(ta.coeff.abs(), ta.operand), [a, NONE], ta.coeff.signum(), 1);
                    }
                    if !constant.is_zero() {
                        let g = sign_gcd(&ta.coeff, constant);
                        let (a1, c1) = (&ta.coeff / &g, constant / &g);
                        let saving = 1 + m(&ta.coeff) - m(&g);
                        let key = if a1.is_one() {
                            SubexprKey::ConstAdd(c1, ta.operand)
                        } else {
                            SubexprKey::ScaledAdd(a1, ta.operand, c1)
                        };
                        push(key, [a, SCALAR], g, saving);
                    }
                    for (b, tb) in terms.iter().enumerate().skip(a + 1) {
                        let g = sign_gcd(&ta.coeff, &tb.coeff);
                        let (a1, b1) = (&ta.coeff / &g, &tb.coeff / &g);
                        let saving = 1 + m(&ta.coeff) + m(&tb.coeff) - m(&g);
                        let key = if a1.is_one() && b1.is_one() {
                            SubexprKey::Sum(ta.operand, tb.operand)
                        } else if a1.is_one() && (-&b1).is_one() {
                            SubexprKey::Difference(ta.operand, tb.operand)
                        } else {
                            SubexprKey::Linear(a1, ta.operand, b1, tb.operand)
                        };
                        push(key, [a, b], g, saving);
                    }
                }
            }
            Rhs::Product { coeff, factors } => {
                for (a, fa) in factors.iter().enumerate() {
                    if fa.exp >= 2 {
                        push(SubexprKey::Power(fa.operand, fa.exp), [a, NONE], BigInt::one(), w(fa.exp));
                    }
                    if fa.exp == 1 && !is_unit(coeff) {
                        push(SubexprKey::ConstMul(coeff.abs(), fa.operand), [a, SCALAR], coeff.signum(), 1);
                    }
                    for (b, fb) in factors.iter().enumerate().skip(a + 1) {
                        let key = SubexprKey::Product((fa.operand, fa.exp), (fb.operand, fb.exp));
                        push(key, [a, b], BigInt::one(), 1 + w(fa.exp) + w(fb.exp));
                    }
                }
            }
        }
    }
    out
}

/// Occurrence count of every small subexpression in the program.
pub fn count_small_subexprs(prog: &Program) -> HashMap<SubexprKey, usize> {
    collect(prog, &CostModel::default()).into_iter().map(|(k, v)| (k, v.len())).collect()
}

#[derive(Default)]
struct Edit {
    removed: Vec<usize>,
    added: Vec<(BigInt, Operand)>,
}

/// One round of greedy substitution. Returns whether anything changed.
pub fn greedy_round(prog: &mut Program, settings: &GreedySettings, model: &CostModel) -> Result<bool> {
    let found = collect(prog, model);
    let mut cands: Vec<(SubexprKey, Vec<Occurrence>, i64)> = found
        .into_iter()
        .filter(|(_, occ)| occ.len() >= 2)
        .map(|(k, occ)| {
            let p = rhs_cost(&k.rhs(), model) as i64;
            let gain = occ.iter().map(|o| o.saving as i64).sum::<i64>() - p;
            (k, occ, gain)
        })
        .filter(|c| c.2 > 0)
        .collect();
    if cands.is_empty() {
        return Ok(false);
    }
    cands.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    let quota = ((settings.max_perc / 100.0) * cands.len() as f64).ceil() as usize;
    let take = quota.max(settings.min_num);

    let mut consumed: HashSet<(usize, usize)> = HashSet::new();
    let mut edits: HashMap<usize, Edit> = HashMap::new();
    let mut fresh: Vec<Instruction> = Vec::new();
    let mut next = prog.max_temp() + 1;
    let mut applied = false;
    for (key, occs, _) in cands.into_iter().take(take) {
        let pattern = key.rhs();
        let p = rhs_cost(&pattern, model) as i64;
        let free = |o: &Occurrence, consumed: &HashSet<(usize, usize)>| {
            o.atoms.iter().all(|&a| a == NONE || !consumed.contains(&(o.instr, a)))
        };
        let usable: Vec<&Occurrence> = occs.iter().filter(|o| free(o, &consumed)).collect();
        if usable.len() < 2 {
            continue;
        }
        let realized = usable.iter().map(|o| o.saving as i64).sum::<i64>() - p;
        if realized <= 0 {
            continue;
        }
        let exact = usable
            .iter()
            .find(|o| o.lambda.is_one() && prog.instructions[o.instr].rhs == pattern)
            .map(|o| o.instr);
        let z = match exact {
            Some(i) => {
                let len = prog.instructions[i].rhs.operands().len();
                consumed.extend((0..len).map(|a| (i, a)));
                consumed.insert((i, SCALAR));
                prog.instructions[i].target
            }
            None => {
                let t = next;
                next += 1;
                fresh.push(Instruction { target: t, rhs: pattern });
                t
            }
        };
        for o in usable {
            if Some(o.instr) == exact {
                continue;
            }
            let e = edits.entry(o.instr).or_default();
            for &a in &o.atoms {
                if a != NONE {
                    consumed.insert((o.instr, a));
                    e.removed.push(a);
                }
            }
            e.added.push((o.lambda.clone(), Operand::Temp(z)));
        }
        applied = true;
    }
    if !applied {
        return Ok(false);
    }
    for (i, e) in edits {
        apply_edit(&mut prog.instructions[i].rhs, e);
    }
    prog.instructions.extend(fresh);
    prog.tidy()?;
    Ok(true)
}

fn apply_edit(rhs: &mut Rhs, e: Edit) {
    let gone: HashSet<usize> = e.removed.into_iter().collect();
    match rhs {
        Rhs::Sum { constant, terms } => {
            if gone.contains(&SCALAR) {
                constant.set_zero();
            }
            let mut i = 0;
            terms.retain(|_| {
                i += 1;
                !gone.contains(&(i - 1))
            });
            terms.extend(e.added.into_iter().map(|(c, o)| Term { coeff: c, operand: o }));
        }
        Rhs::Product { coeff, factors } => {
            if gone.contains(&SCALAR) {
                *coeff = coeff.signum();
            }
            let mut i = 0;
            factors.retain(|_| {
                i += 1;
                !gone.contains(&(i - 1))
            });
            // a consumed coefficient keeps only its sign
            factors.extend(e.added.into_iter().map(|(_, o)| Factor::new(o, 1)));
        }
    }
    rhs.canonicalize();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::CountOps;
    use crate::eval::{equivalent, MERSENNE_31};
    use crate::program::{Output, Value};

    fn value_of(t: u32) -> Value {
        Value::Operand(Operand::Temp(t))
    }

    fn v(i: u32) -> Operand {
        Operand::Var(i)
    }

    fn z(i: u32) -> Operand {
        Operand::Temp(i)
    }

    fn sum(k: i64, ts: &[(i64, Operand)]) -> Rhs {
        Rhs::sum(k, ts.iter().map(|&(c, o)| Term::new(c, o)).collect())
    }

    fn prod(c: i64, fs: &[(Operand, u32)]) -> Rhs {
        Rhs::product(c, fs.iter().map(|&(o, e)| Factor::new(o, e)).collect())
    }

    fn program(rhs: Vec<Rhs>) -> Program {
        let n = rhs.len() as u32;
        Program {
            instructions: rhs.into_iter().enumerate().map(|(i, r)| Instruction { target: i as u32 + 1, rhs: r }).collect(),
            outputs: vec![Output::new("a", value_of(n))],
        }
    }

    /// w, x, y, z as variables 0..3.
    fn merged_tree_code() -> Program {
        let (w, x, y, zz) = (v(0), v(1), v(2), v(3));
        program(vec![
            prod(1, &[(w, 2)]),
            sum(0, &[(1, y), (1, zz)]),
            prod(1, &[(z(1), 1), (z(2), 1)]),
            sum(0, &[(1, x), (1, y), (1, zz)]),
            prod(1, &[(w, 1), (z(4), 1)]),
            sum(0, &[(1, z(3)), (1, z(5))]),
        ])
    }

    #[test]
    fn reuses_existing_sum() {
        let mut prog = merged_tree_code();
        let orig = prog.clone();
        assert!(greedy_round(&mut prog, &GreedySettings::default(), &CostModel::default()).unwrap());
        assert_eq!(prog.instructions[3].rhs, sum(0, &[(1, v(1)), (1, z(2))]));
        assert_eq!(prog.instructions.len(), 6);
        assert_eq!(prog.count_ops().total, orig.count_ops().total - 1);
        assert!(equivalent(&orig, &prog, 20, MERSENNE_31));
        assert!(!greedy_round(&mut prog, &GreedySettings::default(), &CostModel::default()).unwrap());
    }

    #[test]
    fn pair_counts() {
        let (w, x, y, zz) = (v(0), v(1), v(2), v(3));
        let prog = program(vec![
            prod(1, &[(w, 1), (y, 1)]),
            prod(1, &[(w, 1), (zz, 1)]),
            prod(1, &[(x, 1), (y, 1)]),
            prod(1, &[(x, 1), (zz, 1)]),
            sum(0, &[(1, z(1)), (1, z(2)), (1, z(3)), (1, z(4))]),
        ]);
        let counts = count_small_subexprs(&prog);
        assert_eq!(counts[&SubexprKey::Product((w, 1), (y, 1))], 1);
        assert_eq!(counts[&SubexprKey::Product((x, 1), (zz, 1))], 1);
        assert_eq!(counts[&SubexprKey::Sum(z(1), z(4))], 1);
        assert_eq!(counts.len(), 4 + 6);
    }

    #[test]
    fn single_operand_keys() {
        let prog = program(vec![prod(3, &[(v(0), 2)]), sum(0, &[(2, z(1))])]);
        let counts = count_small_subexprs(&prog);
        let mut keys: Vec<_> = counts.keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, vec![SubexprKey::Power(v(0), 2), SubexprKey::ConstMul(2.into(), z(1))]);
    }

    #[test]
    fn differences_fold_signs() {
        // x - y and 3y - 3x share one key
        let prog = program(vec![sum(0, &[(1, v(0)), (-1, v(1))]), sum(0, &[(-3, v(0)), (3, v(1)), (1, z(1))])]);
        let counts = count_small_subexprs(&prog);
        assert_eq!(counts[&SubexprKey::Difference(v(0), v(1))], 2);
        let mut p = prog.clone();
        assert!(greedy_round(&mut p, &GreedySettings::default(), &CostModel::default()).unwrap());
        assert!(p.count_ops().total < prog.count_ops().total);
        assert!(equivalent(&prog, &p, 20, MERSENNE_31));
    }

    #[test]
    fn distinct_pairs_unchanged() {
        let mut prog = program(vec![sum(0, &[(1, v(0)), (1, v(1))]), prod(1, &[(z(1), 1), (v(2), 1)])]);
        let orig = prog.clone();
        assert!(!greedy_round(&mut prog, &GreedySettings::default(), &CostModel::default()).unwrap());
        assert_eq!(prog, orig);
    }

    #[test]
    fn coefficient_patterns() {
        // 6x + 6y read twice through constants and products
        let prog = program(vec![
            prod(6, &[(v(0), 1), (v(1), 1)]),
            prod(-6, &[(v(0), 1), (v(2), 1)]),
            sum(4, &[(2, v(0)), (1, z(1))]),
            sum(6, &[(3, v(0)), (1, z(2)), (1, z(3))]),
        ]);
        let mut p = prog.clone();
        while greedy_round(&mut p, &GreedySettings::default(), &CostModel::default()).unwrap() {}
        assert!(p.count_ops().total < prog.count_ops().total);
        assert!(equivalent(&prog, &p, 20, MERSENNE_31));
    }
}
