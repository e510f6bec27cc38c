//! Tree to program lowering, with and without sharing of equal subtrees.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::program::{Factor, Operand, Output, Program, ProgramBuilder, Rhs, Term, Value};
use crate::tree::{ExprTree, Node, NodeId};

/// Common subexpression elimination on a binary tree: every distinct
/// operator node becomes one instruction, equal subtrees share one temporary.
/// Outputs are named `F` (single root) or `F1, F2, ...`.
pub fn cse(tree: &ExprTree) -> Program {
    lower(tree, true, false)
}

/// Lowers an n-ary tree into single-operator instructions. A constant times
/// one operand inside a sum becomes a term coefficient and powers inside
/// products become factor exponents. With `dedup` off every node gets its own
/// instruction.
pub fn lower_tree(tree: &ExprTree, dedup: bool) -> Program {
    lower(tree, dedup, true)
}

pub fn output_name(i: usize, n: usize) -> String {
    if n == 1 {
        "F".to_string()
    } else {
        format!("F{}", i + 1)
    }
}

fn lower(tree: &ExprTree, dedup: bool, inline: bool) -> Program {
    let nodes = tree.nodes();
    let needed = needed_nodes(tree, inline);
    let mut b = ProgramBuilder::new(dedup);
    let mut vals: Vec<Option<Value>> = vec![None; nodes.len()];
    let val = |vals: &Vec<Option<Value>>, id: NodeId| vals[id as usize].clone().expect("children first");
    for (i, node) in nodes.iter().enumerate() {
        if !needed[i] {
            continue;
        }
        let v = match node {
            Node::Const(c) => Value::Const(c.clone()),
            Node::Var(x) => Value::Operand(Operand::Var(*x)),
            Node::Pow(base, e) => {
                let mut rhs = Rhs::product(1, Vec::new());
                push_factor(&mut rhs, val(&vals, *base), *e);
                b.emit(rhs)
            }
            Node::Mul(cs) => {
                let mut rhs = Rhs::product(1, Vec::new());
                for &c in cs {
                    match (inline, tree.node(c)) {
                        (true, Node::Pow(base, e)) => push_factor(&mut rhs, val(&vals, *base), *e),
                        _ => push_factor(&mut rhs, val(&vals, c), 1),
                    }
                }
                b.emit(rhs)
            }
            Node::Add(cs) => {
                let mut rhs = Rhs::sum(0, Vec::new());
                for &c in cs {
                    match tree.node(c) {
                        Node::Mul(ms) if inline && has_const(tree, ms) => {
                            let mut coeff = BigInt::one();
                            let mut prod = Rhs::product(1, Vec::new());
                            for &m in ms {
                                match tree.node(m) {
                                    Node::Const(k) => coeff *= k,
                                    Node::Pow(base, e) => push_factor(&mut prod, val(&vals, *base), *e),
                                    _ => push_factor(&mut prod, val(&vals, m), 1),
                                }
                            }
                            let inner = b.emit(prod);
                            push_term(&mut rhs, coeff, inner);
                        }
                        _ => push_term(&mut rhs, BigInt::one(), val(&vals, c)),
                    }
                }
                b.emit(rhs)
            }
        };
        vals[i] = Some(v);
    }
    let n = tree.roots().len();
    let outputs: Vec<Output> =
        tree.roots().iter().enumerate().map(|(i, &r)| Output::new(output_name(i, n), val(&vals, r))).collect();
    let mut prog = b.finish();
    prog.outputs = outputs;
    prog
}

/// `c * x` with a single non-constant factor: the constant becomes the term
/// coefficient. Longer products keep their constant so that `c * x` stays
/// visible to the greedy pass.
fn has_const(tree: &ExprTree, cs: &[NodeId]) -> bool {
    let consts = cs.iter().filter(|&&c| matches!(tree.node(c), Node::Const(_))).count();
    consts > 0 && cs.len() - consts == 1
}

/// Nodes whose value is read by some instruction. With inlining, products
/// with a constant inside sums and powers inside products are absorbed by
/// their parent.
fn needed_nodes(tree: &ExprTree, inline: bool) -> Vec<bool> {
    let nodes = tree.nodes();
    let mut needed = vec![false; nodes.len()];
    for &r in tree.roots() {
        needed[r as usize] = true;
    }
    for i in (0..nodes.len()).rev() {
        if !needed[i] {
            continue;
        }
        match &nodes[i] {
            Node::Pow(b, _) => needed[*b as usize] = true,
            Node::Mul(cs) => {
                for &c in cs {
                    match (inline, tree.node(c)) {
                        (true, Node::Pow(b, _)) => needed[*b as usize] = true,
                        _ => needed[c as usize] = true,
                    }
                }
            }
            Node::Add(cs) => {
                for &c in cs {
                    match tree.node(c) {
                        Node::Mul(ms) if inline && has_const(tree, ms) => {
                            for &m in ms {
                                match tree.node(m) {
                                    Node::Pow(b, _) => needed[*b as usize] = true,
                                    _ => needed[m as usize] = true,
                                }
                            }
                        }
                        _ => needed[c as usize] = true,
                    }
                }
            }
            _ => {}
        }
    }
    needed
}

pub(crate) fn push_factor(rhs: &mut Rhs, v: Value, exp: u32) {
    let Rhs::Product { coeff, factors } = rhs else { unreachable!("product expected") };
    match v {
        Value::Const(k) => *coeff *= num_traits::pow(k, exp as usize),
        Value::Operand(o) => factors.push(Factor::new(o, exp)),
    }
}

pub(crate) fn push_term(rhs: &mut Rhs, c: BigInt, v: Value) {
    let Rhs::Sum { constant, terms } = rhs else { unreachable!("sum expected") };
    if c.is_zero() {
        return;
    }
    match v {
        Value::Const(k) => *constant += c * k,
        Value::Operand(o) => terms.push(Term { coeff: c, operand: o }),
    }
}

/// Collapses sums directly inside sums and products directly inside
/// products. Shared children are copied into each parent.
pub fn merge_operators(tree: &ExprTree) -> ExprTree {
    let mut out = ExprTree::new();
    let mut map: Vec<NodeId> = Vec::with_capacity(tree.len());
    for node in tree.nodes() {
        let new = match node {
            Node::Const(_) | Node::Var(_) => node.clone(),
            Node::Pow(b, e) => Node::Pow(map[*b as usize], *e),
            Node::Add(cs) | Node::Mul(cs) => {
                let is_add = matches!(node, Node::Add(_));
                let mut merged = Vec::with_capacity(cs.len());
                for &c in cs {
                    let m = map[c as usize];
                    match (is_add, out.node(m)) {
                        (true, Node::Add(gs)) | (false, Node::Mul(gs)) => merged.extend_from_slice(gs),
                        _ => merged.push(m),
                    }
                }
                if is_add {
                    Node::Add(merged)
                } else {
                    Node::Mul(merged)
                }
            }
        };
        map.push(out.push(new));
    }
    for &r in tree.roots() {
        out.add_root(map[r as usize]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::CountOps;
    use crate::eval::{equivalent, MERSENNE_31};
    use crate::horner::{apply_scheme, occurrence_order, Direction, HornerOrder};
    use crate::poly::{Polynomial, Symbols};

    fn nested_tree() -> (Symbols, Polynomial, ExprTree) {
        let syms = Symbols::new(["x", "y", "z"]).unwrap();
        let (x, y, z) = (Polynomial::var(0), Polynomial::var(1), Polynomial::var(2));
        // y - 3x + 5xz + 2x^2 yz - 3x^2 y^2 z + 5 x^2 y^2 z^2
        let p = y
            .sub(&x.scale(&3.into()))
            .add(&x.mul(&z).scale(&5.into()))
            .add(&x.pow(2).mul(&y).mul(&z).scale(&2.into()))
            .sub(&x.pow(2).mul(&y.pow(2)).mul(&z).scale(&3.into()))
            .add(&x.pow(2).mul(&y.pow(2)).mul(&z.pow(2)).scale(&5.into()));
        let t = apply_scheme(&p, &HornerOrder::new(vec![0, 1, 2])).unwrap();
        (syms, p, t)
    }

    #[test]
    fn shared_linear_factor() {
        let (_, p, t) = nested_tree();
        assert_eq!(t.count_ops().to_string(), "0P 8M 5A : 13");
        let prog = cse(&t);
        assert_eq!(prog.count_ops().to_string(), "0P 7M 4A : 11");
        assert!(equivalent(&p, &prog, 20, MERSENNE_31));
        assert_eq!(prog.instructions.len() as u64, 11);
    }

    #[test]
    fn no_duplicates_keeps_count() {
        let syms = Symbols::new(["x", "y"]).unwrap();
        let p = Polynomial::var(0).mul(&Polynomial::var(1)).add(&Polynomial::constant(3));
        let t = apply_scheme(&p, &occurrence_order(&p, Direction::Forward).unwrap()).unwrap();
        let prog = cse(&t);
        assert_eq!(prog.count_ops(), t.count_ops());
        assert_eq!(syms.len(), 2);
    }

    #[test]
    fn idempotent_on_own_output() {
        let (_, _, t) = nested_tree();
        let mut once = cse(&t);
        once.tidy().unwrap();
        let mut twice = once.clone();
        twice.tidy().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn left_grouping_exposes_shared_sum() {
        // w^2 (y + z) + w (x + (y + z)) versus w^2 (y + z) + w ((x + y) + z)
        let (w, x, y, z) = (0, 1, 2, 3);
        let build = |left: bool| {
            let mut t = ExprTree::new();
            let (w, x, y, z) = (t.var(w), t.var(x), t.var(y), t.var(z));
            let w2 = t.pow(w, 2);
            let yz = t.add(y, z);
            let a = t.mul(w2, yz);
            let inner = if left {
                t.add(x, yz)
            } else {
                let xy = t.add(x, y);
                t.add(xy, z)
            };
            let b = t.mul(w, inner);
            let r = t.add(a, b);
            t.add_root(r);
            t
        };
        let left = cse(&build(true));
        let right = cse(&build(false));
        assert!(left.count_ops().total < right.count_ops().total);
        assert!(equivalent(&left, &right, 20, MERSENNE_31));
    }

    #[test]
    fn merges_nested_sums() {
        // w^2 (y + z) + w ((x + y) + z)
        let mut t = ExprTree::new();
        let (w, x, y, z) = (t.var(0), t.var(1), t.var(2), t.var(3));
        let w2 = t.pow(w, 2);
        let yz = t.add(y, z);
        let a = t.mul(w2, yz);
        let xy = t.add(x, y);
        let xyz = t.add(xy, z);
        let b = t.mul(w, xyz);
        let r = t.add(a, b);
        t.add_root(r);
        let m = merge_operators(&t);
        let root = m.node(m.root()).clone();
        let Node::Add(cs) = root else { panic!("sum at the root") };
        assert_eq!(cs.len(), 2);
        let Node::Mul(ws) = m.node(cs[1]) else { panic!("product") };
        assert_eq!(m.node(ws[1]), &Node::Add(vec![x, y, z]));
        assert!(equivalent(&t, &m, 20, MERSENNE_31));
        assert_eq!(merge_operators(&m).nodes().len(), m.nodes().len());
    }

    #[test]
    fn lowering_absorbs_coefficients_and_powers() {
        // 3 x^2 y + 5
        let mut t = ExprTree::new();
        let (x, y) = (t.var(0), t.var(1));
        let x2 = t.pow(x, 2);
        let c = t.constant(3);
        let m = t.push(Node::Mul(vec![c, x2, y]));
        let five = t.constant(5);
        let r = t.push(Node::Add(vec![m, five]));
        t.add_root(r);
        let prog = lower_tree(&t, true);
        assert_eq!(prog.instructions.len(), 2);
        assert_eq!(prog.count_ops(), t.count_ops());
    }
}
