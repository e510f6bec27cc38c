//! Multivariate Horner schemes.
//!
//! A scheme is fixed by a variable order. The first variable `v` splits the
//! polynomial as `q0 + v^d1 (q1 + v^d2 (q2 + ...))` where the `qi` do not
//! contain `v`; each `qi` is then treated with the rest of the order. Before
//! a sum is split, the positive integer content of its coefficients is pulled
//! out, so `6x + 6y` becomes `6 (x + y)`.
//!
//! The recursion writes into a [`HornerSink`]. [`apply_scheme`] builds an
//! [`ExprTree`]; [`CseCounter`] hash-conses nodes on the fly and yields the
//! cost after common subexpression elimination without materializing
//! anything, which is what tree search playouts need.

use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rustc_hash::FxHashMap;

use crate::count::{CostModel, OpStats};
use crate::error::{Error, Result};
use crate::poly::{Polynomial, Symbols, VarId};
use crate::tree::{ExprTree, Node, NodeId};

/// How an order is built up by a search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Direction {
    /// Outermost variable chosen first.
    Forward,
    /// Innermost variable chosen first.
    Backward,
    /// Both of the above, separately.
    #[value(name = "forwardorbackward")]
    ForwardOrBackward,
    /// Both ends filled in one search.
    #[value(name = "forwardandbackward")]
    ForwardAndBackward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::ForwardOrBackward => "forwardorbackward",
            Direction::ForwardAndBackward => "forwardandbackward",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Construction {
    FrontOnly,
    BackOnly,
    TwoSided,
}

/// A variable order, outermost variable first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HornerOrder {
    pub sequence: Vec<VarId>,
    pub construction: Construction,
}

impl HornerOrder {
    pub fn new(sequence: Vec<VarId>) -> Self {
        HornerOrder { sequence, construction: Construction::FrontOnly }
    }

    pub fn reversed(&self) -> Self {
        let construction = match self.construction {
            Construction::FrontOnly => Construction::BackOnly,
            Construction::BackOnly => Construction::FrontOnly,
            Construction::TwoSided => Construction::TwoSided,
        };
        HornerOrder { sequence: self.sequence.iter().rev().copied().collect(), construction }
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> OrderDisplay<'a> {
        OrderDisplay { order: self, symbols }
    }
}

/// Comma separated symbol names.
pub struct OrderDisplay<'a> {
    order: &'a HornerOrder,
    symbols: &'a Symbols,
}

impl fmt::Display for OrderDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &v) in self.order.sequence.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(self.symbols.name(v))?;
        }
        Ok(())
    }
}

/// Occurring variables by number of terms containing them, most frequent
/// first; ties keep declaration order. `Backward` reverses the result.
pub fn occurrence_order(p: &Polynomial, direction: Direction) -> Result<HornerOrder> {
    occurrence_order_all(std::slice::from_ref(p), direction)
}

/// [`occurrence_order`] with counts summed over several polynomials.
pub fn occurrence_order_all(polys: &[Polynomial], direction: Direction) -> Result<HornerOrder> {
    let bound = polys.iter().map(|p| p.var_bound()).max().unwrap_or(0);
    let mut counts = vec![0usize; bound];
    for p in polys {
        for (v, c) in p.occurrence_counts(bound).into_iter().enumerate() {
            counts[v] += c;
        }
    }
    let mut vars: Vec<VarId> = (0..bound as VarId).filter(|&v| counts[v as usize] > 0).collect();
    vars.sort_by_key(|&v| std::cmp::Reverse(counts[v as usize]));
    let forward = HornerOrder::new(vars);
    match direction {
        Direction::Forward => Ok(forward),
        Direction::Backward => Ok(forward.reversed()),
        other => Err(Error::InvalidSetting(format!(
            "occurrence order needs forward or backward, got {}",
            other
        ))),
    }
}

/// The orders tried for a direction: one for `Forward` or `Backward`, the
/// forward and reverse orders otherwise.
pub fn occurrence_orders(polys: &[Polynomial], direction: Direction) -> Vec<HornerOrder> {
    let forward = occurrence_order_all(polys, Direction::Forward).expect("forward is valid");
    match direction {
        Direction::Forward => vec![forward],
        Direction::Backward => vec![forward.reversed()],
        _ => {
            let backward = forward.reversed();
            if backward.sequence == forward.sequence {
                vec![forward]
            } else {
                vec![forward, backward]
            }
        }
    }
}

/// An order given by symbol names. Declared symbols that do not occur in
/// `polys` are dropped; every occurring variable must be listed.
pub fn fixed_scheme<S: AsRef<str>>(
    names: &[S],
    symbols: &Symbols,
    polys: &[Polynomial],
) -> Result<HornerOrder> {
    let mut seen = vec![false; symbols.len()];
    let mut sequence = Vec::with_capacity(names.len());
    for name in names {
        let name = name.as_ref();
        let v = symbols.id(name).ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        if std::mem::replace(&mut seen[v as usize], true) {
            return Err(Error::DuplicateSymbol(name.to_string()));
        }
        sequence.push(v);
    }
    let mut occurring = vec![false; symbols.len()];
    for p in polys {
        for v in p.variables() {
            if !seen[v as usize] {
                return Err(Error::OrderMissingVariable(v));
            }
            occurring[v as usize] = true;
        }
    }
    sequence.retain(|&v| occurring[v as usize]);
    Ok(HornerOrder::new(sequence))
}

/// Integer coefficient arithmetic needed by the recursion. `i64` is used
/// when every coefficient fits, [`BigInt`] otherwise.
pub trait Coeff: Clone + Eq + Hash + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn abs(&self) -> Self;
    fn is_one(&self) -> bool;
    fn is_unit(&self) -> bool;
    /// Non-negative greatest common divisor.
    fn gcd_with(&self, other: &Self) -> Self;
    fn div_exact(&self, d: &Self) -> Self;
    fn mul_by(&self, other: &Self) -> Self;
    fn to_bigint(&self) -> BigInt;
}

impl Coeff for i64 {
    fn zero() -> Self {
        0
    }

    fn one() -> Self {
        1
    }

    fn abs(&self) -> Self {
        i64::abs(*self)
    }

    fn is_one(&self) -> bool {
        *self == 1
    }

    fn is_unit(&self) -> bool {
        i64::abs(*self) == 1
    }

    fn gcd_with(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }

    fn div_exact(&self, d: &Self) -> Self {
        self / d
    }

    fn mul_by(&self, other: &Self) -> Self {
        self * other
    }

    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Coeff for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn is_one(&self) -> bool {
        One::is_one(self)
    }

    fn is_unit(&self) -> bool {
        One::is_one(&Signed::abs(self))
    }

    fn gcd_with(&self, other: &Self) -> Self {
        Integer::gcd(self, other)
    }

    fn div_exact(&self, d: &Self) -> Self {
        self / d
    }

    fn mul_by(&self, other: &Self) -> Self {
        self * other
    }

    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

/// Dense exponent table of one or more polynomials.
#[derive(Clone, Debug)]
pub struct TermTable<C> {
    num_vars: usize,
    coeffs: Vec<C>,
    exps: Vec<u32>,
    /// Term ranges of the individual polynomials.
    ranges: Vec<std::ops::Range<usize>>,
}

impl<C: Coeff> TermTable<C> {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    fn exp(&self, t: u32, v: VarId) -> u32 {
        self.exps[t as usize * self.num_vars + v as usize]
    }

    /// Variables with a nonzero exponent somewhere.
    pub fn variables(&self) -> Vec<VarId> {
        (0..self.num_vars as VarId)
            .filter(|&v| (0..self.coeffs.len() as u32).any(|t| self.exp(t, v) > 0))
            .collect()
    }

    fn check_order(&self, order: &[VarId]) -> Result<()> {
        let mut listed = vec![false; self.num_vars];
        for &v in order {
            if (v as usize) < self.num_vars {
                listed[v as usize] = true;
            }
        }
        for v in self.variables() {
            if !listed[v as usize] {
                return Err(Error::OrderMissingVariable(v));
            }
        }
        Ok(())
    }
}

fn fill_table<C>(polys: &[Polynomial], conv: impl Fn(&BigInt) -> C) -> TermTable<C> {
    let num_vars = polys.iter().map(|p| p.var_bound()).max().unwrap_or(0);
    let total: usize = polys.iter().map(|p| p.num_terms()).sum();
    let mut coeffs = Vec::with_capacity(total);
    let mut exps = vec![0u32; total * num_vars];
    let mut ranges = Vec::with_capacity(polys.len());
    for p in polys {
        let start = coeffs.len();
        for (c, m) in p.terms() {
            let row = coeffs.len() * num_vars;
            for &(v, e) in m.factors() {
                exps[row + v as usize] = e;
            }
            coeffs.push(conv(c));
        }
        ranges.push(start..coeffs.len());
    }
    TermTable { num_vars, coeffs, exps, ranges }
}

/// Either table kind, picked by coefficient size.
#[derive(Clone, Debug)]
pub enum AnyTable {
    Small(TermTable<i64>),
    Big(TermTable<BigInt>),
}

impl AnyTable {
    /// Uses `i64` coefficients when all of them fit with room for products
    /// of contents.
    pub fn new(polys: &[Polynomial]) -> AnyTable {
        let fits = polys
            .iter()
            .flat_map(|p| p.terms())
            .all(|(c, _)| c.to_i64().is_some_and(|x| x.unsigned_abs() < (1 << 62)));
        if fits {
            AnyTable::Small(fill_table(polys, |c| c.to_i64().expect("checked")))
        } else {
            AnyTable::Big(fill_table(polys, BigInt::clone))
        }
    }

    pub fn num_vars(&self) -> usize {
        match self {
            AnyTable::Small(t) => t.num_vars,
            AnyTable::Big(t) => t.num_vars,
        }
    }

    pub fn num_terms(&self) -> usize {
        match self {
            AnyTable::Small(t) => t.num_terms(),
            AnyTable::Big(t) => t.num_terms(),
        }
    }

    pub fn variables(&self) -> Vec<VarId> {
        match self {
            AnyTable::Small(t) => t.variables(),
            AnyTable::Big(t) => t.variables(),
        }
    }

    /// Operation count of the Horner scheme for `order` after common
    /// subexpression elimination.
    pub fn cse_cost(&self, order: &[VarId], model: &CostModel) -> Result<OpStats> {
        match self {
            AnyTable::Small(t) => cse_cost_table(t, order, model),
            AnyTable::Big(t) => cse_cost_table(t, order, model),
        }
    }
}

/// Receiver of the nodes produced by the Horner recursion.
pub trait HornerSink<C> {
    type Id: Copy;

    fn constant(&mut self, c: &C) -> Self::Id;
    fn var(&mut self, v: VarId) -> Self::Id;
    /// `base ^ exp` with `exp >= 2`.
    fn pow(&mut self, base: Self::Id, exp: u32) -> Self::Id;
    fn add(&mut self, a: Self::Id, b: Self::Id) -> Self::Id;
    fn mul(&mut self, a: Self::Id, b: Self::Id) -> Self::Id;
    /// `c * x` with `c != 1`.
    fn scale(&mut self, c: &C, x: Self::Id) -> Self::Id;
}

enum Built<C, I> {
    Const(C),
    Node(I),
}

struct Recursion<'a, C, S> {
    table: &'a TermTable<C>,
    order: &'a [VarId],
    sink: &'a mut S,
    /// Shared stacks; each recursion level truncates back to where it began.
    groups: Vec<(u32, usize, usize)>,
    counts: Vec<usize>,
    scratch: Vec<u32>,
}

impl<C: Coeff, S: HornerSink<C>> Recursion<'_, C, S> {
    fn coeff(&self, t: u32, div: &C) -> C {
        let c = &self.table.coeffs[t as usize];
        if div.is_one() {
            c.clone()
        } else {
            c.div_exact(div)
        }
    }

    fn finish(&mut self, b: Built<C, S::Id>) -> S::Id {
        match b {
            Built::Const(c) => self.sink.constant(&c),
            Built::Node(n) => n,
        }
    }

    fn var_pow(&mut self, v: VarId, d: u32) -> S::Id {
        let x = self.sink.var(v);
        if d == 1 {
            x
        } else {
            self.sink.pow(x, d)
        }
    }

    /// `v^d * inner`, constants kept on the left.
    fn times_pow(&mut self, v: VarId, d: u32, inner: Built<C, S::Id>) -> S::Id {
        let p = self.var_pow(v, d);
        match inner {
            Built::Const(c) if c.is_one() => p,
            Built::Const(c) => self.sink.scale(&c, p),
            Built::Node(n) => self.sink.mul(p, n),
        }
    }

    fn build(&mut self, slice: &mut [u32], k: usize, div: &C) -> Built<C, S::Id> {
        if slice.len() >= 2 {
            let mut g = self.coeff(slice[0], div);
            for &t in &slice[1..] {
                if g.is_unit() {
                    break;
                }
                g = g.gcd_with(&self.coeff(t, div));
            }
            let g = g.abs();
            if !g.is_unit() {
                let inner = self.split(slice, k, &div.mul_by(&g));
                let inner = self.finish(inner);
                return Built::Node(self.sink.scale(&g, inner));
            }
        }
        self.split(slice, k, div)
    }

    fn split(&mut self, slice: &mut [u32], mut k: usize, div: &C) -> Built<C, S::Id> {
        let table = self.table;
        if slice.len() == 1 {
            return self.single(slice[0], k, div);
        }
        let mut max_e = 0;
        while k < self.order.len() {
            let v = self.order[k];
            max_e = slice.iter().map(|&t| table.exp(t, v)).max().unwrap_or(0);
            if max_e > 0 {
                break;
            }
            k += 1;
        }
        debug_assert!(k < self.order.len(), "distinct monomials");
        let v = self.order[k];
        let base = self.groups.len();
        if slice.len() <= 24 || max_e as usize > slice.len() {
            slice.sort_unstable_by_key(|&t| table.exp(t, v));
            let mut start = 0;
            for i in 1..=slice.len() {
                if i == slice.len() || table.exp(slice[i], v) != table.exp(slice[start], v) {
                    self.groups.push((table.exp(slice[start], v), start, i));
                    start = i;
                }
            }
        } else {
            // counting sort; offsets live above `base` of the shared stack
            let width = max_e as usize + 1;
            let cbase = self.counts.len();
            self.counts.resize(cbase + width, 0);
            for &t in slice.iter() {
                self.counts[cbase + table.exp(t, v) as usize] += 1;
            }
            let mut at = 0;
            for e in 0..width {
                let c = self.counts[cbase + e];
                self.counts[cbase + e] = at;
                if c > 0 {
                    self.groups.push((e as u32, at, at + c));
                }
                at += c;
            }
            let sbase = self.scratch.len();
            self.scratch.resize(sbase + slice.len(), 0);
            for &t in slice.iter() {
                let slot = &mut self.counts[cbase + table.exp(t, v) as usize];
                self.scratch[sbase + *slot] = t;
                *slot += 1;
            }
            slice.copy_from_slice(&self.scratch[sbase..]);
            self.scratch.truncate(sbase);
            self.counts.truncate(cbase);
        }
        let top = self.groups.len();
        let (last_e, s, e) = self.groups[top - 1];
        let mut acc = self.build(&mut slice[s..e], k + 1, div);
        let mut acc_e = last_e;
        for gi in (base..top - 1).rev() {
            let (ge, s, e) = self.groups[gi];
            let shifted = self.times_pow(v, acc_e - ge, acc);
            let low = self.build(&mut slice[s..e], k + 1, div);
            let low = self.finish(low);
            acc = Built::Node(self.sink.add(low, shifted));
            acc_e = ge;
        }
        self.groups.truncate(base);
        if acc_e > 0 {
            acc = Built::Node(self.times_pow(v, acc_e, acc));
        }
        acc
    }

    /// One term: nested powers in order with the coefficient innermost.
    fn single(&mut self, t: u32, k: usize, div: &C) -> Built<C, S::Id> {
        let base = self.groups.len();
        for &v in &self.order[k..] {
            let e = self.table.exp(t, v);
            if e > 0 {
                self.groups.push((v, e as usize, 0));
            }
        }
        let mut acc = Built::Const(self.coeff(t, div));
        for gi in (base..self.groups.len()).rev() {
            let (v, e, _) = self.groups[gi];
            acc = Built::Node(self.times_pow(v, e as u32, acc));
        }
        self.groups.truncate(base);
        acc
    }
}

/// Runs the recursion for every polynomial of the table and returns the
/// root of each.
pub fn build_scheme<C: Coeff, S: HornerSink<C>>(
    table: &TermTable<C>,
    order: &[VarId],
    sink: &mut S,
) -> Result<Vec<S::Id>> {
    let mut indices = Vec::new();
    build_scheme_with(table, order, sink, &mut indices)
}

fn build_scheme_with<C: Coeff, S: HornerSink<C>>(
    table: &TermTable<C>,
    order: &[VarId],
    sink: &mut S,
    indices: &mut Vec<u32>,
) -> Result<Vec<S::Id>> {
    table.check_order(order)?;
    indices.clear();
    indices.extend(0..table.coeffs.len() as u32);
    let mut rec = Recursion { table, order, sink, groups: Vec::new(), counts: Vec::new(), scratch: Vec::new() };
    let mut roots = Vec::with_capacity(table.ranges.len());
    let zero = C::zero();
    for r in table.ranges.clone() {
        let id = if r.is_empty() {
            rec.sink.constant(&zero)
        } else {
            let b = rec.build(&mut indices[r], 0, &C::one());
            rec.finish(b)
        };
        roots.push(id);
    }
    Ok(roots)
}

/// Tree sink: every call creates a node.
impl HornerSink<BigInt> for ExprTree {
    type Id = NodeId;

    fn constant(&mut self, c: &BigInt) -> NodeId {
        self.push(Node::Const(c.clone()))
    }

    fn var(&mut self, v: VarId) -> NodeId {
        self.push(Node::Var(v))
    }

    fn pow(&mut self, base: NodeId, exp: u32) -> NodeId {
        self.push(Node::Pow(base, exp))
    }

    fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Add(vec![a, b]))
    }

    fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Mul(vec![a, b]))
    }

    fn scale(&mut self, c: &BigInt, x: NodeId) -> NodeId {
        let k = self.push(Node::Const(c.clone()));
        self.push(Node::Mul(vec![k, x]))
    }
}

/// Applies the scheme given by `order` to `p`.
pub fn apply_scheme(p: &Polynomial, order: &HornerOrder) -> Result<ExprTree> {
    apply_scheme_all(std::slice::from_ref(p), order)
}

/// One tree with a root per polynomial, all built with the same order.
pub fn apply_scheme_all(polys: &[Polynomial], order: &HornerOrder) -> Result<ExprTree> {
    let table = fill_table(polys, BigInt::clone);
    let mut tree = ExprTree::new();
    for root in build_scheme(&table, &order.sequence, &mut tree)? {
        tree.add_root(root);
    }
    Ok(tree)
}

/// Operand of a hash-consed node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ref {
    Var(VarId),
    Const(u32),
    Node(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Add(Ref, Ref),
    Mul(Ref, Ref),
    Pow(Ref, u32),
}

/// Sink that keeps one node per distinct subexpression and accumulates the
/// cost of the distinct nodes only.
#[derive(Clone, Debug)]
pub struct CseCounter<C> {
    consts: FxHashMap<C, u32>,
    const_values: Vec<C>,
    nodes: FxHashMap<Key, u32>,
    stats: OpStats,
    model: CostModel,
}

impl<C: Coeff> CseCounter<C> {
    pub fn new(model: CostModel) -> Self {
        CseCounter {
            consts: FxHashMap::default(),
            const_values: Vec::new(),
            nodes: FxHashMap::default(),
            stats: OpStats::default(),
            model,
        }
    }

    /// Forgets all nodes but keeps the allocations.
    pub fn clear(&mut self) {
        self.consts.clear();
        self.const_values.clear();
        self.nodes.clear();
        self.stats = OpStats::default();
    }

    pub fn stats(&self) -> OpStats {
        self.stats
    }

    /// Number of distinct operator nodes.
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn intern(&mut self, key: Key) -> Ref {
        let next = self.nodes.len() as u32;
        let id = *self.nodes.entry(key).or_insert(next);
        if id == next {
            match key {
                Key::Add(..) => self.stats.count_add(1),
                Key::Pow(_, e) => self.stats.count_power(e, &self.model),
                Key::Mul(Ref::Const(c), _) => {
                    if !self.const_values[c as usize].is_unit() {
                        self.stats.count_mul(1);
                    }
                }
                Key::Mul(..) => self.stats.count_mul(1),
            }
        }
        Ref::Node(id)
    }
}

fn ordered(a: Ref, b: Ref) -> (Ref, Ref) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<C: Coeff> HornerSink<C> for CseCounter<C> {
    type Id = Ref;

    fn constant(&mut self, c: &C) -> Ref {
        if let Some(&id) = self.consts.get(c) {
            return Ref::Const(id);
        }
        let id = self.const_values.len() as u32;
        self.consts.insert(c.clone(), id);
        self.const_values.push(c.clone());
        Ref::Const(id)
    }

    fn var(&mut self, v: VarId) -> Ref {
        Ref::Var(v)
    }

    fn pow(&mut self, base: Ref, exp: u32) -> Ref {
        self.intern(Key::Pow(base, exp))
    }

    fn add(&mut self, a: Ref, b: Ref) -> Ref {
        let (a, b) = ordered(a, b);
        self.intern(Key::Add(a, b))
    }

    fn mul(&mut self, a: Ref, b: Ref) -> Ref {
        if a == b {
            return self.pow(a, 2);
        }
        // Const sorts before Node and after Var; keep constants first
        let (a, b) = match (a, b) {
            (Ref::Const(_), _) => (a, b),
            (_, Ref::Const(_)) => (b, a),
            _ => ordered(a, b),
        };
        self.intern(Key::Mul(a, b))
    }

    fn scale(&mut self, c: &C, x: Ref) -> Ref {
        let k = self.constant(c);
        self.mul(k, x)
    }
}

fn cse_cost_table<C: Coeff>(table: &TermTable<C>, order: &[VarId], model: &CostModel) -> Result<OpStats> {
    let mut counter = CseCounter::new(*model);
    build_scheme(table, order, &mut counter)?;
    Ok(counter.stats())
}

/// Repeated scoring of orders for one input, reusing buffers between calls.
#[derive(Clone, Debug)]
pub struct SchemeScorer {
    inner: ScorerKind,
    indices: Vec<u32>,
}

#[derive(Clone, Debug)]
enum ScorerKind {
    Small(TermTable<i64>, CseCounter<i64>),
    Big(TermTable<BigInt>, CseCounter<BigInt>),
}

impl SchemeScorer {
    pub fn new(polys: &[Polynomial], model: CostModel) -> Self {
        let inner = match AnyTable::new(polys) {
            AnyTable::Small(t) => ScorerKind::Small(t, CseCounter::new(model)),
            AnyTable::Big(t) => ScorerKind::Big(t, CseCounter::new(model)),
        };
        SchemeScorer { inner, indices: Vec::new() }
    }

    /// Variables occurring in the input, in id order.
    pub fn variables(&self) -> Vec<VarId> {
        match &self.inner {
            ScorerKind::Small(t, _) => t.variables(),
            ScorerKind::Big(t, _) => t.variables(),
        }
    }

    /// Cost after common subexpression elimination of the scheme for `order`.
    pub fn score(&mut self, order: &[VarId]) -> Result<OpStats> {
        match &mut self.inner {
            ScorerKind::Small(t, c) => {
                c.clear();
                build_scheme_with(t, order, c, &mut self.indices)?;
                Ok(c.stats())
            }
            ScorerKind::Big(t, c) => {
                c.clear();
                build_scheme_with(t, order, c, &mut self.indices)?;
                Ok(c.stats())
            }
        }
    }
}

/// Cost of the Horner scheme for `order` after common subexpression
/// elimination, computed without building a tree.
pub fn scheme_cse_cost(polys: &[Polynomial], order: &HornerOrder) -> Result<OpStats> {
    AnyTable::new(polys).cse_cost(&order.sequence, &CostModel::default())
}
