//! Canonical sparse multivariate polynomials with exact integer coefficients.
//!
//! Terms are kept sorted in descending graded-lexicographic order of their
//! exponent vectors, with like terms merged and zero coefficients removed, so
//! two polynomials are equal exactly when they are structurally equal.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Dense index of a variable within one problem instance.
pub type VarId = u32;

/// A declared variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
}

/// Ordered table of declared variables. The declaration order doubles as the
/// tie-break order for every heuristic that ranks variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    names: Vec<String>,
    index: HashMap<String, VarId>,
}

impl Symbols {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut symbols = Symbols::default();
        for name in names {
            symbols.push(name)?;
        }
        Ok(symbols)
    }

    /// Declares a new variable and returns its id.
    pub fn push(&mut self, name: impl Into<String>) -> Result<VarId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateSymbol(name));
        }
        let id = self.names.len() as VarId;
        self.index.insert(name.clone(), id);
        self.names.push(name);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.names[id as usize]
    }

    pub fn id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn variables(&self) -> impl Iterator<Item = Variable> + '_ {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| Variable { id: i as VarId, name: n.clone() })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A power product: sorted `(variable, exponent)` pairs, exponents positive.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn var_pow(v: VarId, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    /// Builds a monomial from arbitrary pairs; repeated variables are merged
    /// and zero exponents dropped.
    pub fn from_pairs<I: IntoIterator<Item = (VarId, u32)>>(pairs: I) -> Self {
        let mut v: Vec<(VarId, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        v.sort_unstable_by_key(|&(var, _)| var);
        let mut out: Vec<(VarId, u32)> = Vec::with_capacity(v.len());
        for (var, e) in v {
            match out.last_mut() {
                Some(last) if last.0 == var => last.1 += e,
                _ => out.push((var, e)),
            }
        }
        Monomial(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&(_, e)| e as u64).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        match self.0.binary_search_by_key(&v, |&(var, _)| var) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn factors(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn num_factors(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for &(v, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < v {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == v {
                let d = other.0[j].1;
                if d > e {
                    return None;
                }
                if e > d {
                    out.push((v, e - d));
                }
                j += 1;
            } else {
                out.push((v, e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// The monomial with variable `v` removed, and the exponent it had.
    pub fn split_var(&self, v: VarId) -> (Monomial, u32) {
        match self.0.binary_search_by_key(&v, |&(var, _)| var) {
            Ok(i) => {
                let mut rest = self.0.clone();
                let (_, e) = rest.remove(i);
                (Monomial(rest), e)
            }
            Err(_) => (self.clone(), 0),
        }
    }
}

fn lex_cmp(a: &[(VarId, u32)], b: &[(VarId, u32)]) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some(&(va, ea)), Some(&(vb, eb))) => {
                if va == vb {
                    if ea != eb {
                        return ea.cmp(&eb);
                    }
                    i += 1;
                    j += 1;
                } else if va < vb {
                    return Ordering::Greater;
                } else {
                    return Ordering::Less;
                }
            }
        }
    }
}

impl Ord for Monomial {
    /// Graded lexicographic order on exponent vectors, variable 0 most significant.
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| lex_cmp(&self.0, &other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A sparse polynomial in canonical form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Polynomial {
    terms: Vec<(BigInt, Monomial)>,
}

/// Combines like terms, drops zeros and imposes the canonical term order.
pub fn normalize(terms: Vec<(BigInt, Monomial)>) -> Polynomial {
    let mut acc: HashMap<Monomial, BigInt> = HashMap::with_capacity(terms.len());
    for (c, m) in terms {
        if c.is_zero() {
            continue;
        }
        *acc.entry(m).or_insert_with(BigInt::zero) += c;
    }
    from_map(acc)
}

fn from_map(acc: HashMap<Monomial, BigInt>) -> Polynomial {
    let mut terms: Vec<(BigInt, Monomial)> = acc
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(m, c)| (c, m))
        .collect();
    terms.sort_unstable_by(|a, b| b.1.cmp(&a.1));
    Polynomial { terms }
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let c = c.into();
        if c.is_zero() {
            Polynomial::zero()
        } else {
            Polynomial { terms: vec![(c, Monomial::one())] }
        }
    }

    pub fn var(v: VarId) -> Self {
        Polynomial { terms: vec![(BigInt::one(), Monomial::var(v))] }
    }

    pub fn monomial(c: impl Into<BigInt>, m: Monomial) -> Self {
        let c = c.into();
        if c.is_zero() {
            Polynomial::zero()
        } else {
            Polynomial { terms: vec![(c, m)] }
        }
    }

    pub fn terms(&self) -> &[(BigInt, Monomial)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(BigInt, Monomial)> {
        self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value, if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.as_slice() {
            [] => Some(BigInt::zero()),
            [(c, m)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn total_degree(&self) -> u64 {
        self.terms.iter().map(|(_, m)| m.degree()).max().unwrap_or(0)
    }

    /// Variables that occur, ascending.
    pub fn variables(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .terms
            .iter()
            .flat_map(|(_, m)| m.factors().iter().map(|&(v, _)| v))
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Largest variable id plus one (0 for constants).
    pub fn var_bound(&self) -> usize {
        self.terms
            .iter()
            .filter_map(|(_, m)| m.factors().last().map(|&(v, _)| v as usize + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, v: VarId) -> u32 {
        self.terms.iter().map(|(_, m)| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial { terms: self.terms.iter().map(|(c, m)| (-c, m.clone())).collect() }
    }

    pub fn scale(&self, k: &BigInt) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero();
        }
        Polynomial { terms: self.terms.iter().map(|(c, m)| (c * k, m.clone())).collect() }
    }

    pub fn mul_monomial(&self, k: &BigInt, mono: &Monomial) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero();
        }
        // multiplying by a monomial preserves the term order
        Polynomial {
            terms: self.terms.iter().map(|(c, m)| (c * k, m.mul(mono))).collect(),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].1.cmp(&b[j].1) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &a[i].0 + &b[j].0;
                    if !c.is_zero() {
                        out.push((c, a[i].1.clone()));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Polynomial { terms: out }
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut acc: HashMap<Monomial, BigInt> =
            HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (ca, ma) in &self.terms {
            for (cb, mb) in &other.terms {
                *acc.entry(ma.mul(mb)).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
        from_map(acc)
    }

    pub fn pow(&self, mut e: u32) -> Polynomial {
        let mut result = Polynomial::constant(1);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Replaces variable `v` by `value` and re-expands.
    pub fn substitute(&self, v: VarId, value: &Polynomial) -> Polynomial {
        let max_e = self.degree_in(v) as usize;
        let mut powers = vec![Polynomial::constant(1)];
        for i in 1..=max_e {
            let next = powers[i - 1].mul(value);
            powers.push(next);
        }
        let mut acc: HashMap<Monomial, BigInt> = HashMap::new();
        for (c, m) in &self.terms {
            let (rest, e) = m.split_var(v);
            for (pc, pm) in powers[e as usize].terms() {
                *acc.entry(rest.mul(pm)).or_insert_with(BigInt::zero) += c * pc;
            }
        }
        from_map(acc)
    }

    /// Number of terms containing each variable, indexed by variable id.
    pub fn occurrence_counts(&self, num_vars: usize) -> Vec<usize> {
        let mut counts = vec![0usize; num_vars.max(self.var_bound())];
        for (_, m) in &self.terms {
            for &(v, _) in m.factors() {
                counts[v as usize] += 1;
            }
        }
        counts
    }

    /// Exact division; `None` when `divisor` does not divide `self`.
    pub fn div_exact(&self, divisor: &Polynomial) -> Option<Polynomial> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Polynomial::zero());
        }
        let (lc, lm) = divisor.terms[0].clone();
        if divisor.terms.len() == 1 {
            let mut terms = Vec::with_capacity(self.terms.len());
            for (c, m) in &self.terms {
                let q = m.div(&lm)?;
                if !(c % &lc).is_zero() {
                    return None;
                }
                terms.push((c / &lc, q));
            }
            return Some(Polynomial { terms });
        }
        // remainder kept in a map ordered by monomial; the leading term is the max
        let mut rem: std::collections::BTreeMap<Monomial, BigInt> =
            self.terms.iter().map(|(c, m)| (m.clone(), c.clone())).collect();
        let mut quotient = Vec::new();
        while let Some((m, c)) = rem.pop_last() {
            let qm = m.div(&lm)?;
            if !(&c % &lc).is_zero() {
                return None;
            }
            let qc = &c / &lc;
            for (dc, dm) in &divisor.terms[1..] {
                let key = dm.mul(&qm);
                let delta = -(dc * &qc);
                match rem.entry(key) {
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        *o.get_mut() += delta;
                        if o.get().is_zero() {
                            o.remove();
                        }
                    }
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(delta);
                    }
                }
            }
            quotient.push((qc, qm));
        }
        Some(Polynomial { terms: quotient })
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, symbols }
    }
}

/// Formats a polynomial with variable names, e.g. `2*x^2*y - 3*z + 1`.
pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    symbols: &'a Symbols,
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (i, (c, m)) in self.poly.terms().iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut first = true;
            if !mag.is_one() || m.is_one() {
                write!(f, "{}", mag)?;
                first = false;
            }
            for &(v, e) in m.factors() {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{}", self.symbols.name(v))?;
                if e > 1 {
                    write!(f, "^{}", e)?;
                }
            }
        }
        Ok(())
    }
}
