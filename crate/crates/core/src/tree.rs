//! Operator trees produced by Horner schemes.
//!
//! Nodes live in an arena and children always have smaller ids than their
//! parents, so the structure is acyclic by construction and id order is a
//! topological order. A tree may have several roots (one per output).

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::poly::{Symbols, VarId};

pub type NodeId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(BigInt),
    Var(VarId),
    /// `base ^ exp` with `exp >= 2`.
    Pow(NodeId, u32),
    Add(Vec<NodeId>),
    Mul(Vec<NodeId>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExprTree {
    nodes: Vec<Node>,
    roots: Vec<NodeId>,
}

impl ExprTree {
    pub fn new() -> Self {
        ExprTree::default()
    }

    pub fn push(&mut self, node: Node) -> NodeId {
        match &node {
            Node::Pow(b, e) => {
                debug_assert!(*e >= 2);
                debug_assert!((*b as usize) < self.nodes.len());
            }
            Node::Add(cs) | Node::Mul(cs) => {
                debug_assert!(cs.iter().all(|&c| (c as usize) < self.nodes.len()));
            }
            _ => {}
        }
        self.nodes.push(node);
        (self.nodes.len() - 1) as NodeId
    }

    pub fn constant(&mut self, c: impl Into<BigInt>) -> NodeId {
        self.push(Node::Const(c.into()))
    }

    pub fn var(&mut self, v: VarId) -> NodeId {
        self.push(Node::Var(v))
    }

    pub fn pow(&mut self, base: NodeId, exp: u32) -> NodeId {
        match exp {
            1 => base,
            _ => self.push(Node::Pow(base, exp)),
        }
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Add(vec![a, b]))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Mul(vec![a, b]))
    }

    pub fn add_root(&mut self, root: NodeId) {
        self.roots.push(root);
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn root(&self) -> NodeId {
        self.roots[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `true` if every operator node has exactly two children.
    pub fn is_binary(&self) -> bool {
        self.nodes.iter().all(|n| match n {
            Node::Add(c) | Node::Mul(c) => c.len() == 2,
            _ => true,
        })
    }

    /// Marks nodes reachable from the roots.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = self.roots.clone();
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id as usize], true) {
                continue;
            }
            match &self.nodes[id as usize] {
                Node::Pow(b, _) => stack.push(*b),
                Node::Add(cs) | Node::Mul(cs) => stack.extend(cs.iter().copied()),
                _ => {}
            }
        }
        seen
    }

    /// Number of references to each node from other reachable nodes and roots.
    pub fn parent_counts(&self) -> Vec<u32> {
        let live = self.reachable();
        let mut counts = vec![0u32; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if !live[i] {
                continue;
            }
            match n {
                Node::Pow(b, _) => counts[*b as usize] += 1,
                Node::Add(cs) | Node::Mul(cs) => cs.iter().for_each(|&c| counts[c as usize] += 1),
                _ => {}
            }
        }
        for &r in &self.roots {
            counts[r as usize] += 1;
        }
        counts
    }

    pub fn display<'a>(&'a self, root: NodeId, symbols: &'a Symbols) -> TreeDisplay<'a> {
        TreeDisplay { tree: self, root, symbols }
    }
}

/// Infix rendering of one root, e.g. `y+x*(-3+5*z+...)`.
pub struct TreeDisplay<'a> {
    tree: &'a ExprTree,
    root: NodeId,
    symbols: &'a Symbols,
}

impl TreeDisplay<'_> {
    /// `true` when the rendering of `id` starts with a minus sign.
    fn leads_negative(&self, id: NodeId) -> bool {
        match self.tree.node(id) {
            Node::Const(c) => c.is_negative(),
            Node::Mul(cs) => cs.first().is_some_and(|&c| self.leads_negative(c)),
            _ => false,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, id: NodeId, parent_prec: u8) -> fmt::Result {
        match self.tree.node(id) {
            Node::Const(c) => {
                if c.is_negative() && parent_prec > 1 {
                    write!(f, "({})", c)
                } else {
                    write!(f, "{}", c)
                }
            }
            Node::Var(v) => write!(f, "{}", self.symbols.name(*v)),
            Node::Pow(b, e) => {
                self.write(f, *b, 3)?;
                write!(f, "^{}", e)
            }
            Node::Add(cs) => {
                if parent_prec > 1 {
                    write!(f, "(")?;
                }
                for (i, &c) in cs.iter().enumerate() {
                    if i > 0 && !self.leads_negative(c) {
                        write!(f, "+")?;
                    }
                    self.write(f, c, 1)?;
                }
                if parent_prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Node::Mul(cs) => {
                let wrap = parent_prec > 2 || (parent_prec == 2 && self.leads_negative(id));
                if wrap {
                    write!(f, "(")?;
                }
                let mut rest: &[NodeId] = cs;
                if let Some(&first) = cs.first() {
                    if let Node::Const(c) = self.tree.node(first) {
                        if cs.len() > 1 {
                            if c.is_negative() && c.abs().is_one() {
                                write!(f, "-")?;
                            } else {
                                write!(f, "{}*", c)?;
                            }
                            rest = &cs[1..];
                        }
                    }
                }
                for (i, &c) in rest.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    self.write(f, c, 2)?;
                }
                if wrap {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for TreeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.root, 0)
    }
}
