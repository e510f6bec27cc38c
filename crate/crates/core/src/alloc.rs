//! Instruction scheduling and reuse of temporaries.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::program::{Operand, Program, TempId, Value};

/// Span of a temporary in a single-assignment program, as instruction
/// indices. Temporaries read by outputs live until `instructions.len()`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiveRange {
    pub temp: TempId,
    pub first_def: usize,
    pub last_use: usize,
}

/// Orders instructions depth first from the outputs: an instruction comes
/// right after the instructions computing its operands, visited left to
/// right. Instructions no output depends on are dropped.
pub fn dfs_schedule(prog: &Program) -> Result<Program> {
    let index: HashMap<TempId, usize> =
        prog.instructions.iter().enumerate().map(|(i, ins)| (ins.target, i)).collect();
    if index.len() != prog.instructions.len() {
        return Err(Error::InvalidSetting("scheduling needs single-assignment code".into()));
    }
    // operand instructions, last first so that popping visits them in order
    let temp_deps = |i: usize| -> Result<Vec<usize>> {
        let mut out = Vec::new();
        prog.instructions[i].rhs.for_each_operand(|o| {
            if let Operand::Temp(t) = o {
                out.push(t);
            }
        });
        out.into_iter().rev().map(|t| index.get(&t).copied().ok_or(Error::UndefinedTemp(t))).collect()
    };
    // 0 = unvisited, 1 = on the stack, 2 = emitted
    let mut state = vec![0u8; prog.instructions.len()];
    let mut order = Vec::with_capacity(prog.instructions.len());
    for out in &prog.outputs {
        let Value::Operand(Operand::Temp(t)) = out.value else { continue };
        let &root = index.get(&t).ok_or(Error::UndefinedTemp(t))?;
        if state[root] != 0 {
            continue;
        }
        state[root] = 1;
        let mut stack = vec![(root, temp_deps(root)?)];
        while let Some((i, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(d) => match state[d] {
                    0 => {
                        state[d] = 1;
                        let ds = temp_deps(d)?;
                        stack.push((d, ds));
                    }
                    1 => return Err(Error::Cycle(prog.instructions[d].target)),
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
    Ok(Program {
        instructions: order.into_iter().map(|i| prog.instructions[i].clone()).collect(),
        outputs: prog.outputs.clone(),
    })
}

/// Live ranges of all temporaries of a single-assignment program, in
/// definition order.
pub fn live_ranges(prog: &Program) -> Vec<LiveRange> {
    let mut ranges: Vec<LiveRange> = Vec::with_capacity(prog.instructions.len());
    let mut pos: HashMap<TempId, usize> = HashMap::new();
    for (i, ins) in prog.instructions.iter().enumerate() {
        ins.rhs.for_each_operand(|o| {
            if let Operand::Temp(t) = o {
                if let Some(&k) = pos.get(&t) {
                    ranges[k].last_use = i;
                }
            }
        });
        pos.insert(ins.target, ranges.len());
        ranges.push(LiveRange { temp: ins.target, first_def: i, last_use: i });
    }
    let end = prog.instructions.len();
    for o in &prog.outputs {
        if let Value::Operand(Operand::Temp(t)) = o.value {
            if let Some(&k) = pos.get(&t) {
                ranges[k].last_use = end;
            }
        }
    }
    ranges
}

/// Largest number of temporaries needed at once when an operand read for the
/// last time can share storage with the result.
pub fn max_live(prog: &Program) -> usize {
    let ranges = live_ranges(prog);
    let n = prog.instructions.len();
    // live[i]: values defined before i and still read after i
    let mut delta = vec![0i64; n + 2];
    for r in &ranges {
        if r.last_use > r.first_def + 1 {
            delta[r.first_def + 1] += 1;
            delta[r.last_use] -= 1;
        }
    }
    let mut live = 0i64;
    let mut best = 0i64;
    for d in delta.iter().take(n) {
        live += d;
        best = best.max(live + 1);
    }
    best.max(0) as usize
}

/// Linear-scan renaming: every result takes the lowest-numbered slot that is
/// free at that point, and operands read for the last time are freed before
/// the result is placed. Slots are numbered from 1.
pub fn recycle(prog: &Program) -> Program {
    let ranges = live_ranges(prog);
    let last: HashMap<TempId, usize> = ranges.iter().map(|r| (r.temp, r.last_use)).collect();
    let mut slot_of: HashMap<TempId, TempId> = HashMap::new();
    let mut free: BinaryHeap<Reverse<TempId>> = BinaryHeap::new();
    let mut next_slot: TempId = 1;
    let mut out = Program { instructions: Vec::with_capacity(prog.instructions.len()), outputs: prog.outputs.clone() };
    for (i, ins) in prog.instructions.iter().enumerate() {
        let mut rhs = ins.rhs.clone();
        let mut dying = Vec::new();
        rhs.map_operands(|o| match o {
            Operand::Temp(t) => {
                let s = slot_of[&t];
                if last[&t] == i {
                    dying.push(s);
                }
                Operand::Temp(s)
            }
            v => v,
        });
        dying.sort_unstable();
        dying.dedup();
        free.extend(dying.into_iter().map(Reverse));
        let slot = match free.pop() {
            Some(Reverse(s)) => s,
            None => {
                next_slot += 1;
                next_slot - 1
            }
        };
        if last[&ins.target] == i {
            // never read: the slot is free again right away
            free.push(Reverse(slot));
        }
        slot_of.insert(ins.target, slot);
        out.instructions.push(crate::program::Instruction { target: slot, rhs });
    }
    for o in &mut out.outputs {
        if let Value::Operand(Operand::Temp(t)) = o.value {
            o.value = Value::Operand(Operand::Temp(slot_of[&t]));
        }
    }
    out
}

/// Checks that `recycled` reads, at every operand and output, the value the
/// single-assignment `original` means there. Both must list the same
/// instructions in the same order.
pub fn verify_allocation(original: &Program, recycled: &Program) -> bool {
    if original.instructions.len() != recycled.instructions.len() {
        return false;
    }
    let def_pos: HashMap<TempId, usize> =
        original.instructions.iter().enumerate().map(|(i, ins)| (ins.target, i)).collect();
    // slot -> instruction index of the value it currently holds
    let mut holds: HashMap<TempId, usize> = HashMap::new();
    for (i, (a, b)) in original.instructions.iter().zip(&recycled.instructions).enumerate() {
        let (xs, ys) = (a.rhs.operands(), b.rhs.operands());
        if xs.len() != ys.len() {
            return false;
        }
        for (x, y) in xs.into_iter().zip(ys) {
            match (x, y) {
                (Operand::Var(u), Operand::Var(v)) if u == v => {}
                (Operand::Temp(t), Operand::Temp(s)) => {
                    if def_pos.get(&t).is_none() || holds.get(&s) != def_pos.get(&t) {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        holds.insert(b.target, i);
    }
    original.outputs.iter().zip(&recycled.outputs).all(|(a, b)| match (&a.value, &b.value) {
        (Value::Operand(Operand::Temp(t)), Value::Operand(Operand::Temp(s))) => {
            def_pos.get(t).is_some() && holds.get(s) == def_pos.get(t)
        }
        (x, y) => x == y,
    })
}

/// Smallest and largest slot index used, `None` without temporaries.
pub fn slot_range(prog: &Program) -> Option<(TempId, TempId)> {
    if prog.instructions.is_empty() {
        return None;
    }
    Some((prog.min_temp(), prog.max_temp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{equivalent, MERSENNE_31};
    use crate::program::{Factor, Instruction, Output, Rhs, Term};

    fn v(i: u32) -> Operand {
        Operand::Var(i)
    }

    fn z(i: u32) -> Operand {
        Operand::Temp(i)
    }

    fn ins(t: u32, rhs: Rhs) -> Instruction {
        Instruction { target: t, rhs }
    }

    /// w, x, y, z = 0..3 with the shared y + z.
    fn greedy_outcome() -> Program {
        let (w, x, y, zz) = (v(0), v(1), v(2), v(3));
        Program {
            instructions: vec![
                ins(1, Rhs::product(1, vec![Factor::new(w, 2)])),
                ins(2, Rhs::sum(0, vec![Term::new(1, y), Term::new(1, zz)])),
                ins(3, Rhs::product(1, vec![Factor::new(z(1), 1), Factor::new(z(2), 1)])),
                ins(4, Rhs::sum(0, vec![Term::new(1, x), Term::new(1, z(2))])),
                ins(5, Rhs::product(1, vec![Factor::new(w, 1), Factor::new(z(4), 1)])),
                ins(6, Rhs::sum(0, vec![Term::new(1, z(3)), Term::new(1, z(5))])),
            ],
            outputs: vec![Output::new("a", Value::Operand(z(6)))],
        }
    }

    #[test]
    fn depth_first_keeps_listed_order() {
        let p = greedy_outcome();
        assert_eq!(dfs_schedule(&p).unwrap(), p);
        let mut shuffled = p.clone();
        shuffled.instructions.reverse();
        assert_eq!(dfs_schedule(&shuffled).unwrap(), p);
    }

    #[test]
    fn two_slots_suffice() {
        let p = greedy_outcome();
        let r = recycle(&p);
        let targets: Vec<u32> = r.instructions.iter().map(|i| i.target).collect();
        assert_eq!(targets, vec![1, 2, 1, 2, 2, 1]);
        assert_eq!(r.instructions[2].rhs, Rhs::product(1, vec![Factor::new(z(1), 1), Factor::new(z(2), 1)]));
        assert_eq!(r.instructions[3].rhs, Rhs::sum(0, vec![Term::new(1, v(1)), Term::new(1, z(2))]));
        assert_eq!(slot_range(&r), Some((1, 2)));
        assert_eq!(max_live(&p), 2);
        assert!(verify_allocation(&p, &r));
        assert!(equivalent(&p, &r, 20, MERSENNE_31));
    }

    #[test]
    fn chain_uses_one_slot() {
        // Z1 = x + 1; Z2 = Z1 * y
        let p = Program {
            instructions: vec![
                ins(1, Rhs::sum(1, vec![Term::new(1, v(0))])),
                ins(2, Rhs::product(1, vec![Factor::new(z(1), 1), Factor::new(v(1), 1)])),
            ],
            outputs: vec![Output::new("out", Value::Operand(z(2)))],
        };
        let r = recycle(&p);
        assert_eq!(r.max_temp(), 1);
        assert!(verify_allocation(&p, &r));
    }

    #[test]
    fn mutually_live_values_need_own_slots() {
        // k sums all read by one final product
        let k = 5;
        let mut instructions: Vec<Instruction> =
            (1..=k).map(|i| ins(i, Rhs::sum(i as i64, vec![Term::new(1, v(i))]))).collect();
        instructions.push(ins(k + 1, Rhs::product(1, (1..=k).map(|i| Factor::new(z(i), 1)).collect())));
        let p = Program { instructions, outputs: vec![Output::new("out", Value::Operand(z(k + 1)))] };
        let r = recycle(&p);
        assert_eq!(r.max_temp(), k);
        assert_eq!(max_live(&p), k as usize);
    }

    #[test]
    fn detects_clobbered_slot() {
        let p = greedy_outcome();
        let mut r = recycle(&p);
        r.instructions[1].target = 1;
        assert!(!verify_allocation(&p, &r));
    }

    #[test]
    fn cycle_is_an_error() {
        let p = Program {
            instructions: vec![
                ins(1, Rhs::sum(0, vec![Term::new(1, z(2)), Term::new(1, v(0))])),
                ins(2, Rhs::sum(0, vec![Term::new(1, z(1)), Term::new(1, v(0))])),
            ],
            outputs: vec![Output::new("out", Value::Operand(z(2)))],
        };
        assert!(matches!(dfs_schedule(&p), Err(Error::Cycle(_))));
    }
}
