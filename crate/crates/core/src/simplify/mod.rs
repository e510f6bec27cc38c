//! Optimizations applied after the Horner scheme.

mod compact;
mod cse;
mod factor;
mod greedy;

use std::fmt;
use std::time::{Duration, Instant};

pub use compact::compact;
pub use cse::{cse, lower_tree, merge_operators, output_name};
pub use factor::partial_factor;
pub use greedy::{count_small_subexprs, greedy_round, GreedySettings, SubexprKey};

use crate::count::CostModel;
use crate::error::Result;
use crate::program::Program;
use crate::tree::ExprTree;

/// How a Horner tree is turned into evaluation code.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Method {
    /// One instruction per operator, nothing shared.
    None,
    /// Common subexpression elimination.
    #[default]
    Cse,
    /// Operator merging, then greedy substitutions and partial factorization.
    Greedy,
    /// Common subexpression elimination, then greedy substitutions and
    /// partial factorization.
    #[value(name = "csegreedy")]
    CseGreedy,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::None => "none",
            Method::Cse => "cse",
            Method::Greedy => "greedy",
            Method::CseGreedy => "csegreedy",
        })
    }
}

/// Alternates greedy rounds and partial factorization until neither finds
/// anything or the time limit passes. The operation count never increases.
pub fn optimize_program(prog: &mut Program, settings: &GreedySettings, model: &CostModel) -> Result<()> {
    let start = Instant::now();
    let limit = (settings.time_limit > 0.0).then(|| Duration::from_secs_f64(settings.time_limit));
    let expired = || limit.is_some_and(|l| start.elapsed() >= l);
    compact(prog, model)?;
    loop {
        let mut changed = false;
        while !expired() && greedy_round(prog, settings, model)? {
            changed = true;
        }
        if !expired() && partial_factor(prog, model)? {
            changed = true;
        }
        if changed {
            compact(prog, model)?;
        }
        if !changed || expired() {
            return Ok(());
        }
    }
}

/// Runs `method` on a Horner tree.
pub fn simplify(tree: &ExprTree, method: Method, settings: &GreedySettings, model: &CostModel) -> Result<Program> {
    let mut prog = match method {
        Method::None => return Ok(lower_tree(tree, false)),
        Method::Cse | Method::CseGreedy => cse(tree),
        Method::Greedy => lower_tree(&merge_operators(tree), true),
    };
    compact(&mut prog, model)?;
    if method != Method::Cse {
        optimize_program(&mut prog, settings, model)?;
    }
    Ok(prog)
}
