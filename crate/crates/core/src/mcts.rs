//! Monte Carlo tree search over Horner orders.
//!
//! Every tree level fixes one more variable of the order. A path from the
//! root is completed by a random playout and scored by the cost of the
//! resulting scheme after common subexpression elimination; node statistics
//! drive the UCT selection rule.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::count::{CostModel, CountOps, OpStats};
use crate::error::{Error, Result};
use crate::horner::{Construction, Direction, HornerOrder, SchemeScorer};
use crate::poly::{Polynomial, VarId};

/// How a playout's operation count becomes a reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Reward {
    /// `original / ops`.
    #[default]
    #[value(name = "ratio")]
    RatioToOriginal,
    /// `1 - ops / original`, at least 0.
    #[value(name = "saved")]
    FractionSaved,
}

impl Reward {
    pub fn score(self, ops: u64, baseline: u64) -> f64 {
        let ops = ops.max(1) as f64;
        let base = baseline.max(1) as f64;
        match self {
            Reward::RatioToOriginal => base / ops,
            Reward::FractionSaved => (1.0 - ops / base).max(0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MctsSettings {
    /// Exploration constant.
    pub cp: f64,
    /// Iterations per tree.
    pub num_expand: usize,
    /// Number of best orders returned.
    pub num_keep: usize,
    /// Number of independent trees.
    pub num_repeat: usize,
    /// Seconds; 0 means no limit.
    pub time_limit: f64,
    pub direction: Direction,
    pub seed: u64,
    pub reward: Reward,
    /// Playouts scored concurrently; 1 is sequential and reproducible.
    pub batch: usize,
}

impl Default for MctsSettings {
    fn default() -> Self {
        MctsSettings {
            cp: 1.0,
            num_expand: 1000,
            num_keep: 10,
            num_repeat: 1,
            time_limit: 0.0,
            direction: Direction::ForwardOrBackward,
            seed: 0,
            reward: Reward::default(),
            batch: 1,
        }
    }
}

impl MctsSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSetting(m.to_string()));
        if !(self.cp >= 0.0 && self.cp.is_finite()) {
            return bad("the exploration constant must be finite and non-negative");
        }
        if self.num_expand == 0 || self.num_keep == 0 || self.num_repeat == 0 || self.batch == 0 {
            return bad("expansions, kept schemes, repeats and batch size must be at least 1");
        }
        if !(self.time_limit >= 0.0) {
            return bad("the time limit must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Front,
    Back,
}

/// Placing `var` at the next free outer (front) or inner (back) position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub var: VarId,
    pub side: Side,
}

/// Visit statistics of a tree node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChildStats {
    pub visits: u64,
    pub score_sum: f64,
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    /// `None` at the root.
    pub mv: Option<Move>,
    pub stats: ChildStats,
    /// Arena indices, empty until expanded.
    pub children: Vec<usize>,
    expanded: bool,
}

/// UCT value `avg + 2 cp sqrt(2 ln n / n_i)`; unvisited children are
/// infinitely attractive.
pub fn uct_value(child: ChildStats, parent_visits: u64, cp: f64) -> f64 {
    if child.visits == 0 {
        return f64::INFINITY;
    }
    let n = child.visits as f64;
    let avg = child.score_sum / n;
    avg + 2.0 * cp * (2.0 * (parent_visits.max(1) as f64).ln() / n).sqrt()
}

/// Index of the child with the largest UCT value, the lowest index on ties.
pub fn uct_select(parent_visits: u64, children: &[ChildStats], cp: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &c) in children.iter().enumerate() {
        let v = uct_value(c, parent_visits, cp);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// An order under construction: outermost variables, innermost variables
/// (innermost first) and the still unplaced ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialOrder {
    pub front: Vec<VarId>,
    pub back: Vec<VarId>,
    pub remaining: Vec<VarId>,
}

impl PartialOrder {
    pub fn new(vars: Vec<VarId>) -> Self {
        PartialOrder { front: Vec::new(), back: Vec::new(), remaining: vars }
    }

    pub fn apply(&mut self, mv: Move) {
        let k = self.remaining.iter().position(|&v| v == mv.var).expect("variable is unplaced");
        self.remaining.remove(k);
        match mv.side {
            Side::Front => self.front.push(mv.var),
            Side::Back => self.back.push(mv.var),
        }
    }

    /// The full order with `middle` between the two placed ends.
    pub fn complete(&self, middle: &[VarId]) -> Vec<VarId> {
        let mut out = self.front.clone();
        out.extend_from_slice(middle);
        out.extend(self.back.iter().rev());
        out
    }
}

/// Fills the unplaced positions uniformly at random.
pub fn random_completion<R: Rng + ?Sized>(partial: &PartialOrder, rng: &mut R) -> Vec<VarId> {
    let mut middle = partial.remaining.clone();
    middle.shuffle(rng);
    partial.complete(&middle)
}

/// A random completion of `partial` and the cost of its scheme.
pub fn playout<R: Rng + ?Sized>(
    scorer: &mut SchemeScorer,
    partial: &PartialOrder,
    rng: &mut R,
) -> Result<(Vec<VarId>, OpStats)> {
    let order = random_completion(partial, rng);
    let stats = scorer.score(&order)?;
    Ok((order, stats))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Front,
    Back,
    Both,
}

impl Mode {
    fn construction(self) -> Construction {
        match self {
            Mode::Front => Construction::FrontOnly,
            Mode::Back => Construction::BackOnly,
            Mode::Both => Construction::TwoSided,
        }
    }
}

/// One search tree stored as an arena.
#[derive(Clone, Debug)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
    vars: Vec<VarId>,
    mode: Mode,
}

impl SearchTree {
    fn new(vars: Vec<VarId>, mode: Mode) -> Self {
        let root = SearchNode { mv: None, stats: ChildStats::default(), children: Vec::new(), expanded: false };
        SearchTree { nodes: vec![root], vars, mode }
    }

    fn expand(&mut self, node: usize, state: &PartialOrder) {
        let mut moves: Vec<Move> = Vec::new();
        if self.mode != Mode::Back {
            moves.extend(state.remaining.iter().map(|&var| Move { var, side: Side::Front }));
        }
        if self.mode == Mode::Back || (self.mode == Mode::Both && state.remaining.len() > 1) {
            moves.extend(state.remaining.iter().map(|&var| Move { var, side: Side::Back }));
        }
        for mv in moves {
            let id = self.nodes.len();
            self.nodes.push(SearchNode { mv: Some(mv), stats: ChildStats::default(), children: Vec::new(), expanded: false });
            self.nodes[node].children.push(id);
        }
        self.nodes[node].expanded = true;
    }

    /// Walks down by UCT until a new node or a full order is reached.
    /// Visits along the path are counted immediately.
    fn descend(&mut self, cp: f64) -> (Vec<usize>, PartialOrder) {
        let mut state = PartialOrder::new(self.vars.clone());
        let mut path = vec![0];
        let mut node = 0;
        self.nodes[0].stats.visits += 1;
        while !state.remaining.is_empty() {
            if !self.nodes[node].expanded {
                self.expand(node, &state);
            }
            let stats: Vec<ChildStats> = self.nodes[node].children.iter().map(|&c| self.nodes[c].stats).collect();
            let parent = self.nodes[node].stats.visits;
            let k = uct_select(parent, &stats, cp).expect("unplaced variables leave moves");
            let child = self.nodes[node].children[k];
            state.apply(self.nodes[child].mv.expect("non-root"));
            let fresh = self.nodes[child].stats.visits == 0;
            self.nodes[child].stats.visits += 1;
            path.push(child);
            node = child;
            if fresh {
                break;
            }
        }
        (path, state)
    }

    fn backpropagate(&mut self, path: &[usize], score: f64) {
        for &n in path {
            self.nodes[n].stats.score_sum += score;
        }
    }
}

/// Best orders found, cheapest first.
#[derive(Clone, Debug)]
pub struct MctsResult {
    pub best: Vec<(HornerOrder, OpStats)>,
    pub playouts: usize,
    pub timed_out: bool,
}

struct Search<'a> {
    settings: &'a MctsSettings,
    scorer: SchemeScorer,
    memo: HashMap<Vec<VarId>, OpStats>,
    baseline: u64,
    best: BTreeSet<(u64, Vec<VarId>, u8)>,
    stats_of: HashMap<Vec<VarId>, OpStats>,
    playouts: usize,
    start: Instant,
    limit: Option<Duration>,
}

impl Search<'_> {
    fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }

    fn record(&mut self, order: &[VarId], stats: OpStats, mode: Mode) {
        let tag = mode as u8;
        self.best.insert((stats.total, order.to_vec(), tag));
        self.stats_of.insert(order.to_vec(), stats);
        while self.best.len() > self.settings.num_keep {
            let last = self.best.iter().next_back().cloned().expect("non-empty");
            self.best.remove(&last);
        }
    }

    /// Runs `budget` iterations on a fresh tree. Returns false on timeout.
    fn run_tree(&mut self, mode: Mode, budget: usize, rng: &mut ChaCha8Rng) -> Result<bool> {
        let vars = self.scorer.variables();
        let mut tree = SearchTree::new(vars, mode);
        let mut done = 0;
        while done < budget {
            if self.expired() {
                return Ok(false);
            }
            let batch = self.settings.batch.min(budget - done);
            let mut pending = Vec::with_capacity(batch);
            for _ in 0..batch {
                let (path, state) = tree.descend(self.settings.cp);
                let order = random_completion(&state, rng);
                pending.push((path, order));
            }
            let unscored: Vec<Vec<VarId>> = {
                let mut seen = BTreeSet::new();
                pending.iter().filter(|(_, o)| !self.memo.contains_key(o) && seen.insert(o.clone())).map(|(_, o)| o.clone()).collect()
            };
            let scored: Vec<(Vec<VarId>, Result<OpStats>)> = if unscored.len() > 1 {
                let base = &self.scorer;
                unscored.into_par_iter().map_init(|| base.clone(), |sc, o| {
                    let r = sc.score(&o);
                    (o, r)
                }).collect()
            } else {
                unscored.into_iter().map(|o| {
                    let r = self.scorer.score(&o);
                    (o, r)
                }).collect()
            };
            for (o, r) in scored {
                self.memo.insert(o, r?);
            }
            for (path, order) in pending {
                let stats = self.memo[&order];
                let score = self.settings.reward.score(stats.total, self.baseline);
                tree.backpropagate(&path, score);
                self.record(&order, stats, mode);
                self.playouts += 1;
            }
            done += batch;
        }
        Ok(true)
    }
}

/// Searches for cheap Horner orders of the polynomials, which share one
/// scheme. Runs `num_repeat` trees of `num_expand` iterations; with
/// `ForwardOrBackward` each tree's budget is split over a forward and a
/// backward tree.
pub fn mcts_search(polys: &[Polynomial], settings: &MctsSettings, model: CostModel) -> Result<MctsResult> {
    settings.validate()?;
    let scorer = SchemeScorer::new(polys, model);
    if scorer.variables().is_empty() {
        return Ok(MctsResult {
            best: vec![(HornerOrder::new(Vec::new()), scorer.clone().score(&[])?)],
            playouts: 0,
            timed_out: false,
        });
    }
    let baseline = polys.iter().map(|p| p.count_ops_with(&model).total).sum();
    let mut search = Search {
        settings,
        scorer,
        memo: HashMap::new(),
        baseline,
        best: BTreeSet::new(),
        stats_of: HashMap::new(),
        playouts: 0,
        start: Instant::now(),
        limit: (settings.time_limit > 0.0).then(|| Duration::from_secs_f64(settings.time_limit)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let n = settings.num_expand;
    let plan: Vec<(Mode, usize)> = match settings.direction {
        Direction::Forward => vec![(Mode::Front, n)],
        Direction::Backward => vec![(Mode::Back, n)],
        Direction::ForwardAndBackward => vec![(Mode::Both, n)],
        Direction::ForwardOrBackward => vec![(Mode::Front, n.div_ceil(2)), (Mode::Back, n / 2)],
    };
    let mut timed_out = false;
    'repeat: for _ in 0..settings.num_repeat {
        for &(mode, budget) in &plan {
            if budget > 0 && !search.run_tree(mode, budget, &mut rng)? {
                timed_out = true;
                break 'repeat;
            }
        }
    }
    let modes = [Mode::Front, Mode::Back, Mode::Both];
    let best = search
        .best
        .iter()
        .map(|(_, order, tag)| {
            let construction = modes[*tag as usize].construction();
            (HornerOrder { sequence: order.clone(), construction }, search.stats_of[order])
        })
        .collect();
    Ok(MctsResult { best, playouts: search.playouts, timed_out })
}
