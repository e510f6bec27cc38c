//! Optimization levels and their parameters.

use std::fmt;

use crate::error::{Error, Result};
use crate::horner::{Direction, HornerOrder};
use crate::mcts::MctsSettings;
use crate::simplify::{GreedySettings, Method};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// No optimization: the expanded input is written out, one operation
    /// per statement.
    O0,
    #[default]
    O1,
    O2,
    O3,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Level::O0 => 0,
            Level::O1 => 1,
            Level::O2 => 2,
            Level::O3 => 3,
        };
        write!(f, "O{}", n)
    }
}

/// Where the candidate Horner orders come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum HornerSource {
    #[default]
    Occurrence,
    Mcts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerSettings {
    pub level: Level,
    pub horner: HornerSource,
    pub direction: Direction,
    pub mcts: MctsSettings,
    pub method: Method,
    pub greedy: GreedySettings,
    pub stats: bool,
    /// Seconds, 0 for none. Informational once applied: [`Overrides`] splits
    /// it between the search and the greedy pass.
    pub time_limit: f64,
    /// Used instead of any search when set.
    pub scheme: Option<HornerOrder>,
    pub print_scheme: bool,
    pub debug: bool,
    pub seed: u64,
}

impl OptimizerSettings {
    pub fn preset(level: Level) -> Self {
        let mut s = OptimizerSettings {
            level,
            horner: HornerSource::Occurrence,
            direction: Direction::ForwardOrBackward,
            mcts: MctsSettings::default(),
            method: Method::Cse,
            greedy: GreedySettings { max_perc: 5.0, min_num: 10, time_limit: 0.0 },
            stats: false,
            time_limit: 0.0,
            scheme: None,
            print_scheme: false,
            debug: false,
            seed: 0,
        };
        match level {
            Level::O0 => s.method = Method::None,
            Level::O1 => {}
            Level::O2 => s.method = Method::Greedy,
            Level::O3 => {
                s.horner = HornerSource::Mcts;
                s.method = Method::Greedy;
                s.mcts = MctsSettings { cp: 1.0, num_expand: 1000, num_keep: 10, num_repeat: 1, ..MctsSettings::default() };
            }
        }
        s
    }

    /// The search parameters with the shared direction and seed filled in.
    pub fn effective_mcts(&self) -> MctsSettings {
        MctsSettings { direction: self.direction, seed: self.seed, ..self.mcts }
    }

    pub fn validate(&self) -> Result<()> {
        self.effective_mcts().validate()?;
        self.greedy.validate()?;
        if !(self.time_limit >= 0.0 && self.time_limit.is_finite()) {
            return Err(Error::InvalidSetting(format!("time limit {} is not a non-negative number", self.time_limit)));
        }
        if self.horner == HornerSource::Occurrence && self.direction == Direction::ForwardAndBackward {
            return Err(Error::InvalidSetting("occurrence orders cannot be built from both ends".into()));
        }
        Ok(())
    }
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings::preset(Level::O1)
    }
}

/// Explicitly given options; unset fields keep the preset's value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub horner: Option<HornerSource>,
    pub direction: Option<Direction>,
    pub mcts_constant: Option<f64>,
    pub mcts_num_expand: Option<usize>,
    pub mcts_num_keep: Option<usize>,
    pub mcts_num_repeat: Option<usize>,
    pub mcts_time_limit: Option<f64>,
    pub method: Option<Method>,
    pub greedy_max_perc: Option<f64>,
    pub greedy_min_num: Option<usize>,
    pub greedy_time_limit: Option<f64>,
    /// Split in halves between the search and the greedy pass; the specific
    /// limits above take precedence.
    pub time_limit: Option<f64>,
    pub stats: Option<bool>,
    pub scheme: Option<HornerOrder>,
    pub print_scheme: Option<bool>,
    pub debug: Option<bool>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, base: &OptimizerSettings) -> OptimizerSettings {
        let mut s = base.clone();
        macro_rules! set {
            ($field:ident => $($target:tt)+) => {
                if let Some(v) = self.$field.clone() {
                    s.$($target)+ = v;
                }
            };
        }
        set!(horner => horner);
        set!(direction => direction);
        set!(method => method);
        if let Some(t) = self.time_limit {
            s.time_limit = t;
            s.mcts.time_limit = t / 2.0;
            s.greedy.time_limit = t / 2.0;
        }
        set!(mcts_constant => mcts.cp);
        set!(mcts_num_expand => mcts.num_expand);
        set!(mcts_num_keep => mcts.num_keep);
        set!(mcts_num_repeat => mcts.num_repeat);
        set!(mcts_time_limit => mcts.time_limit);
        set!(greedy_max_perc => greedy.max_perc);
        set!(greedy_min_num => greedy.min_num);
        set!(greedy_time_limit => greedy.time_limit);
        set!(stats => stats);
        if let Some(order) = &self.scheme {
            s.scheme = Some(order.clone());
        }
        set!(print_scheme => print_scheme);
        set!(debug => debug);
        set!(seed => seed);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_table() {
        let o1 = OptimizerSettings::preset(Level::O1);
        assert_eq!((o1.horner, o1.direction, o1.method), (HornerSource::Occurrence, Direction::ForwardOrBackward, Method::Cse));
        let o2 = OptimizerSettings::preset(Level::O2);
        assert_eq!(o2.method, Method::Greedy);
        assert_eq!((o2.greedy.min_num, o2.greedy.max_perc), (10, 5.0));
        let o3 = OptimizerSettings::preset(Level::O3);
        assert_eq!((o3.horner, o3.method), (HornerSource::Mcts, Method::Greedy));
        assert_eq!((o3.mcts.cp, o3.mcts.num_expand, o3.mcts.num_keep, o3.mcts.num_repeat), (1.0, 1000, 10, 1));
        assert_eq!(OptimizerSettings::preset(Level::O0).method, Method::None);
    }

    #[test]
    fn override_changes_one_field() {
        let o3 = OptimizerSettings::preset(Level::O3);
        let tuned = Overrides { mcts_constant: Some(0.1), ..Default::default() }.apply(&o3);
        let mut expected = o3.clone();
        expected.mcts.cp = 0.1;
        assert_eq!(tuned, expected);
        assert_eq!(Overrides::default().apply(&o3), o3);
    }

    #[test]
    fn time_limit_is_halved() {
        let o3 = OptimizerSettings::preset(Level::O3);
        let s = Overrides { time_limit: Some(10.0), ..Default::default() }.apply(&o3);
        assert_eq!((s.mcts.time_limit, s.greedy.time_limit), (5.0, 5.0));
        let s = Overrides { time_limit: Some(10.0), greedy_time_limit: Some(1.0), ..Default::default() }.apply(&o3);
        assert_eq!((s.mcts.time_limit, s.greedy.time_limit), (5.0, 1.0));
    }

    #[test]
    fn invalid_combinations() {
        let mut s = OptimizerSettings::preset(Level::O1);
        s.direction = Direction::ForwardAndBackward;
        assert!(s.validate().is_err());
        s.horner = HornerSource::Mcts;
        assert!(s.validate().is_ok());
        s.mcts.num_expand = 0;
        assert!(s.validate().is_err());
    }
}
