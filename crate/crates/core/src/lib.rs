pub mod alloc;
pub mod count;
pub mod driver;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod horner;
pub mod mcts;
pub mod poly;
pub mod program;
pub mod simplify;
pub mod tree;
