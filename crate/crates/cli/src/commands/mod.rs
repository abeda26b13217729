pub mod eval;
pub mod flow;
pub mod regmap;
pub mod stats;
pub mod synth;
pub mod trajsearch;
