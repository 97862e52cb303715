pub mod align;
pub mod eval;
pub mod generate;
pub mod grasps;
pub mod report;
pub mod serve;
pub mod stats;
