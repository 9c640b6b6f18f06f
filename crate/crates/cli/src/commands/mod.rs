pub mod eval;
pub mod generate;
pub mod report;
pub mod stub;
pub mod train;
