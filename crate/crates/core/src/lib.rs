pub mod dsl;
pub mod engine;
pub mod experiments;
pub mod gnn;
pub mod logic;
pub mod train;
