pub mod action;
pub mod backend;
pub mod cli;
pub mod digest;
pub mod env;
pub mod eval;
pub mod orchestrator;
pub mod price;
pub mod prompting;
