//! Context retrieval for repository-level code completion.

pub mod ccg;
pub mod eaid;
pub mod embedding;
pub mod fingerprint;
pub mod hf_op;
mod http;
pub mod lexical;
pub mod store;
pub mod prompt;
pub mod completer;
pub mod config;
pub mod engine;
pub mod eval;
pub mod cli;
