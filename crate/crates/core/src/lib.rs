//! Vietnamese spelling correction toolkit.

pub mod baseline;
pub mod bleu;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod corrector;
pub mod embedder;
pub mod errorgen;
pub mod harness;
pub mod nn;
pub mod orthography;
pub mod search;
pub mod telex;
pub mod training;
pub mod vocab;
