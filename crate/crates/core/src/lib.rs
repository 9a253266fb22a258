//! Shallow discourse parser over pre-parsed text.
//!
//! The parser takes documents that already carry tokens, POS tags,
//! constituent trees, and dependency graphs, and produces discourse
//! relations: explicit relations anchored on a connective ("because",
//! "however", ...) with two argument spans and a sense, plus relations
//! between adjacent sentences that are not linked by any connective.
//!
//! It runs as a pipeline of four statistical stages, each a small
//! log-linear classifier over sparse string features:
//!
//! 1. [`connective`] — decide which lexicon matches are discourse usages;
//! 2. [`arguments`] — pick argument head tokens and project them to spans;
//! 3. [`sense`] (explicit half) — classify the sense of each connective;
//! 4. [`sense`] (non-explicit half) — label adjacent sentence pairs.
//!
//! [`pipeline`] wires the stages together for training and parsing,
//! [`eval`] scores output against gold annotations and implements the
//! frequency baseline, and the `discourse` binary exposes train / parse /
//! eval / inspect commands.

pub mod arguments;
pub mod connective;
pub mod corpus;
pub mod eval;
pub mod maxent;
pub mod pipeline;
pub mod sense;
pub mod syntax;
