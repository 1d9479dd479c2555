//! Frame identification with language models: FrameNet ingestion, candidate
//! lookup, prompt rendering, model backends, answer parsing and evaluation.

pub mod backends;
pub mod corpus;
pub mod defprobe;
pub mod evalkit;
pub mod lexicon;
pub mod parse;
pub mod promptkit;
pub mod seeds;
