//! glyphfactor factors a corpus of glyph images into per-scribe style
//! embeddings and per-sign shape embeddings.
//!
//! The pipeline: ingest a labeled image corpus into 64x64 binary glyphs,
//! expand each glyph into 27 deterministic variants, train shared embedding
//! tables through a decoder and two match discriminators, then evaluate the
//! learned scribe embeddings with a findplace probing classifier and a
//! correlation score against manually coded features.

pub mod augment;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod nncore;
pub mod synth;

pub use error::{GlyphError, Result};
