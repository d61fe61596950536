//! Graph-incorporated latent factor analysis (GLFA) for high-dimensional
//! sparse matrices.
//!
//! The pipeline: parse a rating file into a [`SparseMatrix`], view it as a
//! bipartite [`InteractionGraph`], mine the high-confidence high-order
//! interactions, and train a [`FactorModel`] recurrently on the observed
//! entries plus clamped self-predictions for those interactions.

pub mod data;
pub mod error;
pub mod eval;
pub mod recurrent;
pub mod graph;
pub mod model;
pub mod rng;
pub mod runspec;
pub mod synth;

pub use data::{Entry, IdMap, RatingFormat, Ratings, SparseMatrix, ValueRange};
pub use error::{Error, Result};
pub use eval::{score, wilcoxon_signed_rank, Alternative, Scorecard, WilcoxonResult};
pub use recurrent::{select_sn, train_blf, train_glfa, LambdaSet, TrainConfig, TrainReport};
pub use graph::{
    build_graph, classify_confidence, high_confidence_set, hoi_census, hoi_order, Confidence,
    HoiCensus, HoiRecord, HoiSet, InteractionGraph,
};
pub use model::{
    clamp_activation, init_model, objective, train_epoch, EntryKind, FactorModel, PseudoEntry,
    SgdHyper,
};
pub use runspec::{Command, InputFormat, RunSpec};
