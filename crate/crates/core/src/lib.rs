//! Evolving augmented transition networks (ATNs) as agent controllers.
//!
//! A genome is a fixed-length string of codons. Each codon decodes through a
//! 64-entry genetic code into a token of a small stack language, and running
//! that token stream builds a labelled graph: nodes are controller states,
//! edges carry percept conditions and move actions. The graph then drives an
//! agent through a "woods" grid maze and its fitness is the mean number of
//! steps needed to reach food from every start cell.
//!
//! The crate is organised along that pipeline:
//!
//! * [`token`]: tokens, the genetic code and genome encodings
//! * [`builder`]: the stack machine that turns tokens into an [`Atn`]
//! * [`maze`]: grid worlds, percepts, moves and the shortest-path oracle
//! * [`runtime`]: executing an ATN as a controller and scoring it
//! * [`evolution`]: truncation selection, crossover, mutation, run records
//! * [`experiment`] and [`stats`]: ablation grids and their statistics

pub mod builder;
pub mod config;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod maze;
pub mod rng;
pub mod runtime;
pub mod stats;
pub mod token;

pub use builder::{interpret, Atn, BuildConfig, Edge, NodeId};
pub use error::{Error, Result};
pub use evolution::{EvolutionConfig, Individual, MutationSpec, RunRecord};
pub use maze::{Cell, Maze, Percept, Position};
pub use runtime::{evaluate, DefaultAction, EdgeChoice, RunPolicy, TrialResult};
pub use token::{Condition, Direction, Encoding, GeneticCode, Genome, PerceptKind, Token};
