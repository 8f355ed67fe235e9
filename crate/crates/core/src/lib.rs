//! Forest-collapse spine complexes of graphs and the rational homology of
//! `Out(F_n)`, `Aut(F_n)` and their leaved analogues at small rank, together
//! with a sampled realisation of the tree-collapse flow on embedded graphs.

pub mod canon;
pub mod edgeset;
pub mod enumeration;
pub mod flow;
pub mod graph;
pub mod linalg;
pub mod morphism;
pub mod par;
pub mod spine;

pub use canon::{automorphism_group, canonical_form, CanonicalForm};
pub use edgeset::EdgeSet;
pub use enumeration::{enumerate_forest_chains, enumerate_forests, enumerate_graphs, Catalog};
pub use graph::{AbstractGraph, GraphInvariants, ValidationReport};
pub use morphism::{collapse_forest, compose, factor_as_collapses, CellularMap, Forest, ForestChain, GraphEpimorphism};
pub use par::{Executor, Workers};
pub use linalg::{rank_exact, rank_modular, RankMode, SparseIntMatrix};
pub use spine::{betti_numbers, build_spine_complex, euler_characteristic, BettiReport, SparseIntChainComplex, SpineCell};
