//! Pattern-mining biclustering of gene expression matrices.
//!
//! Expression values are turned into sign-of-change (trajectory) matrices
//! over condition pairs, binarized into formal contexts, and mined for
//! formal concepts or generic association rules. Five pipelines build on
//! this core: BiARM, BiFCA+, BiFCA, NBic-ARM and NBF.

pub mod bicluster;
pub mod bitset;
pub mod discretize;
pub mod error;
pub mod evaluation;
pub mod fca;
pub mod golden;
pub mod matrix_io;
pub mod measures;
pub mod pipelines;
pub mod rules;

pub use bicluster::{Algorithm, Bicluster, BiclusterRecord, MatrixDims, PairColumnRecord};
pub use bitset::BitSet;
pub use discretize::{
    binarize_by_symbol_frequency, binarize_signs, map_pair_columns_to_conditions, trajectory,
    trajectory_with_epsilon, PairColumn, SignedContextPair, TrajectoryMatrix, TrajectoryMode,
};
pub use error::{Error, Result};
pub use evaluation::{coverage, export_gene_list, export_profile, CoverageReport};
pub use fca::{
    close_itemset, enumerate_concepts, enumerate_concepts_with, extent_of, intent_of, BinaryContext,
    ConceptOptions, FormalConcept,
};
pub use matrix_io::{
    load_binary_context, load_expression_matrix, read_biclusters, write_biclusters,
    write_expression_matrix, ExpressionMatrix, OutputFormat, RawBinaryContext, TableFormat,
};
pub use measures::{bond, cell_overlap, set_overlap, stability, stability_with, supports, Stability, StabilityOptions, SupportProfile};
pub use pipelines::{
    run, run_biarm, run_bifca, run_bifca_plus, run_nbf, run_nbic_arm, PipelineConfig, PipelineOutput,
};
pub use rules::{extract_igb, mine_frequent_closed, minimal_generators, supporting_objects, ClosedItemset, GenericRule};
