//! Bipartite graph data model, text formats, incidence normalisation and the
//! citation-to-bipartite synthesizer.

mod citation;
mod dataset;
mod incidence;
mod io;
mod synth;

pub use citation::{class_counts, load_linqs, load_linqs_dir, CitationNetwork, CitationStandIn};
pub use dataset::{rescale_columns, BipartiteDataset, LabelVector, Partition};
pub use incidence::{normalize_incidence, BatchQuery, Direction, NormalizedIncidence};
pub use io::{
    load_dataset, load_dataset_dir, load_embeddings, read_edges, read_feature_matrix, read_labels,
    read_remap, save_dataset, save_embeddings, write_edges, write_feature_matrix, write_labels,
    write_remap, DatasetFiles, LoadReport,
};
pub use synth::{synthesize_bipartite, SynthesizedBipartite};
