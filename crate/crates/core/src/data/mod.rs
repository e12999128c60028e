//! Dataset manifests, feature tables, train/test splits and the synthetic
//! nodule generator.

mod manifest;
mod split;
mod synth;
mod table;

pub use manifest::{
    annotation_mask, extract_nodule, load_manifest, parse_manifest, Dataset, Manifest,
    ManifestEntry, NoduleSample, MANIFEST_SCHEMA,
};
pub use split::{split_train_test, SplitLevel};
pub use synth::{generate_synthetic, write_synthetic, SyntheticDataset, SyntheticNodule};
pub use table::FeatureTable;
