//! Dataset ingestion, synthetic cohorts and export.

pub mod clinical;
pub mod export;
pub mod loader;
pub mod manifest;
pub mod synth;

pub use clinical::{attach_clinical, ClinicalFusion, ClinicalTable};
pub use export::export_cohort;
pub use loader::{apply_task, extract_table, load_directory, parse_samples, read_series, LabeledSeries};
pub use manifest::{DatasetManifest, Division, ManifestEntry, Task, MANIFEST_FILE};
pub use synth::{generate_cohort, self_check, Morphology, SelfCheck, SynthCohort, SynthCohortSpec};
