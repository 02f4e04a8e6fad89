//! Mixture dataset construction: interference and SOI slice pools, mixing at
//! a calibrated in-band SINR, training augmentations and dataset assembly.

mod augment;
mod dataset;
mod mix;
mod pool;

pub use augment::{augment, Augmentation};
pub use dataset::{build_dataset, Dataset, DatasetSpec, Manifest, ManifestEntry, Split};
pub use mix::{mix_at_sinr, MixtureExample};
pub use pool::{prepare_interference_pool, prepare_soi_pool, shift_schedule};
