//! Sparsity-aware optimal transport for unsupervised image restoration.
//!
//! The crate pairs an exact discrete transport engine (with ℓq ground costs)
//! with frequency-domain ℓq fidelity losses, degradation generators and
//! statistics, and a small restoration model trained under
//! `E‖DFT(f(Y) − Y)‖_q^q + λ·d(p_f(Y), p_X)`.

pub mod cost;
pub mod degrade;
pub mod error;
pub mod image;
pub mod metrics;
pub mod ot;
pub mod pnm;
pub mod sparsity;
pub mod spectral;
pub mod train;

pub use cost::{complex_lq, complex_lq_grad, spatial_cost, CostSpec, GroundCost};
pub use error::{Error, Result};
pub use image::{extract_patches, Image};
pub use spectral::{dft2, idft2, Spectrum};
pub use train::{apply_model, restore, RestorationModel, TrainConfig};
