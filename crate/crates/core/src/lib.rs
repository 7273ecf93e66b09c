//! Coherent-feedback synthesis of decoherence-free subsystems in passive
//! linear quantum networks.

pub mod analysis;
pub mod matrixkit;
pub mod moments;
pub mod netformat;
pub mod passive_model;
pub mod presets;
pub mod random;
pub mod synthesis;

/// Default relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
