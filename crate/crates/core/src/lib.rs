//! Phase-vocoder time stretching with percussion-aware adaptive windows.
//!
//! The crate provides a uniform and a nonstationary discrete Gabor transform
//! with painless dual windows, onset analysis based on the mixed partial
//! derivative of the phase, the adaptive grid builder that shortens windows
//! and reshapes hops around detected percussive events, variable-hop phase
//! propagation with identity phase locking, the end-to-end stretchers and an
//! evaluation harness on synthetic signals.

pub mod adaptive_grid;
pub mod dump;
pub mod error;
pub mod eval;
pub mod gabor;
pub mod grid;
pub mod percussion;
pub mod phase;
pub mod pipeline;
pub mod signal;
pub mod spectrogram;
pub mod wav;
pub mod window;

pub use error::{Error, Result};
pub use grid::{NonuniformGrid, UniformGrid};
pub use percussion::{Event, MaskParams, PercussiveEvents};
pub use pipeline::{stretch, stretch_pv, stretch_selebi, Method, StretchConfig, StretchReport};
pub use signal::Signal;
pub use spectrogram::{ComplexSpectrogram, Grid, RealMatrix};
pub use window::{make_hann, Window};
