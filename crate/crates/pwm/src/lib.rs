//! Grid-based transforms, motion-group Fourier analysis, Schrödinger
//! propagators, file formats and the `pwm` experiment runner, built on
//! `pwm-core`.

pub mod error;
pub mod cli;
pub mod construct;
pub mod euclid;
pub mod fft;
pub mod grid;
pub mod io;
pub mod motion;
pub mod schrodinger;

pub use error::{PwmError, Result};
pub use grid::{AnalyticField, Field, Grid, SampledFunction, Sinogram, Spectrum};
