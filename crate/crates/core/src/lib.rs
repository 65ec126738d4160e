//! Scaling-variable analysis and pseudo-spectral simulation of higher-order
//! dissipative equations `∂t u = (-1)^{n+1} Δⁿ u + F(u, ∂u)`, with the
//! Cahn-Hilliard equation as the worked case.

pub mod analysis;
pub mod config;
pub mod error;
pub mod fft;
pub mod fit;
pub mod frame;
pub mod grid;
pub mod interp;
pub mod nonlinearity;
pub mod quadrature;
pub mod record;
pub mod ratio_serde;
pub mod relevance;
pub mod scaledflow;
pub mod scenario;
pub mod simulator;
pub mod special;
pub mod spectrum;
pub mod stepper;

pub use error::{Error, ErrorKind, Result};
pub use frame::ScalingFrame;
pub use grid::{Dealias, Field, Grid, SpectralField};
pub use relevance::{MultiIndex, NonlinearTerm, PdeSpec, Relevance};
