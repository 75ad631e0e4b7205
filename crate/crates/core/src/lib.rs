//! Simulation toolkit for a semiconductor ridge microcavity emitting
//! counterpropagating twin photons.
//!
//! The crate follows the device from the epitaxial stack to the
//! coincidence histogram:
//!
//! * [`materials`]: Al(x)Ga(1-x)As refractive-index dispersion.
//! * [`stack`]: transfer-matrix optics of the vertical pump microcavity.
//! * [`modes`]: TE/TM guided modes of the planar multilayer waveguide.
//! * [`phasematch`]: energy and longitudinal momentum conservation.
//! * [`spectra`]: sinc² emission spectra, convolution and widths.
//! * [`efficiency`]: cavity enhancement and the detection count budget.
//! * [`hom`]: Hong-Ou-Mandel dip model, Monte Carlo scans and fitting.
//! * [`config`]: JSON device description tying the pieces together.

pub mod config;
pub mod efficiency;
pub mod hom;
pub mod materials;
pub mod modes;
pub mod phasematch;
pub mod roots;
pub mod spectra;
pub mod stack;

pub use materials::{Composition, DispersionModel, Medium};
pub use modes::{EffectiveIndex, FundamentalModes, GuidedMode};
pub use phasematch::{Interaction, PhaseMatchPoint};
pub use stack::{Layer, LayerStack, Polarization};
