//! Numerical verification of null hypersurfaces in the Lorentzian space forms
//! `-I ×_ϱ F`: graphs of transnormal functions, their null frames, shape
//! operators and rotation one-forms, principal curvature spectra and the
//! Cartan-type identities they satisfy, and the normal-geodesic chart that
//! exhibits the warped structure of `M`.
//!
//! Layers, bottom up: [`numkernel`] and [`rng`]; [`spaceform`] (fibers);
//! [`grw`] (the ambient warped product); [`nullhyp`]; [`isoparam`];
//! [`chart`]; [`catalog`]; [`runner`] (configuration, suites and reports).

pub mod catalog;
pub mod chart;
pub mod error;
pub mod grw;
pub mod isoparam;
pub mod nullhyp;
pub mod numkernel;
pub mod parallel;
pub mod rng;
pub mod runner;
pub mod spaceform;

pub use error::{GeomError, Result};
