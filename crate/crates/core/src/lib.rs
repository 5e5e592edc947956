//! Numerical toolkit for isometric immersions with flat normal bundle between
//! space forms.
//!
//! The crate represents an immersion `f: M^n_c → Q^{n+p}_c̃` through a
//! parametric [`ImmersionChart`](geometry::ImmersionChart), computes its
//! fundamental forms, extracts principal normals and principal frames, and
//! checks the structure equations that hold when the normal bundle is flat
//! and `C = c̃ − c > 0`:
//!
//! * [`geometry`]: ambient models, charts, first and second fundamental forms.
//! * [`principal`]: principal normals, third fundamental form, `g⁰ = C g + III`.
//! * [`verify`]: Gauss, Codazzi, connection-formula and flatness residuals.
//! * [`coords`]: flows of `λ_i X_i` and the principal-coordinate map.
//! * [`growth`]: distances, geodesic balls, volumes and growth of `‖α_f‖`.
//! * [`catalog`]: closed-form examples, a sine-Gordon constructor, controls.
//! * [`config`]: run configuration files.
//! * [`report`]: CSV and summary emission, and the drivers behind the CLI.

pub mod autodiff;
pub mod catalog;
pub mod config;
pub mod coords;
pub mod curvature;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod growth;
pub mod principal;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
