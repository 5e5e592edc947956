//! Ambient space forms, immersion charts and their fundamental forms.

pub mod ambient;
pub mod chart;
pub mod fundamental;

pub use ambient::{AmbientKind, AmbientModel};
pub use chart::{BlackBox, ChartMap, ClosedForm, Engine, ImmersionChart, Jet, SampledMap};
pub use fundamental::{
    first_fundamental_form, fundamental_from_jet, normal_bundle_is_flat, normal_curvature_residual,
    second_fundamental_form, FundamentalData,
};
