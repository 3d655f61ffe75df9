//! Design and 2D full-wave verification of waveguide-fed cylindrical
//! dielectric lens beam-steering antennas.
//!
//! The pipeline is scene → FDTD steady state → near-to-far-field → metrics,
//! with an exact cylindrical-harmonic solution as the reference engine.
//!
//! ```
//! use lensbeam::design::{predicted_hpbw, required_radius};
//!
//! let r0 = required_radius(28e9, 6.39).unwrap();
//! assert!((r0 * 1e3 - 49.25).abs() < 0.05);
//! assert!((predicted_hpbw(28e9, r0).unwrap() - 6.39).abs() < 1e-12);
//! ```

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod design;
pub mod error;
pub mod farfield;
pub mod fdtd;
pub mod metrics;
pub mod plot;
pub mod scene;
pub mod sweep;
pub mod units;
pub mod validate;

pub use error::{Error, ErrorClass, Result};
pub use farfield::{ntff, pattern_power_integral, Engine, RadiationPattern};
pub use metrics::{analyze, compare_ports, CampaignSummary, PatternMetrics};
pub use scene::{default_paper_scene, AntennaScene};
pub use sweep::{feed_distance_optimize, scan_campaign, EngineSettings, SweepReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/design.md")]
    mod design {}
    #[doc = include_str!("../../../book/src/scenes.md")]
    mod scenes {}
    #[doc = include_str!("../../../book/src/analytic.md")]
    mod analytic {}
    #[doc = include_str!("../../../book/src/fdtd.md")]
    mod fdtd {}
    #[doc = include_str!("../../../book/src/farfield.md")]
    mod farfield {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/campaigns.md")]
    mod campaigns {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
