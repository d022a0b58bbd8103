//! Stochastic-geometry toolkit for UAVs served by coordinated multi-point
//! transmission over a Poisson-Delaunay cellular layout.
//!
//! The crate is organised bottom-up: [`geometry`] builds base-station layouts
//! and their Delaunay triangulation, [`mobility`] drives UAVs with a 3D
//! random-waypoint model, [`channel`] draws fading and SIR samples,
//! [`specfun`] and [`quad`] hold the numerical kernels used by the closed-form
//! expressions in [`analytics`], [`freqplan`] implements circle-packing
//! frequency reuse, and [`simulator`] runs the Monte-Carlo experiments.

pub mod analytics;
pub mod channel;
pub mod error;
pub mod freqplan;
pub mod geometry;
pub mod mobility;
pub mod quad;
pub mod rng;
pub mod simulator;
pub mod specfun;

pub use error::{Error, Result};
pub use geometry::{BsLayout, CompSet, Point2, Rect, Triangulation};
pub use channel::{FadingParams, SirSample};
pub use mobility::{MobilityConfig, TraceEpoch, Waypoint};
pub use analytics::{AnalysisConfig, CoverageCurve, CurveKind};
pub use freqplan::{CirclePlan, FrequencyPlan, PlanMode};
pub use simulator::{Estimate, ScenarioConfig, Scheme};
