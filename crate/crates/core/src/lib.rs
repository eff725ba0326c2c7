//! Joint recovery of a compact radiance field and a continuous-time camera
//! trajectory from a single motion-blurred frame and the event stream recorded
//! during its exposure.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats, dataset handling and the command line live in the
//! companion `blurev` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ad;
pub mod error;
pub mod eval;
pub mod events;
pub mod field;
pub mod image;
pub mod lie;
pub mod metrics;
pub mod optim;
pub mod render;
pub mod sim;
pub mod spline;
pub mod synth;
pub mod train;

mod math;

pub use ad::{Gradients, Real, Tape, Tensor, Var};
pub use error::{Error, Result};
pub use events::{Event, EventStream};
pub use field::{Activation, FieldArch, SceneField};
pub use image::Image;
pub use lie::{Pose, RigidTransform, Twist};
pub use render::{CameraIntrinsics, Ray, RenderSettings};
pub use spline::{SplineTrajectory, TrajectoryKind, TrajectoryParams};
