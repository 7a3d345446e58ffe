//! Multi-object tracking with skipped detections bridged by sparse optical flow.
//!
//! The tracker runs an external detector's output (read from files) every
//! `L`-th frame only. Between detection frames each track is carried by the
//! median displacement of a handful of interest points tracked with pyramidal
//! Lucas-Kanade flow. Tracks are associated to detections with the Hungarian
//! algorithm on an IoU cost, kept alive for a bounded number of unmatched
//! frames, and terminated when their interest points collapse or spread out.
//!
//! Module map:
//! - [`imaging`]: image buffers, pyramids, gradients, morphology, Netpbm I/O
//! - [`optflow`]: pyramidal Lucas-Kanade point tracker
//! - [`track`]: boxes, IoU, interest-point sampling, median-flow propagation
//! - [`assoc`]: Hungarian assignment and IoU gating
//! - [`pipeline`]: the per-frame scheduler and tracker state
//! - [`mot_io`]: MOTChallenge-format text files, mask sidecars, config files
//! - [`metrics`]: CLEAR-MOT evaluation (MOTA, IDsw, MT/ML, ...)
//! - [`synth`]: synthetic scene generation and the detection-interval benchmark

pub mod assoc;
pub mod imaging;
pub mod metrics;
pub mod mot_io;
pub mod optflow;
pub mod pipeline;
pub mod synth;
pub mod track;

pub use assoc::{Assignment, CostMatrix};
pub use imaging::{BitMask, Image8, ImageF, Pyramid, RgbImage};
pub use metrics::{EvalOptions, EvalReport};
pub use mot_io::{DetFileRow, GtRow, ResultRow};
pub use optflow::{FlowPyramid, FlowResult, FlowStatus, LkParams};
pub use pipeline::{Config, FrameBundle, TimingReport, Tracker};
pub use synth::{DetectorLatencyModel, Scene, SceneSpec};
pub use track::{BBox, Detection, Point2, Track};
