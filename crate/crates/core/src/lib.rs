//! Level-set image segmentation by m-run random point initialization.
//!
//! The method re-initializes a distance-regularized level-set evolution
//! from random fields, runs each initialization for a small number of
//! gradient-descent steps, averages the resulting fields element-wise,
//! and extracts a clean one-pixel-wide edge map by band thresholding,
//! majority smoothing and morphological thinning. A self-contained Canny
//! detector and boundary-F1 metrics support baseline comparisons.
//!
//! Modules:
//! * [`imaging`] — image I/O, Gaussian smoothing, gradients, bicubic resize
//! * [`drlse`] — the level-set energy and its gradient-descent step
//! * [`rpi`] — random initializations, per-run evolution, run averaging
//! * [`postproc`] — normalize / threshold / majority / thin
//! * [`canny`] — the baseline edge detector
//! * [`eval`] — boundary metrics and comparison reports

pub mod canny;
pub mod drlse;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod postproc;
pub mod rpi;

pub use canny::{canny_edges, CannyParams};
pub use drlse::{
    edge_indicator, evolve_step, init_step_function, mean_grad_deviation, total_energy,
    update_direction, DrlseParams, EdgeIndicator,
    LevelSetField, Rect,
};
pub use error::{Error, Result};
pub use eval::{boundary_f1, compare_report, BoundaryMetrics, CompareReport, TimingReport};
pub use imaging::{bicubic_resize, gaussian_smooth, gradient, load_image, GrayImage, VectorField};
pub use postproc::{
    majority_smooth, normalize_field, postprocess_pipeline, thin, threshold_band, BinaryEdgeMap,
    PostprocStages, ThresholdBand,
};
pub use rpi::{
    init_dense_random, init_sparse_random, run_multi_rpi, run_single_rpi, AveragedField,
    RpiConfig, RunStack,
};
