//! Action recognition over depth video.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! 1. [`background`]: per-sequence background model (far-field probability
//!    map plus maximal depth map) and largest-component foreground masks.
//! 2. [`stip`]: contour candidates on three projection planes, selected into
//!    motion-based and shape-based interest points by motion boxes.
//! 3. [`descriptor`]: scale-adaptive multi-scale 3D local steering kernels
//!    for motion-based points and spatial-temporal vectors for shape-based
//!    points.
//! 4. [`encode`]: k-means codebooks, vector-quantized histograms and their
//!    fusion, plus pyramid and distance-weighted baseline encoders.
//! 5. [`classify`]: homogeneous chi-squared kernel, one-vs-rest SVM trained
//!    by dual coordinate ascent, evaluation and grid search.
//!
//! [`depthio`] holds the data model, file formats, synthetic scenes and
//! perturbations; [`pipeline`] wires the stages into dataset-level runs.

mod binio;
pub mod classify;

pub mod background;
pub mod depthio;
pub mod descriptor;
pub mod encode;
pub mod mask;
pub mod pipeline;
pub mod stip;
