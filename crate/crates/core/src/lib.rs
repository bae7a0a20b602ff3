//! Hyperbolic latent-space model for hypergraphs.
//!
//! Units have latent positions on the hyperboloid (or in Euclidean space for
//! the baseline), and each possible hyperedge is realized independently with
//! a probability that decays with how spread out its members are. The crate
//! covers the whole pipeline:
//!
//! - [`geometry`]: Lorentz model and Poincaré disk arithmetic.
//! - [`hypergraph`]: hypergraphs, labeled samples and their text formats.
//! - [`model`]: hyperedge probabilities, the weighted sample loss and its gradients.
//! - [`sampling`]: case-control sampling of controls and train/test splits.
//! - [`estimator`]: blockwise Riemannian gradient descent with Brent line search.
//! - [`simulator`]: scalable simulation (Poisson counts, rejection, Metropolis–Hastings).
//! - [`identify`]: Gram matrices, canonical positions and recovery errors.
//! - [`eval`]: ROC/PR curves, degree distributions, centrality.
//! - [`recovery`]: the end-to-end parameter-recovery study.

pub mod error;
pub mod estimator;
pub mod eval;
pub mod geometry;
pub mod hypergraph;
pub mod identify;
pub mod io;
pub mod model;
pub mod recovery;
pub mod rng;
pub mod sampling;
pub mod simulator;

pub use error::{Error, Result};
pub use estimator::{fit, multi_start_fit, FitConfig, FitReport};
pub use geometry::{LorentzPoint, PoincarePoint, SignatureMatrix};
pub use hypergraph::{Hyperedge, Hypergraph, LabeledSample, SampleRecord};
pub use model::{Geometry, LossBreakdown, ModelParams, Positions};
pub use sampling::DesignConfig;
pub use simulator::SimConfig;
