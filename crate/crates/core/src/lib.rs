//! Subspace learning machines.
//!
//! Decision trees whose nodes split on oblique hyperplanes. Candidate
//! directions are sparse integer combinations of the node's most
//! discriminant input dimensions, scored by a binned one-dimensional split
//! search; the best few mutually decorrelated directions split a node into
//! up to `2^q` children. Classification trees (SLM) minimise entropy,
//! regression trees (SLR) minimise MSE, and both extend to forests and
//! second-order gradient boosting.
//!
//! ```
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//! use slm::dataset::synth::{moons, BoundaryNoise};
//! use slm::tree::{build_tree, TreeParams};
//!
//! let ds = moons(2, 100, BoundaryNoise::new(0.0, 0.0), 1).unwrap();
//! let tree = build_tree(&ds, &TreeParams::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
//! assert_eq!(tree.predict(ds.row(0)).unwrap().class(), Some(0));
//! ```

pub mod dataset;
pub mod dft;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod model;
pub mod projection;
pub mod tree;

pub use dataset::{Dataset, Target, Task};
pub use error::{Result, SlmError};
pub use model::{Model, ModelFile};
pub use tree::{Prediction, SlmTree, TreeParams};
