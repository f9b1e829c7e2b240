//! Randomized CP decomposition of dense tensors.

pub mod compress;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kruskal;
pub mod linalg;
pub mod rng;
pub mod solvers;
pub mod synthetic;
pub mod tensor;

pub use compress::{Basis, CompressConfig, CompressionResult, PowerScheme, SketchDistribution};
pub use error::{Error, Result};
pub use kruskal::KruskalTensor;
pub use linalg::Matrix;
pub use solvers::{decompose, CpSolver, DecomposeConfig, FitTrace, InitStrategy, SolverRegistry};
pub use tensor::DenseTensor;
