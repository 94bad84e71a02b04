//! The four benchmark problems and their dataset formats.

pub mod bilinear;
pub mod io;
pub mod least_squares;
pub mod logistic;
pub mod tensor;

pub use bilinear::BilinearLogisticInstance;
pub use io::DenseDataset;
pub use least_squares::{LeastSquaresInstance, LsSample};
pub use logistic::LogisticInstance;
pub use tensor::TensorRecoveryInstance;
