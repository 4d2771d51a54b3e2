//! The seven classifier implementations behind the uniform model contract.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod lbfgs;
pub mod mlp;
pub mod nbc;
pub mod sgd;
pub mod svm;
pub mod tree;
