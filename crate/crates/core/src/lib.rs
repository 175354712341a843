//! Finite-scale polymorphisms of measure spaces.

pub mod classify;
pub mod coarse;
pub mod error;
pub mod matrix;
pub mod measure;
pub mod operator;
pub mod random;
pub mod scalar;
pub mod semigroup;
pub mod sim;
pub mod spectral;
pub mod symbolic;

pub use classify::{classify, finite_chain_theorem_check, ClassificationReport, Primality};
pub use coarse::{discretize, refinement_consistency, CircleCorrespondence, MapSpec, PiecewiseAffineMap};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use measure::{FiniteSpace, Partition};
pub use operator::{
    classify_contraction, operator_of, polymorphism_of, verify_axioms, ContractionClass, MarkovOperator,
};
pub use scalar::{q, Rational, Scalar, ScalarRepr, Tolerance};
pub use semigroup::{compose, convex_combine, Polymorphism, Predicates, TransitionKernel};
pub use sim::{dilation_check, empirical_tail_probe, sample, TrajectoryEnsemble};
pub use symbolic::{verify_intertwining, SymbolicSystem, Window};
