pub mod compose;
pub mod discretize;
pub mod error;
pub mod expr;
pub mod rates;
pub mod tensor;
pub mod tree;
pub mod truncate;
pub mod ttn;

pub use compose::{
    component_registry, encode_network, l2_error_bound, linf_error_bound, rank_schedule,
    registry_spec, registry_spec_names, ComponentFunction, CompositionalSpec,
};
pub use discretize::{
    measure_error, measure_error_on_grid, orthonormalize, registry_function,
    sample_coefficients, BasisKind, Evaluable, FunctionHandle, Interpolant, Norm,
    UnivariateBasis, GRID_BUDGET,
};
pub use error::{Error, Result};
pub use rates::{
    fit_rate, hc_alpha_rank_bound, hc_cardinality, predict_complexity, HyperbolicCross,
    PredictModel, PredictParams, PredictorOutput, RateFit,
};
pub use tensor::{numerical_rank, FullTensor, Matricization};
pub use tree::{Branch, DimensionTree, NodeId};
pub use truncate::{
    apply_subspace_projection, error_bound_rhs, project_to_tree, width_profile, BoundMode,
    ProjectionResult, WidthProfile,
};
pub use ttn::{RankAssignment, TreeTensorNetwork};
