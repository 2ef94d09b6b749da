//! Jet-bundle structure over a single chart: total derivatives, the
//! Euler-Lagrange operator, horizontal forms and symmetry generators.

mod chart;
mod forms;
mod symmetry;
mod total;
mod transform;

pub use chart::{BundleChart, DEFAULT_ORDER_CAP};
pub use forms::{contract, d_h, wedge, HorizontalForm, SourceForm, TotalVectorField};
pub use symmetry::{form_residual, invariance_residual, is_form_invariant, is_invariant, Generator};
pub use total::{euler_lagrange, total_derivative, total_derivative_multi};
pub use transform::{determinant, jacobian, JetMap};
