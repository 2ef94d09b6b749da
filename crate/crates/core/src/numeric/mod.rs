//! Numerical cross-checks: pullbacks along closed-form sections,
//! tensor-product Gauss–Legendre quadrature, and the reduced-functional
//! identity.

mod func;
mod functional;
mod quadrature;

pub use func::Func;
pub use functional::{
    base_function, check_section_invariant, compare_reduced_functional, gateaux_check, integrate, pullback,
    pullback_expr, reduce_section, GateauxReport, ReducedComparison, Section, RATIO_FLOOR,
};
pub use quadrature::{integrate_fn, tensor_quadrature, Domain, GaussLegendre, IntegralReport, Region, DEFAULT_NODES};
