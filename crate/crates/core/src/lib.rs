//! Order verification, linear stability analysis, fixed-step integration and
//! local coefficient refinement for high-order diagonally implicit
//! Runge–Kutta schemes.

pub mod conditions;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod linalg;
pub mod poly;
pub mod problems;
pub mod refine;
pub mod scalar;
pub mod stability;
pub mod tableau;
pub mod trees;

pub use error::{
    HarnessError, IntegrationError, LinalgError, ProblemError, RefineError, StabilityError,
    StepError, TableauError, TreeOrderError,
};
pub use tableau::ButcherTableau;

pub type Tableau = tableau::ButcherTableau<f64>;
pub type Tableau32 = tableau::ButcherTableau<f32>;
pub type Polynomials = stability::StabilityPolynomials<f64>;
pub type StabilityReport = stability::StabilityReport<f64>;
pub type StepperConfig = integrator::StepperConfig<f64>;
pub type OrderReport = conditions::OrderReport<f64>;
