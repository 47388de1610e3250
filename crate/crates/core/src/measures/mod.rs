//! Initial measures and the test-function library.

mod function;
mod measure;
mod parse;
mod tabulation;

pub use function::{
    check_integrability, fourier_transform, moment_functional, theorem_prediction, theorem_terms, GaussianBump,
    Integrability, TestFunction,
};
pub use measure::{Atom, FiniteMeasure};
pub use parse::parse_function;
pub use tabulation::{Tabulation, Tail};
