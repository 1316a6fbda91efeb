//! Extends partial r-factorizations of `lambda K_m^h` to r-factorizations
//! of `lambda K_n^h` by amalgamating the new vertices into one, coloring the
//! amalgam level by level, and detaching the new vertices one at a time
//! through integral transportation problems.

pub mod amalgam;
pub mod combinatorics;
pub mod detach;
pub mod document;
pub mod generate;
pub mod model;
pub mod pipeline;
pub mod verify;

pub use combinatorics::{binom, bound_holds, Count};
pub use model::{is_admissible, Certificate, EdgeClass, Instance, Parameters, Vertex};
