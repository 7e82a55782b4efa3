//! Numerical analysis of C1 graphs over planar domains in the first
//! Heisenberg group.
//!
//! A graph `z = u(x, y)` together with an offset field `F` and a prescribed
//! p-mean curvature `H` induces, away from the singular set `{grad u + F = 0}`,
//! a unit frame `(N, Nperp)`. This crate evaluates that frame, integrates
//! characteristic and seed curves, checks the second-order equation satisfied
//! by the p-area element `D` along characteristics together with its first
//! integral, detects and classifies singular sets, computes half-integer
//! line-field indices and the associated Euler-characteristic identity, and
//! reconstructs graphs from intrinsic `(V, D, H)` data.
//!
//! The long-form guide lives in `book/`; its code snippets compile and run
//! as doctests of this crate.

pub mod charflow;
pub mod codazzi;
pub mod error;
pub mod expr;
pub mod fields;
pub mod gallery;
pub mod grid;
pub mod index;
pub mod reconstruct;
pub mod singular;

pub use error::{Error, Result};
pub use fields::{FrameSample, PlanarVectorField, Point, ScalarField, SurfaceProblem, Window};

// Book chapters double as doctests so the narrative guide can never drift
// from the API.
#[cfg(doctest)]
mod booktest {
    macro_rules! booktest {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }
    booktest!(ch01, "../../../book/src/ch01_getting_started.md");
    booktest!(ch02, "../../../book/src/ch02_fields_and_frames.md");
    booktest!(ch03, "../../../book/src/ch03_characteristic_curves.md");
    booktest!(ch04, "../../../book/src/ch04_the_curvature_ode.md");
    booktest!(ch05, "../../../book/src/ch05_singular_sets.md");
    booktest!(ch06, "../../../book/src/ch06_line_field_indices.md");
    booktest!(ch07, "../../../book/src/ch07_reconstruction.md");
}
