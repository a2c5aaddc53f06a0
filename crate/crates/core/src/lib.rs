#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cartan;
pub mod config;
pub mod domain;
pub mod error;
pub mod expr;
pub mod fit;
pub mod hilbert;
pub mod nevanlinna;
pub mod quadrature;
pub mod roots;
pub mod theorems;

pub use config::Config;
pub use domain::PuncturedPlane;
pub use error::{Error, Result};
pub use expr::{Expr, MeromorphicFunction};

// Runs the code blocks of the guide as doctests.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/punctured-plane.md")]
    mod punctured_plane {}
    #[doc = include_str!("../../../book/src/functions.md")]
    mod functions {}
    #[doc = include_str!("../../../book/src/nevanlinna.md")]
    mod nevanlinna {}
    #[doc = include_str!("../../../book/src/curves.md")]
    mod curves {}
    #[doc = include_str!("../../../book/src/second-main.md")]
    mod second_main {}
    #[doc = include_str!("../../../book/src/hilbert.md")]
    mod hilbert {}
    #[doc = include_str!("../../../book/src/uniqueness.md")]
    mod uniqueness {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
