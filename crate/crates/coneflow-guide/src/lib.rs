//! Doc-test harness for the book under `book/`.
//!
//! mdbook cannot run code blocks against crate dependencies, so each chapter
//! is included here as module documentation and `cargo test --doc` checks
//! every snippet. One module per chapter keeps failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/cone-and-modules.md")]
pub mod cone_and_modules {}

#[doc = include_str!("../../../book/src/fock-calculus.md")]
pub mod fock_calculus {}

#[doc = include_str!("../../../book/src/multipliers.md")]
pub mod multipliers {}

#[doc = include_str!("../../../book/src/cocycles-and-units.md")]
pub mod cocycles_and_units {}

#[doc = include_str!("../../../book/src/intertwiners.md")]
pub mod intertwiners {}

#[doc = include_str!("../../../book/src/gauge-group.md")]
pub mod gauge_group {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
