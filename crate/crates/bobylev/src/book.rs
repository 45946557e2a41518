//! Doctest glue for the guide: every chapter's code blocks compile and run
//! under `cargo test`, keeping the book in sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/measures.md")]
mod measures {}

#[doc = include_str!("../../../book/src/difference-operators.md")]
mod difference_operators {}

#[doc = include_str!("../../../book/src/moment-bounds.md")]
mod moment_bounds {}

#[doc = include_str!("../../../book/src/kernels.md")]
mod kernels {}

#[doc = include_str!("../../../book/src/solver.md")]
mod solver {}

#[doc = include_str!("../../../book/src/diagnostics.md")]
mod diagnostics {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
