//! The guide in `book/` compiled as doc comments, so `cargo test` runs every
//! code block in it.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}
#[doc = include_str!("../../../book/src/symmetry.md")]
pub mod symmetry {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/reduced.md")]
pub mod reduced {}
#[doc = include_str!("../../../book/src/depth.md")]
pub mod depth {}
#[doc = include_str!("../../../book/src/prediction.md")]
pub mod prediction {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
