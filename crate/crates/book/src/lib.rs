//! The chapters of `book/` as modules, so `cargo test --doc` runs every listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/carriers.md")]
pub mod carriers {}
#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}
#[doc = include_str!("../../../book/src/crossed.md")]
pub mod crossed {}
#[doc = include_str!("../../../book/src/twisted.md")]
pub mod twisted {}
#[doc = include_str!("../../../book/src/moyal.md")]
pub mod moyal {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
