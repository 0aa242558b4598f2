//! The guide in `book/`, one module per chapter, so that `cargo test` runs
//! every snippet.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/schmidt.md")]
pub mod schmidt {}
#[doc = include_str!("../../../book/src/detectability.md")]
pub mod detectability {}
#[doc = include_str!("../../../book/src/chebyshev.md")]
pub mod chebyshev {}
#[doc = include_str!("../../../book/src/agsp.md")]
pub mod agsp {}
#[doc = include_str!("../../../book/src/combinatorics.md")]
pub mod combinatorics {}
#[doc = include_str!("../../../book/src/params.md")]
pub mod params {}
#[doc = include_str!("../../../book/src/mps.md")]
pub mod mps {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
