//! Each chapter of the guide becomes the doc comment of an empty module, so
//! `cargo test --doc -p doe-book` compiles and runs every Rust listing in it.
//! One module per chapter keeps failures traceable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/network.md")]
pub mod network {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
#[doc = include_str!("../../../book/src/envelopes.md")]
pub mod envelopes {}
#[doc = include_str!("../../../book/src/robust.md")]
pub mod robust {}
#[doc = include_str!("../../../book/src/pq-charts.md")]
pub mod pq_charts {}
#[doc = include_str!("../../../book/src/shrinkage.md")]
pub mod shrinkage {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
