// mdbook cannot run listings that depend on workspace crates, so each chapter
// is pulled in as a module doc and `cargo test --doc` runs its code blocks.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/polytopes.md")]
pub mod polytopes {}
#[doc = include_str!("src/constrained-zonotopes.md")]
pub mod constrained_zonotopes {}
#[doc = include_str!("src/ellipsoids.md")]
pub mod ellipsoids {}
#[doc = include_str!("src/approximations.md")]
pub mod approximations {}
#[doc = include_str!("src/reachability.md")]
pub mod reachability {}
#[doc = include_str!("src/command-line.md")]
pub mod command_line {}
#[doc = include_str!("../README.md")]
pub mod readme {}
