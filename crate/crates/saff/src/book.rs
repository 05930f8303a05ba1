// The guide's code listings double as doctests: each chapter is included as
// a module doc, so `cargo test --doc` compiles and runs every snippet and
// the book cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/fairness-notions.md")]
mod fairness_notions {}

#[doc = include_str!("../../../book/src/feedback-model.md")]
mod feedback_model {}

#[doc = include_str!("../../../book/src/learning.md")]
mod learning {}

#[doc = include_str!("../../../book/src/simulation.md")]
mod simulation {}

#[doc = include_str!("../../../book/src/data-formats.md")]
mod data_formats {}
