pub mod ast;
pub mod corpus;
pub mod infer;
pub mod metrics;
pub mod models;
pub mod nn;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/flattening.md")]
    mod flattening {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/inference.md")]
    mod inference {}
    #[doc = include_str!("../../../book/src/bleu.md")]
    mod bleu {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
