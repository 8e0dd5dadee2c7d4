pub mod cli;
pub mod datagen;
pub mod dsl;
pub mod exec;
pub mod records;
pub mod reward;
pub mod scene;
pub mod trainer;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/programs.md")]
    mod programs {}
    #[doc = include_str!("../../../book/src/execution.md")]
    mod execution {}
    #[doc = include_str!("../../../book/src/rewards.md")]
    mod rewards {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
