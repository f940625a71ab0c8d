//! Encodings of linear integer constraints into CNF.

pub mod cnf;
pub mod encode;
pub mod logadder;
pub mod mdd;
pub mod model;
pub mod netblocks;
pub mod preproc;
pub mod sn;
pub mod solve;
pub mod support;
pub mod verify;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/cnf.md")]
    mod cnf {}
    #[doc = include_str!("../../../book/src/variables.md")]
    mod variables {}
    #[doc = include_str!("../../../book/src/mdd.md")]
    mod mdd {}
    #[doc = include_str!("../../../book/src/sorting-networks.md")]
    mod sorting_networks {}
    #[doc = include_str!("../../../book/src/checking.md")]
    mod checking {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
