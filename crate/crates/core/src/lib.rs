pub mod error;
pub mod evolve;
pub mod hilbert;
pub mod linalg;
pub mod lindblad;
pub mod superop;
pub mod symbol;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/symbols.md")]
    mod symbols {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/superoperators.md")]
    mod superoperators {}
    #[doc = include_str!("../../../book/src/dissipative.md")]
    mod dissipative {}
    #[doc = include_str!("../../../book/src/lindblad.md")]
    mod lindblad {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
