//! Exact and approximate `p`-Wasserstein distances between discrete measures.
//!
//! [`flow::solve_exact`] solves the transport problem by network simplex.
//! [`barycenter::bar_wp`] routes the mass through `kappa` free hubs, and
//! [`multiscale::approx_wp`] refines the hub clusters into a sparse plan whose
//! cost lies between the two.

pub mod barycenter;
pub mod bench;
pub mod compare;
pub mod error;
pub mod flow;
pub mod io;
pub mod measure;
pub mod multiscale;
pub mod plan;
pub mod report;
pub mod synth;
pub mod transship;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/transshipment.md")]
    mod transshipment {}
    #[doc = include_str!("../../../book/src/multiscale.md")]
    mod multiscale {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
