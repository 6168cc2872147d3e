//! Spare-parts inventory toolkit.
//!
//! The crate covers the full workflow for bringing a large, mixed-value
//! spare-parts population under differentiated inventory control:
//!
//! 1. [`ahp`] — criterion weights from pairwise-comparison judgments, with
//!    consistency diagnostics.
//! 2. [`classify`] — ABC classification combining weighted qualitative
//!    scores with normalized monetary consumption.
//! 3. [`distfit`] — maximum-likelihood fitting of demand and lead-time
//!    distributions, selected by information criterion.
//! 4. [`demandgen`] — roulette-wheel synthesis of annual and monthly demand
//!    from consumption history.
//! 5. [`simcore`] — discrete-event simulation of a continuous-review
//!    (ROP, ROQ) policy with full cost accounting.
//! 6. [`optimizer`] — simulation-based search for the minimum-cost policy
//!    under common random numbers.
//! 7. [`svclevel`] — analytic reorder points from lead-time demand and
//!    service-level/cost curves.
//! 8. [`pipeline`] — end-to-end orchestration, synthetic datasets, and
//!    reproducible file outputs.
//!
//! Everything stochastic is driven by named, seeded random streams: a run
//! is a pure function of its inputs and master seed.

pub mod ahp;
pub mod classify;
pub mod demandgen;
pub mod distfit;
pub mod optimizer;
pub mod pipeline;
pub mod rng;
pub mod simcore;
pub mod svclevel;
