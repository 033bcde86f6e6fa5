//! Tail-generating-function calculus for one-type continuous-time Markov
//! branching processes: truncated-series operator algebra, offspring-law
//! classification, the population pgf `F_t(s)` by ODE / series / integral
//! routes, singularity-extracted π-function quadrature, the limit laws of
//! the three regimes, and an event-driven Monte Carlo simulator for
//! cross-validation.

pub mod error;
pub mod evolve;
pub mod law;
pub mod limits;
pub mod mc;
pub mod nabla;
mod ode;
pub mod pifn;
mod quad;
pub mod series;

pub use error::{Error, Result};
pub use evolve::{DistEvolve, Route, ScalarEvolve};
pub use law::{FixedPoints, LawSpec, OffspringLaw, Regime};
pub use limits::{A0Report, CriticalReport, SubcriticalLimit, SupercriticalLimit};
pub use pifn::PiEvaluator;
pub use series::{AnchorList, MomentReport, TruncatedSeries, Verdict};
