//! Shared fixtures for the criterion benches.

use branchkit::OffspringLaw;

pub fn supercritical_explicit() -> OffspringLaw {
    OffspringLaw::explicit(vec![0.2, 0.3, 0.5], 1.0).unwrap()
}

pub fn supercritical_lf() -> OffspringLaw {
    OffspringLaw::linear_fractional(0.25, 0.25, 1.0).unwrap()
}

pub fn critical_lf() -> OffspringLaw {
    OffspringLaw::linear_fractional(0.5, 0.5, 1.0).unwrap()
}
