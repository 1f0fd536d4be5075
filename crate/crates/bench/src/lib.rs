//! Shared fixtures for the criterion benches.

use resolvent_core::verifier::sample_generator;
use resolvent_core::{Complex64, Generator};

/// The seeded three-atom generator used across benches.
pub fn fixture() -> Generator {
    sample_generator(1, 3, Complex64::new(1.0, 0.0)).expect("valid fixture")
}
