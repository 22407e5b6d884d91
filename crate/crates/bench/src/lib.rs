//! Benchmarks for npt-core live in `benches/`. This library only holds the
//! shared fixtures.

use npt_core::TorusShape;

pub fn shape(tau0: f64) -> TorusShape {
    TorusShape::new(1.0, tau0).expect("positive parameters")
}
