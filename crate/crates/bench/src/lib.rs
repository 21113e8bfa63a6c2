//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use rearrange_core::rng;
use rearrange_core::settuple::random::{random_tuple, Kind};
use rearrange_core::settuple::SetTuple;
use rearrange_core::{LinearFamily, MeasureSpec};

pub fn unit_intervals() -> (LinearFamily, MeasureSpec) {
    (LinearFamily::riesz_sobolev(1), MeasureSpec::new(vec![1.0; 3], 1).unwrap())
}

pub fn unit_discs() -> (LinearFamily, MeasureSpec) {
    (LinearFamily::riesz_sobolev(2), MeasureSpec::new(vec![PI; 3], 2).unwrap())
}

pub fn random(spec: &MeasureSpec, kind: Option<Kind>, seed: u64) -> SetTuple {
    let mut r = rng::stream(seed, 0);
    random_tuple(&spec.e, spec.d, kind, &mut r).unwrap()
}
