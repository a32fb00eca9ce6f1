//! Edge-rendered VR streaming models: display throughput arithmetic,
//! synthetic traffic, a discrete-event pipeline simulator and trace
//! statistics.

// `!(x >= 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod calibration;
pub mod dist;
pub mod netsim;
pub mod perception;
pub mod rng;
pub mod scenario;
pub mod trace;
pub mod trafficgen;
