//! Closed-form shapes, openings, Cheeger radii, convex-set certificates and
//! calibrations.
//!
//! For a convex set `C`, `C_rho` is its opening by discs of radius `rho` and
//! the Cheeger radius `R` solves `P(C_R) / |C_R| = 1/R`. The certificate
//! `v_C` equals `1/R` on `C_R` and `1/r(x)` on `C \ C_R`, where `x` lies on
//! the boundary of `C_{r(x)}`. For a disc of radius `R0` the Cheeger set is
//! the disc itself, `R = R0/2` and `v_C = (2/R0) 1_C`.

mod calibration;
mod certificate;
mod shape;

pub use calibration::{
    disc_calibration, validation_distances, BoundaryCurve, CurveSample, DiscCalibration,
    OuterCalibration, VALIDATION_D, VALIDATION_D_MAX, VALIDATION_D_MIN, VALIDATION_S,
};
pub use certificate::{
    calibrable_check, cheeger_radius, convex_certificate_v0, convex_certificate_vlambda, opening,
    rasterize, Calibrability,
};
pub use shape::Shape;
