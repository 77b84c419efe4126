//! Squeezing-level unit conversions.
//!
//! Levels are quoted as `10·log10(variance)` relative to vacuum, so a
//! squeezing parameter `r` (nats) corresponds to `20·r/ln 10` dB.

use std::f64::consts::LN_10;

/// Direction of a dB/nats conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    DbToNats,
    NatsToDb,
}

pub fn db_to_nats(db: f64) -> f64 {
    db * LN_10 / 20.0
}

pub fn nats_to_db(nats: f64) -> f64 {
    nats * 20.0 / LN_10
}

pub fn convert(value: f64, direction: Conversion) -> f64 {
    match direction {
        Conversion::DbToNats => db_to_nats(value),
        Conversion::NatsToDb => nats_to_db(value),
    }
}

/// Quadrature variance (shot-noise units) expressed in dB.
pub fn variance_to_db(variance: f64) -> f64 {
    10.0 * variance.log10()
}

/// Inverse of [`variance_to_db`].
pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
