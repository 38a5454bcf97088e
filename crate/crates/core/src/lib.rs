//! Time-domain simulation of intentional electromagnetic interference
//! (IEMI) attacks on the control loops of an EV fast-charger converter.
//!
//! The attack chain runs from the attacker's radiator current, through
//! near-field coupling into a victim conductor loop ([`coupling`]), into a
//! clipping ADC that turns RF into a DC reading offset ([`adc`]), into the
//! constant-voltage regulator and averaged converter ([`plant`]), and into
//! gate drivers that can be falsely turned on ([`gate`]). [`engine`] runs
//! scenarios built from these pieces; [`cli`] and [`io`] handle files.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adc;
pub mod cli;
pub mod coupling;
pub mod engine;
pub mod gate;
pub mod io;
pub mod plant;
pub mod quad;
pub mod units;
