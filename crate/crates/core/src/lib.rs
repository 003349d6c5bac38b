// SPDX-License-Identifier: Apache-2.0

//! Gender and world-region breakdowns of version-control commit authors,
//! inferred from commit metadata alone (author name, email, timestamp and
//! UTC offset).
//!
//! The crate is organised as a record pipeline:
//!
//! * [`ingest`] parses commit streams, drops implausible author names and
//!   out-of-window timestamps, and deduplicates authors.
//! * [`refdata`] loads the immutable lookup tables (gender classes, name
//!   incidence per place, places, ccTLDs and tz rules).
//! * [`gender`] tokenizes full names and applies the strict-majority vote.
//! * [`geo`] assigns a world region from the email ccTLD, from the UTC
//!   offset combined with name incidence, or from a mix of both.
//! * [`aggregate`] builds yearly cells, female ratios, loess trends and the
//!   exponential growth fit.
//! * [`report`] wires everything into an end-to-end run and renders SVG
//!   charts.
//! * [`synth`] generates synthetic corpora with a ground-truth ledger.

pub mod aggregate;
pub mod civil;
mod error;
pub mod exec;
pub mod gender;
pub mod geo;
pub mod ingest;
pub mod refdata;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
