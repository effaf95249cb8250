//! Per-degree rationality statuses with their sources.
//!
//! Degrees up to 32 are individually recorded facts; from 33 on every
//! degree except 48 is rational, and the witnessing method is periodic in
//! d mod 3 apart from three exceptional degrees (48 open, 54 via a special
//! construction, 69 via the two-form trick).  Rows whose method is
//! `double-bundle` or `covariant-*` can be re-certified live by the
//! `check-db` / `check-cov` commands; the rest are shipped as citations.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RationalityStatus {
    Rational,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MethodTag {
    #[serde(rename = "trivial")]
    Trivial,
    #[serde(rename = "two-form")]
    TwoForm,
    #[serde(rename = "double-bundle")]
    DoubleBundle,
    #[serde(rename = "covariant-S")]
    CovariantS,
    #[serde(rename = "covariant-T")]
    CovariantT,
    #[serde(rename = "special")]
    Special,
    #[serde(rename = "out-of-scope")]
    OutOfScope,
}

/// One line of the rationality record.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TableRow {
    pub d: u32,
    pub status: RationalityStatus,
    pub method: Option<MethodTag>,
    pub source: String,
    /// Path of a report file when a live run re-certified this row.
    pub certificate: Option<String>,
}

use MethodTag::*;
use RationalityStatus::*;

const TWO_FORM_SOURCE: &str = "two-form trick (Shepherd-Barron), d = 1 mod 4";

fn db_source(d: u32) -> String {
    format!("double-bundle genericity certificate; reproduce with: check-db --d {d}")
}

fn cov_source(d: u32) -> String {
    format!("covariant spanning check; reproduce with: check-cov --d {d}")
}

fn classify(d: u32) -> (RationalityStatus, Option<MethodTag>, String) {
    match d {
        1 | 2 => (Rational, Some(Trivial), "trivial quotient".into()),
        3 => (Rational, Some(Trivial), "moduli space is the affine j-line".into()),
        4 => (Rational, Some(OutOfScope), "Katsylo (plane quartics / genus 3)".into()),
        5 | 9 | 13 | 17 | 21 | 25 | 29 => (Rational, Some(TwoForm), TWO_FORM_SOURCE.into()),
        10 | 30 => (Rational, Some(DoubleBundle), db_source(d)),
        19 | 28 => (
            Rational,
            Some(CovariantS),
            format!("covariant spanning check (also Shepherd-Barron); reproduce with: check-cov --d {d}"),
        ),
        22 | 31 => (Rational, Some(CovariantS), cov_source(d)),
        27 => (
            Rational,
            Some(Special),
            "special equivariant map V(0,27) x (V(11,2) + V(15,0)) -> V(2,14); recorded, not live-verified".into(),
        ),
        6 | 7 | 8 | 11 | 12 | 14 | 15 | 16 | 18 | 20 | 23 | 24 | 26 | 32 | 48 => {
            (Unknown, None, "open".into())
        }
        54 => (
            Rational,
            Some(Special),
            "special equivariant map V(0,54) x (V(11,8) + V(6,3) + V(5,2) + V(3,0)) -> V(0,51); recorded, not live-verified".into(),
        ),
        69 => (Rational, Some(TwoForm), TWO_FORM_SOURCE.into()),
        _ => match d % 3 {
            0 => (Rational, Some(DoubleBundle), db_source(d)),
            1 => (Rational, Some(CovariantS), cov_source(d)),
            _ => (Rational, Some(CovariantT), cov_source(d)),
        },
    }
}

/// The record for one degree.
pub fn row(d: u32) -> Result<TableRow> {
    if d == 0 {
        return Err(Error::InvalidInput("degrees start at 1".into()));
    }
    let (status, method, source) = classify(d);
    Ok(TableRow { d, status, method, source, certificate: None })
}

/// Records for every degree from 1 through `to`.
pub fn rows(to: u32) -> Result<Vec<TableRow>> {
    (1..=to).map(row).collect()
}

/// Degrees up to `to` with no recorded rationality proof.
pub fn unknown_degrees(to: u32) -> Vec<u32> {
    (1..=to)
        .filter(|&d| classify(d).0 == Unknown)
        .collect()
}
