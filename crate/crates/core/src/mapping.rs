//! Maps raw scores in [0,1] onto an integer relevance scale 0..=max_value.
//!
//! Three mappings: linear, logarithmic with a clamping floor, and per-subject
//! range normalization. All ties are broken by rounding half up.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scoring::ScoreRecord;

pub const DEFAULT_MAX_VALUE: u8 = 7;
pub const DEFAULT_LOG_FLOOR: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("raw score {0} outside [0,1]")]
    RawOutOfRange(f64),
    #[error("non-finite raw score {0}")]
    NonFinite(f64),
    #[error("empty raw-score array")]
    EmptyArray,
    #[error("invalid mapping spec: {0}")]
    InvalidSpec(String),
    #[error("subject {subject:?}: {source}")]
    Subject {
        subject: String,
        #[source]
        source: Box<MapError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Lin,
    Log,
    Range,
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapKind::Lin => "lin",
            MapKind::Log => "log",
            MapKind::Range => "range",
        })
    }
}

impl FromStr for MapKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lin" => Ok(MapKind::Lin),
            "log" => Ok(MapKind::Log),
            "range" => Ok(MapKind::Range),
            other => Err(format!(
                "unknown mapping {other:?} (expected lin, log, or range)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingSpec {
    pub kind: MapKind,
    pub max_value: u8,
    pub log_floor: f64,
}

impl Default for MappingSpec {
    fn default() -> Self {
        MappingSpec {
            kind: MapKind::Lin,
            max_value: DEFAULT_MAX_VALUE,
            log_floor: DEFAULT_LOG_FLOOR,
        }
    }
}

impl MappingSpec {
    pub fn new(kind: MapKind) -> Self {
        MappingSpec {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MapError> {
        if self.max_value == 0 {
            return Err(MapError::InvalidSpec("max_value must be >= 1".into()));
        }
        if !(self.log_floor > 0.0 && self.log_floor < 1.0) {
            return Err(MapError::InvalidSpec(format!(
                "log_floor must lie in (0,1), got {}",
                self.log_floor
            )));
        }
        Ok(())
    }
}

/// Rounds with .5 going up: 3.5 -> 4. `f64::round` rounds half away from
/// zero, which differs for negatives, so spell it out.
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

fn check_unit_interval(raw: f64) -> Result<(), MapError> {
    if !raw.is_finite() {
        return Err(MapError::NonFinite(raw));
    }
    if !(0.0..=1.0).contains(&raw) {
        return Err(MapError::RawOutOfRange(raw));
    }
    Ok(())
}

/// `round_half_up(raw * max_value)`.
pub fn map_lin(raw: f64, max_value: u8) -> Result<u8, MapError> {
    check_unit_interval(raw)?;
    let mapped = round_half_up(raw * f64::from(max_value));
    Ok(mapped.clamp(0.0, f64::from(max_value)) as u8)
}

/// Log-scale mapping: raw is clamped to [log_floor, 1], then scored as
/// `max_value * (1 - ln(raw)/ln(log_floor))`, rounded half up. The floor
/// keeps near-zero scores from collapsing the scale.
pub fn map_log(raw: f64, max_value: u8, log_floor: f64) -> Result<u8, MapError> {
    check_unit_interval(raw)?;
    if !(log_floor > 0.0 && log_floor < 1.0) {
        return Err(MapError::InvalidSpec(format!(
            "log_floor must lie in (0,1), got {log_floor}"
        )));
    }
    let clamped = raw.clamp(log_floor, 1.0);
    let score = f64::from(max_value) * (1.0 - clamped.ln() / log_floor.ln());
    let mapped = round_half_up(score);
    Ok(mapped.clamp(0.0, f64::from(max_value)) as u8)
}

/// Range normalization over a subject's raw scores:
/// `max_value * (raw - min(A)) / (max(A) - min(A))`, not yet rounded.
///
/// If all entries of `all_raws` are equal every raw maps to `max_value`.
/// The result is a fraction; rounding is a separate final step. The formula
/// is invariant under affine transforms of the inputs, so no [0,1] check.
pub fn map_range(all_raws: &[f64], raw: f64, max_value: u8) -> Result<f64, MapError> {
    if all_raws.is_empty() {
        return Err(MapError::EmptyArray);
    }
    if !raw.is_finite() {
        return Err(MapError::NonFinite(raw));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &r in all_raws {
        if !r.is_finite() {
            return Err(MapError::NonFinite(r));
        }
        min = min.min(r);
        max = max.max(r);
    }
    if min == max {
        return Ok(f64::from(max_value));
    }
    // ratio first: raw == max divides d by itself, making the top endpoint
    // exactly max_value
    Ok(f64::from(max_value) * ((raw - min) / (max - min)))
}

/// Fills `mapped` on every record according to `spec`.
///
/// Range mapping normalizes each subject over all of its records in the
/// slice, wherever they appear; lin and log are pointwise. Errors carry the
/// offending subject.
pub fn apply_mapping(records: &mut [ScoreRecord], spec: &MappingSpec) -> Result<(), MapError> {
    spec.validate()?;
    let for_subject = |subject: &str, e: MapError| MapError::Subject {
        subject: subject.to_string(),
        source: Box::new(e),
    };
    match spec.kind {
        MapKind::Lin => {
            for r in records.iter_mut() {
                r.mapped =
                    map_lin(r.raw, spec.max_value).map_err(|e| for_subject(&r.subject, e))?;
            }
        }
        MapKind::Log => {
            for r in records.iter_mut() {
                r.mapped = map_log(r.raw, spec.max_value, spec.log_floor)
                    .map_err(|e| for_subject(&r.subject, e))?;
            }
        }
        MapKind::Range => {
            let mut by_subject: HashMap<&str, Vec<f64>> = HashMap::new();
            for r in records.iter() {
                check_unit_interval(r.raw).map_err(|e| for_subject(&r.subject, e))?;
                by_subject.entry(r.subject.as_str()).or_default().push(r.raw);
            }
            let mut mapped = Vec::with_capacity(records.len());
            for r in records.iter() {
                let raws = &by_subject[r.subject.as_str()];
                let v = map_range(raws, r.raw, spec.max_value)
                    .map_err(|e| for_subject(&r.subject, e))?;
                let m = round_half_up(v).clamp(0.0, f64::from(spec.max_value)) as u8;
                mapped.push(m);
            }
            for (r, m) in records.iter_mut().zip(mapped) {
                r.mapped = m;
            }
        }
    }
    Ok(())
}
