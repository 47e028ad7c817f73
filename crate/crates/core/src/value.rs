//! Typed attribute literals and event timestamps.

use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

/// An attribute value literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Str(String),
    Int(i64),
    Dec(f64),
    Bool(bool),
    Instant(DateTime<Utc>),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Int(_) => "integer",
            Value::Dec(_) => "decimal",
            Value::Bool(_) => "boolean",
            Value::Instant(_) => "instant",
        }
    }

    /// Whether `<`, `<=`, `>`, `>=` are meaningful on this literal.
    pub fn is_ordered(&self) -> bool {
        matches!(self, Value::Int(_) | Value::Dec(_) | Value::Instant(_))
    }

    /// Comparison across compatible kinds. Integers and decimals compare
    /// numerically; everything else only within its own kind. `None` means
    /// the two values are incomparable.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Dec(a), Value::Dec(b)) => a.partial_cmp(b),
            (Value::Int(a), Value::Dec(b)) => (*a as f64).partial_cmp(b),
            (Value::Dec(a), Value::Int(b)) => a.partial_cmp(&(*b as f64)),
            (Value::Instant(a), Value::Instant(b)) => Some(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Dec(d) => write!(f, "{}", format_decimal(*d)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Instant(t) => f.write_str(&format_instant(t)),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

/// Decimal rendering that always reads back as a decimal (keeps a `.` or
/// exponent so `1.0` does not turn into the integer `1`).
pub fn format_decimal(d: f64) -> String {
    let s = format!("{d:?}");
    if s.contains(['.', 'e', 'E']) || !d.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

/// Lossless RFC 3339 rendering in UTC.
pub fn format_instant(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Millisecond-precision ISO-8601 rendering used on graph nodes.
pub fn format_instant_millis(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Parses an ISO-8601 instant. Offsets are honoured; naive timestamps are
/// taken as UTC; a bare date means midnight UTC.
pub fn parse_instant(text: &str) -> Option<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%:z", "%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%:z"] {
        if let Ok(t) = DateTime::parse_from_str(text, fmt) {
            return Some(t.with_timezone(&Utc));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

/// Event time: a wall-clock instant for ingested logs, a logical tick for
/// verifier instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timestamp {
    Tick(u64),
    Instant(DateTime<Utc>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    Tick,
    Instant,
}

impl fmt::Display for TimeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeMode::Tick => f.write_str("tick"),
            TimeMode::Instant => f.write_str("instant"),
        }
    }
}

impl Timestamp {
    pub fn mode(&self) -> TimeMode {
        match self {
            Timestamp::Tick(_) => TimeMode::Tick,
            Timestamp::Instant(_) => TimeMode::Instant,
        }
    }

    /// The timestamp as an attribute literal.
    pub fn to_value(&self) -> Value {
        match self {
            Timestamp::Tick(t) => Value::Int(*t as i64),
            Timestamp::Instant(t) => Value::Instant(*t),
        }
    }
}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Stores never mix modes, so the cross-mode arm (ticks first) only exists
/// to make the order total.
impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Timestamp::Tick(a), Timestamp::Tick(b)) => a.cmp(b),
            (Timestamp::Instant(a), Timestamp::Instant(b)) => a.cmp(b),
            (Timestamp::Tick(_), Timestamp::Instant(_)) => Ordering::Less,
            (Timestamp::Instant(_), Timestamp::Tick(_)) => Ordering::Greater,
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Timestamp::Tick(t) => write!(f, "{t}"),
            Timestamp::Instant(t) => f.write_str(&format_instant(t)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_timestamps_are_utc() {
        let a = parse_instant("2012-05-10T08:00:00").unwrap();
        let b = parse_instant("2012-05-10T10:00:00+02:00").unwrap();
        assert_eq!(a, b);
        assert_eq!(format_instant_millis(&a), "2012-05-10T08:00:00.000Z");
    }

    #[test]
    fn bpic_style_offsets_parse() {
        let t = parse_instant("2010-03-31T16:59:42.000+02:00").unwrap();
        assert_eq!(format_instant(&t), "2010-03-31T14:59:42Z");
        assert!(parse_instant("yesterday").is_none());
    }

    #[test]
    fn mixed_numeric_comparison() {
        assert_eq!(Value::Int(2).compare(&Value::Dec(2.5)), Some(Ordering::Less));
        assert_eq!(Value::Str("a".into()).compare(&Value::Int(1)), None);
    }

    #[test]
    fn decimals_keep_their_point() {
        assert_eq!(format_decimal(1.0), "1.0");
        assert_eq!(format_decimal(0.25), "0.25");
        assert_eq!(format_decimal(1e300), "1e300");
    }
}
