//! Task definitions and their compact textual form:
//!
//! ```text
//! region:SA3
//! school:primary:1-40
//! station:4000            (distance in metres)
//! station:time:30         (walking time in minutes)
//! facility:2:shop,market
//! intersect(region:SA3, station:4000)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::columns;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLevel {
    Sa1,
    Sa2,
    Sa3,
    Sa4,
    Postcode,
}

impl RegionLevel {
    pub fn column(self) -> &'static str {
        match self {
            RegionLevel::Sa1 => columns::SA1,
            RegionLevel::Sa2 => columns::SA2,
            RegionLevel::Sa3 => columns::SA3,
            RegionLevel::Sa4 => columns::SA4,
            RegionLevel::Postcode => columns::POSTCODE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchoolKind {
    Primary,
    Secondary,
}

impl SchoolKind {
    pub fn district_column(self) -> &'static str {
        match self {
            SchoolKind::Primary => columns::PRI_SCH_DIST,
            SchoolKind::Secondary => columns::SEC_SCH_DIST,
        }
    }

    pub fn rank_column(self) -> &'static str {
        match self {
            SchoolKind::Primary => columns::PRI_RANK,
            SchoolKind::Secondary => columns::SEC_RANK,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StationLimit {
    /// Metres to the nearest station.
    Distance(f64),
    /// Walking minutes to the nearest station.
    Time(f64),
}

impl StationLimit {
    pub fn value(self) -> f64 {
        match self {
            StationLimit::Distance(v) | StationLimit::Time(v) => v,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            StationLimit::Distance(_) => columns::DIST_STAT,
            StationLimit::Time(_) => columns::TIME_STAT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Facility {
    Shop,
    Hospital,
    Gp,
    Market,
}

impl Facility {
    pub fn column(self) -> &'static str {
        match self {
            Facility::Shop => columns::SHOP,
            Facility::Hospital => columns::HOSPITAL,
            Facility::Gp => columns::GP,
            Facility::Market => columns::MARKET,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Facility::Shop => "shop",
            Facility::Hospital => "hospital",
            Facility::Gp => "gp",
            Facility::Market => "market",
        }
    }

    fn parse(s: &str) -> Option<Facility> {
        match s {
            "shop" => Some(Facility::Shop),
            "hospital" => Some(Facility::Hospital),
            "gp" => Some(Facility::Gp),
            "market" => Some(Facility::Market),
            _ => None,
        }
    }
}

/// Rule mapping records to tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TaskDefinition {
    Region(RegionLevel),
    /// One task per district whose school rank lies in `[rank_lo, rank_hi]`.
    School {
        kind: SchoolKind,
        rank_lo: u32,
        rank_hi: u32,
    },
    /// One task per station; a record joins iff it is within the limit.
    Station(StationLimit),
    /// One task per distinct tuple of the named nearest-facility identifiers.
    Facility {
        shared_level: u8,
        kinds: Vec<Facility>,
    },
    /// Pairwise intersection of two non-intersection definitions.
    Intersection(Box<TaskDefinition>, Box<TaskDefinition>),
}

impl TaskDefinition {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            TaskDefinition::Region(_) => Ok(()),
            TaskDefinition::School { rank_lo, rank_hi, .. } => {
                if rank_lo > rank_hi {
                    Err(format!("rank range {rank_lo}-{rank_hi} is empty"))
                } else {
                    Ok(())
                }
            }
            TaskDefinition::Station(limit) => {
                let v = limit.value();
                if v > 0.0 && v.is_finite() {
                    Ok(())
                } else {
                    Err(format!("station limit must be positive, got {v}"))
                }
            }
            TaskDefinition::Facility { shared_level, kinds } => {
                if !(1..=4).contains(shared_level) {
                    return Err(format!("shared level {shared_level} not in 1..=4"));
                }
                if kinds.len() != *shared_level as usize {
                    return Err(format!(
                        "shared level {shared_level} needs {shared_level} facility kinds, got {}",
                        kinds.len()
                    ));
                }
                let mut sorted = kinds.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != kinds.len() {
                    return Err("facility kinds must be distinct".into());
                }
                Ok(())
            }
            TaskDefinition::Intersection(a, b) => {
                for op in [a, b] {
                    if matches!(**op, TaskDefinition::Intersection(..)) {
                        return Err("intersections combine exactly two simple definitions".into());
                    }
                    op.validate()?;
                }
                Ok(())
            }
        }
    }

    /// Key columns whose values identify this definition's tasks.
    pub fn key_columns(&self) -> Vec<&'static str> {
        match self {
            TaskDefinition::Region(level) => vec![level.column()],
            TaskDefinition::School { kind, .. } => vec![kind.district_column()],
            TaskDefinition::Station(_) => vec![columns::STATION],
            TaskDefinition::Facility { kinds, .. } => kinds.iter().map(|k| k.column()).collect(),
            TaskDefinition::Intersection(a, b) => {
                let mut v = a.key_columns();
                for c in b.key_columns() {
                    if !v.contains(&c) {
                        v.push(c);
                    }
                }
                v
            }
        }
    }
}

impl fmt::Display for TaskDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskDefinition::Region(level) => {
                let l = match level {
                    RegionLevel::Sa1 => "SA1",
                    RegionLevel::Sa2 => "SA2",
                    RegionLevel::Sa3 => "SA3",
                    RegionLevel::Sa4 => "SA4",
                    RegionLevel::Postcode => "POSTCODE",
                };
                write!(f, "region:{l}")
            }
            TaskDefinition::School { kind, rank_lo, rank_hi } => {
                let k = match kind {
                    SchoolKind::Primary => "primary",
                    SchoolKind::Secondary => "secondary",
                };
                write!(f, "school:{k}:{rank_lo}-{rank_hi}")
            }
            TaskDefinition::Station(StationLimit::Distance(d)) => write!(f, "station:{d}"),
            TaskDefinition::Station(StationLimit::Time(t)) => write!(f, "station:time:{t}"),
            TaskDefinition::Facility { shared_level, kinds } => {
                let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
                write!(f, "facility:{shared_level}:{}", names.join(","))
            }
            TaskDefinition::Intersection(a, b) => write!(f, "intersect({a}, {b})"),
        }
    }
}

/// Malformed definition text; `position` is a 0-based character offset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at column {}: {}", self.position + 1, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, at: usize, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: at,
            message: msg.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), ParseError> {
        if self.eat(lit) {
            Ok(())
        } else {
            self.err(self.pos, format!("expected '{lit}'"))
        }
    }

    /// Longest run of characters matching `pred`.
    fn token(&mut self, pred: impl Fn(char) -> bool) -> (usize, &'a str) {
        let start = self.pos;
        let len = self
            .rest()
            .char_indices()
            .find(|(_, c)| !pred(*c))
            .map(|(i, _)| i)
            .unwrap_or(self.rest().len());
        self.pos += len;
        (start, &self.src[start..start + len])
    }

    fn word(&mut self) -> (usize, &'a str) {
        self.token(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let (at, tok) = self.token(|c| c.is_ascii_digit() || c == '.');
        if tok.is_empty() {
            return self.err(at, "expected a number");
        }
        tok.parse().or_else(|_| self.err(at, format!("invalid number '{tok}'")))
    }

    fn integer(&mut self) -> Result<u32, ParseError> {
        let (at, tok) = self.token(|c| c.is_ascii_digit());
        if tok.is_empty() {
            return self.err(at, "expected an integer");
        }
        tok.parse().or_else(|_| self.err(at, format!("invalid integer '{tok}'")))
    }

    fn definition(&mut self) -> Result<TaskDefinition, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.eat("intersect") {
            self.skip_ws();
            self.expect("(")?;
            let a_at = self.pos;
            let a = self.simple()?;
            self.skip_ws();
            self.expect(",")?;
            self.skip_ws();
            let b_at = self.pos;
            let b = self.simple()?;
            self.skip_ws();
            self.expect(")")?;
            for (at, op) in [(a_at, &a), (b_at, &b)] {
                if let Err(m) = op.validate() {
                    return self.err(at, m);
                }
            }
            let def = TaskDefinition::Intersection(Box::new(a), Box::new(b));
            def.validate().or_else(|m| self.err(start, m))?;
            Ok(def)
        } else {
            let def = self.simple()?;
            def.validate().or_else(|m| self.err(start, m))?;
            Ok(def)
        }
    }

    fn simple(&mut self) -> Result<TaskDefinition, ParseError> {
        self.skip_ws();
        let (at, head) = self.word();
        match head {
            "region" => {
                self.expect(":")?;
                let (lat, level) = self.word();
                let level = match level.to_ascii_uppercase().as_str() {
                    "SA1" => RegionLevel::Sa1,
                    "SA2" => RegionLevel::Sa2,
                    "SA3" => RegionLevel::Sa3,
                    "SA4" => RegionLevel::Sa4,
                    "POSTCODE" => RegionLevel::Postcode,
                    other => return self.err(lat, format!("unknown region level '{other}'")),
                };
                Ok(TaskDefinition::Region(level))
            }
            "school" => {
                self.expect(":")?;
                let (kat, kind) = self.word();
                let kind = match kind {
                    "primary" => SchoolKind::Primary,
                    "secondary" => SchoolKind::Secondary,
                    other => return self.err(kat, format!("unknown school kind '{other}'")),
                };
                self.expect(":")?;
                let rat = self.pos;
                let lo = self.integer()?;
                self.expect("-")?;
                let hi = self.integer()?;
                if lo > hi {
                    return self.err(rat, format!("rank range {lo}-{hi} is empty"));
                }
                Ok(TaskDefinition::School {
                    kind,
                    rank_lo: lo,
                    rank_hi: hi,
                })
            }
            "station" => {
                self.expect(":")?;
                let time = self.eat("time:");
                let nat = self.pos;
                let v = self.number()?;
                if v <= 0.0 {
                    return self.err(nat, "station limit must be positive");
                }
                Ok(TaskDefinition::Station(if time {
                    StationLimit::Time(v)
                } else {
                    StationLimit::Distance(v)
                }))
            }
            "facility" => {
                self.expect(":")?;
                let lat = self.pos;
                let level = self.integer()?;
                if !(1..=4).contains(&level) {
                    return self.err(lat, format!("shared level {level} not in 1..=4"));
                }
                self.expect(":")?;
                let mut kinds = Vec::new();
                loop {
                    let (fat, name) = self.word();
                    match Facility::parse(name) {
                        Some(k) if !kinds.contains(&k) => kinds.push(k),
                        Some(_) => return self.err(fat, format!("duplicate facility '{name}'")),
                        None => return self.err(fat, format!("unknown facility '{name}'")),
                    }
                    // a comma continues the list only when a facility name follows
                    let save = self.pos;
                    self.skip_ws();
                    if self.eat(",") {
                        self.skip_ws();
                        let mut probe = Cursor { src: self.src, pos: self.pos };
                        if Facility::parse(probe.word().1).is_some() {
                            continue;
                        }
                    }
                    self.pos = save;
                    break;
                }
                if kinds.len() != level as usize {
                    return self.err(
                        lat,
                        format!("shared level {level} needs {level} facility kinds, got {}", kinds.len()),
                    );
                }
                Ok(TaskDefinition::Facility {
                    shared_level: level as u8,
                    kinds,
                })
            }
            "" => self.err(at, "expected a task definition"),
            other => self.err(at, format!("unknown task definition '{other}'")),
        }
    }
}

impl FromStr for TaskDefinition {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut c = Cursor { src: s, pos: 0 };
        let def = c.definition()?;
        c.skip_ws();
        if c.pos != s.len() {
            return c.err(c.pos, "unexpected trailing input");
        }
        Ok(def)
    }
}

impl TryFrom<String> for TaskDefinition {
    type Error = ParseError;
    fn try_from(s: String) -> Result<Self, ParseError> {
        s.parse()
    }
}

impl From<TaskDefinition> for String {
    fn from(d: TaskDefinition) -> String {
        d.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let cases = [
            "region:SA3",
            "region:POSTCODE",
            "school:primary:1-40",
            "school:secondary:1-30",
            "station:4000",
            "station:time:30",
            "facility:1:market",
            "facility:2:shop,market",
            "facility:4:shop,hospital,gp,market",
            "intersect(region:SA3, station:4000)",
            "intersect(facility:2:shop,market, school:primary:1-40)",
        ];
        for c in cases {
            let d: TaskDefinition = c.parse().unwrap_or_else(|e| panic!("{c}: {e}"));
            assert_eq!(d.to_string(), c);
        }
    }

    #[test]
    fn whitespace_tolerated() {
        let d: TaskDefinition = " intersect( region:sa3 ,facility:2:shop, market ) ".parse().unwrap();
        assert_eq!(d.to_string(), "intersect(region:SA3, facility:2:shop,market)");
    }

    #[test]
    fn errors_carry_positions() {
        let cases = [
            ("regio:SA3", 0),
            ("region:SA9", 7),
            ("school:primary:40-1", 15),
            ("school:tertiary:1-4", 7),
            ("station:-5", 8),
            ("station:0", 8),
            ("facility:2:shop", 9),
            ("facility:5:shop", 9),
            ("facility:1:pool", 11),
            ("facility:2:shop,shop", 16),
            ("intersect(region:SA3 station:4000)", 21),
            ("intersect(intersect(region:SA3, station:1), region:SA4)", 10),
            ("region:SA3 extra", 11),
            ("", 0),
        ];
        for (text, pos) in cases {
            let err = text.parse::<TaskDefinition>().unwrap_err();
            assert_eq!(err.position, pos, "{text}: {err}");
            assert!(err.to_string().starts_with(&format!("at column {}", pos + 1)));
        }
    }

    #[test]
    fn validation_rules() {
        let bad = TaskDefinition::Facility {
            shared_level: 2,
            kinds: vec![Facility::Shop],
        };
        assert!(bad.validate().is_err());
        let nested = TaskDefinition::Intersection(
            Box::new(TaskDefinition::Region(RegionLevel::Sa3)),
            Box::new(TaskDefinition::Intersection(
                Box::new(TaskDefinition::Region(RegionLevel::Sa3)),
                Box::new(TaskDefinition::Region(RegionLevel::Sa4)),
            )),
        );
        assert!(nested.validate().is_err());
        assert!(TaskDefinition::Station(StationLimit::Distance(0.0)).validate().is_err());
    }

    #[test]
    fn key_columns() {
        let d: TaskDefinition = "intersect(region:SA3, facility:2:shop,market)".parse().unwrap();
        assert_eq!(d.key_columns(), vec!["SA3", "SHOP", "MARKET"]);
    }
}
