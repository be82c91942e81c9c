use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schema::{FeatureKind, FeatureSchema};
use super::DataError;
use crate::Scalar;

/// Calendar month as a count of months since January of year 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Month(pub i32);

impl Month {
    pub fn from_ym(year: i32, month: u32) -> Month {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Month(year * 12 + month as i32 - 1)
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn offset(self, months: i32) -> Month {
        Month(self.0 + months)
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for Month {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| format!("expected YYYY-MM, got {s:?}"))?;
        if y.len() != 4 || m.len() != 2 {
            return Err(format!("expected YYYY-MM, got {s:?}"));
        }
        let year: i32 = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in {s:?}"))?;
        if !(1..=12).contains(&month) {
            return Err(format!("month out of range in {s:?}"));
        }
        Ok(Month::from_ym(year, month))
    }
}

impl From<Month> for String {
    fn from(m: Month) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Month {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Inclusive range of months.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonthRange {
    pub first: Month,
    pub last: Month,
}

impl MonthRange {
    pub fn new(first: Month, last: Month) -> Self {
        MonthRange { first, last }
    }

    pub fn single(m: Month) -> Self {
        MonthRange { first: m, last: m }
    }

    pub fn contains(&self, m: Month) -> bool {
        self.first <= m && m <= self.last
    }

    /// Number of months covered; zero when `last < first`.
    pub fn len(&self) -> usize {
        (self.last.0 - self.first.0 + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for MonthRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.first, self.last)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Label(String),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            Value::Num(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Label(s) => f.write_str(s),
        }
    }
}

/// One sold house. `values` follows the schema's feature order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HouseRecord {
    pub sale_month: Month,
    pub values: Vec<Value>,
    pub price: f64,
}

impl HouseRecord {
    pub fn num(&self, idx: usize) -> f64 {
        self.values[idx]
            .as_num()
            .expect("numeric slot validated at construction")
    }

    pub fn label(&self, idx: usize) -> &str {
        self.values[idx]
            .as_label()
            .expect("label slot validated at construction")
    }

    fn validate(&self, schema: &FeatureSchema) -> Result<(), String> {
        if self.values.len() != schema.n_features() {
            return Err(format!(
                "record has {} values, schema has {} features",
                self.values.len(),
                schema.n_features()
            ));
        }
        for (v, e) in self.values.iter().zip(schema.features()) {
            match (e.kind, v) {
                (FeatureKind::Numeric, Value::Num(x)) if x.is_finite() => {}
                (FeatureKind::Numeric, Value::Num(x)) => {
                    return Err(format!("{} is not finite: {x}", e.name))
                }
                (FeatureKind::Numeric, Value::Label(_)) => {
                    return Err(format!("{} must be numeric", e.name))
                }
                (_, Value::Label(_)) => {}
                (_, Value::Num(_)) => return Err(format!("{} must be a label", e.name)),
            }
        }
        if !(self.price > 0.0 && self.price.is_finite()) {
            return Err(format!("price must be positive, got {}", self.price));
        }
        Ok(())
    }
}

/// Immutable collection of records sorted by sale month.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: FeatureSchema,
    records: Vec<HouseRecord>,
    month_range: MonthRange,
}

impl Dataset {
    /// Validates every record and sorts by sale month (stable).
    pub fn new(schema: FeatureSchema, mut records: Vec<HouseRecord>) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::Empty);
        }
        for (i, r) in records.iter().enumerate() {
            r.validate(&schema)
                .map_err(|m| DataError::InvalidRecord { index: i, message: m })?;
        }
        records.sort_by_key(|r| r.sale_month);
        let month_range = MonthRange::new(
            records.first().unwrap().sale_month,
            records.last().unwrap().sale_month,
        );
        Ok(Dataset {
            schema,
            records,
            month_range,
        })
    }

    /// Like [`Dataset::new`] but with an explicit month range, which may be
    /// wider than the months actually observed.
    pub fn with_month_range(
        schema: FeatureSchema,
        records: Vec<HouseRecord>,
        month_range: MonthRange,
    ) -> Result<Self, DataError> {
        let mut ds = Dataset::new(schema, records)?;
        if !month_range.contains(ds.month_range.first) || !month_range.contains(ds.month_range.last)
        {
            return Err(DataError::InvalidRecord {
                index: 0,
                message: format!("records fall outside month range {month_range}"),
            });
        }
        ds.month_range = month_range;
        Ok(ds)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn records(&self) -> &[HouseRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn month_range(&self) -> MonthRange {
        self.month_range
    }

    pub fn record(&self, i: usize) -> &HouseRecord {
        &self.records[i]
    }
}

/// Semi-log target: natural logarithm of a positive price.
pub fn log_target<F: Scalar>(price: F) -> Result<F, DataError> {
    if price > F::zero() && price.is_finite() {
        Ok(price.ln())
    } else {
        Err(DataError::NonPositivePrice(price.to_f64_lossy()))
    }
}
