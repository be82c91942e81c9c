use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DataError;

/// Column names of the reference feature set.
pub mod columns {
    pub const PRICE: &str = "PRICE";
    pub const DATE: &str = "DATE";

    pub const BEDROOM: &str = "BEDROOM";
    pub const BATHROOM: &str = "BATHROOM";
    pub const PARKING: &str = "PARKING";
    pub const LANDSIZE: &str = "LANDSIZE";
    pub const INCOME: &str = "INCOME";
    pub const SA1: &str = "SA1";
    pub const SA2: &str = "SA2";
    pub const SA3: &str = "SA3";
    pub const SA4: &str = "SA4";
    pub const POSTCODE: &str = "POSTCODE";

    pub const PRI_SCH_DIST: &str = "PRI_SCH_DIST";
    pub const SEC_SCH_DIST: &str = "SEC_SCH_DIST";
    pub const NEAR_SCH: &str = "NEAR_SCH";
    pub const PRI_RANK: &str = "PRI_RANK";
    pub const SEC_RANK: &str = "SEC_RANK";

    pub const STATION: &str = "STATION";
    pub const DIST_STAT: &str = "DIST_STAT";
    pub const TIME_STAT: &str = "TIME_STAT";
    pub const DIST_CBD: &str = "DIST_CBD";
    pub const TIME_CBD: &str = "TIME_CBD";
    pub const PDIST_CBD: &str = "PDIST_CBD";
    pub const PTIME_CBD: &str = "PTIME_CBD";

    pub const SHOP: &str = "SHOP";
    pub const HOSPITAL: &str = "HOSPITAL";
    pub const GP: &str = "GP";
    pub const MARKET: &str = "MARKET";
    pub const DIST_SHOP: &str = "DIST_SHOP";
    pub const DIST_HOSP: &str = "DIST_HOSP";
    pub const DIST_GP: &str = "DIST_GP";
    pub const DIST_MARK: &str = "DIST_MARK";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    /// Identifier usable as a task grouping key. Never enters a design matrix.
    Key,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    House,
    Education,
    Transportation,
    Facility,
    Meta,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub kind: FeatureKind,
    pub profile: Profile,
}

impl SchemaEntry {
    pub fn new(name: &str, kind: FeatureKind, profile: Profile) -> Self {
        SchemaEntry {
            name: name.to_string(),
            kind,
            profile,
        }
    }
}

/// Ordered feature schema. `PRICE` and `DATE` are mandatory meta entries; every
/// other entry is a feature stored in [`HouseRecord::values`](super::HouseRecord)
/// in schema order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct FeatureSchema {
    entries: Vec<SchemaEntry>,
    features: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    entries: Vec<SchemaEntry>,
}

impl TryFrom<SchemaRepr> for FeatureSchema {
    type Error = DataError;
    fn try_from(r: SchemaRepr) -> Result<Self, DataError> {
        FeatureSchema::new(r.entries)
    }
}

impl From<FeatureSchema> for SchemaRepr {
    fn from(s: FeatureSchema) -> Self {
        SchemaRepr { entries: s.entries }
    }
}

impl FeatureSchema {
    pub fn new(entries: Vec<SchemaEntry>) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.name.is_empty() || e.name.contains(',') {
                return Err(DataError::InvalidSchema(format!(
                    "invalid column name {:?}",
                    e.name
                )));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(DataError::InvalidSchema(format!(
                    "duplicate column {}",
                    e.name
                )));
            }
        }
        for meta in [columns::PRICE, columns::DATE] {
            match entries.iter().find(|e| e.name == meta) {
                Some(e) if e.profile == Profile::Meta => {}
                Some(_) => {
                    return Err(DataError::InvalidSchema(format!(
                        "{meta} must have the meta profile"
                    )))
                }
                None => return Err(DataError::MissingColumn(meta.to_string())),
            }
        }
        if let Some(e) = entries
            .iter()
            .find(|e| e.profile == Profile::Meta && e.name != columns::PRICE && e.name != columns::DATE)
        {
            return Err(DataError::InvalidSchema(format!(
                "only PRICE and DATE may use the meta profile, found {}",
                e.name
            )));
        }
        let features = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.profile != Profile::Meta)
            .map(|(i, _)| i)
            .collect();
        Ok(FeatureSchema { entries, features })
    }

    /// Full reference schema: house, education, transportation and facility
    /// profiles.
    pub fn melbourne() -> Self {
        use columns::*;
        use FeatureKind::*;
        use Profile::*;
        let e = SchemaEntry::new;
        FeatureSchema::new(vec![
            e(BEDROOM, Numeric, House),
            e(BATHROOM, Numeric, House),
            e(PARKING, Numeric, House),
            e(LANDSIZE, Numeric, House),
            e(INCOME, Numeric, House),
            e(SA1, Key, House),
            e(SA2, Key, House),
            e(SA3, Key, House),
            e(SA4, Key, House),
            e(POSTCODE, Key, House),
            e(PRI_SCH_DIST, Key, Education),
            e(SEC_SCH_DIST, Key, Education),
            e(NEAR_SCH, Key, Education),
            e(PRI_RANK, Numeric, Education),
            e(SEC_RANK, Numeric, Education),
            e(STATION, Key, Transportation),
            e(DIST_STAT, Numeric, Transportation),
            e(TIME_STAT, Numeric, Transportation),
            e(DIST_CBD, Numeric, Transportation),
            e(TIME_CBD, Numeric, Transportation),
            e(PDIST_CBD, Numeric, Transportation),
            e(PTIME_CBD, Numeric, Transportation),
            e(SHOP, Key, Facility),
            e(HOSPITAL, Key, Facility),
            e(GP, Key, Facility),
            e(MARKET, Key, Facility),
            e(DIST_SHOP, Numeric, Facility),
            e(DIST_HOSP, Numeric, Facility),
            e(DIST_GP, Numeric, Facility),
            e(DIST_MARK, Numeric, Facility),
            e(DATE, Key, Meta),
            e(PRICE, Numeric, Meta),
        ])
        .expect("reference schema is valid")
    }

    /// Reference schema restricted to the given numeric features (plus every
    /// key column and the meta columns).
    pub fn melbourne_with_numeric(numeric: &[&str]) -> Result<Self, DataError> {
        let full = Self::melbourne();
        for n in numeric {
            match full.entry(n) {
                Some(e) if e.kind == FeatureKind::Numeric && e.profile != Profile::Meta => {}
                _ => {
                    return Err(DataError::InvalidSchema(format!(
                        "{n} is not a numeric feature of the reference schema"
                    )))
                }
            }
        }
        let entries = full
            .entries
            .into_iter()
            .filter(|e| {
                e.profile == Profile::Meta
                    || e.kind != FeatureKind::Numeric
                    || numeric.contains(&e.name.as_str())
            })
            .collect();
        FeatureSchema::new(entries)
    }

    pub fn entries(&self) -> &[SchemaEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&SchemaEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Non-meta entries, in the order records store their values.
    pub fn features(&self) -> impl Iterator<Item = &SchemaEntry> + '_ {
        self.features.iter().map(move |&i| &self.entries[i])
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Position of a feature inside [`HouseRecord::values`](super::HouseRecord).
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features
            .iter()
            .position(|&i| self.entries[i].name == name)
    }

    pub fn feature(&self, idx: usize) -> &SchemaEntry {
        &self.entries[self.features[idx]]
    }

    /// Value slot of a feature that must have the given kind.
    pub fn require(&self, name: &str, kind: FeatureKind) -> Result<usize, DataError> {
        let idx = self
            .feature_index(name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
        let found = self.feature(idx).kind;
        if found != kind {
            return Err(DataError::InvalidSchema(format!(
                "{name} is {found:?}, expected {kind:?}"
            )));
        }
        Ok(idx)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Categorical => "categorical",
            FeatureKind::Key => "key",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_schema_has_meta_columns() {
        let s = FeatureSchema::melbourne();
        assert_eq!(s.entries().len(), 32);
        assert_eq!(s.n_features(), 30);
        assert!(s.feature_index(columns::PRICE).is_none());
        assert_eq!(s.feature_index(columns::BEDROOM), Some(0));
    }

    #[test]
    fn duplicate_and_missing_columns_rejected() {
        let e = SchemaEntry::new;
        let dup = FeatureSchema::new(vec![
            e("A", FeatureKind::Numeric, Profile::House),
            e("A", FeatureKind::Numeric, Profile::House),
            e(columns::DATE, FeatureKind::Key, Profile::Meta),
            e(columns::PRICE, FeatureKind::Numeric, Profile::Meta),
        ]);
        assert!(matches!(dup, Err(DataError::InvalidSchema(_))));
        let missing = FeatureSchema::new(vec![e(columns::DATE, FeatureKind::Key, Profile::Meta)]);
        match missing {
            Err(DataError::MissingColumn(c)) => assert_eq!(c, "PRICE"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn restricted_schema_keeps_keys() {
        let s = FeatureSchema::melbourne_with_numeric(&[columns::LANDSIZE]).unwrap();
        assert!(s.entry(columns::SA3).is_some());
        assert!(s.entry(columns::BEDROOM).is_none());
        assert!(FeatureSchema::melbourne_with_numeric(&[columns::SA3]).is_err());
    }

    #[test]
    fn schema_serde_validates() {
        let s = FeatureSchema::melbourne();
        let js = serde_json::to_string(&s).unwrap();
        let back: FeatureSchema = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"entries":[{"name":"X","kind":"numeric","profile":"house"}]}"#;
        assert!(serde_json::from_str::<FeatureSchema>(bad).is_err());
    }
}
