//! Calibrated synthetic datasets with planted multi-task structure.
//!
//! Numeric features are drawn uniformly inside the observed min/max of the
//! reference data. Each planted task `p` owns the region code `SA3-<p>` and a
//! coefficient vector `w_p`; log-prices are `u · w_p + noise`, where `u` is the
//! planted design row from [`planted_design_row`].

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, HouseRecord, Month, Value};
use super::schema::{columns, FeatureKind, FeatureSchema};
use super::DataError;
use crate::solver::WeightMatrix;

/// Numeric feature ranges of the reference data: (name, min, max, integral).
pub const NUMERIC_RANGES: [(&str, f64, f64, bool); 17] = [
    (columns::BEDROOM, 1.0, 5.0, true),
    (columns::BATHROOM, 1.0, 3.0, true),
    (columns::PARKING, 1.0, 5.0, true),
    (columns::LANDSIZE, 340.0, 2500.0, false),
    (columns::INCOME, 935.0, 2836.0, false),
    (columns::PRI_RANK, 3.0, 500.0, true),
    (columns::SEC_RANK, 1.0, 500.0, true),
    (columns::DIST_STAT, 23.0, 5040.0, false),
    (columns::TIME_STAT, 1.0, 126.0, false),
    (columns::DIST_CBD, 1300.0, 82600.0, false),
    (columns::TIME_CBD, 6.0, 101.0, false),
    (columns::PDIST_CBD, 1245.0, 83497.0, false),
    (columns::PTIME_CBD, 10.0, 120.0, false),
    (columns::DIST_SHOP, 5.0, 4999.0, false),
    (columns::DIST_HOSP, 15.0, 5000.0, false),
    (columns::DIST_GP, 8.0, 4999.0, false),
    (columns::DIST_MARK, 25.0, 5000.0, false),
];

/// Median sale price of the reference data, used as the planted base price.
pub const MEDIAN_PRICE: f64 = 680_540.0;

pub fn numeric_range(name: &str) -> Option<(f64, f64, bool)> {
    NUMERIC_RANGES
        .iter()
        .find(|(n, ..)| *n == name)
        .map(|&(_, lo, hi, int)| (lo, hi, int))
}

/// Records per task per month, drawn uniformly from `[min, max]`. The first
/// `starved_tasks` tasks draw from `[starved_min, starved_max]` instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCounts {
    pub min_per_month: usize,
    pub max_per_month: usize,
    #[serde(default)]
    pub starved_tasks: usize,
    #[serde(default)]
    pub starved_min: usize,
    #[serde(default)]
    pub starved_max: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            min_per_month: 10,
            max_per_month: 20,
            starved_tasks: 0,
            starved_min: 0,
            starved_max: 0,
        }
    }
}

/// Sizes of the identifier pools for the key columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyPools {
    pub stations: usize,
    pub school_districts: usize,
    pub nearest_schools: usize,
    pub shops: usize,
    pub hospitals: usize,
    pub gps: usize,
    pub markets: usize,
}

impl Default for KeyPools {
    fn default() -> Self {
        KeyPools {
            stations: 40,
            school_districts: 100,
            nearest_schools: 500,
            shops: 30,
            hospitals: 20,
            gps: 60,
            markets: 30,
        }
    }
}

fn default_start() -> Month {
    Month::from_ym(2014, 10)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_tasks: usize,
    /// Number of numeric features, taken in reference order from
    /// [`NUMERIC_RANGES`].
    pub n_features: usize,
    pub samples: SampleCounts,
    pub months: usize,
    #[serde(default = "default_start")]
    pub start_month: Month,
    pub shared_support_size: usize,
    pub coefficient_noise: f64,
    pub observation_noise: f64,
    pub seed: u64,
    #[serde(default)]
    pub pools: KeyPools,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_tasks: 20,
            n_features: 8,
            samples: SampleCounts::default(),
            months: 39,
            start_month: default_start(),
            shared_support_size: 5,
            coefficient_noise: 0.05,
            observation_noise: 0.1,
            seed: 0,
            pools: KeyPools::default(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidConfig(m));
        if self.n_tasks == 0 || self.n_features == 0 || self.months == 0 {
            return bad("n_tasks, n_features and months must be at least 1".into());
        }
        if self.n_features > NUMERIC_RANGES.len() {
            return bad(format!(
                "n_features = {} exceeds the {} available numeric features",
                self.n_features,
                NUMERIC_RANGES.len()
            ));
        }
        if self.shared_support_size == 0 || self.shared_support_size > self.n_features {
            return bad("shared_support_size must be in 1..=n_features".into());
        }
        if !(self.coefficient_noise >= 0.0 && self.coefficient_noise.is_finite())
            || !(self.observation_noise >= 0.0 && self.observation_noise.is_finite())
        {
            return bad("noise parameters must be finite and >= 0".into());
        }
        let s = &self.samples;
        if s.min_per_month == 0 || s.min_per_month > s.max_per_month {
            return bad("samples: need 1 <= min_per_month <= max_per_month".into());
        }
        if s.starved_tasks >= self.n_tasks && s.starved_tasks > 0 {
            return bad("samples: starved_tasks must leave at least one regular task".into());
        }
        if s.starved_tasks > 0 && s.starved_min > s.starved_max {
            return bad("samples: starved_min must not exceed starved_max".into());
        }
        let p = &self.pools;
        if [p.stations, p.school_districts, p.nearest_schools, p.shops, p.hospitals, p.gps, p.markets]
            .contains(&0)
        {
            return bad("pools must be non-empty".into());
        }
        if p.school_districts > 498 {
            return bad("school_districts must not exceed the number of distinct ranks".into());
        }
        Ok(())
    }

    pub fn numeric_features(&self) -> Vec<&'static str> {
        NUMERIC_RANGES[..self.n_features.min(NUMERIC_RANGES.len())]
            .iter()
            .map(|r| r.0)
            .collect()
    }

    pub fn schema(&self) -> Result<FeatureSchema, DataError> {
        FeatureSchema::melbourne_with_numeric(&self.numeric_features())
    }
}

/// Planted coefficients: rows follow the schema's numeric features, then a
/// trailing intercept row; columns are the planted tasks (`SA3-<p>`).
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedModel {
    pub feature_names: Vec<String>,
    pub weights: WeightMatrix<f64>,
}

/// Region label owning planted task `p`.
pub fn planted_task_label(p: usize) -> String {
    format!("SA3-{p:03}")
}

/// Planted design row of a record: each numeric feature mapped linearly from
/// its reference range onto [-1, 1], followed by a constant 1.
pub fn planted_design_row(schema: &FeatureSchema, record: &HouseRecord) -> Vec<f64> {
    let mut row = Vec::new();
    for (i, e) in schema.features().enumerate() {
        if e.kind != FeatureKind::Numeric {
            continue;
        }
        let (lo, hi, _) = numeric_range(&e.name).expect("synthetic schema uses reference features");
        row.push(2.0 * (record.num(i) - lo) / (hi - lo) - 1.0);
    }
    row.push(1.0);
    row
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(Dataset, PlantedModel), DataError> {
    config.validate()?;
    let schema = config.schema()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p_tasks = config.n_tasks;
    let d = config.n_features;

    let coef_noise = Normal::new(0.0, config.coefficient_noise)
        .map_err(|e| DataError::InvalidConfig(e.to_string()))?;
    let obs_noise = Normal::new(0.0, config.observation_noise)
        .map_err(|e| DataError::InvalidConfig(e.to_string()))?;

    let shared: Vec<f64> = (0..config.shared_support_size)
        .map(|_| {
            let mag = rng.random_range(0.05..0.3);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let mut w = Array2::<f64>::zeros((d + 1, p_tasks));
    for p in 0..p_tasks {
        for (j, s) in shared.iter().enumerate() {
            w[[j, p]] = s + coef_noise.sample(&mut rng);
        }
        w[[d, p]] = MEDIAN_PRICE.ln() + coef_noise.sample(&mut rng);
    }

    let mut ranks: Vec<usize> = (3..=500).collect();
    ranks.shuffle(&mut rng);
    let pri_rank: Vec<usize> = ranks[..config.pools.school_districts].to_vec();
    let mut ranks: Vec<usize> = (1..=500).collect();
    ranks.shuffle(&mut rng);
    let sec_rank: Vec<usize> = ranks[..config.pools.school_districts].to_vec();

    let slot = |name: &str| schema.feature_index(name).expect("reference key present");
    let key_slots = KeySlots {
        sa1: slot(columns::SA1),
        sa2: slot(columns::SA2),
        sa3: slot(columns::SA3),
        sa4: slot(columns::SA4),
        postcode: slot(columns::POSTCODE),
        pri_dist: slot(columns::PRI_SCH_DIST),
        sec_dist: slot(columns::SEC_SCH_DIST),
        near_sch: slot(columns::NEAR_SCH),
        station: slot(columns::STATION),
        shop: slot(columns::SHOP),
        hospital: slot(columns::HOSPITAL),
        gp: slot(columns::GP),
        market: slot(columns::MARKET),
    };
    let numeric_slots: Vec<(usize, f64, f64, bool)> = config
        .numeric_features()
        .iter()
        .map(|n| {
            let (lo, hi, int) = numeric_range(n).unwrap();
            (slot(n), lo, hi, int)
        })
        .collect();

    let pools = &config.pools;
    let mut records = Vec::new();
    for m in 0..config.months {
        let month = config.start_month.offset(m as i32);
        for p in 0..p_tasks {
            let s = &config.samples;
            let count = if p < s.starved_tasks {
                rng.random_range(s.starved_min..=s.starved_max)
            } else {
                rng.random_range(s.min_per_month..=s.max_per_month)
            };
            for _ in 0..count {
                let mut values = vec![Value::Num(0.0); schema.n_features()];
                let sa2 = format!("SA2-{p:03}-{}", rng.random_range(0..2));
                let sa1 = format!("{}-{}", sa2.replacen("SA2", "SA1", 1), rng.random_range(0..5));
                values[key_slots.sa4] = Value::Label(format!("SA4-{:02}", p / 4));
                values[key_slots.sa3] = Value::Label(planted_task_label(p));
                values[key_slots.sa2] = Value::Label(sa2);
                values[key_slots.sa1] = Value::Label(sa1);
                let postcode = 3000 + (p * 37 + rng.random_range(0..3)) % 997;
                values[key_slots.postcode] = Value::Label(postcode.to_string());
                let pri = rng.random_range(0..pools.school_districts);
                let sec = rng.random_range(0..pools.school_districts);
                values[key_slots.pri_dist] = Value::Label((pri + 1).to_string());
                values[key_slots.sec_dist] = Value::Label((sec + 1).to_string());
                let near = rng.random_range(1..=pools.nearest_schools);
                values[key_slots.near_sch] = Value::Label(near.to_string());
                let label = |rng: &mut ChaCha8Rng, n: usize| Value::Label(rng.random_range(1..=n).to_string());
                values[key_slots.station] = label(&mut rng, pools.stations);
                values[key_slots.shop] = label(&mut rng, pools.shops);
                values[key_slots.hospital] = label(&mut rng, pools.hospitals);
                values[key_slots.gp] = label(&mut rng, pools.gps);
                values[key_slots.market] = label(&mut rng, pools.markets);

                for &(idx, lo, hi, int) in &numeric_slots {
                    let name = &schema.feature(idx).name;
                    let v = if name == columns::PRI_RANK {
                        pri_rank[pri] as f64
                    } else if name == columns::SEC_RANK {
                        sec_rank[sec] as f64
                    } else if int {
                        rng.random_range(lo as i64..=hi as i64) as f64
                    } else {
                        rng.random_range(lo..=hi)
                    };
                    values[idx] = Value::Num(v);
                }

                let mut rec = HouseRecord {
                    sale_month: month,
                    values,
                    price: 1.0,
                };
                let row = planted_design_row(&schema, &rec);
                let log_price: f64 = row.iter().enumerate().map(|(j, u)| u * w[[j, p]]).sum::<f64>()
                    + obs_noise.sample(&mut rng);
                rec.price = log_price.exp();
                records.push(rec);
            }
        }
    }

    let dataset = Dataset::new(schema.clone(), records)?;
    let mut feature_names: Vec<String> = config.numeric_features().iter().map(|s| s.to_string()).collect();
    feature_names.push(crate::solver::INTERCEPT.to_string());
    let task_ids = (0..p_tasks).map(planted_task_label).collect();
    let weights = WeightMatrix::new(w, task_ids).expect("planted weights are well-formed");
    Ok((dataset, PlantedModel { feature_names, weights }))
}

struct KeySlots {
    sa1: usize,
    sa2: usize,
    sa3: usize,
    sa4: usize,
    postcode: usize,
    pri_dist: usize,
    sec_dist: usize,
    near_sch: usize,
    station: usize,
    shop: usize,
    hospital: usize,
    gp: usize,
    market: usize,
}
