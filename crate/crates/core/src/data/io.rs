use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::dataset::{Dataset, HouseRecord, Month, Value};
use super::schema::{columns, FeatureKind, FeatureSchema};
use super::{DataError, RowError};

/// Maximum fraction of rows that may be rejected before loading fails.
pub const MAX_REJECTED_FRACTION: f64 = 0.10;

/// Result of parsing a delimited file: the dataset plus every rejected row.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub rejected: Vec<RowError>,
    pub total_rows: usize,
}

/// Load a comma-delimited transaction file. Rejected rows are logged; use
/// [`load_dataset_report`] to inspect them.
pub fn load_dataset(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset, DataError> {
    let report = load_dataset_report(path, schema)?;
    for r in &report.rejected {
        log::warn!("rejected {r}");
    }
    Ok(report.dataset)
}

pub fn load_dataset_report(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
) -> Result<LoadReport, DataError> {
    let file = File::open(path.as_ref())?;
    read_dataset(file, schema)
}

enum Slot {
    Date,
    Price,
    Feature(usize, FeatureKind),
}

pub fn read_dataset<R: Read>(reader: R, schema: &FeatureSchema) -> Result<LoadReport, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();

    let mut slots = Vec::with_capacity(schema.entries().len());
    for e in schema.entries() {
        let col = header
            .iter()
            .position(|h| h.trim() == e.name)
            .ok_or_else(|| DataError::MissingColumn(e.name.clone()))?;
        let slot = if e.name == columns::DATE {
            Slot::Date
        } else if e.name == columns::PRICE {
            Slot::Price
        } else {
            let idx = schema.feature_index(&e.name).expect("non-meta entry");
            Slot::Feature(idx, e.kind)
        };
        slots.push((col, e.name.as_str(), slot));
    }

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    let mut total = 0usize;
    for row in rdr.records() {
        total += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(total + 1);
                rejected.push(RowError {
                    row: line,
                    column: String::new(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line() as usize).unwrap_or(total + 1);
        match parse_row(&row, &slots, schema.n_features()) {
            Ok(rec) => records.push(rec),
            Err((column, message)) => rejected.push(RowError {
                row: line,
                column: column.to_string(),
                message,
            }),
        }
    }

    if total > 0 && rejected.len() as f64 > MAX_REJECTED_FRACTION * total as f64 {
        return Err(DataError::TooManyRejected {
            rejected: rejected.len(),
            total,
            first: Box::new(rejected[0].clone()),
        });
    }
    let dataset = Dataset::new(schema.clone(), records)?;
    Ok(LoadReport {
        dataset,
        rejected,
        total_rows: total,
    })
}

fn parse_row<'a>(
    row: &csv::StringRecord,
    slots: &[(usize, &'a str, Slot)],
    n_features: usize,
) -> Result<HouseRecord, (&'a str, String)> {
    let mut values = vec![Value::Num(0.0); n_features];
    let mut month = None;
    let mut price = None;
    for (col, name, slot) in slots {
        let cell = row
            .get(*col)
            .map(str::trim)
            .ok_or((*name, "missing cell".to_string()))?;
        match slot {
            Slot::Date => month = Some(cell.parse::<Month>().map_err(|e| (*name, e))?),
            Slot::Price => {
                let p: f64 = cell
                    .parse()
                    .map_err(|_| (*name, format!("unparseable price {cell:?}")))?;
                if !(p > 0.0 && p.is_finite()) {
                    return Err((*name, format!("price must be positive, got {cell}")));
                }
                price = Some(p);
            }
            Slot::Feature(idx, FeatureKind::Numeric) => {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| (*name, format!("unparseable number {cell:?}")))?;
                if !v.is_finite() {
                    return Err((*name, format!("non-finite number {cell}")));
                }
                values[*idx] = Value::Num(v);
            }
            Slot::Feature(idx, _) => {
                if cell.is_empty() {
                    return Err((*name, "empty label".to_string()));
                }
                values[*idx] = Value::Label(cell.to_string());
            }
        }
    }
    Ok(HouseRecord {
        sale_month: month.expect("DATE slot present"),
        values,
        price: price.expect("PRICE slot present"),
    })
}

/// Write a dataset in the same delimited format [`read_dataset`] accepts.
/// Floats use the shortest representation that round-trips exactly.
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<(), DataError> {
    let schema = dataset.schema();
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(schema.entries().iter().map(|e| e.name.as_str()))?;
    let mut cells = Vec::with_capacity(schema.entries().len());
    for r in dataset.records() {
        cells.clear();
        for e in schema.entries() {
            let cell = if e.name == columns::DATE {
                r.sale_month.to_string()
            } else if e.name == columns::PRICE {
                r.price.to_string()
            } else {
                r.values[schema.feature_index(&e.name).unwrap()].to_string()
            };
            cells.push(cell);
        }
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let file = File::create(path.as_ref())?;
    write_dataset(dataset, std::io::BufWriter::new(file))
}
