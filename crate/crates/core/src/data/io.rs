//! Comma-separated reading import and export.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DataError, Metric, Reading, Scalar};
use crate::tduo::EntityId;

pub const CSV_HEADER: [&str; 7] = [
    "entity_id",
    "entity_type",
    "metric",
    "timestamp",
    "street",
    "zone",
    "value",
];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    entity_id: String,
    entity_type: String,
    metric: String,
    timestamp: i64,
    street: String,
    zone: String,
    value: f64,
}

/// Reads readings from CSV with a header line naming every field (in any
/// order). Readings are not validated here.
pub fn read_readings<T: Scalar, R: Read>(input: R) -> Result<Vec<Reading<T>>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| DataError::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Err(DataError::MissingHeader(CSV_HEADER[0].into()));
    }
    for field in CSV_HEADER {
        if !headers.iter().any(|h| h == field) {
            return Err(DataError::MissingHeader(field.into()));
        }
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| DataError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        out.push(Reading {
            entity: EntityId::new(row.entity_id, row.entity_type),
            metric: row.metric.parse::<Metric>()?,
            timestamp: row.timestamp,
            street: row.street,
            zone: row.zone,
            value: T::from_f64(row.value).ok_or_else(|| DataError::Csv {
                line: 0,
                message: format!("value {} not representable", row.value),
            })?,
        });
    }
    Ok(out)
}

/// Writes readings as CSV, header first. An empty slice yields only the
/// header line.
pub fn write_readings<T: Scalar, W: Write>(
    output: W,
    readings: &[Reading<T>],
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(output);
    let csv_err = |e: csv::Error| DataError::Csv {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in readings {
        w.write_record([
            r.entity.id.as_str(),
            r.entity.kind.as_str(),
            r.metric.name(),
            &r.timestamp.to_string(),
            &r.street,
            &r.zone,
            &r.value.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
