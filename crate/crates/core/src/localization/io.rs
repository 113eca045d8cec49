//! Observation files: CSV with header
//! `bs_id,bs_x,bs_y,bs_z,az_deg,el_deg,tof_ns`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

use super::PathObservation;

#[derive(Debug, thiserror::Error)]
pub enum ObservationFileError {
    #[error("observation file: {0}")]
    Csv(#[from] csv::Error),
    #[error("observation file row {row}: {reason}")]
    Invalid { row: usize, reason: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    bs_id: u32,
    bs_x: f64,
    bs_y: f64,
    bs_z: f64,
    az_deg: f64,
    el_deg: f64,
    tof_ns: f64,
}

pub fn read_observations_csv<R: Read>(source: R) -> Result<Vec<PathObservation>, ObservationFileError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row?;
        let values = [row.bs_x, row.bs_y, row.bs_z, row.az_deg, row.el_deg, row.tof_ns];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ObservationFileError::Invalid {
                row: i + 1,
                reason: "non-finite value".into(),
            });
        }
        out.push(PathObservation {
            bs_id: row.bs_id,
            bs_position: Vec3::new(row.bs_x, row.bs_y, row.bs_z),
            azimuth: row.az_deg.to_radians(),
            elevation: row.el_deg.to_radians(),
            tof: row.tof_ns * 1e-9,
        });
    }
    Ok(out)
}

pub fn write_observations_csv<W: Write>(sink: W, observations: &[PathObservation]) -> Result<(), ObservationFileError> {
    let mut writer = csv::Writer::from_writer(sink);
    for o in observations {
        writer.serialize(Row {
            bs_id: o.bs_id,
            bs_x: o.bs_position.x,
            bs_y: o.bs_position.y,
            bs_z: o.bs_position.z,
            az_deg: o.azimuth.to_degrees(),
            el_deg: o.elevation.to_degrees(),
            tof_ns: o.tof * 1e9,
        })?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}
