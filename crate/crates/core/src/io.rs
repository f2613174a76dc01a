//! CSV snapshots of measures and JSON trajectory manifests.
//!
//! Floats are written with 17 significant digits so that reading a file back
//! reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

pub const SNAPSHOT_HEADER: [&str; 2] = ["position", "mass"];

/// Round-trip exact float formatting.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses snapshot CSV text with header `position,mass`.
pub fn parse_snapshot(text: &str) -> Result<DiscreteMeasure> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.len() != 2 || header.iter().zip(SNAPSHOT_HEADER).any(|(a, b)| a != b) {
        return Err(Error::Parse(format!(
            "snapshot header must be `position,mass`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut atoms = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected 2",
                line + 1,
                record.len()
            )));
        }
        let value = |k: usize| {
            record[k]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: `{}`: {e}", line + 1, &record[k])))
        };
        atoms.push((value(0)?, value(1)?));
    }
    DiscreteMeasure::from_atoms(atoms)
}

pub fn format_snapshot(mu: &DiscreteMeasure) -> String {
    let mut out = SNAPSHOT_HEADER.join(",");
    out.push('\n');
    for a in mu.atoms() {
        out.push_str(&format_float(a.position));
        out.push(',');
        out.push_str(&format_float(a.mass));
        out.push('\n');
    }
    out
}

pub fn read_snapshot(path: &Path) -> Result<DiscreteMeasure> {
    parse_snapshot(&fs::read_to_string(path)?)
}

pub fn write_snapshot(path: &Path, mu: &DiscreteMeasure) -> Result<()> {
    Ok(fs::write(path, format_snapshot(mu))?)
}

/// Writes a numeric table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| format_float(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(fs::write(path, out)?)
}

/// Index of the snapshot files of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub grid_n: u32,
    pub times: Vec<f64>,
    pub files: Vec<String>,
}

/// Writes `measure_<index>.csv` for every `stride`-th snapshot (and the last
/// one) into `dir` and returns the manifest describing them.
pub fn write_trajectory_snapshots(
    dir: &Path,
    trajectory: &Trajectory,
    stride: usize,
) -> Result<Manifest> {
    let stride = stride.max(1);
    let last = trajectory.len().saturating_sub(1);
    let mut manifest = Manifest {
        grid_n: trajectory.grid.n(),
        times: Vec::new(),
        files: Vec::new(),
    };
    for (k, (t, state)) in trajectory.iter().enumerate() {
        if k % stride != 0 && k != last {
            continue;
        }
        let name = format!("measure_{k}.csv");
        write_snapshot(&dir.join(&name), &state.measure)?;
        manifest.times.push(t);
        manifest.files.push(name);
    }
    Ok(manifest)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Io(e.to_string()))?;
    Ok(fs::write(path, text + "\n")?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_exact() {
        let mu = DiscreteMeasure::from_atoms([(-0.1, 1.0 / 3.0), (2.0f64.sqrt(), 1e-300)]).unwrap();
        assert_eq!(parse_snapshot(&format_snapshot(&mu)).unwrap(), mu);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_snapshot("x,mass\n0,1\n").is_err());
        assert!(parse_snapshot("position,mass\n0,abc\n").is_err());
        assert!(parse_snapshot("position,mass\n0,-1\n").is_err());
        assert!(parse_snapshot("position,mass\n0,1,2\n").is_err());
        assert_eq!(
            parse_snapshot("position,mass\n").unwrap(),
            DiscreteMeasure::empty()
        );
        assert_eq!(
            parse_snapshot("position, mass\n 1.5 , 2\n").unwrap(),
            DiscreteMeasure::dirac(1.5, 2.0).unwrap()
        );
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
