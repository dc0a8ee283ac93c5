//! Measurement file input.
//!
//! CSV with header `agent,px,py,pz,bx,by,bz`: one row per seeker with
//! its position and its measured unit bearing. Agents must form the
//! contiguous index range 0..n-1 (any row order).

use std::path::Path;

use bearloc::{MeasurementSet, Vec3};

const UNIT_NORM_TOL: f64 = 1e-6;

pub fn load_measurements(path: &Path) -> Result<MeasurementSet, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read measurement file {}: {e}", path.display()))?;
    let mut rows: Vec<(usize, Vec3, Vec3)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with("agent") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(format!("line {}: expected 7 fields, got {}", lineno + 1, fields.len()));
        }
        let agent: usize = fields[0]
            .parse()
            .map_err(|_| format!("line {}: bad agent index `{}`", lineno + 1, fields[0]))?;
        let num = |k: usize| -> Result<f64, String> {
            fields[k]
                .parse::<f64>()
                .map_err(|_| format!("line {}: bad number `{}`", lineno + 1, fields[k]))
        };
        let pos = Vec3::new(num(1)?, num(2)?, num(3)?);
        let dir = Vec3::new(num(4)?, num(5)?, num(6)?);
        if !pos.iter().chain(dir.iter()).all(|x| x.is_finite()) {
            return Err(format!("line {}: non-finite value", lineno + 1));
        }
        rows.push((agent, pos, dir));
    }

    let n = rows.len();
    if n < 2 {
        return Err(format!("n >= 2 required: measurement file has {n} agent rows"));
    }
    rows.sort_by_key(|r| r.0);
    for (want, row) in rows.iter().enumerate() {
        if row.0 != want {
            return Err(format!(
                "agent indices must be 0..{} exactly once; problem at agent {}",
                n - 1,
                row.0
            ));
        }
    }

    let mut bearings = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    for (agent, pos, dir) in rows {
        if (dir.norm() - 1.0).abs() > UNIT_NORM_TOL {
            return Err(format!("agent {agent}: bearing is not unit norm (|b| = {})", dir.norm()));
        }
        let b = bearloc::UnitBearing::try_new(dir)
            .map_err(|e| format!("agent {agent}: invalid bearing: {e}"))?;
        bearings.push(b);
        positions.push(pos);
    }
    MeasurementSet::new(bearings, positions, 0.0).map_err(|e| e.to_string())
}
