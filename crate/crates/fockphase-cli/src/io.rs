//! File formats: record tables, posterior grids, and the run summary.
//!
//! All floats are written with 17 significant digits so that replays and
//! determinism checks can compare files byte for byte.

use std::path::Path;

use fockphase::config::EventPlanKind;
use fockphase::model::{DetectionEvent, EventPlace, Sign};
use fockphase::numeric::TAU;
use fockphase::{Error, Result};
use serde::Serialize;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn record_header(kind: EventPlanKind) -> &'static [&'static str] {
    match kind {
        EventPlanKind::Position | EventPlanKind::Spin => &["index", "u", "theta", "eta"],
        EventPlanKind::ThreeMode => &["index", "u_ab", "u_bc", "u_ca", "theta", "eta"],
        EventPlanKind::RegionSpin => &["index", "cell", "theta", "eta"],
    }
}

pub fn write_record_csv(
    path: &Path,
    events: &[DetectionEvent],
    kind: EventPlanKind,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(record_header(kind))?;
    for (i, e) in events.iter().enumerate() {
        let index = i.to_string();
        let (theta, eta) = if e.is_spin() {
            (fmt_float(e.theta), e.eta.to_i8().to_string())
        } else {
            (String::new(), String::new())
        };
        match (kind, &e.place) {
            (EventPlanKind::Position | EventPlanKind::Spin, EventPlace::Reduced(u)) => {
                w.write_record([index, fmt_float(*u), theta, eta])?;
            }
            (EventPlanKind::ThreeMode, EventPlace::Reduced3 { u_ab, u_bc, u_ca }) => {
                w.write_record([
                    index,
                    fmt_float(*u_ab),
                    fmt_float(*u_bc),
                    fmt_float(*u_ca),
                    theta,
                    eta,
                ])?;
            }
            (EventPlanKind::RegionSpin, EventPlace::Cell(cell)) => {
                w.write_record([index, cell.to_string(), theta, eta])?;
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "event {i} does not fit the record schema for this event kind"
                )))
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(field: &str, row: usize, col: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::InvalidInput(format!("record row {row}: cannot parse {col} = {field:?}"))
    })
}

fn parse_spin_fields(theta: &str, eta: &str, row: usize) -> Result<Option<(f64, Sign)>> {
    match (theta.trim().is_empty(), eta.trim().is_empty()) {
        (true, true) => Ok(None),
        (false, false) => {
            let theta = parse_f64(theta, row, "theta")?;
            let eta = eta
                .trim()
                .parse::<i8>()
                .ok()
                .and_then(|v| Sign::from_i8(v).ok())
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "record row {row}: eta must be 1 or -1, got {eta:?}"
                    ))
                })?;
            Ok(Some((theta, eta)))
        }
        _ => Err(Error::InvalidInput(format!(
            "record row {row}: theta and eta must be both present (spin) or both empty (position)"
        ))),
    }
}

/// Read a record file using the column schema implied by the event kind.
/// Two-mode and three-mode schemas accept position and spin rows per event.
pub fn read_record_csv(path: &Path, kind: EventPlanKind) -> Result<Vec<DetectionEvent>> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let expected = record_header(kind);
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::InvalidInput(format!(
            "record header {:?} does not match the expected {:?} for this event kind",
            header.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    let mut events = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != expected.len() {
            return Err(Error::InvalidInput(format!(
                "record row {row}: expected {} fields, got {}",
                expected.len(),
                record.len()
            )));
        }
        let event = match kind {
            EventPlanKind::Position | EventPlanKind::Spin => {
                let u = parse_f64(&record[1], row, "u")?;
                match parse_spin_fields(&record[2], &record[3], row)? {
                    Some((theta, eta)) => DetectionEvent::spin(u, theta, eta),
                    None => DetectionEvent::position(u),
                }
            }
            EventPlanKind::ThreeMode => {
                let u_ab = parse_f64(&record[1], row, "u_ab")?;
                let u_bc = parse_f64(&record[2], row, "u_bc")?;
                let u_ca = parse_f64(&record[3], row, "u_ca")?;
                if parse_spin_fields(&record[4], &record[5], row)?.is_some() {
                    return Err(Error::InvalidInput(format!(
                        "record row {row}: three-mode records are spinless"
                    )));
                }
                DetectionEvent::position3(u_ab, u_bc, u_ca)?
            }
            EventPlanKind::RegionSpin => {
                let cell = record[1].trim().parse::<usize>().map_err(|_| {
                    Error::InvalidInput(format!(
                        "record row {row}: cannot parse cell = {:?}",
                        &record[1]
                    ))
                })?;
                match parse_spin_fields(&record[2], &record[3], row)? {
                    Some((theta, eta)) => DetectionEvent::spin_cell(cell, theta, eta),
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "record row {row}: region records require spin fields"
                        )))
                    }
                }
            }
        };
        events.push(event);
    }
    Ok(events)
}

/// Write one posterior grid. One-phase grids emit (phi, density) rows;
/// two-phase grids emit (phi, phi_prime, density) rows in row-major order.
pub fn write_posterior_csv(path: &Path, m: usize, dims: usize, density: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let step = TAU / m as f64;
    match dims {
        1 => {
            w.write_record(["phi", "density"])?;
            for (j, d) in density.iter().enumerate() {
                w.write_record([fmt_float(j as f64 * step), fmt_float(*d)])?;
            }
        }
        2 => {
            w.write_record(["phi", "phi_prime", "density"])?;
            for j in 0..m {
                for k in 0..m {
                    w.write_record([
                        fmt_float(j as f64 * step),
                        fmt_float(k as f64 * step),
                        fmt_float(density[j * m + k]),
                    ])?;
                }
            }
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "unsupported posterior dimension {dims}"
            )))
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize summary: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}
