//! Trajectory CSV files and JSON summaries, written atomically.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use projdyn::dynamics::{Channel, PhaseState, Trajectory};
use projdyn::geometry::Vector;

use crate::error::CliError;

const CHANNEL_COLUMNS: [Channel; 4] = [Channel::H, Channel::Lambda, Channel::Energy, Channel::Eta];

/// Write `bytes` to a temporary file next to `path`, then rename it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x:?}")
    } else {
        format!("{x:e}")
    }
}

pub fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "tau".to_string()];
    h.extend((0..dim).map(|i| format!("q_{i}")));
    h.extend((0..dim).map(|i| format!("p_{i}")));
    h.extend(CHANNEL_COLUMNS.iter().map(|c| c.name().to_string()));
    h
}

/// CSV text of a trajectory. `times` replaces the `t` column when given;
/// channels the trajectory lacks are left empty.
pub fn trajectory_csv(traj: &Trajectory, times: Option<&[f64]>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header(traj.dim())).map_err(io)?;
    let cell = |c: Channel, i: usize| traj.channel(c).map(|v| fmt_f64(v[i])).unwrap_or_default();
    for (i, s) in traj.samples().iter().enumerate() {
        let t = times.map_or(s.t, |ts| ts[i]);
        let mut row = vec![fmt_f64(t), cell(Channel::Tau, i)];
        row.extend(s.q.iter().map(|&x| fmt_f64(x)));
        row.extend(s.p.iter().map(|&x| fmt_f64(x)));
        row.extend(CHANNEL_COLUMNS.iter().map(|&c| cell(c, i)));
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, times: Option<&[f64]>) -> Result<(), CliError> {
    write_atomic(path, &trajectory_csv(traj, times)?)
}

/// Samples and channels read back from a trajectory CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTrajectory {
    pub samples: Vec<PhaseState>,
    /// Columns that were present, including `tau`.
    pub channels: Vec<(Channel, Vec<f64>)>,
}

pub fn read_trajectory(path: &Path) -> Result<CsvTrajectory, CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let head: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    let dim = head.iter().filter(|h| h.starts_with("q_")).count();
    if dim == 0 || head != header(dim) {
        return Err(bad(format!("unexpected header {head:?}")));
    }
    let all_channels = [Channel::Tau, Channel::H, Channel::Lambda, Channel::Energy, Channel::Eta];
    let col = |c: Channel| head.iter().position(|h| h == c.name()).expect("known column");
    let mut samples = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); all_channels.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec[i].parse::<f64>().map_err(|e| bad(format!("row {}: column {}: {e}", line + 1, head[i])))
        };
        let t = num(0)?;
        let q = (0..dim).map(|i| num(2 + i)).collect::<Result<Vec<_>, _>>()?;
        let p = (0..dim).map(|i| num(2 + dim + i)).collect::<Result<Vec<_>, _>>()?;
        samples.push(PhaseState {
            t,
            q: Vector::new(q),
            p: Vector::new(p),
        });
        for (k, &c) in all_channels.iter().enumerate() {
            let i = col(c);
            columns[k].push(if rec[i].is_empty() { None } else { Some(num(i)?) });
        }
    }
    let mut channels = Vec::new();
    for (k, &c) in all_channels.iter().enumerate() {
        if columns[k].iter().all(Option::is_some) && !columns[k].is_empty() {
            channels.push((c, columns[k].iter().map(|x| x.unwrap()).collect()));
        } else if columns[k].iter().any(Option::is_some) {
            return Err(bad(format!("column {} is only partly filled", c.name())));
        }
    }
    Ok(CsvTrajectory { samples, channels })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
