//! Trajectory CSV files, event manifests and JSON reports.
//!
//! Trajectory files have the header `t,agent_id,x,y`, one row per agent per
//! step, sorted by `(t, agent_id)`. Coordinates are written in the shortest
//! form that parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dirmath::Point;
use crate::error::{Error, Result};
use crate::evaluate::{FeatureVector, StepError};
use crate::simulate::Regime;
use crate::trajectory::{Provenance, TrajectorySet};

/// What to do with missing `(t, agent)` rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FillPolicy {
    /// Missing rows are an error.
    #[default]
    Reject,
    /// Carry the agent's previous position forward.
    Forward,
}

pub fn write_trajectory_csv<W: Write>(ts: &TrajectorySet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "agent_id", "x", "y"]).map_err(csv_err)?;
    let mut order: Vec<usize> = (0..ts.n_agents()).collect();
    order.sort_by_key(|&i| ts.agent_ids()[i]);
    for t in 0..=ts.n_steps() {
        for &i in &order {
            let p = ts.positions()[i][t];
            w.write_record([
                t.to_string(),
                ts.agent_ids()[i].to_string(),
                p.x.to_string(),
                p.y.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory_csv(ts: &TrajectorySet, path: &Path) -> Result<()> {
    write_trajectory_csv(ts, BufWriter::new(File::create(path)?))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Parses a trajectory CSV. `source` names the input in error messages and
/// provenance; `informed_ids` are external agent ids.
pub fn read_trajectory_csv<R: Read>(
    input: R,
    source: &str,
    informed_ids: &[u32],
    fill: FillPolicy,
) -> Result<TrajectorySet> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != ["t", "agent_id", "x", "y"] {
        return Err(parse_err(
            1,
            format!("expected header t,agent_id,x,y, found {}", header.join(",")),
        ));
    }
    let mut rows: BTreeMap<(usize, u32), Point> = BTreeMap::new();
    let mut ids = std::collections::BTreeSet::new();
    let mut max_t = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(parse_err(line, format!("expected 4 fields, found {}", rec.len())));
        }
        let t: usize = rec[0]
            .parse()
            .map_err(|_| parse_err(line, format!("t={:?} is not a nonnegative integer", &rec[0])))?;
        let id: u32 = rec[1]
            .parse()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| parse_err(line, format!("agent_id={:?} is not a positive integer", &rec[1])))?;
        let coord = |k: usize, name: &str| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("{name}={:?} is not a finite number", &rec[k])))
        };
        let p = Point::new(coord(2, "x")?, coord(3, "y")?);
        if rows.insert((t, id), p).is_some() {
            return Err(parse_err(line, format!("duplicate row for t={t}, agent_id={id}")));
        }
        ids.insert(id);
        max_t = max_t.max(t);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    let ids: Vec<u32> = ids.into_iter().collect();
    let mut filled = 0usize;
    let mut positions = Vec::with_capacity(ids.len());
    for &id in &ids {
        let mut series: Vec<Point> = Vec::with_capacity(max_t + 1);
        for t in 0..=max_t {
            match (rows.get(&(t, id)), fill, series.last()) {
                (Some(&p), _, _) => series.push(p),
                (None, FillPolicy::Forward, Some(&prev)) => {
                    series.push(prev);
                    filled += 1;
                }
                _ => {
                    return Err(Error::Format(format!(
                        "{source}: agent {id} has no row at t={t} (time grid must be dense)"
                    )))
                }
            }
        }
        positions.push(series);
    }
    if filled > 0 {
        log::info!("{source}: filled {filled} missing rows forward");
    }
    let informed = informed_ids
        .iter()
        .map(|id| {
            ids.iter()
                .position(|x| x == id)
                .ok_or_else(|| Error::Format(format!("{source}: informed agent {id} not present")))
        })
        .collect::<Result<Vec<_>>>()?;
    TrajectorySet::from_positions(
        ids,
        positions,
        informed,
        Provenance::Ingested {
            source: source.to_string(),
        },
    )
}

pub fn load_trajectory_csv(path: &Path, informed_ids: &[u32], fill: FillPolicy) -> Result<TrajectorySet> {
    let file = File::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    read_trajectory_csv(file, &path.display().to_string(), informed_ids, fill)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub informed_ids: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

pub fn save_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    write_json(entries, path)
}

/// Loads every event of a manifest, with its optional label.
pub fn load_events(manifest: &Path, fill: FillPolicy) -> Result<Vec<(TrajectorySet, Option<Regime>)>> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    load_manifest(manifest)?
        .into_iter()
        .map(|e| {
            let p = if e.path.is_absolute() {
                e.path.clone()
            } else {
                base.join(&e.path)
            };
            Ok((load_trajectory_csv(&p, &e.informed_ids, fill)?, e.label))
        })
        .collect()
}

/// Writes pretty JSON, refusing non-finite numbers.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let v = serde_json::to_value(value)?;
    if let Some(where_) = first_non_finite(&v, "$") {
        return Err(Error::Format(format!("non-finite number at {where_}")));
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &v)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Path of the first null or non-finite number. serde_json turns NaN and
/// infinities into null, so reports must not contain nulls at all.
fn first_non_finite(v: &serde_json::Value, at: &str) -> Option<String> {
    match v {
        serde_json::Value::Null => Some(at.to_string()),
        serde_json::Value::Number(n) => n.as_f64().filter(|x| !x.is_finite()).map(|_| at.to_string()),
        serde_json::Value::Array(a) => a
            .iter()
            .enumerate()
            .find_map(|(k, x)| first_non_finite(x, &format!("{at}[{k}]"))),
        serde_json::Value::Object(o) => o.iter().find_map(|(k, x)| first_non_finite(x, &format!("{at}.{k}"))),
        _ => None,
    }
}

pub fn write_step_errors_csv(steps: &[StepError], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["fold", "dataset", "t", "agent_id", "opt", "hm", "lra", "ar", "informed"])
        .map_err(csv_err)?;
    for s in steps {
        let e = &s.errors;
        w.write_record([
            s.fold.to_string(),
            s.dataset.to_string(),
            s.t.to_string(),
            s.agent_id.to_string(),
            e.opt.to_string(),
            e.hm.to_string(),
            e.lra.to_string(),
            e.ar.to_string(),
            e.informed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_features_csv(features: &[FeatureVector], labels: &[Regime], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["dataset", "label", "w_hm", "w_lra", "w_ar"])
        .map_err(csv_err)?;
    for (k, (f, l)) in features.iter().zip(labels).enumerate() {
        let m = f.median_w;
        w.write_record([
            k.to_string(),
            l.name().to_string(),
            m[0].to_string(),
            m[1].to_string(),
            m[2].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
