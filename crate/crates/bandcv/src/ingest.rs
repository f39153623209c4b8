//! Sensor-network table ingestion: CSV station tables with optional
//! measurements, converted to geo points and an experiment graph/signal
//! pair. Stations with missing measurements stay in the table but are
//! dropped before graph construction.

use std::collections::HashSet;
use std::path::Path;

use crate::builders::{knn_graph, GeoPoint, KnnGraphConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::signals::GraphSignal;

/// Missing-value sentinels recognized by default.
pub const DEFAULT_MISSING_TOKENS: &[&str] = &["", "NA", "-9999"];

#[derive(Debug, Clone, PartialEq)]
pub struct StationRow {
    pub id: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// Elevation converted to kilometers at the parsing boundary.
    pub elevation_km: f64,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationTable {
    rows: Vec<StationRow>,
    value_column: String,
}

impl StationTable {
    pub fn rows(&self) -> &[StationRow] {
        &self.rows
    }

    pub fn value_column(&self) -> &str {
        &self.value_column
    }

    pub fn present_count(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_some()).count()
    }
}

/// Experiment inputs derived from a station table, with the id <-> vertex
/// mapping retained for provenance.
#[derive(Debug, Clone)]
pub struct SensorExperiment {
    pub graph: Graph,
    pub signal: GraphSignal,
    /// station id for each vertex index
    pub station_ids: Vec<String>,
}

/// Parse a station CSV with header `id,lat,lon,elev_m,...`. The value
/// column is selected by name; values matching a missing token become
/// absent. Elevations are given in meters and stored in kilometers.
/// `#`-prefixed lines are ignored. Rows come back sorted by station id
/// so results do not depend on file row order.
pub fn parse_station_csv(
    path: &Path,
    value_column: &str,
    missing_tokens: &[&str],
) -> Result<StationTable> {
    let origin = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                origin.clone(),
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::parse(origin.clone(), 0, e.to_string()),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| Error::parse(origin.clone(), 1, e.to_string()))?
        .clone();
    let col = |name: &str| -> Option<usize> { headers.iter().position(|h| h == name) };
    let idx_id = col("id").ok_or_else(|| Error::parse(&origin, 1, "missing column id"))?;
    let idx_lat = col("lat").ok_or_else(|| Error::parse(&origin, 1, "missing column lat"))?;
    let idx_lon = col("lon").ok_or_else(|| Error::parse(&origin, 1, "missing column lon"))?;
    let idx_elev = col("elev_m").ok_or_else(|| Error::parse(&origin, 1, "missing column elev_m"))?;
    let idx_value = col(value_column).ok_or_else(|| {
        Error::parse(
            &origin,
            1,
            format!(
                "missing value column {value_column:?}; available columns: {}",
                headers.iter().collect::<Vec<_>>().join(", ")
            ),
        )
    })?;

    let mut rows = Vec::new();
    let mut ids = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(&origin, 0, e.to_string()))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        let field = |idx: usize, name: &str| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| Error::parse(&origin, line, format!("missing field {name}")))
        };
        let parse_f64 = |idx: usize, name: &str| -> Result<f64> {
            let raw = field(idx, name)?;
            raw.parse::<f64>()
                .map_err(|_| Error::parse(&origin, line, format!("bad {name} value {raw:?}")))
        };

        let id = field(idx_id, "id")?.to_string();
        if !ids.insert(id.clone()) {
            return Err(Error::parse(&origin, line, format!("duplicate station id {id:?}")));
        }
        let lat = parse_f64(idx_lat, "lat")?;
        let lon = parse_f64(idx_lon, "lon")?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::parse(&origin, line, format!("lat {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::parse(&origin, line, format!("lon {lon} outside [-180, 180]")));
        }
        let elev_m = parse_f64(idx_elev, "elev_m")?;

        let raw_value = field(idx_value, value_column)?;
        let value = if missing_tokens.contains(&raw_value) {
            None
        } else {
            Some(raw_value.parse::<f64>().map_err(|_| {
                Error::parse(
                    &origin,
                    line,
                    format!("bad {value_column} value {raw_value:?}"),
                )
            })?)
        };

        rows.push(StationRow {
            id,
            latitude_deg: lat,
            longitude_deg: lon,
            elevation_km: elev_m / 1000.0,
            value,
        });
    }

    // canonical order: ascending station id, so downstream vertex
    // numbering (and graph hashes) are independent of file row order
    rows.sort_by(|a, b| a.id.cmp(&b.id));

    Ok(StationTable {
        rows,
        value_column: value_column.to_string(),
    })
}

/// Drop stations with missing values, build the k-NN graph over the rest,
/// and attach the measurements as a full ground-truth signal.
pub fn to_experiment(table: &StationTable, cfg: &KnnGraphConfig) -> Result<SensorExperiment> {
    let kept: Vec<&StationRow> = table.rows.iter().filter(|r| r.value.is_some()).collect();
    if kept.len() < cfg.k + 1 {
        return Err(Error::TooFewPoints {
            needed: cfg.k + 1,
            got: kept.len(),
        });
    }
    let points: Vec<GeoPoint> = kept
        .iter()
        .map(|r| GeoPoint::new(r.latitude_deg, r.longitude_deg, r.elevation_km))
        .collect::<Result<_>>()?;
    let graph = knn_graph(&points, cfg)?;
    let values: Vec<f64> = kept.iter().map(|r| r.value.unwrap()).collect();
    let signal = GraphSignal::full(values)?;
    let station_ids = kept.iter().map(|r| r.id.clone()).collect();
    Ok(SensorExperiment {
        graph,
        signal,
        station_ids,
    })
}
