//! Station/measurement CSV ingestion and a synthetic dataset with the same schema.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::RealDataSpec;
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph_by, haversine_km, Graph};
use crate::rng;
use crate::signals::SignalTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub station_id: String,
    pub year: i32,
    pub month: u32,
    pub value: f64,
}

/// Selected stations with their gap-filled monthly series.
#[derive(Debug, Clone)]
pub struct RealDataset {
    pub stations: Vec<Station>,
    /// `N × T`, one column per month starting in January of `first_year`.
    pub values: DMatrix<f64>,
    /// `true` where the value was filled by interpolation.
    pub missing: DMatrix<bool>,
    pub first_year: i32,
}

impl RealDataset {
    pub fn n_filled(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }
}

pub fn read_stations<R: Read>(input: R) -> Result<Vec<Station>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(rdr.headers()?, &["id", "lat", "lon"])?;
    let stations: Vec<Station> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    for s in &stations {
        if !(-90.0..=90.0).contains(&s.lat) || !(-180.0..=180.0).contains(&s.lon) {
            return Err(Error::Parse(format!("station {}: coordinates ({}, {}) out of range", s.id, s.lat, s.lon)));
        }
    }
    Ok(stations)
}

pub fn read_measurements<R: Read>(input: R) -> Result<Vec<MeasurementRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(rdr.headers()?, &["station_id", "year", "month", "value"])?;
    let rows: Vec<MeasurementRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if let Some(r) = rows.iter().find(|r| !(1..=12).contains(&r.month)) {
        return Err(Error::Parse(format!("station {}: month {} outside 1..=12", r.station_id, r.month)));
    }
    Ok(rows)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected header {}, found {}",
            expected.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

pub fn write_stations<W: Write>(stations: &[Station], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for s in stations {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_measurements<W: Write>(rows: &[MeasurementRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Fills `None` entries by linear interpolation between the nearest observed
/// neighbors, holding the first/last observation constant at the ends.
/// Returns the number of filled entries.
pub fn interpolate_missing(series: &mut [Option<f64>]) -> Result<usize> {
    let known: Vec<usize> = (0..series.len()).filter(|&i| series[i].is_some()).collect();
    let (Some(&first), Some(&last)) = (known.first(), known.last()) else {
        return Err(Error::invalid("series has no observations"));
    };
    let mut filled = 0;
    for i in 0..series.len() {
        if series[i].is_some() {
            continue;
        }
        let v = if i < first {
            series[first].unwrap()
        } else if i > last {
            series[last].unwrap()
        } else {
            let hi = known.partition_point(|&k| k < i);
            let (a, b) = (known[hi - 1], known[hi]);
            let (va, vb) = (series[a].unwrap(), series[b].unwrap());
            va + (vb - va) * (i - a) as f64 / (b - a) as f64
        };
        series[i] = Some(v);
        filled += 1;
    }
    Ok(filled)
}

/// Geodesic k-NN graph on `(lat, lon)` coordinates with weights
/// `exp(-(d / d̄)²)`, `d̄` the mean k-NN distance.
pub fn haversine_knn_graph(coords: &[[f64; 2]], k: usize) -> Result<Graph> {
    let n = coords.len();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k = {k} must be in [1, {n})")));
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| haversine_km(coords[i], coords[j])).collect();
        d.sort_by(f64::total_cmp);
        total += d[..k].iter().sum::<f64>();
    }
    let scale = (total / (n * k) as f64).max(f64::MIN_POSITIVE);
    let g = build_knn_graph_by(
        n,
        &vec![k; n],
        |i, j| haversine_km(coords[i], coords[j]),
        |d| (-(d / scale).powi(2)).exp(),
    )?;
    g.with_coords(coords.to_vec())
}

/// Filters stations to the configured regions, samples `n_sensors` of them,
/// gap-fills their monthly series and builds the geodesic k-NN graph.
pub fn ingest_real(
    stations: &[Station],
    rows: &[MeasurementRow],
    source: &RealDataSpec,
    noise_sigma: f64,
    seed: u64,
) -> Result<(Graph, SignalTrace, RealDataset)> {
    let n_months = 12 * (source.last_year - source.first_year + 1) as usize;
    let mut series: HashMap<&str, Vec<Option<f64>>> = HashMap::new();
    let mut seen = std::collections::HashSet::new();
    let mut candidates = Vec::new();
    for s in stations {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::Parse(format!("duplicate station id {}", s.id)));
        }
        if source.regions.is_empty() || source.regions.iter().any(|r| r.contains(s.lat, s.lon)) {
            candidates.push(s);
            series.insert(s.id.as_str(), vec![None; n_months]);
        }
    }
    let mut orphans = 0usize;
    for r in rows {
        if r.year < source.first_year || r.year > source.last_year || !r.value.is_finite() {
            continue;
        }
        match series.get_mut(r.station_id.as_str()) {
            Some(s) => s[12 * (r.year - source.first_year) as usize + (r.month as usize - 1)] = Some(r.value),
            None => orphans += 1,
        }
    }
    if orphans > 0 {
        log::debug!("{orphans} measurements belong to stations outside the selection");
    }
    candidates.retain(|s| series[s.id.as_str()].iter().any(Option::is_some));
    if candidates.len() < source.n_sensors {
        return Err(Error::invalid(format!(
            "{} stations with data in the selected regions, {} requested",
            candidates.len(),
            source.n_sensors
        )));
    }
    let mut pick = index::sample(&mut rng::stream(seed, 0x7374_6e73), candidates.len(), source.n_sensors).into_vec();
    pick.sort_unstable();

    let n = pick.len();
    let mut values = DMatrix::zeros(n, n_months);
    let mut missing = DMatrix::from_element(n, n_months, false);
    let mut chosen = Vec::with_capacity(n);
    for (row, &c) in pick.iter().enumerate() {
        let st = candidates[c];
        let mut s = series[st.id.as_str()].clone();
        for (t, v) in s.iter().enumerate() {
            missing[(row, t)] = v.is_none();
        }
        interpolate_missing(&mut s)?;
        for (t, v) in s.into_iter().enumerate() {
            values[(row, t)] = v.expect("filled");
        }
        chosen.push(st.clone());
    }
    let data = RealDataset { stations: chosen, values, missing, first_year: source.first_year };
    if data.n_filled() > 0 {
        log::info!("interpolated {} of {} monthly values", data.n_filled(), n * n_months);
    }
    let coords: Vec<[f64; 2]> = data.stations.iter().map(|s| [s.lat, s.lon]).collect();
    let g = haversine_knn_graph(&coords, source.k)?;
    let trace = SignalTrace::new(data.values.clone(), None, noise_sigma)?;
    Ok((g, trace, data))
}

/// Reads the two CSV files named in `source` and ingests them.
pub fn ingest_real_files(
    source: &RealDataSpec,
    noise_sigma: f64,
    seed: u64,
) -> Result<(Graph, SignalTrace, RealDataset)> {
    let (Some(sp), Some(mp)) = (&source.stations, &source.measurements) else {
        return Err(Error::Config("real.stations and real.measurements are required".into()));
    };
    let stations = read_stations(open(sp)?)?;
    let rows = read_measurements(open(mp)?)?;
    ingest_real(&stations, &rows, source, noise_sigma, seed)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))
}

/// Monthly sea-surface-temperature-like data in the configured regions.
///
/// Each station follows a latitude-dependent mean and seasonal cycle plus a
/// regional offset and a few smooth travelling anomalies; about 2% of the
/// values are dropped and one station in ten lies outside every region.
pub fn synthetic_real_data(source: &RealDataSpec, seed: u64) -> Result<(Vec<Station>, Vec<MeasurementRow>)> {
    if source.regions.is_empty() {
        return Err(Error::Config("the synthetic dataset needs at least one region".into()));
    }
    let mut rng = rng::stream(seed, 0x7373_74);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let n_regions = source.regions.len();
    let offsets: Vec<f64> = (0..n_regions).map(|_| unit.sample(&mut rng)).collect();

    struct Anomaly {
        center: [f64; 2],
        amplitude: f64,
        period: f64,
        phase: f64,
    }
    let anomalies: Vec<Vec<Anomaly>> = source
        .regions
        .iter()
        .map(|r| {
            (0..3)
                .map(|_| Anomaly {
                    center: [rng.random_range(r.lat_min..=r.lat_max), rng.random_range(r.lon_min..=r.lon_max)],
                    amplitude: 0.8 * unit.sample(&mut rng),
                    period: rng.random_range(18.0..60.0),
                    phase: rng.random_range(0.0..std::f64::consts::TAU),
                })
                .collect()
        })
        .collect();

    let mut stations = Vec::with_capacity(source.synthetic_stations);
    let mut region_of = Vec::with_capacity(source.synthetic_stations);
    for i in 0..source.synthetic_stations {
        let (lat, lon, region) = if i % 10 == 9 {
            (rng.random_range(-40.0..-10.0), rng.random_range(-170.0..-120.0), None)
        } else {
            let k = rng.random_range(0..n_regions);
            let r = &source.regions[k];
            (rng.random_range(r.lat_min..=r.lat_max), rng.random_range(r.lon_min..=r.lon_max), Some(k))
        };
        stations.push(Station { id: format!("S{i:05}"), lat, lon });
        region_of.push(region);
    }

    let mut rows = Vec::new();
    for (s, region) in stations.iter().zip(&region_of) {
        let mean = 30.0 - 0.5 * (s.lat.abs() - 20.0).max(0.0);
        let seasonal = 2.0 + 0.12 * (s.lat.abs() - 25.0).max(0.0);
        for year in source.first_year..=source.last_year {
            for month in 1..=12u32 {
                let t = (12 * (year - source.first_year)) as f64 + (month - 1) as f64;
                let mut v =
                    mean + seasonal * (std::f64::consts::TAU * (month as f64 - 8.0) / 12.0).cos() + 0.02 * t / 12.0;
                if let Some(k) = *region {
                    v += offsets[k];
                    for a in &anomalies[k] {
                        let d = haversine_km([s.lat, s.lon], a.center);
                        v += a.amplitude
                            * (-(d / 400.0).powi(2)).exp()
                            * (std::f64::consts::TAU * t / a.period + a.phase).sin();
                    }
                }
                v += 0.05 * unit.sample(&mut rng);
                if rng.random::<f64>() < 0.02 {
                    continue;
                }
                rows.push(MeasurementRow {
                    station_id: s.id.clone(),
                    year,
                    month,
                    value: (v * 1000.0).round() / 1000.0,
                });
            }
        }
    }
    Ok((stations, rows))
}
