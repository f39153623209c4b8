//! Experiment graph construction: random regular graphs via the pairing
//! model, and geospatial k-nearest-neighbor graphs with Gaussian kernel
//! edge weights.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Mean Earth radius in kilometers (IUGG).
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

const PAIRING_MAX_ATTEMPTS: usize = 200_000;

/// A sensor location. Altitude is in kilometers above the reference so it
/// is commensurate with great-circle distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_km: f64,
}

impl GeoPoint {
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_km: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude_deg) {
            return Err(Error::Infeasible(format!(
                "latitude {latitude_deg} outside [-90, 90]"
            )));
        }
        if !(-180.0..=180.0).contains(&longitude_deg) {
            return Err(Error::Infeasible(format!(
                "longitude {longitude_deg} outside [-180, 180]"
            )));
        }
        Ok(GeoPoint {
            latitude_deg,
            longitude_deg,
            altitude_km,
        })
    }
}

/// Configuration for k-NN sensor graphs. Defaults match the sensor-network
/// setup: 5 neighbors, kernel width 50 km, union symmetrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnGraphConfig {
    pub k: usize,
    pub sigma_km: f64,
    pub union_symmetrization: bool,
}

impl Default for KnnGraphConfig {
    fn default() -> Self {
        KnnGraphConfig {
            k: 5,
            sigma_km: 50.0,
            union_symmetrization: true,
        }
    }
}

impl KnnGraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Infeasible("k must be >= 1".into()));
        }
        if !(self.sigma_km > 0.0) {
            return Err(Error::Infeasible(format!(
                "sigma must be positive, got {}",
                self.sigma_km
            )));
        }
        Ok(())
    }
}

/// Random d-regular simple graph on n vertices with unit weights, drawn by
/// the pairing (configuration) model: pair up stubs uniformly, restart the
/// whole pairing whenever a self-loop or multi-edge appears.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d >= n {
        return Err(Error::Infeasible(format!(
            "degree {d} must be smaller than vertex count {n}"
        )));
    }
    if (n * d) % 2 != 0 {
        return Err(Error::Infeasible(format!(
            "n*d = {} is odd; a {d}-regular graph on {n} vertices does not exist",
            n * d
        )));
    }
    if d == 0 {
        return Graph::from_edges(n, std::iter::empty());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();

    for _attempt in 0..PAIRING_MAX_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(n * d / 2);
        let mut ok = true;
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                ok = false;
                break;
            }
        }
        if ok {
            return Graph::from_edges(n, seen.into_iter().map(|(i, j)| (i, j, 1.0)));
        }
    }
    Err(Error::NonConvergence {
        attempts: PAIRING_MAX_ATTEMPTS,
        n,
        d,
    })
}

/// Distance between sensor locations: sqrt(d_f^2 + d_a^2) with d_f the
/// haversine great-circle distance in km and d_a the altitude difference
/// in km. The spherical d_f approximates ellipsoidal geodesics to ~0.5%.
pub fn geo_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let d_f = haversine_km(a, b);
    let d_a = (a.altitude_km - b.altitude_km).abs();
    (d_f * d_f + d_a * d_a).sqrt()
}

fn haversine_km(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let lat1 = a.latitude_deg.to_radians();
    let lat2 = b.latitude_deg.to_radians();
    let dlat = lat2 - lat1;
    let dlon = (b.longitude_deg - a.longitude_deg).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Gaussian kernel weight exp(-d^2 / (2 sigma^2)).
pub fn kernel_weight(distance_km: f64, sigma_km: f64) -> f64 {
    (-distance_km * distance_km / (2.0 * sigma_km * sigma_km)).exp()
}

/// k-NN graph over sensor locations: edge (i, j) exists iff j is among i's
/// k nearest or i among j's k nearest (union rule), weighted by the
/// Gaussian kernel. Neighbor ties at equal distance prefer the lower
/// vertex index. Brute-force O(n^2) search.
pub fn knn_graph(points: &[GeoPoint], cfg: &KnnGraphConfig) -> Result<Graph> {
    cfg.validate()?;
    let n = points.len();
    if n < cfg.k + 1 {
        return Err(Error::TooFewPoints {
            needed: cfg.k + 1,
            got: n,
        });
    }

    let mut directed: HashSet<(usize, usize)> = HashSet::new();
    for i in 0..n {
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (geo_distance(&points[i], &points[j]), j))
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in dists.iter().take(cfg.k) {
            directed.insert((i, j));
        }
    }

    let mut pairs: Vec<(usize, usize)> = directed
        .iter()
        .filter_map(|&(i, j)| {
            let keep = if cfg.union_symmetrization {
                // emit each undirected pair once
                i < j || !directed.contains(&(j, i))
            } else {
                i < j && directed.contains(&(j, i))
            };
            keep.then_some((i.min(j), i.max(j)))
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let edges = pairs.into_iter().map(|(i, j)| {
        let d = geo_distance(&points[i], &points[j]);
        (i, j, kernel_weight(d, cfg.sigma_km))
    });
    Graph::from_edges(n, edges)
}
