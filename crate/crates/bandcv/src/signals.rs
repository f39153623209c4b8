//! Graph signal representation and synthesis: noisy bandlimited signals,
//! the graph Fourier transform, and the spectral split into in-band and
//! out-of-band coefficients.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{subvector, VertexSet};
use crate::spectral::SpectralBasis;

/// A real signal over the vertices of a graph, together with the set S of
/// vertices where the value counts as known.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    values: Vec<f64>,
    known_set: VertexSet,
}

impl GraphSignal {
    pub fn new(values: Vec<f64>, known_set: VertexSet) -> Result<Self> {
        known_set.validate(values.len())?;
        if known_set.is_empty() {
            return Err(Error::Infeasible("known set must be non-empty".into()));
        }
        Ok(GraphSignal { values, known_set })
    }

    /// Full ground-truth signal: every vertex known.
    pub fn full(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        GraphSignal::new(values, VertexSet::all(n))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn known_set(&self) -> &VertexSet {
        &self.known_set
    }

    pub fn unknown_set(&self) -> VertexSet {
        self.known_set.complement(self.values.len())
    }

    pub fn known_values(&self) -> Vec<f64> {
        subvector(&self.values, &self.known_set)
    }

    /// Same values, different known set.
    pub fn with_known_set(&self, known_set: VertexSet) -> Result<Self> {
        GraphSignal::new(self.values.clone(), known_set)
    }

    /// CSV serialization: `vertex,value,known` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,value,known\n");
        for (v, x) in self.values.iter().enumerate() {
            let known = self.known_set.contains(v) as u8;
            let _ = writeln!(out, "{v},{x:.17e},{known}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Parameters of a synthetic noisy bandlimited signal: x = U_R a + noise,
/// with the in-band part and the noise rescaled to exact per-vertex
/// mean-square powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandlimitedSpec {
    pub bandwidth: usize,
    pub signal_power: f64,
    pub noise_power: f64,
    pub seed: u64,
}

impl BandlimitedSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.bandwidth < 1 || self.bandwidth > n {
            return Err(Error::Infeasible(format!(
                "bandwidth {} outside [1, {n}]",
                self.bandwidth
            )));
        }
        if self.signal_power < 0.0 || self.noise_power < 0.0 {
            return Err(Error::Infeasible("powers must be non-negative".into()));
        }
        Ok(())
    }
}

/// Synthesize a noisy bandlimited ground-truth signal. The in-band
/// coefficients and the vertex-domain white noise are each drawn i.i.d.
/// standard normal, then rescaled so that ||U_R a||^2 / n and ||noise||^2 / n
/// hit the requested powers exactly. Deterministic per seed.
pub fn synth_bandlimited(basis: &SpectralBasis, spec: &BandlimitedSpec) -> Result<GraphSignal> {
    let n = basis.dimension();
    spec.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let coeffs: Vec<f64> = (0..spec.bandwidth)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let u_r = basis.submatrix(&VertexSet::all(n), &VertexSet::range(spec.bandwidth))?;
    let mut bandlimited = &u_r * DVector::from_vec(coeffs);
    rescale_to_power(&mut bandlimited, spec.signal_power);

    let mut noise = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
    rescale_to_power(&mut noise, spec.noise_power);

    let values = (bandlimited + noise).iter().copied().collect();
    GraphSignal::full(values)
}

fn rescale_to_power(v: &mut DVector<f64>, power: f64) {
    let n = v.len() as f64;
    let ms = v.norm_squared() / n;
    if power == 0.0 || ms == 0.0 {
        v.fill(0.0);
    } else {
        *v *= (power / ms).sqrt();
    }
}

/// Graph Fourier transform: U^T x.
pub fn gft(basis: &SpectralBasis, x: &[f64]) -> Result<Vec<f64>> {
    let n = basis.dimension();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let v = DVector::from_column_slice(x);
    Ok((basis.eigenvectors().transpose() * v).iter().copied().collect())
}

/// Inverse GFT: U x_hat.
pub fn igft(basis: &SpectralBasis, coeffs: &[f64]) -> Result<Vec<f64>> {
    let n = basis.dimension();
    if coeffs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: coeffs.len(),
        });
    }
    let v = DVector::from_column_slice(coeffs);
    Ok((basis.eigenvectors() * v).iter().copied().collect())
}

/// Split a signal's spectrum at bandwidth r: returns the in-band
/// coefficients (length r) and the out-of-band coefficients (length n-r).
pub fn spectral_split(basis: &SpectralBasis, x: &[f64], r: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = basis.dimension();
    if r < 1 || r >= n {
        return Err(Error::Infeasible(format!("split bandwidth {r} outside [1, {n})")));
    }
    let mut coeffs = gft(basis, x)?;
    let out_of_band = coeffs.split_off(r);
    Ok((coeffs, out_of_band))
}
