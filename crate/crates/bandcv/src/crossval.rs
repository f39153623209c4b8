//! Cross-validation estimators of the unknown-set reconstruction error.
//!
//! The naive estimator averages squared holdout residuals over folds. When
//! a fold's training set is poorly connected to its holdout, the fold's
//! error operator M_i is ill-conditioned and the naive estimate can land
//! orders of magnitude above the actual error. The weighted estimator
//! rotates each fold residual into the left singular basis of M_i and
//! divides the coordinates whose singular value exceeds 1, clipping the
//! operator's amplification at 1 while leaving benign folds untouched.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{subvector, VertexSet};
use crate::reconstruct::{error_operator_with_cutoff, pinv_with_cutoff, reconstruct_ls_with_cutoff, DEFAULT_SV_CUTOFF};
use crate::sampling::{Fold, FoldPlan};
use crate::spectral::SpectralBasis;

/// Estimator to aggregate over folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    Naive,
    Weighted,
}

/// Knobs of the cross-validation computation. The clip threshold of 1.0 is
/// the method's definition; it is exposed for research use only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossvalConfig {
    pub clip_threshold: f64,
    pub sv_cutoff: f64,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        CrossvalConfig {
            clip_threshold: 1.0,
            sv_cutoff: DEFAULT_SV_CUTOFF,
        }
    }
}

/// Per-fold residuals and conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct FoldError {
    pub repeat: usize,
    pub fold: usize,
    /// Holdout residual e(S_i^c).
    pub raw_error: Vec<f64>,
    /// Clipped residual e_new(S_i^c).
    pub weighted_error: Vec<f64>,
    /// Largest singular value of M_i.
    pub sigma_max: f64,
    /// Number of singular values at or above the clip threshold.
    pub clipped_count: usize,
    /// Condition number of the fold's fitting matrix U_{S_i R}.
    pub kappa: f64,
}

impl FoldError {
    pub fn raw_norm_squared(&self) -> f64 {
        self.raw_error.iter().map(|v| v * v).sum()
    }

    pub fn weighted_norm_squared(&self) -> f64 {
        self.weighted_error.iter().map(|v| v * v).sum()
    }
}

/// Compute one fold's residual and its clipped version. `values` is the
/// full-length vertex vector; only entries on the fold's train/holdout
/// sets are read.
pub fn fold_error(
    basis: &SpectralBasis,
    fold: &Fold,
    values: &[f64],
    r: usize,
    cfg: &CrossvalConfig,
) -> Result<FoldError> {
    let n = basis.dimension();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: values.len(),
        });
    }
    if r >= fold.train.len() {
        return Err(Error::Infeasible(format!(
            "bandwidth {r} not below fold training size {}",
            fold.train.len()
        )));
    }

    let band = VertexSet::range(r);
    let u_tr = basis.submatrix(&fold.train, &band)?;
    let p = pinv_with_cutoff(&u_tr, cfg.sv_cutoff)?;
    let x_train = DVector::from_vec(subvector(values, &fold.train));
    let coeffs = &p.pinv * x_train;

    let u_hr = basis.submatrix(&fold.holdout, &band)?;
    let predicted = u_hr * coeffs;
    let raw_error: Vec<f64> = fold
        .holdout
        .iter()
        .zip(predicted.iter())
        .map(|(v, pred)| values[v] - pred)
        .collect();

    let m_i = error_operator_with_cutoff(basis, &fold.train, &fold.holdout, r, cfg.sv_cutoff)?;
    let (weighted_error, sigma_max, clipped_count) =
        clip_residual(&m_i, &raw_error, cfg.clip_threshold);

    Ok(FoldError {
        repeat: fold.repeat,
        fold: fold.fold,
        raw_error,
        weighted_error,
        sigma_max,
        clipped_count,
        kappa: p.condition_number,
    })
}

/// Apply the singular-value clipping weight: with M = V S W^T (full V from
/// the symmetric eigendecomposition of M M^T), return S' V^T e where S'
/// has diagonal 1 for sigma below the threshold and threshold/sigma above
/// it. Diagonal positions beyond the number of singular values pass
/// through with weight 1.
fn clip_residual(m: &DMatrix<f64>, residual: &[f64], clip: f64) -> (Vec<f64>, f64, usize) {
    let h = m.nrows();
    if h == 0 {
        return (Vec::new(), 0.0, 0);
    }
    // Full left singular basis via M M^T: eigenvalues are squared singular
    // values and eigenvectors give every column of V, including the ones a
    // thin SVD would drop when |holdout| exceeds n - r.
    let gram = m * m.transpose();
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..h).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let e = DVector::from_column_slice(residual);
    let mut out = vec![0.0; h];
    let mut sigma_max = 0.0_f64;
    let mut clipped = 0;
    let rank_cap = h.min(m.ncols());
    for (pos, &idx) in order.iter().enumerate() {
        let sigma = eig.eigenvalues[idx].max(0.0).sqrt();
        if pos < rank_cap {
            sigma_max = sigma_max.max(sigma);
        }
        let weight = if pos < rank_cap && sigma >= clip {
            clipped += 1;
            clip / sigma
        } else {
            1.0
        };
        let coord = eig.eigenvectors.column(idx).dot(&e);
        out[pos] = weight * coord;
    }
    (out, sigma_max, clipped)
}

/// Which folds a bandwidth can use, and why the rest were skipped.
#[derive(Debug, Clone, Default)]
pub struct FoldUsage {
    pub usable: usize,
    pub skipped: usize,
}

/// Aggregate fold errors into the estimate: mean of squared fold-residual
/// norms over all usable folds across all repeats. Folds whose training
/// set is not larger than r are skipped and excluded from the divisor.
pub fn estimate_error(
    basis: &SpectralBasis,
    plan: &FoldPlan,
    values: &[f64],
    r: usize,
    mode: EstimatorMode,
    cfg: &CrossvalConfig,
) -> Result<f64> {
    let (errors, usage) = fold_errors_for_bandwidth(basis, plan, values, r, cfg)?;
    if usage.usable == 0 {
        return Err(Error::Infeasible(format!(
            "no usable folds at bandwidth {r} (all {} skipped)",
            usage.skipped
        )));
    }
    let sum: f64 = errors
        .iter()
        .map(|fe| match mode {
            EstimatorMode::Naive => fe.raw_norm_squared(),
            EstimatorMode::Weighted => fe.weighted_norm_squared(),
        })
        .sum();
    Ok(sum / usage.usable as f64)
}

fn fold_errors_for_bandwidth(
    basis: &SpectralBasis,
    plan: &FoldPlan,
    values: &[f64],
    r: usize,
    cfg: &CrossvalConfig,
) -> Result<(Vec<FoldError>, FoldUsage)> {
    let mut errors = Vec::new();
    let mut usage = FoldUsage::default();
    for fold in plan.folds() {
        if r >= fold.train.len() {
            usage.skipped += 1;
            continue;
        }
        errors.push(fold_error(basis, fold, values, r, cfg)?);
        usage.usable += 1;
    }
    Ok((errors, usage))
}

/// One row of a bandwidth sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub bandwidth: usize,
    /// Actual squared reconstruction error on S^c; present when ground
    /// truth was supplied and S^c is non-empty.
    pub actual: Option<f64>,
    pub naive: f64,
    pub weighted: f64,
    pub mean_kappa: f64,
    pub max_kappa: f64,
    /// Fraction of usable folds with at least one clipped singular value.
    pub clipped_frac: f64,
    pub skipped_folds: usize,
    pub usable_folds: usize,
    /// Mean holdout size over usable folds, for per-vertex normalization.
    pub mean_holdout: f64,
    /// Bandwidth cut falls inside an eigenvalue multiplicity cluster.
    pub splits_multiplicity: bool,
}

/// Result of sweeping candidate bandwidths.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Bandwidth minimizing the weighted estimate.
    pub argmin_weighted: usize,
    /// Bandwidth minimizing the naive estimate.
    pub argmin_naive: usize,
    /// Bandwidth minimizing the actual error, when available.
    pub argmin_actual: Option<usize>,
    /// Size of S^c, for normalizing the actual error.
    pub unknown_count: usize,
    /// `key=value` metadata lines written as `#` comments in the CSV.
    pub metadata: Vec<String>,
}

/// Sweep candidate bandwidths over a fold plan. `known_values` are the
/// signal values on `known` (in set order); `ground_truth` is the full
/// vertex vector when available. Bandwidths must be strictly increasing;
/// bandwidths with no usable fold are dropped with their skip reason
/// reflected in the remaining diagnostics.
pub fn sweep(
    basis: &SpectralBasis,
    known: &VertexSet,
    known_values: &[f64],
    bandwidths: &[usize],
    plan: &FoldPlan,
    ground_truth: Option<&[f64]>,
    cfg: &CrossvalConfig,
) -> Result<SweepResult> {
    let n = basis.dimension();
    known.validate(n)?;
    if known_values.len() != known.len() {
        return Err(Error::DimensionMismatch {
            expected: known.len(),
            got: known_values.len(),
        });
    }
    if bandwidths.is_empty() {
        return Err(Error::Infeasible("empty bandwidth sweep".into()));
    }
    if bandwidths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Infeasible(
            "sweep bandwidths must be strictly increasing".into(),
        ));
    }
    if plan.known_set() != known {
        return Err(Error::Infeasible(
            "fold plan was built for a different known set".into(),
        ));
    }
    if let Some(gt) = ground_truth {
        if gt.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: gt.len(),
            });
        }
    }

    // scatter known values into a full-length vector for fold indexing
    let mut values = vec![0.0; n];
    for (v, &x) in known.iter().zip(known_values) {
        values[v] = x;
    }
    let unknown = known.complement(n);

    // bandwidths are independent work items; collect preserves order
    let rows: Vec<Result<Option<SweepRow>>> = bandwidths
        .par_iter()
        .map(|&r| compute_row(basis, known, &values, &unknown, r, plan, ground_truth, cfg))
        .collect();

    let mut out = Vec::new();
    for row in rows {
        if let Some(row) = row? {
            out.push(row);
        }
    }
    if out.is_empty() {
        return Err(Error::Infeasible(
            "no sweep bandwidth had a usable fold".into(),
        ));
    }

    let argmin_by = |f: &dyn Fn(&SweepRow) -> f64| {
        out.iter()
            .min_by(|a, b| f(a).total_cmp(&f(b)))
            .map(|row| row.bandwidth)
            .unwrap()
    };
    let argmin_weighted = argmin_by(&|row| row.weighted);
    let argmin_naive = argmin_by(&|row| row.naive);
    let argmin_actual = if out.iter().all(|r| r.actual.is_some()) {
        Some(argmin_by(&|row| row.actual.unwrap()))
    } else {
        None
    };

    Ok(SweepResult {
        rows: out,
        argmin_weighted,
        argmin_naive,
        argmin_actual,
        unknown_count: unknown.len(),
        metadata: Vec::new(),
    })
}

#[allow(clippy::too_many_arguments)]
fn compute_row(
    basis: &SpectralBasis,
    known: &VertexSet,
    values: &[f64],
    unknown: &VertexSet,
    r: usize,
    plan: &FoldPlan,
    ground_truth: Option<&[f64]>,
    cfg: &CrossvalConfig,
) -> Result<Option<SweepRow>> {
    if r >= basis.dimension() || r < 1 {
        return Ok(None);
    }
    let (errors, usage) = fold_errors_for_bandwidth(basis, plan, values, r, cfg)?;
    if usage.usable == 0 {
        return Ok(None);
    }
    let usable = usage.usable as f64;
    let naive = errors.iter().map(FoldError::raw_norm_squared).sum::<f64>() / usable;
    let weighted = errors
        .iter()
        .map(FoldError::weighted_norm_squared)
        .sum::<f64>()
        / usable;
    let mean_kappa = errors.iter().map(|e| e.kappa).sum::<f64>() / usable;
    let max_kappa = errors.iter().map(|e| e.kappa).fold(0.0, f64::max);
    let clipped_frac = errors.iter().filter(|e| e.clipped_count > 0).count() as f64 / usable;
    let mean_holdout = errors.iter().map(|e| e.raw_error.len() as f64).sum::<f64>() / usable;

    let actual = match ground_truth {
        Some(gt) if r < known.len() => {
            let recon = reconstruct_ls_with_cutoff(
                basis,
                known,
                &subvector(values, known),
                r,
                cfg.sv_cutoff,
            )?;
            let truth = subvector(gt, unknown);
            Some(
                truth
                    .iter()
                    .zip(&recon.estimate)
                    .map(|(t, e)| (t - e) * (t - e))
                    .sum(),
            )
        }
        _ => None,
    };

    Ok(Some(SweepRow {
        bandwidth: r,
        actual,
        naive,
        weighted,
        mean_kappa,
        max_kappa,
        clipped_frac,
        skipped_folds: usage.skipped,
        usable_folds: usage.usable,
        mean_holdout,
        splits_multiplicity: basis.splits_multiplicity(r),
    }))
}

impl SweepResult {
    /// CSV table with `#`-prefixed metadata lines. Errors are the raw
    /// squared sums from the estimator definitions.
    pub fn to_csv(&self) -> String {
        self.render_csv(false)
    }

    /// Per-vertex normalized variant: actual error divided by |S^c|,
    /// estimates divided by the mean holdout size of their folds.
    pub fn to_csv_normalized(&self) -> String {
        self.render_csv(true)
    }

    fn render_csv(&self, normalized: bool) -> String {
        let mut out = String::new();
        for meta in &self.metadata {
            let _ = writeln!(out, "# {meta}");
        }
        let _ = writeln!(out, "# argmin_weighted={}", self.argmin_weighted);
        let _ = writeln!(out, "# argmin_naive={}", self.argmin_naive);
        if let Some(a) = self.argmin_actual {
            let _ = writeln!(out, "# argmin_actual={a}");
        }
        let _ = writeln!(out, "# normalized={}", normalized as u8);
        let _ = writeln!(
            out,
            "r,actual,naive,weighted,mean_kappa,max_kappa,clipped_frac,skipped_folds"
        );
        for row in &self.rows {
            let (actual, naive, weighted) = if normalized {
                let div_actual = (self.unknown_count.max(1)) as f64;
                let div_est = row.mean_holdout.max(1.0);
                (
                    row.actual.map(|a| a / div_actual),
                    row.naive / div_est,
                    row.weighted / div_est,
                )
            } else {
                (row.actual, row.naive, row.weighted)
            };
            let actual_str = actual.map_or(String::from("NA"), |a| format!("{a:.17e}"));
            let _ = writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.6e},{:.6e},{:.4},{}",
                row.bandwidth,
                actual_str,
                naive,
                weighted,
                row.mean_kappa,
                row.max_kappa,
                row.clipped_frac,
                row.skipped_folds
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn write_csv_normalized(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_normalized())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::random_regular;
    use crate::graph::Graph;
    use crate::sampling::{make_folds, Fold};
    use crate::signals::{synth_bandlimited, BandlimitedSpec};
    use crate::spectral::spectral_decompose;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, seed: u64) -> (SpectralBasis, Vec<f64>) {
        let b = spectral_decompose(&random_regular(n, 4, seed).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xff);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (b, x)
    }

    #[test]
    fn bandlimited_signal_gives_zero_fold_error() {
        let b = spectral_decompose(&random_regular(24, 4, 3).unwrap()).unwrap();
        let r = 4;
        let x = synth_bandlimited(
            &b,
            &BandlimitedSpec {
                bandwidth: r,
                signal_power: 1.0,
                noise_power: 0.0,
                seed: 5,
            },
        )
        .unwrap();
        let s = VertexSet::new((0..18).collect());
        let plan = make_folds(&s, 3, 1, 7).unwrap();
        for fold in plan.folds() {
            let fe = fold_error(&b, fold, x.values(), r, &CrossvalConfig::default()).unwrap();
            assert!(fe.raw_norm_squared().sqrt() <= 1e-8, "raw {}", fe.raw_norm_squared());
        }
    }

    #[test]
    fn constant_signal_singleton_holdout_on_k4() {
        let g = Graph::from_edges(4, vec![
            (0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0),
        ])
        .unwrap();
        let b = spectral_decompose(&g).unwrap();
        let fold = Fold {
            repeat: 0,
            fold: 0,
            train: VertexSet::new(vec![0, 1, 2]),
            holdout: VertexSet::new(vec![3]),
        };
        let x = vec![2.0; 4];
        let fe = fold_error(&b, &fold, &x, 1, &CrossvalConfig::default()).unwrap();
        assert!(fe.raw_norm_squared() <= 1e-16);
    }

    #[test]
    fn weighting_never_amplifies_folds() {
        let (b, x) = setup(30, 11);
        let s = VertexSet::new((0..24).collect());
        let plan = make_folds(&s, 4, 2, 2).unwrap();
        let cfg = CrossvalConfig::default();
        for fold in plan.folds() {
            let fe = fold_error(&b, fold, &x, 3, &cfg).unwrap();
            assert!(fe.weighted_norm_squared() <= fe.raw_norm_squared() + 1e-12);
        }
    }

    #[test]
    fn weighting_is_isometric_when_all_sigmas_below_one() {
        // synthetic operator with singular values all < 1: the weighting
        // reduces to an orthogonal rotation and must preserve the norm
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let raw = DMatrix::from_fn(4, 9, |_, _| rng.gen_range(-1.0..1.0));
            let m = svd_rebuild(&raw, &[0.1, 0.3, 0.5, 0.7]);
            let e: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (e_new, sigma_max, clipped) = clip_residual(&m, &e, 1.0);
            assert!(sigma_max < 1.0);
            assert_eq!(clipped, 0);
            let n_old: f64 = e.iter().map(|v| v * v).sum();
            let n_new: f64 = e_new.iter().map(|v| v * v).sum();
            assert!((n_old - n_new).abs() <= 1e-10 * n_old.max(1e-30));
        }
    }

    /// Rebuild a matrix with the same singular vectors but prescribed
    /// singular values.
    fn svd_rebuild(raw: &DMatrix<f64>, sigmas: &[f64]) -> DMatrix<f64> {
        let svd = raw.clone().svd(true, true);
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let mut s = DMatrix::zeros(u.ncols(), vt.nrows());
        for (i, &sv) in sigmas.iter().enumerate().take(s.nrows().min(s.ncols())) {
            s[(i, i)] = sv;
        }
        u * s * vt
    }

    #[test]
    fn rank_one_alignment_divides_by_sigma() {
        // synthetic operator with a single singular value of 10; residual
        // aligned with its left singular vector must shrink by 10
        let v = DVector::from_vec(vec![0.6, 0.8]);
        let w = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let m = 10.0 * &v * w.transpose();
        let scaled: DVector<f64> = 2.0 * &v;
        let e: Vec<f64> = scaled.iter().copied().collect();
        let (e_new, sigma_max, clipped) = clip_residual(&m, &e, 1.0);
        assert!((sigma_max - 10.0).abs() < 1e-12);
        assert_eq!(clipped, 1);
        let norm_new: f64 = e_new.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm_new - 0.2).abs() < 1e-10, "norm {norm_new}");
    }

    #[test]
    fn composite_operator_singular_values_are_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..100 {
            let rows = rng.gen_range(1..8);
            let cols = rng.gen_range(1..12);
            let m = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0));
            // reconstruct the composite S' V^T M by columns through clip_residual
            let mut composite = DMatrix::zeros(rows, cols);
            for c in 0..cols {
                let col: Vec<f64> = m.column(c).iter().copied().collect();
                let (out, _, _) = clip_residual(&m, &col, 1.0);
                composite.set_column(c, &DVector::from_vec(out));
            }
            let mut got: Vec<f64> = composite
                .svd(false, false)
                .singular_values
                .iter()
                .copied()
                .collect();
            let mut want: Vec<f64> = m
                .clone()
                .svd(false, false)
                .singular_values
                .iter()
                .map(|&s| s.min(1.0))
                .collect();
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            got.resize(want.len().min(got.len()), 0.0);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-10, "trial {trial}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn single_fold_estimate_is_its_norm() {
        let (b, x) = setup(20, 13);
        let s = VertexSet::new((0..16).collect());
        let plan = make_folds(&s, 2, 1, 5).unwrap();
        let cfg = CrossvalConfig::default();
        let est = estimate_error(&b, &plan, &x, 3, EstimatorMode::Naive, &cfg).unwrap();
        let manual: f64 = plan
            .folds()
            .iter()
            .map(|f| fold_error(&b, f, &x, 3, &cfg).unwrap().raw_norm_squared())
            .sum::<f64>()
            / 2.0;
        assert!((est - manual).abs() <= 1e-12 * manual.max(1.0));
    }

    #[test]
    fn weighted_never_exceeds_naive() {
        for seed in 0..10 {
            let (b, x) = setup(26, 40 + seed);
            let s = VertexSet::new((0..20).collect());
            let plan = make_folds(&s, 5, 2, seed).unwrap();
            let cfg = CrossvalConfig::default();
            for r in [2, 4, 8] {
                let naive = estimate_error(&b, &plan, &x, r, EstimatorMode::Naive, &cfg).unwrap();
                let weighted =
                    estimate_error(&b, &plan, &x, r, EstimatorMode::Weighted, &cfg).unwrap();
                assert!(weighted <= naive + 1e-12, "r={r}: {weighted} > {naive}");
            }
        }
    }

    #[test]
    fn skipped_folds_excluded_from_divisor() {
        let (b, x) = setup(20, 50);
        // uneven plan: k=3 over 7 vertices gives training sizes 4 or 5
        let s = VertexSet::new((0..7).collect());
        let plan = make_folds(&s, 3, 1, 1).unwrap();
        let cfg = CrossvalConfig::default();
        // r = 4: folds with training size 4 get skipped
        let r = 4;
        let usable: Vec<&Fold> = plan.folds().iter().filter(|f| f.train.len() > r).collect();
        assert!(!usable.is_empty() && usable.len() < plan.folds().len());
        let est = estimate_error(&b, &plan, &x, r, EstimatorMode::Naive, &cfg).unwrap();
        let manual: f64 = usable
            .iter()
            .map(|f| fold_error(&b, f, &x, r, &cfg).unwrap().raw_norm_squared())
            .sum::<f64>()
            / usable.len() as f64;
        assert!((est - manual).abs() <= 1e-12 * manual.max(1.0));
        // r too large for every fold
        assert!(estimate_error(&b, &plan, &x, 6, EstimatorMode::Naive, &cfg).is_err());
    }

    #[test]
    fn sweep_finds_noiseless_bandwidth() {
        let b = spectral_decompose(&random_regular(60, 4, 6).unwrap()).unwrap();
        let true_bw = 5;
        let x = synth_bandlimited(
            &b,
            &BandlimitedSpec {
                bandwidth: true_bw,
                signal_power: 1.0,
                noise_power: 0.0,
                seed: 8,
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut all: Vec<usize> = (0..60).collect();
        all.shuffle(&mut rng);
        let s = VertexSet::new(all[..30].to_vec());
        let plan = make_folds(&s, 5, 2, 3).unwrap();
        let bandwidths: Vec<usize> = (1..=10).collect();
        let res = sweep(
            &b,
            &s,
            &subvector(x.values(), &s),
            &bandwidths,
            &plan,
            Some(x.values()),
            &CrossvalConfig::default(),
        )
        .unwrap();
        // every r at or above the true bandwidth recovers exactly, so the
        // actual-error curve is flat at ~0 there and the argmin sits in
        // that region
        for row in &res.rows {
            if row.bandwidth >= true_bw {
                assert!(row.actual.unwrap() <= 1e-8, "r={}", row.bandwidth);
            } else {
                assert!(row.actual.unwrap() > 1e-8, "r={}", row.bandwidth);
            }
        }
        assert!(res.argmin_actual.unwrap() >= true_bw);
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let (b, x) = setup(30, 70);
        let s = VertexSet::new((0..24).collect());
        let plan = make_folds(&s, 4, 3, 9).unwrap();
        let bw: Vec<usize> = vec![2, 4, 6, 8];
        let run = || {
            sweep(
                &b,
                &s,
                &subvector(&x, &s),
                &bw,
                &plan,
                Some(&x),
                &CrossvalConfig::default(),
            )
            .unwrap()
        };
        let a = run();
        let c = run();
        assert_eq!(a.to_csv(), c.to_csv());
        let rs: Vec<usize> = a.rows.iter().map(|r| r.bandwidth).collect();
        assert_eq!(rs, bw);
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let (b, x) = setup(20, 80);
        let s = VertexSet::new((0..10).collect());
        let plan = make_folds(&s, 2, 1, 0).unwrap();
        let cfg = CrossvalConfig::default();
        assert!(sweep(&b, &s, &subvector(&x, &s), &[], &plan, None, &cfg).is_err());
        assert!(sweep(&b, &s, &subvector(&x, &s), &[3, 3], &plan, None, &cfg).is_err());
        // bandwidth above every training size
        assert!(sweep(&b, &s, &subvector(&x, &s), &[9], &plan, None, &cfg).is_err());
    }

    #[test]
    fn csv_shape_and_normalization() {
        let (b, x) = setup(24, 90);
        let s = VertexSet::new((0..18).collect());
        let plan = make_folds(&s, 3, 1, 2).unwrap();
        let res = sweep(
            &b,
            &s,
            &subvector(&x, &s),
            &[2, 4],
            &plan,
            Some(&x),
            &CrossvalConfig::default(),
        )
        .unwrap();
        let csv = res.to_csv();
        let header = csv
            .lines()
            .find(|l| !l.starts_with('#'))
            .unwrap();
        assert_eq!(
            header,
            "r,actual,naive,weighted,mean_kappa,max_kappa,clipped_frac,skipped_folds"
        );
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);

        let norm = res.to_csv_normalized();
        let row = res.rows.first().unwrap();
        let expect = row.naive / row.mean_holdout;
        assert!(norm.contains(&format!("{expect:.17e}")));
    }
}
