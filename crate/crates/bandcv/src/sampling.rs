//! Known-set selection and repeated K-fold partitioning of the known set.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::VertexSet;
use crate::spectral::SpectralBasis;

const GREEDY_RIDGE: f64 = 1e-8;

/// How the known vertex set S is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStrategy {
    /// Uniform sample without replacement.
    Random,
    /// Greedy D-optimal design: repeatedly add the vertex that maximizes
    /// log det(U_SR^T U_SR + eps I) for a reference bandwidth.
    GreedyDopt { reference_bandwidth: Option<usize> },
}

impl SelectionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionStrategy::Random => "random",
            SelectionStrategy::GreedyDopt { .. } => "greedy-dopt",
        }
    }
}

impl std::str::FromStr for SelectionStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SelectionStrategy::Random),
            "greedy-dopt" => Ok(SelectionStrategy::GreedyDopt {
                reference_bandwidth: None,
            }),
            other => Err(Error::Infeasible(format!(
                "unknown selection strategy {other:?} (expected random or greedy-dopt)"
            ))),
        }
    }
}

/// Select the known set S of size m.
pub fn select_known_set(
    basis: &SpectralBasis,
    m: usize,
    strategy: SelectionStrategy,
    seed: u64,
) -> Result<VertexSet> {
    let n = basis.dimension();
    if m > n {
        return Err(Error::Infeasible(format!(
            "cannot select {m} vertices from {n}"
        )));
    }
    match strategy {
        SelectionStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all.truncate(m);
            Ok(VertexSet::new(all))
        }
        SelectionStrategy::GreedyDopt { reference_bandwidth } => {
            let r_ref = reference_bandwidth.unwrap_or((m / 2).max(1)).min(n);
            greedy_dopt(basis, m, r_ref)
        }
    }
}

/// Greedy maximization of log det(U_SR^T U_SR + eps I). Uses the matrix
/// determinant lemma: adding row u changes the log-determinant by
/// ln(1 + u^T G^{-1} u), so each step picks the vertex with the largest
/// quadratic form; G^{-1} is maintained by a Sherman-Morrison update.
fn greedy_dopt(basis: &SpectralBasis, m: usize, r_ref: usize) -> Result<VertexSet> {
    let n = basis.dimension();
    if m <= r_ref {
        // log det stays dominated by the ridge until |S| reaches r_ref
        return Err(Error::Infeasible(format!(
            "greedy-dopt needs m > reference bandwidth (m={m}, r_ref={r_ref})"
        )));
    }
    let u_all = basis.submatrix(&VertexSet::all(n), &VertexSet::range(r_ref))?;
    let mut g_inv = DMatrix::<f64>::identity(r_ref, r_ref) / GREEDY_RIDGE;
    let mut chosen = vec![false; n];
    let mut selected = Vec::with_capacity(m);

    for _ in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for v in 0..n {
            if chosen[v] {
                continue;
            }
            let row: DVector<f64> = u_all.row(v).transpose();
            let gain = (&row.transpose() * &g_inv * &row)[(0, 0)];
            let better = match best {
                None => true,
                Some((_, b)) => gain > b, // ties keep the lower index
            };
            if better {
                best = Some((v, gain));
            }
        }
        let (v, gain) = best.expect("m <= n checked by caller");
        chosen[v] = true;
        selected.push(v);
        // Sherman-Morrison: (G + u u^T)^{-1} = G^{-1} - G^{-1}u u^T G^{-1} / (1 + gain)
        let row: DVector<f64> = u_all.row(v).transpose();
        let gu = &g_inv * &row;
        let denom = 1.0 + gain;
        g_inv -= (&gu * gu.transpose()) / denom;
    }
    Ok(VertexSet::new(selected))
}

/// One cross-validation fold: training set and held-out set partition S.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub repeat: usize,
    pub fold: usize,
    pub train: VertexSet,
    pub holdout: VertexSet,
}

/// A repeated K-fold partition of the known set S.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    known_set: VertexSet,
    folds: Vec<Fold>,
    k: usize,
    repeats: usize,
    seed: u64,
}

impl FoldPlan {
    pub fn folds(&self) -> &[Fold] {
        &self.folds
    }

    pub fn known_set(&self) -> &VertexSet {
        &self.known_set
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn repeats(&self) -> usize {
        self.repeats
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Build a plan from explicit folds, validating the partition
    /// invariants per repeat.
    pub fn from_folds(known_set: VertexSet, folds: Vec<Fold>, k: usize, repeats: usize, seed: u64) -> Result<Self> {
        if folds.len() != k * repeats {
            return Err(Error::Infeasible(format!(
                "expected {} folds, got {}",
                k * repeats,
                folds.len()
            )));
        }
        for rep in 0..repeats {
            let mut holdout_union = VertexSet::empty();
            let mut total = 0usize;
            for f in folds.iter().filter(|f| f.repeat == rep) {
                if !f.train.is_disjoint(&f.holdout) {
                    return Err(Error::Infeasible("fold train/holdout overlap".into()));
                }
                if f.train.union(&f.holdout) != known_set {
                    return Err(Error::Infeasible("fold does not cover S".into()));
                }
                if f.train.is_empty() {
                    return Err(Error::Infeasible("fold has empty training set".into()));
                }
                total += f.holdout.len();
                holdout_union = holdout_union.union(&f.holdout);
            }
            if holdout_union != known_set || total != known_set.len() {
                return Err(Error::Infeasible(format!(
                    "holdouts of repeat {rep} do not partition S"
                )));
            }
        }
        Ok(FoldPlan {
            known_set,
            folds,
            k,
            repeats,
            seed,
        })
    }

    /// CSV serialization: `repeat,fold,vertex,role` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("repeat,fold,vertex,role\n");
        for f in &self.folds {
            for v in f.train.iter() {
                let _ = writeln!(out, "{},{},{},train", f.repeat, f.fold, v);
            }
            for v in f.holdout.iter() {
                let _ = writeln!(out, "{},{},{},holdout", f.repeat, f.fold, v);
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Repeated K-fold split of S. Each repeat shuffles S, then deals it into
/// k holdout chunks; the first |S| mod k chunks get one extra element.
pub fn make_folds(known_set: &VertexSet, k: usize, repeats: usize, seed: u64) -> Result<FoldPlan> {
    let m = known_set.len();
    if k < 2 {
        return Err(Error::Infeasible(format!("need k >= 2 folds, got {k}")));
    }
    if k > m {
        return Err(Error::Infeasible(format!(
            "cannot split {m} known vertices into {k} folds"
        )));
    }
    if repeats < 1 {
        return Err(Error::Infeasible("need at least one repeat".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = m / k;
    let extra = m % k;
    let mut folds = Vec::with_capacity(k * repeats);
    for rep in 0..repeats {
        let mut shuffled: Vec<usize> = known_set.iter().collect();
        shuffled.shuffle(&mut rng);
        let mut offset = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            let holdout = VertexSet::new(shuffled[offset..offset + size].to_vec());
            offset += size;
            let train_vec: Vec<usize> = known_set.iter().filter(|v| !holdout.contains(*v)).collect();
            folds.push(Fold {
                repeat: rep,
                fold,
                train: VertexSet::new(train_vec),
                holdout,
            });
        }
    }
    FoldPlan::from_folds(known_set.clone(), folds, k, repeats, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::random_regular;
    use crate::graph::Graph;
    use crate::spectral::spectral_decompose;

    #[test]
    fn select_everything() {
        let b = spectral_decompose(&random_regular(12, 3, 1).unwrap()).unwrap();
        let s = select_known_set(&b, 12, SelectionStrategy::Random, 4).unwrap();
        assert_eq!(s, VertexSet::all(12));
    }

    #[test]
    fn random_selection_deterministic() {
        let b = spectral_decompose(&random_regular(30, 3, 2).unwrap()).unwrap();
        let a = select_known_set(&b, 10, SelectionStrategy::Random, 99).unwrap();
        let c = select_known_set(&b, 10, SelectionStrategy::Random, 99).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.len(), 10);
    }

    #[test]
    fn selection_overflow_rejected() {
        let b = spectral_decompose(&random_regular(10, 3, 2).unwrap()).unwrap();
        assert!(select_known_set(&b, 11, SelectionStrategy::Random, 0).is_err());
    }

    #[test]
    fn greedy_infeasible_when_m_not_above_r_ref() {
        let b = spectral_decompose(&random_regular(10, 3, 2).unwrap()).unwrap();
        let strat = SelectionStrategy::GreedyDopt {
            reference_bandwidth: Some(5),
        };
        assert!(select_known_set(&b, 5, strat, 0).is_err());
    }

    /// Exhaustive log-det oracle over all C(8,4) = 70 subsets of the
    /// 8-node path, compared against the greedy selection.
    #[test]
    fn greedy_dopt_matches_exhaustive_on_path() {
        let g = Graph::from_edges(8, (0..7).map(|i| (i, i + 1, 1.0))).unwrap();
        let b = spectral_decompose(&g).unwrap();
        let r_ref = 2;

        let logdet = |subset: &[usize]| -> f64 {
            let u = b
                .submatrix(&VertexSet::new(subset.to_vec()), &VertexSet::range(r_ref))
                .unwrap();
            let gram = u.transpose() * &u + DMatrix::identity(r_ref, r_ref) * GREEDY_RIDGE;
            gram.determinant().ln()
        };

        let mut best: Option<(Vec<usize>, f64)> = None;
        for a in 0..8 {
            for c in a + 1..8 {
                for d in c + 1..8 {
                    for e in d + 1..8 {
                        let subset = vec![a, c, d, e];
                        let v = logdet(&subset);
                        if best.as_ref().map_or(true, |(_, bv)| v > *bv) {
                            best = Some((subset, v));
                        }
                    }
                }
            }
        }
        let (best_set, best_val) = best.unwrap();

        let strat = SelectionStrategy::GreedyDopt {
            reference_bandwidth: Some(r_ref),
        };
        let greedy = select_known_set(&b, 4, strat, 0).unwrap();
        let greedy_val = logdet(greedy.indices());
        assert!(
            (greedy_val - best_val).abs() <= 1e-9 * best_val.abs().max(1.0),
            "greedy {:?} ({greedy_val}) vs exhaustive {:?} ({best_val})",
            greedy.indices(),
            best_set
        );
    }

    #[test]
    fn leave_one_out_folds() {
        let s = VertexSet::new((0..10).collect());
        let plan = make_folds(&s, 10, 1, 3).unwrap();
        assert_eq!(plan.folds().len(), 10);
        for f in plan.folds() {
            assert_eq!(f.holdout.len(), 1);
            assert_eq!(f.train.len(), 9);
        }
    }

    #[test]
    fn paper_scale_fold_structure() {
        let s = VertexSet::new((0..200).collect());
        let plan = make_folds(&s, 10, 50, 11).unwrap();
        assert_eq!(plan.folds().len(), 500);
        for rep in 0..50 {
            let mut seen = Vec::new();
            for f in plan.folds().iter().filter(|f| f.repeat == rep) {
                assert_eq!(f.holdout.len(), 20);
                seen.extend(f.holdout.iter());
            }
            assert_eq!(VertexSet::new(seen), s);
        }
    }

    #[test]
    fn remainder_distribution() {
        let s = VertexSet::new((0..11).collect());
        let plan = make_folds(&s, 10, 1, 0).unwrap();
        let sizes: Vec<usize> = plan.folds().iter().map(|f| f.holdout.len()).collect();
        assert_eq!(sizes.iter().filter(|&&s| s == 2).count(), 1);
        assert_eq!(sizes.iter().filter(|&&s| s == 1).count(), 9);
        assert_eq!(sizes[0], 2); // first fold takes the extra element
    }

    #[test]
    fn folds_deterministic_and_repeats_differ() {
        let s = VertexSet::new((0..30).map(|i| i * 2).collect());
        let a = make_folds(&s, 5, 50, 17).unwrap();
        let b = make_folds(&s, 5, 50, 17).unwrap();
        assert_eq!(a, b);
        // holdout patterns must differ across repeats
        let pattern = |rep: usize| -> Vec<Vec<usize>> {
            a.folds()
                .iter()
                .filter(|f| f.repeat == rep)
                .map(|f| f.holdout.indices().to_vec())
                .collect()
        };
        let first = pattern(0);
        assert!((1..50).any(|rep| pattern(rep) != first));
        let mut distinct = std::collections::HashSet::new();
        for rep in 0..50 {
            distinct.insert(format!("{:?}", pattern(rep)));
        }
        assert!(distinct.len() > 45, "only {} distinct repeats", distinct.len());
    }

    #[test]
    fn invalid_fold_parameters() {
        let s = VertexSet::new((0..5).collect());
        assert!(make_folds(&s, 6, 1, 0).is_err());
        assert!(make_folds(&s, 1, 1, 0).is_err());
    }

    #[test]
    fn fold_csv_has_roles() {
        let s = VertexSet::new((0..4).collect());
        let plan = make_folds(&s, 2, 1, 0).unwrap();
        let csv = plan.to_csv();
        assert!(csv.starts_with("repeat,fold,vertex,role\n"));
        assert!(csv.contains(",train"));
        assert!(csv.contains(",holdout"));
    }
}
