//! Trimmed inner products and the robust surrogate pair built from them.
//!
//! A trimmed inner product discards the `n_o` elementwise products of
//! largest magnitude and sums the rest with their signs. Ranking is by
//! `(|u_i v_i|, i)`, so among equal magnitudes the lower index is kept first.
//! The kept products are always summed in ascending index order, which
//! makes every entry independent of how the work is scheduled.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{RenError, Result};
use crate::model::{Dataset, TrimmedSurrogates};
use crate::par::{map_indexed, Execution};

/// Reusable buffers for repeated trimmed products of the same length.
#[derive(Default)]
pub(crate) struct TrimScratch {
    products: Vec<f64>,
    order: Vec<usize>,
}

impl TrimScratch {
    fn trimmed_dot(&mut self, u: &[f64], v: &[f64], trim: usize) -> f64 {
        debug_assert_eq!(u.len(), v.len());
        debug_assert!(trim < u.len());
        if trim == 0 {
            return u.iter().zip(v).fold(0.0, |acc, (a, b)| acc + a * b);
        }
        self.products.clear();
        self.products.extend(u.iter().zip(v).map(|(a, b)| a * b));
        trimmed_sum(&self.products, trim, &mut self.order)
    }
}

fn rank_cmp(products: &[f64], a: usize, b: usize) -> Ordering {
    products[a].abs().total_cmp(&products[b].abs()).then(a.cmp(&b))
}

/// Sums all but the `trim` largest-magnitude entries, in index order.
fn trimmed_sum(products: &[f64], trim: usize, order: &mut Vec<usize>) -> f64 {
    let keep = products.len() - trim;
    order.clear();
    order.extend(0..products.len());
    let (_, &mut pivot, _) = order.select_nth_unstable_by(keep - 1, |&a, &b| rank_cmp(products, a, b));
    products
        .iter()
        .enumerate()
        .filter(|&(i, _)| rank_cmp(products, i, pivot) != Ordering::Greater)
        .fold(0.0, |acc, (_, p)| acc + p)
}

/// Signed sum of the `m − trim_count` elementwise products `u_i·v_i` of
/// smallest magnitude.
pub fn trimmed_inner_product(u: ArrayView1<f64>, v: ArrayView1<f64>, trim_count: usize) -> Result<f64> {
    if u.len() != v.len() {
        return Err(RenError::DimensionMismatch(format!(
            "vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    if trim_count >= u.len() {
        return Err(RenError::TrimTooLarge { trim: trim_count, len: u.len() });
    }
    if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(RenError::NonFinite("trimmed inner product input"));
    }
    let u = u.to_vec();
    let v = v.to_vec();
    Ok(TrimScratch::default().trimmed_dot(&u, &v, trim_count))
}

/// The α-independent part of the surrogates: the trimmed Gram matrix
/// `T_ij = trimmed⟨X_i, X_j⟩` and cross vector `c_j = trimmed⟨X_j, y⟩`.
///
/// `Γ̂ = α·T + (1−α)·I` and `γ̂ = c`, so one `TrimmedGram` serves a whole
/// sweep over α at fixed data and trim count.
#[derive(Clone, Debug)]
pub struct TrimmedGram {
    gram: Option<Array2<f64>>,
    cross: Array1<f64>,
    trim_count: usize,
}

impl TrimmedGram {
    pub fn compute(data: &Dataset, trim_count: usize, exec: Execution) -> Result<Self> {
        Self::compute_inner(data, trim_count, true, exec)
    }

    /// Only the cross vector; enough for `alpha == 0`.
    pub fn compute_cross_only(data: &Dataset, trim_count: usize, exec: Execution) -> Result<Self> {
        Self::compute_inner(data, trim_count, false, exec)
    }

    fn compute_inner(data: &Dataset, trim_count: usize, with_gram: bool, exec: Execution) -> Result<Self> {
        let m = data.rows();
        if trim_count >= m {
            return Err(RenError::TrimTooLarge { trim: trim_count, len: m });
        }
        let x = data.covariates();
        let y = data.responses();
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(RenError::NonFinite("dataset"));
        }
        let p = data.p();
        // Column-contiguous copy so each trimmed product walks two slices.
        let columns: Vec<Vec<f64>> = (0..p).map(|j| x.column(j).to_vec()).collect();
        let y = y.to_vec();

        let cross = map_indexed(exec, p, |j| TrimScratch::default().trimmed_dot(&columns[j], &y, trim_count));
        let cross = Array1::from(cross);

        let gram = with_gram.then(|| {
            let upper = map_indexed(exec, p, |i| {
                let mut scratch = TrimScratch::default();
                (i..p)
                    .map(|j| scratch.trimmed_dot(&columns[i], &columns[j], trim_count))
                    .collect::<Vec<f64>>()
            });
            let mut gram = Array2::<f64>::zeros((p, p));
            for (i, row) in upper.into_iter().enumerate() {
                for (offset, value) in row.into_iter().enumerate() {
                    let j = i + offset;
                    gram[[i, j]] = value;
                    gram[[j, i]] = value;
                }
            }
            gram
        });

        Ok(TrimmedGram { gram, cross, trim_count })
    }

    pub fn trim_count(&self) -> usize {
        self.trim_count
    }

    pub fn cross(&self) -> ArrayView1<'_, f64> {
        self.cross.view()
    }

    pub fn gram(&self) -> Option<&Array2<f64>> {
        self.gram.as_ref()
    }

    /// Mixes in the identity: `Γ̂ = α·T + (1−α)·I`, `γ̂ = c`.
    pub fn surrogates(&self, alpha: f64) -> Result<TrimmedSurrogates> {
        check_alpha(alpha)?;
        let p = self.cross.len();
        let gamma_mat = if alpha == 0.0 {
            Array2::eye(p)
        } else {
            let gram = self.gram.as_ref().ok_or_else(|| {
                RenError::InvalidParameter("trimmed Gram matrix was not computed; alpha must be 0".into())
            })?;
            let mut mat = gram.mapv(|t| alpha * t);
            if alpha != 1.0 {
                for i in 0..p {
                    mat[[i, i]] += 1.0 - alpha;
                }
            }
            mat
        };
        Ok(TrimmedSurrogates::from_parts_unchecked(gamma_mat, self.cross.clone(), alpha, self.trim_count))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(RenError::InvalidParameter(format!("alpha {alpha} outside [0, 1]")))
    }
}

/// Builds `(Γ̂, γ̂)` with the default execution mode.
pub fn build_surrogates(data: &Dataset, alpha: f64, trim_count: usize) -> Result<TrimmedSurrogates> {
    build_surrogates_with(data, alpha, trim_count, Execution::default())
}

pub fn build_surrogates_with(
    data: &Dataset,
    alpha: f64,
    trim_count: usize,
    exec: Execution,
) -> Result<TrimmedSurrogates> {
    check_alpha(alpha)?;
    let gram = if alpha == 0.0 {
        TrimmedGram::compute_cross_only(data, trim_count, exec)?
    } else {
        TrimmedGram::compute(data, trim_count, exec)?
    };
    gram.surrogates(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1, Array2};

    /// Full sort by (|product|, index); keep the first m − trim; sum in index order.
    fn oracle(u: &[f64], v: &[f64], trim: usize) -> f64 {
        let products: Vec<f64> = u.iter().zip(v).map(|(a, b)| a * b).collect();
        let mut idx: Vec<usize> = (0..products.len()).collect();
        idx.sort_by(|&a, &b| {
            products[a].abs().partial_cmp(&products[b].abs()).unwrap().then(a.cmp(&b))
        });
        let mut kept = idx[..products.len() - trim].to_vec();
        kept.sort_unstable();
        let mut s = 0.0;
        for i in kept {
            s += products[i];
        }
        s
    }

    fn tip(u: &[f64], v: &[f64], trim: usize) -> f64 {
        trimmed_inner_product(ArrayView1::from(u), ArrayView1::from(v), trim).unwrap()
    }

    #[test]
    fn untrimmed_equals_dot() {
        assert_eq!(tip(&[1.0, -2.0], &[3.0, 4.0], 0), -5.0);
    }

    #[test]
    fn drops_largest_product() {
        assert_eq!(oracle(&[1.0, 2.0, 3.0], &[1.0, 1.0, 10.0], 1), 3.0);
        assert_eq!(tip(&[1.0, 2.0, 3.0], &[1.0, 1.0, 10.0], 1), 3.0);
    }

    #[test]
    fn drops_single_nonzero() {
        assert_eq!(oracle(&[5.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 1), 0.0);
        assert_eq!(tip(&[5.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 1), 0.0);
    }

    #[test]
    fn ties_keep_lower_index() {
        // Products (2, -2, 2): trimming one drops index 2, keeps 0 and 1.
        assert_eq!(tip(&[1.0, -1.0, 1.0], &[2.0, 2.0, 2.0], 1), 0.0);
        // Products (-2, 2, 2): trimming one drops index 2 → -2 + 2.
        assert_eq!(tip(&[-1.0, 1.0, 1.0], &[2.0, 2.0, 2.0], 1), 0.0);
        // Products (2, 2, -2): trimming one drops index 2 → 4.
        assert_eq!(tip(&[1.0, 1.0, -1.0], &[2.0, 2.0, 2.0], 1), 4.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = array![1.0, 2.0];
        let b = array![1.0];
        assert!(matches!(
            trimmed_inner_product(a.view(), b.view(), 0),
            Err(RenError::DimensionMismatch(_))
        ));
        assert!(matches!(
            trimmed_inner_product(a.view(), a.view(), 2),
            Err(RenError::TrimTooLarge { .. })
        ));
        let nan = array![1.0, f64::NAN];
        assert!(trimmed_inner_product(nan.view(), a.view(), 0).is_err());
    }

    #[test]
    fn matches_oracle_on_random_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let m = rng.random_range(1..=30);
            // Coarse grid values force many magnitude ties.
            let u: Vec<f64> = (0..m).map(|_| rng.random_range(-3i32..=3) as f64 * 0.5).collect();
            let v: Vec<f64> = (0..m).map(|_| rng.random_range(-3i32..=3) as f64).collect();
            let trim = rng.random_range(0..m);
            assert_eq!(tip(&u, &v, trim).to_bits(), oracle(&u, &v, trim).to_bits());
        }
    }

    fn dataset(x: Array2<f64>, y: Array1<f64>, outliers: usize) -> Dataset {
        let rows = x.nrows();
        Dataset::new(x, y, rows - outliers, outliers, None).unwrap()
    }

    #[test]
    fn planted_row_is_trimmed_everywhere() {
        let d = dataset(array![[1.0, 0.0], [0.0, 1.0], [10.0, 10.0]], array![1.0, 1.0, 20.0], 1);
        let s = build_surrogates(&d, 1.0, 1).unwrap();
        assert_eq!(s.gamma_mat(), array![[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(s.gamma_vec(), array![1.0, 1.0]);
    }

    #[test]
    fn alpha_zero_gives_identity() {
        let d = dataset(array![[1.0, 3.0], [-2.0, 1.0], [10.0, 10.0]], array![1.0, 1.0, 20.0], 1);
        for trim in 0..3 {
            let s = build_surrogates(&d, 0.0, trim).unwrap();
            assert_eq!(s.gamma_mat(), Array2::<f64>::eye(2));
        }
    }

    #[test]
    fn untrimmed_lasso_surrogates_are_exact() {
        let x = array![[1.5, -0.25, 3.0], [0.1, 0.7, -1.0], [2.0, 2.0, 0.3], [-0.6, 0.9, 0.05]];
        let y = array![0.3, -1.1, 2.2, 0.9];
        let d = dataset(x.clone(), y.clone(), 0);
        let s = build_surrogates(&d, 1.0, 0).unwrap();
        for i in 0..3 {
            let mut c = 0.0;
            for r in 0..4 {
                c += x[[r, i]] * y[r];
            }
            assert_eq!(s.gamma_vec()[i], c);
            for j in 0..3 {
                let mut g = 0.0;
                for r in 0..4 {
                    g += x[[r, i]] * x[[r, j]];
                }
                assert_eq!(s.gamma_mat()[[i, j]], g);
            }
        }
    }

    #[test]
    fn mixing_diagonal_floor() {
        let x = array![[1.5, -0.25], [0.1, 0.7], [2.0, 2.0]];
        let d = dataset(x, array![0.3, -1.1, 2.2], 1);
        let s = build_surrogates(&d, 0.3, 1).unwrap();
        for i in 0..2 {
            assert!(s.gamma_mat()[[i, i]] >= 0.7);
        }
        assert!(build_surrogates(&d, 1.5, 0).is_err());
        assert!(build_surrogates(&d, 0.5, 3).is_err());
    }

    #[test]
    fn cross_only_refuses_positive_alpha() {
        let d = dataset(array![[1.0], [2.0]], array![1.0, 2.0], 0);
        let g = TrimmedGram::compute_cross_only(&d, 0, Execution::Sequential).unwrap();
        assert!(g.surrogates(0.0).is_ok());
        assert!(g.surrogates(0.5).is_err());
    }
}
