//! Wedge-space linear algebra on the truncated mode space.
//!
//! For a separable Hilbert space with orthonormal basis e_1, e_2, … the
//! k-blades e_{i_1} ∧ ⋯ ∧ e_{i_k} over strictly increasing index tuples
//! form an orthonormal basis of ∧^k H under the Gram-determinant inner
//! product ⟨v_1∧⋯∧v_k, w_1∧⋯∧w_k⟩ = det[(v_i, w_j)]. On the truncated
//! space the wedge space has dimension C(N, k); everything here is dense
//! and meant for analysis scale (the production FTLE path propagates k
//! tangent vectors and never materializes ∧^k).
//!
//! `‖∧^k A‖ = max{|det(A|_E)| : dim E = k}` equals the product of the k
//! largest singular values; the compound matrix and the induced derivative
//! operator B̂^{(k)} (the t-derivative at 0 of ∧^k e^{Bt}) are provided for
//! oracle cross-checks.

use nalgebra::DMatrix;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// A strictly increasing tuple of 1-based mode indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WedgeIndex(Vec<usize>);

impl WedgeIndex {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty wedge index".into()));
        }
        if indices[0] == 0 || indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "wedge index must be strictly increasing and 1-based, got {indices:?}"
            )));
        }
        Ok(Self(indices))
    }

    /// The distinguished index (1, …, k).
    pub fn distinguished(k: usize) -> Self {
        Self((1..=k).collect())
    }

    pub fn grade(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

impl std::fmt::Display for WedgeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Enumerated blade basis of ∧^k over N modes, with rank lookup.
#[derive(Debug, Clone)]
pub struct WedgeBasis {
    n: usize,
    k: usize,
    indices: Vec<WedgeIndex>,
    rank: HashMap<Vec<usize>, usize>,
}

impl WedgeBasis {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "wedge grade {k} out of range for {n} modes"
            )));
        }
        let mut indices = Vec::new();
        let mut cur: Vec<usize> = (1..=k).collect();
        loop {
            indices.push(WedgeIndex(cur.clone()));
            // lexicographic successor
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                if cur[i - 1] < n - (k - i) {
                    cur[i - 1] += 1;
                    for j in i..k {
                        cur[j] = cur[j - 1] + 1;
                    }
                    break;
                }
                i -= 1;
            }
            if i == 0 {
                break;
            }
        }
        let rank = indices
            .iter()
            .enumerate()
            .map(|(r, ix)| (ix.0.clone(), r))
            .collect();
        Ok(Self { n, k, indices, rank })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn grade(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[WedgeIndex] {
        &self.indices
    }

    pub fn rank_of(&self, index: &WedgeIndex) -> Option<usize> {
        self.rank.get(&index.0).copied()
    }

    /// Rank of the distinguished blade (1,…,k); always 0 in this ordering.
    pub fn distinguished_rank(&self) -> usize {
        0
    }
}

/// A grade-k element of the wedge space in blade coordinates.
#[derive(Debug, Clone)]
pub struct WedgeVector {
    basis: WedgeBasis,
    coeffs: Vec<f64>,
}

impl WedgeVector {
    pub fn zero(basis: WedgeBasis) -> Self {
        let coeffs = vec![0.0; basis.dim()];
        Self { basis, coeffs }
    }

    pub fn basis(&self) -> &WedgeBasis {
        &self.basis
    }

    pub fn grade(&self) -> usize {
        self.basis.grade()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, index: &WedgeIndex) -> f64 {
        self.basis
            .rank_of(index)
            .map_or(0.0, |r| self.coeffs[r])
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&WedgeIndex, f64)> {
        self.basis
            .indices
            .iter()
            .zip(self.coeffs.iter().copied())
    }
}

fn det_small(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().lu().determinant(),
    }
}

/// The blade v_1 ∧ ⋯ ∧ v_k in coordinates: the coefficient at an index
/// tuple is the corresponding k×k minor determinant. Linearly dependent
/// inputs give the zero vector.
pub fn blade(vectors: &[SpectralField]) -> Result<WedgeVector> {
    if vectors.is_empty() {
        return Err(Error::InvalidParameter("blade of no vectors".into()));
    }
    let n = vectors[0].domain().modes();
    let k = vectors.len();
    let basis = WedgeBasis::new(n, k)?;
    let mut out = WedgeVector::zero(basis);
    let mut minor = DMatrix::zeros(k, k);
    for (r, ix) in out.basis.indices.iter().enumerate() {
        for (row, &mode) in ix.0.iter().enumerate() {
            for (col, v) in vectors.iter().enumerate() {
                minor[(row, col)] = v.coeffs()[mode - 1];
            }
        }
        out.coeffs[r] = det_small(&minor);
    }
    Ok(out)
}

/// Gram determinant det[(v_i, v_j)] of a family of fields.
pub fn gram_determinant(vectors: &[SpectralField]) -> f64 {
    let k = vectors.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = vectors[i].h_inner(&vectors[j]);
        }
    }
    det_small(&g)
}

/// Singular values of a dense matrix via the symmetric eigendecomposition
/// of AᵀA, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigen();
    let mut vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
    vals
}

/// ‖∧^k A‖: the product of the k largest singular values of A.
pub fn wedge_norm_of_operator(a: &DMatrix<f64>, k: usize) -> Result<f64> {
    if k == 0 || k > a.ncols().min(a.nrows()) {
        return Err(Error::InvalidParameter(format!(
            "wedge grade {k} out of range for a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(singular_values(a).iter().take(k).product())
}

/// The compound matrix ∧^k A in the blade basis: entries are the k×k
/// minors det A[rows(i), cols(j)].
pub fn compound_matrix(a: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidParameter("compound of a non-square matrix".into()));
    }
    let basis = WedgeBasis::new(n, k)?;
    let dim = basis.dim();
    let mut out = DMatrix::zeros(dim, dim);
    let mut minor = DMatrix::zeros(k, k);
    for (ci, cols) in basis.indices.iter().enumerate() {
        for (ri, rows) in basis.indices.iter().enumerate() {
            for (r, &row) in rows.0.iter().enumerate() {
                for (c, &col) in cols.0.iter().enumerate() {
                    minor[(r, c)] = a[(row - 1, col - 1)];
                }
            }
            out[(ri, ci)] = det_small(&minor);
        }
    }
    Ok(out)
}

/// The derivative operator B̂^{(k)} on ∧^k induced by a symmetric B:
/// B̂^{(k)} (v_1∧⋯∧v_k) = Σ_j v_1 ∧ ⋯ ∧ B v_j ∧ ⋯ ∧ v_k.
/// If B is negative semi-definite, so is B̂^{(k)}.
pub fn b_hat_k(b: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let n = b.nrows();
    if b.ncols() != n {
        return Err(Error::InvalidParameter("b_hat_k of a non-square matrix".into()));
    }
    let basis = WedgeBasis::new(n, k)?;
    let dim = basis.dim();
    let mut out = DMatrix::zeros(dim, dim);
    let mut scratch: Vec<usize> = vec![0; k];
    for (ci, cols) in basis.indices.iter().enumerate() {
        for m in 0..k {
            let jm = cols.0[m];
            for p in 1..=n {
                let w = b[(p - 1, jm - 1)];
                if w == 0.0 {
                    continue;
                }
                // replace the m-th index with p; drop repeats, sort, track sign
                if cols.0.iter().enumerate().any(|(i, &v)| i != m && v == p) {
                    continue;
                }
                scratch.copy_from_slice(&cols.0);
                scratch[m] = p;
                let mut sign = 1.0;
                // exactly one displaced element: bubble it into place
                let mut i = m;
                while i > 0 && scratch[i] < scratch[i - 1] {
                    scratch.swap(i, i - 1);
                    sign = -sign;
                    i -= 1;
                }
                let mut i = m.max(i);
                while i + 1 < k && scratch[i] > scratch[i + 1] {
                    scratch.swap(i, i + 1);
                    sign = -sign;
                    i += 1;
                }
                let ri = basis.rank[&scratch];
                out[(ri, ci)] += sign * w;
            }
        }
    }
    Ok(out)
}

/// e^{At} for symmetric A via its eigendecomposition.
pub fn symmetric_exp(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, l) in eig.eigenvalues.iter().enumerate() {
        d[(i, i)] = (l * t).exp();
    }
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// |det(A|_E)| for the subspace spanned by an orthonormal frame Q (n×k):
/// the k-volume scaling sqrt(det((AQ)ᵀ(AQ))).
pub fn frame_det(a: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let aq = a * q;
    let g = aq.transpose() * aq;
    det_small(&g).max(0.0).sqrt()
}

/// Orthonormalize the columns of a matrix (thin QR by modified
/// Gram-Schmidt); returns None on rank deficiency.
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut q = m.clone();
    let k = q.ncols();
    for j in 0..k {
        for i in 0..j {
            let proj = q.column(i).dot(&q.column(j));
            let col_i = q.column(i).clone_owned();
            let mut col_j = q.column_mut(j);
            col_j.axpy(-proj, &col_i, 1.0);
        }
        let norm = q.column(j).norm();
        if norm < 1e-300 {
            return None;
        }
        q.column_mut(j).scale_mut(1.0 / norm);
    }
    Some(q)
}

/// Brute-force maximization of |det(A|_E)| over k-dimensional subspaces:
/// random orthonormal frames plus greedy local refinement. Approaches the
/// wedge norm from below.
pub fn max_frame_det_search(
    a: &DMatrix<f64>,
    k: usize,
    restarts: usize,
    steps: usize,
    seed: u64,
) -> f64 {
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = |rng: &mut ChaCha8Rng| {
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut best = 0.0f64;
    for _ in 0..restarts {
        let raw = DMatrix::from_fn(n, k, |_, _| normal(&mut rng));
        let Some(mut q) = orthonormalize_columns(&raw) else {
            continue;
        };
        let mut val = frame_det(a, &q);
        let mut eta = 0.3;
        for _ in 0..steps {
            let jitter = DMatrix::from_fn(n, k, |_, _| normal(&mut rng));
            let Some(cand) = orthonormalize_columns(&(&q + jitter * eta)) else {
                continue;
            };
            let cv = frame_det(a, &cand);
            if cv > val {
                val = cv;
                q = cand;
            } else {
                eta *= 0.95;
            }
        }
        best = best.max(val);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{BasisConvention, DomainSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    fn domain(n: usize) -> DomainSpec {
        DomainSpec::new(TWO_PI, n, BasisConvention::PaperTwoPi).unwrap()
    }

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| normal(rng))
    }

    fn random_neg_semidef(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let m = random_matrix(n, rng);
        -(&m * m.transpose()) / n as f64
    }

    #[test]
    fn wedge_basis_enumeration() {
        let basis = WedgeBasis::new(4, 2).unwrap();
        assert_eq!(basis.dim(), 6);
        assert_eq!(basis.indices()[0].indices(), &[1, 2]);
        assert_eq!(basis.indices()[5].indices(), &[3, 4]);
        assert_eq!(basis.distinguished_rank(), 0);
        assert_eq!(
            basis.rank_of(&WedgeIndex::new(vec![2, 4]).unwrap()),
            Some(4)
        );
        assert!(WedgeIndex::new(vec![2, 2]).is_err());
        assert!(WedgeIndex::new(vec![0, 1]).is_err());
    }

    #[test]
    fn blade_of_basis_vectors_is_a_unit_blade() {
        let d = domain(5);
        let e1 = SpectralField::unit_mode(d, 1, 1.0).unwrap();
        let e2 = SpectralField::unit_mode(d, 2, 1.0).unwrap();
        let b = blade(&[e1.clone(), e2.clone()]).unwrap();
        assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            b.coeff(&WedgeIndex::new(vec![1, 2]).unwrap()),
            1.0,
            epsilon = 1e-15
        );

        let degenerate = blade(&[e1.clone(), e1.clone()]).unwrap();
        assert_eq!(degenerate.norm(), 0.0);
    }

    #[test]
    fn blade_norm_matches_gram_determinant_oracle() {
        let d = domain(6);
        let v1 = SpectralField::from_coeffs(d, vec![3.0, 4.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let v2 = SpectralField::from_coeffs(d, vec![0.0, 5.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let b = blade(&[v1.clone(), v2.clone()]).unwrap();
        // Gram det = 25·25 − 20² = 225
        assert_relative_eq!(
            b.norm(),
            gram_determinant(&[v1, v2]).sqrt(),
            max_relative = 1e-13
        );
        assert_abs_diff_eq!(
            b.coeff(&WedgeIndex::new(vec![1, 2]).unwrap()),
            15.0,
            epsilon = 1e-13
        );

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..=3usize {
            let vs: Vec<SpectralField> = (0..k)
                .map(|_| {
                    SpectralField::from_coeffs(d, (0..6).map(|_| normal(&mut rng)).collect())
                        .unwrap()
                })
                .collect();
            let b = blade(&vs).unwrap();
            assert_relative_eq!(
                b.norm().powi(2),
                gram_determinant(&vs),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn blades_are_orthonormal_under_the_gram_inner_product() {
        let d = domain(8);
        let basis = WedgeBasis::new(8, 3).unwrap();
        // compare coefficient dot products with direct Gram determinants
        for a in 0..basis.dim().min(12) {
            for b in 0..basis.dim().min(12) {
                let fields_a: Vec<_> = basis.indices()[a]
                    .indices()
                    .iter()
                    .map(|&i| SpectralField::unit_mode(d, i, 1.0).unwrap())
                    .collect();
                let fields_b: Vec<_> = basis.indices()[b]
                    .indices()
                    .iter()
                    .map(|&i| SpectralField::unit_mode(d, i, 1.0).unwrap())
                    .collect();
                let va = blade(&fields_a).unwrap();
                let vb = blade(&fields_b).unwrap();
                let dot: f64 = va
                    .coeffs()
                    .iter()
                    .zip(vb.coeffs())
                    .map(|(x, y)| x * y)
                    .sum();
                // direct det[(a_i, b_j)]
                let mut g = DMatrix::zeros(3, 3);
                for i in 0..3 {
                    for j in 0..3 {
                        g[(i, j)] = fields_a[i].h_inner(&fields_b[j]);
                    }
                }
                let expected = det_small(&g);
                assert_abs_diff_eq!(dot, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn blade_is_multilinear() {
        let d = domain(6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v1 =
            SpectralField::from_coeffs(d, (0..6).map(|_| normal(&mut rng)).collect()).unwrap();
        let v2 =
            SpectralField::from_coeffs(d, (0..6).map(|_| normal(&mut rng)).collect()).unwrap();
        let w =
            SpectralField::from_coeffs(d, (0..6).map(|_| normal(&mut rng)).collect()).unwrap();

        let mut combo = v1.scale(2.5);
        combo.add_scaled(&w, -1.5);
        let lhs = blade(&[combo, v2.clone()]).unwrap();
        let a = blade(&[v1, v2.clone()]).unwrap();
        let b = blade(&[w, v2]).unwrap();
        for i in 0..lhs.coeffs().len() {
            assert_abs_diff_eq!(
                lhs.coeffs()[i],
                2.5 * a.coeffs()[i] - 1.5 * b.coeffs()[i],
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn wedge_norm_examples() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 0.5]));
        assert_relative_eq!(wedge_norm_of_operator(&a, 2).unwrap(), 2.0, max_relative = 1e-12);

        let id = DMatrix::<f64>::identity(5, 5);
        for k in 1..=5 {
            assert_relative_eq!(
                wedge_norm_of_operator(&id, k).unwrap(),
                1.0,
                max_relative = 1e-12
            );
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut z = random_matrix(4, &mut rng);
        for c in 0..4 {
            z[(2, c)] = 0.0;
        }
        // the null singular value resolves to √machine-eps in the eigensolve
        assert_abs_diff_eq!(wedge_norm_of_operator(&z, 4).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn wedge_norm_reached_by_frame_search() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 0.5]));
        let best = max_frame_det_search(&a, 2, 40, 200, 7);
        assert!(best <= 2.0 + 1e-9);
        assert_relative_eq!(best, 2.0, max_relative = 1e-3);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..5 {
            let m = random_matrix(6, &mut rng);
            for k in [2usize, 3] {
                let norm = wedge_norm_of_operator(&m, k).unwrap();
                let best = max_frame_det_search(&m, k, 40, 300, 100 + trial);
                assert!(best <= norm * (1.0 + 1e-9), "search exceeded the norm");
                assert!(
                    best >= norm * (1.0 - 1e-2),
                    "search too far below: {best} vs {norm}"
                );
            }
        }
    }

    #[test]
    fn wedge_norm_is_submultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_matrix(5, &mut rng);
            let b = random_matrix(5, &mut rng);
            for k in 1..=3 {
                let ab = wedge_norm_of_operator(&(&a * &b), k).unwrap();
                let bound = wedge_norm_of_operator(&a, k).unwrap()
                    * wedge_norm_of_operator(&b, k).unwrap();
                assert!(ab <= bound * (1.0 + 1e-10));
            }
        }
    }

    #[test]
    fn b_hat_zero_and_diagonal_cases() {
        let zero = DMatrix::<f64>::zeros(5, 5);
        let bh = b_hat_k(&zero, 2).unwrap();
        assert_eq!(bh.amax(), 0.0);

        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            -1.0, -2.0, -3.5, 0.5,
        ]));
        let bh = b_hat_k(&diag, 2).unwrap();
        let basis = WedgeBasis::new(4, 2).unwrap();
        for (r, ix) in basis.indices().iter().enumerate() {
            let expect: f64 = ix.indices().iter().map(|&i| diag[(i - 1, i - 1)]).sum();
            for c in 0..basis.dim() {
                let want = if c == r { expect } else { 0.0 };
                assert_abs_diff_eq!(bh[(r, c)], want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn b_hat_matches_derivative_of_the_compound_exponential() {
        // B̂^(k) = d/dt|₀ ∧^k e^{Bt}, centered finite differences
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for k in [2usize, 3] {
            let b = random_neg_semidef(5, &mut rng);
            let bh = b_hat_k(&b, k).unwrap();
            let h = 1e-4;
            let plus = compound_matrix(&symmetric_exp(&b, h), k).unwrap();
            let minus = compound_matrix(&symmetric_exp(&b, -h), k).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            let err = (&fd - &bh).amax();
            assert!(err < 1e-6, "grade {k}: fd error {err}");
        }
    }

    #[test]
    fn b_hat_of_negative_semidefinite_is_negative_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let b = random_neg_semidef(6, &mut rng);
            for k in [2usize, 3] {
                let bh = b_hat_k(&b, k).unwrap();
                // symmetrize against roundoff before the eigensolve
                let sym = (&bh + bh.transpose()) * 0.5;
                let max_eig = sym
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .fold(f64::NEG_INFINITY, |m, &l| m.max(l));
                assert!(max_eig <= 1e-10, "grade {k}: max eigenvalue {max_eig}");
            }
        }
    }

    #[test]
    fn contraction_transfers_to_the_wedge_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let b = random_neg_semidef(5, &mut rng);
            for t in [0.5, 1.0, 2.0] {
                let e = symmetric_exp(&b, t);
                assert!(singular_values(&e)[0] <= 1.0 + 1e-12);
                for k in [2usize, 3] {
                    let w = wedge_norm_of_operator(&e, k).unwrap();
                    assert!(w <= 1.0 + 1e-10, "wedge norm {w} at grade {k}");
                }
            }
        }
    }

    #[test]
    fn compound_matrix_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_matrix(4, &mut rng);
        let b = random_matrix(4, &mut rng);
        let lhs = compound_matrix(&(&a * &b), 2).unwrap();
        let rhs = compound_matrix(&a, 2).unwrap() * compound_matrix(&b, 2).unwrap();
        assert!((lhs - rhs).amax() < 1e-10);
    }
}
