//! Dense complex linear algebra helpers shared by every module.
//!
//! Basis ordering: particle 0 is the most significant digit, so a state of
//! `n` particles of dimension `d` has index `sum_p s_p d^(n-1-p)`. Contiguous
//! blocks of particles therefore factor as `left ⊗ mid ⊗ right`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `d^k`, or an error when it overflows `usize`.
pub fn checked_pow(d: usize, k: usize) -> Result<usize> {
    u32::try_from(k)
        .ok()
        .and_then(|k| d.checked_pow(k))
        .ok_or_else(|| Error::OutOfRange(format!("{d}^{k} overflows")))
}

/// Position of a `k`-site operator inside an `n`-particle register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub left: usize,
    pub mid: usize,
    pub right: usize,
}

impl Placement {
    pub fn new(n: usize, d: usize, start: usize, k: usize) -> Self {
        assert!(start + k <= n, "operator on sites {start}..{} exceeds {n} particles", start + k);
        Self {
            left: d.pow(start as u32),
            mid: d.pow(k as u32),
            right: d.pow((n - start - k) as u32),
        }
    }

    pub fn dim(&self) -> usize {
        self.left * self.mid * self.right
    }
}

fn apply_gate_slice(gate: &CMat, p: Placement, v: &mut [C64], inp: &mut [C64], out: &mut [C64]) {
    let (mid, right) = (p.mid, p.right);
    for l in 0..p.left {
        let block = l * mid * right;
        for r in 0..right {
            let base = block + r;
            for a in 0..mid {
                inp[a] = v[base + a * right];
            }
            for a in 0..mid {
                let mut acc = ZERO;
                for b in 0..mid {
                    acc += gate[(a, b)] * inp[b];
                }
                out[a] = acc;
            }
            for a in 0..mid {
                v[base + a * right] = out[a];
            }
        }
    }
}

/// Applies a local operator to a state vector in place.
pub fn apply_gate(gate: &CMat, p: Placement, v: &mut CVec) {
    debug_assert_eq!(gate.nrows(), p.mid);
    debug_assert_eq!(v.len(), p.dim());
    let mut inp = vec![ZERO; p.mid];
    let mut out = vec![ZERO; p.mid];
    apply_gate_slice(gate, p, v.as_mut_slice(), &mut inp, &mut out);
}

/// Left-multiplies every column of `m` by the embedded local operator.
pub fn apply_gate_columns(gate: &CMat, p: Placement, m: &mut CMat) {
    let rows = m.nrows();
    debug_assert_eq!(rows, p.dim());
    m.as_mut_slice().par_chunks_mut(rows).for_each(|col| {
        let mut inp = vec![ZERO; p.mid];
        let mut out = vec![ZERO; p.mid];
        apply_gate_slice(gate, p, col, &mut inp, &mut out);
    });
}

/// Dense embedding `1 ⊗ gate ⊗ 1`.
pub fn embed(gate: &CMat, p: Placement) -> CMat {
    let mut m = CMat::identity(p.dim(), p.dim());
    apply_gate_columns(gate, p, &mut m);
    m
}

/// Dense product of local operators, applied right to left: `ops[0]` acts
/// last.
pub fn product_of_gates<'a, I>(dim: usize, ops: I) -> CMat
where
    I: IntoIterator<Item = (&'a CMat, Placement)>,
    I::IntoIter: DoubleEndedIterator,
{
    let mut m = CMat::identity(dim, dim);
    for (g, p) in ops.into_iter().rev() {
        apply_gate_columns(g, p, &mut m);
    }
    m
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

/// Frobenius norm; an upper bound on the operator norm.
pub fn fro_norm(m: &CMat) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    to_faer(m).singular_values().expect("SVD converges")[0]
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * real(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    if m.is_empty() {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = to_faer(&hermitize(m)).self_adjoint_eigen(faer::Side::Lower).expect("eigensolver converges");
    let (u, s) = (eig.U(), eig.S().column_vector());
    let n = m.nrows();
    let values = (0..n).map(|i| s[i].re).collect();
    (values, CMat::from_fn(n, n, |r, c| u[(r, c)]))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut v = to_faer(&hermitize(m))
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("eigensolver converges");
    v.sort_by(f64::total_cmp);
    v
}

/// Dense product through faer, which is much faster than nalgebra's generic
/// complex kernel at the sizes used here.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let c = to_faer(a) * to_faer(b);
    CMat::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)])
}

fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD with singular values sorted nonincreasing; ties keep the
/// solver's index order. Returns `(values, U, V^T)` so that
/// `m = Σ_i values[i] · U[:,i] ⊗ Vt[i,:]`.
///
/// Computed with faer: nalgebra's complex SVD returns inconsistent factors
/// on a few percent of rank-deficient inputs.
pub fn svd_sorted(m: &CMat) -> (Vec<f64>, CMat, CMat) {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return (Vec::new(), CMat::zeros(m.nrows(), 0), CMat::zeros(0, m.ncols()));
    }
    let svd = to_faer(m).thin_svd().expect("SVD converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re).then(a.cmp(&b)));
    let values = order.iter().map(|&i| s[i].re).collect();
    let u_sorted = CMat::from_fn(m.nrows(), k, |r, c| u[(r, order[c])]);
    let vt_sorted = CMat::from_fn(k, m.ncols(), |r, c| v[(c, order[r])].conj());
    (values, u_sorted, vt_sorted)
}

/// Projector onto the span of eigenvectors with eigenvalue above `tol`,
/// together with the kernel dimension.
pub fn range_projector(m: &CMat, tol: f64) -> (CMat, usize) {
    let (vals, vecs) = eigh(m);
    let n = m.nrows();
    let mut proj = CMat::zeros(n, n);
    let mut kernel = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > tol {
            let col = vecs.column(i);
            proj += col * col.adjoint();
        } else {
            kernel += 1;
        }
    }
    (proj, kernel)
}

/// Multiplies `v` by a global phase so that its largest-magnitude entry
/// (first one on ties) is real and positive.
pub fn fix_phase(v: &mut CVec) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs + 1e-12 {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best] / best_abs;
        *v *= phase.conj();
    }
}

pub fn normalized(v: &CVec) -> CVec {
    let n = v.norm();
    v / real(n)
}

/// Complex Gaussian vector, normalized.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    normalized(&v)
}

/// Complex Gaussian matrix with unit-variance entries.
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Tensor product of vectors in register order.
pub fn kron_all(parts: &[CVec]) -> CVec {
    let mut acc = CVec::from_element(1, ONE);
    for p in parts {
        acc = acc.kronecker(p);
    }
    acc
}

/// Random product state over the given number of particles.
pub fn random_product_state<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> CVec {
    let sites: Vec<CVec> = (0..n).map(|_| random_state(d, rng)).collect();
    kron_all(&sites)
}

/// Computational basis state `|s_0 s_1 ...⟩`.
pub fn basis_state(d: usize, digits: &[usize]) -> CVec {
    let mut idx = 0;
    for &s in digits {
        assert!(s < d);
        idx = idx * d + s;
    }
    let dim = d.pow(digits.len() as u32);
    let mut v = CVec::zeros(dim);
    v[idx] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gate_application_matches_dense_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (n, d) = (4, 2);
        let g = random_matrix(4, 4, &mut rng);
        let p = Placement::new(n, d, 1, 2);
        let dense = CMat::identity(2, 2).kronecker(&g).kronecker(&CMat::identity(2, 2));
        assert!((embed(&g, p) - &dense).norm() < 1e-12);

        let mut v = random_state(16, &mut rng);
        let expect = &dense * &v;
        apply_gate(&g, p, &mut v);
        assert!((v - expect).norm() < 1e-12);
    }

    #[test]
    fn eigh_is_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(6, 6, &mut rng);
        let h = hermitize(&a);
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let diag = CMat::from_diagonal(&CVec::from_iterator(6, vals.iter().map(|&x| real(x))));
        let back = &vecs * diag * vecs.adjoint();
        assert!((back - h).norm() < 1e-10);
    }

    #[test]
    fn svd_reconstructs_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..300 {
            let r = 1 + trial % 9;
            let c = [3usize, 9, 27, 81, 243][trial % 5];
            let rank = 1 + (trial / 7) % 3;
            let a = random_matrix(r, rank, &mut rng) * random_matrix(rank, c, &mut rng);
            for m in [a.clone(), a.adjoint()] {
                let (v, u, vt) = svd_sorted(&m);
                let mut rec = CMat::zeros(m.nrows(), m.ncols());
                for i in 0..v.len() {
                    rec += u.column(i) * vt.row(i) * real(v[i]);
                }
                assert!((rec - &m).norm() <= 1e-10 * m.norm(), "trial {trial}");
            }
        }
    }

    #[test]
    fn svd_sorted_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(3, 5, &mut rng);
        let (s, u, vt) = svd_sorted(&a);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let mut back = CMat::zeros(3, 5);
        for i in 0..s.len() {
            back += u.column(i) * vt.row(i) * real(s[i]);
        }
        assert!((back - a).norm() < 1e-10);
    }

    #[test]
    fn fix_phase_makes_max_entry_positive() {
        let mut v = CVec::from_vec(vec![C64::new(0.0, 0.1), C64::new(0.0, -2.0)]);
        fix_phase(&mut v);
        assert!((v[1] - real(2.0)).norm() < 1e-15);
    }
}
