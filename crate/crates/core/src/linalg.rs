//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(2πi·x)`.
pub fn phase(x: f64) -> C64 {
    C64::from_polar(1.0, std::f64::consts::TAU * x)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> Mat {
    Mat::zeros(r, c)
}

pub fn from_real_rows(rows: &[&[f64]]) -> Mat {
    let r = rows.len();
    let cols = rows.first().map_or(0, |x| x.len());
    Mat::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn diag(entries: &[C64]) -> Mat {
    Mat::from_diagonal(&Vector::from_column_slice(entries))
}

pub fn dagger(m: &Mat) -> Mat {
    m.adjoint()
}

/// Kronecker product with the left factor as the slow index: `(a, b) ↦ a·dim(B) + b`.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn kron_all(ms: &[Mat]) -> Mat {
    ms.iter().fold(identity(1), |acc, m| kron(&acc, m))
}

/// Largest entry modulus of `a - b`; shapes must agree.
pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn is_unitary(m: &Mat, tol: f64) -> bool {
    m.is_square()
        && max_abs_diff(&(m.adjoint() * m), &identity(m.ncols())) <= tol
        && max_abs_diff(&(m * m.adjoint()), &identity(m.nrows())) <= tol
}

pub fn is_identity(m: &Mat, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &identity(m.nrows())) <= tol
}

/// Integer power of a square matrix; negative exponents use the adjoint,
/// which is the inverse for the unitary bases this crate feeds in.
pub fn mat_pow(m: &Mat, e: i64) -> Mat {
    let base = if e < 0 { m.adjoint() } else { m.clone() };
    let mut k = e.unsigned_abs();
    let mut acc = identity(m.nrows());
    let mut sq = base;
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &sq;
        }
        k >>= 1;
        if k > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

/// Orthonormal basis (as columns) of the column span of `m`.
pub fn orth(m: &Mat, rank_tol: f64) -> Mat {
    let (r, cols) = m.shape();
    if r == 0 || cols == 0 {
        return zeros(r, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd u");
    let keep: Vec<usize> =
        svd.singular_values.iter().enumerate().filter(|(_, s)| **s > rank_tol).map(|(i, _)| i).collect();
    Mat::from_fn(r, keep.len(), |i, j| u[(i, keep[j])])
}

pub fn rank(m: &Mat, rank_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone().singular_values().iter().filter(|s| **s > rank_tol).count()
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending with matching columns.
pub fn hermitian_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = Mat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Haar-distributed random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> Mat {
    if n == 0 {
        return zeros(0, 0);
    }
    let g = Mat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// A random point on the unit circle.
pub fn random_phase<R: Rng>(rng: &mut R) -> C64 {
    phase(rng.random::<f64>())
}

pub fn basis_vector(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    #[allow(clippy::identity_op, clippy::erasing_op)]
    fn kron_index_convention() {
        let a = from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = identity(3);
        let k = kron(&a, &b);
        // (a, b) ↦ a·3 + b with the left factor slow.
        assert_eq!(k[(1 * 3 + 2, 0 * 3 + 2)], c(3.0, 0.0));
        assert_eq!(k[(0 * 3 + 1, 1 * 3 + 1)], c(2.0, 0.0));
        assert_eq!(k[(0, 4)], ZERO);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            assert!(is_unitary(&random_unitary(n, &mut rng), 1e-12));
        }
    }

    #[test]
    fn mat_pow_matches_repeated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(3, &mut rng);
        let p5 = mat_pow(&u, 5);
        let mut acc = identity(3);
        for _ in 0..5 {
            acc = &acc * &u;
        }
        assert!(max_abs_diff(&p5, &acc) < 1e-12);
        assert!(is_identity(&(mat_pow(&u, -5) * p5), 1e-12));
    }

    #[test]
    fn orth_drops_dependent_columns() {
        let m = from_real_rows(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
        let q = orth(&m, 1e-8);
        assert_eq!(q.ncols(), 2);
        assert!(is_identity(&(q.adjoint() * &q), 1e-12));
    }

    #[test]
    fn hermitian_eigen_of_projection() {
        let p = diag(&[ONE, ZERO, ONE]);
        let (vals, _) = hermitian_eigen(&p);
        assert!((vals[0]).abs() < 1e-12 && (vals[2] - 1.0).abs() < 1e-12);
    }
}
