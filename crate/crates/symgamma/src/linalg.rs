//! Dense complex linear algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest singular value; zero for empty matrices.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0f64, |a, b| a.max(*b))
}

/// Largest entry modulus; zero for empty matrices.
pub fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Hermitian eigendecomposition after symmetrizing away floating drift.
/// Returns (eigenvalues ascending, unitary eigenvector matrix).
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let se = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|a, b| se.eigenvalues[*a].partial_cmp(&se.eigenvalues[*b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|i| se.eigenvalues[*i]).collect();
    let dim = m.nrows();
    let vecs = CMatrix::from_fn(dim, dim, |r, c| se.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Square root of a positive semidefinite Hermitian matrix; small negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter()
            .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Number of singular values above `tol`.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|s| **s > tol)
        .count()
}

/// Minimal-norm least-squares solution of `a x = b`, columns of `b` solved
/// independently. Singular values below `eps` times the largest are treated
/// as zero.
pub fn lstsq(a: &CMatrix, b: &CMatrix, eps: f64) -> Result<CMatrix> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, eps)
        .map_err(|e| Error::NumericalFailure(format!("least squares failed: {e}")))
}

/// Square root of a positive semidefinite matrix together with the
/// pseudoinverse of that square root. Eigenvalues at or below `cutoff` count
/// as zero. Both factors come from one eigendecomposition so that their
/// product is an orthogonal projection to machine precision; factoring the
/// square root separately would place its numerically-zero singular values
/// near the square root of machine precision — too large to threshold
/// safely and too inaccurate to invert.
pub fn psd_sqrt_and_pinv(m: &CMatrix, cutoff: f64) -> (CMatrix, CMatrix) {
    let (vals, vecs) = hermitian_eigen(m);
    let sqrt = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter()
            .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    let inv = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|l| {
            if *l > cutoff {
                Complex64::new(1.0 / l.sqrt(), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    ));
    (&vecs * sqrt * vecs.adjoint(), &vecs * inv * vecs.adjoint())
}

/// Haar-like random unitary: QR of a seeded complex Gaussian matrix with the
/// phases of the triangular factor normalized.
pub fn random_unitary(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut normal = || {
        // Box-Muller from two uniforms
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let g = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(normal(), normal()));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Simultaneous eigenvalue tuples of a family of commuting normal matrices.
///
/// The family is refined one matrix at a time (callers put the structurally
/// nicest entry first): inside each current invariant block the Hermitian and
/// anti-Hermitian parts are diagonalized in turn, and eigenvalue clusters
/// within `gap` stay together. Each final block contributes one tuple, read
/// off as the diagonal mean of every matrix compressed to the block.
pub fn joint_eigentuples(mats: &[CMatrix], gap: f64) -> Result<Vec<(usize, Vec<Complex64>)>> {
    let dim = mats
        .first()
        .ok_or_else(|| Error::InvalidDimension("empty matrix family".into()))?
        .nrows();
    let mut blocks: Vec<CMatrix> = vec![identity(dim)];
    for a in mats {
        for herm_part in [true, false] {
            let mut next = Vec::new();
            for q in &blocks {
                if q.ncols() == 1 {
                    next.push(q.clone());
                    continue;
                }
                let b = q.adjoint() * a * q;
                let part = if herm_part {
                    (&b + b.adjoint()) * Complex64::new(0.5, 0.0)
                } else {
                    (&b - b.adjoint()) * Complex64::new(0.0, -0.5)
                };
                let (vals, vecs) = hermitian_eigen(&part);
                // split eigenvalues into clusters separated by more than gap
                let mut start = 0;
                for i in 1..=vals.len() {
                    if i == vals.len() || vals[i] - vals[i - 1] > gap {
                        let cols = vecs.columns(start, i - start).into_owned();
                        next.push(q * cols);
                        start = i;
                    }
                }
            }
            blocks = next;
        }
    }
    let mut out = Vec::new();
    for q in &blocks {
        let k = q.ncols();
        let tuple = mats
            .iter()
            .map(|a| {
                let b = q.adjoint() * a * q;
                let mut mean = Complex64::ZERO;
                for i in 0..k {
                    mean += b[(i, i)];
                }
                mean / k as f64
            })
            .collect();
        out.push((k, tuple));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(3.0, 0.0), c(0.0, -4.0)]));
        assert!((op_norm(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let u = random_unitary(5, 7);
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            5,
            [0.0, 0.3, 1.0, 2.5, 4.0].iter().map(|x| c(*x, 0.0)),
        ));
        let m = &u * d * u.adjoint();
        let r = psd_sqrt(&m);
        assert!(max_entry(&(&r * &r - m)) < 1e-10);
        assert!(max_entry(&(&r - r.adjoint())) < 1e-10);
    }

    #[test]
    fn psd_sqrt_and_pinv_share_a_range_projection() {
        let u = random_unitary(5, 9);
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            5,
            [0.0, 1e-15, 0.4, 1.0, 2.25].iter().map(|x| c(*x, 0.0)),
        ));
        let m = &u * d * u.adjoint();
        let (r, rp) = psd_sqrt_and_pinv(&m, 1e-12);
        assert!(max_entry(&(&r * &r - &m)) < 1e-12);
        // r * rp is the orthogonal projection onto the three kept directions
        let proj = &r * &rp;
        assert!(max_entry(&(&proj * &proj - &proj)) < 1e-12);
        assert!(max_entry(&(&proj - proj.adjoint())) < 1e-12);
        assert!((proj.trace().re - 3.0).abs() < 1e-10);
        // the dropped noise direction still carries weight sqrt(1e-15) in r
        assert!(max_entry(&(&r * &rp * &r - &r)) < 1e-7);
        assert!(max_entry(&(&rp * &r * &rp - &rp)) < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary_and_deterministic() {
        let u = random_unitary(6, 42);
        let v = random_unitary(6, 42);
        assert_eq!(u, v);
        let w = random_unitary(6, 43);
        assert!(u != w);
        assert!(max_entry(&(u.adjoint() * &u - identity(6))) < 1e-12);
    }

    #[test]
    fn rank_counts_singular_values() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(2.0, 0.0);
        m[(1, 1)] = c(1e-12, 0.0);
        assert_eq!(numerical_rank(&m, 1e-8), 1);
    }

    #[test]
    fn lstsq_solves_consistent_systems() {
        let a = CMatrix::from_row_slice(3, 2, &[
            c(1.0, 0.0), c(0.0, 1.0),
            c(2.0, 0.0), c(1.0, 0.0),
            c(0.0, 0.0), c(3.0, -1.0),
        ]);
        let x = CMatrix::from_row_slice(2, 1, &[c(0.5, 0.5), c(-1.0, 2.0)]);
        let b = &a * &x;
        let got = lstsq(&a, &b, 1e-12).unwrap();
        assert!(max_entry(&(got - x)) < 1e-10);
    }

    #[test]
    fn joint_eigensystem_of_commuting_normals() {
        // two diagonal matrices conjugated by one unitary
        let u = random_unitary(6, 11);
        let d1: Vec<Complex64> = vec![
            c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0),
            c(0.0, 1.0), c(0.5, 0.5), c(0.3, -0.2),
        ];
        let d2: Vec<Complex64> = vec![
            c(2.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0),
            c(1.0, 1.0), c(0.0, 0.0), c(0.7, 0.0),
        ];
        let a = &u * CMatrix::from_diagonal(&CVector::from_vec(d1.clone())) * u.adjoint();
        let b = &u * CMatrix::from_diagonal(&CVector::from_vec(d2.clone())) * u.adjoint();
        let tuples = joint_eigentuples(&[a, b], 1e-8).unwrap();
        let total: usize = tuples.iter().map(|(k, _)| k).sum();
        assert_eq!(total, 6);
        // every expected pair appears
        for i in 0..6 {
            let expect = (d1[i], d2[i]);
            assert!(
                tuples.iter().any(|(_, t)| (t[0] - expect.0).norm() < 1e-8
                    && (t[1] - expect.1).norm() < 1e-8),
                "missing joint pair {expect:?}"
            );
        }
    }
}
