//! Elementary symmetric coordinates and membership tests.
//!
//! `symmetrize_point` maps a polydisk point to its elementary symmetric
//! coordinates; `membership_gamma` inverts that map numerically (roots of the
//! associated monic polynomial) and classifies the point against the closed
//! symmetrized polydisk and its distinguished boundary.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Integer power with exact binary exponentiation; negative exponents invert.
pub(crate) fn cpow(z: Complex64, k: i64) -> Complex64 {
    if k >= 0 {
        z.powu(k as u32)
    } else {
        z.finv().powu((-k) as u32)
    }
}

/// Elementary symmetric functions `(e_1, ..., e_n)` of the coordinates.
///
/// Computed by multiplying out `prod (t + z_i)` one factor at a time, which
/// is numerically benign for the small `n` used here.
pub fn symmetrize_point(z: &[Complex64]) -> Vec<Complex64> {
    let n = z.len();
    let mut e = vec![Complex64::new(0.0, 0.0); n + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (k, zi) in z.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            e[j] = e[j] + zi * e[j - 1];
        }
    }
    e.remove(0);
    e
}

/// Jacobian determinant of the symmetrization map at `z`; equals the
/// difference product over pairs `i < j` of `z_i - z_j`, which is also the
/// antisymmetrized monomial at the staircase tuple `(n-1, ..., 1, 0)`.
pub fn jacobian_at(z: &[Complex64]) -> Complex64 {
    let mut prod = Complex64::new(1.0, 0.0);
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            prod *= z[i] - z[j];
        }
    }
    prod
}

/// Value of the antisymmetrized monomial indexed by `p` at the point `z`:
/// the determinant of the matrix with entries `z_i ^ p_j`.
///
/// Evaluated through an LU determinant rather than a permutation sum, so it
/// is an independent route against the combinatorial assembly code.
/// Coordinates must be nonzero when `p` has negative entries.
pub fn eval_antisym(p: &crate::partitions::StrictPartition, z: &[Complex64]) -> Result<Complex64> {
    let n = p.n();
    if z.len() != n {
        return Err(Error::InvalidDimension(format!(
            "partition has length {n}, point has length {}",
            z.len()
        )));
    }
    if p.last() < 0 && z.iter().any(|zi| zi.norm() == 0.0) {
        return Err(Error::EvaluationDomain(
            "negative exponent at a zero coordinate".into(),
        ));
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| cpow(z[i], p.entries()[j]));
    Ok(m.determinant())
}

/// Where a point sits relative to the closed symmetrized polydisk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    /// All preimage coordinates strictly inside the unit disk.
    Interior,
    /// All preimage coordinates on the unit circle.
    BoundaryDistinguished,
    /// Inside the closed set but with coordinates both on and off the circle.
    InsideNotBGamma,
    Outside,
}

/// Classifies `c = (c_1, ..., c_n)` by the moduli of the roots of
/// `t^n - c_1 t^{n-1} + c_2 t^{n-2} - ... + (-1)^n c_n`.
///
/// `tol` is the width of the band around the unit circle. Root clusters are
/// refined through the derivative (a near-multiple root of order m is a
/// simple root of the (m-1)-st derivative), which keeps the classification
/// honest for multiple boundary roots where plain root-finding only reaches
/// square-root-of-epsilon accuracy.
pub fn membership_gamma(c: &[Complex64], tol: f64) -> Result<Membership> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidDimension("tolerance must be positive".into()));
    }
    let roots = coordinates_to_roots(c)?;
    let moduli: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
    let all_interior = moduli.iter().all(|m| *m < 1.0 - tol);
    let all_on_circle = moduli.iter().all(|m| (m - 1.0).abs() <= tol);
    let all_closed = moduli.iter().all(|m| *m <= 1.0 + tol);
    Ok(if all_on_circle {
        Membership::BoundaryDistinguished
    } else if all_interior {
        Membership::Interior
    } else if all_closed {
        Membership::InsideNotBGamma
    } else {
        Membership::Outside
    })
}

/// Preimage coordinates of a point of the symmetrized space: the roots of
/// `t^n - c_1 t^{n-1} + c_2 t^{n-2} - ... + (-1)^n c_n`, with multiplicity.
pub fn coordinates_to_roots(c: &[Complex64]) -> Result<Vec<Complex64>> {
    if c.is_empty() {
        return Err(Error::InvalidDimension("empty coordinate tuple".into()));
    }
    let n = c.len();
    // monic coefficients, highest degree first: t^n + a_1 t^{n-1} + ... + a_n
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(Complex64::new(1.0, 0.0));
    for (i, ci) in c.iter().enumerate() {
        let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(sign * ci);
    }
    polynomial_roots(&coeffs)
}

/// Largest deviation of any preimage coordinate from the unit circle; zero
/// exactly on the distinguished boundary.
pub fn boundary_defect(c: &[Complex64]) -> Result<f64> {
    Ok(coordinates_to_roots(c)?
        .iter()
        .map(|r| (r.norm() - 1.0).abs())
        .fold(0.0, f64::max))
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    coeffs[..deg]
        .iter()
        .enumerate()
        .map(|(i, c)| c * (deg - i) as f64)
        .collect()
}

/// All roots of a monic polynomial given by coefficients, highest degree
/// first. Simultaneous iteration followed by cluster refinement.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(vec![]);
    }
    let scale = 1.0
        + coeffs
            .iter()
            .skip(1)
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);

    // Durand-Kerner from a deliberately asymmetric starting circle.
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|k| scale * seed.powu(k as u32 + 1)).collect();
    let mut converged = false;
    for _ in 0..600 {
        let mut max_step = 0.0f64;
        for k in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                // coincident iterates; nudge apart and continue
                z[k] += Complex64::new(1e-6 * scale, 1e-6 * scale);
                max_step = f64::MAX;
                continue;
            }
            let step = horner(coeffs, z[k]) / denom;
            z[k] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= 1e-14 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        // Multiple roots stall at square-root-of-epsilon distance, which the
        // cluster refinement below absorbs; only diverging iterates are fatal.
        if z.iter().any(|zk| !zk.norm().is_finite() || zk.norm() > 1e6 * scale) {
            return Err(Error::NumericalFailure(
                "root iteration diverged".to_string(),
            ));
        }
    }

    // Group near-coincident roots and replace each cluster of size m by the
    // nearby simple root of the (m-1)-st derivative, recovered by Newton.
    // An m-fold root stalls the iteration on an m-gon of radius about the
    // m-th root of evaluation noise, so the grouping radius must scale with
    // the worst multiplicity the degree allows.
    let cluster_radius = (1e-6f64).max(4.0 * 1e-14f64.powf(1.0 / deg as f64)) * scale;
    let mut used = vec![false; deg];
    let mut out = Vec::with_capacity(deg);
    for k in 0..deg {
        if used[k] {
            continue;
        }
        let mut cluster = vec![k];
        used[k] = true;
        // transitive closure, since a stalled m-gon can be wider than the
        // radius measured from any single vertex
        let mut cursor = 0;
        while cursor < cluster.len() {
            let base = z[cluster[cursor]];
            for j in 0..deg {
                if !used[j] && (z[j] - base).norm() <= cluster_radius {
                    used[j] = true;
                    cluster.push(j);
                }
            }
            cursor += 1;
        }
        let m = cluster.len();
        let centroid = cluster.iter().map(|i| z[*i]).sum::<Complex64>() / m as f64;
        let refined = if m == 1 {
            newton_polish(coeffs, centroid, scale)
        } else {
            let mut d = coeffs.to_vec();
            for _ in 1..m {
                d = derivative(&d);
            }
            newton_polish(&d, centroid, scale)
        };
        for _ in 0..m {
            out.push(refined);
        }
    }

    // Accept the grouped refinement only if it reproduces the input
    // coefficients; otherwise the cluster guess merged genuinely distinct
    // roots, and the ungrouped polished iterates are more faithful.
    if expansion_error(coeffs, &out) > 1e-9 * scale {
        out = z.iter().map(|zk| newton_polish(coeffs, *zk, scale)).collect();
    }
    Ok(out)
}

/// Largest coefficient deviation between `coeffs` and the monic polynomial
/// with the given roots.
fn expansion_error(coeffs: &[Complex64], roots: &[Complex64]) -> f64 {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    poly.iter()
        .zip(coeffs.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

fn newton_polish(coeffs: &[Complex64], start: Complex64, scale: f64) -> Complex64 {
    let d = derivative(coeffs);
    let mut z = start;
    for _ in 0..60 {
        let dp = horner(&d, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = horner(coeffs, z) / dp;
        z -= step;
        if step.norm() <= 1e-16 * scale {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::StrictPartition;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn symmetrize_pair() {
        let s = symmetrize_point(&[c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(s, vec![c(5.0, 0.0), c(6.0, 0.0)]);
    }

    #[test]
    fn symmetrize_triple() {
        let s = symmetrize_point(&[c(1.0, 0.0), c(-1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(s, vec![c(2.0, 0.0), c(-1.0, 0.0), c(-2.0, 0.0)]);
    }

    #[test]
    fn symmetrize_is_permutation_invariant() {
        let z = [c(0.3, 0.1), c(-0.2, 0.7), c(0.5, -0.4)];
        let base = symmetrize_point(&z);
        let swapped = symmetrize_point(&[z[2], z[0], z[1]]);
        for (a, b) in base.iter().zip(&swapped) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(jacobian_at(&[c(1.0, 0.0), c(0.0, 0.0)]), c(1.0, 0.0));
        assert_eq!(jacobian_at(&[c(1.0, 0.0), c(1.0, 0.0)]), c(0.0, 0.0));
        let j3 = jacobian_at(&[c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        assert!((j3 - c(2.0, 0.0)).norm() < 1e-15);
    }

    /// Finite-difference derivative matrix of the symmetrization map; the
    /// independent route fixing the sign of `jacobian_at`.
    fn jacobian_fd(z: &[Complex64]) -> Complex64 {
        let n = z.len();
        let h = 1e-6;
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[j] += c(h, 0.0);
            zm[j] -= c(h, 0.0);
            (symmetrize_point(&zp)[i] - symmetrize_point(&zm)[i]) / c(2.0 * h, 0.0)
        });
        m.determinant()
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let points: Vec<Vec<Complex64>> = vec![
            vec![c(0.4, 0.1), c(-0.3, 0.6)],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
            vec![c(0.2, -0.5), c(-0.7, 0.1), c(0.3, 0.3)],
            vec![c(0.9, 0.0), c(0.1, 0.2), c(-0.4, -0.4), c(0.0, 0.8)],
        ];
        for z in points {
            let exact = jacobian_at(&z);
            let fd = jacobian_fd(&z);
            assert!(
                (exact - fd).norm() < 1e-7 * (1.0 + exact.norm()),
                "mismatch at {z:?}: {exact} vs {fd}"
            );
        }
    }

    #[test]
    fn jacobian_equals_staircase_antisym() {
        let z = vec![c(0.6, 0.2), c(-0.1, -0.8), c(0.4, 0.4)];
        let stair = StrictPartition::new(vec![2, 1, 0]).unwrap();
        let a = eval_antisym(&stair, &z).unwrap();
        assert!((a - jacobian_at(&z)).norm() < 1e-13);
    }

    #[test]
    fn eval_antisym_examples() {
        let p10 = StrictPartition::new(vec![1, 0]).unwrap();
        let v = eval_antisym(&p10, &[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert!((v - c(-1.0, 0.0)).norm() < 1e-14);

        let p21 = StrictPartition::new(vec![2, 1]).unwrap();
        let v = eval_antisym(&p21, &[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert!((v - c(-6.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn eval_antisym_matches_signed_permutation_sum() {
        // cross-check the determinant against the explicit two-term formula
        let p = StrictPartition::new(vec![3, -1]).unwrap();
        let z = [c(0.8, 0.3), c(-0.2, 0.9)];
        let direct = cpow(z[0], 3) * cpow(z[1], -1) - cpow(z[1], 3) * cpow(z[0], -1);
        let det = eval_antisym(&p, &z).unwrap();
        assert!((det - direct).norm() < 1e-13);
    }

    #[test]
    fn eval_antisym_rejects_zero_with_negative_exponent() {
        let p = StrictPartition::new(vec![0, -1]).unwrap();
        assert!(matches!(
            eval_antisym(&p, &[c(0.0, 0.0), c(1.0, 0.0)]),
            Err(Error::EvaluationDomain(_))
        ));
    }

    #[test]
    fn eval_antisym_vanishes_on_diagonal() {
        let p = StrictPartition::new(vec![2, 0]).unwrap();
        let v = eval_antisym(&p, &[c(0.5, 0.5), c(0.5, 0.5)]).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        let tol = 1e-9;
        assert_eq!(
            membership_gamma(&[c(0.0, 0.0), c(0.0, 0.0)], tol).unwrap(),
            Membership::Interior
        );
        assert_eq!(
            membership_gamma(&[c(2.0, 0.0), c(1.0, 0.0)], tol).unwrap(),
            Membership::BoundaryDistinguished
        );
        assert_eq!(
            membership_gamma(&[c(3.0, 0.0), c(1.0, 0.0)], tol).unwrap(),
            Membership::Outside
        );
        assert_eq!(
            membership_gamma(&[c(1.0, 0.0), c(0.0, 0.0)], tol).unwrap(),
            Membership::InsideNotBGamma
        );
    }

    #[test]
    fn membership_inverts_symmetrization() {
        let tol = 1e-9;
        // torus points symmetrize onto the distinguished boundary
        let on = [c(1.0, 0.0), c(0.0, 1.0), c(-0.6, 0.8)];
        assert_eq!(
            membership_gamma(&symmetrize_point(&on), tol).unwrap(),
            Membership::BoundaryDistinguished
        );
        // strictly interior coordinates land inside
        let inside = [c(0.3, 0.2), c(-0.1, 0.4), c(0.0, 0.0)];
        assert_eq!(
            membership_gamma(&symmetrize_point(&inside), tol).unwrap(),
            Membership::Interior
        );
        // mixed moduli
        let mixed = [c(1.0, 0.0), c(0.2, 0.1)];
        assert_eq!(
            membership_gamma(&symmetrize_point(&mixed), tol).unwrap(),
            Membership::InsideNotBGamma
        );
        // anything with one coordinate outside leaves the set
        let outside = [c(1.2, 0.0), c(0.5, 0.0)];
        assert_eq!(
            membership_gamma(&symmetrize_point(&outside), tol).unwrap(),
            Membership::Outside
        );
    }

    #[test]
    fn membership_handles_triple_boundary_root() {
        // all three roots at 1: c = (3, 3, 1)
        let tol = 1e-9;
        assert_eq!(
            membership_gamma(&[c(3.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)], tol).unwrap(),
            Membership::BoundaryDistinguished
        );
    }

    #[test]
    fn roots_recover_random_factors() {
        let zs = [c(0.7, -0.2), c(-0.4, 0.5), c(0.1, 0.9)];
        let e = symmetrize_point(&zs);
        let coeffs = vec![c(1.0, 0.0), -e[0], e[1], -e[2]];
        let mut roots = polynomial_roots(&coeffs).unwrap();
        let mut expect = zs.to_vec();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        expect.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (r, z) in roots.iter().zip(&expect) {
            assert!((r - z).norm() < 1e-10);
        }
    }
}
