//! Finite-dimensional machinery for commuting matrix tuples whose last entry
//! is a contraction: the invariant limit `Q` of the compressions `P*ʲPʲ`, the
//! fundamental operators solving the defect equation, the decay certificate
//! for the shifted relations, the unitary-extension triple acting on the
//! range of `Q^{1/2}`, and, for pairs, the isometric embedding built from the
//! defect chain.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::DecaySequence;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, identity, max_entry, op_norm, psd_sqrt, psd_sqrt_and_pinv, random_unitary,
    CMatrix,
};
use crate::relations::{check_brown_halmos_dense, check_gamma_unitary, CheckReport, ReportBuilder};
use crate::symbols::TorusGrid;
use crate::symfun::symmetrize_point;

/// Entries of a tuple must commute within this bound, relative to the
/// product of their norms.
const COMMUTE_TOL: f64 = 1e-10;
/// Slack allowed on `‖P‖ ≤ 1` to absorb rounding in the callers' products.
const CONTRACTION_SLACK: f64 = 1e-10;
/// Convergence threshold used when an operation needs `Q` internally.
pub const Q_CONVERGENCE_TOL: f64 = 1e-10;
/// Iteration cap for the fixed-point computation of `Q`.
pub const Q_MAX_ITER: usize = 100_000;
/// Residual above which the defect equation is declared unsolvable.
const FUNDAMENTAL_TOL: f64 = 1e-8;
/// Eigenvalues of `Q` below this are treated as the vanishing part when the
/// range of `Q^{1/2}` is extracted. The convergent iteration leaves spurious
/// eigenvalues no larger than a small multiple of its threshold, so any value
/// above this cutoff is genuinely invariant mass.
pub const Q_RANK_TOL: f64 = 1e-6;

/// A commuting tuple `(S_1, …, S_{n−1}, P)` of square matrices whose last
/// entry is a contraction. The constructor verifies both facts, so every
/// value of this type is a plausible candidate for the boundary-relation
/// machinery below.
#[derive(Debug, Clone)]
pub struct OperatorTuple {
    s: Vec<CMatrix>,
    p: CMatrix,
    dim: usize,
}

impl OperatorTuple {
    /// Validates squareness, matching dimensions, pairwise commutation
    /// (within `1e−10` relative to the product of norms) and `‖P‖ ≤ 1`.
    pub fn new(s: Vec<CMatrix>, p: CMatrix) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidSpec(
                "a tuple needs at least one entry besides the last".into(),
            ));
        }
        let dim = p.nrows();
        if dim == 0 || p.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "last entry must be square and nonempty, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        for (i, m) in s.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidDimension(format!(
                    "entry {} is {}x{}, expected {dim}x{dim}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let p_norm = op_norm(&p);
        if p_norm > 1.0 + CONTRACTION_SLACK {
            return Err(Error::InvalidSpec(format!(
                "last entry must be a contraction, got norm {p_norm:.6}"
            )));
        }
        let all: Vec<&CMatrix> = s.iter().chain(std::iter::once(&p)).collect();
        let norms: Vec<f64> = all.iter().map(|m| op_norm(m)).collect();
        for a in 0..all.len() {
            for b in (a + 1)..all.len() {
                let comm = all[a] * all[b] - all[b] * all[a];
                let scale = (norms[a] * norms[b]).max(1.0);
                let dev = max_entry(&comm);
                if dev > COMMUTE_TOL * scale {
                    return Err(Error::InvalidSpec(format!(
                        "entries {} and {} do not commute (residual {dev:.3e})",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(Self { s, p, dim })
    }

    pub fn s(&self) -> &[CMatrix] {
        &self.s
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of entries including the last.
    pub fn n(&self) -> usize {
        self.s.len() + 1
    }
}

/// Fixed point of `A ↦ P*AP` started at the identity: the limit of
/// `P*ʲPʲ`, computed by iterating until the update is below `tol` in
/// operator norm. The returned matrix is re-symmetrized to kill rounding
/// drift; it is positive semidefinite and satisfies `P*QP = Q` within the
/// same threshold.
pub fn compute_q(p: &CMatrix, tol: f64, max_iter: usize) -> Result<CMatrix> {
    let dim = p.nrows();
    if dim == 0 || p.ncols() != dim {
        return Err(Error::InvalidDimension(format!(
            "expected a nonempty square matrix, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    let p_norm = op_norm(p);
    if p_norm > 1.0 + 1e-8 {
        return Err(Error::InvalidSpec(format!(
            "iteration needs a contraction, got norm {p_norm:.6}"
        )));
    }
    let mut a = identity(dim);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = p.adjoint() * &a * p;
        residual = op_norm(&(&next - &a));
        a = next;
        if residual < tol {
            return Ok((&a + a.adjoint()) * Complex64::new(0.5, 0.0));
        }
    }
    Err(Error::SlowConvergence(max_iter, residual))
}

/// Solves the defect equations `S_i − S*_{n−i}P = D_P F_i D_P` with
/// `D_P = (I − P*P)^{1/2}`, restricting each solution to the range of `D_P`
/// via the pseudoinverse. Returns the solutions together with the worst
/// residual of the re-substituted equation.
pub fn fundamental_operators(t: &OperatorTuple) -> Result<(Vec<CMatrix>, f64)> {
    let n = t.n();
    // Defect eigenvalues at or below this are indistinguishable from genuine
    // boundary directions at working precision and are treated as zero.
    let (d, d_pinv) =
        psd_sqrt_and_pinv(&(identity(t.dim) - t.p.adjoint() * &t.p), 1e-12);
    let mut out = Vec::with_capacity(n - 1);
    let mut worst = 0.0f64;
    for i in 1..n {
        let rhs = &t.s[i - 1] - t.s[n - i - 1].adjoint() * &t.p;
        let f = &d_pinv * &rhs * &d_pinv;
        let residual = op_norm(&(&d * &f * &d - rhs));
        worst = worst.max(residual);
        out.push(f);
    }
    if worst > FUNDAMENTAL_TOL {
        return Err(Error::NoFundamentalOperator(worst));
    }
    Ok((out, worst))
}

/// The decay certificate for the shifted boundary relations, together with
/// the majorant that the defect-equation solutions provide for it.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    /// `max_i ‖P*ʲ(S_{n−i} − S_i*P)Pʲ‖` for `j = 0, …, j_max`, classified.
    pub sequence: DecaySequence,
    /// Per-step majorant `max_{i,k} ‖F_{n−i}‖²(‖Pʲe_k‖² − ‖Pʲ⁺¹e_k‖²)`,
    /// present when the defect equations are solvable.
    pub proof_bound: Option<Vec<f64>>,
    /// Smallest value of (majorant − measured²) over all steps, entries and
    /// basis vectors; a nonnegative value (up to rounding) certifies that the
    /// defect-equation bound dominates the observed decay.
    pub bound_margin: Option<f64>,
}

/// Records `‖P*ʲ(S_{n−i} − S_i*P)Pʲ‖` for `j ≤ j_max` and all `i`, classifies
/// the sequence against `tol`, and — when the defect equations are solvable —
/// verifies that the telescoping bound through the defect operator dominates
/// the measured values basis-vector by basis-vector.
pub fn decay_check(t: &OperatorTuple, j_max: usize, tol: f64) -> DecayReport {
    let n = t.n();
    let g: Vec<CMatrix> = (1..n)
        .map(|i| &t.s[n - i - 1] - t.s[i - 1].adjoint() * &t.p)
        .collect();
    let f_norms: Option<Vec<f64>> = fundamental_operators(t)
        .ok()
        .map(|(fs, _)| fs.iter().map(op_norm).collect());

    let col_sq = |m: &CMatrix| -> Vec<f64> {
        (0..m.ncols())
            .map(|k| m.column(k).iter().map(|z| z.norm_sqr()).sum())
            .collect()
    };

    let mut values = Vec::with_capacity(j_max + 1);
    let mut proof_bound = f_norms.as_ref().map(|_| Vec::with_capacity(j_max + 1));
    let mut bound_margin = f_norms.as_ref().map(|_| f64::INFINITY);
    let mut pj = identity(t.dim);
    for _ in 0..=j_max {
        let pj_next = &pj * &t.p;
        let cols_j = col_sq(&pj);
        let cols_next = col_sq(&pj_next);
        let mut value = 0.0f64;
        let mut step_bound = 0.0f64;
        for (idx, g_i) in g.iter().enumerate() {
            let m = pj.adjoint() * g_i * &pj;
            value = value.max(op_norm(&m));
            if let Some(fs) = &f_norms {
                // g[idx] = S_{n−i} − S_i*P for i = idx + 1 factors through
                // F_{n−i}, whose norm squares the telescoping column decay.
                let f_sq = fs[n - (idx + 1) - 1].powi(2);
                let measured_sq = col_sq(&m);
                for k in 0..t.dim {
                    let bound = f_sq * (cols_j[k] - cols_next[k]);
                    step_bound = step_bound.max(bound);
                    let margin = bound - measured_sq[k];
                    if let Some(bm) = bound_margin.as_mut() {
                        *bm = bm.min(margin);
                    }
                }
            }
        }
        values.push(value);
        if let Some(pb) = proof_bound.as_mut() {
            pb.push(step_bound);
        }
        pj = pj_next;
    }
    DecayReport {
        sequence: DecaySequence::classify(values, 0, tol),
        proof_bound,
        bound_margin,
    }
}

/// Verifies that the invariant limit `Q` of the tuple satisfies the
/// shift-compression relations `S_i*QP = QS_{n−i}` and `P*QP = Q`.
pub fn q_membership_check(t: &OperatorTuple, tol: f64) -> Result<CheckReport> {
    let q = compute_q(&t.p, Q_CONVERGENCE_TOL, Q_MAX_ITER)?;
    Ok(check_brown_halmos_dense(&q, &t.s, &t.p, tol))
}

/// Whether the invariant limit `Q` is nonzero, i.e. whether the powers of
/// the adjoint of the last entry fail to die out.
pub fn nonemptiness_check(t: &OperatorTuple) -> Result<bool> {
    let q = compute_q(&t.p, Q_CONVERGENCE_TOL, Q_MAX_ITER)?;
    Ok(op_norm(&q) > Q_RANK_TOL)
}

/// The extension of a tuple to a commuting family on the range of `Q^{1/2}`:
/// `V` intertwines the original entries with `(R_1, …, R_{n−1}, U)` and has
/// Gram matrix `Q`.
#[derive(Debug, Clone)]
pub struct ExtensionTriple {
    pub r: Vec<CMatrix>,
    pub u: CMatrix,
    /// Rectangular `k_dim × dim` map from the original space onto the range
    /// of `Q^{1/2}` in its eigenbasis coordinates.
    pub v: CMatrix,
    pub k_dim: usize,
    /// Largest modulus of `V·X` applied to the numerical kernel of `V`,
    /// over `X ∈ {S_1, …, S_{n−1}, P}`; small values certify that the
    /// defining relations `X ↦ V X V⁺` do not depend on the kernel.
    pub well_definedness_residual: f64,
    /// `‖V*V − Q‖`.
    pub gram_residual: f64,
    /// Worst entry of `VP − UV` and `VS_i − R_iV`.
    pub intertwining_residual: f64,
    /// Largest deviation of `‖VPe_k‖² − ‖Ve_k‖²` over basis vectors; this is
    /// the quantity that makes `U` isometric on the range.
    pub q_isometry_defect: f64,
    /// Certification of `(R, U)` as a commuting-normal family with joint
    /// spectrum on the distinguished boundary.
    pub unitary_report: CheckReport,
}

/// Builds the extension triple on the range of `Q^{1/2}`: eigenvectors of
/// `Q` above the rank cutoff give the carrier space, `V = Λ^{1/2}W*`, and
/// each original entry `X` is pushed forward to `Λ^{1/2}(W*XW)Λ^{−1/2}`.
/// Well-definedness of the push-forward (independence from the kernel of
/// `V`), the Gram identity `V*V = Q` and both intertwinings are measured and
/// must stay below `tol`.
pub fn extend_via_q(t: &OperatorTuple, tol: f64) -> Result<ExtensionTriple> {
    let q = compute_q(&t.p, Q_CONVERGENCE_TOL, Q_MAX_ITER)?;
    let (vals, vecs) = hermitian_eigen(&q);
    let kept: Vec<usize> = (0..vals.len())
        .rev()
        .filter(|i| vals[*i] > Q_RANK_TOL)
        .collect();
    let k = kept.len();
    if k == 0 {
        return Err(Error::NotApplicable(
            "the adjoint of the last entry is pure: Q vanishes and there is no invariant part"
                .into(),
        ));
    }
    let dim = t.dim;
    let w_r = CMatrix::from_fn(dim, k, |r, c| vecs[(r, kept[c])]);
    let lam_sqrt = CMatrix::from_fn(k, k, |r, c| {
        if r == c {
            Complex64::new(vals[kept[r]].sqrt(), 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let lam_inv_sqrt = CMatrix::from_fn(k, k, |r, c| {
        if r == c {
            Complex64::new(1.0 / vals[kept[r]].sqrt(), 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let v = &lam_sqrt * w_r.adjoint();
    let push = |x: &CMatrix| -> CMatrix { &lam_sqrt * (w_r.adjoint() * x * &w_r) * &lam_inv_sqrt };
    let u = push(&t.p);
    let r: Vec<CMatrix> = t.s.iter().map(&push).collect();

    let kernel_proj = identity(dim) - &w_r * w_r.adjoint();
    let mut well_definedness_residual = 0.0f64;
    let mut intertwining_residual = 0.0f64;
    for (x, y) in t
        .s
        .iter()
        .zip(r.iter())
        .chain(std::iter::once((&t.p, &u)))
    {
        well_definedness_residual = well_definedness_residual.max(max_entry(&(&v * x * &kernel_proj)));
        intertwining_residual = intertwining_residual.max(max_entry(&(&v * x - y * &v)));
    }
    let gram_residual = op_norm(&(v.adjoint() * &v - &q));

    let vp = &v * &t.p;
    let mut q_isometry_defect = 0.0f64;
    for kcol in 0..dim {
        let moved: f64 = vp.column(kcol).iter().map(|z| z.norm_sqr()).sum();
        let fixed: f64 = v.column(kcol).iter().map(|z| z.norm_sqr()).sum();
        q_isometry_defect = q_isometry_defect.max((moved - fixed).abs());
    }

    let worst = well_definedness_residual
        .max(gram_residual)
        .max(intertwining_residual);
    if worst > tol {
        return Err(Error::ExtensionIllDefined(worst));
    }
    let unitary_report = check_gamma_unitary(&r, &u, tol)?;
    Ok(ExtensionTriple {
        r,
        u,
        v,
        k_dim: k,
        well_definedness_residual,
        gram_residual,
        intertwining_residual,
        q_isometry_defect,
        unitary_report,
    })
}

/// Residuals of the truncated isometric embedding of a pair through its
/// defect chain.
#[derive(Debug, Clone, Serialize)]
pub struct PiEmbeddingReport {
    pub truncation: usize,
    /// `‖Q − P*ᴺPᴺ‖`: how far the truncated defect chain is from capturing
    /// the full norm.
    pub tail_norm: f64,
    /// `‖Π*Π − I‖` for the stacked map `h ↦ (D_Ph, …, D_PPᴺ⁻¹h) ⊕ Vh`.
    pub isometry_defect: f64,
    /// Worst entry of `ΠP − (shift ⊕ U)*Π` away from the truncation edge.
    pub intertwining_residual: f64,
    /// How far the second block is from carrying the extension triple:
    /// worst of the triple's Gram and intertwining residuals.
    pub wold_match_residual: f64,
    pub unitary_part_dim: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Builds the truncated embedding `Πh = (D_Ph, D_PPh, …, D_PPᴺ⁻¹h) ⊕ Vh`
/// for a pair (`n = 2`), with `V` from `extend_via_q` when the invariant
/// part is present. Verifies that `Π` is an isometry up to the tail
/// `‖Q − P*ᴺPᴺ‖`, that it intertwines `P` with the backward shift on the
/// chain and `U` on the invariant block (compared away from the truncation
/// edge), and that the invariant block is exactly the extension triple.
pub fn gamma2_pi_embedding(t: &OperatorTuple, n_trunc: usize, tol: f64) -> Result<PiEmbeddingReport> {
    if t.n() != 2 {
        return Err(Error::NotApplicable(format!(
            "the embedding is built for pairs, got a tuple of length {}",
            t.n()
        )));
    }
    if n_trunc == 0 {
        return Err(Error::InvalidDimension("truncation must be positive".into()));
    }
    let dim = t.dim;
    let q = compute_q(&t.p, Q_CONVERGENCE_TOL, Q_MAX_ITER)?;
    let extension = if op_norm(&q) > Q_RANK_TOL {
        Some(extend_via_q(t, tol)?)
    } else {
        None
    };
    let k = extension.as_ref().map_or(0, |e| e.k_dim);
    let d = psd_sqrt(&(identity(dim) - t.p.adjoint() * &t.p));

    let rows = n_trunc * dim + k;
    let mut pi = CMatrix::zeros(rows, dim);
    let mut block = d.clone();
    let mut p_pow = identity(dim);
    for j in 0..n_trunc {
        pi.view_mut((j * dim, 0), (dim, dim)).copy_from(&block);
        block = &block * &t.p;
        p_pow = &p_pow * &t.p;
    }
    if let Some(ext) = &extension {
        pi.view_mut((n_trunc * dim, 0), (k, dim)).copy_from(&ext.v);
    }

    let tail_norm = op_norm(&(&q - p_pow.adjoint() * &p_pow));
    if tail_norm > tol {
        return Err(Error::SlowConvergence(n_trunc, tail_norm));
    }
    let isometry_defect = op_norm(&(pi.adjoint() * &pi - identity(dim)));

    // ΠP against (backward shift ⊕ U)Π, skipping the last chain block: the
    // shift drops it, so the comparison there would only see the truncation.
    let moved = &pi * &t.p;
    let mut intertwining_residual = 0.0f64;
    for j in 0..n_trunc.saturating_sub(1) {
        let lhs = moved.view((j * dim, 0), (dim, dim));
        let rhs = pi.view(((j + 1) * dim, 0), (dim, dim));
        intertwining_residual = intertwining_residual.max(max_entry(&(lhs - rhs).into_owned()));
    }
    if let Some(ext) = &extension {
        let lhs = moved.view((n_trunc * dim, 0), (k, dim)).into_owned();
        let rhs = &ext.u * &ext.v;
        intertwining_residual = intertwining_residual.max(max_entry(&(lhs - rhs)));
    }

    let wold_match_residual = extension
        .as_ref()
        .map_or(0.0, |e| e.gram_residual.max(e.intertwining_residual));

    let passed = tail_norm <= tol
        && isometry_defect <= tol
        && intertwining_residual <= tol
        && wold_match_residual <= tol;
    Ok(PiEmbeddingReport {
        truncation: n_trunc,
        tail_norm,
        isometry_defect,
        intertwining_residual,
        wold_match_residual,
        unitary_part_dim: k,
        tolerance: tol,
        passed,
    })
}

/// Description of a jointly diagonalizable test tuple: one row of
/// eigenvalues `(λ_1, …, λ_n)` in the closed disk per dimension, written as
/// `[re, im]` pairs, and an optional seed for hiding the eigenbasis behind a
/// random unitary change of coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TupleSpec {
    pub joint_eigenvalues: Vec<Vec<(f64, f64)>>,
    pub conjugate_seed: Option<u64>,
}

/// Builds the tuple of elementary symmetric functions of commuting
/// contractions with the prescribed joint eigenvalues: `S_i` carries the
/// degree-`i` symmetric function of each eigenvalue row and `P` the full
/// product, conjugated by a seeded random unitary when requested.
pub fn generate_symmetrized_tuple(n: usize, spec: &TupleSpec) -> Result<OperatorTuple> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "need at least a pair, got n = {n}"
        )));
    }
    let dim = spec.joint_eigenvalues.len();
    if dim == 0 {
        return Err(Error::InvalidSpec("no eigenvalue rows".into()));
    }
    let mut sym_rows = Vec::with_capacity(dim);
    for (row_idx, row) in spec.joint_eigenvalues.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidSpec(format!(
                "eigenvalue row {row_idx} has {} entries, expected {n}",
                row.len()
            )));
        }
        let zs: Vec<Complex64> = row.iter().map(|(re, im)| Complex64::new(*re, *im)).collect();
        if let Some(z) = zs.iter().find(|z| z.norm() > 1.0 + 1e-12) {
            return Err(Error::InvalidSpec(format!(
                "eigenvalue {z} lies outside the closed disk"
            )));
        }
        sym_rows.push(symmetrize_point(&zs));
    }
    let diag = |i: usize| -> CMatrix {
        CMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                sym_rows[r][i]
            } else {
                Complex64::ZERO
            }
        })
    };
    let mut s: Vec<CMatrix> = (0..n - 1).map(diag).collect();
    let mut p = diag(n - 1);
    if let Some(seed) = spec.conjugate_seed {
        let w = random_unitary(dim, seed);
        for m in s.iter_mut() {
            *m = w.adjoint() * &*m * &w;
        }
        p = w.adjoint() * p * &w;
    }
    OperatorTuple::new(s, p)
}

/// Samples the polynomial-calculus inequality: for the `n` coordinate
/// monomials and `trials` random polynomials of total degree ≤ `max_deg`,
/// the norm of the evaluated matrix polynomial must not exceed the supremum
/// of the scalar polynomial over the symmetrized torus (located on a
/// `grid_m`-per-axis grid and polished by a local pattern search). The
/// recorded residuals are the positive violations; a pass is a necessary
/// condition for the tuple to be a genuine contraction of the domain, never
/// a proof.
pub fn check_gamma_contraction_sampled(
    s: &[CMatrix],
    p: &CMatrix,
    trials: usize,
    max_deg: usize,
    grid_m: usize,
    tol: f64,
    seed: u64,
) -> Result<CheckReport> {
    let n = s.len() + 1;
    if s.is_empty() {
        return Err(Error::InvalidDimension(
            "need at least one entry besides the last".into(),
        ));
    }
    if max_deg == 0 {
        return Err(Error::InvalidDimension("degree must be positive".into()));
    }
    let dim = p.nrows();
    if dim == 0
        || p.ncols() != dim
        || s.iter().any(|m| m.nrows() != dim || m.ncols() != dim)
    {
        return Err(Error::InvalidDimension(
            "tuple entries must be square matrices of one size".into(),
        ));
    }

    let entries: Vec<&CMatrix> = s.iter().chain(std::iter::once(p)).collect();
    let mut powers: Vec<Vec<CMatrix>> = Vec::with_capacity(n);
    for m in &entries {
        let mut row = vec![identity(dim)];
        for k in 1..=max_deg {
            let next = &row[k - 1] * *m;
            row.push(next);
        }
        powers.push(row);
    }

    let monomials = multi_indices(n, max_deg);
    let eval_matrix = |coeffs: &[Complex64]| -> CMatrix {
        let mut acc = CMatrix::zeros(dim, dim);
        for (alpha, c) in monomials.iter().zip(coeffs) {
            if c.norm() == 0.0 {
                continue;
            }
            let mut term = identity(dim);
            for (v, a) in alpha.iter().enumerate() {
                if *a > 0 {
                    term = &term * &powers[v][*a];
                }
            }
            acc += term * *c;
        }
        acc
    };
    let eval_scalar = |coeffs: &[Complex64], point: &[Complex64]| -> Complex64 {
        let mut acc = Complex64::ZERO;
        for (alpha, c) in monomials.iter().zip(coeffs) {
            if c.norm() == 0.0 {
                continue;
            }
            let mut term = *c;
            for (v, a) in alpha.iter().enumerate() {
                term *= point[v].powu(*a as u32);
            }
            acc += term;
        }
        acc
    };
    let modulus_at = |coeffs: &[Complex64], angles: &[f64]| -> f64 {
        let z: Vec<Complex64> = angles.iter().map(|t| Complex64::cis(*t)).collect();
        eval_scalar(coeffs, &symmetrize_point(&z)).norm()
    };

    let grid = TorusGrid::new(n, grid_m.max(2))?;
    let boundary_sup = |coeffs: &[Complex64]| -> f64 {
        let mut best = 0.0f64;
        let mut best_angles = vec![0.0f64; n];
        for idx in 0..grid.len() {
            let z = grid.point(idx);
            let val = eval_scalar(coeffs, &symmetrize_point(&z)).norm();
            if val > best {
                best = val;
                best_angles = z.iter().map(|w| w.arg()).collect();
            }
        }
        // Pattern search around the best grid point: the grid alone
        // undersamples sharp peaks enough to produce spurious violations.
        let mut step = std::f64::consts::TAU / grid.len().max(2) as f64 * grid_m as f64;
        let mut evals = 0usize;
        while step > 1e-10 && evals < 100_000 {
            let mut improved = false;
            for j in 0..n {
                for sgn in [1.0f64, -1.0] {
                    let mut candidate = best_angles.clone();
                    candidate[j] += sgn * step;
                    let val = modulus_at(coeffs, &candidate);
                    evals += 1;
                    if val > best {
                        best = val;
                        best_angles = candidate;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best
    };

    let mut builder = ReportBuilder::new(tol);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for trial in 0..n + trials {
        let (label, coeffs) = if trial < n {
            let mut coeffs = vec![Complex64::ZERO; monomials.len()];
            let target: Vec<usize> = (0..n).map(|v| usize::from(v == trial)).collect();
            let pos = monomials.iter().position(|a| *a == target).expect("degree ≥ 1");
            coeffs[pos] = Complex64::ONE;
            (format!("norm bound for coordinate {}", trial + 1), coeffs)
        } else {
            let coeffs: Vec<Complex64> = monomials
                .iter()
                .map(|_| {
                    Complex64::new(
                        2.0 * rng.random::<f64>() - 1.0,
                        2.0 * rng.random::<f64>() - 1.0,
                    )
                })
                .collect();
            (
                format!("norm bound for random polynomial {}", trial - n + 1),
                coeffs,
            )
        };
        let norm = op_norm(&eval_matrix(&coeffs));
        let sup = boundary_sup(&coeffs);
        let violation = (norm - sup).max(0.0);
        builder.record_value(&label, trial, 0, violation);
    }
    Ok(builder.finish())
}

/// All exponent vectors in `n` variables with total degree at most `max_deg`.
fn multi_indices(n: usize, max_deg: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &out {
            let used: usize = prefix.iter().sum();
            for a in 0..=(max_deg - used) {
                let mut row = prefix.clone();
                row.push(a);
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// Serializes a matrix as a JSON array of rows, each entry an `[re, im]`
/// pair.
pub fn matrix_to_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|r| {
            let row: Vec<Value> = (0..m.ncols())
                .map(|c| json!([m[(r, c)].re, m[(r, c)].im]))
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

/// Parses a matrix from the JSON shape produced by [`matrix_to_json`].
pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let bad = |msg: &str| Error::Parse {
        line: 0,
        msg: msg.to_string(),
    };
    let rows = v.as_array().ok_or_else(|| bad("matrix must be an array of rows"))?;
    if rows.is_empty() {
        return Err(bad("matrix has no rows"));
    }
    let ncols = rows[0]
        .as_array()
        .ok_or_else(|| bad("matrix row must be an array"))?
        .len();
    let mut out = CMatrix::zeros(rows.len(), ncols);
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| bad("matrix row must be an array"))?;
        if row.len() != ncols {
            return Err(bad(&format!(
                "row {r} has {} entries, expected {ncols}",
                row.len()
            )));
        }
        for (c, entry) in row.iter().enumerate() {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| bad("matrix entry must be an [re, im] pair"))?;
            let re = pair[0].as_f64().ok_or_else(|| bad("re must be a number"))?;
            let im = pair[1].as_f64().ok_or_else(|| bad("im must be a number"))?;
            out[(r, c)] = Complex64::new(re, im);
        }
    }
    Ok(out)
}

/// Writes a tuple as a JSON object `{"s": [matrix, …], "p": matrix}` with
/// `[re, im]` entries.
pub fn write_tuple_json<W: Write>(t: &OperatorTuple, mut w: W) -> Result<()> {
    let value = json!({
        "s": t.s.iter().map(matrix_to_json).collect::<Vec<_>>(),
        "p": matrix_to_json(&t.p),
    });
    serde_json::to_writer_pretty(&mut w, &value).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("could not serialize tuple: {e}"),
    })?;
    writeln!(w)?;
    Ok(())
}

/// Reads a tuple from the JSON shape produced by [`write_tuple_json`] and
/// revalidates it.
pub fn read_tuple_json<R: Read>(mut r: R) -> Result<OperatorTuple> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let bad = |msg: &str| Error::Parse {
        line: 0,
        msg: msg.to_string(),
    };
    let obj = value
        .as_object()
        .ok_or_else(|| bad("tuple file must be a JSON object"))?;
    let s_vals = obj
        .get("s")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing \"s\": array of matrices"))?;
    let p_val = obj.get("p").ok_or_else(|| bad("missing \"p\": matrix"))?;
    let s = s_vals.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
    let p = matrix_from_json(p_val)?;
    OperatorTuple::new(s, p)
}
