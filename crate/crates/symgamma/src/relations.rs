//! Checkers for the algebraic relations that pin down the operator classes:
//! the shift-compression relations characterizing Toeplitz operators, the
//! isometry/unitary certificates for coordinate tuples, product identities
//! with the Hankel defect, and the equivalent descriptions of analytic
//! symbols.
//!
//! Every windowed check is an entrywise assertion on the safe interior
//! sub-window, never an operator-norm assertion on the full truncation:
//! identities of the untruncated operators are exact wherever multiplication
//! cannot escape the window, and edge rows/columns are artifacts.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::operators::{
    assemble_laurent, split_blocks, toeplitz, CoordinateTuple, TruncatedOperator,
};
use crate::symbols::SymbolExpansion;
use crate::symfun::boundary_defect;

/// Default tolerance for relation checks.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Location and size of the worst residual of a check.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    /// Which relation produced the residual.
    pub relation: String,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Outcome of a relation check. `passed` holds exactly when `max_residual`
/// is within the recorded tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub max_residual: f64,
    pub witness: Option<Witness>,
    pub interior_depth_used: usize,
    pub tolerance: f64,
}

pub(crate) struct ReportBuilder {
    tolerance: f64,
    worst: f64,
    witness: Option<Witness>,
    depth_used: usize,
}

impl ReportBuilder {
    pub(crate) fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            worst: 0.0,
            witness: None,
            depth_used: 0,
        }
    }

    /// Compares two windowed operators entrywise on their shared interior.
    pub(crate) fn record(
        &mut self,
        relation: &str,
        lhs: &TruncatedOperator,
        rhs: &TruncatedOperator,
    ) -> Result<()> {
        let (residual, witness, depth) = lhs.residual_against(rhs)?;
        self.depth_used = self.depth_used.max(depth);
        if residual > self.worst {
            self.worst = residual;
            self.witness = witness.map(|(row, col)| Witness {
                relation: relation.to_string(),
                row,
                col,
                value: residual,
            });
        }
        Ok(())
    }

    /// Compares two dense matrices entrywise, no window bookkeeping.
    pub(crate) fn record_dense(&mut self, relation: &str, lhs: &CMatrix, rhs: &CMatrix) {
        for r in 0..lhs.nrows() {
            for c in 0..lhs.ncols() {
                let d = (lhs[(r, c)] - rhs[(r, c)]).norm();
                if d > self.worst {
                    self.worst = d;
                    self.witness = Some(Witness {
                        relation: relation.to_string(),
                        row: r,
                        col: c,
                        value: d,
                    });
                }
            }
        }
    }

    pub(crate) fn record_value(&mut self, relation: &str, row: usize, col: usize, value: f64) {
        if value > self.worst {
            self.worst = value;
            self.witness = Some(Witness {
                relation: relation.to_string(),
                row,
                col,
                value,
            });
        }
    }

    pub(crate) fn finish(self) -> CheckReport {
        CheckReport {
            passed: self.worst <= self.tolerance,
            max_residual: self.worst,
            witness: self.witness,
            interior_depth_used: self.depth_used,
            tolerance: self.tolerance,
        }
    }
}

/// Verifies the shift-compression relations characterizing Toeplitz
/// operators with respect to the coordinate tuple: for each `i < n` the
/// identity `S_i* X P = X S_{n-i}` and, for the last coordinate,
/// `P* X P = X`, all entrywise on the safe interior.
pub fn check_brown_halmos(
    x: &TruncatedOperator,
    tuple: &CoordinateTuple,
    tol: f64,
) -> Result<CheckReport> {
    if x.domain() != tuple.window() || x.codomain() != tuple.window() {
        return Err(Error::IncompatibleWindows(
            "operator and tuple live on different windows".into(),
        ));
    }
    let n = tuple.n();
    let mut report = ReportBuilder::new(tol);
    for i in 1..=n {
        let left_factor = if i == n { tuple.p() } else { &tuple.s()[i - 1] };
        let lhs = left_factor.adjoint().mul(&x.mul(tuple.p())?)?;
        let (label, rhs) = if i == n {
            ("P* X P = X".to_string(), x.clone())
        } else {
            (
                format!("S_{i}* X P = X S_{}", n - i),
                x.mul(&tuple.s()[n - i - 1])?,
            )
        };
        report.record(&label, &lhs, &rhs)?;
    }
    Ok(report.finish())
}

/// The same relations for a dense tuple of square matrices, compared on all
/// entries (no truncation window is involved).
pub fn check_brown_halmos_dense(
    x: &CMatrix,
    s: &[CMatrix],
    p: &CMatrix,
    tol: f64,
) -> CheckReport {
    let n = s.len() + 1;
    let mut report = ReportBuilder::new(tol);
    for i in 1..=n {
        let left = if i == n { p } else { &s[i - 1] };
        let lhs = left.adjoint() * x * p;
        let (label, rhs) = if i == n {
            ("P* X P = X".to_string(), x.clone())
        } else {
            (format!("S_{i}* X P = X S_{}", n - i), x * &s[n - i - 1])
        };
        report.record_dense(&label, &lhs, &rhs);
    }
    report.finish()
}

/// Certifies that a coordinate tuple is an isometric realization: the last
/// coordinate is an isometry, `S_i = S_{n-i}* P`, and all entries commute,
/// entrywise on the interior.
pub fn check_gamma_isometry(tuple: &CoordinateTuple, tol: f64) -> Result<CheckReport> {
    let n = tuple.n();
    let window = tuple.window().clone();
    let mut report = ReportBuilder::new(tol);

    let ptp = tuple.p().adjoint().mul(tuple.p())?;
    let id = TruncatedOperator::identity(window.clone());
    report.record("P* P = I", &ptp, &id)?;

    for i in 1..n {
        let rhs = tuple.s()[n - i - 1].adjoint().mul(tuple.p())?;
        report.record(&format!("S_{i} = S_{}* P", n - i), &tuple.s()[i - 1], &rhs)?;
    }

    let zero = TruncatedOperator::zero(window.clone(), window);
    let entries: Vec<&TruncatedOperator> =
        tuple.s().iter().chain(std::iter::once(tuple.p())).collect();
    for a in 0..entries.len() {
        for b in (a + 1)..entries.len() {
            let comm = entries[a]
                .mul(entries[b])?
                .sub(&entries[b].mul(entries[a])?)?;
            report.record(&format!("[A_{}, A_{}] = 0", a + 1, b + 1), &comm, &zero)?;
        }
    }
    Ok(report.finish())
}

/// Certifies that dense square matrices `(s_1, ..., s_{n-1}, p)` form a
/// commuting normal tuple whose last entry is unitary and whose joint
/// eigenvalue tuples all lie on the distinguished boundary.
///
/// The joint spectrum is computed by simultaneous diagonalization
/// (eigenvalue clusters grouped at gap 1e-8); boundary membership of a joint
/// tuple is its worst preimage-coordinate deviation from the unit circle.
pub fn check_gamma_unitary(s: &[CMatrix], p: &CMatrix, tol: f64) -> Result<CheckReport> {
    let dim = p.nrows();
    if p.ncols() != dim || s.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
        return Err(Error::InvalidDimension(
            "tuple entries must be square matrices of one size".into(),
        ));
    }
    let mut report = ReportBuilder::new(tol);
    let id = CMatrix::identity(dim, dim);
    report.record_dense("P* P = I", &(p.adjoint() * p), &id);
    report.record_dense("P P* = I", &(p * p.adjoint()), &id);
    let all: Vec<&CMatrix> = s.iter().chain(std::iter::once(p)).collect();
    for (a, ma) in all.iter().enumerate() {
        report.record_dense(
            &format!("A_{} normal", a + 1),
            &(*ma * ma.adjoint()),
            &(ma.adjoint() * *ma),
        );
        for (b, mb) in all.iter().enumerate().skip(a + 1) {
            report.record_dense(
                &format!("[A_{}, A_{}] = 0", a + 1, b + 1),
                &(*ma * *mb),
                &(*mb * *ma),
            );
        }
    }

    // Joint spectrum only makes sense once the algebraic screen holds.
    let screen = report.finish();
    if !screen.passed {
        return Ok(screen);
    }
    let mut report = ReportBuilder::new(tol);
    report.record_value(
        "algebraic screen",
        screen.witness.as_ref().map_or(0, |w| w.row),
        screen.witness.as_ref().map_or(0, |w| w.col),
        screen.max_residual,
    );
    let owned: Vec<CMatrix> = s.iter().cloned().chain(std::iter::once(p.clone())).collect();
    let tuples = crate::linalg::joint_eigentuples(&owned, 1e-8)?;
    for (idx, coords) in &tuples {
        let defect = boundary_defect(coords)?;
        report.record_value("joint spectrum on distinguished boundary", *idx, 0, defect);
    }
    Ok(report.finish())
}

/// Verifies the product identities relating Toeplitz and Hankel operators
/// at bound `d`: the adjoint identity `T_phi* = T_{conj phi}` on the whole
/// window, multiplicativity `T_phi T_psi = T_{phi psi}` when the right
/// symbol is analytic or the left one conjugate-analytic, and the Hankel
/// defect identity `T_phi T_psi - T_{phi psi} = -H_{conj phi}* H_psi` on the
/// interior.
pub fn check_product_identities(
    phi: &SymbolExpansion,
    psi: &SymbolExpansion,
    d: i64,
    tol: f64,
) -> Result<CheckReport> {
    if phi.n() != psi.n() {
        return Err(Error::InvalidDimension("symbol arities differ".into()));
    }
    let mut report = ReportBuilder::new(tol);

    let t_phi = toeplitz(phi, d)?;
    let t_psi = toeplitz(psi, d)?;
    let t_phi_conj = toeplitz(&phi.conjugate(), d)?;
    report.record("T_phi* = T_{conj phi}", &t_phi.adjoint(), &t_phi_conj)?;

    let product = t_phi.mul(&t_psi)?;
    let t_product = toeplitz(&phi.multiply(psi)?, d)?;
    if psi.is_analytic() || phi.conjugate().is_analytic() {
        report.record("T_phi T_psi = T_{phi psi}", &product, &t_product)?;
    }

    let h_psi = split_blocks(&assemble_laurent(psi, d)?)?.hankel;
    let h_phi_conj = split_blocks(&assemble_laurent(&phi.conjugate(), d)?)?.hankel;
    let lhs = product.sub(&t_product)?;
    let rhs = h_phi_conj
        .adjoint()
        .mul(&h_psi)?
        .scale(Complex64::new(-1.0, 0.0));
    report.record(
        "T_phi T_psi - T_{phi psi} = -H_{conj phi}* H_psi",
        &lhs,
        &rhs,
    )?;
    Ok(report.finish())
}

/// Outcome of the analytic-symbol characterization: the equivalent
/// conditions measured at truncation for one symbol.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticReport {
    /// Whether the symbol has only nonnegative exponents.
    pub symbol_is_analytic: bool,
    /// Largest interior entry of any commutator of the Toeplitz operator
    /// with a coordinate multiplier.
    pub commutator_max: f64,
    /// Shift-relation reports for the products of each coordinate
    /// multiplier with the Toeplitz operator.
    pub products_brown_halmos: Vec<CheckReport>,
    /// Mass that multiplication pushes out of the range of the last
    /// coordinate multiplier (column-space containment measured entrywise).
    pub range_containment_residual: f64,
    /// Whether all measured conditions agree with `symbol_is_analytic`.
    pub consistent: bool,
    pub tolerance: f64,
}

/// Measures the equivalent characterizations of analytic symbols for one
/// symbol: commutators with every coordinate multiplier vanish, products
/// with the multipliers stay in the Toeplitz class (shift relations), and
/// the range of the last coordinate multiplier is invariant; all three hold
/// exactly when the symbol is analytic, and all three fail visibly when it
/// has a negative exponent.
pub fn check_analytic_characterization(
    phi: &SymbolExpansion,
    d: i64,
    tol: f64,
) -> Result<AnalyticReport> {
    let t_phi = toeplitz(phi, d)?;
    let window = t_phi.domain().clone();
    let tuple = crate::operators::coordinate_tuple_on(&window)?;
    let n = tuple.n();

    let zero = TruncatedOperator::zero(window.clone(), window.clone());
    let mut commutator_max = 0.0f64;
    let mut commutator_depth = 0usize;
    let mut factors: Vec<&TruncatedOperator> = tuple.s().iter().collect();
    factors.push(tuple.p());
    for f in &factors {
        let comm = t_phi.mul(f)?.sub(&f.mul(&t_phi)?)?;
        let (res, _, depth) = comm.residual_against(&zero)?;
        commutator_max = commutator_max.max(res);
        commutator_depth = commutator_depth.max(depth);
    }

    let mut products_brown_halmos = Vec::with_capacity(n);
    for f in &factors {
        let product = f.mul(&t_phi)?;
        products_brown_halmos.push(check_brown_halmos(&product, &tuple, tol)?);
    }

    // Columns of T_phi T_p must keep their support on partitions divisible
    // by the last coordinate (positive last entry).
    let shifted = t_phi.mul(tuple.p())?;
    let depth = shifted.interior_depth();
    let cols = window.interior_indices(depth);
    if cols.is_empty() {
        return Err(Error::WindowTooSmall(format!(
            "no interior columns at depth {depth}"
        )));
    }
    let mut range_containment_residual = 0.0f64;
    for (row, q) in window.partitions().iter().enumerate() {
        if q.last() >= 1 {
            continue;
        }
        for &c in &cols {
            range_containment_residual =
                range_containment_residual.max(shifted.matrix()[(row, c)].norm());
        }
    }

    let symbol_is_analytic = phi.is_analytic();
    let clean = commutator_max <= tol
        && products_brown_halmos.iter().all(|r| r.passed)
        && range_containment_residual <= tol;
    let dirty = commutator_max > tol
        && products_brown_halmos.iter().any(|r| !r.passed)
        && range_containment_residual > tol;
    let consistent = if symbol_is_analytic { clean } else { dirty };

    Ok(AnalyticReport {
        symbol_is_analytic,
        commutator_max,
        products_brown_halmos,
        range_containment_residual,
        consistent,
        tolerance: tol,
    })
}
