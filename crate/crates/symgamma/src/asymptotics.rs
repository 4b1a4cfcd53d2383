//! Compactness and asymptotic-Toeplitz diagnostics.
//!
//! The tools here measure how an operator behaves under iterated
//! compressions along the coordinate shifts: the block compressions
//! `eta_l`, the coefficient-space projections cutting down to bounded
//! exponent gaps, their shift-summed finite-rank approximants, and a
//! three-sequence diagnosis that decides whether a truncated operator looks
//! like Toeplitz-plus-compact and reconstructs the symbol when it does.
//!
//! Weak limits are replaced throughout by interior-entrywise stabilization:
//! a sequence of compressions counts as convergent when consecutive
//! iterates agree on a fixed interior sub-window. That is the finite shadow
//! of weak-operator convergence and is exact for shift-invariant entries.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{max_entry, op_norm, CMatrix};
use crate::operators::{
    assemble, coordinate_tuple_on, recover_symbol, y_shift_on, TruncatedOperator,
};
use crate::partitions::{BasisWindow, Side, WindowRef};
use crate::symbols::SymbolExpansion;

/// How a recorded norm sequence behaves as the compression index grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    DecaysBelowTol,
    Stagnates,
    Grows,
}

/// A norm sequence indexed from `start`, classified against a tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct DecaySequence {
    pub values: Vec<f64>,
    pub start: usize,
    pub verdict: DecayVerdict,
    pub tolerance: f64,
}

impl DecaySequence {
    /// Classifies: decayed means the final value is below the tolerance and
    /// the last three samples do not increase (guarding against reading a
    /// pre-asymptotic dip as convergence); a strictly increasing tail above
    /// tolerance is growth; anything else stagnates.
    pub fn classify(values: Vec<f64>, start: usize, tolerance: f64) -> Self {
        let tail: Vec<f64> = values.iter().rev().take(3).rev().copied().collect();
        let non_increasing = tail.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        let strictly_increasing = tail.len() >= 2 && tail.windows(2).all(|w| w[1] > w[0]);
        let last = values.last().copied().unwrap_or(0.0);
        let verdict = if last <= tolerance && non_increasing {
            DecayVerdict::DecaysBelowTol
        } else if strictly_increasing && last > tolerance {
            DecayVerdict::Grows
        } else {
            DecayVerdict::Stagnates
        };
        Self {
            values,
            start,
            verdict,
            tolerance,
        }
    }
}

/// Writes a decay sequence as CSV `l,value` rows for external plotting.
pub fn write_decay_csv<W: Write>(seq: &DecaySequence, mut w: W) -> Result<()> {
    writeln!(w, "l,value")?;
    for (i, v) in seq.values.iter().enumerate() {
        writeln!(w, "{},{:.17e}", seq.start + i, v)?;
    }
    Ok(())
}

/// Which reading of the iterated-compression map to assemble: the full
/// block matrix over all shift pairs, or the single block column against
/// the product of all shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaReading {
    BlockMatrix,
    SingleColumn,
}

/// The assembled block compression together with its interior norm.
pub struct EtaCompression {
    /// Blocks indexed `[row shift][column shift]`; one column in the
    /// single-column reading.
    pub blocks: Vec<Vec<TruncatedOperator>>,
    /// Operator norm of the stacked blocks restricted to exact rows and
    /// columns.
    pub norm: f64,
    pub reading: EtaReading,
    pub depth_used: usize,
}

/// The l-th block compression of `t` along the doubly commuting shifts and
/// the product coordinate: blocks `A_i^{*l} T A_k^l` where the `A`s run
/// through the shifts with the product multiplier last.
pub fn eta_map(t: &TruncatedOperator, l: usize) -> Result<EtaCompression> {
    eta_map_with(t, l, EtaReading::BlockMatrix)
}

pub fn eta_map_with(
    t: &TruncatedOperator,
    l: usize,
    reading: EtaReading,
) -> Result<EtaCompression> {
    if t.domain() != t.codomain() {
        return Err(Error::IncompatibleWindows(
            "block compression needs a square map".into(),
        ));
    }
    let window = t.domain().clone();
    let n = window.n();
    if (l as i64) > window.bound() {
        return Err(Error::WindowTooSmall(format!(
            "compression index {l} exceeds the bound {}",
            window.bound()
        )));
    }
    let shifts = shift_family(&window)?;
    let powers: Vec<TruncatedOperator> = shifts
        .iter()
        .map(|a| a.pow(l))
        .collect::<Result<Vec<_>>>()?;

    let rights: Vec<TruncatedOperator> = match reading {
        EtaReading::BlockMatrix => powers.clone(),
        EtaReading::SingleColumn => {
            let mut acc = TruncatedOperator::identity(window.clone());
            for p in &powers {
                acc = acc.mul(p)?;
            }
            vec![acc]
        }
    };

    let mut blocks = Vec::with_capacity(n);
    for ai in &powers {
        let left = ai.adjoint();
        let mut row = Vec::with_capacity(rights.len());
        for ak in &rights {
            row.push(left.mul(&t.mul(ak)?)?);
        }
        blocks.push(row);
    }
    let (norm, depth_used) = stacked_interior_norm(&blocks)?;
    Ok(EtaCompression {
        blocks,
        norm,
        reading,
        depth_used,
    })
}

/// The shifts entering the block compressions: the doubly commuting family
/// followed by the product-coordinate multiplier.
fn shift_family(window: &WindowRef) -> Result<Vec<TruncatedOperator>> {
    let n = window.n();
    let mut family = Vec::with_capacity(n);
    for j in 1..n {
        family.push(y_shift_on(j, window)?);
    }
    family.push(assemble(&SymbolExpansion::coordinate(n, n)?, window)?);
    Ok(family)
}

/// Operator norm of a block matrix restricted to the exact rows and columns
/// of each block (all blocks share one window).
fn stacked_interior_norm(blocks: &[Vec<TruncatedOperator>]) -> Result<(f64, usize)> {
    let window = blocks[0][0].domain().clone();
    let depth = blocks
        .iter()
        .flatten()
        .map(|b| b.interior_depth())
        .max()
        .unwrap_or(0);
    let idx = window.interior_indices(depth);
    if idx.is_empty() {
        return Err(Error::WindowTooSmall(format!(
            "no interior at depth {depth} (bound {})",
            window.bound()
        )));
    }
    let k = idx.len();
    let rows = blocks.len();
    let cols = blocks[0].len();
    let mut stacked = CMatrix::zeros(rows * k, cols * k);
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, block) in row.iter().enumerate() {
            for (r, &wr) in idx.iter().enumerate() {
                for (c, &wc) in idx.iter().enumerate() {
                    stacked[(bi * k + r, bj * k + c)] = block.matrix()[(wr, wc)];
                }
            }
        }
    }
    Ok((op_norm(&stacked), depth))
}

/// Orthogonal projection of the coefficient space (partitions with last
/// entry zero) onto the span of those whose consecutive gaps are all at
/// most `l`, assembled literally as the product of the one-gap cutoffs
/// `P_E - X_j^l X_j^{*l}`.
///
/// Every factor displaces an index down and back up, so no intermediate
/// index can escape the window and the entries are exact everywhere.
pub fn coefspace_projection_el(n: usize, l: usize, d: i64) -> Result<TruncatedOperator> {
    if (l as i64) * (n as i64 - 1) > d {
        return Err(Error::WindowTooSmall(format!(
            "gap bound {l} needs window bound at least {}",
            l * (n - 1)
        )));
    }
    let window: WindowRef = Arc::new(BasisWindow::enumerate(n, d, Side::Analytic)?);
    let size = window.len();
    let pe = CMatrix::from_fn(size, size, |r, c| {
        if r == c && window.partitions()[r].last() == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let mut acc = pe.clone();
    for j in 1..n {
        let y = y_shift_on(j, &window)?;
        let x = y.matrix() * &pe; // restrict the shift to the coefficient space
        let mut xl = CMatrix::identity(size, size);
        for _ in 0..l {
            xl = &x * xl;
        }
        let factor = &pe - &xl * xl.adjoint();
        acc = factor * acc;
    }
    TruncatedOperator::from_parts(acc, window.clone(), window, 0, 0)
}

/// The shift-summed finite-rank approximant: copies of the gap projection
/// translated along the product coordinate,
/// `F_l = sum_{r<l} T_p^r E_l T_p^{*r}`.
///
/// Also verifies the inclusion-exclusion expansion of its complement in
/// terms of the shift powers and reports a numerical failure if the two
/// disagree (they are exact 0/1 diagonals).
pub fn finite_rank_fl(n: usize, l: usize, d: i64) -> Result<TruncatedOperator> {
    if l > 0 && (l as i64) * (n as i64) - 1 > d {
        return Err(Error::WindowTooSmall(format!(
            "rank parameter {l} needs window bound at least {}",
            l * n - 1
        )));
    }
    let el = coefspace_projection_el(n, l, d)?;
    let window = el.domain().clone();
    let size = window.len();
    let tp = assemble(&SymbolExpansion::coordinate(n, n)?, &window)?;
    let mut acc = CMatrix::zeros(size, size);
    let mut shifted = el.matrix().clone();
    for r in 0..l {
        if r > 0 {
            shifted = tp.matrix() * shifted * tp.matrix().adjoint();
        }
        acc += &shifted;
    }
    // net displacement of every summand is zero: entries are exact
    let fl = TruncatedOperator::from_parts(acc, window.clone(), window.clone(), 0, 0)?;

    // complement expansion: the projections G_j = A_j^l A_j^{*l} onto
    // "last entry >= l" (product coordinate) and "gap_j > l" (shifts)
    // combine by inclusion-exclusion to I - F_l
    let shifts = shift_family(&window)?;
    let gs: Vec<CMatrix> = shifts
        .iter()
        .map(|a| -> Result<CMatrix> {
            let al = a.pow(l)?;
            Ok(al.matrix() * al.matrix().adjoint())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut expansion = CMatrix::zeros(size, size);
    for mask in 1u32..(1 << gs.len()) {
        let mut term = CMatrix::identity(size, size);
        for (j, g) in gs.iter().enumerate() {
            if mask & (1 << j) != 0 {
                term *= g;
            }
        }
        let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        expansion += term * Complex64::new(sign, 0.0);
    }
    let complement = CMatrix::identity(size, size) - fl.matrix();
    let deviation = max_entry(&(&complement - &expansion));
    if deviation > 1e-12 {
        return Err(Error::NumericalFailure(format!(
            "complement expansion deviates by {deviation:.3e}"
        )));
    }
    Ok(fl)
}

/// Outcome of the three-sequence asymptotic-Toeplitz diagnosis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosisVerdict {
    AsymptoticToeplitz,
    NotAsymptoticToeplitz,
}

pub struct AsymptoticDiagnosis {
    /// The stabilized iterated compression (the Toeplitz candidate).
    pub candidate: TruncatedOperator,
    /// Interior norms of the compressed commutators with every coordinate
    /// multiplier, indexed by compression power.
    pub commutator_decay: DecaySequence,
    /// Interior norms of consecutive differences of the iterated
    /// compressions, on the deepest fixed interior sub-window.
    pub stabilization: DecaySequence,
    /// Interior norms of the block compressions of the residue after
    /// removing the candidate.
    pub eta_decay: DecaySequence,
    pub verdict: DiagnosisVerdict,
    /// The symbol reconstructed from the candidate and its fit residual,
    /// when reconstruction succeeds.
    pub recovered: Option<(SymbolExpansion, f64)>,
}

/// Decides whether `t` behaves like a Toeplitz operator plus a compact
/// perturbation at this truncation.
///
/// Three sequences are recorded: compressed commutators with the coordinate
/// multipliers must decay, the iterated compressions along the product
/// coordinate must stabilize to a candidate, and the block compressions of
/// the residue `t - candidate` must decay. The verdict is positive when all
/// three decay below `tol` and a symbol of degree at most `recover_degree`
/// fits the candidate. When the residue blocks exceed the window capacity,
/// the residue is re-measured against the reconstructed symbol's fresh
/// assembly (or against `t` itself when no symbol fits).
pub fn asymptotic_toeplitz_diagnose(
    t: &TruncatedOperator,
    l_max: usize,
    recover_degree: i64,
    tol: f64,
) -> Result<AsymptoticDiagnosis> {
    if t.domain() != t.codomain() {
        return Err(Error::IncompatibleWindows(
            "diagnosis needs a square map".into(),
        ));
    }
    let window = t.domain().clone();
    let tuple = coordinate_tuple_on(&window)?;
    let n = tuple.n();

    // compressed commutators with every coordinate multiplier
    let mut commutator_values = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        let pl = tuple.p().pow(l)?;
        let mut worst = 0.0f64;
        for i in 1..=n {
            let g = if i == n { tuple.p() } else { &tuple.s()[i - 1] };
            let comm = t.mul(g)?.sub(&g.mul(t)?)?;
            let compressed = pl.adjoint().mul(&comm.mul(&pl)?)?;
            let (value, _) = compressed.interior_norm()?;
            worst = worst.max(value);
        }
        commutator_values.push(worst);
    }
    let commutator_decay = DecaySequence::classify(commutator_values, 0, tol);

    // iterated compressions along the product coordinate, compared on the
    // deepest interior so the comparison set stays fixed
    let mut compressions = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        let pl = tuple.p().pow(l)?;
        compressions.push(pl.adjoint().mul(&t.mul(&pl)?)?);
    }
    let candidate = compressions[l_max].clone();
    let depth_star = candidate.interior_depth();
    let idx = window.interior_indices(depth_star);
    if idx.is_empty() {
        return Err(Error::WindowTooSmall(format!(
            "no interior at depth {depth_star} (bound {})",
            window.bound()
        )));
    }
    let restricted = |op: &TruncatedOperator| {
        CMatrix::from_fn(idx.len(), idx.len(), |r, c| op.matrix()[(idx[r], idx[c])])
    };
    let mut stabilization_values = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        let diff = restricted(&compressions[l]) - restricted(&compressions[l - 1]);
        stabilization_values.push(op_norm(&diff));
    }
    let stabilization = DecaySequence::classify(stabilization_values, 1, tol);

    // symbol reconstruction from the candidate
    let recovered = match recover_symbol(&candidate, recover_degree, tol) {
        Ok(pair) => Some(pair),
        Err(Error::NotAToeplitzOperator(_)) | Err(Error::WindowTooSmall(_)) => None,
        Err(e) => return Err(e),
    };

    // block compressions of the residue; prefer the raw candidate (entries
    // cancel exactly for shift-invariant parts), fall back to the fresh
    // assembly of the recovered symbol when bookkeeping exceeds the window
    let eta_values = match eta_sequence(&t.sub(&candidate)?, l_max) {
        Ok(values) => values,
        Err(Error::WindowTooSmall(_)) => {
            let target = match &recovered {
                Some((symbol, _)) => t.sub(&assemble(symbol, &window)?)?,
                None => t.clone(),
            };
            eta_sequence(&target, l_max)?
        }
        Err(e) => return Err(e),
    };
    let eta_decay = DecaySequence::classify(eta_values, 1, tol);

    let all_decay = [&commutator_decay, &stabilization, &eta_decay]
        .iter()
        .all(|s| s.verdict == DecayVerdict::DecaysBelowTol);
    let verdict = if all_decay && recovered.is_some() {
        DiagnosisVerdict::AsymptoticToeplitz
    } else {
        DiagnosisVerdict::NotAsymptoticToeplitz
    };
    Ok(AsymptoticDiagnosis {
        candidate,
        commutator_decay,
        stabilization,
        eta_decay,
        verdict,
        recovered,
    })
}

fn eta_sequence(target: &TruncatedOperator, l_max: usize) -> Result<Vec<f64>> {
    (1..=l_max).map(|l| Ok(eta_map(target, l)?.norm)).collect()
}
