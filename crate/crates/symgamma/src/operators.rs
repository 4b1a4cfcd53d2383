//! Exact assembly of multiplication, Toeplitz, Hankel and dual-Toeplitz
//! operators at a finite basis window.
//!
//! Assembly is purely combinatorial: multiplying a basis element indexed by
//! `p` by one symmetrized monomial redistributes it over the antisymmetrized
//! shifts of `p` along the orbit of the exponent tuple, each with a sign. No
//! quadrature enters; entries are exact integer combinations of symbol
//! coefficients. A separate sampling route ([`quadrature_entry_matrix`]) is
//! provided as an independent cross-check.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{max_entry, op_norm, CMatrix};
use crate::partitions::{
    factorial, orbit_of_exponent, Antisymmetrized, BasisWindow, Side, StrictPartition, WindowRef,
};
use crate::symbols::{SymbolExpansion, TorusGrid};
use crate::symfun::eval_antisym;

/// Outcome of an entrywise comparison on the shared exact interior:
/// `(largest deviation, offending (row, col) if any, interior depth used)`.
pub type ResidualReading = (f64, Option<(usize, usize)>, usize);

/// A linear map between two basis windows, together with bookkeeping for
/// where its entries are still those of the untruncated operator.
///
/// `interior_depth` is the margin already consumed: entries at row and column
/// partitions surviving a bound shrink by that much are exact.
/// `spread` bounds how far the operator moves an index in one application;
/// products consume additional margin accordingly.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    matrix: CMatrix,
    domain: WindowRef,
    codomain: WindowRef,
    interior_depth: usize,
    spread: usize,
}

impl TruncatedOperator {
    pub fn from_parts(
        matrix: CMatrix,
        domain: WindowRef,
        codomain: WindowRef,
        interior_depth: usize,
        spread: usize,
    ) -> Result<Self> {
        if matrix.nrows() != codomain.len() || matrix.ncols() != domain.len() {
            return Err(Error::InvalidDimension(format!(
                "matrix is {}x{}, windows are {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                codomain.len(),
                domain.len()
            )));
        }
        Ok(Self {
            matrix,
            domain,
            codomain,
            interior_depth,
            spread,
        })
    }

    pub fn identity(window: WindowRef) -> Self {
        Self {
            matrix: CMatrix::identity(window.len(), window.len()),
            domain: window.clone(),
            codomain: window,
            interior_depth: 0,
            spread: 0,
        }
    }

    pub fn zero(domain: WindowRef, codomain: WindowRef) -> Self {
        Self {
            matrix: CMatrix::zeros(codomain.len(), domain.len()),
            domain,
            codomain,
            interior_depth: 0,
            spread: 0,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn domain(&self) -> &WindowRef {
        &self.domain
    }

    pub fn codomain(&self) -> &WindowRef {
        &self.codomain
    }

    pub fn interior_depth(&self) -> usize {
        self.interior_depth
    }

    pub fn spread(&self) -> usize {
        self.spread
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.matrix)
    }

    /// Composition `self . rhs`. Entries of the product are exact wherever
    /// both factors are exact and the intermediate index cannot have escaped
    /// the window through its short side, hence the consumed margin grows by
    /// the smaller of the two spreads.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.domain != rhs.codomain {
            return Err(Error::IncompatibleWindows(
                "composition domains do not line up".into(),
            ));
        }
        Ok(Self {
            matrix: &self.matrix * &rhs.matrix,
            domain: rhs.domain.clone(),
            codomain: self.codomain.clone(),
            interior_depth: self.interior_depth.max(rhs.interior_depth)
                + self.spread.min(rhs.spread),
            spread: self.spread + rhs.spread,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            interior_depth: self.interior_depth,
            spread: self.spread,
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.combine(rhs, Complex64::new(-1.0, 0.0))
    }

    fn combine(&self, rhs: &Self, weight: Complex64) -> Result<Self> {
        if self.domain != rhs.domain || self.codomain != rhs.codomain {
            return Err(Error::IncompatibleWindows("sum windows differ".into()));
        }
        Ok(Self {
            matrix: &self.matrix + &rhs.matrix * weight,
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            interior_depth: self.interior_depth.max(rhs.interior_depth),
            spread: self.spread.max(rhs.spread),
        })
    }

    pub fn scale(&self, weight: Complex64) -> Self {
        Self {
            matrix: &self.matrix * weight,
            ..self.clone()
        }
    }

    pub fn pow(&self, k: usize) -> Result<Self> {
        if self.domain != self.codomain {
            return Err(Error::IncompatibleWindows("power of a non-square map".into()));
        }
        let mut acc = Self::identity(self.domain.clone());
        for _ in 0..k {
            acc = self.mul(&acc)?;
        }
        Ok(acc)
    }

    /// Operator norm of the sub-matrix on the rows and columns where the
    /// entries are exact, together with the depth used.
    pub fn interior_norm(&self) -> Result<(f64, usize)> {
        let depth = self.interior_depth;
        let rows = self.codomain.interior_indices(depth);
        let cols = self.domain.interior_indices(depth);
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::WindowTooSmall(format!(
                "no interior at depth {depth} (bound {})",
                self.domain.bound()
            )));
        }
        let sub = CMatrix::from_fn(rows.len(), cols.len(), |r, c| {
            self.matrix[(rows[r], cols[c])]
        });
        Ok((op_norm(&sub), depth))
    }

    /// Largest entry difference against `rhs` over rows and columns that are
    /// exact for both operands. Returns `(residual, witness, depth_used)`;
    /// the witness is the offending (row, col) position in window order.
    pub fn residual_against(&self, rhs: &Self) -> Result<ResidualReading> {
        if self.domain != rhs.domain || self.codomain != rhs.codomain {
            return Err(Error::IncompatibleWindows("comparison windows differ".into()));
        }
        let depth = self.interior_depth.max(rhs.interior_depth);
        let rows = self.codomain.interior_indices(depth);
        let cols = self.domain.interior_indices(depth);
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::WindowTooSmall(format!(
                "no interior at depth {depth} (bound {})",
                self.domain.bound()
            )));
        }
        let mut worst = 0.0f64;
        let mut witness = None;
        for &r in &rows {
            for &c in &cols {
                let d = (self.matrix[(r, c)] - rhs.matrix[(r, c)]).norm();
                if d > worst {
                    worst = d;
                    witness = Some((r, c));
                }
            }
        }
        Ok((worst, witness, depth))
    }
}

/// Assembles the compression of multiplication by `symbol` to an arbitrary
/// window. Fresh assemblies are exact at every stored entry.
pub fn assemble(symbol: &SymbolExpansion, window: &WindowRef) -> Result<TruncatedOperator> {
    if symbol.n() != window.n() {
        return Err(Error::InvalidDimension(format!(
            "symbol arity {} does not match window arity {}",
            symbol.n(),
            window.n()
        )));
    }
    let size = window.len();
    let mut m = CMatrix::zeros(size, size);
    for (col, p) in window.partitions().iter().enumerate() {
        for (key, alpha) in symbol.terms() {
            for t in orbit_of_exponent(key) {
                match p.add_then_antisymmetrize(&t) {
                    Antisymmetrized::Zero => {}
                    Antisymmetrized::Term { partition, sign } => {
                        if let Some(row) = window.position(&partition) {
                            m[(row, col)] += alpha * sign as f64;
                        }
                    }
                }
            }
        }
    }
    TruncatedOperator::from_parts(
        m,
        window.clone(),
        window.clone(),
        0,
        symbol.height().max(0) as usize,
    )
}

/// Compression of multiplication by `symbol` to the analytic window with
/// bound `d`: the truncated Toeplitz operator.
pub fn toeplitz(symbol: &SymbolExpansion, d: i64) -> Result<TruncatedOperator> {
    let w = Arc::new(BasisWindow::enumerate(symbol.n(), d, Side::Analytic)?);
    assemble(symbol, &w)
}

/// Multiplication by `symbol` on the two-sided window with bound `d`.
pub fn assemble_laurent(symbol: &SymbolExpansion, d: i64) -> Result<TruncatedOperator> {
    let w = Arc::new(BasisWindow::enumerate(symbol.n(), d, Side::Laurent)?);
    assemble(symbol, &w)
}

/// The four corners of a two-sided multiplication operator, split along the
/// analytic/coanalytic decomposition of the window.
pub struct LaurentBlocks {
    /// Analytic to analytic: the Toeplitz compression.
    pub toeplitz: TruncatedOperator,
    /// Analytic to coanalytic: the Hankel operator of the symbol.
    pub hankel: TruncatedOperator,
    /// Coanalytic to analytic: adjoint of the Hankel operator of the
    /// conjugate symbol.
    pub co_hankel: TruncatedOperator,
    /// Coanalytic to coanalytic: the dual Toeplitz compression.
    pub dual_toeplitz: TruncatedOperator,
}

/// Splits a laurent-window operator into its four corners.
pub fn split_blocks(op: &TruncatedOperator) -> Result<LaurentBlocks> {
    let w = op.domain();
    if w.side() != Side::Laurent || op.domain() != op.codomain() {
        return Err(Error::IncompatibleWindows(
            "block split needs a square laurent-window operator".into(),
        ));
    }
    let n = w.n();
    let d = w.bound();
    let ana = Arc::new(BasisWindow::enumerate(n, d, Side::Analytic)?);
    let coa = Arc::new(BasisWindow::enumerate(n, d, Side::Coanalytic)?);
    let pick = |rows: &WindowRef, cols: &WindowRef| -> CMatrix {
        let ri: Vec<usize> = rows
            .partitions()
            .iter()
            .map(|p| w.position(p).expect("window nesting"))
            .collect();
        let ci: Vec<usize> = cols
            .partitions()
            .iter()
            .map(|p| w.position(p).expect("window nesting"))
            .collect();
        CMatrix::from_fn(ri.len(), ci.len(), |r, c| op.matrix()[(ri[r], ci[c])])
    };
    let depth = op.interior_depth();
    let spread = op.spread();
    Ok(LaurentBlocks {
        toeplitz: TruncatedOperator::from_parts(pick(&ana, &ana), ana.clone(), ana.clone(), depth, spread)?,
        hankel: TruncatedOperator::from_parts(pick(&coa, &ana), ana.clone(), coa.clone(), depth, spread)?,
        co_hankel: TruncatedOperator::from_parts(pick(&ana, &coa), coa.clone(), ana.clone(), depth, spread)?,
        dual_toeplitz: TruncatedOperator::from_parts(pick(&coa, &coa), coa.clone(), coa, depth, spread)?,
    })
}

/// The truncated coordinate multipliers: Toeplitz operators of the pullbacks
/// of the elementary symmetric coordinates, with the product coordinate
/// split off last.
pub struct CoordinateTuple {
    s: Vec<TruncatedOperator>,
    p: TruncatedOperator,
}

impl CoordinateTuple {
    /// Packs user-supplied entries; used to probe the checkers with tuples
    /// that deliberately violate the coordinate relations.
    pub fn from_parts(s: Vec<TruncatedOperator>, p: TruncatedOperator) -> Self {
        Self { s, p }
    }

    pub fn s(&self) -> &[TruncatedOperator] {
        &self.s
    }

    pub fn p(&self) -> &TruncatedOperator {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.s.len() + 1
    }

    pub fn window(&self) -> &WindowRef {
        self.p.domain()
    }
}

/// Coordinate multipliers on the analytic window with bound `d`.
pub fn coordinate_tuple(n: usize, d: i64) -> Result<CoordinateTuple> {
    let w = Arc::new(BasisWindow::enumerate(n, d, Side::Analytic)?);
    coordinate_tuple_on(&w)
}

/// Coordinate multipliers compressed to an arbitrary window.
pub fn coordinate_tuple_on(window: &WindowRef) -> Result<CoordinateTuple> {
    let n = window.n();
    let mut s = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        s.push(assemble(&SymbolExpansion::coordinate(n, k)?, window)?);
    }
    let p = assemble(&SymbolExpansion::coordinate(n, n)?, window)?;
    Ok(CoordinateTuple { s, p })
}

/// The j-th doubly commuting shift: sends the basis element at `p` to the
/// one at `p` plus one on the first `j` entries. Always a valid partition,
/// so the matrix is a partial permutation.
pub fn y_shift(j: usize, n: usize, d: i64) -> Result<TruncatedOperator> {
    let w = Arc::new(BasisWindow::enumerate(n, d, Side::Analytic)?);
    y_shift_on(j, &w)
}

pub fn y_shift_on(j: usize, window: &WindowRef) -> Result<TruncatedOperator> {
    let n = window.n();
    if j == 0 || j >= n {
        return Err(Error::InvalidDimension(format!(
            "shift index {j} out of range 1..={}",
            n - 1
        )));
    }
    let size = window.len();
    let mut m = CMatrix::zeros(size, size);
    for (col, p) in window.partitions().iter().enumerate() {
        let mut q: Vec<i64> = p.entries().to_vec();
        for e in q.iter_mut().take(j) {
            *e += 1;
        }
        if let Some(row) = window.position_of_entries(&q) {
            m[(row, col)] = Complex64::new(1.0, 0.0);
        }
    }
    TruncatedOperator::from_parts(m, window.clone(), window.clone(), 0, 1)
}

/// Separation of each partition into its smallest entry and the leftover
/// staircase with last entry zero; conjugates the product-coordinate
/// multiplier into a pure shift of the integer part.
pub struct U1Reindex {
    window: WindowRef,
    pairs: Vec<(i64, StrictPartition)>,
}

impl U1Reindex {
    pub fn pairs(&self) -> &[(i64, StrictPartition)] {
        &self.pairs
    }

    pub fn window(&self) -> &WindowRef {
        &self.window
    }

    /// Rebuilds the original partition from a pair.
    pub fn compose(k: i64, base: &StrictPartition) -> StrictPartition {
        base.shift(k)
    }
}

pub fn u1_reindex(window: &WindowRef) -> U1Reindex {
    let pairs = window
        .partitions()
        .iter()
        .map(|p| {
            let k = p.last();
            (k, p.shift(-k))
        })
        .collect();
    U1Reindex {
        window: window.clone(),
        pairs,
    }
}

/// Entry matrix of the Toeplitz compression computed by torus quadrature:
/// a Riemann sum over an equispaced grid fine enough to integrate every
/// frequency reachable by the symbol against two window elements. This is
/// the independent route used to cross-check [`assemble`].
pub fn quadrature_entry_matrix(
    symbol: &SymbolExpansion,
    window: &WindowRef,
) -> Result<CMatrix> {
    let n = window.n();
    if symbol.n() != n {
        return Err(Error::InvalidDimension("symbol arity mismatch".into()));
    }
    let freq = symbol.height() + 2 * window.bound();
    let m = (freq + 1).max(2) as usize;
    let grid = TorusGrid::new(n, m)?;
    let g = grid.len();
    let size = window.len();
    let mut basis = CMatrix::zeros(size, g);
    let mut weighted = CMatrix::zeros(size, g);
    for idx in 0..g {
        let z = grid.point(idx);
        let phi = symbol.eval(&z)?;
        for (row, p) in window.partitions().iter().enumerate() {
            let a = eval_antisym(p, &z)?;
            basis[(row, idx)] = a.conj();
            weighted[(row, idx)] = phi * a;
        }
    }
    let scale = 1.0 / (factorial(n) as f64 * g as f64);
    Ok(&basis * weighted.transpose() * Complex64::new(scale, 0.0))
}

/// Least-squares reconstruction of a symbol from an assembled operator.
///
/// Candidate exponents run over all weakly decreasing tuples with entries in
/// `[-degree, degree]`; equations are taken at exact rows against columns
/// deep enough that no candidate shift can escape. Returns the symbol and
/// the worst entry residual of the fit.
pub fn recover_symbol(
    x: &TruncatedOperator,
    degree: i64,
    tol: f64,
) -> Result<(SymbolExpansion, f64)> {
    if degree < 0 {
        return Err(Error::InvalidDimension("negative degree bound".into()));
    }
    if x.domain() != x.codomain() {
        return Err(Error::IncompatibleWindows("recovery needs a square map".into()));
    }
    let window = x.domain().clone();
    let n = window.n();
    let col_depth = x.interior_depth().max(degree as usize);
    let cols = window.interior_indices(col_depth);
    let rows = window.interior_indices(x.interior_depth());
    if cols.is_empty() || rows.is_empty() {
        return Err(Error::WindowTooSmall(format!(
            "no interior columns at depth {col_depth}"
        )));
    }

    let candidates = candidate_exponents(n, degree);
    let mut design = CMatrix::zeros(rows.len() * cols.len(), candidates.len());
    for (k, m) in candidates.iter().enumerate() {
        let unit = SymbolExpansion::from_coeffs(n, [(m.clone(), Complex64::new(1.0, 0.0))])?;
        let op = assemble(&unit, &window)?;
        for (ci, &c) in cols.iter().enumerate() {
            for (ri, &r) in rows.iter().enumerate() {
                design[(ci * rows.len() + ri, k)] = op.matrix()[(r, c)];
            }
        }
    }
    let mut rhs = CMatrix::zeros(rows.len() * cols.len(), 1);
    for (ci, &c) in cols.iter().enumerate() {
        for (ri, &r) in rows.iter().enumerate() {
            rhs[(ci * rows.len() + ri, 0)] = x.matrix()[(r, c)];
        }
    }
    let alpha = crate::linalg::lstsq(&design, &rhs, 1e-12)?;
    let residual = max_entry(&(&design * &alpha - &rhs));
    if residual > tol {
        return Err(Error::NotAToeplitzOperator(residual));
    }
    let mut symbol = SymbolExpansion::new(n)?;
    let scale = alpha.iter().map(|a| a.norm()).fold(1.0f64, f64::max);
    for (k, m) in candidates.iter().enumerate() {
        if alpha[(k, 0)].norm() > 1e-11 * scale {
            symbol.add_term(m.clone(), alpha[(k, 0)])?;
        }
    }
    Ok((symbol, residual))
}

fn candidate_exponents(n: usize, degree: i64) -> Vec<crate::partitions::Exponent> {
    let mut acc: Vec<Vec<i64>> = vec![vec![]];
    for i in 0..n {
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                let hi = if i == 0 {
                    degree
                } else {
                    prefix[i - 1]
                };
                (-degree..=hi)
                    .map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    acc.into_iter()
        .map(|v| crate::partitions::Exponent::new(v).unwrap())
        .collect()
}

/// Sidecar metadata accompanying a CSV matrix export.
#[derive(Serialize)]
pub struct MatrixSidecar<'a> {
    pub domain: &'a BasisWindow,
    pub codomain: &'a BasisWindow,
    pub interior_depth: usize,
    pub spread: usize,
}

/// Writes every entry as `row_index,col_index,re,im` after a header line.
pub fn write_matrix_csv<W: Write>(op: &TruncatedOperator, mut w: W) -> Result<()> {
    writeln!(w, "row_index,col_index,re,im")?;
    let m = op.matrix();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            writeln!(w, "{r},{c},{:.17e},{:.17e}", z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn write_matrix_sidecar<W: Write>(op: &TruncatedOperator, w: W) -> Result<()> {
    serde_json::to_writer_pretty(
        w,
        &MatrixSidecar {
            domain: op.domain(),
            codomain: op.codomain(),
            interior_depth: op.interior_depth(),
            spread: op.spread(),
        },
    )
    .map_err(|e| Error::NumericalFailure(format!("sidecar serialization failed: {e}")))
}

/// Reads a CSV matrix written by [`write_matrix_csv`]. Missing entries stay
/// zero; a header line is skipped when present.
pub fn read_matrix_csv<R: BufRead>(reader: R, rows: usize, cols: usize) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(rows, cols);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with("row_index") || t.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = t.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected 4 comma-separated fields, found {}", parts.len()),
            });
        }
        let parse_err = |what: &str, e: String| Error::Parse {
            line: lineno + 1,
            msg: format!("bad {what}: {e}"),
        };
        let r: usize = parts[0]
            .trim()
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err("row index", e.to_string()))?;
        let c: usize = parts[1]
            .trim()
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err("col index", e.to_string()))?;
        let re: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err("real part", e.to_string()))?;
        let im: f64 = parts[3]
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err("imaginary part", e.to_string()))?;
        if r >= rows || c >= cols {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("index ({r},{c}) outside {rows}x{cols}"),
            });
        }
        m[(r, c)] = Complex64::new(re, im);
    }
    Ok(m)
}
