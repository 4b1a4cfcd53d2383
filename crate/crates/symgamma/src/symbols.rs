//! Boundary symbols as finite expansions over symmetrized monomials.
//!
//! The basis function attached to a weakly decreasing tuple `m` is the
//! literal group sum over all permutations of `m`, with multiplicity: the
//! tuple of all zeros therefore names the constant n!, and the constant one
//! is `{(0,...,0): 1/n!}`.
//!
//! Key types: [`SymbolExpansion`] (the expansion itself), [`TorusGrid`]
//! (equispaced sampling used by the quadrature route).

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::partitions::{factorial, orbit_of_exponent, Exponent};
use crate::symfun::cpow;

/// Finite linear combination of symmetrized monomials on the torus,
/// keyed by canonical (weakly decreasing) exponent tuples.
///
/// No explicit zero coefficients are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolExpansion {
    n: usize,
    coeffs: BTreeMap<Exponent, Complex64>,
}

impl SymbolExpansion {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        Ok(Self {
            n,
            coeffs: BTreeMap::new(),
        })
    }

    /// Builds from `(exponent, coefficient)` pairs; repeated keys accumulate.
    pub fn from_coeffs<I>(n: usize, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, Complex64)>,
    {
        let mut s = Self::new(n)?;
        for (m, a) in coeffs {
            s.add_term(m, a)?;
        }
        Ok(s)
    }

    /// The constant function one.
    pub fn one(n: usize) -> Result<Self> {
        let zero = Exponent::new(vec![0; n])?;
        Self::from_coeffs(
            n,
            [(zero, Complex64::new(1.0 / factorial(n) as f64, 0.0))],
        )
    }

    /// Pullback of the k-th elementary symmetric coordinate (1-based):
    /// the orbit of `(1,...,1,0,...,0)` weighted so each distinct monomial
    /// appears once.
    pub fn coordinate(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidDimension(format!(
                "coordinate index {k} out of range 1..={n}"
            )));
        }
        let mut e = vec![1i64; k];
        e.extend(std::iter::repeat_n(0i64, n - k));
        let m = Exponent::new(e)?;
        let w = 1.0 / (factorial(k) * factorial(n - k)) as f64;
        Self::from_coeffs(n, [(m, Complex64::new(w, 0.0))])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, m: Exponent, a: Complex64) -> Result<()> {
        if m.n() != self.n {
            return Err(Error::InvalidDimension(format!(
                "exponent length {} does not match symbol arity {}",
                m.n(),
                self.n
            )));
        }
        let entry = self.coeffs.entry(m.clone()).or_insert(Complex64::ZERO);
        *entry += a;
        if entry.re == 0.0 && entry.im == 0.0 {
            self.coeffs.remove(&m);
        }
        Ok(())
    }

    pub fn coefficient(&self, m: &Exponent) -> Complex64 {
        self.coeffs.get(m).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Drops coefficients of modulus at most `eps`.
    pub fn prune(&mut self, eps: f64) {
        self.coeffs.retain(|_, a| a.norm() > eps);
    }

    /// Largest spread (first minus last entry) over stored keys; 0 if empty.
    pub fn spread(&self) -> i64 {
        self.coeffs.keys().map(|m| m.spread()).max().unwrap_or(0)
    }

    /// Largest absolute exponent entry over stored keys; 0 if empty.
    pub fn height(&self) -> i64 {
        self.coeffs.keys().map(|m| m.height()).max().unwrap_or(0)
    }

    /// True when every stored key has nonnegative entries.
    pub fn is_analytic(&self) -> bool {
        self.coeffs.keys().all(|m| m.is_analytic())
    }

    /// Evaluates the expansion at a torus point (each `|z_i| = 1` within
    /// 1e-12). The orbit sum runs over all n! permutations with multiplicity.
    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.n {
            return Err(Error::InvalidDimension(format!(
                "point length {} does not match symbol arity {}",
                z.len(),
                self.n
            )));
        }
        for zi in z {
            if (zi.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::EvaluationDomain(format!(
                    "|z| = {} is not on the unit circle",
                    zi.norm()
                )));
            }
        }
        let mut total = Complex64::ZERO;
        for (m, a) in &self.coeffs {
            let mut orbit_sum = Complex64::ZERO;
            for t in orbit_of_exponent(m) {
                let mut mono = Complex64::new(1.0, 0.0);
                for (zi, ti) in z.iter().zip(&t) {
                    mono *= cpow(*zi, *ti);
                }
                orbit_sum += mono;
            }
            total += a * orbit_sum;
        }
        Ok(total)
    }

    /// Expansion of the pointwise complex conjugate: each key is negated and
    /// re-sorted, each coefficient conjugated.
    pub fn conjugate(&self) -> Self {
        let mut out = Self::new(self.n).unwrap();
        for (m, a) in &self.coeffs {
            let negated: Vec<i64> = m.entries().iter().map(|e| -e).collect();
            let key = Exponent::canonical(negated).unwrap();
            out.add_term(key, a.conj()).unwrap();
        }
        out
    }

    /// Pointwise product as an expansion: expand both factors into plain
    /// monomials, convolve, and regroup orbits (dividing by each stabilizer
    /// order, since the group sum counts a monomial once per stabilizer
    /// element).
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::InvalidDimension(
                "symbol arities do not match".into(),
            ));
        }
        let a = self.monomial_map();
        let b = other.monomial_map();
        let mut prod: HashMap<Vec<i64>, Complex64> = HashMap::new();
        for (ta, ca) in &a {
            for (tb, cb) in &b {
                let sum: Vec<i64> = ta.iter().zip(tb).map(|(x, y)| x + y).collect();
                *prod.entry(sum).or_insert(Complex64::ZERO) += ca * cb;
            }
        }
        let mut out = Self::new(self.n)?;
        for (t, c) in prod {
            let m = Exponent::canonical(t.clone())?;
            // only record once per orbit, at the canonical representative
            if t != m.entries() {
                continue;
            }
            let adjusted = c / m.stabilizer_order() as f64;
            out.add_term(m, adjusted)?;
        }
        out.prune(0.0);
        Ok(out)
    }

    /// Plain monomial coefficients (every orbit member listed, with the
    /// group-sum multiplicity folded in).
    fn monomial_map(&self) -> HashMap<Vec<i64>, Complex64> {
        let mut map: HashMap<Vec<i64>, Complex64> = HashMap::new();
        for (m, a) in &self.coeffs {
            for t in orbit_of_exponent(m) {
                *map.entry(t).or_insert(Complex64::ZERO) += a;
            }
        }
        map
    }

    /// Reads the text format: one term per line, `m_1 ... m_n re im`,
    /// whitespace separated, `#` starts a comment line.
    pub fn read_text<R: BufRead>(n: usize, reader: R) -> Result<Self> {
        let mut s = Self::new(n)?;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks.len() != n + 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected {} fields, found {}", n + 2, toks.len()),
                });
            }
            let mut entries = Vec::with_capacity(n);
            for t in &toks[..n] {
                entries.push(t.parse::<i64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad exponent `{t}`: {e}"),
                })?);
            }
            let re: f64 = toks[n].parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad real part: {e}"),
            })?;
            let im: f64 = toks[n + 1].parse().map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: format!("bad imaginary part: {e}"),
            })?;
            let m = Exponent::new(entries).map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: "exponent tuple is not weakly decreasing".into(),
            })?;
            s.add_term(m, Complex64::new(re, im))?;
        }
        Ok(s)
    }

    /// Writes the text format read by [`SymbolExpansion::read_text`].
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for (m, a) in &self.coeffs {
            for e in m.entries() {
                write!(w, "{e} ")?;
            }
            writeln!(w, "{:.17e} {:.17e}", a.re, a.im)?;
        }
        Ok(())
    }
}

/// Equispaced `m^n` sampling grid on the torus.
#[derive(Debug, Clone, Copy)]
pub struct TorusGrid {
    pub n: usize,
    pub m: usize,
}

impl TorusGrid {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidDimension("empty grid".into()));
        }
        Ok(Self { n, m })
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The grid point at flat index `idx` (row-major over axes).
    pub fn point(&self, idx: usize) -> Vec<Complex64> {
        let mut rem = idx;
        let mut z = vec![Complex64::ZERO; self.n];
        for axis in (0..self.n).rev() {
            let k = rem % self.m;
            rem /= self.m;
            let theta = 2.0 * std::f64::consts::PI * k as f64 / self.m as f64;
            z[axis] = Complex64::from_polar(1.0, theta);
        }
        z
    }

    /// Samples a function over the whole grid, in flat-index order.
    pub fn sample<F: FnMut(&[Complex64]) -> Complex64>(&self, mut f: F) -> Vec<Complex64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }

    /// Plain multidimensional Fourier coefficient of sampled values at
    /// frequency `t`: the average of `samples * z^{-t}` over the grid.
    pub fn fourier_coefficient(&self, samples: &[Complex64], t: &[i64]) -> Complex64 {
        debug_assert_eq!(samples.len(), self.len());
        debug_assert_eq!(t.len(), self.n);
        let mut acc = Complex64::ZERO;
        for (idx, v) in samples.iter().enumerate() {
            let z = self.point(idx);
            let mut mono = Complex64::new(1.0, 0.0);
            for (zi, ti) in z.iter().zip(t) {
                mono *= cpow(*zi, -ti);
            }
            acc += v * mono;
        }
        acc / self.len() as f64
    }
}

/// Recovers a symbol expansion from grid samples by discrete Fourier
/// transform over the box of frequencies with entries in `[-bound, bound]`.
///
/// Requires `grid.m > 2 * bound` so no frequency in the box aliases another.
/// Fails with `SymmetryViolation` when the Fourier data is not invariant
/// under coordinate permutation within 1e-8 (relative to the largest
/// coefficient).
pub fn quadrature_coeffs(
    samples: &[Complex64],
    grid: TorusGrid,
    bound: i64,
) -> Result<SymbolExpansion> {
    if bound < 0 {
        return Err(Error::InvalidDimension("negative frequency bound".into()));
    }
    if grid.m as i64 <= 2 * bound {
        return Err(Error::GridTooCoarse(format!(
            "grid has {} points per axis, need more than {}",
            grid.m,
            2 * bound
        )));
    }
    if samples.len() != grid.len() {
        return Err(Error::InvalidDimension(format!(
            "expected {} samples, got {}",
            grid.len(),
            samples.len()
        )));
    }
    let n = grid.n;
    // every frequency in the box, grouped by canonical representative
    let mut boxes: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..n {
        boxes = boxes
            .into_iter()
            .flat_map(|prefix| {
                (-bound..=bound).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    let mut coeff_at: HashMap<Vec<i64>, Complex64> = HashMap::new();
    for t in &boxes {
        coeff_at.insert(t.clone(), grid.fourier_coefficient(samples, t));
    }
    let scale = coeff_at
        .values()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut out = SymbolExpansion::new(n)?;
    for (t, c) in &coeff_at {
        let m = Exponent::canonical(t.clone())?;
        if t != m.entries() {
            // symmetry check against the canonical representative
            let canon = coeff_at[m.entries()];
            if (c - canon).norm() > 1e-8 * scale {
                return Err(Error::SymmetryViolation((c - canon).norm() / scale));
            }
            continue;
        }
        let adjusted = c / m.stabilizer_order() as f64;
        out.add_term(m, adjusted)?;
    }
    out.prune(1e-12 * scale);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn exp(v: &[i64]) -> Exponent {
        Exponent::new(v.to_vec()).unwrap()
    }

    fn symbol(n: usize, terms: &[(&[i64], Complex64)]) -> SymbolExpansion {
        SymbolExpansion::from_coeffs(n, terms.iter().map(|(m, a)| (exp(m), *a))).unwrap()
    }

    #[test]
    fn eval_examples() {
        let phi = symbol(2, &[(&[1, 0], c(1.0, 0.0))]);
        let v = phi.eval(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-14);

        let phi = symbol(2, &[(&[1, 1], c(1.0, 0.0))]);
        let v = phi.eval(&[c(0.0, 1.0), c(0.0, 1.0)]).unwrap();
        assert!((v - c(-2.0, 0.0)).norm() < 1e-14);

        let one = SymbolExpansion::one(2).unwrap();
        let v = one.eval(&[c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eval_rejects_off_torus_points() {
        let phi = SymbolExpansion::one(2).unwrap();
        assert!(matches!(
            phi.eval(&[c(0.5, 0.0), c(1.0, 0.0)]),
            Err(Error::EvaluationDomain(_))
        ));
    }

    #[test]
    fn eval_is_permutation_invariant() {
        let phi = symbol(3, &[(&[2, 1, -1], c(0.3, 0.7)), (&[1, 0, 0], c(-1.0, 0.2))]);
        let z = [
            Complex64::from_polar(1.0, 0.3),
            Complex64::from_polar(1.0, -1.2),
            Complex64::from_polar(1.0, 2.5),
        ];
        let a = phi.eval(&z).unwrap();
        let b = phi.eval(&[z[1], z[2], z[0]]).unwrap();
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn conjugate_examples() {
        let phi = symbol(2, &[(&[1, 0], c(1.0, 0.0))]);
        let bar = phi.conjugate();
        assert_eq!(bar.coefficient(&exp(&[0, -1])), c(1.0, 0.0));
        assert_eq!(bar.terms().count(), 1);
    }

    #[test]
    fn conjugate_matches_pointwise_and_is_involutive() {
        let phi = symbol(
            2,
            &[(&[2, -1], c(0.4, -0.9)), (&[1, 1], c(0.0, 1.0)), (&[0, 0], c(0.5, 0.0))],
        );
        let bar = phi.conjugate();
        let grid = TorusGrid::new(2, 7).unwrap();
        for idx in 0..grid.len() {
            let z = grid.point(idx);
            let a = phi.eval(&z).unwrap().conj();
            let b = bar.eval(&z).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(bar.conjugate(), phi);
    }

    #[test]
    fn multiply_example() {
        let e1 = symbol(2, &[(&[1, 0], c(1.0, 0.0))]);
        let sq = e1.multiply(&e1).unwrap();
        assert!((sq.coefficient(&exp(&[2, 0])) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((sq.coefficient(&exp(&[1, 1])) - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(sq.terms().count(), 2);
    }

    #[test]
    fn multiply_matches_pointwise_products() {
        let phi = symbol(3, &[(&[1, 0, -1], c(0.2, 0.4)), (&[1, 1, 0], c(-0.7, 0.1))]);
        let psi = symbol(3, &[(&[2, 0, 0], c(0.9, -0.3)), (&[0, 0, 0], c(0.25, 0.0))]);
        let prod = phi.multiply(&psi).unwrap();
        let grid = TorusGrid::new(3, 5).unwrap();
        for idx in 0..grid.len() {
            let z = grid.point(idx);
            let a = phi.eval(&z).unwrap() * psi.eval(&z).unwrap();
            let b = prod.eval(&z).unwrap();
            assert!((a - b).norm() < 1e-11, "mismatch at {idx}");
        }
    }

    #[test]
    fn multiply_by_one_is_identity() {
        let phi = symbol(2, &[(&[2, -1], c(0.3, 0.8)), (&[1, 0], c(1.0, -1.0))]);
        let one = SymbolExpansion::one(2).unwrap();
        assert_eq!(phi.multiply(&one).unwrap(), phi);
        assert_eq!(one.multiply(&phi).unwrap(), phi);
    }

    #[test]
    fn multiply_is_commutative() {
        let phi = symbol(2, &[(&[2, 0], c(0.3, 0.8)), (&[1, -1], c(1.0, -1.0))]);
        let psi = symbol(2, &[(&[1, 1], c(-0.2, 0.5)), (&[0, -2], c(0.7, 0.0))]);
        assert_eq!(phi.multiply(&psi).unwrap(), psi.multiply(&phi).unwrap());
    }

    #[test]
    fn coordinate_symbols() {
        // k-th coordinate evaluates to the k-th elementary symmetric function
        let z = [
            Complex64::from_polar(1.0, 0.4),
            Complex64::from_polar(1.0, 1.9),
            Complex64::from_polar(1.0, -2.7),
        ];
        let e = crate::symfun::symmetrize_point(&z);
        for k in 1..=3usize {
            let phi = SymbolExpansion::coordinate(3, k).unwrap();
            let v = phi.eval(&z).unwrap();
            assert!((v - e[k - 1]).norm() < 1e-13, "coordinate {k}");
        }
    }

    #[test]
    fn quadrature_round_trip() {
        let phi = symbol(
            2,
            &[(&[2, 1], c(0.3, -0.4)), (&[1, -1], c(1.5, 0.2)), (&[0, 0], c(0.1, 0.1))],
        );
        let grid = TorusGrid::new(2, 8).unwrap();
        let samples = grid.sample(|z| phi.eval(z).unwrap());
        let back = quadrature_coeffs(&samples, grid, 3).unwrap();
        for (m, a) in phi.terms() {
            assert!((back.coefficient(m) - a).norm() < 1e-12, "key {m}");
        }
        assert_eq!(back.terms().count(), phi.terms().count());
    }

    #[test]
    fn quadrature_of_constant() {
        let grid = TorusGrid::new(3, 4).unwrap();
        let samples = vec![c(1.0, 0.0); grid.len()];
        let back = quadrature_coeffs(&samples, grid, 1).unwrap();
        let one = SymbolExpansion::one(3).unwrap();
        let key = exp(&[0, 0, 0]);
        assert!((back.coefficient(&key) - one.coefficient(&key)).norm() < 1e-14);
        assert_eq!(back.terms().count(), 1);
    }

    #[test]
    fn quadrature_rejects_asymmetric_samples() {
        let grid = TorusGrid::new(2, 8).unwrap();
        // z_1 alone is not symmetric
        let samples = grid.sample(|z| z[0]);
        assert!(matches!(
            quadrature_coeffs(&samples, grid, 2),
            Err(Error::SymmetryViolation(_))
        ));
    }

    #[test]
    fn quadrature_rejects_coarse_grids() {
        let grid = TorusGrid::new(2, 4).unwrap();
        let samples = vec![c(1.0, 0.0); grid.len()];
        assert!(matches!(
            quadrature_coeffs(&samples, grid, 2),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn text_format_round_trip() {
        let phi = symbol(2, &[(&[2, -1], c(0.125, -3.5)), (&[1, 1], c(2.0, 0.0))]);
        let mut buf = Vec::new();
        phi.write_text(&mut buf).unwrap();
        let back = SymbolExpansion::read_text(2, buf.as_slice()).unwrap();
        assert_eq!(phi, back);
    }

    #[test]
    fn text_format_accepts_comments_and_blank_lines() {
        let text = "# a comment\n\n1 0 1.0 0.0\n# another\n1 0 0.5 -1.0\n";
        let phi = SymbolExpansion::read_text(2, text.as_bytes()).unwrap();
        assert_eq!(phi.coefficient(&exp(&[1, 0])), c(1.5, -1.0));
    }

    #[test]
    fn text_format_rejects_bad_lines() {
        assert!(matches!(
            SymbolExpansion::read_text(2, "1 0 1.0".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            SymbolExpansion::read_text(2, "0 1 1.0 0.0".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn degree_queries() {
        let phi = symbol(2, &[(&[2, -1], c(1.0, 0.0)), (&[1, 1], c(1.0, 0.0))]);
        assert_eq!(phi.spread(), 3);
        assert_eq!(phi.height(), 2);
        assert!(!phi.is_analytic());
        assert!(symbol(2, &[(&[3, 0], c(1.0, 0.0))]).is_analytic());
    }
}
