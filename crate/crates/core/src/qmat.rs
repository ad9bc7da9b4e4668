//! Small dense complex matrices and two/three-qubit density operators.
//!
//! Everything here is sized for d ≤ 8, so storage is a flat row-major `Vec`
//! and the eigensolver is a cyclic Jacobi sweep. Subsystem index 0 is always
//! the leftmost tensor factor.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Elementwise slack for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-14;
/// Slack for the Hermitian and unit-trace invariants of a state.
pub const STATE_TOL: f64 = 1e-12;
/// Allowed negative eigenvalue for a state to still count as PSD.
pub const PSD_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows are ragged or non-square.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix rows must form a square");
            data.extend_from_slice(row);
        }
        Self { n, data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// |ψ⟩⟨ψ| for an (unnormalised) ket.
    pub fn outer(ket: &[C64]) -> Self {
        let n = ket.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = ket[i] * ket[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(j, i)];
            }
        }
        m
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |A − A†| over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// (A + A†)/2, used to strip rounding asymmetry after products.
    pub fn hermitian_part(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
    }

    /// ⟨φ|A|φ⟩
    pub fn expectation(&self, ket: &[C64]) -> C64 {
        assert_eq!(ket.len(), self.n);
        let mut acc = ZERO;
        for i in 0..self.n {
            let mut row = ZERO;
            for j in 0..self.n {
                row += self[(i, j)] * ket[j];
            }
            acc += ket[i].conj() * row;
        }
        acc
    }

    /// U A U†
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.dagger()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (na, nb) = (a.n, b.n);
    let mut out = CMatrix::zeros(na * nb);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// A validated density operator with its tensor-factor layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Checks the Hermitian, unit-trace and PSD invariants.
    pub fn new(mat: CMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, mat.dim())?;
        let dev = mat.hermitian_deviation();
        if dev > STATE_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = herm_eigvals(&mat)?[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { mat, dims })
    }

    /// Single-qubit or multi-qubit state over `n_qubits` qubits.
    pub fn qubits(mat: CMatrix) -> Result<Self> {
        let n = mat.dim();
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::BadDims {
                dims: vec![],
                size: n,
            });
        }
        let dims = vec![2; n.trailing_zeros() as usize];
        Self::new(mat, dims)
    }

    /// Skips the eigenvalue check; callers guarantee the invariants by construction.
    pub(crate) fn from_parts_unchecked(mat: CMatrix, dims: Vec<usize>) -> Self {
        debug_assert!(check_dims(&dims, mat.dim()).is_ok());
        debug_assert!(mat.hermitian_deviation() <= STATE_TOL);
        debug_assert!((mat.trace() - ONE).norm() <= STATE_TOL);
        Self { mat, dims }
    }

    pub fn pure(ket: &[C64], dims: Vec<usize>) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        let ket: Vec<C64> = ket.iter().map(|z| z / norm.sqrt()).collect();
        Self::new(CMatrix::outer(&ket), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        Self {
            mat: CMatrix::identity(d).scale(1.0 / d as f64),
            dims,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// ρ ⊗ σ with dims concatenated.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            mat: kron(&self.mat, &other.mat),
            dims,
        }
    }

    /// Convex combination Σ wᵢ ρᵢ; weights must be nonnegative and sum to 1.
    pub fn mix(terms: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Parse("empty mixture".into()))?
            .1;
        let mut acc = CMatrix::zeros(first.dim());
        for &(w, rho) in terms {
            if rho.dims != first.dims {
                return Err(Error::DimensionMismatch(first.dim(), rho.dim()));
            }
            crate::error::check_range("mixture weight", w, 0.0, 1.0)?;
            acc = &acc + &rho.mat.scale(w);
        }
        DensityMatrix::new(acc, first.dims.clone())
    }
}

fn check_dims(dims: &[usize], size: usize) -> Result<()> {
    if dims.is_empty() || dims.iter().product::<usize>() != size {
        return Err(Error::BadDims {
            dims: dims.to_vec(),
            size,
        });
    }
    Ok(())
}

/// Splits a flat index into per-subsystem digits (most significant first).
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

fn undigits(digs: &[usize], dims: &[usize]) -> usize {
    digs.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Traces out subsystem `k`, keeping the remaining factors in order.
pub fn partial_trace(rho: &DensityMatrix, k: usize) -> Result<DensityMatrix> {
    let out = partial_trace_raw(rho.matrix(), rho.dims(), k)?;
    let kept = rho
        .dims()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, &d)| d)
        .collect();
    Ok(DensityMatrix::from_parts_unchecked(out, kept))
}

/// Partial trace of an arbitrary operator with the given layout.
pub fn partial_trace_raw(mat: &CMatrix, dims: &[usize], k: usize) -> Result<CMatrix> {
    check_dims(dims, mat.dim())?;
    if k >= dims.len() || dims.len() == 1 {
        return Err(Error::SubsystemOutOfRange {
            index: k,
            count: dims.len(),
        });
    }
    let n = mat.dim();
    let mut out = CMatrix::zeros(n / dims[k]);
    let mut di = vec![0; dims.len()];
    let mut dj = vec![0; dims.len()];
    for i in 0..n {
        digits(i, dims, &mut di);
        for j in 0..n {
            digits(j, dims, &mut dj);
            if di[k] != dj[k] {
                continue;
            }
            let ri = reduced_index(&di, dims, k);
            let rj = reduced_index(&dj, dims, k);
            out[(ri, rj)] += mat[(i, j)];
        }
    }
    Ok(out)
}

fn reduced_index(digs: &[usize], dims: &[usize], skip: usize) -> usize {
    digs.iter()
        .zip(dims)
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .fold(0, |acc, (_, (&x, &d))| acc * d + x)
}

/// Transposes the indices of subsystem `k` only.
pub fn partial_transpose(rho: &DensityMatrix, k: usize) -> Result<CMatrix> {
    partial_transpose_raw(rho.matrix(), rho.dims(), k)
}

/// Partial transpose on an unvalidated operator with the given layout.
pub fn partial_transpose_raw(mat: &CMatrix, dims: &[usize], k: usize) -> Result<CMatrix> {
    check_dims(dims, mat.dim())?;
    if k >= dims.len() {
        return Err(Error::SubsystemOutOfRange {
            index: k,
            count: dims.len(),
        });
    }
    let n = mat.dim();
    let mut out = CMatrix::zeros(n);
    let mut di = vec![0; dims.len()];
    let mut dj = vec![0; dims.len()];
    for i in 0..n {
        for j in 0..n {
            digits(i, dims, &mut di);
            digits(j, dims, &mut dj);
            std::mem::swap(&mut di[k], &mut dj[k]);
            out[(undigits(&di, dims), undigits(&dj, dims))] = mat[(i, j)];
        }
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalisation of a Hermitian matrix.
pub fn herm_eigh(a: &CMatrix) -> Result<HermEigen> {
    let dev = a.hermitian_deviation();
    if dev > PSD_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = 0.5 * (2.0 * r).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * gpp + akq * gqp;
                    m[(k, q)] = akp * gpq + akq * gqq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    m[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(HermEigen { values, vectors })
}

/// Ascending real eigenvalues of a Hermitian matrix.
pub fn herm_eigvals(a: &CMatrix) -> Result<Vec<f64>> {
    herm_eigh(a).map(|e| e.values)
}

impl HermEigen {
    /// V diag(f(λ)) V†
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let values: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        self.with_values(&values)
    }

    /// V diag(values) V†, with `values` in the order of `self.values`.
    pub fn with_values(&self, values: &[f64]) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n);
        for (k, &w) in values.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigenvalues below this are treated as outside a state's support.
const SUPPORT_TOL: f64 = 1e-13;

/// Uhlmann fidelity (tr √(√ρ σ √ρ))², clamped to [0, 1].
///
/// Evaluated on the support of whichever argument has the smaller rank, so
/// pure states do not pick up √ε noise from round-off eigenvalues.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let er = herm_eigh(rho.matrix())?;
    let es = herm_eigh(sigma.matrix())?;
    let rank = |e: &HermEigen| e.values.iter().filter(|&&x| x > SUPPORT_TOL).count();
    let (outer, other) = if rank(&er) <= rank(&es) {
        (&er, sigma.matrix())
    } else {
        (&es, rho.matrix())
    };

    let support: Vec<usize> = (0..outer.values.len())
        .filter(|&k| outer.values[k] > SUPPORT_TOL)
        .collect();
    let n = outer.values.len();
    let column = |k: usize| -> Vec<C64> { (0..n).map(|i| outer.vectors[(i, k)]).collect() };
    let mut m = CMatrix::zeros(support.len());
    for (a, &i) in support.iter().enumerate() {
        let vi = column(i);
        for (b, &j) in support.iter().enumerate() {
            let vj = column(j);
            let mut sij = ZERO;
            for r in 0..n {
                for c in 0..n {
                    sij += vi[r].conj() * other[(r, c)] * vj[c];
                }
            }
            m[(a, b)] = sij * (outer.values[i] * outer.values[j]).sqrt();
        }
    }
    if support.is_empty() {
        return Ok(0.0);
    }
    let root_trace: f64 = herm_eigvals(&m.hermitian_part())?
        .into_iter()
        .map(|x| x.max(0.0).sqrt())
        .sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn singlet() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ket = [ZERO, C64::new(h, 0.0), C64::new(-h, 0.0), ZERO];
        DensityMatrix::pure(&ket, vec![2, 2]).unwrap()
    }

    #[test]
    fn kron_identities() {
        let i2 = CMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), CMatrix::identity(4));
        let a = CMatrix::from_real_diag(&[1.0, 0.0]);
        let b = CMatrix::from_real_diag(&[0.7, 0.3]);
        assert!(kron(&a, &b).max_abs_diff(&CMatrix::from_real_diag(&[0.7, 0.3, 0.0, 0.0])) < 1e-15);
        let e = CMatrix::from_real_diag(&[0.8, 0.2]);
        assert_abs_diff_eq!(kron(&a, &e).trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_of_singlet_is_maximally_mixed() {
        let r = partial_trace(&singlet(), 1).unwrap();
        assert!(r.matrix().max_abs_diff(&CMatrix::identity(2).scale(0.5)) < 1e-15);
        assert_eq!(r.dims(), &[2]);
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        assert!(matches!(
            partial_trace(&singlet(), 2),
            Err(Error::SubsystemOutOfRange { index: 2, count: 2 })
        ));
        assert!(partial_transpose(&singlet(), 5).is_err());
    }

    #[test]
    fn partial_trace_keeps_order() {
        // |0⟩⟨0| ⊗ |1⟩⟨1| ⊗ I/2: tracing the middle factor leaves |0⟩⟨0| ⊗ I/2.
        let p0 = DensityMatrix::qubits(CMatrix::from_real_diag(&[1.0, 0.0])).unwrap();
        let p1 = DensityMatrix::qubits(CMatrix::from_real_diag(&[0.0, 1.0])).unwrap();
        let mm = DensityMatrix::maximally_mixed(vec![2]);
        let rho = p0.tensor(&p1).tensor(&mm);
        let r = partial_trace(&rho, 1).unwrap();
        assert!(r.matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.5, 0.5, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn singlet_partial_transpose_spectrum() {
        let pt = partial_transpose(&singlet(), 1).unwrap();
        let ev = herm_eigvals(&pt).unwrap();
        for (got, want) in ev.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn eigvals_simple() {
        assert_eq!(herm_eigvals(&CMatrix::identity(4)).unwrap(), vec![1.0; 4]);
        let ev = herm_eigvals(&CMatrix::from_real_diag(&[0.7, 0.3])).unwrap();
        assert_eq!(ev, vec![0.3, 0.7]);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let mut m = CMatrix::identity(2);
        m[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(herm_eigh(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigh_reconstructs_complex_matrix() {
        let m = CMatrix::from_rows(&[
            vec![C64::new(2.0, 0.0), C64::new(0.3, 0.4), C64::new(0.0, -1.0)],
            vec![C64::new(0.3, -0.4), C64::new(-1.0, 0.0), C64::new(0.25, 0.1)],
            vec![C64::new(0.0, 1.0), C64::new(0.25, -0.1), C64::new(0.5, 0.0)],
        ]);
        let e = herm_eigh(&m).unwrap();
        assert!(e.map_values(|x| x).max_abs_diff(&m) < 1e-13);
        let vv = &e.vectors.dagger() * &e.vectors;
        assert!(vv.max_abs_diff(&CMatrix::identity(3)) < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fidelity_basics() {
        let rho = singlet();
        assert_abs_diff_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-12);
        let h = DensityMatrix::qubits(CMatrix::from_real_diag(&[1.0, 0.0])).unwrap();
        let v = DensityMatrix::qubits(CMatrix::from_real_diag(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(fidelity(&h, &v).unwrap(), 0.0, epsilon = 1e-12);
        assert!(matches!(fidelity(&h, &rho), Err(Error::DimensionMismatch(2, 4))));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(matches!(
            DensityMatrix::qubits(CMatrix::from_real_diag(&[0.6, 0.6])),
            Err(Error::InvalidTrace(_))
        ));
        assert!(matches!(
            DensityMatrix::qubits(CMatrix::from_real_diag(&[1.2, -0.2])),
            Err(Error::NotPositive(_))
        ));
        let mut m = CMatrix::from_real_diag(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::qubits(m), Err(Error::NotHermitian(_))));
        assert!(DensityMatrix::new(CMatrix::identity(4).scale(0.25), vec![2, 3]).is_err());
    }
}
