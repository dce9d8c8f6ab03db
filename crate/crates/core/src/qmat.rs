//! Small dense complex matrices for one to three qubits.
//!
//! Everything here is sized for states of dimension 2, 4 or 8. Composite
//! systems are ordered A⊗B⊗C with lexicographic computational labels
//! `|000⟩ … |111⟩`, so qubit A is the most significant bit of an index.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest matrix dimension supported.
pub const MAX_DIM: usize = 8;

/// Tolerance used by the density-matrix invariants.
pub const STATE_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        ComplexMatrix { dim, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Dimension(format!(
                "matrix dimension {dim} not in 1..={MAX_DIM}"
            )));
        }
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(ComplexMatrix { dim, data })
    }

    /// Builds a matrix from separate real and imaginary row arrays.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let dim = re.len();
        if im.len() != dim || re.iter().chain(im).any(|row| row.len() != dim) {
            return Err(Error::Dimension(
                "real and imaginary parts must both be square with equal size".into(),
            ));
        }
        let data = re
            .iter()
            .zip(im)
            .flat_map(|(r, i)| r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)))
            .collect();
        Self::from_vec(dim, data)
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |r, c| {
            if r == c {
                C64::new(values[r], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// `|ψ⟩⟨ψ|` for an (unnormalized) ket.
    pub fn outer(ket: &[C64]) -> Self {
        Self::from_fn(ket.len(), |r, c| ket[r] * ket[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn real_parts(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|row| row.iter().map(|z| z.re).collect()).collect()
    }

    pub fn imag_parts(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|row| row.iter().map(|z| z.im).collect()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        self.map(|z| z * k)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self[(k, k)]).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff on matrices of unequal size");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M[a][b] − conj(M[b][a])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `max |(U U†)[a][b] − δ_ab|`.
    pub fn unitarity_defect(&self) -> f64 {
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.dim))
    }

    /// `U · self · U†`.
    pub fn conjugated_by(&self, u: &ComplexMatrix) -> Self {
        &(u * self) * &u.adjoint()
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    #[cfg(test)]
    pub(crate) fn set(&mut self, r: usize, c: usize, value: C64) {
        self.data[r * self.dim + c] = value;
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product of unequal sizes");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum of unequal sizes");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference of unequal sizes");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>9.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Pauli matrix for `axis` 0, 1, 2 = x, y, z.
pub fn pauli(axis: usize) -> ComplexMatrix {
    let data = match axis {
        0 => vec![ZERO, ONE, ONE, ZERO],
        1 => vec![ZERO, -I, I, ZERO],
        2 => vec![ONE, ZERO, ZERO, -ONE],
        _ => panic!("pauli axis {axis} out of range"),
    };
    ComplexMatrix { dim: 2, data }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.dim * b.dim;
    if dim > MAX_DIM {
        return Err(Error::Dimension(format!(
            "tensor product of dimension {dim} exceeds {MAX_DIM}"
        )));
    }
    Ok(ComplexMatrix::from_fn(dim, |r, c| {
        a[(r / b.dim, c / b.dim)] * b[(r % b.dim, c % b.dim)]
    }))
}

/// Kronecker product of two kets.
pub fn tensor_ket(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Symmetrizes `m` once and checks the state invariants.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        check_dim(m.dim)?;
        let defect = m.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let matrix = m.hermitian_part();
        let diag = validate_state(&matrix);
        if !diag.passes {
            return Err(Error::InvalidState(diag.describe()));
        }
        Ok(DensityMatrix { matrix })
    }

    /// `|ψ⟩⟨ψ|/⟨ψ|ψ⟩`.
    pub fn from_pure(ket: &[C64]) -> Result<Self> {
        check_dim(ket.len())?;
        let norm2: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 1e-300) || !norm2.is_finite() {
            return Err(Error::InvalidState("zero or non-finite ket".into()));
        }
        let m = ComplexMatrix::outer(ket).scale(C64::new(1.0 / norm2, 0.0));
        Ok(DensityMatrix { matrix: m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    /// Wraps a matrix that is a valid state by construction.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        DensityMatrix { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    /// `V ρ V†` for a unitary `V`.
    pub fn conjugated_by(&self, v: &ComplexMatrix) -> Result<Self> {
        check_unitary(v)?;
        if v.dim != self.dim() {
            return Err(Error::Dimension(format!(
                "unitary of size {} applied to state of size {}",
                v.dim,
                self.dim()
            )));
        }
        Ok(DensityMatrix {
            matrix: self.matrix.conjugated_by(v),
        })
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::domain("weight", format!("{w} not in [0, 1]")));
        }
        if self.dim() != other.dim() {
            return Err(Error::Dimension("mixing states of unequal size".into()));
        }
        let a = self.matrix.scale(C64::new(w, 0.0));
        let b = other.matrix.scale(C64::new(1.0 - w, 0.0));
        Ok(DensityMatrix { matrix: &a + &b })
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix {:?}", self.matrix)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if matches!(dim, 2 | 4 | 8) {
        Ok(())
    } else {
        Err(Error::Dimension(format!("state dimension {dim} not in {{2, 4, 8}}")))
    }
}

pub(crate) fn check_unitary(v: &ComplexMatrix) -> Result<()> {
    let defect = v.unitarity_defect();
    if defect > 1e-10 {
        Err(Error::NotUnitary { defect })
    } else {
        Ok(())
    }
}

/// Splits a flat index into per-subsystem digits, most significant first.
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Reduced state over the subsystems in `keep`, listed in their original order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize], dims: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::Dimension(format!(
            "subsystem dimensions {dims:?} do not multiply to {}",
            rho.dim()
        )));
    }
    if keep.is_empty() {
        return Err(Error::Dimension("partial trace must keep at least one subsystem".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!(
            "invalid subsystem list {keep:?} for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let traced_size: usize = traced_dims.iter().product();

    let n = dims.len();
    let mut row_digits = vec![0; n];
    let mut col_digits = vec![0; n];
    let mut kd_r = vec![0; kept.len()];
    let mut kd_c = vec![0; kept.len()];
    let mut td = vec![0; traced.len()];
    let m = rho.matrix();
    let out = ComplexMatrix::from_fn(out_dim, |r, c| {
        digits(r, &kept_dims, &mut kd_r);
        digits(c, &kept_dims, &mut kd_c);
        let mut acc = ZERO;
        for t in 0..traced_size {
            digits(t, &traced_dims, &mut td);
            for (slot, &k) in kept.iter().enumerate() {
                row_digits[k] = kd_r[slot];
                col_digits[k] = kd_c[slot];
            }
            for (slot, &k) in traced.iter().enumerate() {
                row_digits[k] = td[slot];
                col_digits[k] = td[slot];
            }
            acc += m[(compose(&row_digits, dims), compose(&col_digits, dims))];
        }
        acc
    });
    Ok(DensityMatrix { matrix: out })
}

/// Reorders subsystems so that new subsystem `k` is old subsystem `order[k]`.
pub fn permute_subsystems(
    rho: &DensityMatrix,
    dims: &[usize],
    order: &[usize],
) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if total != rho.dim() || sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(Error::Dimension(format!(
            "invalid permutation {order:?} for subsystem dimensions {dims:?}"
        )));
    }
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let n = dims.len();
    let mut nd = vec![0; n];
    let mut od = vec![0; n];
    let old_index = |new: usize, nd: &mut [usize], od: &mut [usize]| {
        digits(new, &new_dims, nd);
        for (slot, &k) in order.iter().enumerate() {
            od[k] = nd[slot];
        }
        compose(od, dims)
    };
    let mut map = vec![0; total];
    for (new, slot) in map.iter_mut().enumerate() {
        *slot = old_index(new, &mut nd, &mut od);
    }
    let m = rho.matrix();
    Ok(DensityMatrix {
        matrix: ComplexMatrix::from_fn(total, |r, c| m[(map[r], map[c])]),
    })
}

/// Real 3-vector inside the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = BlochVector { x, y, z };
        let len = n.norm();
        if !len.is_finite() || len > 1.0 + STATE_TOL {
            return Err(Error::domain("bloch vector", format!("length {len} exceeds 1")));
        }
        Ok(n)
    }

    pub fn from_array(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    /// Unit vector at polar angle `theta`, azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let [x, y, z] = spherical(theta, phi);
        BlochVector { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Unit vector `(sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn spherical(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Polar and azimuthal angles of a nonzero vector, azimuth in `[0, 2π)`.
pub fn angles_of(v: [f64; 3]) -> (f64, f64) {
    let len = norm3(&v);
    if len == 0.0 {
        return (0.0, 0.0);
    }
    let theta = (v[2] / len).clamp(-1.0, 1.0).acos();
    let phi = v[1].atan2(v[0]).rem_euclid(std::f64::consts::TAU);
    (theta, phi)
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// `ρ = ½(I + n·σ)`.
pub fn bloch_to_density(n: BlochVector) -> DensityMatrix {
    let m = ComplexMatrix {
        dim: 2,
        data: vec![
            C64::new(0.5 * (1.0 + n.z), 0.0),
            C64::new(0.5 * n.x, -0.5 * n.y),
            C64::new(0.5 * n.x, 0.5 * n.y),
            C64::new(0.5 * (1.0 - n.z), 0.0),
        ],
    };
    DensityMatrix { matrix: m }
}

/// `n_k = Tr(ρ σ_k)`.
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::Dimension(format!(
            "Bloch vector needs a qubit state, got dimension {}",
            rho.dim()
        )));
    }
    let m = rho.matrix();
    let off = m[(1, 0)];
    Ok(BlochVector {
        x: 2.0 * off.re,
        y: 2.0 * off.im,
        z: (m[(0, 0)] - m[(1, 1)]).re,
    })
}

/// Two-qubit state in the Pauli basis:
/// `ρ = ¼(I⊗I + r·σ⊗I + I⊗s·σ + Σ T_jk σ_j⊗σ_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoQubitPauliForm {
    pub r: [f64; 3],
    pub s: [f64; 3],
    pub t: [[f64; 3]; 3],
}

impl TwoQubitPauliForm {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let id = ComplexMatrix::identity(2);
        let sig: Vec<ComplexMatrix> = (0..3).map(pauli).collect();
        let mut acc = ComplexMatrix::identity(4);
        let term = |a: &ComplexMatrix, b: &ComplexMatrix, w: f64| {
            tensor(a, b).expect("2x2 ⊗ 2x2").scale(C64::new(w, 0.0))
        };
        for j in 0..3 {
            acc = &acc + &term(&sig[j], &id, self.r[j]);
            acc = &acc + &term(&id, &sig[j], self.s[j]);
            for k in 0..3 {
                acc = &acc + &term(&sig[j], &sig[k], self.t[j][k]);
            }
        }
        acc.scale(C64::new(0.25, 0.0))
    }

    /// `Tᵀ m`.
    pub fn t_transpose_times(&self, m: &[f64; 3]) -> [f64; 3] {
        let t = &self.t;
        [
            t[0][0] * m[0] + t[1][0] * m[1] + t[2][0] * m[2],
            t[0][1] * m[0] + t[1][1] * m[1] + t[2][1] * m[2],
            t[0][2] * m[0] + t[1][2] * m[1] + t[2][2] * m[2],
        ]
    }

    /// `T b`.
    pub fn t_times(&self, b: &[f64; 3]) -> [f64; 3] {
        let t = &self.t;
        [dot3(&t[0], b), dot3(&t[1], b), dot3(&t[2], b)]
    }
}

// σ_k[a][b] as (re, im) tables for the direct trace formulas below.
const SIGMA: [[[C64; 2]; 2]; 3] = [
    [[ZERO, ONE], [ONE, ZERO]],
    [[ZERO, C64::new(0.0, -1.0)], [I, ZERO]],
    [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]],
];
const ID2: [[C64; 2]; 2] = [[ONE, ZERO], [ZERO, ONE]];

fn trace_against(m: &ComplexMatrix, a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> f64 {
    // Tr(ρ (a⊗b)) = Σ ρ[(i,k),(j,l)] a[j][i] b[l][k]
    let mut acc = ZERO;
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    let w = a[j][i] * b[l][k];
                    if w != ZERO {
                        acc += m[(2 * i + k, 2 * j + l)] * w;
                    }
                }
            }
        }
    }
    acc.re
}

pub fn pauli_decompose(rho_ab: &DensityMatrix) -> Result<TwoQubitPauliForm> {
    if rho_ab.dim() != 4 {
        return Err(Error::Dimension(format!(
            "Pauli form needs a two-qubit state, got dimension {}",
            rho_ab.dim()
        )));
    }
    let m = rho_ab.matrix();
    let mut form = TwoQubitPauliForm {
        r: [0.0; 3],
        s: [0.0; 3],
        t: [[0.0; 3]; 3],
    };
    for j in 0..3 {
        form.r[j] = trace_against(m, &SIGMA[j], &ID2);
        form.s[j] = trace_against(m, &ID2, &SIGMA[j]);
        for k in 0..3 {
            form.t[j][k] = trace_against(m, &SIGMA[j], &SIGMA[k]);
        }
    }
    Ok(form)
}

/// Eigenvalues of a Hermitian matrix in descending order.
///
/// Qubit matrices use the trace/determinant formula. Larger ones are
/// diagonalized through the real symmetric embedding `[[A, −B], [B, A]]`
/// of `A + iB`, whose spectrum is that of `A + iB` with every eigenvalue
/// doubled.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let defect = h.hermiticity_defect();
    if defect > STATE_TOL {
        return Err(Error::NotHermitian { defect });
    }
    Ok(hermitian_eigenvalues_unchecked(h))
}

pub(crate) fn hermitian_eigenvalues_unchecked(h: &ComplexMatrix) -> Vec<f64> {
    if h.dim == 1 {
        return vec![h[(0, 0)].re];
    }
    if h.dim == 2 {
        let a = h[(0, 0)].re;
        let d = h[(1, 1)].re;
        let b = h[(0, 1)];
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return vec![mean + half_gap, mean - half_gap];
    }
    let n = h.dim;
    let size = 2 * n;
    let mut a = vec![0.0; size * size];
    for r in 0..n {
        for c in 0..n {
            let z = h[(r, c)];
            a[r * size + c] = z.re;
            a[(r + n) * size + (c + n)] = z.re;
            a[r * size + (c + n)] = -z.im;
            a[(r + n) * size + c] = z.im;
        }
    }
    let mut eig = jacobi_symmetric(&mut a, size);
    eig.sort_by(|x, y| y.total_cmp(x));
    eig.into_iter().step_by(2).collect()
}

/// Cyclic Jacobi sweeps on a real symmetric matrix until the off-diagonal
/// Frobenius norm drops to 1e-12. Returns the diagonal.
fn jacobi_symmetric(a: &mut [f64], n: usize) -> Vec<f64> {
    const OFF_TOL: f64 = 1e-12;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
        }
        if off.sqrt() <= OFF_TOL {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|k| a[k * n + k]).collect()
}

/// Defects of a candidate density matrix against the state invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateDiagnostics {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
    pub passes: bool,
}

impl StateDiagnostics {
    pub fn describe(&self) -> String {
        let mut problems = Vec::new();
        if !(self.hermiticity_defect <= STATE_TOL) {
            problems.push(format!("hermiticity defect {:.3e}", self.hermiticity_defect));
        }
        if !(self.trace_defect <= STATE_TOL) {
            problems.push(format!("trace defect {:.3e}", self.trace_defect));
        }
        if !(self.min_eigenvalue >= -STATE_TOL) {
            problems.push(format!("negative eigenvalue {:.3e}", self.min_eigenvalue));
        }
        if problems.is_empty() {
            "ok".into()
        } else {
            problems.join(", ")
        }
    }
}

pub fn validate_state(m: &ComplexMatrix) -> StateDiagnostics {
    let hermiticity_defect = m.hermiticity_defect();
    let trace_defect = (m.trace() - ONE).norm();
    let min_eigenvalue = hermitian_eigenvalues_unchecked(&m.hermitian_part())
        .last()
        .copied()
        .unwrap_or(f64::NAN);
    let passes = hermiticity_defect <= STATE_TOL
        && trace_defect <= STATE_TOL
        && min_eigenvalue >= -STATE_TOL;
    StateDiagnostics {
        hermiticity_defect,
        trace_defect,
        min_eigenvalue,
        passes,
    }
}

/// Clamps a spectrum into `[0, 1]`, absorbing round-off on valid states.
pub fn clamp_spectrum(eigs: &mut [f64]) {
    for e in eigs {
        *e = e.clamp(0.0, 1.0);
    }
}

/// Computational-basis ket `|index⟩` of dimension `dim`.
pub fn basis_ket(dim: usize, index: usize) -> Vec<C64> {
    (0..dim).map(|k| if k == index { ONE } else { ZERO }).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::sampling;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn phi_plus() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]).unwrap()
    }

    #[test]
    fn identity_tensor_identity() {
        let out = tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(out, ComplexMatrix::identity(4));
    }

    #[test]
    fn projector_tensor_is_basis_bookkeeping() {
        let p0 = ComplexMatrix::diag(&[1.0, 0.0]);
        let p1 = ComplexMatrix::diag(&[0.0, 1.0]);
        assert_eq!(tensor(&p0, &p1).unwrap(), ComplexMatrix::diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn tensor_matches_index_formula() {
        let (x, y) = (pauli(0), pauli(1));
        let out = tensor(&x, &y).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let expected = x[(r >> 1, col >> 1)] * y[(r & 1, col & 1)];
                assert_eq!(out[(r, col)], expected, "entry ({r},{col})");
            }
        }
    }

    #[test]
    fn tensor_rejects_oversized() {
        let m8 = ComplexMatrix::identity(8);
        assert!(matches!(
            tensor(&m8, &ComplexMatrix::identity(2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn marginal_of_bell_state_is_maximally_mixed() {
        let rb = partial_trace(&phi_plus(), &[1], &[2, 2]).unwrap();
        assert!(rb.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        assert!(partial_trace(&phi_plus(), &[1], &[2, 4]).is_err());
        assert!(partial_trace(&phi_plus(), &[], &[2, 2]).is_err());
        assert!(partial_trace(&phi_plus(), &[2], &[2, 2]).is_err());
    }

    #[test]
    fn three_qubit_partial_trace_matches_contraction() {
        let (alpha, beta) = (0.7_f64, 1.9_f64);
        let mut psi = vec![ZERO; 8];
        psi[0b000] = c(alpha.cos(), 0.0);
        psi[0b101] = c(alpha.sin() * beta.cos(), 0.0);
        psi[0b110] = c(alpha.sin() * beta.sin(), 0.0);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let rho_ab = partial_trace(&rho, &[0, 1], &[2, 2, 2]).unwrap();
        // ρ_AB[(a b),(a' b')] = Σ_c ψ_abc ψ*_a'b'c
        for r in 0..4 {
            for col in 0..4 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += psi[2 * r + k] * psi[2 * col + k].conj();
                }
                assert!((rho_ab.matrix()[(r, col)] - acc).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn permutation_swaps_product_factors() {
        let a = bloch_to_density(BlochVector::new(0.1, 0.2, 0.3).unwrap());
        let b = bloch_to_density(BlochVector::new(-0.5, 0.0, 0.6).unwrap());
        let ab = DensityMatrix::new(tensor(a.matrix(), b.matrix()).unwrap()).unwrap();
        let ba = tensor(b.matrix(), a.matrix()).unwrap();
        let swapped = permute_subsystems(&ab, &[2, 2], &[1, 0]).unwrap();
        assert!(swapped.matrix().max_abs_diff(&ba) < 1e-15);
    }

    #[test]
    fn bloch_examples() {
        let up = bloch_to_density(BlochVector::new(0.0, 0.0, 1.0).unwrap());
        assert_eq!(*up.matrix(), ComplexMatrix::diag(&[1.0, 0.0]));
        let mixed = bloch_to_density(BlochVector::new(0.0, 0.0, 0.0).unwrap());
        assert_eq!(*mixed.matrix(), ComplexMatrix::diag(&[0.5, 0.5]));

        let s5 = 5f64.sqrt();
        let n = BlochVector::new(1.0 / s5, 2.0 / s5, 0.0).unwrap();
        let rho = bloch_to_density(n);
        assert!((rho.matrix()[(0, 1)] - c(0.5 / s5, -1.0 / s5)).norm() < 1e-15);
        let back = density_to_bloch(&rho).unwrap();
        assert!((back.x - n.x).abs() < 1e-15 && (back.y - n.y).abs() < 1e-15);
        assert_eq!(back.z, 0.0);
        assert!(BlochVector::new(0.8, 0.8, 0.0).is_err());
    }

    #[test]
    fn pauli_form_examples() {
        let trace_oracle = |rho: &DensityMatrix, a: &ComplexMatrix, b: &ComplexMatrix| {
            (rho.matrix() * &tensor(a, b).unwrap()).trace().re
        };
        let id = ComplexMatrix::identity(2);
        let p = 0.37;
        let werner = phi_plus().mix(&DensityMatrix::maximally_mixed(4), p).unwrap();
        for (rho, scale) in [(phi_plus(), 1.0), (werner, p)] {
            let form = pauli_decompose(&rho).unwrap();
            for j in 0..3 {
                assert!((form.r[j] - trace_oracle(&rho, &pauli(j), &id)).abs() < 1e-15);
                assert!((form.s[j] - trace_oracle(&rho, &id, &pauli(j))).abs() < 1e-15);
                assert!(form.r[j].abs() < 1e-15 && form.s[j].abs() < 1e-15);
                for k in 0..3 {
                    let oracle = trace_oracle(&rho, &pauli(j), &pauli(k));
                    assert!((form.t[j][k] - oracle).abs() < 1e-15);
                }
            }
            let expected = [scale, -scale, scale];
            for j in 0..3 {
                assert!((form.t[j][j] - expected[j]).abs() < 1e-15);
            }
        }
        let white = pauli_decompose(&DensityMatrix::maximally_mixed(4)).unwrap();
        assert!(white.t.iter().flatten().chain(&white.r).chain(&white.s).all(|v| v.abs() < 1e-16));
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(hermitian_eigenvalues(&ComplexMatrix::diag(&[0.5, 0.5])).unwrap(), vec![0.5, 0.5]);
        let n = BlochVector::new(0.3, -0.4, 0.5).unwrap();
        let r = n.norm();
        let eig = hermitian_eigenvalues(bloch_to_density(n).matrix()).unwrap();
        assert!((eig[0] - (1.0 + r) / 2.0).abs() < 1e-15);
        assert!((eig[1] - (1.0 - r) / 2.0).abs() < 1e-15);
        let mut bad = ComplexMatrix::identity(2);
        bad.set(0, 1, c(0.3, 0.0));
        assert!(matches!(hermitian_eigenvalues(&bad), Err(Error::NotHermitian { .. })));
    }

    /// Coefficients of det(xI − H) via Faddeev–LeVerrier, highest degree first.
    fn char_poly(h: &ComplexMatrix) -> Vec<f64> {
        let n = h.dim();
        let mut coeffs = vec![1.0];
        let mut m = ComplexMatrix::zeros(n);
        let id = ComplexMatrix::identity(n);
        let mut c_prev = ONE;
        for k in 1..=n {
            let shifted = &m + &id.scale(c_prev);
            m = h * &shifted;
            let ck = -m.trace() / (k as f64);
            coeffs.push(ck.re);
            c_prev = ck;
        }
        coeffs
    }

    fn poly_roots_real(coeffs: &[f64], bound: f64) -> Vec<f64> {
        let eval = |x: f64| coeffs.iter().fold(0.0, |acc, &c| acc * x + c);
        let steps = 200_000;
        let mut roots = Vec::new();
        let mut prev_x = -bound;
        let mut prev_v = eval(prev_x);
        for i in 1..=steps {
            let x = -bound + 2.0 * bound * i as f64 / steps as f64;
            let v = eval(x);
            if prev_v == 0.0 {
                roots.push(prev_x);
            } else if prev_v.signum() != v.signum() && v != 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if eval(mid).signum() == eval(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev_v = v;
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }

    #[test]
    fn random_hermitian_eigenvalues_match_characteristic_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = sampling::gaussian_matrix(&mut rng, 4);
            let h = g.hermitian_part();
            let eig = hermitian_eigenvalues(&h).unwrap();
            let bound = h.entries().iter().map(|z| z.norm()).sum::<f64>() + 1.0;
            let roots = poly_roots_real(&char_poly(&h), bound);
            assert_eq!(roots.len(), 4, "roots {roots:?}");
            for (a, b) in eig.iter().zip(&roots) {
                assert!((a - b).abs() < 1e-9, "{eig:?} vs {roots:?}");
            }
        }
    }

    #[test]
    fn validation_examples() {
        let d = validate_state(&ComplexMatrix::diag(&[0.5, 0.5]));
        assert!(d.passes);
        assert_eq!((d.hermiticity_defect, d.trace_defect), (0.0, 0.0));
        let bad = validate_state(&ComplexMatrix::diag(&[1.5, -0.5]));
        assert!(!bad.passes);
        assert!((bad.min_eigenvalue + 0.5).abs() < 1e-15);
        assert!(DensityMatrix::new(ComplexMatrix::diag(&[1.5, -0.5])).is_err());

        // p|φ+⟩⟨φ+| + (1−p)|ψ+⟩⟨ψ+| at p = 0.3
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi_plus = DensityMatrix::from_pure(&[ZERO, c(h, 0.0), c(h, 0.0), ZERO]).unwrap();
        let mix = phi_plus().mix(&psi_plus, 0.3).unwrap();
        assert!(validate_state(mix.matrix()).passes);
    }

    #[test]
    fn construction_symmetrizes_once() {
        let mut m = ComplexMatrix::diag(&[0.5, 0.5]);
        m.set(0, 1, c(0.1, 1e-10));
        m.set(1, 0, c(0.1, 0.0));
        let rho = DensityMatrix::new(m).unwrap();
        assert_eq!(rho.matrix().hermiticity_defect(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn bloch_round_trip(theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU, len in 0.0..=1.0f64) {
            let [x, y, z] = spherical(theta, phi);
            let n = BlochVector::new(len * x, len * y, len * z).unwrap();
            let back = density_to_bloch(&bloch_to_density(n)).unwrap();
            prop_assert!((back.x - n.x).abs() < 1e-12);
            prop_assert!((back.y - n.y).abs() < 1e-12);
            prop_assert!((back.z - n.z).abs() < 1e-12);
        }

        #[test]
        fn partial_trace_recovers_factor(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sampling::random_mixed_qubit(&mut rng);
            let b = sampling::random_mixed_qubit(&mut rng);
            let ab = DensityMatrix::new(tensor(a.matrix(), b.matrix()).unwrap()).unwrap();
            let rb = partial_trace(&ab, &[1], &[2, 2]).unwrap();
            let ra = partial_trace(&ab, &[0], &[2, 2]).unwrap();
            prop_assert!(rb.matrix().max_abs_diff(b.matrix()) < 1e-12);
            prop_assert!(ra.matrix().max_abs_diff(a.matrix()) < 1e-12);
        }

        #[test]
        fn eigenvalues_sum_to_trace(seed in any::<u64>(), dim_pick in 0usize..3) {
            let dim = [2, 4, 8][dim_pick];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = sampling::gaussian_matrix(&mut rng, dim).hermitian_part();
            let eig = hermitian_eigenvalues(&h).unwrap();
            prop_assert!((eig.iter().sum::<f64>() - h.trace().re).abs() < 1e-10);
            prop_assert!(eig.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn pauli_form_reconstructs(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = sampling::random_two_qubit_state(&mut rng);
            let form = pauli_decompose(&rho).unwrap();
            prop_assert!(form.reconstruct().max_abs_diff(rho.matrix()) < 1e-9);
        }
    }
}
