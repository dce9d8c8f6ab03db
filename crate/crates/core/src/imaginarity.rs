//! Basis-dependent imaginarity of qubit states: the l1-norm and the
//! relative entropy of imaginarity.
//!
//! Both measures only see a qubit basis through its *imaginary axis*
//! `Im ⟨e₁|σ⃗|e₂⟩`, a unit vector orthogonal to the basis' Bloch axis. In a
//! basis with imaginary axis `b`, a state with Bloch vector `n` has
//! l1-imaginarity `|n·b|`, and its real part (entries replaced by their
//! real parts in that basis) has Bloch vector `n − (n·b)b`. The matrix
//! routes below work from the definitions; [`imag_from_bloch`] is the
//! closed form used inside the optimizers.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmat::{
    clamp_spectrum, dot3, hermitian_eigenvalues_unchecked, ComplexMatrix, DensityMatrix, C64,
};

/// The two imaginarity quantifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ImaginarityMeasure {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "r")]
    RelativeEntropy,
}

impl ImaginarityMeasure {
    pub const ALL: [ImaginarityMeasure; 2] = [ImaginarityMeasure::L1, ImaginarityMeasure::RelativeEntropy];

    pub fn tag(self) -> &'static str {
        match self {
            ImaginarityMeasure::L1 => "l1",
            ImaginarityMeasure::RelativeEntropy => "r",
        }
    }
}

impl fmt::Display for ImaginarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ImaginarityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(ImaginarityMeasure::L1),
            "r" | "re" | "relative-entropy" | "relative_entropy" => {
                Ok(ImaginarityMeasure::RelativeEntropy)
            }
            other => Err(Error::domain("measure", format!("unknown measure {other:?}, expected l1 or r"))),
        }
    }
}

/// Orthonormal qubit basis. Vector phases are kept exactly as given.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthonormalBasis {
    vectors: [[C64; 2]; 2],
}

const ORTHO_TOL: f64 = 1e-12;

impl OrthonormalBasis {
    pub fn new(first: [C64; 2], second: [C64; 2]) -> Result<Self> {
        let basis = OrthonormalBasis {
            vectors: [first, second],
        };
        let defect = basis.orthonormality_defect();
        if !(defect <= ORTHO_TOL) {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(basis)
    }

    pub(crate) fn new_trusted(first: [C64; 2], second: [C64; 2]) -> Self {
        OrthonormalBasis {
            vectors: [first, second],
        }
    }

    /// `{|0⟩, |1⟩}`.
    pub fn computational() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::new_trusted([one, zero], [zero, one])
    }

    /// `{|+⟩, |−⟩}`.
    pub fn x_eigenbasis() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new_trusted([h, h], [h, -h])
    }

    /// `{(|0⟩ + i|1⟩)/√2, (|0⟩ − i|1⟩)/√2}`.
    pub fn y_eigenbasis() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new_trusted(
            [C64::new(h, 0.0), C64::new(0.0, h)],
            [C64::new(h, 0.0), C64::new(0.0, -h)],
        )
    }

    pub fn vector(&self, a: usize) -> [C64; 2] {
        self.vectors[a]
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..2 {
            for b in 0..2 {
                let ip = inner(&self.vectors[a], &self.vectors[b]);
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((ip - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Unitary whose columns are the basis vectors.
    pub fn unitary(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |r, c| self.vectors[c][r])
    }

    /// Basis `{V|e_a⟩}`.
    pub fn transformed(&self, v: &ComplexMatrix) -> OrthonormalBasis {
        let apply = |e: &[C64; 2]| {
            [
                v[(0, 0)] * e[0] + v[(0, 1)] * e[1],
                v[(1, 0)] * e[0] + v[(1, 1)] * e[1],
            ]
        };
        Self::new_trusted(apply(&self.vectors[0]), apply(&self.vectors[1]))
    }

    /// `Im ⟨e₁|σ⃗|e₂⟩`.
    pub fn imaginary_axis(&self) -> [f64; 3] {
        let [u, v] = &self.vectors;
        let (u0, u1) = (u[0].conj(), u[1].conj());
        let sx = u0 * v[1] + u1 * v[0];
        let sy = C64::new(0.0, -1.0) * u0 * v[1] + C64::new(0.0, 1.0) * u1 * v[0];
        let sz = u0 * v[0] - u1 * v[1];
        [sx.im, sy.im, sz.im]
    }

    /// Bloch vector of the first basis vector.
    pub fn bloch_axis(&self) -> [f64; 3] {
        let [a, b] = self.vectors[0];
        let off = a.conj() * b;
        [2.0 * off.re, 2.0 * off.im, a.norm_sqr() - b.norm_sqr()]
    }
}

pub(crate) fn inner(a: &[C64; 2], b: &[C64; 2]) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn require_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() == 2 {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "imaginarity is defined here for qubits, got dimension {}",
            rho.dim()
        )))
    }
}

/// `ρ` written in `basis`: entries `⟨e_a|ρ|e_b⟩`.
fn in_basis(rho: &DensityMatrix, basis: &OrthonormalBasis) -> ComplexMatrix {
    let u = basis.unitary();
    &(&u.adjoint() * rho.matrix()) * &u
}

/// Keeps the real parts of `ρ`'s entries in `basis`; the result is returned
/// in the computational basis.
pub fn real_part_map(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<DensityMatrix> {
    require_qubit(rho)?;
    let re = in_basis(rho, basis).map(|z| C64::new(z.re, 0.0));
    let u = basis.unitary();
    Ok(DensityMatrix::from_trusted(&(&u * &re) * &u.adjoint()))
}

/// `Σ_{a,b} |Im ⟨e_a|ρ|e_b⟩|`.
pub fn imag_l1(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<f64> {
    require_qubit(rho)?;
    Ok(in_basis(rho, basis).entries().iter().map(|z| z.im.abs()).sum())
}

/// `−Σ λ log₂ λ` over the clamped spectrum.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let mut eig = hermitian_eigenvalues_unchecked(rho.matrix());
    clamp_spectrum(&mut eig);
    eig.iter().map(|&l| xlog2x(l)).sum::<f64>().abs()
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// `H(x) = −x log₂ x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("binary entropy argument", format!("{x} not in [0, 1]")));
    }
    Ok(h2(x))
}

/// Binary entropy with the argument clamped into `[0, 1]`.
pub(crate) fn h2(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    xlog2x(x) + xlog2x(1.0 - x)
}

/// Negative gaps down to this size are treated as round-off.
const NEGATIVE_GAP_TOL: f64 = 1e-9;

fn clamp_gap(value: f64) -> Result<f64> {
    if value < -NEGATIVE_GAP_TOL {
        Err(Error::NegativeEntropyGap { value })
    } else {
        Ok(value.max(0.0))
    }
}

/// `S(Δ(ρ)) − S(ρ)` with `Δ` the real-part map in `basis`.
pub fn imag_rel_entropy(rho: &DensityMatrix, basis: &OrthonormalBasis) -> Result<f64> {
    let delta = real_part_map(rho, basis)?;
    clamp_gap(von_neumann_entropy(&delta) - von_neumann_entropy(rho))
}

pub fn imag_measure(
    measure: ImaginarityMeasure,
    rho: &DensityMatrix,
    basis: &OrthonormalBasis,
) -> Result<f64> {
    match measure {
        ImaginarityMeasure::L1 => imag_l1(rho, basis),
        ImaginarityMeasure::RelativeEntropy => imag_rel_entropy(rho, basis),
    }
}

/// Closed form of [`imag_measure`] for a qubit with Bloch vector `n` in a
/// basis with imaginary axis `axis` (a unit vector).
pub fn imag_from_bloch(measure: ImaginarityMeasure, n: &[f64; 3], axis: &[f64; 3]) -> f64 {
    let along = dot3(n, axis);
    match measure {
        ImaginarityMeasure::L1 => along.abs(),
        ImaginarityMeasure::RelativeEntropy => {
            let len2 = dot3(n, n);
            let real_len = (len2 - along * along).max(0.0).sqrt();
            let len = len2.sqrt();
            (h2(0.5 * (1.0 + real_len)) - h2(0.5 * (1.0 + len))).max(0.0)
        }
    }
}
