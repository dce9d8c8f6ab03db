//! Parametrized triples of mutually unbiased qubit bases and rank-1
//! projective measurements.
//!
//! A triple is generated from one spinor pair
//! `M₁ = {cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩, e^{iχ}(sin(θ/2)|0⟩ − e^{iφ} cos(θ/2)|1⟩)}`
//! with `M₂^± = (M₁⁺ ± M₁⁻)/√2` and `M₃^± = (M₁⁺ ± i M₁⁻)/√2`. The phase `χ`
//! is zero in the two-angle family; a nonzero `χ` turns the triple about
//! the Bloch axis of `M₁` and makes the family reach every rotated triple.

use serde::Serialize;

use crate::error::Result;
use crate::imaginarity::{inner, OrthonormalBasis};
use crate::qmat::{check_unitary, spherical, ComplexMatrix, C64};

/// `(cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩, sin(θ/2)|0⟩ − e^{iφ} cos(θ/2)|1⟩)`.
pub fn spinor_pair(theta: f64, phi: f64) -> ([C64; 2], [C64; 2]) {
    let (s, c) = (0.5 * theta).sin_cos();
    let e = C64::from_polar(1.0, phi);
    ([C64::new(c, 0.0), e * s], [C64::new(s, 0.0), -e * c])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MubTriple {
    pub theta1: f64,
    pub phi1: f64,
    pub chi: f64,
    pub bases: [OrthonormalBasis; 3],
}

impl MubTriple {
    /// Imaginary axes of `M₁, M₂, M₃`.
    pub fn imaginary_axes(&self) -> [[f64; 3]; 3] {
        self.bases.map(|b| b.imaginary_axis())
    }
}

/// The two-angle triple (`χ = 0`).
pub fn mub_triple(theta1: f64, phi1: f64) -> MubTriple {
    mub_triple_with_phase(theta1, phi1, 0.0)
}

pub fn mub_triple_with_phase(theta1: f64, phi1: f64, chi: f64) -> MubTriple {
    let (plus, minus0) = spinor_pair(theta1, phi1);
    let phase = C64::from_polar(1.0, chi);
    let minus = minus0.map(|z| z * phase);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    let combine = |w: C64| [(plus[0] + w * minus[0]) * h, (plus[1] + w * minus[1]) * h];
    let m1 = OrthonormalBasis::new_trusted(plus, minus);
    let m2 = OrthonormalBasis::new_trusted(combine(C64::new(1.0, 0.0)), combine(C64::new(-1.0, 0.0)));
    let m3 = OrthonormalBasis::new_trusted(combine(i), combine(-i));
    MubTriple {
        theta1,
        phi1,
        chi,
        bases: [m1, m2, m3],
    }
}

/// Two-outcome rank-1 projective measurement along a Bloch direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorPair {
    pub theta: f64,
    pub phi: f64,
    pub plus: ComplexMatrix,
    pub minus: ComplexMatrix,
}

impl ProjectorPair {
    /// Bloch direction of the `+` outcome.
    pub fn direction(&self) -> [f64; 3] {
        spherical(self.theta, self.phi)
    }

    pub fn outcomes(&self) -> [&ComplexMatrix; 2] {
        [&self.plus, &self.minus]
    }
}

pub fn projector_pair(theta: f64, phi: f64) -> ProjectorPair {
    let (plus, minus) = spinor_pair(theta, phi);
    ProjectorPair {
        theta,
        phi,
        plus: ComplexMatrix::outer(&plus),
        minus: ComplexMatrix::outer(&minus),
    }
}

/// Alice's three measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub angles: [(f64, f64); 3],
    pub projectors: [ProjectorPair; 3],
}

impl MeasurementSet {
    pub fn new(angles: [(f64, f64); 3]) -> Self {
        MeasurementSet {
            angles,
            projectors: angles.map(|(t, p)| projector_pair(t, p)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MubCheck {
    pub unbiased: bool,
    /// Largest `| |⟨e_i^a|e_j^b⟩|² − 1/2 |` over `i ≠ j`.
    pub worst_defect: f64,
}

pub fn check_mutually_unbiased(bases: &[OrthonormalBasis; 3], tol: f64) -> MubCheck {
    let mut worst = 0.0_f64;
    for i in 0..3 {
        for j in (i + 1)..3 {
            for a in 0..2 {
                for b in 0..2 {
                    let overlap = inner(&bases[i].vector(a), &bases[j].vector(b)).norm_sqr();
                    worst = worst.max((overlap - 0.5).abs());
                }
            }
        }
    }
    MubCheck {
        unbiased: worst <= tol,
        worst_defect: worst,
    }
}

/// `{V M_i V†}` for a unitary `V`.
pub fn conjugate_frame(m: &MubTriple, v: &ComplexMatrix) -> Result<[OrthonormalBasis; 3]> {
    check_unitary(v)?;
    Ok(m.bases.map(|b| b.transformed(v)))
}
