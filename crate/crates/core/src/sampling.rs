//! Reproducible random states and unitaries for property tests and sweeps.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::qmat::{bloch_to_density, BlochVector, ComplexMatrix, DensityMatrix, C64};

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| gaussian_c64(rng))
}

/// Haar-random unit ket (normalized complex Gaussian vector).
pub fn haar_ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Haar-random unitary via Gram–Schmidt on a complex Gaussian matrix.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut v: Vec<C64> = (0..dim).map(|r| g[(r, c)]).collect();
        for q in &cols {
            let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    ComplexMatrix::from_fn(dim, |r, c| cols[c][r])
}

/// Uniform direction scaled by a uniform length in `[0, 1]`.
pub fn random_bloch<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let theta = rng.random::<f64>().mul_add(2.0, -1.0).acos();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    let len: f64 = rng.random();
    let [x, y, z] = crate::qmat::spherical(theta, phi);
    BlochVector::new(len * x, len * y, len * z).expect("inside unit ball")
}

/// Uniform point on the Bloch sphere.
pub fn random_pure_bloch<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let theta = rng.random::<f64>().mul_add(2.0, -1.0).acos();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    BlochVector::from_angles(theta, phi)
}

pub fn random_mixed_qubit<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    bloch_to_density(random_bloch(rng))
}

/// Haar pure two-qubit state mixed with `I/4` at a uniform weight.
pub fn random_two_qubit_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let pure = DensityMatrix::from_pure(&haar_ket(rng, 4)).expect("nonzero ket");
    let w: f64 = rng.random();
    pure.mix(&DensityMatrix::maximally_mixed(4), w)
        .expect("weight in [0, 1]")
}
