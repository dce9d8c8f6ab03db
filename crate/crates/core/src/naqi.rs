//! Steering of Bob's imaginarity by Alice's measurements.
//!
//! Alice measures one of three projective measurements; Bob evaluates the
//! imaginarity of his conditional state in the matching basis of a triple
//! of mutually unbiased bases. The objective is the outcome-averaged
//! imaginarity summed over the three settings, maximized over the triple
//! and the measurements. A state shows NAQI (nonlocal advantage of quantum
//! imaginarity) when that maximum beats the single-qubit bound.
//!
//! The sum separates over the three settings, so for each triple the three
//! measurement directions are optimized independently. Two bases of every
//! triple share an imaginary axis, which leaves two inner problems per
//! triple. For the l1 measure the inner maximum has the closed form
//! `max(|s·b|, |T b|)`; the relative-entropy inner problem is solved
//! numerically on the hemisphere of measurement directions.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

use crate::complementarity::{bound_constant, mub_sum_from_axes};
use crate::error::{Error, Result};
use crate::frames::{mub_triple, mub_triple_with_phase, MeasurementSet, MubTriple, ProjectorPair};
use crate::imaginarity::{imag_from_bloch, imag_measure, ImaginarityMeasure};
use crate::optimize::{maximize, maximize_staged, Interval, OptimizerConfig, OptimizerDiagnostics};
use crate::qmat::{
    angles_of, dot3, norm3, partial_trace, pauli_decompose, spherical, tensor, ComplexMatrix, DensityMatrix,
    TwoQubitPauliForm,
};

/// Outcomes less likely than this contribute nothing to averages.
pub const ZERO_PROBABILITY: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalOutcome {
    pub probability: f64,
    /// `I/2` stands in when the outcome has zero probability.
    pub state: DensityMatrix,
}

/// Bob's states conditioned on the two outcomes of one measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalEnsemble {
    pub outcomes: Vec<ConditionalOutcome>,
}

impl ConditionalEnsemble {
    /// `Σ_a p_a ρ_{B|a}`.
    pub fn average_state(&self) -> ComplexMatrix {
        self.outcomes
            .iter()
            .filter(|o| o.probability >= ZERO_PROBABILITY)
            .fold(ComplexMatrix::zeros(2), |acc, o| {
                &acc + &o.state.matrix().scale(o.probability.into())
            })
    }

    pub fn average_imaginarity(
        &self,
        measure: ImaginarityMeasure,
        basis: &crate::imaginarity::OrthonormalBasis,
    ) -> Result<f64> {
        let mut total = 0.0;
        for o in self.outcomes.iter().filter(|o| o.probability >= ZERO_PROBABILITY) {
            total += o.probability * imag_measure(measure, &o.state, basis)?;
        }
        Ok(total)
    }
}

fn require_two_qubits(rho_ab: &DensityMatrix) -> Result<()> {
    if rho_ab.dim() == 4 {
        Ok(())
    } else {
        Err(Error::Dimension(format!("expected a two-qubit state, got dimension {}", rho_ab.dim())))
    }
}

/// `p_a = Tr[(Π_a⊗I)ρ]`, `ρ_{B|a} = Tr_A[(Π_a⊗I)ρ(Π_a⊗I)]/p_a`.
pub fn conditional_ensemble(rho_ab: &DensityMatrix, pi: &ProjectorPair) -> Result<ConditionalEnsemble> {
    require_two_qubits(rho_ab)?;
    let id = ComplexMatrix::identity(2);
    let mut outcomes = Vec::with_capacity(2);
    for proj in pi.outcomes() {
        let lifted = tensor(proj, &id)?;
        let post = &(&lifted * rho_ab.matrix()) * &lifted;
        let probability = post.trace().re.max(0.0);
        let state = if probability < ZERO_PROBABILITY {
            DensityMatrix::maximally_mixed(2)
        } else {
            let unnormalized = partial_trace(&DensityMatrix::from_trusted(post.hermitian_part()), &[1], &[2, 2])?;
            DensityMatrix::from_trusted(unnormalized.matrix().scale((1.0 / probability).into()))
        };
        outcomes.push(ConditionalOutcome { probability, state });
    }
    Ok(ConditionalEnsemble { outcomes })
}

/// `Σᵢ Σ_a p(a|i) 𝓘_{Mᵢ}(ρ_{B|a,i})`, evaluated on density matrices.
pub fn objective(
    rho_ab: &DensityMatrix,
    mub: &MubTriple,
    meas: &MeasurementSet,
    measure: ImaginarityMeasure,
) -> Result<f64> {
    let mut total = 0.0;
    for (basis, pi) in mub.bases.iter().zip(&meas.projectors) {
        total += conditional_ensemble(rho_ab, pi)?.average_imaginarity(measure, basis)?;
    }
    Ok(total)
}

/// One setting's term from the Pauli form: Alice measures along `m`, Bob's
/// basis has imaginary axis `b`.
pub(crate) fn conditional_term(form: &TwoQubitPauliForm, measure: ImaginarityMeasure, b: &[f64; 3], m: &[f64; 3]) -> f64 {
    let rm = dot3(&form.r, m);
    let tm = form.t_transpose_times(m);
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let p = 0.5 * (1.0 + sign * rm);
        if p < ZERO_PROBABILITY {
            continue;
        }
        let n = [0, 1, 2].map(|k| (form.s[k] + sign * tm[k]) / (2.0 * p));
        total += p * imag_from_bloch(measure, &n, b);
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NaqiConfig {
    pub optimizer: OptimizerConfig,
    /// The witness must exceed this for a positive verdict.
    pub verdict_margin: f64,
    /// Search every rotated triple instead of the two-angle family.
    pub full_orbit: bool,
}

impl Default for NaqiConfig {
    fn default() -> Self {
        NaqiConfig {
            optimizer: OptimizerConfig::default(),
            verdict_margin: 1e-7,
            full_orbit: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MubAngles {
    pub theta1: f64,
    pub phi1: f64,
    pub chi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NaqiResult {
    pub measure: ImaginarityMeasure,
    pub value: f64,
    pub bound: f64,
    pub witness: f64,
    pub verdict: bool,
    pub steerable_implied: bool,
    pub optimal_mub_angles: MubAngles,
    pub optimal_measurement_angles: [(f64, f64); 3],
    pub diagnostics: OptimizerDiagnostics,
    /// False when any refinement ran out of budget before converging.
    pub certified: bool,
}

fn outer_box(full_orbit: bool) -> Vec<Interval> {
    let mut b = vec![Interval::new(0.0, PI), Interval::periodic(0.0, TAU)];
    if full_orbit {
        b.push(Interval::periodic(0.0, TAU));
    }
    b
}

fn triple_at(x: &[f64]) -> MubTriple {
    match x {
        [t, p] => mub_triple(*t, *p),
        [t, p, c] => mub_triple_with_phase(*t, *p, *c),
        _ => unreachable!("outer box has two or three dimensions"),
    }
}

fn inner_box() -> [Interval; 2] {
    // m and −m give the same term, so one hemisphere suffices
    [Interval::new(0.0, FRAC_PI_2), Interval::periodic(0.0, TAU)]
}

/// Grid-only inner maximum used to rank outer grid cells.
const COARSE_INNER_THETA: usize = 5;
const COARSE_INNER_PHI: usize = 12;

struct Inner<'a> {
    form: &'a TwoQubitPauliForm,
    measure: ImaginarityMeasure,
    config: OptimizerConfig,
    coarse_dirs: Vec<[f64; 3]>,
}

struct InnerMax {
    value: f64,
    direction: [f64; 3],
    converged: bool,
}

impl<'a> Inner<'a> {
    fn new(form: &'a TwoQubitPauliForm, measure: ImaginarityMeasure, config: OptimizerConfig) -> Self {
        let mut coarse_dirs = Vec::new();
        for i in 0..COARSE_INNER_THETA {
            let theta = FRAC_PI_2 * i as f64 / (COARSE_INNER_THETA - 1) as f64;
            let rings = if i == 0 { 1 } else { COARSE_INNER_PHI };
            for j in 0..rings {
                coarse_dirs.push(spherical(theta, TAU * j as f64 / COARSE_INNER_PHI as f64));
            }
        }
        Inner { form, measure, config, coarse_dirs }
    }

    fn coarse(&self, b: &[f64; 3]) -> f64 {
        match self.measure {
            ImaginarityMeasure::L1 => self.l1(b).value,
            ImaginarityMeasure::RelativeEntropy => self
                .coarse_dirs
                .iter()
                .map(|m| conditional_term(self.form, self.measure, b, m))
                .fold(f64::MIN, f64::max),
        }
    }

    fn l1(&self, b: &[f64; 3]) -> InnerMax {
        let tb = self.form.t_times(b);
        let len = norm3(&tb);
        let direction = if len > 0.0 { tb.map(|v| v / len) } else { [0.0, 0.0, 1.0] };
        InnerMax {
            value: dot3(&self.form.s, b).abs().max(len),
            direction,
            converged: true,
        }
    }

    fn full(&self, b: &[f64; 3]) -> Result<InnerMax> {
        match self.measure {
            ImaginarityMeasure::L1 => Ok(self.l1(b)),
            ImaginarityMeasure::RelativeEntropy => {
                let f = |x: &[f64]| conditional_term(self.form, self.measure, b, &spherical(x[0], x[1]));
                let out = maximize(f, &inner_box(), &self.config)?;
                Ok(InnerMax {
                    value: out.value,
                    direction: spherical(out.argmax[0], out.argmax[1]),
                    converged: out.diagnostics.converged,
                })
            }
        }
    }
}

/// Inner optimizer budget: the outer grid size halved, other settings kept.
fn inner_config(outer: &OptimizerConfig) -> OptimizerConfig {
    OptimizerConfig {
        grid_points_per_dim: (outer.grid_points_per_dim / 2).max(4),
        multistart_count: outer.multistart_count.div_ceil(2),
        ..*outer
    }
}

/// Maximizes the objective over triples and measurements and compares the
/// result with the single-qubit bound.
pub fn naqi_value(rho_ab: &DensityMatrix, measure: ImaginarityMeasure, config: &NaqiConfig) -> Result<NaqiResult> {
    require_two_qubits(rho_ab)?;
    let bound = bound_constant(measure)?.value;
    let form = pauli_decompose(rho_ab)?;
    let inner = Inner::new(&form, measure, inner_config(&config.optimizer));
    let bounds = outer_box(config.full_orbit);

    // axes[0] and axes[1] coincide up to sign
    let coarse = |x: &[f64]| {
        let axes = triple_at(x).imaginary_axes();
        2.0 * inner.coarse(&axes[0]) + inner.coarse(&axes[2])
    };
    let fine = |x: &[f64]| {
        let axes = triple_at(x).imaginary_axes();
        match (inner.full(&axes[0]), inner.full(&axes[2])) {
            (Ok(a), Ok(c)) => 2.0 * a.value + c.value,
            _ => f64::NAN,
        }
    };
    let out = match measure {
        ImaginarityMeasure::L1 => maximize(fine, &bounds, &config.optimizer)?,
        ImaginarityMeasure::RelativeEntropy => maximize_staged(coarse, fine, &bounds, &config.optimizer)?,
    };

    let triple = triple_at(&out.argmax);
    let axes = triple.imaginary_axes();
    let shared = inner.full(&axes[0])?;
    let third = inner.full(&axes[2])?;
    let value = (2.0 * shared.value + third.value).max(0.0);
    let a = angles_of(shared.direction);
    let c = angles_of(third.direction);
    let witness = value - bound;
    let verdict = witness > config.verdict_margin;
    Ok(NaqiResult {
        measure,
        value,
        bound,
        witness,
        verdict,
        steerable_implied: verdict,
        optimal_mub_angles: MubAngles {
            theta1: triple.theta1,
            phi1: triple.phi1,
            chi: triple.chi,
        },
        optimal_measurement_angles: [a, a, c],
        certified: out.diagnostics.converged && shared.converged && third.converged,
        diagnostics: out.diagnostics,
    })
}

/// Same computation as [`naqi_value`]; the witness is `value − bound`.
pub fn witness(rho_ab: &DensityMatrix, measure: ImaginarityMeasure, config: &NaqiConfig) -> Result<NaqiResult> {
    naqi_value(rho_ab, measure, config)
}

/// Best sum of Bob's unconditioned imaginarities over triples.
pub fn reduced_state_lower_bound(rho_ab: &DensityMatrix, measure: ImaginarityMeasure, config: &NaqiConfig) -> Result<f64> {
    require_two_qubits(rho_ab)?;
    let s = pauli_decompose(rho_ab)?.s;
    let f = |x: &[f64]| mub_sum_from_axes(measure, &s, &triple_at(x).imaginary_axes());
    Ok(maximize(f, &outer_box(config.full_orbit), &config.optimizer)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{basis_ket, bloch_to_density, density_to_bloch, tensor_ket, BlochVector, C64};
    use crate::sampling::{haar_unitary, random_mixed_qubit, random_two_qubit_state};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phi_plus() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ket: Vec<C64> = [h, 0.0, 0.0, h].iter().map(|&v| C64::new(v, 0.0)).collect();
        DensityMatrix::from_pure(&ket).unwrap()
    }

    fn werner(p: f64) -> DensityMatrix {
        phi_plus().mix(&DensityMatrix::maximally_mixed(4), p).unwrap()
    }

    fn product(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::new(tensor(a.matrix(), b.matrix()).unwrap()).unwrap()
    }

    fn fast_config() -> NaqiConfig {
        NaqiConfig {
            optimizer: OptimizerConfig { grid_points_per_dim: 10, multistart_count: 4, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn product_states_do_not_steer() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_mixed_qubit(&mut rng);
            let b = random_mixed_qubit(&mut rng);
            let rho = product(&a, &b);
            let pi = crate::frames::projector_pair(rng.random::<f64>() * PI, rng.random::<f64>() * TAU);
            for o in conditional_ensemble(&rho, &pi).unwrap().outcomes {
                assert!(o.state.matrix().max_abs_diff(b.matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn werner_conditionals_along_z() {
        let e = conditional_ensemble(&werner(0.6), &crate::frames::projector_pair(0.0, 0.0)).unwrap();
        let ps: Vec<f64> = e.outcomes.iter().map(|o| o.probability).collect();
        assert!((ps[0] - 0.5).abs() < 1e-12 && (ps[1] - 0.5).abs() < 1e-12);
        let n0 = density_to_bloch(&e.outcomes[0].state).unwrap();
        let n1 = density_to_bloch(&e.outcomes[1].state).unwrap();
        assert!((n0.z - 0.6).abs() < 1e-12 && (n1.z + 0.6).abs() < 1e-12);
        assert!(n0.x.abs() < 1e-12 && n0.y.abs() < 1e-12);
    }

    #[test]
    fn bell_conditionals_along_y() {
        let e = conditional_ensemble(&phi_plus(), &crate::frames::projector_pair(FRAC_PI_2, FRAC_PI_2)).unwrap();
        let n0 = density_to_bloch(&e.outcomes[0].state).unwrap();
        let n1 = density_to_bloch(&e.outcomes[1].state).unwrap();
        assert!((n0.y + 1.0).abs() < 1e-12 && (n1.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_outcome_is_placeholder() {
        let ket = tensor_ket(&basis_ket(2, 0), &basis_ket(2, 0));
        let rho = DensityMatrix::from_pure(&ket).unwrap();
        let e = conditional_ensemble(&rho, &crate::frames::projector_pair(0.0, 0.0)).unwrap();
        assert_eq!(e.outcomes[1].probability, 0.0);
        assert_eq!(e.outcomes[1].state, DensityMatrix::maximally_mixed(2));
    }

    #[test]
    fn averages_reproduce_reduced_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let rho = random_two_qubit_state(&mut rng);
            let rho_b = partial_trace(&rho, &[1], &[2, 2]).unwrap();
            let pi = crate::frames::projector_pair(rng.random::<f64>() * PI, rng.random::<f64>() * TAU);
            let e = conditional_ensemble(&rho, &pi).unwrap();
            let total: f64 = e.outcomes.iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert!(e.average_state().max_abs_diff(rho_b.matrix()) < 1e-9);
        }
    }

    #[test]
    fn objective_examples() {
        let t = mub_triple(0.0, 0.0);
        // measure along the y, y, x axes
        let meas = MeasurementSet::new([(FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, FRAC_PI_2), (FRAC_PI_2, 0.0)]);
        let v = objective(&phi_plus(), &t, &meas, ImaginarityMeasure::L1).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        for p in [0.2, 0.5, 0.8] {
            let v = objective(&werner(p), &t, &meas, ImaginarityMeasure::L1).unwrap();
            assert!((v - 3.0 * p).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_mixed_qubit(&mut rng);
        let b = random_mixed_qubit(&mut rng);
        for m in ImaginarityMeasure::ALL {
            let v = objective(&product(&a, &b), &t, &meas, m).unwrap();
            let direct: f64 = t.bases.iter().map(|basis| imag_measure(m, &b, basis).unwrap()).sum();
            assert!((v - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_route_matches_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..300 {
            let rho = random_two_qubit_state(&mut rng);
            let form = pauli_decompose(&rho).unwrap();
            let t = mub_triple_with_phase(rng.random::<f64>() * PI, rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
            let angles = [0; 3].map(|_| (rng.random::<f64>() * PI, rng.random::<f64>() * TAU));
            let meas = MeasurementSet::new(angles);
            for m in ImaginarityMeasure::ALL {
                let slow = objective(&rho, &t, &meas, m).unwrap();
                let axes = t.imaginary_axes();
                let fast: f64 = (0..3)
                    .map(|i| conditional_term(&form, m, &axes[i], &spherical(angles[i].0, angles[i].1)))
                    .sum();
                assert!((slow - fast).abs() < 1e-9, "{slow} vs {fast}");
            }
        }
    }

    #[test]
    fn l1_inner_closed_form_against_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let rho = random_two_qubit_state(&mut rng);
            let form = pauli_decompose(&rho).unwrap();
            let b = crate::sampling::random_pure_bloch(&mut rng).to_array();
            let inner = Inner::new(&form, ImaginarityMeasure::L1, OptimizerConfig::default());
            let closed = inner.l1(&b);
            let at_argmax = conditional_term(&form, ImaginarityMeasure::L1, &b, &closed.direction);
            assert!((at_argmax - closed.value).abs() < 1e-12);
            for _ in 0..200 {
                let m = crate::sampling::random_pure_bloch(&mut rng).to_array();
                assert!(conditional_term(&form, ImaginarityMeasure::L1, &b, &m) <= closed.value + 1e-12);
            }
        }
    }

    #[test]
    fn value_examples() {
        let cfg = fast_config();
        let r = naqi_value(&phi_plus(), ImaginarityMeasure::L1, &cfg).unwrap();
        assert!((r.value - 3.0).abs() < 1e-9);
        assert!((r.witness - (3.0 - 5f64.sqrt())).abs() < 1e-9);
        assert!(r.verdict && r.steerable_implied && r.certified);
        for p in [0.2, 0.5, 0.8] {
            let r = naqi_value(&werner(p), ImaginarityMeasure::L1, &cfg).unwrap();
            assert!((r.value - 3.0 * p).abs() < 1e-9);
        }
        let r = naqi_value(&werner(0.7), ImaginarityMeasure::L1, &cfg).unwrap();
        assert!(!r.verdict && r.witness < 0.0);
    }

    #[test]
    fn optimum_reproduced_on_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let rho = random_two_qubit_state(&mut rng);
        for m in ImaginarityMeasure::ALL {
            let r = naqi_value(&rho, m, &fast_config()).unwrap();
            let a = r.optimal_mub_angles;
            let t = mub_triple_with_phase(a.theta1, a.phi1, a.chi);
            let v = objective(&rho, &t, &MeasurementSet::new(r.optimal_measurement_angles), m).unwrap();
            assert!((v - r.value).abs() < 1e-9, "{m}: {v} vs {}", r.value);
        }
    }

    #[test]
    fn relative_entropy_maximally_entangled() {
        let r = naqi_value(&phi_plus(), ImaginarityMeasure::RelativeEntropy, &fast_config()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn product_state_value_equals_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rho = product(&random_mixed_qubit(&mut rng), &random_mixed_qubit(&mut rng));
        let cfg = fast_config();
        for m in ImaginarityMeasure::ALL {
            let n = naqi_value(&rho, m, &cfg).unwrap().value;
            let lb = reduced_state_lower_bound(&rho, m, &cfg).unwrap();
            assert!((n - lb).abs() < 1e-12, "{m}: {n} vs {lb}");
        }
    }

    #[test]
    fn lower_bound_and_ceiling_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let cfg = fast_config();
        for _ in 0..10 {
            let rho = random_two_qubit_state(&mut rng);
            for m in ImaginarityMeasure::ALL {
                let n = naqi_value(&rho, m, &cfg).unwrap().value;
                let lb = reduced_state_lower_bound(&rho, m, &cfg).unwrap();
                assert!(n >= lb - 1e-6 && n <= 3.0 + 1e-12, "{m}: {n} vs {lb}");
            }
        }
    }

    #[test]
    fn maximally_mixed_marginal_gives_zero_lower_bound() {
        for m in ImaginarityMeasure::ALL {
            assert!(reduced_state_lower_bound(&werner(0.4), m, &fast_config()).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn local_unitaries_leave_value_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let rho = random_two_qubit_state(&mut rng);
        let uv = tensor(&haar_unitary(&mut rng, 2), &haar_unitary(&mut rng, 2)).unwrap();
        let rotated = rho.conjugated_by(&uv).unwrap();
        let cfg = NaqiConfig::default();
        let a = naqi_value(&rho, ImaginarityMeasure::L1, &cfg).unwrap().value;
        let b = naqi_value(&rotated, ImaginarityMeasure::L1, &cfg).unwrap().value;
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn rejects_single_qubit_input() {
        let q = bloch_to_density(BlochVector::new(0.0, 0.0, 0.5).unwrap());
        assert!(matches!(naqi_value(&q, ImaginarityMeasure::L1, &fast_config()), Err(Error::Dimension(_))));
    }
}
