//! Sum of a qubit's imaginarities over a triple of mutually unbiased bases,
//! and the state-independent bound on that sum.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{mub_triple, MubTriple};
use crate::imaginarity::{imag_from_bloch, imag_measure, ImaginarityMeasure};
use crate::optimize::{maximize, Interval, OptimizerConfig, OptimizerDiagnostics};
use crate::qmat::{bloch_to_density, dot3, BlochVector};

/// Reference value of the relative-entropy bound, to five decimals.
pub const RELATIVE_ENTROPY_BOUND_REFERENCE: f64 = 2.02685;
const RELATIVE_ENTROPY_BOUND_TOL: f64 = 5e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Analytic,
    Recomputed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundConstant {
    pub measure: ImaginarityMeasure,
    pub value: f64,
    pub maximizer: BlochVector,
    pub provenance: Provenance,
}

/// `Σᵢ 𝓘(ρ(n))` over the three bases of `m`, evaluated on density matrices.
pub fn mub_imaginarity_sum(n: BlochVector, m: &MubTriple, measure: ImaginarityMeasure) -> f64 {
    let rho = bloch_to_density(n);
    m.bases
        .iter()
        .map(|b| imag_measure(measure, &rho, b).expect("qubit state in a qubit basis"))
        .sum()
}

/// Same sum through the Bloch-vector closed forms.
pub(crate) fn mub_sum_from_axes(measure: ImaginarityMeasure, n: &[f64; 3], axes: &[[f64; 3]; 3]) -> f64 {
    axes.iter().map(|b| imag_from_bloch(measure, n, b)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateMaximum {
    pub value: f64,
    /// Canonical representative of the best maximizer.
    pub argmax: BlochVector,
    /// Distinct canonical maximizers within 1e-6 of the best value.
    pub maximizers: Vec<BlochVector>,
    pub diagnostics: OptimizerDiagnostics,
}

/// Maximizes the sum over pure states for a fixed triple.
pub fn maximize_sum_over_states(
    measure: ImaginarityMeasure,
    triple: &MubTriple,
    config: &OptimizerConfig,
) -> Result<StateMaximum> {
    let axes = triple.imaginary_axes();
    let f = |x: &[f64]| {
        let n = crate::qmat::spherical(x[0], x[1]);
        mub_sum_from_axes(measure, &n, &axes)
    };
    let out = maximize(f, &[Interval::new(0.0, PI), Interval::periodic(0.0, TAU)], config)?;

    let to_bloch = |p: &[f64]| canonicalize(crate::qmat::spherical(p[0], p[1]), &axes);
    let mut maximizers: Vec<BlochVector> = Vec::new();
    for m in out.local_maxima.iter().filter(|m| m.value >= out.value - 1e-6) {
        let n = to_bloch(&m.point);
        let seen = maximizers.iter().any(|k| {
            let d = [k.x - n.x, k.y - n.y, k.z - n.z];
            dot3(&d, &d).sqrt() < 1e-4
        });
        if !seen {
            maximizers.push(n);
        }
    }
    Ok(StateMaximum {
        value: out.value,
        argmax: to_bloch(&out.argmax),
        maximizers,
        diagnostics: out.diagnostics,
    })
}

/// Picks one representative under the sign symmetries of the sum: `n → −n`
/// always, and flipping `n_x` or `n_y` alone whenever that maps every
/// imaginary axis to ± itself.
fn canonicalize(mut n: [f64; 3], axes: &[[f64; 3]; 3]) -> BlochVector {
    const EPS: f64 = 1e-12;
    let reflection_preserves = |k: usize| {
        axes.iter().all(|b| {
            let off: f64 = (0..3).filter(|&j| j != k).map(|j| b[j].abs()).sum();
            b[k].abs() < EPS || off < EPS
        })
    };
    let mut flipped_any = false;
    for k in 0..2 {
        if reflection_preserves(k) {
            n[k] = n[k].abs();
            flipped_any = true;
        }
    }
    if !flipped_any {
        if let Some(lead) = n.iter().find(|v| v.abs() > EPS) {
            if *lead < 0.0 {
                n = n.map(|v| -v);
            }
        }
    }
    BlochVector { x: n[0], y: n[1], z: n[2] }
}

fn relative_entropy_bound() -> &'static Result<BoundConstant> {
    static CELL: OnceLock<Result<BoundConstant>> = OnceLock::new();
    CELL.get_or_init(|| {
        let best = maximize_sum_over_states(
            ImaginarityMeasure::RelativeEntropy,
            &mub_triple(0.0, 0.0),
            &OptimizerConfig::default(),
        )?;
        if (best.value - RELATIVE_ENTROPY_BOUND_REFERENCE).abs() > RELATIVE_ENTROPY_BOUND_TOL {
            return Err(Error::BoundCheck(format!(
                "recomputed relative-entropy bound {} is not within {RELATIVE_ENTROPY_BOUND_TOL} of {RELATIVE_ENTROPY_BOUND_REFERENCE}",
                best.value
            )));
        }
        Ok(BoundConstant {
            measure: ImaginarityMeasure::RelativeEntropy,
            value: best.value,
            maximizer: best.argmax,
            provenance: Provenance::Recomputed,
        })
    })
}

/// `√5` for l1; for relative entropy the value is recomputed once per
/// process and cached.
pub fn bound_constant(measure: ImaginarityMeasure) -> Result<BoundConstant> {
    match measure {
        ImaginarityMeasure::L1 => {
            let s5 = 5f64.sqrt();
            Ok(BoundConstant {
                measure,
                value: s5,
                maximizer: BlochVector { x: 1.0 / s5, y: 2.0 / s5, z: 0.0 },
                provenance: Provenance::Analytic,
            })
        }
        ImaginarityMeasure::RelativeEntropy => relative_entropy_bound().clone(),
    }
}
