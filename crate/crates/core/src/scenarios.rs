//! Named state families and the sweeps run over them: witness curves,
//! threshold search, and the three-qubit exclusion study.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaginarity::ImaginarityMeasure;
use crate::naqi::{naqi_value, NaqiConfig, NaqiResult};
use crate::optimize::bisect_threshold;
use crate::qmat::{partial_trace, permute_subsystems, DensityMatrix, C64};

/// Parameter-space step of threshold bisection.
pub const THRESHOLD_TOL: f64 = 1e-5;

/// Amplitudes of `λ₀|000⟩ + λ₁e^{iφ}|100⟩ + λ₂|101⟩ + λ₃|110⟩ + λ₄|111⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThreeQubitParams {
    lambda: [f64; 5],
    phi: f64,
}

const NORMALIZATION_TOL: f64 = 1e-10;

impl ThreeQubitParams {
    /// Nonnegative amplitudes, `φ ∈ [0, π]`.
    pub fn new(lambda: [f64; 5], phi: f64) -> Result<Self> {
        if let Some(k) = lambda.iter().position(|&l| l < 0.0) {
            return Err(Error::domain("lambda", format!("λ{k} = {} is negative", lambda[k])));
        }
        if !(0.0..=PI).contains(&phi) {
            return Err(Error::domain("phi", format!("{phi} not in [0, π]")));
        }
        Self::signed(lambda, phi)
    }

    /// Real amplitudes of either sign; only normalization is checked.
    pub fn signed(lambda: [f64; 5], phi: f64) -> Result<Self> {
        if lambda.iter().any(|l| !l.is_finite()) || !phi.is_finite() {
            return Err(Error::domain("lambda", "amplitudes and phase must be finite"));
        }
        let norm2: f64 = lambda.iter().map(|l| l * l).sum();
        if (norm2 - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::domain("lambda", format!("Σλ² = {norm2}, expected 1")));
        }
        Ok(ThreeQubitParams { lambda, phi })
    }

    /// `λ₀ = cos α`, `λ₂ = sin α cos β`, `λ₃ = sin α sin β`.
    pub fn alpha_beta(alpha: f64, beta: f64) -> Self {
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        ThreeQubitParams {
            lambda: [ca, 0.0, sa * cb, sa * sb, 0.0],
            phi: 0.0,
        }
    }

    /// `λ₀ = √2/2`, `λ₂ = (√2/2) cos θ`, `λ₃ = (√2/2) sin θ`.
    pub fn theta(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        ThreeQubitParams {
            lambda: [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2 * c, FRAC_1_SQRT_2 * s, 0.0],
            phi: 0.0,
        }
    }

    pub fn lambda(&self) -> [f64; 5] {
        self.lambda
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn ket(&self) -> Vec<C64> {
        let [l0, l1, l2, l3, l4] = self.lambda;
        let mut ket = vec![C64::new(0.0, 0.0); 8];
        ket[0b000] = C64::new(l0, 0.0);
        ket[0b100] = C64::from_polar(l1, self.phi);
        ket[0b101] = C64::new(l2, 0.0);
        ket[0b110] = C64::new(l3, 0.0);
        ket[0b111] = C64::new(l4, 0.0);
        ket
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum StateFamily {
    /// `p|φ⁺⟩⟨φ⁺| + (1−p)|ψ⁺⟩⟨ψ⁺|`.
    BellMixture { p: f64 },
    /// `p|φ⁺⟩⟨φ⁺| + (1−p) I/4`.
    Werner { p: f64 },
    ThreeQubitPure(ThreeQubitParams),
}

/// One-parameter two-qubit families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    BellMixture,
    Werner,
}

impl FamilyKind {
    pub fn at(self, p: f64) -> StateFamily {
        match self {
            FamilyKind::BellMixture => StateFamily::BellMixture { p },
            FamilyKind::Werner => StateFamily::Werner { p },
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            FamilyKind::BellMixture => "bell-mixture",
            FamilyKind::Werner => "werner",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bell-mixture" | "bell" => Ok(FamilyKind::BellMixture),
            "werner" => Ok(FamilyKind::Werner),
            other => Err(Error::domain("family", format!("unknown family {other:?} (expected bell-mixture or werner)"))),
        }
    }
}

fn bell_phi_plus() -> Vec<C64> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    vec![h, z, z, h]
}

fn bell_psi_plus() -> Vec<C64> {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    vec![z, h, h, z]
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain("p", format!("{p} not in [0, 1]")))
    }
}

pub fn build_state(family: &StateFamily) -> Result<DensityMatrix> {
    match *family {
        StateFamily::BellMixture { p } => {
            check_probability(p)?;
            let phi = DensityMatrix::from_pure(&bell_phi_plus())?;
            let psi = DensityMatrix::from_pure(&bell_psi_plus())?;
            phi.mix(&psi, p)
        }
        StateFamily::Werner { p } => {
            check_probability(p)?;
            DensityMatrix::from_pure(&bell_phi_plus())?.mix(&DensityMatrix::maximally_mixed(4), p)
        }
        StateFamily::ThreeQubitPure(params) => {
            // re-validate: the fields may come from the unchecked constructors
            ThreeQubitParams::signed(params.lambda, params.phi)?;
            DensityMatrix::from_pure(&params.ket())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRecord {
    pub param: f64,
    pub value: f64,
    pub witness: f64,
    pub verdict: bool,
    pub certified: bool,
}

/// Witness at every grid point, in grid order.
pub fn scan_family(
    kind: FamilyKind,
    params: &[f64],
    measure: ImaginarityMeasure,
    config: &NaqiConfig,
) -> Result<Vec<ScanRecord>> {
    params
        .par_iter()
        .map(|&p| {
            let r = naqi_value(&build_state(&kind.at(p))?, measure, config)?;
            Ok(ScanRecord {
                param: p,
                value: r.value,
                witness: r.witness,
                verdict: r.verdict,
                certified: r.certified,
            })
        })
        .collect()
}

/// Parameter at which the witness changes sign inside `bracket`.
pub fn find_naqi_threshold(
    kind: FamilyKind,
    measure: ImaginarityMeasure,
    bracket: (f64, f64),
    config: &NaqiConfig,
) -> Result<f64> {
    let witness = |p: f64| Ok(naqi_value(&build_state(&kind.at(p))?, measure, config)?.witness);
    bisect_threshold(witness, bracket.0, bracket.1, THRESHOLD_TOL)
}

/// Evenly spaced points on `[lo, hi]`, both ends included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExclusionPoint {
    AlphaBeta { alpha: f64, beta: f64 },
    Theta { theta: f64 },
}

impl ExclusionPoint {
    pub fn params(&self) -> ThreeQubitParams {
        match *self {
            ExclusionPoint::AlphaBeta { alpha, beta } => ThreeQubitParams::alpha_beta(alpha, beta),
            ExclusionPoint::Theta { theta } => ThreeQubitParams::theta(theta),
        }
    }
}

/// `n_alpha × n_beta` points over `α ∈ [0, π]`, `β ∈ [0, 2π]`, row-major in α.
pub fn alpha_beta_grid(n_alpha: usize, n_beta: usize) -> Vec<ExclusionPoint> {
    let betas = linspace(0.0, TAU, n_beta);
    linspace(0.0, PI, n_alpha)
        .into_iter()
        .flat_map(|alpha| betas.iter().map(move |&beta| ExclusionPoint::AlphaBeta { alpha, beta }))
        .collect()
}

/// `n` points over `θ ∈ [0, 2π]`.
pub fn theta_grid(n: usize) -> Vec<ExclusionPoint> {
    linspace(0.0, TAU, n).into_iter().map(|theta| ExclusionPoint::Theta { theta }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExclusionRecord {
    pub point: ExclusionPoint,
    /// Ordered pairs (A→B, B→C, C→A), or (B→A, C→B, A→C) when reversed.
    pub results: [NaqiResult; 3],
    pub count_exceeding: usize,
}

/// The three ordered two-qubit marginals, measured party first.
pub fn ordered_pairs(rho_abc: &DensityMatrix, reversed: bool) -> Result<[DensityMatrix; 3]> {
    let dims = [2, 2, 2];
    let ab = partial_trace(rho_abc, &[0, 1], &dims)?;
    let bc = partial_trace(rho_abc, &[1, 2], &dims)?;
    let ac = partial_trace(rho_abc, &[0, 2], &dims)?;
    let swap = |r: &DensityMatrix| permute_subsystems(r, &[2, 2], &[1, 0]);
    if reversed {
        Ok([swap(&ab)?, swap(&bc)?, ac])
    } else {
        Ok([ab, bc, swap(&ac)?])
    }
}

pub fn exclusion_record(
    point: ExclusionPoint,
    measure: ImaginarityMeasure,
    config: &NaqiConfig,
    reversed: bool,
) -> Result<ExclusionRecord> {
    let rho = build_state(&StateFamily::ThreeQubitPure(point.params()))?;
    let [p0, p1, p2] = ordered_pairs(&rho, reversed)?;
    let results = [
        naqi_value(&p0, measure, config)?,
        naqi_value(&p1, measure, config)?,
        naqi_value(&p2, measure, config)?,
    ];
    let count_exceeding = results.iter().filter(|r| r.verdict).count();
    Ok(ExclusionRecord {
        point,
        results,
        count_exceeding,
    })
}

/// Exclusion records for every point, in input order.
pub fn exclusion_scan(
    points: &[ExclusionPoint],
    measure: ImaginarityMeasure,
    config: &NaqiConfig,
    reversed: bool,
) -> Result<Vec<ExclusionRecord>> {
    points
        .par_iter()
        .map(|&p| exclusion_record(p, measure, config, reversed))
        .collect()
}
