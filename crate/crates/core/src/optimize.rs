//! Derivative-free maximization over small angle boxes and bracketed
//! threshold search.
//!
//! [`maximize`] scans a regular grid, then runs bounded Nelder–Mead from the
//! best grid cells. Grid cells and restarts are evaluated on the current
//! rayon pool and merged in index order, so results do not depend on the
//! number of workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub grid_points_per_dim: usize,
    pub refine_iterations: usize,
    /// Simplex diameter at which refinement stops.
    pub refine_tolerance: f64,
    pub multistart_count: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid_points_per_dim: 24,
            refine_iterations: 200,
            refine_tolerance: 1e-9,
            multistart_count: 8,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points_per_dim < 2 {
            return Err(Error::domain("grid", "need at least 2 points per dimension"));
        }
        if self.refine_iterations == 0 {
            return Err(Error::domain("refine-iters", "must be positive"));
        }
        if !(self.refine_tolerance > 0.0) || !self.refine_tolerance.is_finite() {
            return Err(Error::domain("refine-tol", "must be positive and finite"));
        }
        if self.multistart_count == 0 {
            return Err(Error::domain("starts", "must be positive"));
        }
        Ok(())
    }

    /// Grid offset (fraction of a cell) applied along periodic dimensions.
    fn periodic_offset(&self) -> f64 {
        if self.seed == 0 {
            0.0
        } else {
            ChaCha8Rng::seed_from_u64(self.seed).random::<f64>()
        }
    }
}

/// One search dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, periodic: false }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, periodic: true }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn project(&self, x: f64) -> f64 {
        if self.periodic {
            self.lo + (x - self.lo).rem_euclid(self.width())
        } else {
            x.clamp(self.lo, self.hi)
        }
    }

    fn grid(&self, n: usize, offset: f64) -> Vec<f64> {
        if self.periodic {
            (0..n).map(|k| self.lo + (k as f64 + offset) * self.width() / n as f64).collect()
        } else {
            (0..n).map(|k| self.lo + k as f64 * self.width() / (n - 1) as f64).collect()
        }
    }

    fn cell(&self, n: usize) -> f64 {
        if self.periodic {
            self.width() / n as f64
        } else {
            self.width() / (n - 1) as f64
        }
    }

    fn separation(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        if self.periodic {
            d.min(self.width() - d)
        } else {
            d
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizerDiagnostics {
    pub grid_points: usize,
    pub starts: usize,
    /// Nelder–Mead iterations summed over all restarts.
    pub iterations: usize,
    pub best_grid_value: f64,
    /// Best refined value minus the second-best refined value.
    pub best_vs_second_gap: f64,
    /// Whether the winning restart met its stopping rule within budget.
    pub converged: bool,
}

/// A refined local maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalMaximum {
    pub value: f64,
    pub point: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximizeOutcome {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub diagnostics: OptimizerDiagnostics,
    /// Every refined restart, best first.
    pub local_maxima: Vec<LocalMaximum>,
}

/// Maximizes `f` over the box. See the module docs for the method.
pub fn maximize<F>(f: F, bounds: &[Interval], config: &OptimizerConfig) -> Result<MaximizeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    maximize_staged(&f, &f, bounds, config)
}

/// Like [`maximize`], but ranks grid cells with `coarse` and refines with
/// `fine`. `coarse` must not exceed `fine` anywhere; a cheap lower bound of
/// an inner maximization is the intended use.
pub fn maximize_staged<G, F>(
    coarse: G,
    fine: F,
    bounds: &[Interval],
    config: &OptimizerConfig,
) -> Result<MaximizeOutcome>
where
    G: Fn(&[f64]) -> f64 + Sync,
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let dim = bounds.len();
    if dim == 0 || dim > 4 {
        return Err(Error::domain("box", format!("dimension {dim} not in 1..=4")));
    }
    if bounds.iter().any(|b| !(b.hi > b.lo) || !b.lo.is_finite() || !b.hi.is_finite()) {
        return Err(Error::domain("box", "every interval needs finite lo < hi"));
    }

    let n = config.grid_points_per_dim;
    let offset = config.periodic_offset();
    let axes: Vec<Vec<f64>> = bounds.iter().map(|b| b.grid(n, offset)).collect();
    let total = n.pow(dim as u32);
    let point_at = |mut index: usize| -> Vec<f64> {
        let mut p = vec![0.0; dim];
        for k in (0..dim).rev() {
            p[k] = axes[k][index % n];
            index /= n;
        }
        p
    };

    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| coarse(&point_at(i)))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            point: point_at(i),
            value: values[i],
        });
    }

    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let starts: Vec<usize> = order.into_iter().take(config.multistart_count).collect();
    let best_grid_value = values[starts[0]];

    let steps: Vec<f64> = bounds.iter().map(|b| b.cell(n)).collect();
    let refined: Vec<Result<(LocalMaximum, usize)>> = starts
        .par_iter()
        .map(|&i| nelder_mead(&fine, bounds, point_at(i), &steps, config))
        .collect();
    let mut maxima = Vec::with_capacity(refined.len());
    let mut iterations = 0;
    for r in refined {
        let (m, iters) = r?;
        iterations += iters;
        maxima.push(m);
    }
    maxima.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then_with(|| lexicographic(&a.point, &b.point))
    });
    let best = maxima[0].clone();
    let gap = maxima.get(1).map_or(0.0, |m| best.value - m.value);
    Ok(MaximizeOutcome {
        value: best.value,
        argmax: best.point.clone(),
        diagnostics: OptimizerDiagnostics {
            grid_points: total,
            starts: maxima.len(),
            iterations,
            best_grid_value,
            best_vs_second_gap: gap,
            converged: best.converged,
        },
        local_maxima: maxima,
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn evaluate<F: Fn(&[f64]) -> f64>(f: &F, p: &[f64]) -> Result<f64> {
    let v = f(p);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            point: p.to_vec(),
            value: v,
        })
    }
}

/// Bounded Nelder–Mead (maximizing). Vertices are projected into the box
/// after every move; periodic coordinates wrap.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    bounds: &[Interval],
    start: Vec<f64>,
    steps: &[f64],
    config: &OptimizerConfig,
) -> Result<(LocalMaximum, usize)> {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let dim = bounds.len();
    let project = |p: &mut Vec<f64>| {
        for (x, b) in p.iter_mut().zip(bounds) {
            *x = b.project(*x);
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = evaluate(f, &start)?;
    simplex.push((start.clone(), v0));
    for k in 0..dim {
        let mut p = start.clone();
        // step inward at an upper bound so the vertex stays distinct
        let b = &bounds[k];
        p[k] += if !b.periodic && p[k] + steps[k] > b.hi { -steps[k] } else { steps[k] };
        project(&mut p);
        let v = evaluate(f, &p)?;
        simplex.push((p, v));
    }

    let diameter = |s: &[(Vec<f64>, f64)]| -> f64 {
        let best = &s[0].0;
        s[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(best)
                    .zip(bounds)
                    .map(|((a, b), iv)| iv.separation(*a, *b))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| lexicographic(&a.0, &b.0)));
    };

    let mut iterations = 0;
    let mut converged = false;
    sort(&mut simplex);
    while iterations < config.refine_iterations {
        let spread = simplex[0].1 - simplex[dim].1;
        if diameter(&simplex) <= config.refine_tolerance
            || spread <= 1e-15 * simplex[0].1.abs().max(1.0)
        {
            converged = true;
            break;
        }
        iterations += 1;

        // centroid of all but the worst, unwrapped around the best vertex
        let anchor = simplex[0].0.clone();
        let unwrap = |p: &[f64]| -> Vec<f64> {
            p.iter()
                .zip(&anchor)
                .zip(bounds)
                .map(|((&x, &a), b)| {
                    if b.periodic {
                        let w = b.width();
                        a + (x - a + 0.5 * w).rem_euclid(w) - 0.5 * w
                    } else {
                        x
                    }
                })
                .collect()
        };
        let pts: Vec<Vec<f64>> = simplex.iter().map(|(p, _)| unwrap(p)).collect();
        let mut centroid = vec![0.0; dim];
        for p in &pts[..dim] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / dim as f64;
            }
        }
        let worst = &pts[dim];
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p);
            p
        };

        let reflected = along(REFLECT);
        let fr = evaluate(f, &reflected)?;
        if fr > simplex[0].1 {
            let expanded = along(EXPAND);
            let fe = evaluate(f, &expanded)?;
            simplex[dim] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let (candidate, fc) = if fr > simplex[dim].1 {
                let p = along(CONTRACT * REFLECT);
                let v = evaluate(f, &p)?;
                (p, v)
            } else {
                let p = along(-CONTRACT);
                let v = evaluate(f, &p)?;
                (p, v)
            };
            if fc > simplex[dim].1.max(fr.min(simplex[dim].1)) {
                simplex[dim] = (candidate, fc);
            } else {
                for k in 1..=dim {
                    let mut p: Vec<f64> = pts[0]
                        .iter()
                        .zip(&pts[k])
                        .map(|(b, x)| b + SHRINK * (x - b))
                        .collect();
                    project(&mut p);
                    let v = evaluate(f, &p)?;
                    simplex[k] = (p, v);
                }
            }
        }
        sort(&mut simplex);
    }
    if !converged {
        let spread = simplex[0].1 - simplex[dim].1;
        converged = diameter(&simplex) <= config.refine_tolerance
            || spread <= 1e-15 * simplex[0].1.abs().max(1.0);
    }
    let (point, value) = simplex.swap_remove(0);
    Ok((LocalMaximum { value, point, converged }, iterations))
}

/// Locates a sign change of `g` on `[lo, hi]` to within `tol` in the parameter.
pub fn bisect_threshold<F>(mut g: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) || !(hi > lo) {
        return Err(Error::domain("bracket", format!("need lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}")));
    }
    let (mut a, mut b) = (lo, hi);
    let ga = g(a)?;
    let gb = g(b)?;
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.signum() == gb.signum() || !ga.is_finite() || !gb.is_finite() {
        return Err(Error::NoSignChange { lo, hi, g_lo: ga, g_hi: gb });
    }
    let lo_sign = ga.signum();
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == lo_sign {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn quadratic_peak() {
        let out = maximize(|x| -(x[0] - 0.3).powi(2), &[Interval::new(0.0, 1.0)], &OptimizerConfig::default()).unwrap();
        assert!((out.argmax[0] - 0.3).abs() < 1e-6);
        assert!(out.value <= 0.0 && out.value > -1e-12);
        assert!(out.diagnostics.converged);
    }

    #[test]
    fn trigonometric_peak_at_atan_two() {
        let out = maximize(
            |x| 2.0 * x[0].sin().abs() + x[0].cos().abs(),
            &[Interval::new(0.0, PI)],
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert!((out.value - 5f64.sqrt()).abs() < 1e-12);
        // maxima at atan 2 and π − atan 2
        let d = (out.argmax[0] - 2f64.atan()).abs().min((out.argmax[0] - (PI - 2f64.atan())).abs());
        assert!(d < 1e-6, "{:?}", out.argmax);
    }

    #[test]
    fn werner_inner_term() {
        // Σ_± p_± |n_±·b| for ρ_W(0.8), b = ŷ, Alice's direction m:
        // n_± = ±0.8·(m_x, −m_y, m_z)
        let p = 0.8;
        let out = maximize(
            |x| {
                let m = crate::qmat::spherical(x[0], x[1]);
                p * m[1].abs()
            },
            &[Interval::new(0.0, PI), Interval::periodic(0.0, TAU)],
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert!((out.value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn periodic_dimension_wraps() {
        // peak sits on the seam of the periodic interval
        let out = maximize(
            |x| x[0].cos(),
            &[Interval::periodic(0.0, TAU)],
            &OptimizerConfig { grid_points_per_dim: 7, seed: 3, ..Default::default() },
        )
        .unwrap();
        assert!((out.value - 1.0).abs() < 1e-15);
        let d = out.argmax[0].min(TAU - out.argmax[0]);
        assert!(d < 1e-6);
    }

    #[test]
    fn refinement_never_worse_than_grid() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.1 * x[0];
        let bounds = [Interval::new(0.0, PI), Interval::periodic(0.0, TAU)];
        for grid in [3, 5, 11, 24] {
            let cfg = OptimizerConfig { grid_points_per_dim: grid, ..Default::default() };
            let out = maximize(f, &bounds, &cfg).unwrap();
            assert!(out.value >= out.diagnostics.best_grid_value);
        }
    }

    #[test]
    fn deterministic_across_runs_and_pools() {
        let f = |x: &[f64]| (x[0] * 1.3).sin() + (x[1] - 0.4).cos() * x[2].sin();
        let bounds = [Interval::new(0.0, PI), Interval::periodic(0.0, TAU), Interval::periodic(0.0, TAU)];
        let cfg = OptimizerConfig { grid_points_per_dim: 9, seed: 42, ..Default::default() };
        let a = maximize(f, &bounds, &cfg).unwrap();
        let b = maximize(f, &bounds, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| maximize(f, &bounds, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn non_finite_values_abort() {
        let err = maximize(|x| if x[0] > 0.5 { f64::NAN } else { x[0] }, &[Interval::new(0.0, 1.0)], &OptimizerConfig::default())
            .unwrap_err();
        match err {
            Error::NonFinite { point, .. } => assert!(point[0] > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = OptimizerConfig { multistart_count: 0, ..Default::default() };
        assert!(maximize(|x| x[0], &[Interval::new(0.0, 1.0)], &cfg).is_err());
        let five = [Interval::new(0.0, 1.0); 5];
        assert!(maximize(|x| x[0], &five, &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn bisection_examples() {
        let s5 = 5f64.sqrt();
        let root = bisect_threshold(|p| Ok(3.0 * p - s5), 0.5, 1.0, 1e-5).unwrap();
        assert!((root - s5 / 3.0).abs() < 1e-5);
        assert!((root - 0.7454).abs() < 1e-4);
        let half = bisect_threshold(|p| Ok(p - 0.5), 0.0, 1.0, 1e-5).unwrap();
        assert!((half - 0.5).abs() < 1e-5);

        // 3(1 − H((1+p)/2)) − 𝓘_r with 𝓘_r = 2.02685
        let g = |p: f64| Ok(3.0 * (1.0 - crate::imaginarity::h2((1.0 + p) / 2.0)) - 2.02685);
        let root = bisect_threshold(g, 0.5, 1.0, 1e-5).unwrap();
        assert!((root - 0.8816).abs() < 2e-3, "{root}");

        assert!(matches!(
            bisect_threshold(|p| Ok(p + 1.0), 0.0, 1.0, 1e-5),
            Err(Error::NoSignChange { .. })
        ));
    }
}
