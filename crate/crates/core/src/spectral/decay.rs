//! Long-time behaviour of `e^{λ0 t} p_t(x, x)` on nonamenable groups.

use serde::Serialize;

use crate::eigen::lowest_eigenpair;
use crate::error::{Error, Result};
use crate::graph::{GroupKind, GroupSpec, RadialTree};
use crate::heat::{leakage_bound, SpectralWindow};
use crate::linalg::least_squares_line;
use crate::magnetic::{truncation_dirichlet, truncation_operator};

use super::theta::ThetaSample;

/// Monotonicity checks on samples of `e^{λ t} θ(t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayChecks {
    /// Largest increase between consecutive samples.
    pub max_increase: f64,
    /// `max_t t v(t) - t_1 v(t_1)`.
    pub max_growth: f64,
    pub non_increasing: bool,
    pub t_weighted_bounded: bool,
    /// Slope of `ln v` against `ln t`.
    pub slope: f64,
    pub fit_residual: f64,
}

impl DecayChecks {
    pub fn pass(&self) -> bool {
        self.non_increasing && self.t_weighted_bounded
    }
}

/// Checks on `(t, v)` samples sorted by `t`, with `tol` relative slack per comparison.
pub fn decay_checks(samples: &[(f64, f64)], tol: f64) -> Result<DecayChecks> {
    if samples.len() < 2 {
        return Err(Error::domain("decay checks need at least two samples"));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) || samples.iter().any(|s| !(s.1 > 0.0)) {
        return Err(Error::domain("samples must have increasing times and positive values"));
    }
    let mut max_increase = f64::NEG_INFINITY;
    let mut non_increasing = true;
    for w in samples.windows(2) {
        let d = w[1].1 - w[0].1;
        max_increase = max_increase.max(d);
        non_increasing &= d <= tol * w[0].1;
    }
    let start = samples[0].0 * samples[0].1;
    let max_growth = samples.iter().map(|s| s.0 * s.1 - start).fold(f64::NEG_INFINITY, f64::max);
    let fit = least_squares_line(&samples.iter().map(|s| (s.0.ln(), s.1.ln())).collect::<Vec<_>>());
    Ok(DecayChecks {
        max_increase,
        max_growth,
        non_increasing,
        t_weighted_bounded: max_growth <= tol * start,
        slope: fit.slope,
        fit_residual: fit.rms_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub spec: GroupSpec,
    pub window: (f64, f64),
    /// Estimate of `λ0` used in the shift.
    pub lambda0: f64,
    /// Radius of the Dirichlet problem that produced `lambda0`.
    pub lambda0_radius: usize,
    /// Truncation radius at which the whole window was certified.
    pub radius: usize,
    /// Samples of `e^{λ0 t} p_t(root, root)`.
    pub samples: Vec<ThetaSample>,
    pub checks: DecayChecks,
    /// Checks on `e^{(λ0 - δ) t} p_t(root, root)`, the trace for the potential `T = -λ0 + δ`.
    pub schrodinger: DecayChecks,
    pub schrodinger_margin: f64,
    /// Checks at the starting radius, before any enlargement.
    pub initial: DecayChecks,
    pub initial_radius: usize,
}

impl DecayReport {
    pub fn pass(&self) -> bool {
        self.checks.pass() && self.schrodinger.t_weighted_bounded
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DecayOutcome {
    /// `λ0 = 0`; decay follows from polynomial growth instead.
    Amenable { growth: Option<f64> },
    Checked(Box<DecayReport>),
}

/// Largest quotient radius; sphere weights `d (d-1)^{r-1}` overflow beyond roughly 640 levels.
const RADIUS_CAP: usize = 500;

fn window_samples(valence: usize, radius: usize, lambda0: f64, times: &[f64]) -> Result<(Vec<ThetaSample>, SpectralWindow)> {
    let op = truncation_operator(&RadialTree::new(valence, radius)?)?;
    let w = SpectralWindow::new(&op)?;
    let samples = times
        .iter()
        .map(|&t| {
            let d = w.diagonal(0, t, op.dim(), lambda0);
            let leak = leakage_bound(&op, t)[0] * (lambda0 * t).exp();
            ThetaSample {
                t,
                value: d.value,
                certified_error: leak + 1e-13 * d.value,
                failure: None,
            }
        })
        .collect();
    Ok((samples, w))
}

fn pairs(samples: &[ThetaSample]) -> Vec<(f64, f64)> {
    samples.iter().map(|s| (s.t, s.value)).collect()
}

/// Checks that `e^{λ0 t} p_t(root, root)` and `t e^{λ0 t} p_t(root, root)`
/// do not grow over `window` on a free group.
///
/// The heat kernel is evaluated on the distance quotient of a ball whose
/// radius starts at `start_radius` and doubles until every sample has a
/// certified error below 1% of its value. `λ0` is the bottom of the Dirichlet
/// problem on a larger ball (four times the radius, capped), which lies above
/// the true `λ0` and below the bottom of the truncation used for the kernel.
pub fn long_time_decay_check(spec: GroupSpec, window: (f64, f64), start_radius: usize, samples: usize) -> Result<DecayOutcome> {
    let valence = match spec.kind() {
        GroupKind::FreeGroup { rank } => 2 * rank,
        _ if spec.is_amenable() => {
            return Ok(DecayOutcome::Amenable {
                growth: spec.polynomial_growth(),
            })
        }
        _ => return Err(Error::domain("decay check is implemented for free groups")),
    };
    let (t1, t2) = window;
    if !(t1 > 0.0 && t2 > t1) || samples < 2 || start_radius < 1 {
        return Err(Error::domain("window must satisfy 0 < t1 < t2 with at least two samples"));
    }
    let times: Vec<f64> = (0..samples).map(|i| t1 + (t2 - t1) * i as f64 / (samples - 1) as f64).collect();

    if start_radius >= RADIUS_CAP {
        return Err(Error::domain(format!("start radius must be below {RADIUS_CAP}")));
    }
    let mut radius = start_radius;
    let mut initial = None;
    loop {
        let lambda0_radius = (4 * radius + 1).min(RADIUS_CAP);
        let reference = truncation_dirichlet(&RadialTree::new(valence, lambda0_radius)?)?;
        let lambda0 = lowest_eigenpair(&reference, 1e-12)?.value;
        let (pts, w) = window_samples(valence, radius, lambda0, &times)?;
        let checks = decay_checks(&pairs(&pts), 1e-10)?;
        let initial_checks = initial.get_or_insert_with(|| checks.clone()).clone();
        let certified = pts.iter().all(|s| s.certified_error < 0.01 * s.value);
        if certified {
            let margin = 0.01;
            let schrod: Vec<(f64, f64)> = times
                .iter()
                .map(|&t| (t, w.diagonal(0, t, w.eigenvalues().len(), lambda0 - margin).value))
                .collect();
            let schrodinger = decay_checks(&schrod, 1e-10)?;
            return Ok(DecayOutcome::Checked(Box::new(DecayReport {
                spec,
                window,
                lambda0,
                lambda0_radius,
                radius,
                samples: pts,
                checks,
                schrodinger,
                schrodinger_margin: margin,
                initial: initial_checks,
                initial_radius: start_radius,
            })));
        }
        if 2 * radius >= RADIUS_CAP {
            let valid = pts
                .iter()
                .take_while(|s| s.certified_error < 0.01 * s.value)
                .last()
                .map_or(0.0, |s| s.t);
            return Err(Error::domain(format!(
                "window exceeds what radius {radius} certifies; valid window is [{t1}, {valid}]"
            )));
        }
        radius *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::kesten_tree;

    #[test]
    fn synthetic_inverse_t() {
        let lambda0: f64 = 0.3;
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = 5.0 + 2.0 * i as f64;
                (t, (lambda0 * t).exp() * (-lambda0 * t).exp() / t)
            })
            .collect();
        let c = decay_checks(&pts, 1e-12).unwrap();
        assert!(c.pass());
        assert!((c.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn amenable_dispatch() {
        let out = long_time_decay_check(GroupSpec::free_abelian(1).unwrap(), (5.0, 40.0), 14, 8).unwrap();
        assert_eq!(out, DecayOutcome::Amenable { growth: Some(1.0) });
    }

    #[test]
    fn free_group_window() {
        let out = long_time_decay_check(GroupSpec::free_group(2).unwrap(), (5.0, 40.0), 14, 36).unwrap();
        let DecayOutcome::Checked(r) = out else { panic!("expected a report") };
        assert!(r.pass(), "{r:?}");
        assert!(r.lambda0 > kesten_tree(4) && r.lambda0 < kesten_tree(4) + 1e-3);
        assert!(r.checks.slope < -1.0);
    }

    #[test]
    fn bad_window_rejected() {
        assert!(long_time_decay_check(GroupSpec::free_group(2).unwrap(), (5.0, 2.0), 14, 8).is_err());
    }
}
