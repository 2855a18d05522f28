//! Theta functions `θ(t) = tr e^{-tΔ_σ}` and Novikov–Shubin fits.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VertexFunction;
use crate::graph::{build_ball, BallGraph, GroupKind, GroupSpec, RadialTree};
use crate::heat::{evolve, leakage_radius, HeatMethod, HeatOptions, HeatRequest, SpectralWindow};
use crate::linalg::weighted_least_squares_line;
use crate::magnetic::{ball_operator, truncation_operator, Flux, Multiplier};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaSample {
    pub t: f64,
    pub value: f64,
    pub certified_error: f64,
    /// Set when this sample could not be computed within its budget.
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethod {
    /// Brillouin-zone quadrature of the Bloch bands.
    Bloch,
    /// Heat kernel at the root of the distance quotient of a tree.
    RadialQuotient,
    /// Heat series on an explicit ball.
    BallSeries,
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaSeries {
    pub spec: Option<GroupSpec>,
    pub flux: Option<Flux>,
    /// `λ` in `e^{λ t} θ(t)`; zero for the plain theta function.
    pub shift: f64,
    pub method: ThetaMethod,
    pub samples: Vec<ThetaSample>,
}

impl ThetaSeries {
    /// Series from exact values, e.g. a closed-form fixture.
    pub fn synthetic(points: &[(f64, f64)]) -> Self {
        ThetaSeries {
            spec: None,
            flux: None,
            shift: 0.0,
            method: ThetaMethod::Synthetic,
            samples: points
                .iter()
                .map(|&(t, value)| ThetaSample {
                    t,
                    value,
                    certified_error: 0.0,
                    failure: None,
                })
                .collect(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    /// `e^{λ t} θ(t)` with every error scaled accordingly.
    pub fn shifted(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.shift += lambda;
        for s in &mut out.samples {
            let g = (lambda * s.t).exp();
            s.value *= g;
            s.certified_error *= g;
        }
        out
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::domain("time grid is empty"));
    }
    if t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("time grid must be nonnegative and strictly increasing"));
    }
    Ok(())
}

/// `e^{-x} I_n(x)` upper bound `e^{-x} (x/2)^n / n! · e^{x²/(4(n+1))}`, in log form.
fn ln_scaled_bessel_bound(n: usize, x: f64) -> f64 {
    let ln_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
    -x + n as f64 * (0.5 * x).ln() - ln_fact + x * x / (4.0 * (n + 1) as f64)
}

/// `θ_Z(t) = e^{-2t} I_0(2t)` by the trapezoid rule on the Brillouin zone.
///
/// The rule with `N` nodes aliases `2 Σ_{m >= 1} e^{-2t} I_{mN}(2t)`, which is
/// bounded through the series majorant of `I_N`.
pub fn line_theta(t: f64) -> (f64, f64) {
    if t == 0.0 {
        return (1.0, 0.0);
    }
    let x = 2.0 * t;
    let mut n = 32usize;
    while ln_scaled_bessel_bound(n, x) > -50.0 {
        n += 16;
    }
    let sum: f64 = (0..n)
        .map(|j| (-t * (2.0 - 2.0 * (2.0 * PI * j as f64 / n as f64).cos())).exp())
        .sum();
    let value = sum / n as f64;
    let alias = 2.2 * ln_scaled_bessel_bound(n, x).exp();
    (value, alias + 1e-15 * value * n as f64)
}

/// `θ_{Z^d}(t) = θ_Z(t)^d`.
pub fn lattice_theta(d: usize, t: f64) -> (f64, f64) {
    let (v, e) = line_theta(t);
    let di = d as i32;
    (v.powi(di), d as f64 * v.powi(di - 1) * e + 1e-15 * v.powi(di))
}

/// Bloch Hamiltonian of the Harper operator at flux `p/q` on the magnetic unit cell.
pub fn harper_bloch(p: i64, q: i64, k1: f64, k2: f64) -> DMatrix<C64> {
    let q = q as usize;
    let alpha = p as f64 / q as f64;
    DMatrix::from_fn(q, q, |r, c| {
        let mut z = C64::new(0.0, 0.0);
        if r == c {
            z += 4.0 - 2.0 * (k2 - 2.0 * PI * alpha * r as f64).cos();
        }
        if q == 1 {
            z -= 2.0 * k1.cos();
        } else {
            if c == (r + 1) % q {
                z -= C64::from_polar(1.0, k1);
            }
            if c == (r + q - 1) % q {
                z -= C64::from_polar(1.0, -k1);
            }
        }
        z
    })
}

/// Band values of the Harper operator on an `n x n` Brillouin grid.
#[derive(Clone, Debug)]
pub struct BlochBands {
    pub q: usize,
    pub n: usize,
    /// `bands[(i * n + j) * q + b]` is band `b` at `k = 2π (i, j) / n`.
    pub bands: Vec<f64>,
}

impl BlochBands {
    pub fn harper(flux: Flux, n: usize) -> Result<Self> {
        let (p, q) = flux
            .reduced()
            .ok_or_else(|| Error::domain("Bloch sampling needs a rational flux"))?;
        let qu = q as usize;
        let bands: Vec<f64> = (0..n * n)
            .into_par_iter()
            .flat_map_iter(|idx| {
                let (i, j) = (idx / n, idx % n);
                let k1 = 2.0 * PI * i as f64 / n as f64;
                let k2 = 2.0 * PI * j as f64 / n as f64;
                let mut ev: Vec<f64> = harper_bloch(p, q, k1, k2).symmetric_eigenvalues().iter().copied().collect();
                ev.sort_by(f64::total_cmp);
                ev
            })
            .collect();
        Ok(BlochBands { q: qu, n, bands })
    }

    fn trace_on(&self, t: f64, stride: usize) -> f64 {
        let m = self.n / stride;
        let mut sum = 0.0;
        for i in (0..self.n).step_by(stride) {
            for j in (0..self.n).step_by(stride) {
                let base = (i * self.n + j) * self.q;
                sum += self.bands[base..base + self.q].iter().map(|l| (-t * l).exp()).sum::<f64>();
            }
        }
        sum / (self.q * m * m) as f64
    }

    /// Per-site trace of `e^{-tH}` and the difference from the half-resolution grid.
    pub fn theta(&self, t: f64) -> (f64, f64) {
        let full = self.trace_on(t, 1);
        let half = if self.n.is_multiple_of(2) { self.trace_on(t, 2) } else { full };
        (full, (full - half).abs())
    }

    pub fn bottom(&self) -> f64 {
        self.bands.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Theta function of the Harper operator, refining the Brillouin grid until
/// the half-grid discrepancy is below `rel_tol` relative at every time.
pub fn harper_theta(flux: Flux, t_grid: &[f64], rel_tol: f64, max_grid: usize) -> Result<Vec<ThetaSample>> {
    check_grid(t_grid)?;
    let mut n = 32;
    loop {
        let bands = BlochBands::harper(flux, n)?;
        let samples: Vec<ThetaSample> = t_grid
            .iter()
            .map(|&t| {
                let (value, err) = bands.theta(t);
                ThetaSample {
                    t,
                    value,
                    certified_error: err,
                    failure: None,
                }
            })
            .collect();
        let ok = samples.iter().all(|s| s.certified_error <= rel_tol * s.value);
        if ok || 2 * n > max_grid {
            let mut samples = samples;
            if !ok {
                for s in samples.iter_mut().filter(|s| s.certified_error > rel_tol * s.value) {
                    s.failure = Some(format!("Brillouin grid {n} did not resolve t = {}", s.t));
                }
            }
            return Ok(samples);
        }
        n *= 2;
    }
}

/// `p_t(root, root)` on a `valence`-regular tree from its distance quotient.
///
/// The radius starts from the Poisson tail estimate and grows until the
/// certified error fits the budget.
pub fn tree_theta(valence: usize, t: f64, err: f64) -> Result<ThetaSample> {
    let mut r = leakage_radius(valence, t, 0.5 * err).max(1);
    loop {
        let op = truncation_operator(&RadialTree::new(valence, r)?)?;
        let method = if t * 2.0 * valence as f64 <= crate::heat::DEFAULT_SERIES_LIMIT {
            HeatMethod::Series
        } else {
            HeatMethod::SpectralWindow { k: op.dim() }
        };
        let out = evolve(
            &op,
            &HeatRequest::new(t, err, method)?,
            &VertexFunction::delta(op.dim(), 0),
            &HeatOptions::default(),
        )?;
        let sample = ThetaSample {
            t,
            value: out.values[0].re,
            certified_error: out.certified_error(0),
            failure: None,
        };
        if sample.certified_error <= err {
            return Ok(sample);
        }
        if r >= crate::eigen::DENSE_CAP {
            return Err(Error::Budget {
                certified: sample.certified_error,
                budget: err,
                required_radius: 2 * r,
            });
        }
        r += 4 + r / 4;
    }
}

/// `p^σ_t(root, root)` from the heat series on an explicit ball.
pub fn ball_theta(g: &BallGraph, sigma: Option<&Multiplier>, t: f64, err: f64) -> Result<ThetaSample> {
    let a = ball_operator(g, sigma)?;
    let out = evolve(&a, &HeatRequest::series(t, err)?, &VertexFunction::delta(g.len(), 0), &HeatOptions::default())?;
    Ok(ThetaSample {
        t,
        value: out.values[0].re,
        certified_error: out.certified_error(0),
        failure: None,
    })
}

/// Root diagonal for all times via one spectral decomposition of a small truncation.
pub fn window_theta(window: &SpectralWindow, t_grid: &[f64]) -> Vec<ThetaSample> {
    let root = window.operator().root();
    t_grid
        .iter()
        .map(|&t| {
            let d = window.diagonal(root, t, window.eigenvalues().len(), 0.0);
            ThetaSample {
                t,
                value: d.value,
                certified_error: d.remainder,
                failure: None,
            }
        })
        .collect()
}

/// `θ_{G,σ}(t)` on a time grid.
///
/// `Z^d` uses exact Brillouin quadrature, Harper fluxes on `Z^2` their Bloch
/// bands, free groups the distance quotient, and the Heisenberg group the
/// heat series on a ball large enough for the budget.
pub fn theta(spec: GroupSpec, flux: Option<Flux>, t_grid: &[f64], err: f64) -> Result<ThetaSeries> {
    check_grid(t_grid)?;
    if !(err > 0.0) {
        return Err(Error::domain("error budget must be positive"));
    }
    let flux = flux.filter(|f| f.value() != 0.0);
    let (method, samples) = match (spec.kind(), flux) {
        (GroupKind::FreeAbelian { rank }, None) => (
            ThetaMethod::Bloch,
            t_grid
                .par_iter()
                .map(|&t| {
                    let (value, e) = lattice_theta(rank, t);
                    ThetaSample {
                        t,
                        value,
                        certified_error: e,
                        failure: None,
                    }
                })
                .collect(),
        ),
        (GroupKind::FreeAbelian { rank: 2 }, Some(f)) => (ThetaMethod::Bloch, harper_theta(f, t_grid, 1e-3, 1024)?),
        (_, Some(_)) => return Err(Error::domain("magnetic theta is implemented for Harper fluxes on Z^2")),
        (GroupKind::FreeGroup { rank }, None) => (
            ThetaMethod::RadialQuotient,
            t_grid
                .par_iter()
                .map(|&t| tree_theta(2 * rank, t, err).unwrap_or_else(|e| failed(t, e)))
                .collect(),
        ),
        (GroupKind::Heisenberg, None) => (
            ThetaMethod::BallSeries,
            t_grid
                .par_iter()
                .map(|&t| heisenberg_theta(spec, t, err).unwrap_or_else(|e| failed(t, e)))
                .collect(),
        ),
    };
    Ok(ThetaSeries {
        spec: Some(spec),
        flux,
        shift: 0.0,
        method,
        samples,
    })
}

fn failed(t: f64, e: Error) -> ThetaSample {
    ThetaSample {
        t,
        value: f64::NAN,
        certified_error: f64::INFINITY,
        failure: Some(e.to_string()),
    }
}

fn heisenberg_theta(spec: GroupSpec, t: f64, err: f64) -> Result<ThetaSample> {
    let r = leakage_radius(spec.generator_count(), t, 0.5 * err).max(1);
    let g = build_ball(spec, r)?;
    let s = ball_theta(&g, None, t, err)?;
    if s.certified_error > err {
        return Err(Error::Budget {
            certified: s.certified_error,
            budget: err,
            required_radius: 2 * r,
        });
    }
    Ok(s)
}

/// Least-squares decay exponent of a theta series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NsEstimate {
    /// Negated slope of `ln θ` against `ln t`.
    pub beta: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub samples_used: usize,
    pub shifted: bool,
    /// False when the window had fewer than 8 samples or an error above 1% of its value.
    pub ok: bool,
}

/// Fits `θ(t) ~ t^{-β}` over `window`, weighting each point by its inverse
/// relative error.
pub fn ns_estimate(series: &ThetaSeries, window: (f64, f64)) -> Result<NsEstimate> {
    let pts: Vec<&ThetaSample> = series
        .samples
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1 && s.failure.is_none())
        .collect();
    if pts.len() < 2 {
        return Err(Error::domain("fewer than two usable samples in the fit window"));
    }
    let ok = pts.len() >= 8 && pts.iter().all(|s| s.value > 0.0 && s.certified_error < 0.01 * s.value);
    let data: Vec<(f64, f64)> = pts.iter().map(|s| (s.t.ln(), s.value.ln())).collect();
    let weights: Vec<f64> = pts
        .iter()
        .map(|s| {
            let rel = s.certified_error / s.value.abs();
            1.0 / (rel + 1e-12).powi(2)
        })
        .collect();
    let fit = weighted_least_squares_line(&data, &weights);
    Ok(NsEstimate {
        beta: -fit.slope,
        window,
        residual: fit.rms_residual,
        samples_used: pts.len(),
        shifted: series.shift != 0.0,
        ok,
    })
}

/// Geometric time grid with `n` points on `[t1, t2]`.
pub fn geometric_grid(t1: f64, t2: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| t1 * (t2 / t1).powf(i as f64 / (n - 1).max(1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{bessel_zd, harper_bloch_min, scaled_bessel_i};

    #[test]
    fn lattice_theta_matches_bessel_series() {
        for d in 1..=3 {
            for &t in &[0.0, 0.3, 1.0, 2.5, 5.0, 40.0] {
                let (v, e) = lattice_theta(d, t);
                let o = bessel_zd(t, &vec![0; d], &vec![0; d]).unwrap();
                assert!((v - o).abs() < 1e-13 + e, "d={d} t={t}: {v} vs {o}");
                assert!(e < 1e-12);
            }
        }
        let (v, _) = line_theta(250.0);
        assert!((v / scaled_bessel_i(0, 500.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn theta_at_zero_is_one() {
        for spec in [GroupSpec::free_abelian(2).unwrap(), GroupSpec::free_group(2).unwrap(), GroupSpec::heisenberg()] {
            let s = theta(spec, None, &[0.0], 1e-10).unwrap();
            assert!((s.samples[0].value - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn harper_zero_flux_is_lattice() {
        let bands = BlochBands::harper(Flux::rational(0, 1).unwrap(), 64).unwrap();
        let (v, _) = bands.theta(1.0);
        assert!((v - lattice_theta(2, 1.0).0).abs() < 1e-13);
    }

    #[test]
    fn harper_bottom_matches_oracle() {
        let bands = BlochBands::harper(Flux::rational(1, 2).unwrap(), 64).unwrap();
        assert!((bands.bottom() - harper_bloch_min(1, 2, 64)).abs() < 1e-12);
        assert!((bands.bottom() - (4.0 - 2.0 * 2f64.sqrt())).abs() < 1e-3);
    }

    #[test]
    fn harper_theta_dominated() {
        let grid = [0.5, 1.0, 2.0, 5.0, 20.0];
        let plain = theta(GroupSpec::free_abelian(2).unwrap(), None, &grid, 1e-10).unwrap();
        for (p, q) in [(1, 3), (1, 2)] {
            let mag = theta(GroupSpec::free_abelian(2).unwrap(), Some(Flux::rational(p, q).unwrap()), &grid, 1e-10).unwrap();
            for (a, b) in mag.samples.iter().zip(&plain.samples) {
                assert!(a.value <= b.value + a.certified_error + b.certified_error);
            }
        }
    }

    #[test]
    fn tree_theta_matches_explicit_ball() {
        let s = tree_theta(4, 0.8, 1e-10).unwrap();
        let g = build_ball(GroupSpec::free_group(2).unwrap(), 8).unwrap();
        let b = ball_theta(&g, None, 0.8, 1e-10).unwrap();
        assert!((s.value - b.value).abs() <= s.certified_error + b.certified_error);
        assert!(s.certified_error < 1e-10);
    }

    #[test]
    fn ns_fit_on_power_law() {
        let pts: Vec<(f64, f64)> = geometric_grid(50.0, 500.0, 12).iter().map(|&t| (t, t.powi(-2))).collect();
        let est = ns_estimate(&ThetaSeries::synthetic(&pts), (50.0, 500.0)).unwrap();
        assert!((est.beta - 2.0).abs() < 1e-10);
        assert!(est.ok);
        let few = ThetaSeries::synthetic(&pts[..4]);
        assert!(!ns_estimate(&few, (50.0, 500.0)).unwrap().ok);
    }

    #[test]
    fn bad_grids_rejected() {
        let z = GroupSpec::free_abelian(1).unwrap();
        assert!(theta(z, None, &[1.0, 0.5], 1e-8).is_err());
        assert!(theta(z, None, &[], 1e-8).is_err());
        assert!(theta(GroupSpec::free_group(2).unwrap(), Some(Flux::Real(0.3)), &[1.0], 1e-8).is_err());
    }
}
