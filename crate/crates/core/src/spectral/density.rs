//! Spectral density functions, Fuglede–Kadison determinants and the
//! Riemann-sum resolvent functional.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{spectrum, DENSE_CAP};
use crate::error::{Error, Result};
use crate::graph::{build_ball, GroupKind, GroupSpec};
use crate::linalg::conjugate_gradient;
use crate::magnetic::{dirichlet_matrix, Flux, Multiplier};
use crate::sparse::SparseHermitian;

use super::theta::BlochBands;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    Bloch,
    DirichletCount,
}

/// Empirical spectral measure per fundamental-domain vertex.
///
/// Each atom carries mass `1 / atoms.len()`, so `F(λ)` is the fraction of
/// atoms at or below `λ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub method: DensityMethod,
    /// Brillouin grid points per axis, or the ball radius.
    pub resolution: usize,
    /// Small-λ exponent `growth / 2`, when the group has polynomial growth.
    pub exponent: Option<f64>,
    #[serde(skip)]
    atoms: Vec<f64>,
}

const BLOCH_ATOM_CAP: usize = 50_000_000;

impl DensityEstimate {
    pub fn from_atoms(mut atoms: Vec<f64>, method: DensityMethod, resolution: usize, exponent: Option<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("spectral atoms must be finite and nonempty"));
        }
        atoms.sort_by(f64::total_cmp);
        Ok(DensityEstimate {
            method,
            resolution,
            exponent,
            atoms,
        })
    }

    /// Band values of `Δ` (or the Harper operator) on a uniform Brillouin grid.
    ///
    /// Without flux the grid is offset by half a cell so no node sits on the
    /// zero mode.
    pub fn bloch(spec: GroupSpec, flux: Option<Flux>, n: usize) -> Result<Self> {
        let GroupKind::FreeAbelian { rank } = spec.kind() else {
            return Err(Error::domain("Bloch sampling needs a free abelian group"));
        };
        if n == 0 {
            return Err(Error::domain("Brillouin grid must have at least one point"));
        }
        let exponent = Some(rank as f64 / 2.0);
        match flux.filter(|f| f.value() != 0.0) {
            Some(f) => {
                if rank != 2 {
                    return Err(Error::domain("magnetic Bloch sampling is implemented on Z^2"));
                }
                if n * n * f.reduced().map_or(1, |(_, q)| q as usize) > BLOCH_ATOM_CAP {
                    return Err(Error::Resource {
                        what: "Bloch atoms".into(),
                        cap: BLOCH_ATOM_CAP,
                        hint: "lower the resolution".into(),
                    });
                }
                let bands = BlochBands::harper(f, n)?;
                DensityEstimate::from_atoms(bands.bands, DensityMethod::Bloch, n, exponent)
            }
            None => {
                let total = n.checked_pow(rank as u32).filter(|&m| m <= BLOCH_ATOM_CAP).ok_or_else(|| Error::Resource {
                    what: "Bloch atoms".into(),
                    cap: BLOCH_ATOM_CAP,
                    hint: "lower the resolution".into(),
                })?;
                let line: Vec<f64> = (0..n)
                    .map(|j| 2.0 - 2.0 * (2.0 * PI * (j as f64 + 0.5) / n as f64).cos())
                    .collect();
                let atoms: Vec<f64> = (0..total)
                    .into_par_iter()
                    .map(|mut idx| {
                        let mut s = 0.0;
                        for _ in 0..rank {
                            s += line[idx % n];
                            idx /= n;
                        }
                        s
                    })
                    .collect();
                DensityEstimate::from_atoms(atoms, DensityMethod::Bloch, n, exponent)
            }
        }
    }

    /// Eigenvalues of the Dirichlet problem on the ball of `radius`.
    pub fn dirichlet_count(spec: GroupSpec, sigma: Option<&Multiplier>, radius: usize) -> Result<Self> {
        let g = build_ball(spec, radius)?;
        let a = dirichlet_matrix(&g, sigma)?;
        if a.dim() > DENSE_CAP {
            return Err(Error::Resource {
                what: "Dirichlet ball interior".into(),
                cap: DENSE_CAP,
                hint: format!("radius {radius} gives {} interior vertices", a.dim()),
            });
        }
        let exponent = spec.polynomial_growth().map(|g| g / 2.0);
        DensityEstimate::from_atoms(spectrum(&a)?, DensityMethod::DirichletCount, radius, exponent)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// `F(λ)`.
    pub fn evaluate(&self, lambda: f64) -> f64 {
        self.atoms.partition_point(|&a| a <= lambda) as f64 / self.atoms.len() as f64
    }

    /// Largest atom, the top of the sampled spectrum.
    pub fn top(&self) -> f64 {
        *self.atoms.last().expect("nonempty")
    }

    /// `(λ, F(λ))` on `points` equally spaced values over `[0, top]`.
    pub fn curve(&self, points: usize) -> Vec<(f64, f64)> {
        let top = self.top();
        (0..points)
            .map(|i| {
                let l = top * i as f64 / (points - 1).max(1) as f64;
                (l, self.evaluate(l))
            })
            .collect()
    }

    /// Density of `A + cI`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.atoms.iter_mut().for_each(|a| *a += c);
        out.exponent = None;
        out
    }

    /// `sup |F - G|` over a uniform grid of `[lo, hi]`.
    pub fn sup_distance(&self, other: &DensityEstimate, lo: f64, hi: f64, points: usize) -> f64 {
        (0..points)
            .map(|i| {
                let l = lo + (hi - lo) * i as f64 / (points - 1).max(1) as f64;
                (self.evaluate(l) - other.evaluate(l)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Extremes of `F(λ) / λ^γ` on a geometric grid of `[lo, hi]`.
    pub fn power_law_constants(&self, gamma: f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
        let mut c1 = f64::INFINITY;
        let mut c2: f64 = 0.0;
        for i in 0..points {
            let l = lo * (hi / lo).powf(i as f64 / (points - 1).max(1) as f64);
            let r = self.evaluate(l) / l.powf(gamma);
            c1 = c1.min(r);
            c2 = c2.max(r);
        }
        (c1, c2)
    }
}

/// Log-determinant estimate from a spectral density.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogdetEstimate {
    /// `ln det(A)` including the normalisation correction.
    pub value: f64,
    /// Integration-by-parts form at `ε` before extrapolation, normalised units.
    pub raw: f64,
    /// `(-ln ε) F(ε)`.
    pub boundary_term: f64,
    pub epsilon: f64,
    pub extrapolated: bool,
    /// The spectrum was divided by this before integrating.
    pub scale: f64,
    /// `ln(scale) (1 - F(0))`.
    pub scale_correction: f64,
    pub c2: Option<f64>,
    /// `-C_2 / γ` in normalised units.
    pub lower_bound: Option<f64>,
    /// Zero modes or an unknown small-λ exponent with mass below `ε`.
    pub bias_flag: bool,
}

impl LogdetEstimate {
    /// Normalised part of the estimate, the quantity the lower bound refers to.
    pub fn normalised(&self) -> f64 {
        self.value - self.scale_correction
    }
}

/// `(-ln ε) F(ε) - ∫_ε^1 F(μ)/μ dμ` for the normalised empirical measure.
fn ibp_form(atoms: &[f64], scale: f64, eps: f64) -> (f64, f64) {
    let w = 1.0 / atoms.len() as f64;
    let f_eps = atoms.partition_point(|&a| a / scale <= eps) as f64 * w;
    let boundary = -eps.ln() * f_eps;
    let integral: f64 = atoms.iter().map(|&a| -(a / scale).max(eps).ln()).sum::<f64>() * w;
    (boundary - integral, boundary)
}

/// `ln det(A) = ∫ ln λ dF(λ)` through the integration-by-parts form at
/// `ε_floor`, extrapolated over `{4ε, 2ε, ε}` in the basis `{1, ε^γ ln ε, ε^γ}`.
pub fn logdet_from_density(d: &DensityEstimate, eps_floor: f64) -> Result<LogdetEstimate> {
    if !(eps_floor > 0.0 && eps_floor < 0.25) {
        return Err(Error::domain("ε_floor must lie in (0, 1/4)"));
    }
    let scale = d.top() * 1.01;
    if !(scale > 0.0) {
        return Err(Error::domain("density has no positive spectrum"));
    }
    let atoms = d.atoms();
    let zero_mass = d.evaluate(1e-14 * scale);
    let eps = eps_floor;
    let (raw, boundary) = ibp_form(atoms, scale, eps);
    let (v2, _) = ibp_form(atoms, scale, 2.0 * eps);
    let (v4, _) = ibp_form(atoms, scale, 4.0 * eps);
    let mass_below = d.evaluate(4.0 * eps * scale) > 0.0;

    let (normalised, extrapolated) = match (mass_below, d.exponent) {
        (true, Some(gamma)) => {
            let row = |e: f64| [1.0, e.powf(gamma) * e.ln(), e.powf(gamma)];
            let (r1, r2, r3) = (row(4.0 * eps), row(2.0 * eps), row(eps));
            let m = Matrix3::new(r1[0], r1[1], r1[2], r2[0], r2[1], r2[2], r3[0], r3[1], r3[2]);
            let c = m
                .lu()
                .solve(&Vector3::new(v4, v2, raw))
                .ok_or_else(|| Error::domain("singular extrapolation system"))?;
            (c[0], true)
        }
        _ => (raw, false),
    };
    let (c2, lower_bound) = match d.exponent {
        Some(gamma) if gamma > 0.0 => {
            let (_, c2) = d.power_law_constants(gamma, eps * scale, scale, 200);
            let c2 = c2 * scale.powf(gamma);
            (Some(c2), Some(-c2 / gamma))
        }
        _ => (None, None),
    };
    let scale_correction = scale.ln() * (1.0 - zero_mass);
    Ok(LogdetEstimate {
        value: normalised + scale_correction,
        raw,
        boundary_term: boundary,
        epsilon: eps,
        extrapolated,
        scale,
        scale_correction,
        c2,
        lower_bound,
        bias_flag: zero_mass > 0.0 || (mass_below && d.exponent.is_none()),
    })
}

/// Where the von Neumann trace is read off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSites {
    /// Root diagonal entry, the trace on a Cayley graph.
    Root,
    /// Normalised trace over all vertices, for finite fixtures.
    Average,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiemannSum {
    pub ell: u32,
    pub value: f64,
    /// Values of `k` whose solve missed its tolerance.
    pub failures: Vec<usize>,
    pub flagged: bool,
}

/// `S_ℓ = Σ_{k=1}^{n} tr((n-k) A + k I)^{-1}`, `n = 2^ℓ`.
///
/// Term `k` equals `(1/(n-k)) tr(A + k/(n-k))^{-1}`; the `k = n` term is `1/n`.
/// Requires `0 <= A <= 1`.
pub fn resolvent_riemann_sum(a: &SparseHermitian, ell: u32, sites: TraceSites) -> Result<RiemannSum> {
    if ell == 0 || ell > 20 {
        return Err(Error::domain("ℓ must lie in 1..=20"));
    }
    let (lo, hi) = a.gershgorin();
    if hi > 1.0 + 1e-12 {
        return Err(Error::precondition(format!("operator norm bound {hi} exceeds 1; rescale first")));
    }
    if lo < -1e-12 && crate::eigen::lowest_eigenpair(a, 1e-10)?.value < -1e-10 {
        return Err(Error::precondition("operator is not positive semidefinite"));
    }
    let n = 1usize << ell;
    let site_list: Vec<usize> = match sites {
        TraceSites::Root => vec![a.root()],
        TraceSites::Average => (0..a.dim()).collect(),
    };
    let terms: Vec<(f64, bool)> = (1..=n)
        .into_par_iter()
        .map(|k| {
            if k == n {
                return (1.0 / n as f64, true);
            }
            let (c1, c2) = ((n - k) as f64, k as f64);
            let mut ok = true;
            let mut acc = 0.0;
            for &s in &site_list {
                let (v, good) = resolvent_diagonal(a, c1, c2, s);
                acc += v;
                ok &= good;
            }
            (acc / site_list.len() as f64, ok)
        })
        .collect();
    let value = terms.iter().map(|t| t.0).sum();
    let failures: Vec<usize> = terms.iter().enumerate().filter(|(_, t)| !t.1).map(|(i, _)| i + 1).collect();
    Ok(RiemannSum {
        ell,
        value,
        flagged: !failures.is_empty(),
        failures,
    })
}

/// `((c1 A + c2 I)^{-1} δ_s)(s)` and whether the solve converged.
fn resolvent_diagonal(a: &SparseHermitian, c1: f64, c2: f64, s: usize) -> (f64, bool) {
    let n = a.dim();
    let mut b = vec![C64::new(0.0, 0.0); n];
    b[s] = C64::new(1.0, 0.0);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let rep = conjugate_gradient(
        |p, q| {
            a.apply(p, q);
            for (qi, pi) in q.iter_mut().zip(p) {
                *qi = *qi * c1 + pi * c2;
            }
        },
        &b,
        &mut x,
        a.weights(),
        1e-13,
        20 * n + 1000,
    );
    (x[s].re, rep.residual <= 1e-10)
}
