//! Closed-form and brute-force reference values used to validate the
//! numerical kernels. Nothing here shares code with the production paths.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `e^{-x} I_n(x)` from the power series, summed in log space.
pub fn scaled_bessel_i(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let ln_half = half.ln();
    let ln_fact_n: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
    let mut logs = Vec::new();
    let mut lt = n as f64 * ln_half - ln_fact_n - x;
    let mut peak = lt;
    let mut k = 0u64;
    loop {
        logs.push(lt);
        peak = peak.max(lt);
        k += 1;
        lt += 2.0 * ln_half - (k as f64).ln() - ((k + n as u64) as f64).ln();
        if (k as f64) > half + 2.0 && lt < peak - 40.0 {
            break;
        }
    }
    let s: f64 = logs.iter().map(|l| (l - peak).exp()).sum();
    (peak + s.ln()).exp()
}

/// `p_t(x, y) = e^{-2dt} Π I_{|x_i - y_i|}(2t)` on `Z^d`.
pub fn bessel_zd(t: f64, x: &[i32], y: &[i32]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::domain("points must have the same positive dimension"));
    }
    if t < 0.0 {
        return Err(Error::domain("time must be nonnegative"));
    }
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| scaled_bessel_i((a - b).unsigned_abs(), 2.0 * t))
        .product())
}

/// Bottom of the spectrum of the `valence`-regular tree, `d - 2 sqrt(d - 1)`.
pub fn kesten_tree(valence: usize) -> f64 {
    let d = valence as f64;
    d - 2.0 * (d - 1.0).sqrt()
}

/// Lowest Dirichlet eigenvalue of a path of `2r - 1` vertices.
pub fn path_dirichlet_lowest(r: usize) -> f64 {
    2.0 - 2.0 * (PI / (2 * r) as f64).cos()
}

/// Integrated density of states of `Z`, `arccos(1 - λ/2) / π` on `[0, 4]`.
pub fn z_density(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else if lambda >= 4.0 {
        1.0
    } else {
        (1.0 - lambda / 2.0).acos() / PI
    }
}

/// `q x q` Bloch matrix of the Harper operator at flux `p/q`, quasimomentum `(k1, k2)`.
///
/// Row `m` is the column class `m mod q` of the magnetic unit cell.
pub fn harper_bloch_matrix(p: i64, q: i64, k1: f64, k2: f64) -> DMatrix<C64> {
    let q = q as usize;
    let alpha = p as f64 / q as f64;
    let mut h = DMatrix::from_element(q, q, C64::new(0.0, 0.0));
    for m in 0..q {
        h[(m, m)] += C64::new(4.0 - 2.0 * (k2 - 2.0 * PI * alpha * m as f64).cos(), 0.0);
        if q == 1 {
            h[(m, m)] -= C64::new(2.0 * k1.cos(), 0.0);
        } else {
            let up = (m + 1) % q;
            let down = (m + q - 1) % q;
            h[(m, up)] -= C64::from_polar(1.0, k1);
            h[(m, down)] -= C64::from_polar(1.0, -k1);
        }
    }
    h
}

/// Minimum of the lowest Bloch band over a uniform `grid x grid` Brillouin grid.
pub fn harper_bloch_min(p: i64, q: i64, grid: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..grid {
        for j in 0..grid {
            let k1 = 2.0 * PI * i as f64 / grid as f64;
            let k2 = 2.0 * PI * j as f64 / grid as f64;
            let ev = harper_bloch_matrix(p, q, k1, k2).symmetric_eigenvalues();
            best = best.min(ev.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    best
}

/// `(1/2π) ∫ ln(a - 2 cos θ) dθ` for `a >= 2`.
fn log_mean_1d(a: f64) -> f64 {
    ((a + (a * a - 4.0).max(0.0).sqrt()) / 2.0).ln()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫ ln(2d - 2 Σ cos θ_i) dθ / (2π)^d`, the log-determinant of the `Z^d` Laplacian.
///
/// The innermost angle is integrated in closed form, the remaining ones by
/// nested adaptive Simpson over `[0, π]` using the evenness of the integrand.
pub fn green_logdet(d: usize) -> Result<f64> {
    match d {
        1 => Ok(log_mean_1d(2.0)),
        2 => Ok(adaptive_simpson(&|th| log_mean_1d(4.0 - 2.0 * th.cos()), 0.0, PI, 1e-13) / PI),
        3 => {
            let inner = |th1: f64| {
                adaptive_simpson(&|th2| log_mean_1d(6.0 - 2.0 * th1.cos() - 2.0 * th2.cos()), 0.0, PI, 1e-11) / PI
            };
            Ok(adaptive_simpson(&inner, 0.0, PI, 1e-10) / PI)
        }
        _ => Err(Error::domain("green_logdet is implemented for d in 1..=3")),
    }
}

/// Selector for [`oracle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    BesselZd,
    KestenTree,
    HarperBloch,
    GreenLogdet,
}

/// Parameters for [`oracle`]; unused fields are ignored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleParams {
    pub d: usize,
    pub t: f64,
    pub x: Vec<i32>,
    pub y: Vec<i32>,
    pub flux: (i64, i64),
    pub grid: usize,
}

/// Reference value by name.
pub fn oracle(kind: OracleKind, params: &OracleParams) -> Result<f64> {
    match kind {
        OracleKind::BesselZd => {
            let zero = vec![0; params.d.max(1)];
            let x = if params.x.is_empty() { &zero } else { &params.x };
            let y = if params.y.is_empty() { &zero } else { &params.y };
            bessel_zd(params.t, x, y)
        }
        OracleKind::KestenTree => {
            if params.d < 2 {
                return Err(Error::domain("tree valence must be at least 2"));
            }
            Ok(kesten_tree(params.d))
        }
        OracleKind::HarperBloch => {
            let (p, q) = params.flux;
            if q <= 0 {
                return Err(Error::domain("flux denominator must be positive"));
            }
            Ok(harper_bloch_min(p, q, params.grid.max(8)))
        }
        OracleKind::GreenLogdet => green_logdet(params.d),
    }
}
