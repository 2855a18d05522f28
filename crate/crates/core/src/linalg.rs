//! Small numerical helpers shared by the operator modules.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Straight-line fit `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
}

pub fn least_squares_line(points: &[(f64, f64)]) -> LineFit {
    let w: Vec<f64> = vec![1.0; points.len()];
    weighted_least_squares_line(points, &w)
}

/// Weighted least squares; the residual is the weighted RMS.
pub fn weighted_least_squares_line(points: &[(f64, f64)], weights: &[f64]) -> LineFit {
    let sw: f64 = weights.iter().sum();
    let mx = points.iter().zip(weights).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = points.iter().zip(weights).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&(x, y), &w) in points.iter().zip(weights) {
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .zip(weights)
        .map(|(&(x, y), &w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    LineFit {
        slope,
        intercept,
        rms_residual: (rss / sw).sqrt(),
    }
}

pub(crate) fn dot(weights: Option<&[f64]>, a: &[C64], b: &[C64]) -> C64 {
    match weights {
        None => a.iter().zip(b).map(|(x, y)| x.conj() * y).sum(),
        Some(w) => a
            .iter()
            .zip(b)
            .zip(w)
            .map(|((x, y), w)| x.conj() * y * *w)
            .sum(),
    }
}

pub(crate) fn norm(weights: Option<&[f64]>, a: &[C64]) -> f64 {
    dot(weights, a, a).re.max(0.0).sqrt()
}

/// Outcome of a conjugate-gradient solve.
#[derive(Clone, Copy, Debug)]
pub struct CgReport {
    pub iterations: usize,
    /// Final relative residual `|b - Ax| / |b|`.
    pub residual: f64,
}

/// Conjugate gradients for an operator that is self-adjoint and positive
/// definite in the (optionally weighted) inner product. `x` holds the
/// initial guess on entry and the solution on exit.
pub fn conjugate_gradient(
    apply: impl Fn(&[C64], &mut [C64]),
    b: &[C64],
    x: &mut [C64],
    weights: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> CgReport {
    let n = b.len();
    let bnorm = norm(weights, b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        return CgReport {
            iterations: 0,
            residual: 0.0,
        };
    }
    let mut ax = vec![C64::new(0.0, 0.0); n];
    apply(x, &mut ax);
    let mut r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(weights, &r, &r).re;
    let mut ap = ax;
    let mut it = 0;
    while it < max_iter && rr.sqrt() > rel_tol * bnorm {
        apply(&p, &mut ap);
        let pap = dot(weights, &p, &ap).re;
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = dot(weights, &r, &r).re;
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
        it += 1;
    }
    // recompute the true residual rather than trusting the recurrence
    let mut ax = vec![C64::new(0.0, 0.0); n];
    apply(x, &mut ax);
    let res: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    CgReport {
        iterations: it,
        residual: norm(weights, &res) / bnorm,
    }
}

/// Eigen-decomposition of a dense Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `P(N > n)` for `N ~ Poisson(mean)`, accurate in the far tail.
pub fn poisson_tail(mean: f64, n: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let ln_fact = |k: usize| -> f64 { (1..=k).map(|i| (i as f64).ln()).sum() };
    let k0 = n + 1;
    if (k0 as f64) < mean - 40.0 * mean.sqrt() - 10.0 {
        return 1.0;
    }
    // sum pmf(k) for k >= k0 upward; terms rise to the mode then decay
    let mut term = (-mean + k0 as f64 * mean.ln() - ln_fact(k0)).exp();
    let mut sum = 0.0;
    let mut k = k0;
    loop {
        sum += term;
        k += 1;
        term *= mean / k as f64;
        if (k as f64) > mean && (term == 0.0 || term <= sum * 1e-18) {
            break;
        }
    }
    sum.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_exact() {
        let pts: Vec<_> = (1..10).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let f = least_squares_line(&pts);
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!((f.intercept - 3.0).abs() < 1e-13);
        assert!(f.rms_residual < 1e-13);
    }

    #[test]
    fn poisson_tail_matches_direct_sum() {
        for &(mean, n) in &[(4.0f64, 3usize), (4.0, 25), (20.0, 60), (0.5, 0)] {
            let mut p = (-mean).exp();
            let mut cdf = p;
            for k in 1..=n {
                p *= mean / k as f64;
                cdf += p;
            }
            let mut tail = 0.0;
            let mut q = p;
            for k in n + 1..n + 400 {
                q *= mean / k as f64;
                tail += q;
            }
            let direct = if cdf < 0.5 { 1.0 - cdf } else { tail };
            let got = poisson_tail(mean, n);
            assert!(
                (got - direct).abs() <= 1e-12 * direct + 1e-15,
                "{mean} {n}: {got} vs {direct}"
            );
        }
    }

    #[test]
    fn cg_solves_spd_system() {
        // 1-D Dirichlet Laplacian plus identity
        let n = 50;
        let apply = |x: &[C64], y: &mut [C64]| {
            for i in 0..n {
                let mut v = x[i] * 3.0;
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                y[i] = v;
            }
        };
        let b: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let mut x = vec![C64::new(0.0, 0.0); n];
        let rep = conjugate_gradient(apply, &b, &mut x, None, 1e-13, 500);
        assert!(rep.residual < 1e-12);
    }
}
