//! Lowest eigenpairs and full spectra of the self-adjoint operators.
//!
//! Small operators go through a dense Hermitian eigensolver. Larger ones use
//! inverse iteration with a shift kept strictly below the bottom of the
//! spectrum, so every inner solve is a positive definite CG solve. The shift
//! comes from a certified lower bound: the Collatz–Wielandt ratio for
//! operators with nonpositive off-diagonal part, and the bottom of the
//! comparison operator `|A|` otherwise (Kato).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::VertexFunction;
use crate::linalg::{conjugate_gradient, dot, hermitian_eigen, norm};
use crate::sparse::SparseHermitian;

/// Largest dimension handed to the dense solver by [`lowest_eigenpair`].
pub const DENSE_LIMIT: usize = 2000;
/// Largest dimension [`eigen_decomposition`] accepts.
pub const DENSE_CAP: usize = 6000;

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Residual tolerance `|Av - λv| <= tol |v|`.
    pub tol: f64,
    pub max_iter: usize,
    pub dense_limit: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_iter: 2000,
            dense_limit: DENSE_LIMIT,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    /// Positive with `v(root) = 1` for operators with nonpositive off-diagonal
    /// part; unit norm with `v(root)` real and nonnegative otherwise.
    pub vector: VertexFunction,
    pub residual: f64,
    pub iterations: usize,
    /// Certified lower bound on the bottom of the spectrum, when one is available.
    pub lower_bound: Option<f64>,
}

/// Lowest eigenpair with default options.
pub fn lowest_eigenpair(a: &SparseHermitian, tol: f64) -> Result<Eigenpair> {
    lowest_eigenpair_with(
        a,
        EigenOptions {
            tol,
            ..EigenOptions::default()
        },
        None,
    )
}

pub fn lowest_eigenpair_with(
    a: &SparseHermitian,
    opts: EigenOptions,
    warm_start: Option<&[C64]>,
) -> Result<Eigenpair> {
    if !(opts.tol > 0.0) {
        return Err(Error::domain("eigen tolerance must be positive"));
    }
    if a.dim() == 0 {
        return Err(Error::domain("empty operator"));
    }
    let mut pair = if a.dim() <= opts.dense_limit {
        dense_lowest(a)?
    } else if a.has_nonpositive_offdiagonal() {
        inverse_iteration(a, opts, warm_start, None)?
    } else {
        let cmp = lowest_eigenpair_with(&a.comparison_operator(), opts, None)?;
        let lower = cmp.lower_bound.unwrap_or(cmp.value - opts.tol);
        inverse_iteration(a, opts, warm_start, Some(lower))?
    };
    normalize(a, &mut pair.vector);
    pair.residual = relative_residual(a, pair.value, &pair.vector);
    if pair.residual > opts.tol {
        return Err(Error::Numeric {
            method: "lowest eigenpair",
            residual: pair.residual,
            iterations: pair.iterations,
        });
    }
    Ok(pair)
}

/// `|Av - λv| / |v|` in the operator's inner product.
pub fn relative_residual(a: &SparseHermitian, lambda: f64, v: &VertexFunction) -> f64 {
    let av = a.apply_fn(v);
    let r: Vec<C64> = av.values().iter().zip(v.values()).map(|(x, y)| x - y * lambda).collect();
    norm(a.weights(), &r) / norm(a.weights(), v.values())
}

fn normalize(a: &SparseHermitian, v: &mut VertexFunction) {
    let root = a.root();
    if a.has_nonpositive_offdiagonal() {
        // Perron vector: one sign throughout
        let anchor = if v[root].norm() > 0.0 {
            v[root]
        } else {
            v.values().iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap()
        };
        let s = anchor.norm() / anchor;
        for z in v.values_mut() {
            *z = C64::new((*z * s).re, 0.0);
        }
        let scale = v[root].re;
        if scale > 0.0 {
            v.values_mut().iter_mut().for_each(|z| *z /= scale);
        }
    } else {
        let n = norm(a.weights(), v.values());
        let phase = if v[root].norm() > 0.0 {
            v[root].norm() / v[root]
        } else {
            C64::new(1.0, 0.0)
        };
        v.values_mut().iter_mut().for_each(|z| *z *= phase / n);
    }
}

/// Full eigen-decomposition; eigenvectors are the columns, orthonormal in
/// the operator's (possibly weighted) inner product.
#[derive(Clone, Debug)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl DenseEigen {
    pub fn vector(&self, k: usize) -> VertexFunction {
        VertexFunction::from_complex(self.vectors.column(k).iter().copied().collect())
    }
}

pub fn eigen_decomposition(a: &SparseHermitian) -> Result<DenseEigen> {
    if a.dim() > DENSE_CAP {
        return Err(Error::Resource {
            what: "dense eigen-decomposition".into(),
            cap: DENSE_CAP,
            hint: format!("operator has dimension {}", a.dim()),
        });
    }
    let (values, mut vectors) = hermitian_eigen(a.to_dense_symmetric());
    if a.weights().is_some() {
        for i in 0..a.dim() {
            let s = 1.0 / a.weight(i).sqrt();
            vectors.row_mut(i).iter_mut().for_each(|z| *z *= s);
        }
    }
    Ok(DenseEigen { values, vectors })
}

/// All eigenvalues, ascending.
pub fn spectrum(a: &SparseHermitian) -> Result<Vec<f64>> {
    if a.dim() > DENSE_CAP {
        return Err(Error::Resource {
            what: "dense spectrum".into(),
            cap: DENSE_CAP,
            hint: format!("operator has dimension {}", a.dim()),
        });
    }
    let mut values: Vec<f64> = a.to_dense_symmetric().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn dense_lowest(a: &SparseHermitian) -> Result<Eigenpair> {
    let d = eigen_decomposition(a)?;
    Ok(Eigenpair {
        value: d.values[0],
        vector: d.vector(0),
        residual: 0.0,
        iterations: 0,
        lower_bound: None,
    })
}

/// `min_i (Av)_i / v_i` over a strictly positive `v`; a lower bound on the
/// bottom of the spectrum when the off-diagonal part is nonpositive.
fn collatz_wielandt(av: &[C64], v: &[C64]) -> Option<f64> {
    let mut lo = f64::INFINITY;
    for (x, y) in av.iter().zip(v) {
        if !(y.re > 0.0) {
            return None;
        }
        lo = lo.min(x.re / y.re);
    }
    Some(lo)
}

fn inverse_iteration(
    a: &SparseHermitian,
    opts: EigenOptions,
    warm_start: Option<&[C64]>,
    fixed_lower: Option<f64>,
) -> Result<Eigenpair> {
    let n = a.dim();
    let w = a.weights();
    let perron = fixed_lower.is_none();
    let mut v: Vec<C64> = match warm_start {
        Some(x) if x.len() == n => x.to_vec(),
        Some(x) => {
            // warm start from a smaller nested truncation: extend by a small positive value
            let floor = x.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min).max(1e-300);
            (0..n).map(|i| x.get(i).copied().unwrap_or(C64::new(floor, 0.0))).collect()
        }
        None => vec![C64::new(1.0, 0.0); n],
    };
    if !perron {
        // break any accidental symmetry of the constant vector
        for (i, z) in v.iter_mut().enumerate() {
            *z += C64::new(0.0, 1e-3 * ((i * 7919) % 13) as f64);
        }
    }
    let nv = norm(w, &v);
    v.iter_mut().for_each(|z| *z /= nv);

    let mut av = vec![C64::new(0.0, 0.0); n];
    a.apply(&v, &mut av);
    let mut theta = dot(w, &v, &av).re;
    let mut lower = fixed_lower.unwrap_or_else(|| a.gershgorin().0);
    if perron {
        if let Some(cw) = collatz_wielandt(&av, &v) {
            lower = lower.max(cw);
        }
    }
    let mut x = v.clone();
    for it in 1..=opts.max_iter {
        let res: Vec<C64> = av.iter().zip(&v).map(|(p, q)| p - q * theta).collect();
        if norm(w, &res) <= 0.5 * opts.tol {
            return Ok(Eigenpair {
                value: theta,
                vector: VertexFunction::from_complex(v),
                residual: 0.0,
                iterations: it - 1,
                lower_bound: Some(lower),
            });
        }
        let gap = (theta - lower).max(1e-14);
        let mu = lower - 0.01 * gap;
        let report = conjugate_gradient(
            |p, q| {
                a.apply(p, q);
                for (qi, pi) in q.iter_mut().zip(p) {
                    *qi -= pi * mu;
                }
            },
            &v,
            &mut x,
            w,
            (1e-3 * opts.tol).max(1e-15),
            20 * n + 1000,
        );
        if !report.residual.is_finite() {
            return Err(Error::Numeric {
                method: "shifted inverse iteration",
                residual: report.residual,
                iterations: it,
            });
        }
        let nx = norm(w, &x);
        v.iter_mut().zip(&x).for_each(|(vi, xi)| *vi = xi / nx);
        x.clone_from(&v);
        a.apply(&v, &mut av);
        theta = dot(w, &v, &av).re;
        if perron {
            if let Some(cw) = collatz_wielandt(&av, &v) {
                lower = lower.max(cw.min(theta));
            }
        }
    }
    let res: Vec<C64> = av.iter().zip(&v).map(|(p, q)| p - q * theta).collect();
    Err(Error::Numeric {
        method: "shifted inverse iteration",
        residual: norm(w, &res),
        iterations: opts.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_ball, GroupSpec, RadialTree};
    use crate::magnetic::{dirichlet_matrix, harper_multiplier, truncation_dirichlet, Flux};
    use std::f64::consts::PI;

    fn forced_sparse() -> EigenOptions {
        EigenOptions {
            dense_limit: 0,
            ..EigenOptions::default()
        }
    }

    #[test]
    fn path_dirichlet_closed_form() {
        for r in [2usize, 5, 25] {
            let g = build_ball(GroupSpec::free_abelian(1).unwrap(), r).unwrap();
            let a = dirichlet_matrix(&g, None).unwrap();
            let expect = 2.0 - 2.0 * (PI / (2 * r) as f64).cos();
            let dense = lowest_eigenpair(&a, 1e-10).unwrap();
            assert!((dense.value - expect).abs() < 1e-12);
            let sparse = lowest_eigenpair_with(&a, forced_sparse(), None).unwrap();
            assert!((sparse.value - expect).abs() < 1e-10, "{} vs {expect}", sparse.value);
            assert!((sparse.vector[0].re - 1.0).abs() < 1e-14);
            assert!(sparse.vector.values().iter().all(|z| z.re > 0.0));
        }
    }

    #[test]
    fn radial_quotient_matches_explicit_ball() {
        let g = build_ball(GroupSpec::free_group(2).unwrap(), 6).unwrap();
        let full = lowest_eigenpair(&dirichlet_matrix(&g, None).unwrap(), 1e-10).unwrap();
        let q = RadialTree::new(4, 6).unwrap();
        let quot = lowest_eigenpair_with(&truncation_dirichlet(&q).unwrap(), forced_sparse(), None).unwrap();
        assert!((full.value - quot.value).abs() < 1e-10);
        for v in g.interior() {
            let d = g.dist_from_root(v);
            assert!((full.vector[v].re - quot.vector[d].re).abs() < 1e-8);
        }
    }

    #[test]
    fn magnetic_sparse_path() {
        let g = build_ball(GroupSpec::free_abelian(2).unwrap(), 6).unwrap();
        let s = harper_multiplier(&g, Flux::rational(1, 3).unwrap()).unwrap();
        let a = dirichlet_matrix(&g, Some(&s)).unwrap();
        let dense = lowest_eigenpair(&a, 1e-10).unwrap();
        let sparse = lowest_eigenpair_with(
            &a,
            EigenOptions {
                max_iter: 20000,
                ..forced_sparse()
            },
            None,
        )
        .unwrap();
        assert!((dense.value - sparse.value).abs() < 1e-9);
    }

    #[test]
    fn dense_decomposition_is_orthonormal_with_weights() {
        let q = RadialTree::new(4, 5).unwrap();
        let a = truncation_dirichlet(&q).unwrap();
        let d = eigen_decomposition(&a).unwrap();
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                let ip = dot(a.weights(), d.vector(i).values(), d.vector(j).values());
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((ip - e).norm() < 1e-10);
            }
            assert!(relative_residual(&a, d.values[i], &d.vector(i)) < 1e-10);
        }
    }

    #[test]
    fn non_positive_tolerance_rejected() {
        let g = build_ball(GroupSpec::free_abelian(1).unwrap(), 3).unwrap();
        assert!(lowest_eigenpair(&dirichlet_matrix(&g, None).unwrap(), 0.0).is_err());
    }
}
