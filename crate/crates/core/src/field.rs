use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;
use rand::Rng;

/// A complex-valued function on the vertices of a truncation, indexed by vertex id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VertexFunction(Vec<C64>);

impl VertexFunction {
    pub fn zeros(n: usize) -> Self {
        VertexFunction(vec![C64::new(0.0, 0.0); n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        VertexFunction(vec![C64::new(c, 0.0); n])
    }

    /// Indicator of a single vertex.
    pub fn delta(n: usize, v: usize) -> Self {
        let mut f = Self::zeros(n);
        f.0[v] = C64::new(1.0, 0.0);
        f
    }

    pub fn from_real(values: &[f64]) -> Self {
        VertexFunction(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_complex(values: Vec<C64>) -> Self {
        VertexFunction(values)
    }

    /// Independent standard complex Gaussian-like entries on the first `support` vertices.
    pub fn random_complex(n: usize, support: usize, rng: &mut impl Rng) -> Self {
        let mut f = Self::zeros(n);
        for z in f.0.iter_mut().take(support) {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<C64> {
        self.0
    }

    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.re).collect()
    }

    /// Pointwise modulus `|f|` as a (real) vertex function.
    pub fn abs(&self) -> Self {
        VertexFunction(self.0.iter().map(|z| C64::new(z.norm(), 0.0)).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.0.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

impl Index<usize> for VertexFunction {
    type Output = C64;

    fn index(&self, v: usize) -> &C64 {
        &self.0[v]
    }
}

impl IndexMut<usize> for VertexFunction {
    fn index_mut(&mut self, v: usize) -> &mut C64 {
        &mut self.0[v]
    }
}

impl From<Vec<C64>> for VertexFunction {
    fn from(v: Vec<C64>) -> Self {
        VertexFunction(v)
    }
}
