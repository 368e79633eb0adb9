//! Dense real polynomials in the monomial basis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real polynomial stored with ascending coefficients, `coeffs[j]` multiplying `x^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn monomial(degree: usize) -> Self {
        let mut c = vec![0.0; degree + 1];
        c[degree] = 1.0;
        Polynomial::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::constant(0.0);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Polynomial {
        let mut c = vec![0.0];
        c.extend(self.coeffs.iter().enumerate().map(|(j, &v)| v / (j + 1) as f64));
        Polynomial::new(c)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new(
            (0..n)
                .map(|j| {
                    self.coeffs.get(j).copied().unwrap_or(0.0)
                        + other.coeffs.get(j).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(c)
    }

    /// The polynomial `x -> p(s*x + t)`.
    pub fn compose_affine(&self, s: f64, t: f64) -> Polynomial {
        let inner = Polynomial::new(vec![t, s]);
        let mut acc = Polynomial::constant(0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(&inner).add(&Polynomial::constant(c));
        }
        acc
    }

    /// Complex roots from the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        m.complex_eigenvalues().iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_calculus() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 24.0);
        assert_eq!(p.derivative().coeffs(), &[-2.0, 0.0, 9.0]);
        let back = p.derivative().antiderivative();
        assert_eq!(back.coeffs(), &[0.0, -2.0, 0.0, 3.0]);
    }

    #[test]
    fn trailing_zeros_trimmed() {
        assert_eq!(Polynomial::new(vec![1.0, 0.0, 0.0]).degree(), 0);
        assert_eq!(Polynomial::new(vec![]).coeffs(), &[0.0]);
    }

    #[test]
    fn affine_composition() {
        let p = Polynomial::new(vec![0.5, 0.0, 2.0]);
        let q = p.compose_affine(3.0, -1.0);
        for x in [-1.3, 0.0, 0.7, 2.1] {
            assert!((q.eval(x) - p.eval(3.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn companion_roots() {
        // (x-1)(x+2)(x^2+1)
        let p = Polynomial::new(vec![-1.0, 1.0])
            .mul(&Polynomial::new(vec![2.0, 1.0]))
            .mul(&Polynomial::new(vec![1.0, 0.0, 1.0]));
        let mut r = p.roots();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        assert!((r[0] - Complex64::new(-2.0, 0.0)).norm() < 1e-10);
        assert!((r[1] - Complex64::new(0.0, -1.0)).norm() < 1e-10);
        assert!((r[2] - Complex64::new(0.0, 1.0)).norm() < 1e-10);
        assert!((r[3] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }
}
