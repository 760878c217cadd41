//! One-dimensional Gauss rules and compensated summation.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

/// Gauss–Jacobi rule on `[-1, 1]` for the weight `(1 - x)^a (1 + x)^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl GaussJacobi {
    /// Golub–Welsch: eigen-decomposition of the symmetric Jacobi matrix.
    ///
    /// Panics unless `n >= 1` and `a, b > -1`.
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1 (got {a}, {b})");
        let mut jm = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let s = 2.0 * kf + a + b;
            let diag = if k == 0 {
                (b - a) / (a + b + 2.0)
            } else {
                (b * b - a * a) / (s * (s + 2.0))
            };
            jm[(k, k)] = if diag.is_finite() { diag } else { 0.0 };
            if k + 1 < n {
                let k1 = kf + 1.0;
                let s1 = 2.0 * k1 + a + b;
                // For k = 0 the factor (k1 + a + b)/(s1 - 1) is 1; writing it out
                // avoids 0/0 when a + b = -1.
                let ratio = if k == 0 { 1.0 } else { (k1 + a + b) / (s1 - 1.0) };
                let off = 2.0 / s1 * (k1 * (k1 + a) * (k1 + b) * ratio / (s1 + 1.0)).sqrt();
                jm[(k, k + 1)] = off;
                jm[(k + 1, k)] = off;
            }
        }
        let mu0 = ((a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
            - ln_gamma(a + b + 2.0))
        .exp();
        let eig = jm.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            a,
            b,
        }
    }

    pub fn legendre(n: usize) -> Self {
        Self::new(n, 0.0, 0.0)
    }

    /// `∫_lo^hi f(x) dx` for the Legendre case (`a = b = 0`), else the weighted integral
    /// `∫_lo^hi ((hi - x)/(hi - lo)·2)^a ((x - lo)/(hi - lo)·2)^b f(x) dx`.
    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = Neumaier::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.sum()
    }
}

/// Neumaier's improved Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let g = GaussJacobi::legendre(5);
        // degree 9 is exact for 5 nodes
        let v = g.integrate(0.0, 2.0, |x| x.powi(9));
        assert_relative_eq!(v, 2f64.powi(10) / 10.0, max_relative = 1e-13);
        assert_relative_eq!(g.weights.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn jacobi_handles_inverse_square_root_endpoints() {
        // ∫_{-1}^{1} (1-x)^{-1/2} (1+x)^{-1/2} dx = pi
        let g = GaussJacobi::new(24, -0.5, -0.5);
        assert_relative_eq!(g.weights.iter().sum::<f64>(), std::f64::consts::PI, max_relative = 1e-13);
        // Chebyshev nodes cos((2k - 1)π / 2n) with equal weights π/n.
        for (k, (x, w)) in g.nodes.iter().rev().zip(&g.weights).enumerate() {
            let expect = ((2 * k + 1) as f64 * std::f64::consts::PI / 48.0).cos();
            assert!((x - expect).abs() < 1e-13 && (w - std::f64::consts::PI / 24.0).abs() < 1e-13);
        }
        // ∫_0^1 (1 - t^4)^{-1/2} dt with the (1 - t) singularity factored out:
        // (1 - t^4) = (1 - t)(1 + t)(1 + t^2).
        let g = GaussJacobi::new(24, -0.5, 0.0);
        let v = g.integrate(0.0, 1.0, |t| ((1.0 + t) * (1.0 + t * t)).powf(-0.5)) * (0.5f64).powf(-0.5);
        assert_relative_eq!(v, 1.311_028_777_146_06, max_relative = 1e-12);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let acc: Neumaier = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(acc.sum(), 2.0);
    }
}
