//! One-dimensional polynomials and quadrature on intervals.
//!
//! Legendre polynomials `l_n` are orthogonal on `[-1, 1]`. The integrated
//! Legendre polynomials `L_n(x) = ∫_{-1}^{x} l_{n-1}` (`n >= 2`, with
//! `L_1(x) = x` so the recurrence starts) vanish at both end points and
//! are the building blocks of every higher-order shape function in
//! [`crate::nedelec_basis`].

use crate::error::{Error, Result};

/// Largest supported polynomial degree of the element.
pub const MAX_DEGREE: u32 = 10;

/// Largest supported Gauss rule.
pub const MAX_GAUSS_POINTS: usize = 64;

/// Validated element degree `p` in `1..=MAX_DEGREE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolynomialDegree(u32);

impl PolynomialDegree {
    pub fn new(p: u32) -> Result<Self> {
        if (1..=MAX_DEGREE).contains(&p) {
            Ok(Self(p))
        } else {
            Err(Error::Config(format!(
                "polynomial degree {p} outside 1..={MAX_DEGREE}"
            )))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

/// Legendre polynomial `l_n(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let c = ((2.0 * kf + 1.0) * x * b - kf * a) / (kf + 1.0);
                a = b;
                b = c;
            }
            b
        }
    }
}

/// Derivative `l_n'(x)`, using `l'_{k+1} = l'_{k-1} + (2k+1) l_k`.
pub fn legendre_derivative(n: usize, x: f64) -> f64 {
    let mut t = LegendreTable::new(n + 1);
    t.fill(x);
    t.dl[n]
}

/// Integrated Legendre polynomial `L_n(x)`, defined for `n >= 1`.
pub fn integrated_legendre(n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Config(
            "integrated Legendre index must be at least 1".into(),
        ));
    }
    let mut t = LegendreTable::new(n);
    t.fill(x);
    Ok(t.il[n])
}

/// Values of `l_n`, `l_n'` and `L_n` for `n = 0..=max` at one point.
///
/// `il[0]` is unused and left at zero.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub l: Vec<f64>,
    pub dl: Vec<f64>,
    pub il: Vec<f64>,
}

impl LegendreTable {
    pub fn new(max: usize) -> Self {
        let n = max.max(1) + 1;
        Self {
            l: vec![0.0; n],
            dl: vec![0.0; n],
            il: vec![0.0; n],
        }
    }

    pub fn max(&self) -> usize {
        self.l.len() - 1
    }

    pub fn fill(&mut self, x: f64) {
        let m = self.max();
        self.l[0] = 1.0;
        self.l[1] = x;
        self.dl[0] = 0.0;
        self.dl[1] = 1.0;
        for k in 1..m {
            let kf = k as f64;
            self.l[k + 1] = ((2.0 * kf + 1.0) * x * self.l[k] - kf * self.l[k - 1]) / (kf + 1.0);
            self.dl[k + 1] = self.dl[k - 1] + (2.0 * kf + 1.0) * self.l[k];
        }
        self.il[0] = 0.0;
        self.il[1] = x;
        if m >= 2 {
            self.il[2] = 0.5 * (x * x - 1.0);
        }
        for k in 2..m {
            let kf = k as f64;
            self.il[k + 1] =
                ((2.0 * kf - 1.0) * x * self.il[k] - (kf - 2.0) * self.il[k - 1]) / (kf + 1.0);
        }
    }
}

/// Quadrature rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre rule with `n_points` nodes on `[a, b]`, exact for degree `2n-1`.
pub fn gauss_rule(n_points: usize, interval: [f64; 2]) -> Result<QuadratureRule> {
    if n_points == 0 || n_points > MAX_GAUSS_POINTS {
        return Err(Error::Config(format!(
            "Gauss rule size {n_points} outside 1..={MAX_GAUSS_POINTS}"
        )));
    }
    let [a, b] = interval;
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::Config(format!("invalid interval [{a}, {b}]")));
    }
    let n = n_points;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on l_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureRule {
        points: nodes.iter().map(|&x| mid + half * x).collect(),
        weights: weights.iter().map(|&w| w * half).collect(),
    })
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut a, mut b) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let c = ((2.0 * kf + 1.0) * x * b - kf * a) / (kf + 1.0);
        a = b;
        b = c;
    }
    let nf = n as f64;
    (b, nf * (x * b - a) / (x * x - 1.0))
}

/// Tensor-product Gauss points on `[0,1]^dim`: `(point, weight)` with `x` fastest.
pub fn tensor_rule(dim: usize, n_points: usize) -> Result<Vec<([f64; 3], f64)>> {
    let r = gauss_rule(n_points, [0.0, 1.0])?;
    let mut out = Vec::with_capacity(n_points.pow(dim as u32));
    let nz = if dim == 3 { n_points } else { 1 };
    let ny = if dim >= 2 { n_points } else { 1 };
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..n_points {
                let mut x = [r.points[i], 0.0, 0.0];
                let mut w = r.weights[i];
                if dim >= 2 {
                    x[1] = r.points[j];
                    w *= r.weights[j];
                }
                if dim == 3 {
                    x[2] = r.points[k];
                    w *= r.weights[k];
                }
                out.push((x, w));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_closed_forms() {
        for &x in &[-1.0, -0.4, 0.0, 0.3, 1.0] {
            assert!((legendre(2, x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
            assert!((integrated_legendre(2, x).unwrap() - 0.5 * (x * x - 1.0)).abs() < 1e-15);
            assert!((integrated_legendre(3, x).unwrap() - 0.5 * (x * x * x - x)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(integrated_legendre(0, 0.1).is_err());
        assert!(gauss_rule(0, [0.0, 1.0]).is_err());
        assert!(gauss_rule(65, [0.0, 1.0]).is_err());
        assert!(gauss_rule(3, [1.0, 0.0]).is_err());
        assert!(PolynomialDegree::new(0).is_err());
        assert!(PolynomialDegree::new(11).is_err());
    }
}
