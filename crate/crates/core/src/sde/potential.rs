use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One function `V_i` of the slow-scale potential basis.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisTerm {
    /// `x^p / p` in one dimension, so that the derivative is `x^(p-1)`.
    Monomial { power: u32 },
    /// `|x|^2 / 2`.
    QuadraticNorm,
    /// `|x|^4 / 4`.
    QuarticNorm,
    /// `exp(-|x - c|^2)`.
    Gaussian { center: Vec<f64> },
}

impl BasisTerm {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            BasisTerm::Monomial { power } => x[0].powi(*power as i32) / f64::from(*power),
            BasisTerm::QuadraticNorm => 0.5 * norm_sq(x),
            BasisTerm::QuarticNorm => 0.25 * norm_sq(x).powi(2),
            BasisTerm::Gaussian { center } => (-dist_sq(x, center)).exp(),
        }
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            BasisTerm::Monomial { power } => out[0] = x[0].powi(*power as i32 - 1),
            BasisTerm::QuadraticNorm => out.copy_from_slice(x),
            BasisTerm::QuarticNorm => {
                let r2 = norm_sq(x);
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = r2 * xi;
                }
            }
            BasisTerm::Gaussian { center } => {
                let g = (-dist_sq(x, center)).exp();
                for ((o, xi), ci) in out.iter_mut().zip(x).zip(center) {
                    *o = -2.0 * (xi - ci) * g;
                }
            }
        }
    }

    fn hessian_into(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        out.fill(0.0);
        match self {
            BasisTerm::Monomial { power } => {
                let p = *power as i32;
                out[0] = if p == 1 {
                    0.0
                } else {
                    f64::from(p - 1) * x[0].powi(p - 2)
                };
            }
            BasisTerm::QuadraticNorm => {
                for i in 0..d {
                    out[i * d + i] = 1.0;
                }
            }
            BasisTerm::QuarticNorm => {
                let r2 = norm_sq(x);
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = 2.0 * x[i] * x[j] + if i == j { r2 } else { 0.0 };
                    }
                }
            }
            BasisTerm::Gaussian { center } => {
                let g = (-dist_sq(x, center)).exp();
                for i in 0..d {
                    for j in 0..d {
                        let dij = if i == j { 1.0 } else { 0.0 };
                        out[i * d + j] =
                            g * (4.0 * (x[i] - center[i]) * (x[j] - center[j]) - 2.0 * dij);
                    }
                }
            }
        }
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dist_sq(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// The known slow-scale functions `{V_i}`; the estimators fit one coefficient
/// (or one `d x d` block) per term.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowPotentialBasis {
    dim: usize,
    terms: Vec<BasisTerm>,
}

impl SlowPotentialBasis {
    pub fn new(dim: usize, terms: Vec<BasisTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if terms.is_empty() {
            return Err(Error::invalid("basis", "needs at least one term"));
        }
        for term in &terms {
            match term {
                BasisTerm::Monomial { power } => {
                    if dim != 1 {
                        return Err(Error::invalid("basis", "monomial terms are one-dimensional"));
                    }
                    if *power == 0 {
                        return Err(Error::invalid("basis", "monomial power must be >= 1"));
                    }
                }
                BasisTerm::Gaussian { center } if center.len() != dim => {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: center.len(),
                    })
                }
                _ => {}
            }
        }
        Ok(Self { dim, terms })
    }

    /// `V(x) = x^2 / 2` in one dimension.
    pub fn quadratic_1d() -> Self {
        Self {
            dim: 1,
            terms: vec![BasisTerm::Monomial { power: 2 }],
        }
    }

    /// `V(x) = (x^n/n, ..., x^2/2, x)`, highest power first.
    pub fn polynomial_1d(degree: u32) -> Result<Self> {
        let terms = (1..=degree)
            .rev()
            .map(|power| BasisTerm::Monomial { power })
            .collect();
        Self::new(1, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis functions `N`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn eval(&self, i: usize, x: &[f64]) -> f64 {
        self.terms[i].value(x)
    }

    pub fn eval_grad(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.terms[i].grad_into(x, &mut out);
        out
    }

    /// Row-major `d x d` Hessian of `V_i`.
    pub fn eval_hess(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        self.terms[i].hessian_into(x, &mut out);
        out
    }

    pub fn grad_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.terms[i].grad_into(x, out);
    }

    /// Writes the stacked gradient `(grad V_1(x), ..., grad V_N(x))` of length `d N`.
    pub fn stacked_gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        if d == 1 && self.all_monomials() {
            let xv = x[0];
            for (o, term) in out.iter_mut().zip(&self.terms) {
                if let BasisTerm::Monomial { power } = term {
                    *o = xv.powi(*power as i32 - 1);
                }
            }
            return;
        }
        for (i, term) in self.terms.iter().enumerate() {
            term.grad_into(x, &mut out[i * d..(i + 1) * d]);
        }
    }

    fn all_monomials(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t, BasisTerm::Monomial { .. }))
    }

    /// `sum_i w_i V_i(x)`.
    pub fn weighted_value(&self, weights: &[f64], x: &[f64]) -> f64 {
        self.terms
            .iter()
            .zip(weights)
            .map(|(t, w)| w * t.value(x))
            .sum()
    }
}

/// A one-dimensional periodic function given as a finite trigonometric series
/// `c + sum_k a_k cos(k w y) + b_k sin(k w y)` with `w = 2 pi / L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicComponent {
    period: f64,
    omega: f64,
    constant: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PeriodicComponent {
    pub fn new(period: f64, constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::invalid("period", "must be positive and finite"));
        }
        if cos.iter().chain(&sin).chain([&constant]).any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients", "must be finite"));
        }
        Ok(Self {
            period,
            omega: 2.0 * PI / period,
            constant,
            cos,
            sin,
        })
    }

    pub fn zero() -> Self {
        Self::new(2.0 * PI, 0.0, vec![], vec![]).unwrap()
    }

    /// `sin(y)`, period `2 pi`.
    pub fn sine() -> Self {
        Self::new(2.0 * PI, 0.0, vec![], vec![1.0]).unwrap()
    }

    /// `sin(y)^2 = (1 - cos 2y) / 2`, period `pi`.
    pub fn sine_squared() -> Self {
        Self::new(PI, 0.5, vec![-0.5], vec![]).unwrap()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_constant(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }

    pub fn eval(&self, y: f64) -> f64 {
        let mut acc = self.constant;
        for k in 0..self.cos.len().max(self.sin.len()) {
            let (s, c) = ((k + 1) as f64 * self.omega * y).sin_cos();
            acc += self.cos.get(k).copied().unwrap_or(0.0) * c
                + self.sin.get(k).copied().unwrap_or(0.0) * s;
        }
        acc
    }

    pub fn deriv(&self, y: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.cos.len().max(self.sin.len()) {
            let freq = (k + 1) as f64 * self.omega;
            let (s, c) = (freq * y).sin_cos();
            acc += freq
                * (self.sin.get(k).copied().unwrap_or(0.0) * c
                    - self.cos.get(k).copied().unwrap_or(0.0) * s);
        }
        acc
    }
}

/// Non-separable fast potentials, available for simulation only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointPeriodic {
    /// `sin(y_1) sin(y_2)` on `[0, 2 pi]^2`.
    SineProduct,
}

/// The periodic fast-scale potential `p(y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FastPotential {
    /// `p(y) = sum_i p_i(y_i)`.
    Separable(Vec<PeriodicComponent>),
    Joint(JointPeriodic),
}

impl FastPotential {
    pub fn one_dim(component: PeriodicComponent) -> Self {
        FastPotential::Separable(vec![component])
    }

    pub fn zero(dim: usize) -> Self {
        FastPotential::Separable(vec![PeriodicComponent::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            FastPotential::Separable(c) => c.len(),
            FastPotential::Joint(JointPeriodic::SineProduct) => 2,
        }
    }

    pub fn periods(&self) -> Vec<f64> {
        match self {
            FastPotential::Separable(c) => c.iter().map(PeriodicComponent::period).collect(),
            FastPotential::Joint(JointPeriodic::SineProduct) => vec![2.0 * PI; 2],
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(self, FastPotential::Separable(_))
    }

    pub fn components(&self) -> Option<&[PeriodicComponent]> {
        match self {
            FastPotential::Separable(c) => Some(c),
            FastPotential::Joint(_) => None,
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            FastPotential::Separable(c) => c.iter().zip(y).map(|(p, yi)| p.eval(*yi)).sum(),
            FastPotential::Joint(JointPeriodic::SineProduct) => y[0].sin() * y[1].sin(),
        }
    }

    pub fn grad_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            FastPotential::Separable(c) => {
                for ((o, p), yi) in out.iter_mut().zip(c).zip(y) {
                    *o = p.deriv(*yi);
                }
            }
            FastPotential::Joint(JointPeriodic::SineProduct) => {
                let (s0, c0) = y[0].sin_cos();
                let (s1, c1) = y[1].sin_cos();
                out[0] = c0 * s1;
                out[1] = s0 * c1;
            }
        }
    }

    pub fn eval_grad(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.grad_into(y, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (f(&xp) - f(&xm)) / (2.0 * h)
            })
            .collect()
    }

    fn gaussian_wells() -> SlowPotentialBasis {
        SlowPotentialBasis::new(
            2,
            vec![
                BasisTerm::Gaussian { center: vec![2.0, 2.0] },
                BasisTerm::Gaussian { center: vec![-2.0, -2.0] },
                BasisTerm::Gaussian { center: vec![0.0, 0.0] },
                BasisTerm::QuarticNorm,
                BasisTerm::QuadraticNorm,
            ],
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn basis_gradients_match_finite_differences(x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let h = 1e-5;
            let basis = gaussian_wells();
            for i in 0..basis.len() {
                let fd = fd_grad(|p| basis.eval(i, p), &[x, y], h);
                let g = basis.eval_grad(i, &[x, y]);
                for (a, b) in fd.iter().zip(&g) {
                    prop_assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()));
                }
                let hess = basis.eval_hess(i, &[x, y]);
                for col in 0..2 {
                    let fd = fd_grad(|p| basis.eval_grad(i, p)[col], &[x, y], h);
                    for row in 0..2 {
                        prop_assert!((fd[row] - hess[row * 2 + col]).abs() < 1e-6 * (1.0 + hess[row * 2 + col].abs()));
                    }
                }
            }
            let poly = SlowPotentialBasis::polynomial_1d(6).unwrap();
            for i in 0..6 {
                let fd = fd_grad(|p| poly.eval(i, p), &[x], h);
                prop_assert!((fd[0] - poly.eval_grad(i, &[x])[0]).abs() < 1e-6 * (1.0 + fd[0].abs()));
                let fdh = fd_grad(|p| poly.eval_grad(i, p)[0], &[x], h);
                prop_assert!((fdh[0] - poly.eval_hess(i, &[x])[0]).abs() < 1e-6 * (1.0 + fdh[0].abs()));
            }
        }

        #[test]
        fn fast_potential_is_periodic_with_consistent_gradient(y1 in -20.0f64..20.0, y2 in -20.0f64..20.0) {
            let pots = [
                FastPotential::Separable(vec![PeriodicComponent::sine(), PeriodicComponent::sine_squared()]),
                FastPotential::Separable(vec![
                    PeriodicComponent::new(1.5, 0.3, vec![0.2, -0.1], vec![0.7, 0.05]).unwrap(),
                    PeriodicComponent::zero(),
                ]),
                FastPotential::Joint(JointPeriodic::SineProduct),
            ];
            for p in &pots {
                let y = [y1, y2];
                let periods = p.periods();
                for axis in 0..2 {
                    let mut shifted = y;
                    shifted[axis] += periods[axis];
                    prop_assert!((p.eval(&shifted) - p.eval(&y)).abs() < 1e-12);
                }
                let fd = fd_grad(|q| p.eval(q), &y, 1e-5);
                let g = p.eval_grad(&y);
                for (a, b) in fd.iter().zip(&g) {
                    prop_assert!((a - b).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn stacked_gradient_layout() {
        let basis = gaussian_wells();
        let x = [0.3, -0.4];
        let mut stacked = vec![0.0; 2 * basis.len()];
        basis.stacked_gradient_into(&x, &mut stacked);
        for i in 0..basis.len() {
            assert_eq!(&stacked[2 * i..2 * i + 2], basis.eval_grad(i, &x).as_slice());
        }
        let poly = SlowPotentialBasis::polynomial_1d(3).unwrap();
        let mut g = vec![0.0; 3];
        poly.stacked_gradient_into(&[2.0], &mut g);
        assert_eq!(g, vec![4.0, 2.0, 1.0]);
    }

    #[test]
    fn sine_squared_matches_closed_form() {
        let p = PeriodicComponent::sine_squared();
        for y in [-1.3, 0.0, 0.4, 2.9] {
            let s: f64 = f64::sin(y);
            assert!((p.eval(y) - s * s).abs() < 1e-14);
            assert!((p.deriv(y) - 2.0 * s * y.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_mismatched_terms() {
        assert!(SlowPotentialBasis::new(2, vec![BasisTerm::Monomial { power: 2 }]).is_err());
        assert!(SlowPotentialBasis::new(2, vec![BasisTerm::Gaussian { center: vec![0.0] }]).is_err());
        assert!(SlowPotentialBasis::new(1, vec![]).is_err());
        assert!(PeriodicComponent::new(0.0, 0.0, vec![], vec![]).is_err());
    }
}
