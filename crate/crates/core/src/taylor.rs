//! Truncated multivariate power series with complex coefficients.
//!
//! A [`TaylorScalar`] stores every coefficient of a polynomial in `k`
//! variables truncated at per-variable degrees `n̄`, i.e. the multi-indices
//! `α ≤ n̄` componentwise. Arithmetic is exact on the retained coefficients,
//! which makes mixed partial derivatives at the origin exact to machine
//! precision: `∂^α f(0) = α! · coeff(α)`.
//!
//! Memory is `∏ (n_i + 1)` coefficients, so the truncation orders double as a
//! resource bound.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::linalg::{c, ONE, ZERO};

/// Per-variable truncation orders shared by all series in one computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaylorShape {
    orders: Arc<Vec<usize>>,
    strides: Arc<Vec<usize>>,
    len: usize,
}

impl TaylorShape {
    pub fn new(orders: &[usize]) -> Self {
        let mut strides = vec![0usize; orders.len()];
        let mut len = 1usize;
        // last variable fastest
        for i in (0..orders.len()).rev() {
            strides[i] = len;
            len *= orders[i] + 1;
        }
        Self {
            orders: Arc::new(orders.to_vec()),
            strides: Arc::new(strides),
            len,
        }
    }

    pub fn variable_count(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn coefficient_count(&self) -> usize {
        self.len
    }

    /// Sum of the per-variable truncation orders: the highest total degree
    /// that can survive truncation.
    pub fn total_degree(&self) -> usize {
        self.orders.iter().sum()
    }

    fn flat(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.orders.len());
        multi
            .iter()
            .zip(self.strides.iter())
            .map(|(m, s)| m * s)
            .sum()
    }
}

/// A complex scalar carried as a truncated multivariate Taylor series.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorScalar {
    shape: TaylorShape,
    coeffs: Vec<C64>,
}

impl TaylorScalar {
    pub fn zero(shape: &TaylorShape) -> Self {
        Self {
            shape: shape.clone(),
            coeffs: vec![ZERO; shape.len],
        }
    }

    pub fn constant(shape: &TaylorShape, value: C64) -> Self {
        let mut t = Self::zero(shape);
        t.coeffs[0] = value;
        t
    }

    /// The series `value * x_var`.
    pub fn linear(shape: &TaylorShape, var: usize, value: C64) -> Self {
        let mut t = Self::zero(shape);
        if shape.orders[var] >= 1 {
            t.coeffs[shape.strides[var]] = value;
        }
        t
    }

    pub fn shape(&self) -> &TaylorShape {
        &self.shape
    }

    pub fn coeff(&self, multi: &[usize]) -> C64 {
        self.coeffs[self.shape.flat(multi)]
    }

    pub fn constant_term(&self) -> C64 {
        self.coeffs[0]
    }

    /// Mixed partial derivative at the origin: `α! · coeff(α)`.
    pub fn derivative_at_zero(&self, multi: &[usize]) -> C64 {
        let mut factorial = 1.0f64;
        for &m in multi {
            for k in 2..=m {
                factorial *= k as f64;
            }
        }
        self.coeff(multi) * c(factorial)
    }

    fn assert_same_shape(&self, rhs: &Self) {
        assert_eq!(
            self.shape, rhs.shape,
            "taylor operands must share truncation orders"
        );
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.assert_same_shape(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(rhs.coeffs.iter())
            .map(|(a, b)| a + b)
            .collect();
        Self {
            shape: self.shape.clone(),
            coeffs,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.assert_same_shape(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(rhs.coeffs.iter())
            .map(|(a, b)| a - b)
            .collect();
        Self {
            shape: self.shape.clone(),
            coeffs,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            shape: self.shape.clone(),
            coeffs: self.coeffs.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: C64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    fn multi_indices(&self) -> MultiIndexIter {
        MultiIndexIter {
            orders: self.shape.orders.clone(),
            current: vec![0; self.shape.orders.len()],
            flat: 0,
            len: self.shape.len,
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        self.assert_same_shape(rhs);
        let nvars = self.shape.variable_count();
        let mut out = Self::zero(&self.shape);
        let mut ia = vec![0usize; nvars];
        for fa in 0..self.coeffs.len() {
            let a = self.coeffs[fa];
            if a != ZERO {
                let mut ib = vec![0usize; nvars];
                'rhs: for fb in 0..rhs.coeffs.len() {
                    let b = rhs.coeffs[fb];
                    if b != ZERO {
                        let mut flat = 0usize;
                        for v in 0..nvars {
                            let s = ia[v] + ib[v];
                            if s > self.shape.orders[v] {
                                advance(&mut ib, &self.shape.orders);
                                continue 'rhs;
                            }
                            flat += s * self.shape.strides[v];
                        }
                        out.coeffs[flat] += a * b;
                    }
                    advance(&mut ib, &self.shape.orders);
                }
            }
            advance(&mut ia, &self.shape.orders);
        }
        out
    }

    /// Newton iterations for `1/self`; requires a nonzero constant term.
    pub fn recip(&self) -> Self {
        let c0 = self.constant_term();
        assert!(
            c0.norm() > 0.0,
            "reciprocal requires a nonzero constant term"
        );
        let mut y = Self::constant(&self.shape, ONE / c0);
        for _ in 0..newton_steps(self.shape.total_degree()) {
            // y <- y (2 - t y)
            let ty = self.mul(&y);
            let two_minus = ty.neg().add_scalar(c(2.0));
            y = y.mul(&two_minus);
        }
        y
    }

    /// Newton iterations for `self^{-1/2}` (principal branch of the constant
    /// term); requires a nonzero constant term.
    pub fn inv_sqrt(&self) -> Self {
        let c0 = self.constant_term();
        assert!(
            c0.norm() > 0.0,
            "inverse square root requires a nonzero constant term"
        );
        let mut z = Self::constant(&self.shape, ONE / c0.sqrt());
        for _ in 0..newton_steps(self.shape.total_degree()) {
            // z <- z (3 - t z^2) / 2
            let tz2 = self.mul(&z).mul(&z);
            let inner = tz2.neg().add_scalar(c(3.0));
            z = z.mul(&inner).scale(c(0.5));
        }
        z
    }

    pub fn sqrt(&self) -> Self {
        self.mul(&self.inv_sqrt())
    }

    /// `exp(self)` for series with vanishing constant term; the sum
    /// terminates because powers of the argument eventually truncate away.
    pub fn exp_nilpotent(&self) -> Self {
        assert!(
            self.constant_term().norm() < 1e-300,
            "exp_nilpotent requires a zero constant term"
        );
        let mut acc = Self::constant(&self.shape, ONE);
        let mut term = Self::constant(&self.shape, ONE);
        for k in 1..=self.shape.total_degree() {
            term = term.mul(self).scale(c(1.0 / k as f64));
            if term.coeffs.iter().all(|z| *z == ZERO) {
                break;
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Evaluates the polynomial at a real point.
    pub fn eval_real(&self, x: &[f64]) -> C64 {
        assert_eq!(x.len(), self.shape.variable_count());
        let mut total = ZERO;
        let mut iter = self.multi_indices();
        while let Some((flat, multi)) = iter.next() {
            let a = self.coeffs[flat];
            if a != ZERO {
                let mut mono = 1.0f64;
                for (xi, &mi) in x.iter().zip(multi.iter()) {
                    mono *= xi.powi(mi as i32);
                }
                total += a * c(mono);
            }
        }
        total
    }
}

fn newton_steps(total_degree: usize) -> usize {
    // each step doubles the correct order; one extra for safety
    let mut steps = 1usize;
    let mut reach = 1usize;
    while reach < total_degree + 1 {
        reach *= 2;
        steps += 1;
    }
    steps
}

fn advance(multi: &mut [usize], orders: &[usize]) {
    for v in (0..multi.len()).rev() {
        if multi[v] < orders[v] {
            multi[v] += 1;
            return;
        }
        multi[v] = 0;
    }
}

struct MultiIndexIter {
    orders: Arc<Vec<usize>>,
    current: Vec<usize>,
    flat: usize,
    len: usize,
}

impl MultiIndexIter {
    fn next(&mut self) -> Option<(usize, &[usize])> {
        if self.flat >= self.len {
            return None;
        }
        if self.flat > 0 {
            advance(&mut self.current, &self.orders);
        }
        let flat = self.flat;
        self.flat += 1;
        Some((flat, &self.current))
    }
}
