//! Second-order forward-mode differentiation in three variables.
//!
//! A [`Jet`] carries a value together with its gradient and the upper
//! triangle of its Hessian. Every operation propagates all ten components in
//! one pass.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::geom::{Sym3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    /// Packed upper triangle, see [`Sym3::slot`].
    pub hess: [f64; 6],
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl Jet {
    pub fn constant(value: f64) -> Self {
        Jet {
            value,
            grad: [0.0; 3],
            hess: [0.0; 6],
        }
    }

    /// The coordinate function `x_{axis+1}` evaluated at `value`.
    pub fn variable(axis: usize, value: f64) -> Self {
        let mut grad = [0.0; 3];
        grad[axis] = 1.0;
        Jet {
            value,
            grad,
            hess: [0.0; 6],
        }
    }

    pub fn gradient(&self) -> Vec3 {
        Vec3(self.grad)
    }

    pub fn hessian(&self) -> Sym3 {
        Sym3(self.hess)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    pub fn chain(&self, f: f64, df: f64, d2f: f64) -> Jet {
        let g = self.grad;
        let mut hess = [0.0; 6];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            hess[k] = df * self.hess[k] + d2f * g[i] * g[j];
        }
        Jet {
            value: f,
            grad: g.map(|gi| df * gi),
            hess,
        }
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    /// Caller guarantees `self.value > 0`.
    pub fn sqrt(&self) -> Jet {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.value))
    }

    /// Caller guarantees `self.value != 0`.
    pub fn recip(&self) -> Jet {
        let r = 1.0 / self.value;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    /// Integer power. Negative exponents require a nonzero value.
    pub fn powi(&self, n: i32) -> Jet {
        match n {
            0 => Jet::constant(1.0),
            1 => *self,
            _ => {
                let a = self.value;
                let nf = f64::from(n);
                self.chain(a.powi(n), nf * a.powi(n - 1), nf * (nf - 1.0) * a.powi(n - 2))
            }
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.value += o.value;
        for i in 0..3 {
            r.grad[i] += o.grad[i];
        }
        for k in 0..6 {
            r.hess[k] += o.hess[k];
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            value: -self.value,
            grad: self.grad.map(|g| -g),
            hess: self.hess.map(|h| -h),
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (&self, &o);
        let mut hess = [0.0; 6];
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            hess[k] = a.hess[k] * b.value
                + a.grad[i] * b.grad[j]
                + a.grad[j] * b.grad[i]
                + a.value * b.hess[k];
        }
        let mut grad = [0.0; 3];
        for (i, g) in grad.iter_mut().enumerate() {
            *g = a.grad[i] * b.value + a.value * b.grad[i];
        }
        Jet {
            value: a.value * b.value,
            grad,
            hess,
        }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}
