//! Scalar fields with exact value, gradient and Hessian evaluation.

mod builtin;
mod expr;
mod jet;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use builtin::Builtin;
pub use expr::{Expr, Func};
pub use jet::Jet;

use crate::error::{Error, Result};
use crate::geom::{Point3, Sym3, Vec3};
use crate::herglotz::HerglotzField;

/// Value, gradient and Hessian of a real field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldEval {
    pub value: f64,
    pub gradient: Vec3,
    pub hessian: Sym3,
}

impl FieldEval {
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.is_finite() && self.hessian.is_finite()
    }

    /// `self + epsilon * other`
    pub fn combine(&self, other: &FieldEval, epsilon: f64) -> FieldEval {
        FieldEval {
            value: self.value + epsilon * other.value,
            gradient: self.gradient + other.gradient * epsilon,
            hessian: self.hessian + other.hessian * epsilon,
        }
    }
}

/// Anything that can be evaluated to second order at a point.
pub trait Field: Sync {
    fn eval(&self, p: Point3) -> Result<FieldEval>;

    fn value(&self, p: Point3) -> Result<f64> {
        Ok(self.eval(p)?.value)
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    Builtin(Builtin),
    Expression(Arc<Expr>),
    /// Real part of a Hermitian-symmetric Herglotz wave function.
    HerglotzReal(Arc<HerglotzField>),
}

/// A C³ scalar field. Evaluation is pure, so a field can be shared freely
/// across threads.
#[derive(Debug, Clone)]
pub struct ScalarField {
    backend: Backend,
    descriptor: String,
}

impl ScalarField {
    pub fn builtin(b: Builtin) -> Self {
        let descriptor = b.name();
        ScalarField {
            backend: Backend::Builtin(b),
            descriptor,
        }
    }

    pub fn expression(expr: Expr) -> Self {
        ScalarField {
            descriptor: expr.to_string(),
            backend: Backend::Expression(Arc::new(expr)),
        }
    }

    pub(crate) fn herglotz(hf: Arc<HerglotzField>, descriptor: String) -> Self {
        ScalarField {
            backend: Backend::HerglotzReal(hf),
            descriptor,
        }
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = descriptor.into();
        self
    }
}

/// Parses the expression language into an AD-backed field.
pub fn parse_expression(text: &str) -> Result<ScalarField> {
    Ok(ScalarField::expression(Expr::parse(text)?))
}

impl Field for ScalarField {
    fn eval(&self, p: Point3) -> Result<FieldEval> {
        if !p.is_finite() {
            return Err(Error::Domain { op: "non-finite point", at: p });
        }
        let out = match &self.backend {
            Backend::Builtin(b) => b.eval(p),
            Backend::Expression(e) => {
                let j = e.eval_jet(p)?;
                FieldEval {
                    value: j.value,
                    gradient: j.gradient(),
                    hessian: j.hessian(),
                }
            }
            Backend::HerglotzReal(hf) => hf.eval_real(p),
        };
        if !out.is_finite() {
            return Err(Error::Domain { op: "overflow", at: p });
        }
        Ok(out)
    }

    fn value(&self, p: Point3) -> Result<f64> {
        match &self.backend {
            Backend::HerglotzReal(hf) => Ok(hf.value_real(p)),
            _ => Ok(self.eval(p)?.value),
        }
    }
}

/// The perturbed field `u + εv`.
#[derive(Debug, Clone, Copy)]
pub struct Perturbed<'a> {
    pub u: &'a ScalarField,
    pub v: &'a ScalarField,
    pub epsilon: f64,
}

impl<'a> Perturbed<'a> {
    pub fn new(u: &'a ScalarField, v: &'a ScalarField, epsilon: f64) -> Self {
        Perturbed { u, v, epsilon }
    }
}

impl Field for Perturbed<'_> {
    fn eval(&self, p: Point3) -> Result<FieldEval> {
        let u = self.u.eval(p)?;
        if self.epsilon == 0.0 {
            return Ok(u);
        }
        Ok(u.combine(&self.v.eval(p)?, self.epsilon))
    }

    fn value(&self, p: Point3) -> Result<f64> {
        let u = self.u.value(p)?;
        if self.epsilon == 0.0 {
            return Ok(u);
        }
        Ok(u + self.epsilon * self.v.value(p)?)
    }
}

/// Maximum absolute deviation between the exact gradient/Hessian and central
/// differences with step `h`. The gradient is differenced from values, the
/// Hessian from the exact gradient.
pub fn fd_check<F: Field + ?Sized>(field: &F, p: Point3, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let center = field.eval(p)?;
    let mut dev = 0.0f64;
    for j in 0..3 {
        let step = Vec3::unit(j) * h;
        let plus = field.eval(p + step)?;
        let minus = field.eval(p - step)?;
        let dg = (plus.value - minus.value) / (2.0 * h);
        dev = dev.max((dg - center.gradient[j]).abs());
        for i in 0..3 {
            let dh = (plus.gradient[i] - minus.gradient[i]) / (2.0 * h);
            dev = dev.max((dh - center.hessian.get(i, j)).abs());
        }
    }
    Ok(dev)
}
