//! Herglotz wave functions `u(x) = ∫_{S²} e^{ikβ·x} f(β) dβ` discretized by a
//! product quadrature on the unit sphere.
//!
//! Derivatives are taken under the sum, so every discretized field satisfies
//! `ΔU + k²U = 0` exactly up to rounding: each node contributes a plane wave
//! with `|β_j| = 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, FieldEval, ScalarField};
use crate::geom::{Point3, Sym3, Vec3};
use crate::surface::SeedSurface;

/// Gauss–Legendre nodes in `cos θ` times a uniform grid in `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalQuadrature {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    n_theta: usize,
    n_phi: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending, mirrored so that
/// `x[n-1-i] == -x[i]` exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d.is_finite() {
            dp = d;
        }
        if 2 * i + 1 == n {
            z = 0.0;
            dp = legendre_with_derivative(n, 0.0).1;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Product rule with `n_theta` Gauss–Legendre points in `cos θ` and `n_phi`
/// equispaced azimuths. Exact for spherical polynomials of degree
/// `min(2 n_theta - 1, n_phi - 1)`.
pub fn make_quadrature(n_theta: usize, n_phi: usize) -> Result<SphericalQuadrature> {
    if n_theta == 0 || n_phi == 0 {
        return Err(Error::invalid("quadrature needs n_theta >= 1 and n_phi >= 1"));
    }
    let (mu, wmu) = gauss_legendre(n_theta);
    let mut azimuth = vec![(0.0, 0.0); n_phi];
    let half = n_phi / 2;
    for (j, a) in azimuth.iter_mut().enumerate() {
        let (s, c) = (2.0 * PI * j as f64 / n_phi as f64).sin_cos();
        *a = (c, s);
    }
    if n_phi.is_multiple_of(2) {
        for j in 0..half {
            let (c, s) = azimuth[j];
            azimuth[j + half] = (-c, -s);
        }
    }
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (i, &z) in mu.iter().enumerate() {
        let r = (1.0 - z * z).sqrt();
        for &(c, s) in &azimuth {
            nodes.push(Vec3::new(r * c, r * s, z));
            weights.push(wmu[i] * dphi);
        }
    }
    Ok(SphericalQuadrature {
        nodes,
        weights,
        n_theta,
        n_phi,
    })
}

impl SphericalQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    /// Index of the node at `-β_j`, when the rule is antipodally symmetric
    /// (even `n_phi`).
    pub fn antipode(&self, j: usize) -> Option<usize> {
        if !self.n_phi.is_multiple_of(2) || j >= self.len() {
            return None;
        }
        let (i, m) = (j / self.n_phi, j % self.n_phi);
        Some((self.n_theta - 1 - i) * self.n_phi + (m + self.n_phi / 2) % self.n_phi)
    }

    pub fn integrate<F: Fn(Vec3) -> f64>(&self, f: F) -> f64 {
        let mut acc = Neumaier::default();
        for (b, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(*b));
        }
        acc.total()
    }

    pub fn tabulate<F: Fn(Vec3) -> Complex64>(&self, f: F) -> Vec<Complex64> {
        self.nodes.iter().map(|&b| f(b)).collect()
    }
}

/// Compensated summation with a fixed order, for reproducible sums.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ComplexSum {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexSum {
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn total(&self) -> Complex64 {
        Complex64::new(self.re.total(), self.im.total())
    }
}

/// Named density families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    /// `f(β) = a`
    Constant(Complex64),
    /// `f(β) = a·β₃`
    ZLinear(Complex64),
}

impl Density {
    pub fn tabulate(&self, quadrature: &SphericalQuadrature) -> Vec<Complex64> {
        match *self {
            Density::Constant(a) => quadrature.tabulate(|_| a),
            Density::ZLinear(a) => quadrature.tabulate(|b| a * b[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzField {
    k: f64,
    density: Vec<Complex64>,
    quadrature: Arc<SphericalQuadrature>,
    /// `w_j f(β_j)`
    weighted: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFieldEval {
    pub value: Complex64,
    pub gradient: [Complex64; 3],
    /// Packed upper triangle, see [`Sym3::slot`].
    pub hessian: [Complex64; 6],
}

impl ComplexFieldEval {
    pub fn laplacian(&self) -> Complex64 {
        self.hessian[0] + self.hessian[3] + self.hessian[5]
    }
}

impl HerglotzField {
    pub fn new(k: f64, density: Vec<Complex64>, quadrature: Arc<SphericalQuadrature>) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::invalid(format!("wavenumber must be positive, got {k}")));
        }
        if density.len() != quadrature.len() {
            return Err(Error::NodeMismatch {
                expected: quadrature.len(),
                got: density.len(),
            });
        }
        if density.iter().any(|f| !f.is_finite()) {
            return Err(Error::invalid("density has non-finite values"));
        }
        let weighted = density.iter().zip(&quadrature.weights).map(|(f, w)| f * w).collect();
        Ok(HerglotzField {
            k,
            density,
            quadrature,
            weighted,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn density(&self) -> &[Complex64] {
        &self.density
    }

    pub fn quadrature(&self) -> &Arc<SphericalQuadrature> {
        &self.quadrature
    }

    /// `Σ w_j |f_j|`, the natural scale of the field and its residuals.
    pub fn scale(&self) -> f64 {
        self.weighted.iter().map(|c| c.norm()).sum()
    }

    fn plane_wave(&self, j: usize, x: Point3) -> Complex64 {
        let (s, c) = (self.k * self.quadrature.nodes[j].dot(x)).sin_cos();
        self.weighted[j] * Complex64::new(c, s)
    }

    /// Value, gradient and Hessian of the complex field.
    pub fn eval(&self, x: Point3) -> ComplexFieldEval {
        let mut s0 = ComplexSum::default();
        let mut s1 = [ComplexSum::default(); 3];
        let mut s2 = [ComplexSum::default(); 6];
        for (j, b) in self.quadrature.nodes.iter().enumerate() {
            let c = self.plane_wave(j, x);
            s0.add(c);
            for a in 0..3 {
                s1[a].add(c * b[a]);
            }
            let outer = Sym3::outer(*b, 1.0);
            for (slot, o) in outer.0.iter().enumerate() {
                s2[slot].add(c * *o);
            }
        }
        let ik = Complex64::new(0.0, self.k);
        let k2 = self.k * self.k;
        ComplexFieldEval {
            value: s0.total(),
            gradient: s1.map(|s| ik * s.total()),
            hessian: s2.map(|s| -k2 * s.total()),
        }
    }

    pub(crate) fn value_real(&self, x: Point3) -> f64 {
        let mut acc = Neumaier::default();
        for j in 0..self.weighted.len() {
            acc.add(self.plane_wave(j, x).re);
        }
        acc.total()
    }

    pub(crate) fn eval_real(&self, x: Point3) -> FieldEval {
        let e = self.eval(x);
        FieldEval {
            value: e.value.re,
            gradient: Vec3(e.gradient.map(|g| g.re)),
            hessian: Sym3(e.hessian.map(|h| h.re)),
        }
    }

    /// Largest `|f(β_j) - conj(f(-β_j))|`. Errors for rules without
    /// antipodal pairs.
    pub fn symmetry_mismatch(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (j, f) in self.density.iter().enumerate() {
            let a = self
                .quadrature
                .antipode(j)
                .ok_or_else(|| Error::invalid("real Herglotz fields need an even n_phi"))?;
            worst = worst.max((f - self.density[a].conj()).norm());
        }
        Ok(worst)
    }
}

/// The real field `Re u`, valid when the density is Hermitian-symmetric
/// (`f(-β) = conj f(β)`), which makes `u` itself real.
pub fn herglotz_real(hf: HerglotzField, symmetry_tol: f64) -> Result<ScalarField> {
    let mismatch = hf.symmetry_mismatch()?;
    if mismatch > symmetry_tol {
        return Err(Error::AsymmetricDensity { mismatch });
    }
    let (nt, np) = hf.quadrature.orders();
    let descriptor = format!("herglotz(k={}, rule={}x{})", hf.k, nt, np);
    Ok(ScalarField::herglotz(Arc::new(hf), descriptor))
}

/// Density `f + εg` on the same nodes.
pub fn perturb_density(hf: &HerglotzField, g: &[Complex64], epsilon: f64) -> Result<HerglotzField> {
    if g.len() != hf.density.len() {
        return Err(Error::NodeMismatch {
            expected: hf.density.len(),
            got: g.len(),
        });
    }
    let density = hf.density.iter().zip(g).map(|(f, g)| f + epsilon * g).collect();
    HerglotzField::new(hf.k, density, Arc::clone(&hf.quadrature))
}

/// Vertices where `|∇u(s)| < tol`: the sampled set on which the normal
/// derivative vanishes and the per-point construction does not apply.
pub fn find_degenerate_set(seed: &SeedSurface, u: &ScalarField, tol: f64) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for s in &seed.samples {
        if u.eval(s.s)?.gradient.norm() < tol {
            out.push(s.vertex_id);
        }
    }
    Ok(out)
}
