//! TOML run configuration and its translation into fields and seeds.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;
use zerosurf::bounds::BoundsConfig;
use zerosurf::herglotz::{herglotz_real, make_quadrature, Density, HerglotzField, SphericalQuadrature};
use zerosurf::solver::T0Strategy;
use zerosurf::surface::{obj, seed_plane_patch, seed_sphere, seed_torus, DEFAULT_GRADIENT_FLOOR};
use zerosurf::{parse_expression, Builtin, PerturbOptions, ScalarField, SeedSurface, Vec3};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub epsilon: f64,
    pub u: FieldSpec,
    pub v: FieldSpec,
    pub seed: SeedSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub bounds: BoundsSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub fd: FdSpec,
    #[serde(default)]
    pub check: CheckSpec,
    /// Directory that relative paths in the file resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Exactly one of `builtin`, `expression` or `herglotz`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub builtin: Option<String>,
    pub expression: Option<String>,
    pub herglotz: Option<HerglotzSpec>,
    pub radius: Option<f64>,
    pub center: Option<[f64; 3]>,
    pub semi_axes: Option<[f64; 3]>,
    pub ring_radius: Option<f64>,
    pub tube_radius: Option<f64>,
    pub normal: Option<[f64; 3]>,
    pub offset: Option<f64>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HerglotzSpec {
    pub k: f64,
    #[serde(default = "default_order")]
    pub n_theta: usize,
    #[serde(default = "default_order")]
    pub n_phi: usize,
    /// `const` or `z-linear`; ignored when `density_csv` is given.
    #[serde(default = "default_density")]
    pub density: String,
    /// Complex amplitude as `[re, im]`.
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
    /// One `re,im` row per quadrature node, in node order.
    pub density_csv: Option<PathBuf>,
    #[serde(default = "default_symmetry_tol")]
    pub symmetry_tol: f64,
}

fn default_order() -> usize {
    32
}

fn default_density() -> String {
    "const".into()
}

fn default_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

fn default_symmetry_tol() -> f64 {
    1e-12
}

/// Exactly one of `generator` or `mesh`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub generator: Option<String>,
    pub mesh: Option<PathBuf>,
    pub radius: Option<f64>,
    pub subdivisions: Option<u32>,
    pub ring_radius: Option<f64>,
    pub tube_radius: Option<f64>,
    pub n_u: Option<usize>,
    pub n_v: Option<usize>,
    pub half_width: Option<f64>,
    pub n: Option<usize>,
    pub allow_open: Option<bool>,
    /// Expected Euler characteristic of a mesh file.
    pub euler_characteristic: Option<i64>,
    #[serde(default = "default_seed_tol")]
    pub tol: f64,
}

fn default_seed_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol_t: f64,
    pub max_iter: usize,
    /// `first_order` or `zero`.
    pub t0: String,
    /// Overrides the admissible δ from the bounds module.
    pub delta: Option<f64>,
    pub residual_factor: f64,
    pub gradient_floor: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            tol_t: 1e-12,
            max_iter: 50,
            t0: "first_order".into(),
            delta: None,
            residual_factor: 10.0,
            gradient_floor: DEFAULT_GRADIENT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSpec {
    pub n_t: usize,
    pub safety_factor: f64,
    pub cap_factor: f64,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        let d = BoundsConfig::default();
        BoundsSpec {
            n_t: d.n_t,
            safety_factor: d.safety_factor,
            cap_factor: d.cap_factor,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub enabled: bool,
    pub tol: f64,
    pub max_deviation: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            enabled: true,
            tol: 1e-14,
            max_deviation: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub write_seed: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            write_seed: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdSpec {
    pub h: f64,
    pub tol: f64,
}

impl Default for FdSpec {
    fn default() -> Self {
        FdSpec { h: 1e-4, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSpec {
    pub points: usize,
    pub rng_seed: u64,
    /// Sample radius for the Helmholtz and closed-form checks is `max_kr / k`.
    pub max_kr: f64,
    pub helmholtz_tol: f64,
    pub sinc_tol: f64,
    pub weight_tol: f64,
}

impl Default for CheckSpec {
    fn default() -> Self {
        CheckSpec {
            points: 100,
            rng_seed: 0,
            max_kr: 10.0,
            helmholtz_tol: 1e-12,
            sinc_tol: 1e-10,
            weight_tol: 1e-12,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    fn check(&self) -> Result<(), CliError> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(CliError::Config(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        for (name, spec) in [("u", &self.u), ("v", &self.v)] {
            let n = spec.builtin.is_some() as u8 + spec.expression.is_some() as u8 + spec.herglotz.is_some() as u8;
            if n != 1 {
                return Err(CliError::Config(format!(
                    "[{name}] needs exactly one of builtin, expression, herglotz"
                )));
            }
        }
        if self.seed.generator.is_some() == self.seed.mesh.is_some() {
            return Err(CliError::Config("[seed] needs exactly one of generator, mesh".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn field(&self, which: Which) -> Result<ScalarField, CliError> {
        let spec = match which {
            Which::U => &self.u,
            Which::V => &self.v,
        };
        build_field(spec, self, which.name())
    }

    /// The raw complex field behind a herglotz spec, if any.
    pub fn herglotz(&self, which: Which) -> Result<Option<HerglotzField>, CliError> {
        let spec = match which {
            Which::U => &self.u,
            Which::V => &self.v,
        };
        match &spec.herglotz {
            Some(h) => build_herglotz(h, self, which.name()).map(Some),
            None => Ok(None),
        }
    }

    pub fn seed(&self) -> Result<SeedSurface, CliError> {
        let s = &self.seed;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| CliError::Config(format!("[seed] missing {key}")));
        let mut seed = if let Some(path) = &s.mesh {
            let path = self.resolve(path);
            let text = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut seed = obj::read_seed(&text, s.allow_open.unwrap_or(false)).map_err(config_err)?;
            if let Some(chi) = s.euler_characteristic {
                seed.euler_characteristic = chi;
            }
            seed
        } else {
            match s.generator.as_deref().unwrap_or_default() {
                "icosphere" => seed_sphere(s.radius.unwrap_or(1.0), s.subdivisions.unwrap_or(3)),
                "torus" => seed_torus(
                    need(s.ring_radius, "ring_radius")?,
                    need(s.tube_radius, "tube_radius")?,
                    s.n_u.unwrap_or(48),
                    s.n_v.unwrap_or(24),
                ),
                "plane" => seed_plane_patch(s.half_width.unwrap_or(1.0), s.n.unwrap_or(8)),
                other => return Err(CliError::Config(format!("unknown seed generator `{other}`"))),
            }
            .map_err(config_err)?
        };
        if let Some(open) = s.allow_open {
            seed.allow_open = open;
        }
        Ok(seed)
    }

    pub fn perturb_options(&self, epsilon: f64, delta: f64) -> Result<PerturbOptions, CliError> {
        let t0_strategy = match self.solver.t0.as_str() {
            "first_order" => T0Strategy::FirstOrder,
            "zero" => T0Strategy::Zero,
            other => return Err(CliError::Config(format!("unknown t0 strategy `{other}`"))),
        };
        let opts = PerturbOptions {
            tol_t: self.solver.tol_t,
            max_iter: self.solver.max_iter,
            t0_strategy,
            gradient_floor: self.solver.gradient_floor,
            residual_factor: self.solver.residual_factor,
            ..PerturbOptions::new(epsilon, delta)
        };
        opts.validate().map_err(config_err)?;
        Ok(opts)
    }

    pub fn bounds_config(&self) -> BoundsConfig {
        BoundsConfig {
            gradient_floor: self.solver.gradient_floor,
            n_t: self.bounds.n_t,
            safety_factor: self.bounds.safety_factor,
            cap_factor: self.bounds.cap_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    U,
    V,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::U => "u",
            Which::V => "v",
        }
    }
}

fn config_err(e: zerosurf::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn build_field(spec: &FieldSpec, cfg: &RunConfig, name: &str) -> Result<ScalarField, CliError> {
    if let Some(text) = &spec.expression {
        return parse_expression(text).map_err(|e| CliError::Config(format!("[{name}] {e}")));
    }
    if let Some(h) = &spec.herglotz {
        let hf = build_herglotz(h, cfg, name)?;
        return herglotz_real(hf, h.symmetry_tol).map_err(|e| CliError::Config(format!("[{name}] {e}")));
    }
    let kind = spec.builtin.as_deref().unwrap_or_default();
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| CliError::Config(format!("[{name}] {kind} needs {key}")));
    let b = match kind {
        "sphere" => Builtin::Sphere {
            center: Vec3(spec.center.unwrap_or([0.0; 3])),
            radius: spec.radius.unwrap_or(1.0),
        },
        "ellipsoid" => Builtin::Ellipsoid {
            semi_axes: spec
                .semi_axes
                .ok_or_else(|| CliError::Config(format!("[{name}] ellipsoid needs semi_axes")))?,
        },
        "torus" => Builtin::Torus {
            ring_radius: need(spec.ring_radius, "ring_radius")?,
            tube_radius: need(spec.tube_radius, "tube_radius")?,
        },
        "affine" => Builtin::Affine {
            normal: Vec3(spec.normal.unwrap_or([0.0; 3])),
            offset: spec.offset.unwrap_or(0.0),
        },
        "constant" => Builtin::constant(need(spec.value, "value")?),
        "squared_sphere" => Builtin::SquaredSphere {
            radius: spec.radius.unwrap_or(1.0),
        },
        other => return Err(CliError::Config(format!("[{name}] unknown builtin `{other}`"))),
    };
    Ok(ScalarField::builtin(b))
}

fn build_herglotz(h: &HerglotzSpec, cfg: &RunConfig, name: &str) -> Result<HerglotzField, CliError> {
    let err = |e: zerosurf::Error| CliError::Config(format!("[{name}.herglotz] {e}"));
    let q: Arc<SphericalQuadrature> = Arc::new(make_quadrature(h.n_theta, h.n_phi).map_err(err)?);
    let density = match &h.density_csv {
        Some(path) => read_density_csv(&cfg.resolve(path))?,
        None => {
            let a = Complex64::new(h.amplitude[0], h.amplitude[1]);
            let d = match h.density.as_str() {
                "const" => Density::Constant(a),
                "z-linear" => Density::ZLinear(a),
                other => return Err(CliError::Config(format!("[{name}.herglotz] unknown density `{other}`"))),
            };
            d.tabulate(&q)
        }
    };
    HerglotzField::new(h.k, density, q).map_err(err)
}

fn read_density_csv(path: &Path) -> Result<Vec<Complex64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<(f64, f64)>().enumerate() {
        let (re, im) = row.map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), i + 1)))?;
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}
