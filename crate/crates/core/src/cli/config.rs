//! Run-configuration schema: one JSON document per run, command-specific
//! parameter records, flags overriding the top-level scalars.

use crate::error::{Error, Result};
use crate::generator::{Band, BdgGenerator, HermitianGenerator};
use crate::geometry::{Grid3, ParameterPath};
use crate::minkowski::MinkowskiMetric;
use crate::models::{
    afm_generator, fermi_gas_generator, vortex_generator, vortex_parameter_path, AfmParams,
    FermiGasParams, VortexField,
};
use crate::CMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

fn default_tol() -> f64 {
    1e-9
}

fn default_radius() -> f64 {
    1.0
}

fn default_one() -> u32 {
    1
}

/// Scalars shared by every command; CLI flags override these.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CommonOpts {
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; zero means all available cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for CommonOpts {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            tol: default_tol(),
        }
    }
}

/// Inclusive linear range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// How a generator is specified: raw Hermitian matrix, the two-mode
/// coefficient triple, or a physical model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorSpec {
    Mdecomp {
        m1: f64,
        m2: f64,
        m3: f64,
        #[serde(default)]
        trace: f64,
    },
    Hermitian {
        m: usize,
        n: usize,
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
    Model(ModelSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Fermi(FermiGasParams),
    Afm(AfmParams),
    Vortex(VortexPointSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VortexPointSpec {
    pub field: VortexField,
    pub position: [f64; 2],
    pub wavevector: [f64; 2],
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<BdgGenerator> {
        match self {
            GeneratorSpec::Mdecomp { m1, m2, m3, trace } => {
                Ok(BdgGenerator::from_m_coeffs([*m1, *m2, *m3], *trace))
            }
            GeneratorSpec::Hermitian { m, n, re, im } => {
                let metric = MinkowskiMetric::new(*m, *n)?;
                let d = metric.dim();
                if re.len() != d || im.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: re.len().max(im.len()),
                    });
                }
                let mut h = CMatrix::zeros((d, d));
                for i in 0..d {
                    if re[i].len() != d || im[i].len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: re[i].len().max(im[i].len()),
                        });
                    }
                    for j in 0..d {
                        h[[i, j]] = Complex64::new(re[i][j], im[i][j]);
                    }
                }
                Ok(BdgGenerator::from_hermitian(&HermitianGenerator::new(
                    h, metric,
                )?))
            }
            GeneratorSpec::Model(spec) => spec.build(),
        }
    }
}

impl ModelSpec {
    pub fn build(&self) -> Result<BdgGenerator> {
        match self {
            ModelSpec::Fermi(p) => fermi_gas_generator(p),
            ModelSpec::Afm(p) => afm_generator(p),
            ModelSpec::Vortex(v) => vortex_generator(&v.field, v.position, v.wavevector),
        }
    }
}

/// Parameter-space loop specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopSpec {
    Circle {
        theta: f64,
        #[serde(default = "default_radius")]
        radius: f64,
        resolution: usize,
    },
    Polyline {
        samples: Vec<[f64; 3]>,
    },
    VortexCircuit {
        field: VortexField,
        wavevector: [f64; 2],
        radius: f64,
        #[serde(default = "default_one")]
        windings: u32,
        resolution: usize,
    },
}

impl LoopSpec {
    pub fn build(&self) -> Result<ParameterPath> {
        match self {
            LoopSpec::Circle {
                theta,
                radius,
                resolution,
            } => ParameterPath::circle(*theta, *radius, *resolution),
            LoopSpec::Polyline { samples } => ParameterPath::polyline(samples.clone(), true),
            LoopSpec::VortexCircuit {
                field,
                wavevector,
                radius,
                windings,
                resolution,
            } => {
                let circuit: Vec<[f64; 2]> = (0..*resolution)
                    .map(|i| {
                        let a = *windings as f64 * std::f64::consts::TAU * i as f64
                            / *resolution as f64;
                        [radius * a.cos(), radius * a.sin()]
                    })
                    .collect();
                vortex_parameter_path(field, &circuit, *wavevector)
            }
        }
    }

    /// Same loop at a different resolution; only circles support ladders.
    pub fn with_resolution(&self, resolution: usize) -> Result<LoopSpec> {
        match self {
            LoopSpec::Circle { theta, radius, .. } => Ok(LoopSpec::Circle {
                theta: *theta,
                radius: *radius,
                resolution,
            }),
            _ => Err(Error::InvalidParameter(
                "resolution ladders are supported for circle loops only".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumConfig {
    #[serde(flatten)]
    pub common: CommonOpts,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub grid: Option<SpectrumGrid>,
}

/// An `(m1, m3)` scan at fixed `m2`, the constant-energy-surface picture.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub m1: GridRange,
    pub m3: GridRange,
    #[serde(default)]
    pub m2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpec {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl StateSpec {
    pub fn amplitudes(&self, dim: usize) -> Result<Vec<Complex64>> {
        if self.re.len() != dim || (!self.im.is_empty() && self.im.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.re.len().max(self.im.len()),
            });
        }
        Ok((0..dim)
            .map(|i| Complex64::new(self.re[i], self.im.get(i).copied().unwrap_or(0.0)))
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeGrid {
    #[serde(default)]
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn values(&self) -> Vec<f64> {
        GridRange {
            min: self.min,
            max: self.max,
            count: self.samples,
        }
        .values()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveConfig {
    #[serde(flatten)]
    pub common: CommonOpts,
    pub generator: GeneratorSpec,
    pub state: StateSpec,
    pub time: TimeGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BerryConfig {
    #[serde(flatten)]
    pub common: CommonOpts,
    pub band: Band,
    #[serde(rename = "loop")]
    pub loop_spec: LoopSpec,
    /// Optional resolution ladder for the convergence table.
    #[serde(default)]
    pub ladder: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TotalFluxSpec {
    pub theta_max: f64,
    pub resolution: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxConfig {
    #[serde(flatten)]
    pub common: CommonOpts,
    pub theta: GridRange,
    #[serde(default = "FluxConfig::default_ladder_tol")]
    pub ladder_tol: f64,
    #[serde(default = "FluxConfig::default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub total: Option<TotalFluxSpec>,
    /// Optional curvature grid for the field-map data product.
    #[serde(default)]
    pub curvature: Option<Grid3>,
}

impl FluxConfig {
    fn default_ladder_tol() -> f64 {
        1e-5
    }

    fn default_resolution() -> usize {
        1 << 14
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelScan {
    Afm {
        exchange: f64,
        spin: f64,
        coordination: u32,
        k_count: usize,
    },
    Fermi {
        v_f: f64,
        q: f64,
        g2: GridRange,
        g4: GridRange,
    },
    Vortex {
        field: VortexField,
        wavevector: [f64; 2],
        radius: f64,
        windings: Vec<u32>,
        resolution: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub common: CommonOpts,
    pub scan: ModelScan,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdiabaticConfig {
    #[serde(flatten)]
    pub common: CommonOpts,
    pub theta: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    pub band: Band,
    pub total_times: Vec<f64>,
    #[serde(default = "AdiabaticConfig::default_loop_resolution")]
    pub loop_resolution: usize,
    #[serde(default = "AdiabaticConfig::default_samples")]
    pub samples: usize,
}

impl AdiabaticConfig {
    fn default_loop_resolution() -> usize {
        512
    }

    fn default_samples() -> usize {
        2049
    }
}
