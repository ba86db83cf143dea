//! Physical parameters, manufactured solutions and boundary specification
//! for the two-network Darcy model.
//!
//! Network `i` carries a velocity `u_i` and pressure `p_i` satisfying
//! `μ k_i⁻¹ u_i + ∇p_i = γb` and `div u_i = ∓ β/μ (p1 - p2)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Point};
use crate::mesh::{FacetRecord, Mesh};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("unknown parameter preset `{0}`")]
    UnknownPreset(String),
    #[error("could not parse parameters: {0}")]
    Parse(String),
    #[error("manufactured solution is {mms}D but the mesh is {mesh}D")]
    DimensionMismatch { mms: usize, mesh: usize },
    #[error("network {0} has no pressure boundary and the other network neither; pressure is undetermined")]
    PressureUndetermined(usize),
    #[error("boundary side {0} does not exist")]
    InvalidSide(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DppParameters {
    pub mu: f64,
    pub gamma_b: [f64; 3],
    pub beta: f64,
    pub k1: f64,
    pub k2: f64,
    pub eta_u: f64,
    pub eta_p: f64,
    pub length: f64,
}

/// Optional overrides read from a flat key/value file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterOverrides {
    preset: Option<String>,
    mu: Option<f64>,
    gamma_b: Option<Vec<f64>>,
    beta: Option<f64>,
    k1: Option<f64>,
    k2: Option<f64>,
    eta_u: Option<f64>,
    eta_p: Option<f64>,
    length: Option<f64>,
}

impl DppParameters {
    /// Parameter set of the two-dimensional benchmark.
    pub fn paper_2d() -> Self {
        Self { mu: 1.0, gamma_b: [0.0; 3], beta: 1.0, k1: 1.0, k2: 0.1, eta_u: 10.0, eta_p: 10.0, length: 1.0 }
    }

    /// Parameter set of the three-dimensional benchmark.
    pub fn paper_3d() -> Self {
        Self::paper_2d()
    }

    pub fn preset(name: &str) -> Result<Self, ProblemError> {
        match name {
            "paper-2d" | "paper_2d" => Ok(Self::paper_2d()),
            "paper-3d" | "paper_3d" => Ok(Self::paper_3d()),
            other => Err(ProblemError::UnknownPreset(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let positive = [("mu", self.mu), ("k1", self.k1), ("k2", self.k2), ("length", self.length)];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ProblemError::InvalidParameter { name, value, reason: "must be positive" });
            }
        }
        let non_negative = [("beta", self.beta), ("eta_u", self.eta_u), ("eta_p", self.eta_p)];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ProblemError::InvalidParameter { name, value, reason: "must be non-negative" });
            }
        }
        Ok(())
    }

    pub fn permeability(&self, network: usize) -> f64 {
        if network == 0 {
            self.k1
        } else {
            self.k2
        }
    }

    /// Parse a TOML document of flat keys (`mu`, `beta`, `k1`, `k2`,
    /// `eta_u`, `eta_p`, `gamma_b`, `length`, `preset`). Missing keys keep
    /// the values of `base` (or of the named preset).
    pub fn from_toml_str(text: &str, base: Self) -> Result<Self, ProblemError> {
        let o: ParameterOverrides = toml::from_str(text).map_err(|e| ProblemError::Parse(e.to_string()))?;
        let mut p = match &o.preset {
            Some(name) => Self::preset(name)?,
            None => base,
        };
        if let Some(g) = o.gamma_b {
            if g.len() > 3 {
                return Err(ProblemError::Parse("gamma_b has more than 3 components".into()));
            }
            p.gamma_b = [0.0; 3];
            p.gamma_b[..g.len()].copy_from_slice(&g);
        }
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { p.$f = v; } )* };
        }
        apply!(mu, beta, k1, k2, eta_u, eta_p, length);
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path, base: Self) -> Result<Self, ProblemError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, base)
    }
}

/// `η = sqrt(β (k1 + k2) / (k1 k2))`.
pub fn eta(params: &DppParameters) -> Result<f64, ProblemError> {
    if !(params.beta >= 0.0) {
        return Err(ProblemError::InvalidParameter {
            name: "beta",
            value: params.beta,
            reason: "must be non-negative",
        });
    }
    for (name, value) in [("k1", params.k1), ("k2", params.k2)] {
        if !(value > 0.0) {
            return Err(ProblemError::InvalidParameter { name, value, reason: "must be positive" });
        }
    }
    Ok((params.beta * (params.k1 + params.k2) / (params.k1 * params.k2)).sqrt())
}

/// Values of the four fields at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldValues {
    pub u1: Point,
    pub p1: f64,
    pub u2: Point,
    pub p2: f64,
}

impl FieldValues {
    pub fn velocity(&self, network: usize) -> Point {
        if network == 0 {
            self.u1
        } else {
            self.u2
        }
    }

    pub fn pressure(&self, network: usize) -> f64 {
        if network == 0 {
            self.p1
        } else {
            self.p2
        }
    }
}

/// Which micro-network pressure the 3D solution uses: the denominator
/// `β k1` of the published formula, or `β k2` mirroring the 2D solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mms3dVariant {
    AsPrinted,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManufacturedSolution {
    Benchmark2d,
    Benchmark3d(Mms3dVariant),
    /// `u1 = u2 = 0`, `p1 = p2 = c`.
    ConstantPressure {
        dim: usize,
        value: f64,
    },
}

impl ManufacturedSolution {
    pub fn for_dim(dim: usize) -> Self {
        if dim == 2 {
            ManufacturedSolution::Benchmark2d
        } else {
            ManufacturedSolution::Benchmark3d(Mms3dVariant::Corrected)
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ManufacturedSolution::Benchmark2d => 2,
            ManufacturedSolution::Benchmark3d(_) => 3,
            ManufacturedSolution::ConstantPressure { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &Point, params: &DppParameters) -> FieldValues {
        match *self {
            ManufacturedSolution::Benchmark2d => exact_solution_2d(x[0], x[1], params),
            ManufacturedSolution::Benchmark3d(v) => exact_solution_3d(x[0], x[1], x[2], params, v),
            ManufacturedSolution::ConstantPressure { value, .. } => {
                FieldValues { u1: [0.0; 3], p1: value, u2: [0.0; 3], p2: value }
            }
        }
    }
}

impl fmt::Display for ManufacturedSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManufacturedSolution::Benchmark2d => f.write_str("benchmark-2d"),
            ManufacturedSolution::Benchmark3d(Mms3dVariant::AsPrinted) => f.write_str("benchmark-3d-as-printed"),
            ManufacturedSolution::Benchmark3d(Mms3dVariant::Corrected) => f.write_str("benchmark-3d"),
            ManufacturedSolution::ConstantPressure { value, .. } => write!(f, "constant-{value}"),
        }
    }
}

fn eta_or_zero(params: &DppParameters) -> f64 {
    eta(params).unwrap_or(0.0)
}

pub fn exact_solution_2d(x: f64, y: f64, params: &DppParameters) -> FieldValues {
    use std::f64::consts::PI;
    let DppParameters { mu, beta, k1, k2, .. } = *params;
    let eta = eta_or_zero(params);
    let e = (PI * x).exp();
    let (s, c) = (PI * y).sin_cos();
    let ey = (eta * y).exp();
    FieldValues {
        u1: [-k1 * e * s, -k1 * (e * c - eta / (beta * k1) * ey), 0.0],
        p1: mu / PI * e * s - mu / (beta * k1) * ey,
        u2: [-k2 * e * s, -k2 * (e * c + eta / (beta * k2) * ey), 0.0],
        p2: mu / PI * e * s + mu / (beta * k2) * ey,
    }
}

pub fn exact_solution_3d(x: f64, y: f64, z: f64, params: &DppParameters, variant: Mms3dVariant) -> FieldValues {
    use std::f64::consts::PI;
    let DppParameters { mu, beta, k1, k2, .. } = *params;
    let eta = eta_or_zero(params);
    let e = (PI * x).exp();
    let (sy, cy) = (PI * y).sin_cos();
    let (sz, cz) = (PI * z).sin_cos();
    let (ey, ez) = ((eta * y).exp(), (eta * z).exp());
    let k_p2 = match variant {
        Mms3dVariant::AsPrinted => k1,
        Mms3dVariant::Corrected => k2,
    };
    FieldValues {
        u1: [-k1 * e * (sy + sz), -k1 * (e * cy - eta / (beta * k1) * ey), -k1 * (e * cz - eta / (beta * k1) * ez)],
        p1: mu / PI * e * (sy + sz) - mu / (beta * k1) * (ey + ez),
        u2: [-k2 * e * (sy + sz), -k2 * (e * cy + eta / (beta * k2) * ey), -k2 * (e * cz + eta / (beta * k2) * ez)],
        p2: mu / PI * e * (sy + sz) + mu / (beta * k_p2) * (ey + ez),
    }
}

/// Type of condition imposed on one side of the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Pressure,
    Velocity,
}

impl FromStr for BcKind {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "pressure" => Ok(BcKind::Pressure),
            "u" | "velocity" => Ok(BcKind::Velocity),
            other => Err(ProblemError::Parse(format!("unknown boundary kind `{other}`"))),
        }
    }
}

/// Partition of the box boundary into pressure and normal-velocity sides for
/// each network, with data taken from a manufactured solution.
///
/// Sides are numbered `2 * axis + (0 low, 1 high)`. Every side carries
/// exactly one tag per network, so the two regions always cover the
/// boundary without overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    dim: usize,
    tags: [[BcKind; 6]; 2],
    data: ManufacturedSolution,
}

impl BoundarySpec {
    /// Pressure data on the whole boundary for both networks.
    pub fn all_pressure(data: ManufacturedSolution) -> Self {
        Self { dim: data.dim(), tags: [[BcKind::Pressure; 6]; 2], data }
    }

    pub fn with_side(mut self, network: usize, side: usize, kind: BcKind) -> Result<Self, ProblemError> {
        if side >= 2 * self.dim || network > 1 {
            return Err(ProblemError::InvalidSide(side));
        }
        self.tags[network][side] = kind;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let has_pressure = |n: usize| self.tags[n][..2 * self.dim].contains(&BcKind::Pressure);
        if !has_pressure(0) && !has_pressure(1) {
            return Err(ProblemError::PressureUndetermined(1));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &ManufacturedSolution {
        &self.data
    }

    pub fn kind(&self, network: usize, side: usize) -> BcKind {
        self.tags[network][side]
    }

    pub fn is_all_pressure(&self) -> bool {
        self.tags.iter().all(|t| t[..2 * self.dim].iter().all(|&k| k == BcKind::Pressure))
    }

    pub fn has_velocity_sides(&self) -> bool {
        !self.is_all_pressure()
    }

    /// Condition type on a boundary facet for one network.
    pub fn facet_kind(&self, network: usize, facet: &FacetRecord, mesh: &Mesh) -> BcKind {
        facet.box_side(mesh).map_or(BcKind::Pressure, |s| self.kind(network, s))
    }

    pub fn pressure(&self, network: usize, x: &Point, params: &DppParameters) -> f64 {
        self.data.eval(x, params).pressure(network)
    }

    pub fn normal_velocity(&self, network: usize, x: &Point, normal: &Point, params: &DppParameters) -> f64 {
        geometry::dot(&self.data.eval(x, params).velocity(network), normal)
    }
}

/// Boundary data for a mesh: pressure on all of the boundary for both
/// networks, traced from `mms`.
pub fn boundary_data(mms: &ManufacturedSolution, mesh: &Mesh) -> Result<BoundarySpec, ProblemError> {
    if mms.dim() != mesh.dim() {
        return Err(ProblemError::DimensionMismatch { mms: mms.dim(), mesh: mesh.dim() });
    }
    Ok(BoundarySpec::all_pressure(*mms))
}
