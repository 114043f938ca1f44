//! Scenario files: JSON descriptions of the vessel, thruster layout,
//! operating region, start state, dock pose, weights and horizon, with full
//! validation and presets for the bundled harbors.

use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{containment_residuals, ConvexPolygon, GeometryError};
use crate::mpc::{Mpc, StartState};
use crate::ocp::{legendre_grid, GridError, OcpSetup, Weights};
use crate::thrust::{
    full_alphas, northern_clipper_thrusters, AllocationWeights, ThrustError, ThrusterKind,
    ThrusterSpec,
};
use crate::vessel::{assemble_model, ModelError, ModelMatrices, Pose, Velocity, VesselParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema version {0} (expected 1)")]
    Schema(u32),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("field {field}: {problem}")]
    Invalid { field: String, problem: String },
    #[error("non-convex region: {0}")]
    Region(GeometryError),
    #[error("dock pose infeasible: safety polygon leaves the region by {0:.2} m")]
    DockInfeasible(f64),
    #[error("vessel model: {0}")]
    Model(#[from] ModelError),
    #[error("thrusters: {0}")]
    Thrust(#[from] ThrustError),
    #[error("collocation grid: {0}")]
    Grid(#[from] GridError),
}

fn invalid(field: &str, problem: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        problem: problem.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema: u32,
    #[serde(default)]
    name: Option<String>,
    vessel: VesselField,
    thrusters: ThrustersField,
    /// Operating-region vertices in NED meters; `null` for open water.
    region: Option<Vec<[f64; 2]>>,
    dock: PoseField,
    start: StartField,
    #[serde(default)]
    weights: Option<WeightsField>,
    #[serde(default)]
    horizon: Option<HorizonField>,
    #[serde(default = "default_margin")]
    safety_margin: f64,
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum VesselField {
    Preset(String),
    Custom(Box<VesselCustom>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VesselCustom {
    length: f64,
    mass: f64,
    gravity: f64,
    m_bis: [[f64; 3]; 3],
    d_bis: [[f64; 3]; 3],
    hull: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ThrustersField {
    Preset(String),
    Custom(Vec<ThrusterField>),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum ThrusterField {
    Azimuth {
        lx: f64,
        ly: f64,
        f_min: f64,
        f_max: f64,
        alpha_min: f64,
        alpha_max: f64,
        alpha_rate_max: f64,
    },
    Fixed {
        lx: f64,
        ly: f64,
        alpha: f64,
        f_min: f64,
        f_max: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseField {
    x: f64,
    y: f64,
    psi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartField {
    x: f64,
    y: f64,
    psi: f64,
    #[serde(default)]
    u: f64,
    #[serde(default)]
    v: f64,
    #[serde(default)]
    r: f64,
    /// One angle per azimuth thruster.
    alpha: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsField {
    #[serde(default)]
    q_eta: Option<[f64; 3]>,
    #[serde(default)]
    q_nu: Option<[f64; 3]>,
    #[serde(default)]
    r_f: Option<f64>,
    #[serde(default)]
    rho: Option<f64>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    w: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HorizonField {
    duration: f64,
    intervals: usize,
    #[serde(default = "default_degree")]
    degree: usize,
}

fn default_degree() -> usize {
    3
}

/// Horizon discretization carried by the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub duration: f64,
    pub intervals: usize,
    pub degree: usize,
}

impl Default for Horizon {
    fn default() -> Self {
        Self {
            duration: 300.0,
            intervals: 30,
            degree: 3,
        }
    }
}

/// Fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub params: VesselParams,
    pub model: ModelMatrices,
    pub specs: Vec<ThrusterSpec>,
    pub region: Option<ConvexPolygon>,
    pub safety_polygon: ConvexPolygon,
    pub safety_margin: f64,
    pub eta_d: Vector3<f64>,
    pub start_pose: Pose,
    pub start_velocity: Velocity,
    /// Initial azimuth angles, one per azimuth thruster.
    pub start_alpha: Vec<f64>,
    pub weights: Weights,
    pub horizon: Horizon,
}

impl Scenario {
    pub fn n_azimuth(&self) -> usize {
        self.specs.iter().filter(|s| s.is_azimuth()).count()
    }

    pub fn ocp_setup(&self) -> Result<OcpSetup, ScenarioError> {
        let grid = legendre_grid(
            self.horizon.degree,
            self.horizon.duration / self.horizon.intervals as f64,
        )?;
        Ok(OcpSetup {
            model: self.model.clone(),
            specs: self.specs.clone(),
            weights: self.weights.clone(),
            grid,
            n_intervals: self.horizon.intervals,
            region: self.region.as_ref().map(|r| r.to_halfspaces()),
            safety_vertices: self.safety_polygon.vertices().to_vec(),
            eta_d: self.eta_d,
        })
    }

    pub fn mpc(&self) -> Result<Mpc, ScenarioError> {
        Ok(Mpc::new(self.ocp_setup()?, sqp::SolverSettings::default()))
    }

    pub fn start_state(&self) -> StartState {
        StartState {
            pose: self.start_pose,
            velocity: self.start_velocity,
            alpha: full_alphas(&self.specs, &self.start_alpha),
        }
    }
}

/// Bundled scenario sources, usable as `--scenario <name>`.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "open-water" => Some(include_str!("../scenarios/open-water.json")),
        "harbor-slip" => Some(include_str!("../scenarios/harbor-slip.json")),
        "corner-berth" => Some(include_str!("../scenarios/corner-berth.json")),
        _ => None,
    }
}

/// Load a scenario from a path, falling back to the bundled set when the
/// argument is a known name rather than a file.
pub fn load(path_or_name: &str) -> Result<Scenario, ScenarioError> {
    let p = Path::new(path_or_name);
    if p.exists() {
        let text = std::fs::read_to_string(p)?;
        let name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
        parse_str(&text, &name)
    } else if let Some(text) = builtin(path_or_name) {
        parse_str(text, path_or_name)
    } else {
        Err(ScenarioError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{path_or_name} is neither a file nor a bundled scenario"),
        )))
    }
}

/// Parse and validate scenario JSON.
pub fn parse_str(text: &str, fallback_name: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.schema != 1 {
        return Err(ScenarioError::Schema(file.schema));
    }

    let params = match &file.vessel {
        VesselField::Preset(p) if p == "northern-clipper" => VesselParams::northern_clipper(),
        VesselField::Preset(p) => return Err(ScenarioError::UnknownPreset(p.clone())),
        VesselField::Custom(c) => VesselParams {
            length: c.length,
            mass: c.mass,
            gravity: c.gravity,
            m_bis: Matrix3::from_fn(|i, j| c.m_bis[i][j]),
            d_bis: Matrix3::from_fn(|i, j| c.d_bis[i][j]),
            hull_vertices: c.hull.iter().map(|p| Vector2::new(p[0], p[1])).collect(),
        },
    };
    let model = assemble_model(&params)?;

    let specs = match &file.thrusters {
        ThrustersField::Preset(p) if p == "northern-clipper" => {
            northern_clipper_thrusters(params.mass, params.gravity)
        }
        ThrustersField::Preset(p) => return Err(ScenarioError::UnknownPreset(p.clone())),
        ThrustersField::Custom(list) => list
            .iter()
            .map(|t| match *t {
                ThrusterField::Azimuth {
                    lx,
                    ly,
                    f_min,
                    f_max,
                    alpha_min,
                    alpha_max,
                    alpha_rate_max,
                } => ThrusterSpec {
                    kind: ThrusterKind::Azimuth {
                        alpha_min,
                        alpha_max,
                        alpha_rate_max,
                    },
                    lx,
                    ly,
                    f_min,
                    f_max,
                },
                ThrusterField::Fixed {
                    lx,
                    ly,
                    alpha,
                    f_min,
                    f_max,
                } => ThrusterSpec {
                    kind: ThrusterKind::Fixed { alpha },
                    lx,
                    ly,
                    f_min,
                    f_max,
                },
            })
            .collect(),
    };
    for spec in &specs {
        spec.validate()?;
    }
    let n_azimuth = specs.iter().filter(|s| s.is_azimuth()).count();

    // Hull and safety polygon.
    if !(file.safety_margin >= 0.0 && file.safety_margin.is_finite()) {
        return Err(invalid("safety_margin", "must be finite and nonnegative"));
    }
    let hull = params
        .hull_polygon()
        .map_err(|e| invalid("vessel.hull", e.to_string()))?;
    let safety_polygon = hull
        .dilate(file.safety_margin)
        .map_err(|e| invalid("vessel.hull", e.to_string()))?;

    // Operating region: explicit convex polygon (clockwise input accepted).
    let region = match &file.region {
        None => None,
        Some(pts) => {
            let verts: Vec<Vector2<f64>> = pts.iter().map(|p| Vector2::new(p[0], p[1])).collect();
            Some(ConvexPolygon::new(verts).map_err(ScenarioError::Region)?)
        }
    };

    let eta_d = Vector3::new(file.dock.x, file.dock.y, file.dock.psi);
    if !eta_d.iter().all(|v| v.is_finite()) {
        return Err(invalid("dock", "pose must be finite"));
    }
    if let Some(region) = &region {
        let hs = region.to_halfspaces();
        let res = containment_residuals(
            &hs,
            &Pose::new(eta_d[0], eta_d[1], eta_d[2]),
            safety_polygon.vertices(),
        );
        let min = res.iter().fold(f64::INFINITY, |acc, &r| acc.min(r));
        if min < 0.0 {
            return Err(ScenarioError::DockInfeasible(-min));
        }
    }

    let s = &file.start;
    for (v, field) in [
        (s.x, "start.x"),
        (s.y, "start.y"),
        (s.psi, "start.psi"),
        (s.u, "start.u"),
        (s.v, "start.v"),
        (s.r, "start.r"),
    ] {
        if !v.is_finite() {
            return Err(invalid(field, "must be finite"));
        }
    }
    if s.alpha.len() != n_azimuth {
        return Err(invalid(
            "start.alpha",
            format!("expected {} azimuth angles, got {}", n_azimuth, s.alpha.len()),
        ));
    }
    let mut az = specs.iter().filter(|sp| sp.is_azimuth());
    for (i, &a) in s.alpha.iter().enumerate() {
        if let Some(ThrusterSpec {
            kind:
                ThrusterKind::Azimuth {
                    alpha_min,
                    alpha_max,
                    ..
                },
            ..
        }) = az.next()
        {
            if a < *alpha_min || a > *alpha_max {
                return Err(invalid(
                    "start.alpha",
                    format!("angle {i} = {a} outside sector [{alpha_min}, {alpha_max}]"),
                ));
            }
        }
    }

    let weights = build_weights(file.weights.as_ref(), specs.len())?;
    weights
        .validate()
        .map_err(|e| invalid("weights", e.to_string()))?;

    let horizon = match &file.horizon {
        None => Horizon::default(),
        Some(hf) => {
            if !(hf.duration > 0.0) || hf.intervals == 0 {
                return Err(invalid("horizon", "duration and intervals must be positive"));
            }
            Horizon {
                duration: hf.duration,
                intervals: hf.intervals,
                degree: hf.degree,
            }
        }
    };

    Ok(Scenario {
        name: file.name.unwrap_or_else(|| fallback_name.to_string()),
        params,
        model,
        specs,
        region,
        safety_polygon,
        safety_margin: file.safety_margin,
        eta_d,
        start_pose: Pose::new(s.x, s.y, s.psi),
        start_velocity: Velocity::new(s.u, s.v, s.r),
        start_alpha: s.alpha.clone(),
        weights,
        horizon,
    })
}

fn build_weights(
    field: Option<&WeightsField>,
    n_thrusters: usize,
) -> Result<Weights, ScenarioError> {
    let mut weights = Weights::default_for(n_thrusters);
    let Some(f) = field else {
        return Ok(weights);
    };
    if let Some(q) = f.q_eta {
        weights.q_eta = Matrix3::from_diagonal(&Vector3::new(q[0], q[1], q[2]));
    }
    if let Some(q) = f.q_nu {
        weights.q_nu = Matrix3::from_diagonal(&Vector3::new(q[0], q[1], q[2]));
    }
    if let Some(rf) = f.r_f {
        weights.r_f = DMatrix::identity(n_thrusters, n_thrusters) * rf;
    }
    let rho = f.rho.unwrap_or(weights.allocation.rho);
    let epsilon = f.epsilon.unwrap_or(weights.allocation.epsilon);
    let w = match &f.w {
        Some(w) => {
            if w.len() != n_thrusters {
                return Err(invalid(
                    "weights.w",
                    format!("expected {} entries, got {}", n_thrusters, w.len()),
                ));
            }
            w.clone()
        }
        None => weights.allocation.w_diag.clone(),
    };
    weights.allocation =
        AllocationWeights::new(rho, epsilon, w).map_err(|e| invalid("weights", e.to_string()))?;
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minimal_preset_scenario_parses() {
        let text = r#"{
            "schema": 1,
            "vessel": "northern-clipper",
            "thrusters": "northern-clipper",
            "region": [[200, 200], [-200, 200], [-200, -200], [200, -200]],
            "dock": {"x": 0, "y": 0, "psi": 0},
            "start": {"x": 100, "y": 50, "psi": 0.3, "alpha": [0, 0]}
        }"#;
        let sc = parse_str(text, "test").unwrap();
        assert_eq!(sc.specs.len(), 3);
        assert_eq!(sc.n_azimuth(), 2);
        assert_relative_eq!(sc.model.m[(0, 0)], 6.7644e6, max_relative = 1e-6);
        assert_eq!(sc.horizon, Horizon::default());
        assert!(sc.region.is_some());
    }

    #[test]
    fn clockwise_region_is_reordered() {
        let text = r#"{
            "schema": 1,
            "vessel": "northern-clipper",
            "thrusters": "northern-clipper",
            "region": [[200, -200], [-200, -200], [-200, 200], [200, 200]],
            "dock": {"x": 0, "y": 0, "psi": 0},
            "start": {"x": 100, "y": 50, "psi": 0.3, "alpha": [0, 0]}
        }"#;
        let sc = parse_str(text, "test").unwrap();
        let region = sc.region.unwrap();
        // CCW after normalization: positive signed area.
        let v = region.vertices();
        let area2: f64 = (0..v.len())
            .map(|i| {
                let a = v[i];
                let b = v[(i + 1) % v.len()];
                a.x * b.y - a.y * b.x
            })
            .sum();
        assert!(area2 > 0.0);
    }

    #[test]
    fn reflex_region_vertex_is_rejected_with_its_index() {
        let text = r#"{
            "schema": 1,
            "vessel": "northern-clipper",
            "thrusters": "northern-clipper",
            "region": [[200, -200], [200, 200], [0, 10], [-200, 200], [-200, -200]],
            "dock": {"x": 0, "y": 0, "psi": 0},
            "start": {"x": 100, "y": 50, "psi": 0.3, "alpha": [0, 0]}
        }"#;
        let err = parse_str(text, "test").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("non-convex region"), "{msg}");
        assert!(msg.contains("vertex"), "{msg}");
    }

    #[test]
    fn unreachable_dock_is_rejected() {
        let text = r#"{
            "schema": 1,
            "vessel": "northern-clipper",
            "thrusters": "northern-clipper",
            "region": [[200, 200], [100, 200], [100, 100], [200, 100]],
            "dock": {"x": 0, "y": 0, "psi": 0},
            "start": {"x": 150, "y": 150, "psi": 0, "alpha": [0, 0]}
        }"#;
        let err = parse_str(text, "test").unwrap_err();
        assert!(matches!(err, ScenarioError::DockInfeasible(_)));
    }

    #[test]
    fn json_errors_carry_position() {
        let err = parse_str("{\n  \"schema\": 1,,\n}", "test").unwrap_err();
        match err {
            ScenarioError::Json { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn preset_expansion_is_bit_stable() {
        let a = parse_str(builtin("harbor-slip").unwrap(), "harbor-slip").unwrap();
        let b = parse_str(builtin("harbor-slip").unwrap(), "harbor-slip").unwrap();
        assert_eq!(a.model.m, b.model.m);
        assert_eq!(a.model.m_inv, b.model.m_inv);
        assert_eq!(a.specs, b.specs);
        assert_eq!(
            a.safety_polygon.vertices(),
            b.safety_polygon.vertices()
        );
        // Spot-check exact bits of a derived quantity.
        assert_eq!(a.model.m[(0, 0)].to_bits(), b.model.m[(0, 0)].to_bits());
    }

    #[test]
    fn bundled_scenarios_validate() {
        for name in ["open-water", "harbor-slip", "corner-berth"] {
            let sc = parse_str(builtin(name).unwrap(), name).unwrap();
            assert_eq!(sc.name, name);
            let setup = sc.ocp_setup().unwrap();
            assert_eq!(setup.n_intervals, sc.horizon.intervals);
            // Start state must respect the safety polygon where a region exists.
            if let Some(region) = &sc.region {
                let hs = region.to_halfspaces();
                let res = containment_residuals(
                    &hs,
                    &sc.start_pose,
                    sc.safety_polygon.vertices(),
                );
                let min = res.iter().fold(f64::INFINITY, |acc, &r| acc.min(r));
                assert!(min > 0.0, "{name}: start clearance {min}");
            }
        }
    }

    #[test]
    fn weight_overrides_apply() {
        let text = r#"{
            "schema": 1,
            "vessel": "northern-clipper",
            "thrusters": "northern-clipper",
            "region": null,
            "dock": {"x": 0, "y": 0, "psi": 0},
            "start": {"x": 10, "y": 0, "psi": 0, "alpha": [0, 0]},
            "weights": {"q_nu": [0.5, 6.0, 1.0], "rho": 2.0}
        }"#;
        let sc = parse_str(text, "test").unwrap();
        assert_eq!(sc.weights.q_nu[(1, 1)], 6.0);
        assert_eq!(sc.weights.allocation.rho, 2.0);
        assert_eq!(sc.weights.q_eta[(2, 2)], 4.0); // default untouched
    }
}
