//! Scenario files, analysis commands and trajectory CSV.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "params": { "cart_mass": 0.5, "link_masses": [0.1, 0.1], "link_lengths": [0.1, 0.1] },
//!   "initial": { "equilibrium": { "signs": [-1, 1],
//!                "perturbations": [{ "link": 2, "tilt_degrees": 1.0 }] } },
//!   "controller": { "lqr": { "target": [1, 1], "q_blocks": [8, 1, 8, 1] } },
//!   "duration": 10.0, "dt": 0.001, "sample_every": 10
//! }
//! ```
//!
//! Unknown keys are rejected. Exit codes: 0 success, 1 invalid input,
//! 2 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::control::{
    block_weights, closed_loop_spectrum, controllability, lqr_design, FeedbackController, GainSet,
    RANK_RELATIVE,
};
use crate::dynamics::{simulate, Controller, Schedule, Trajectory, Uncontrolled};
use crate::equilibria::{
    classify, enumerate_equilibria, equilibrium_state, linearize, pencil_spectrum, EquilibriumSpec,
};
use crate::error::Error;
use crate::model::{
    build_inertia, project_state, validate_state, ChainParams, ConstraintKind, State,
    DEFAULT_GRAVITY,
};
use crate::numerics::{Mat, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message} at line {line}, column {column}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation(_) => "validation",
            CliError::Model(e) if e.is_numerical() => "numerical",
            CliError::Model(_) => "model",
            CliError::Io { .. } => "io",
        }
    }

    /// Machine-readable form written to stderr on failure.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::Parse { line, column, .. } = self {
            v["line"] = json!(line);
            v["column"] = json!(column);
        }
        v
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    description: Option<String>,
    params: RawParams,
    initial: RawInitial,
    #[serde(default)]
    controller: RawController,
    #[serde(default = "default_duration")]
    duration: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_sample_every")]
    sample_every: usize,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    reference: Option<Vec<i8>>,
}

fn default_duration() -> f64 {
    Schedule::default().duration
}

fn default_dt() -> f64 {
    Schedule::default().dt
}

fn default_sample_every() -> usize {
    Schedule::default().sample_every
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    cart_mass: f64,
    link_masses: Vec<f64>,
    link_lengths: Vec<f64>,
    #[serde(default = "default_gravity")]
    gravity: f64,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawInitial {
    Explicit {
        x: [f64; 2],
        xdot: [f64; 2],
        q: Vec<[f64; 3]>,
        omega: Vec<[f64; 3]>,
        #[serde(default)]
        normalize: bool,
    },
    Equilibrium {
        signs: Vec<i8>,
        #[serde(default)]
        x: [f64; 2],
        #[serde(default)]
        xdot: [f64; 2],
        #[serde(default)]
        perturbations: Vec<Perturbation>,
        #[serde(default)]
        omega: Option<Vec<[f64; 3]>>,
    },
}

/// Tilt of one link away from its equilibrium direction.
///
/// Either a tilt angle with an azimuth, giving
/// `q = sᵢe₃ cos θ + (cos φ, sin φ, 0) sin θ`, or a rotation of `sᵢe₃`
/// about an arbitrary axis. Both are exact rotations of `sᵢe₃`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Perturbation {
    /// 1-based.
    link: usize,
    #[serde(default)]
    tilt_degrees: Option<f64>,
    #[serde(default)]
    azimuth_degrees: Option<f64>,
    #[serde(default)]
    axis: Option<[f64; 3]>,
    #[serde(default)]
    degrees: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RawController {
    #[default]
    None,
    Pd {
        target: Vec<i8>,
        #[serde(default)]
        cart_position: [f64; 2],
        gains: RawGains,
    },
    Lqr {
        target: Vec<i8>,
        #[serde(default)]
        cart_position: [f64; 2],
        #[serde(default)]
        q_diag: Option<Vec<f64>>,
        #[serde(default)]
        q_blocks: Option<[f64; 4]>,
        #[serde(default)]
        r_diag: Option<[f64; 2]>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGains {
    k_x: [[f64; 2]; 2],
    k_xdot: [[f64; 2]; 2],
    k_q: Vec<[[f64; 2]; 2]>,
    k_omega: Vec<[[f64; 2]; 2]>,
}

/// Default LQR state weights per block of `(δx, ξ, ẋ, ω)`.
pub const DEFAULT_Q_BLOCKS: [f64; 4] = [8.0, 1.0, 8.0, 1.0];

#[derive(Clone, Debug)]
pub enum ControllerSpec {
    None,
    Pd {
        target: EquilibriumSpec,
        gains: GainSet,
    },
    Lqr {
        target: EquilibriumSpec,
        q: Mat,
        r: Mat,
    },
}

impl ControllerSpec {
    pub fn target(&self) -> Option<&EquilibriumSpec> {
        match self {
            ControllerSpec::None => None,
            ControllerSpec::Pd { target, .. } | ControllerSpec::Lqr { target, .. } => Some(target),
        }
    }
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub description: Option<String>,
    pub params: ChainParams,
    pub initial: State,
    /// Sign tuple the initial state was built from, if any.
    pub initial_equilibrium: Option<EquilibriumSpec>,
    pub controller: ControllerSpec,
    pub schedule: Schedule,
    pub output: Option<PathBuf>,
    /// Equilibrium the error metrics are measured against.
    pub reference: EquilibriumSpec,
}

impl ScenarioConfig {
    /// Equilibrium analysed by `linearize`, `controllability` and `lqr`:
    /// the controller target, else the explicit reference.
    pub fn analysis_target(&self) -> &EquilibriumSpec {
        self.controller.target().unwrap_or(&self.reference)
    }

    pub fn set_dt(&mut self, dt: f64) -> Result<(), CliError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        self.schedule.dt = dt;
        Ok(())
    }

    pub fn set_duration(&mut self, duration: f64) -> Result<(), CliError> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(invalid(format!(
                "duration must be positive, got {duration}"
            )));
        }
        self.schedule.duration = duration;
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let params = ChainParams::new(
        raw.params.cart_mass,
        raw.params.link_masses,
        raw.params.link_lengths,
        raw.params.gravity,
    )
    .map_err(|e| invalid(e.to_string()))?;
    let n = params.n();

    let (initial, initial_equilibrium) = build_initial(raw.initial, n)?;
    let controller = build_controller(raw.controller, n)?;

    let schedule = Schedule {
        sample_every: raw.sample_every,
        ..Schedule::default()
    };
    if raw.sample_every == 0 {
        return Err(invalid("sample_every must be at least 1"));
    }
    let mut config = ScenarioConfig {
        description: raw.description,
        params,
        initial,
        reference: EquilibriumSpec::hanging(n),
        initial_equilibrium,
        controller,
        schedule,
        output: raw.output,
    };
    config.set_dt(raw.dt)?;
    config.set_duration(raw.duration)?;

    config.reference = match raw.reference {
        Some(signs) => spec_for(signs, n, "reference")?,
        None => config
            .controller
            .target()
            .or(config.initial_equilibrium.as_ref())
            .cloned()
            .unwrap_or_else(|| EquilibriumSpec::hanging(n)),
    };
    Ok(config)
}

fn spec_for(signs: Vec<i8>, n: usize, what: &str) -> Result<EquilibriumSpec, CliError> {
    if signs.len() != n {
        return Err(invalid(format!(
            "{what} has {} signs for {n} links",
            signs.len()
        )));
    }
    EquilibriumSpec::new(signs).map_err(|e| invalid(format!("{what}: {e}")))
}

fn vectors(v: &[[f64; 3]]) -> Vec<Vec3> {
    v.iter().map(|a| Vec3::new(a[0], a[1], a[2])).collect()
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90°.
fn sin_cos_degrees(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    match r {
        0.0 => (0.0, 1.0),
        90.0 => (1.0, 0.0),
        180.0 => (0.0, -1.0),
        270.0 => (-1.0, 0.0),
        _ => deg.to_radians().sin_cos(),
    }
}

fn perturbed(base: Vec3, p: &Perturbation) -> Result<Vec3, CliError> {
    let link = p.link;
    match (p.tilt_degrees, p.axis, p.degrees) {
        (Some(tilt), None, None) => {
            let (st, ct) = sin_cos_degrees(tilt);
            let (sa, ca) = sin_cos_degrees(p.azimuth_degrees.unwrap_or(0.0));
            Ok(base * ct + Vec3::new(ca, sa, 0.0) * st)
        }
        (None, Some(axis), Some(deg)) if p.azimuth_degrees.is_none() => {
            let axis = Vec3::new(axis[0], axis[1], axis[2]);
            let norm = axis.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(invalid(format!(
                    "perturbation of link {link} has a zero axis"
                )));
            }
            Ok(base.rotated(axis / norm, deg.to_radians()))
        }
        _ => Err(invalid(format!(
            "perturbation of link {link} needs either tilt_degrees (with optional \
             azimuth_degrees) or axis with degrees"
        ))),
    }
}

fn build_initial(raw: RawInitial, n: usize) -> Result<(State, Option<EquilibriumSpec>), CliError> {
    match raw {
        RawInitial::Explicit {
            x,
            xdot,
            q,
            omega,
            normalize,
        } => {
            if q.len() != n || omega.len() != n {
                return Err(invalid(format!(
                    "initial state has {} directions and {} angular velocities for {n} links",
                    q.len(),
                    omega.len()
                )));
            }
            let state = State {
                x,
                xdot,
                q: vectors(&q),
                omega: vectors(&omega),
            };
            let state = if normalize {
                project_state(&state).map_err(|e| invalid(e.to_string()))?
            } else {
                if let Some(v) = validate_state(&state, crate::dynamics::INITIAL_STATE_TOL).first()
                {
                    let what = match v.kind {
                        ConstraintKind::UnitNorm => "direction is not unit length",
                        ConstraintKind::Tangency => {
                            "angular velocity is not tangent to the direction"
                        }
                        ConstraintKind::LinkCount => "link count is inconsistent",
                        ConstraintKind::NonFinite => "entries are not finite",
                    };
                    return Err(invalid(format!(
                        "initial state: link {} {what} (violation {:e}); set \"normalize\": true to project",
                        v.link + 1,
                        v.magnitude
                    )));
                }
                state
            };
            Ok((state, None))
        }
        RawInitial::Equilibrium {
            signs,
            x,
            xdot,
            perturbations,
            omega,
        } => {
            let spec = spec_for(signs, n, "initial equilibrium")?;
            let mut state = equilibrium_state(&spec);
            state.x = x;
            state.xdot = xdot;
            let mut seen = vec![false; n];
            for p in &perturbations {
                if p.link == 0 || p.link > n {
                    return Err(invalid(format!(
                        "perturbation names link {} of {n}",
                        p.link
                    )));
                }
                if std::mem::replace(&mut seen[p.link - 1], true) {
                    return Err(invalid(format!("link {} is perturbed twice", p.link)));
                }
                state.q[p.link - 1] = perturbed(spec.direction(p.link - 1), p)?;
            }
            if let Some(omega) = omega {
                if omega.len() != n {
                    return Err(invalid(format!(
                        "initial omega has {} entries for {n} links",
                        omega.len()
                    )));
                }
                state.omega = vectors(&omega);
            }
            let state = project_state(&state).map_err(|e| invalid(e.to_string()))?;
            Ok((state, Some(spec)))
        }
    }
}

fn mat2(rows: [[f64; 2]; 2]) -> Mat {
    Mat::from_rows(&rows)
}

fn build_controller(raw: RawController, n: usize) -> Result<ControllerSpec, CliError> {
    match raw {
        RawController::None => Ok(ControllerSpec::None),
        RawController::Pd {
            target,
            cart_position,
            gains,
        } => {
            let target =
                spec_for(target, n, "controller target")?.with_cart_position(cart_position);
            if gains.k_q.len() != n || gains.k_omega.len() != n {
                return Err(invalid(format!(
                    "pd gains list {} k_q and {} k_omega blocks for {n} links",
                    gains.k_q.len(),
                    gains.k_omega.len()
                )));
            }
            let gains = GainSet {
                k_x: mat2(gains.k_x),
                k_xdot: mat2(gains.k_xdot),
                k_q: gains.k_q.into_iter().map(mat2).collect(),
                k_omega: gains.k_omega.into_iter().map(mat2).collect(),
            };
            if !gains.is_finite() {
                return Err(invalid("pd gains must be finite"));
            }
            Ok(ControllerSpec::Pd { target, gains })
        }
        RawController::Lqr {
            target,
            cart_position,
            q_diag,
            q_blocks,
            r_diag,
        } => {
            let target =
                spec_for(target, n, "controller target")?.with_cart_position(cart_position);
            let dim = 4 * n + 4;
            let q = match (q_diag, q_blocks) {
                (Some(_), Some(_)) => {
                    return Err(invalid("give either q_diag or q_blocks, not both"))
                }
                (Some(d), None) => {
                    if d.len() != dim {
                        return Err(invalid(format!(
                            "q_diag has {} entries, expected {dim}",
                            d.len()
                        )));
                    }
                    d
                }
                (None, blocks) => {
                    let [a, b, c, d] = blocks.unwrap_or(DEFAULT_Q_BLOCKS);
                    let q = block_weights(n, a, b, c, d);
                    (0..dim).map(|k| q[(k, k)]).collect()
                }
            };
            if q.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(invalid("LQR state weights must be finite and non-negative"));
            }
            let r = r_diag.unwrap_or([1.0, 1.0]);
            if r.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(invalid("LQR input weights must be finite and positive"));
            }
            Ok(ControllerSpec::Lqr {
                target,
                q: Mat::from_diag(&q),
                r: Mat::from_diag(&r),
            })
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Equilibria,
    Linearize,
    Controllability,
    Lqr,
    Stabilize,
}

/// What a command produced.
#[derive(Clone, Debug)]
pub enum Artifact {
    Csv(Trajectory),
    Json(serde_json::Value),
}

#[derive(Serialize)]
struct EquilibriumRow {
    signs: Vec<i8>,
    kind: crate::equilibria::EquilibriumKind,
    spectrum: crate::equilibria::SpectralReport,
}

/// Designs LQR gains for `target`, refusing uncontrollable equilibria.
fn design_lqr(
    config: &ScenarioConfig,
    target: &EquilibriumSpec,
    q: &Mat,
    r: &Mat,
) -> Result<
    (
        crate::control::LqrDesign,
        crate::control::ControllabilityCertificate,
        f64,
    ),
    CliError,
> {
    let lin = linearize(&config.params, &build_inertia(&config.params), target)?;
    let cert = controllability(&lin, RANK_RELATIVE)?;
    if !cert.controllable {
        return Err(invalid(format!(
            "equilibrium {target} is not controllable; refusing to design feedback"
        )));
    }
    let design = lqr_design(&lin, q, r)?;
    let max_re = closed_loop_spectrum(&lin, &design.gains)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((design, cert, max_re))
}

fn run_simulation(config: &ScenarioConfig, require_lqr: bool) -> Result<Trajectory, CliError> {
    let controller: Box<dyn Controller> = match &config.controller {
        ControllerSpec::None if require_lqr => {
            return Err(invalid("stabilize needs an lqr controller"));
        }
        ControllerSpec::Pd { .. } if require_lqr => {
            return Err(invalid("stabilize needs an lqr controller"));
        }
        ControllerSpec::None => Box::new(Uncontrolled),
        ControllerSpec::Pd { target, gains } => Box::new(FeedbackController {
            gains: gains.clone(),
            target: target.clone(),
        }),
        ControllerSpec::Lqr { target, q, r } => {
            let (design, _, _) = design_lqr(config, target, q, r)?;
            Box::new(FeedbackController {
                gains: design.gains,
                target: target.clone(),
            })
        }
    };
    Ok(simulate(
        &config.params,
        &config.initial,
        controller.as_ref(),
        &config.schedule,
        &config.reference,
    )?)
}

pub fn run(command: Command, config: &ScenarioConfig) -> Result<Artifact, CliError> {
    let params = &config.params;
    let target = config.analysis_target();
    match command {
        Command::Simulate => Ok(Artifact::Csv(run_simulation(config, false)?)),
        Command::Stabilize => Ok(Artifact::Csv(run_simulation(config, true)?)),
        Command::Equilibria => {
            let inertia = build_inertia(params);
            let rows = enumerate_equilibria(params.n())?
                .into_iter()
                .map(|spec| {
                    let lin = linearize(params, &inertia, &spec)?;
                    Ok(EquilibriumRow {
                        kind: classify(&spec),
                        spectrum: pencil_spectrum(&lin)?,
                        signs: spec.signs().to_vec(),
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(Artifact::Json(json!(rows)))
        }
        Command::Linearize => {
            let lin = linearize(params, &build_inertia(params), target)?;
            Ok(Artifact::Json(json!({
                "equilibrium": target,
                "m": lin.m,
                "g": lin.g,
                "b": lin.b,
            })))
        }
        Command::Controllability => {
            let lin = linearize(params, &build_inertia(params), target)?;
            let cert = controllability(&lin, RANK_RELATIVE)?;
            Ok(Artifact::Json(
                json!({ "equilibrium": target, "certificate": cert }),
            ))
        }
        Command::Lqr => {
            let ControllerSpec::Lqr { target, q, r } = &config.controller else {
                return Err(invalid("lqr needs an lqr controller section"));
            };
            let (design, cert, max_re) = design_lqr(config, target, q, r)?;
            Ok(Artifact::Json(json!({
                "equilibrium": target,
                "gains": design.gains,
                "riccati_relative_residual": design.relative_residual,
                "newton_steps": design.newton_steps,
                "closed_loop_max_real_part": max_re,
                "controllability_margin": cert.margin,
            })))
        }
    }
}

/// `t,x1,x2,xd1,xd2,q11,q12,q13,w11,w12,w13,…,u1,u2,T,V,E,eq,ew`.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "x1", "x2", "xd1", "xd2"].map(String::from).to_vec();
    for i in 1..=n {
        for c in 1..=3 {
            h.push(format!("q{i}{c}"));
        }
        for c in 1..=3 {
            h.push(format!("w{i}{c}"));
        }
    }
    h.extend(["u1", "u2", "T", "V", "E", "eq", "ew"].map(String::from));
    h
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.samples
        .iter()
        .map(|s| {
            let mut row = vec![
                s.t,
                s.state.x[0],
                s.state.x[1],
                s.state.xdot[0],
                s.state.xdot[1],
            ];
            for (q, w) in s.state.q.iter().zip(&s.state.omega) {
                row.extend(q.to_array());
                row.extend(w.to_array());
            }
            row.extend([
                s.u[0],
                s.u[1],
                s.energies.kinetic,
                s.energies.potential,
                s.energies.total,
                s.e_q,
                s.e_omega,
            ]);
            row
        })
        .collect()
}

fn csv_error(e: impl std::fmt::Display) -> CliError {
    invalid(format!("CSV: {e}"))
}

/// CSV text with 17 significant digits per value.
pub fn to_csv(traj: &Trajectory) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(csv_header(traj.n)).expect("in-memory CSV");
    for row in trajectory_rows(traj) {
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))
            .expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("ASCII CSV")
}

pub fn write_csv(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    fs::write(path, to_csv(traj)).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv(text: &str) -> Result<CsvTable, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(String::from)
        .collect();
    let rows = r
        .records()
        .map(|rec| {
            rec.map_err(csv_error)?
                .iter()
                .map(|v| v.parse::<f64>().map_err(csv_error))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CsvTable { header, rows })
}

fn write_output(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Command line overrides applied on top of the scenario file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
}

/// Loads, runs and writes; returns the process exit code.
pub fn execute(command: Command, config_path: &Path, overrides: &Overrides) -> i32 {
    let result = (|| {
        let mut config = load_config(config_path)?;
        if let Some(dt) = overrides.dt {
            config.set_dt(dt)?;
        }
        if let Some(d) = overrides.duration {
            config.set_duration(d)?;
        }
        let output = overrides.output.clone().or_else(|| config.output.clone());
        let text = match run(command, &config)? {
            Artifact::Csv(traj) => to_csv(&traj),
            Artifact::Json(v) => {
                let mut s = serde_json::to_string_pretty(&v).expect("serializable output");
                s.push('\n');
                s
            }
        };
        write_output(&text, output.as_deref())
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
