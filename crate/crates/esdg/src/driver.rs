//! Batch front end: prepare a case, advance it in time, emit the
//! diagnostic series, snapshots and reports, and run audits and
//! convergence sweeps.

mod audit;

pub use audit::{audit_case, AuditCheck, AuditReport};

use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{content_hash, CaseConfig, Equation, InitialCondition, MeshSpec};
use crate::dg::{
    compute_entropy_gradients, compute_entropy_variables, rhs_burgers, rhs_linear_advdiff, rhs_nse,
    BurgersSetup, Fields1d, FieldsNse, LinearAdvDiffSetup, NseWorkspace,
};
use crate::diagnostics::{
    conserved_totals, energy_norm_1d, enstrophy, integral_1d, kinetic_energy, total_entropy,
    Sample, TimeSeries,
};
use crate::error::SolverError;
use crate::mesh::{build_box_mesh, read_mesh, Mesh, Mesh1d};
use crate::operators::OperatorSet;
use crate::physics::{GasParams, State};
use crate::time::{estimate_dt, estimate_dt_1d, step, RkScheme, StepWorkspace};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Result of a completed (non-aborted) run.
#[derive(Debug)]
pub struct RunOutput {
    pub steps: usize,
    pub t_final: f64,
    pub series: TimeSeries,
}

/// Build the operator set and 3D mesh described by a configuration.
pub fn prepare_mesh_3d(config: &CaseConfig) -> Result<(OperatorSet, Mesh), SolverError> {
    let ops = OperatorSet::new(config.degree)?;
    let mesh = match &config.mesh {
        MeshSpec::Box3d {
            extent,
            elements,
            warp,
        } => build_box_mesh(*extent, *elements, &ops, *warp)?,
        MeshSpec::File3d(path) => read_mesh(path, &ops)?,
        MeshSpec::Line1d { .. } => {
            return Err(SolverError::Config(
                "3D equation configured with a 1D mesh".into(),
            ))
        }
    };
    Ok((ops, mesh))
}

pub fn prepare_mesh_1d(config: &CaseConfig) -> Result<(OperatorSet, Mesh1d), SolverError> {
    let ops = OperatorSet::new(config.degree)?;
    match config.mesh {
        MeshSpec::Line1d {
            length,
            elements,
            periodic,
        } => Ok((ops, Mesh1d::uniform(length, elements, periodic)?)),
        _ => Err(SolverError::Config(
            "1D equation configured with a 3D mesh".into(),
        )),
    }
}

/// Taylor-Green vortex at the configured Mach number on a periodic box,
/// with an isothermal background: `p0 = 1/(gamma M^2)`, `rho = gamma
/// M^2 p` so that `T = 1` everywhere and the velocity scale is 1.
pub fn taylor_green_state(x: [f64; 3], gas: &GasParams, extent: [f64; 3]) -> State {
    let s = [
        TAU * x[0] / extent[0],
        TAU * x[1] / extent[1],
        TAU * x[2] / extent[2],
    ];
    let v = [
        s[0].sin() * s[1].cos() * s[2].cos(),
        -(s[0].cos()) * s[1].sin() * s[2].cos(),
        0.0,
    ];
    let m2 = gas.mach * gas.mach;
    let p0 = 1.0 / (gas.gamma * m2);
    let p = p0 + ((2.0 * s[0]).cos() + (2.0 * s[1]).cos()) * ((2.0 * s[2]).cos() + 2.0) / 16.0;
    let rho = gas.gamma * m2 * p;
    State::from_primitive(rho, v, p, gas)
}

/// Advected density wave: exact solution of the Euler equations with
/// constant velocity and pressure.
pub fn density_wave_state(
    x: [f64; 3],
    t: f64,
    amplitude: f64,
    velocity: [f64; 3],
    pressure: f64,
    extent: [f64; 3],
    gas: &GasParams,
) -> State {
    let phase: f64 = (0..3)
        .map(|d| TAU * (x[d] - velocity[d] * t) / extent[d])
        .sum();
    let rho = 1.0 + amplitude * phase.sin();
    State::from_primitive(rho, velocity, pressure, gas)
}

/// Exact manufactured solution of the periodic constant-coefficient
/// advection-diffusion equation.
pub fn manufactured_sine_exact(
    x: f64,
    t: f64,
    amplitude: f64,
    offset: f64,
    mode: usize,
    length: f64,
    advection: f64,
    diffusivity: f64,
) -> f64 {
    let k = TAU * mode as f64 / length;
    offset + amplitude * (-diffusivity * k * k * t).exp() * (k * (x - advection * t)).sin()
}

fn initial_field_3d(
    config: &CaseConfig,
    mesh: &Mesh,
    fields: &mut FieldsNse,
) -> Result<(), SolverError> {
    let gas = config.gas;
    let extent = mesh.extent;
    match &config.initial {
        InitialCondition::TaylorGreen => {
            fields.set_from(mesh, |x| taylor_green_state(x, &gas, extent));
        }
        InitialCondition::DensityWave {
            amplitude,
            velocity,
            pressure,
        } => {
            let (a, v, p) = (*amplitude, *velocity, *pressure);
            fields.set_from(mesh, |x| density_wave_state(x, 0.0, a, v, p, extent, &gas));
        }
        InitialCondition::Constant {
            rho,
            velocity,
            pressure,
        } => {
            let state = State::from_primitive(*rho, *velocity, *pressure, &gas);
            fields.set_from(mesh, |_| state);
        }
        InitialCondition::Table(path) => {
            let rows = read_snapshot(path, 5)?;
            if rows.len() != fields.u.len() {
                return Err(SolverError::Config(format!(
                    "snapshot has {} nodes, mesh needs {}",
                    rows.len(),
                    fields.u.len()
                )));
            }
            for (u, row) in fields.u.iter_mut().zip(rows) {
                *u = State([row[0], row[1], row[2], row[3], row[4]]);
            }
        }
        InitialCondition::ManufacturedSine { .. } => {
            return Err(SolverError::Config(
                "manufactured_sine initial data is 1D only".into(),
            ))
        }
    }
    Ok(())
}

fn initial_field_1d(
    config: &CaseConfig,
    mesh: &Mesh1d,
    ops: &OperatorSet,
    fields: &mut Fields1d,
) -> Result<(), SolverError> {
    match &config.initial {
        InitialCondition::ManufacturedSine {
            amplitude,
            offset,
            mode,
        } => {
            let (a, c, m) = (*amplitude, *offset, *mode);
            let length = mesh.length();
            fields.set_from(mesh, ops, |x| c + a * (TAU * m as f64 * x / length).sin());
        }
        InitialCondition::Constant { rho, .. } => {
            let value = *rho;
            fields.set_from(mesh, ops, |_| value);
        }
        InitialCondition::Table(path) => {
            let rows = read_snapshot(path, 1)?;
            if rows.len() != fields.u.len() {
                return Err(SolverError::Config(format!(
                    "snapshot has {} nodes, mesh needs {}",
                    rows.len(),
                    fields.u.len()
                )));
            }
            for (u, row) in fields.u.iter_mut().zip(rows) {
                *u = row[0];
            }
        }
        _ => {
            return Err(SolverError::Config(
                "3D initial data configured for a 1D equation".into(),
            ))
        }
    }
    Ok(())
}

/// Write a nodal snapshot mirroring the mesh file layout (one line per
/// node, lexicographic, i fastest) plus a sidecar byte-offset index.
pub fn write_snapshot(
    path: &Path,
    equation: Equation,
    nodes_per_element: usize,
    n_fields: usize,
    values: &[f64],
) -> Result<(), SolverError> {
    let n_elements = values.len() / (nodes_per_element * n_fields);
    let mut body = String::new();
    body.push_str(&format!("snapshot {}\n", equation.name()));
    body.push_str(&format!("elements {n_elements}\n"));
    body.push_str(&format!("nodes_per_element {nodes_per_element}\n"));
    body.push_str(&format!("fields {n_fields}\n"));
    let mut offsets = Vec::with_capacity(n_elements);
    for element in 0..n_elements {
        offsets.push(body.len());
        body.push_str(&format!("element {element}\n"));
        for node in 0..nodes_per_element {
            let base = (element * nodes_per_element + node) * n_fields;
            let row: Vec<String> = (0..n_fields)
                .map(|c| format!("{:.16e}", values[base + c]))
                .collect();
            body.push_str(&row.join(" "));
            body.push('\n');
        }
    }
    std::fs::write(path, &body)?;
    let mut index = String::new();
    for (element, offset) in offsets.iter().enumerate() {
        index.push_str(&format!("element {element} offset {offset}\n"));
    }
    std::fs::write(index_path(path), index)?;
    Ok(())
}

fn index_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".idx");
    path.with_file_name(name)
}

/// Read a snapshot back as rows of `n_fields` values per node.
pub fn read_snapshot(path: &Path, n_fields: usize) -> Result<Vec<Vec<f64>>, SolverError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut declared_fields = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let first = parts.next().unwrap();
        match first {
            "snapshot" | "elements" | "nodes_per_element" | "element" => continue,
            "fields" => {
                declared_fields = parts.next().and_then(|v| v.parse::<usize>().ok());
                continue;
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(n_fields);
        row.push(
            first
                .parse::<f64>()
                .map_err(|_| SolverError::MeshFormat(format!("snapshot: bad value `{first}`")))?,
        );
        for part in parts {
            row.push(
                part.parse::<f64>().map_err(|_| {
                    SolverError::MeshFormat(format!("snapshot: bad value `{part}`"))
                })?,
            );
        }
        if row.len() != n_fields {
            return Err(SolverError::MeshFormat(format!(
                "snapshot row has {} fields, expected {n_fields}",
                row.len()
            )));
        }
        rows.push(row);
    }
    if let Some(declared) = declared_fields {
        if declared != n_fields {
            return Err(SolverError::MeshFormat(format!(
                "snapshot declares {declared} fields, expected {n_fields}"
            )));
        }
    }
    Ok(rows)
}

fn write_report(
    out_dir: &Path,
    config: &CaseConfig,
    status: &str,
    lines: &[String],
) -> Result<(), SolverError> {
    let mut file = std::fs::File::create(out_dir.join("report.txt"))?;
    writeln!(file, "# esdg run report")?;
    writeln!(file, "status: {status}")?;
    writeln!(file, "config_hash: {}", content_hash(&config.source_text))?;
    writeln!(file, "equation: {}", config.equation.name())?;
    for line in lines {
        writeln!(file, "{line}")?;
    }
    writeln!(file, "--- config echo ---")?;
    write!(file, "{}", config.source_text)?;
    Ok(())
}

/// Run a case to `t_end`, writing `series.csv`, a final snapshot and
/// `report.txt` into the output directory. On a positivity or NaN abort
/// the partial series is retained and the error is returned, so the
/// caller can map it to an exit status.
pub fn run_case(config: &CaseConfig) -> Result<RunOutput, SolverError> {
    std::fs::create_dir_all(&config.out_dir)?;
    if config.t_end == 0.0 {
        // audit-only case: emit every semi-discrete check alongside the
        // initial-state artifacts
        audit_case(config)?;
    }
    let result = match config.equation {
        Equation::Nse3d => run_nse(config),
        Equation::AdvDiff1d | Equation::Burgers1d => run_scalar(config),
    };
    match result {
        Ok(output) => Ok(output),
        Err((error, partial)) => {
            if let Some((series, t, steps)) = partial {
                std::fs::write(config.out_dir.join("series.csv"), series.to_csv())?;
                write_report(
                    &config.out_dir,
                    config,
                    &format!("aborted ({error})"),
                    &[format!("t_abort: {t:.6}"), format!("steps: {steps}")],
                )?;
            }
            Err(error)
        }
    }
}

type Partial = Option<(TimeSeries, f64, usize)>;

fn run_nse(config: &CaseConfig) -> Result<RunOutput, (SolverError, Partial)> {
    let wrap = |e: SolverError| (e, None);
    let (ops, mesh) = prepare_mesh_3d(config).map_err(wrap)?;
    let gas = config.gas;
    let mut fields = FieldsNse::new(&mesh);
    let mut ws = NseWorkspace::new(&mesh);
    initial_field_3d(config, &mesh, &mut fields).map_err(wrap)?;
    let rk = RkScheme::by_name(&config.rk_scheme).expect("validated at parse time");
    let mut work = StepWorkspace::<State>::new(fields.u.len());
    let mut u_vec = fields.u.clone();

    let mut series = TimeSeries::new();
    let sample_now = |t: f64,
                      u: &[State],
                      fields: &mut FieldsNse,
                      ws: &mut NseWorkspace,
                      series: &mut TimeSeries|
     -> Result<(), SolverError> {
        fields.u.copy_from_slice(u);
        compute_entropy_variables(&mesh, &gas, fields)?;
        compute_entropy_gradients(&mesh, &ops, &config.scheme, fields, ws);
        let totals = conserved_totals(&mesh, &ops, &fields.u);
        series.push(Sample {
            t,
            entropy: total_entropy(&mesh, &ops, &fields.u, &gas),
            kinetic: Some(kinetic_energy(&mesh, &ops, &fields.u)),
            enstrophy: Some(enstrophy(&mesh, &ops, fields, &gas)),
            mass: totals[0],
        })
    };
    sample_now(0.0, &u_vec, &mut fields, &mut ws, &mut series).map_err(wrap)?;

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut next_sample = config.cadence;
    while t < config.t_end * (1.0 - 1e-14) {
        let dt_cfl = estimate_dt(&mesh, &ops, &u_vec, config.cfl, &gas)
            .map_err(|e| (e, Some((series.clone(), t, steps))))?;
        let dt = dt_cfl.min(config.t_end - t);
        let stepped = step(&rk, dt, &mut u_vec, &mut work, |u, out| {
            fields.u.copy_from_slice(u);
            rhs_nse(&mesh, &ops, &config.scheme, &gas, &mut fields, &mut ws)?;
            out.copy_from_slice(&fields.rhs);
            Ok::<(), SolverError>(())
        });
        if let Err(error) = stepped {
            return Err((error, Some((series, t, steps))));
        }
        t += dt;
        steps += 1;
        if t + 1e-12 >= next_sample || t >= config.t_end * (1.0 - 1e-14) {
            sample_now(t, &u_vec, &mut fields, &mut ws, &mut series)
                .map_err(|e| (e, Some((series.clone(), t, steps))))?;
            while next_sample <= t + 1e-12 {
                next_sample += config.cadence;
            }
        }
    }

    fields.u.copy_from_slice(&u_vec);
    let flat: Vec<f64> = fields.u.iter().flat_map(|s| s.0).collect();
    std::fs::write(config.out_dir.join("series.csv"), series.to_csv())
        .map_err(|e| wrap(e.into()))?;
    write_snapshot(
        &config.out_dir.join("solution.snap"),
        config.equation,
        mesh.nodes_per_element(),
        5,
        &flat,
    )
    .map_err(wrap)?;
    let final_totals = conserved_totals(&mesh, &ops, &fields.u);
    write_report(
        &config.out_dir,
        config,
        "completed",
        &[
            format!("steps: {steps}"),
            format!("t_final: {t:.6}"),
            format!("mass: {:.16e}", final_totals[0]),
            format!(
                "entropy: {:.16e}",
                total_entropy(&mesh, &ops, &fields.u, &gas)
            ),
        ],
    )
    .map_err(wrap)?;
    Ok(RunOutput {
        steps,
        t_final: t,
        series,
    })
}

enum ScalarProblem {
    AdvDiff(LinearAdvDiffSetup),
    Burgers(BurgersSetup),
}

fn run_scalar(config: &CaseConfig) -> Result<RunOutput, (SolverError, Partial)> {
    let wrap = |e: SolverError| (e, None);
    let (ops, mesh) = prepare_mesh_1d(config).map_err(wrap)?;
    let mut fields = Fields1d::new(&mesh, &ops);
    initial_field_1d(config, &mesh, &ops, &mut fields).map_err(wrap)?;
    let problem = match config.equation {
        Equation::AdvDiff1d => {
            let coeffs = config
                .advdiff
                .ok_or_else(|| wrap(SolverError::Config("missing [advdiff] section".into())))?;
            ScalarProblem::AdvDiff(LinearAdvDiffSetup::new(&mesh, &ops, coeffs).map_err(wrap)?)
        }
        Equation::Burgers1d => ScalarProblem::Burgers(BurgersSetup {
            viscosity: config.burgers_viscosity,
        }),
        Equation::Nse3d => unreachable!(),
    };

    let rk = RkScheme::by_name(&config.rk_scheme).expect("validated at parse time");
    let mut work = StepWorkspace::<f64>::new(fields.u.len());
    let mut u_vec = fields.u.clone();
    let mut series = TimeSeries::new();
    let sample_now = |t: f64, u: &[f64], series: &mut TimeSeries| -> Result<(), SolverError> {
        series.push(Sample {
            t,
            entropy: 0.5 * energy_norm_1d(&mesh, &ops, u),
            kinetic: None,
            enstrophy: None,
            mass: integral_1d(&mesh, &ops, u),
        })
    };
    sample_now(0.0, &u_vec, &mut series).map_err(wrap)?;

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut next_sample = config.cadence;
    while t < config.t_end * (1.0 - 1e-14) {
        let lambda = match &problem {
            ScalarProblem::AdvDiff(setup) => setup.coeffs.advection,
            ScalarProblem::Burgers(_) => u_vec.iter().fold(0.0f64, |a, &v| a.max(v.abs())),
        };
        let b_max = match &problem {
            ScalarProblem::AdvDiff(setup) => setup.b_nodes.iter().fold(0.0f64, |a, &b| a.max(b)),
            ScalarProblem::Burgers(setup) => setup.viscosity,
        };
        let dt_cfl = estimate_dt_1d(&mesh, &ops, lambda, b_max, config.cfl)
            .map_err(|e| (e, Some((series.clone(), t, steps))))?;
        let dt = dt_cfl.min(config.t_end - t);
        let stepped = step(&rk, dt, &mut u_vec, &mut work, |u, out| {
            fields.u.copy_from_slice(u);
            match &problem {
                ScalarProblem::AdvDiff(setup) => {
                    rhs_linear_advdiff(&mesh, &ops, setup, &config.scheme, &mut fields)
                }
                ScalarProblem::Burgers(setup) => {
                    rhs_burgers(&mesh, &ops, setup, &config.scheme, &mut fields)
                }
            }
            if fields.rhs.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::InvalidState {
                    element: 0,
                    node: 0,
                    rho: f64::NAN,
                    pressure: f64::NAN,
                });
            }
            out.copy_from_slice(&fields.rhs);
            Ok(())
        });
        if let Err(error) = stepped {
            return Err((error, Some((series, t, steps))));
        }
        t += dt;
        steps += 1;
        if t + 1e-12 >= next_sample || t >= config.t_end * (1.0 - 1e-14) {
            sample_now(t, &u_vec, &mut series)
                .map_err(|e| (e, Some((series.clone(), t, steps))))?;
            while next_sample <= t + 1e-12 {
                next_sample += config.cadence;
            }
        }
    }

    fields.u.copy_from_slice(&u_vec);
    std::fs::write(config.out_dir.join("series.csv"), series.to_csv())
        .map_err(|e| wrap(e.into()))?;
    write_snapshot(
        &config.out_dir.join("solution.snap"),
        config.equation,
        ops.n_nodes(),
        1,
        &fields.u,
    )
    .map_err(wrap)?;
    write_report(
        &config.out_dir,
        config,
        "completed",
        &[
            format!("steps: {steps}"),
            format!("t_final: {t:.6}"),
            format!(
                "energy_norm2: {:.16e}",
                energy_norm_1d(&mesh, &ops, &fields.u)
            ),
        ],
    )
    .map_err(wrap)?;
    Ok(RunOutput {
        steps,
        t_final: t,
        series,
    })
}

/// Sweep parameter: a list of polynomial degrees or of elements per
/// axis.
#[derive(Debug, Clone)]
pub enum SweepParam {
    Degree(Vec<usize>),
    MeshElements(Vec<usize>),
}

impl SweepParam {
    /// Parse `N=2..6`, `N=2,3,4` or `mesh=2,4,8`.
    pub fn parse(text: &str) -> Result<Self, SolverError> {
        let (name, spec) = text.split_once('=').ok_or_else(|| {
            SolverError::Config(format!("sweep parameter `{text}` must look like N=2..6"))
        })?;
        let values = if let Some((lo, hi)) = spec.split_once("..") {
            let lo: usize = lo
                .trim()
                .parse()
                .map_err(|_| SolverError::Config(format!("bad range start `{lo}`")))?;
            let hi: usize = hi
                .trim()
                .parse()
                .map_err(|_| SolverError::Config(format!("bad range end `{hi}`")))?;
            if hi < lo {
                return Err(SolverError::Config("empty sweep range".into()));
            }
            (lo..=hi).collect()
        } else {
            spec.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| SolverError::Config(format!("bad sweep value `{v}`")))
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err(SolverError::Config("empty sweep".into()));
        }
        match name.trim() {
            "N" | "degree" => Ok(SweepParam::Degree(values)),
            "mesh" | "elements" => Ok(SweepParam::MeshElements(values)),
            other => Err(SolverError::Config(format!(
                "sweep parameter must be N or mesh, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub label: String,
    /// Representative resolution: `1/N` for degree sweeps, `h` for mesh
    /// sweeps.
    pub resolution: f64,
    pub error: f64,
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,resolution,l2_error,observed_order\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{}\n",
                row.label,
                row.resolution,
                row.error,
                row.observed_order
                    .map(|o| format!("{o:.4}"))
                    .unwrap_or_default()
            ));
        }
        out
    }
}

/// L2 error of the final field against the exact solution of the case's
/// initial-condition family. Supported: 3D density wave (error in the
/// density), 1D manufactured sine with constant coefficients.
fn terminal_l2_error(config: &CaseConfig) -> Result<f64, SolverError> {
    match config.equation {
        Equation::Nse3d => {
            let InitialCondition::DensityWave {
                amplitude,
                velocity,
                pressure,
            } = config.initial
            else {
                return Err(SolverError::Config(
                    "convergence sweeps need the density_wave initial condition for nse3d".into(),
                ));
            };
            let (ops, mesh) = prepare_mesh_3d(config)?;
            let gas = config.gas;
            let mut fields = FieldsNse::new(&mesh);
            let mut ws = NseWorkspace::new(&mesh);
            initial_field_3d(config, &mesh, &mut fields)?;
            let rk = RkScheme::by_name(&config.rk_scheme).unwrap();
            let mut work = StepWorkspace::<State>::new(fields.u.len());
            let mut u_vec = fields.u.clone();
            let mut t = 0.0;
            while t < config.t_end * (1.0 - 1e-14) {
                let dt = estimate_dt(&mesh, &ops, &u_vec, config.cfl, &gas)?.min(config.t_end - t);
                step(&rk, dt, &mut u_vec, &mut work, |u, out| {
                    fields.u.copy_from_slice(u);
                    rhs_nse(&mesh, &ops, &config.scheme, &gas, &mut fields, &mut ws)?;
                    out.copy_from_slice(&fields.rhs);
                    Ok::<(), SolverError>(())
                })?;
                t += dt;
            }
            fields.u.copy_from_slice(&u_vec);
            let np = mesh.n_per_dim();
            let w = ops.weights();
            let mut err2 = 0.0;
            for (element, el) in mesh.elements.iter().enumerate() {
                for k in 0..np {
                    for j in 0..np {
                        for i in 0..np {
                            let node = mesh.node_index(i, j, k);
                            let exact = density_wave_state(
                                el.geometry[node],
                                t,
                                amplitude,
                                velocity,
                                pressure,
                                mesh.extent,
                                &gas,
                            );
                            let diff = fields.u[element * mesh.nodes_per_element() + node].rho()
                                - exact.rho();
                            err2 += w[i] * w[j] * w[k] * el.metrics.jacobian[node] * diff * diff;
                        }
                    }
                }
            }
            Ok(err2.sqrt())
        }
        Equation::AdvDiff1d => {
            let InitialCondition::ManufacturedSine {
                amplitude,
                offset,
                mode,
            } = config.initial
            else {
                return Err(SolverError::Config(
                    "convergence sweeps need manufactured_sine initial data for advdiff1d".into(),
                ));
            };
            let coeffs = config.advdiff.unwrap();
            let crate::physics::Viscosity1d::Constant(b) = coeffs.diffusivity else {
                return Err(SolverError::Config(
                    "the manufactured solution needs constant diffusivity".into(),
                ));
            };
            let (ops, mesh) = prepare_mesh_1d(config)?;
            if !mesh.periodic {
                return Err(SolverError::Config(
                    "convergence sweeps use the periodic 1D mesh".into(),
                ));
            }
            let setup = LinearAdvDiffSetup::new(&mesh, &ops, coeffs)?;
            let mut fields = Fields1d::new(&mesh, &ops);
            let length = mesh.length();
            fields.set_from(&mesh, &ops, |x| {
                manufactured_sine_exact(
                    x,
                    0.0,
                    amplitude,
                    offset,
                    mode,
                    length,
                    coeffs.advection,
                    b,
                )
            });
            let rk = RkScheme::by_name(&config.rk_scheme).unwrap();
            let mut work = StepWorkspace::<f64>::new(fields.u.len());
            let b_max = setup.b_nodes.iter().fold(0.0f64, |a, &v| a.max(v));
            let mut u_vec = fields.u.clone();
            let mut t = 0.0;
            while t < config.t_end * (1.0 - 1e-14) {
                let dt = estimate_dt_1d(&mesh, &ops, coeffs.advection, b_max, config.cfl)?
                    .min(config.t_end - t);
                step(&rk, dt, &mut u_vec, &mut work, |u, out| {
                    fields.u.copy_from_slice(u);
                    rhs_linear_advdiff(&mesh, &ops, &setup, &config.scheme, &mut fields);
                    out.copy_from_slice(&fields.rhs);
                    Ok::<(), SolverError>(())
                })?;
                t += dt;
            }
            fields.u.copy_from_slice(&u_vec);
            let np = ops.n_nodes();
            let mut err2 = 0.0;
            for k in 0..mesh.n_elements() {
                for (i, &xi) in ops.nodes().iter().enumerate() {
                    let x = mesh.coord(k, xi);
                    let exact = manufactured_sine_exact(
                        x,
                        t,
                        amplitude,
                        offset,
                        mode,
                        length,
                        coeffs.advection,
                        b,
                    );
                    let diff = fields.u[k * np + i] - exact;
                    err2 += 0.5 * mesh.width(k) * ops.weights()[i] * diff * diff;
                }
            }
            Ok(err2.sqrt())
        }
        Equation::Burgers1d => Err(SolverError::Config(
            "no exact solution registered for burgers1d sweeps".into(),
        )),
    }
}

/// Run a resolution sweep against the exact solution, writing
/// `errors.csv` into the output directory.
pub fn run_convergence_sweep(
    config: &CaseConfig,
    param: &SweepParam,
) -> Result<SweepTable, SolverError> {
    std::fs::create_dir_all(&config.out_dir)?;
    let mut table = SweepTable::default();
    let mut previous: Option<(f64, f64)> = None;
    let entries: Vec<(String, CaseConfig, f64)> = match param {
        SweepParam::Degree(values) => values
            .iter()
            .map(|&n| {
                let mut c = config.clone();
                c.degree = n;
                (format!("N={n}"), c, 1.0 / n as f64)
            })
            .collect(),
        SweepParam::MeshElements(values) => values
            .iter()
            .map(|&m| {
                let mut c = config.clone();
                match &mut c.mesh {
                    MeshSpec::Box3d { elements, .. } => *elements = [m; 3],
                    MeshSpec::Line1d { elements, .. } => *elements = m,
                    MeshSpec::File3d(_) => {}
                }
                (format!("mesh={m}"), c, 1.0 / m as f64)
            })
            .collect(),
    };
    for (label, case, resolution) in entries {
        if matches!(case.mesh, MeshSpec::File3d(_)) {
            return Err(SolverError::Config(
                "mesh sweeps need the box mesh factory".into(),
            ));
        }
        let error = terminal_l2_error(&case)?;
        let observed_order = previous
            .map(|(res_prev, err_prev)| ((err_prev / error).ln()) / ((res_prev / resolution).ln()));
        previous = Some((resolution, error));
        table.rows.push(SweepRow {
            label,
            resolution,
            error,
            observed_order,
        });
    }
    std::fs::write(config.out_dir.join("errors.csv"), table.to_csv())?;
    Ok(table)
}
