//! Semi-discrete audits: every identity the stability argument rests on
//! is evaluated on the configured case and reported with its measured
//! residual, tolerance and verdict.

use std::io::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{content_hash, CaseConfig, Equation};
use crate::dg::{
    advective_face_energy, burgers_flux_difference_volume, compute_entropy_gradients,
    compute_entropy_variables, rhs_burgers, rhs_linear_advdiff, rhs_nse, BurgersSetup, Fields1d,
    FieldsNse, InterfaceFlux, LinearAdvDiffSetup, NseWorkspace, SchemeConfig, VolumeMode,
};
use crate::diagnostics::{br1_interface_entropy_gap, entropy_rate_audit, total_entropy};
use crate::driver::{prepare_mesh_1d, prepare_mesh_3d};
use crate::error::SolverError;
use crate::flux::{contravariant_ec_flux, kepec_flux};
use crate::mesh::Mesh;
use crate::operators::OperatorSet;
use crate::physics::{
    burgers_entropy_flux, entropy_and_flux, entropy_variables, euler_flux, GasParams, State,
};

#[derive(Debug, Clone)]
pub struct AuditCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditCheck {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            residual,
            tolerance,
            pass: residual.abs() <= tolerance,
        }
    }

    /// For one-sided bounds: pass when `value <= tolerance`.
    fn upper_bound(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            residual: value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            out.push_str(&format!(
                "{:<42} {:>12.4e}  (tol {:>9.1e})  {}\n",
                check.name,
                check.residual,
                check.tolerance,
                if check.pass { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

fn random_valid_state(rng: &mut ChaCha8Rng, gas: &GasParams) -> State {
    State::from_primitive(
        rng.random_range(0.3..3.0),
        [
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
        ],
        rng.random_range(0.3..3.0),
        gas,
    )
}

/// Randomized smooth periodic field with an added per-element velocity
/// offset, so interface jumps are genuine.
pub(crate) fn randomized_smooth_field(
    mesh: &Mesh,
    gas: &GasParams,
    seed: u64,
    fields: &mut FieldsNse,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = 2.0 * std::f64::consts::PI;
    let phase: [f64; 6] = std::array::from_fn(|_| rng.random_range(0.0..tau));
    let amp: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.05..0.2));
    let extent = mesh.extent;
    let nodes = mesh.nodes_per_element();
    for element in 0..mesh.n_elements() {
        let jump: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.03..0.03));
        let geometry = &mesh.elements[element].geometry;
        for node in 0..nodes {
            let x = geometry[node];
            let s = [
                tau * x[0] / extent[0],
                tau * x[1] / extent[1],
                tau * x[2] / extent[2],
            ];
            let rho = 1.0 + amp[0] * (s[0] + phase[0]).sin() * (s[1] + phase[1]).cos();
            let v = [
                amp[1] * (s[1] + phase[2]).sin() * (s[2] + phase[3]).cos() + jump[0],
                amp[2] * (s[2] + phase[4]).sin() * (s[0] + phase[5]).cos() + jump[1],
                amp[3] * (s[0] + phase[1]).cos() * (s[1] + phase[3]).sin() + jump[2],
            ];
            let p = 1.0 + amp[0] * (s[0] + s[1] + s[2] + phase[2]).cos() * 0.5;
            fields.u[element * nodes + node] = State::from_primitive(rho, v, p, gas);
        }
    }
}

fn sbp_checks(ops: &OperatorSet, rng: &mut ChaCha8Rng, checks: &mut Vec<AuditCheck>) {
    let np = ops.n_nodes();
    let mut worst = 0.0f64;
    for i in 0..np {
        for j in 0..np {
            worst =
                worst.max((ops.sbp()[[i, j]] + ops.sbp()[[j, i]] - ops.boundary()[[i, j]]).abs());
        }
    }
    checks.push(AuditCheck::new("sbp_identity", worst, 1e-13));

    let mut ibp_worst = 0.0f64;
    let mut du = vec![0.0; np];
    let mut dv = vec![0.0; np];
    for _ in 0..100 {
        let u: Vec<f64> = (0..np).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..np).map(|_| rng.random_range(-1.0..1.0)).collect();
        ops.apply_diff(&u, &mut du);
        ops.apply_diff(&v, &mut dv);
        let w = ops.weights();
        let lhs: f64 = (0..np).map(|i| w[i] * u[i] * dv[i]).sum();
        let vol: f64 = (0..np).map(|i| w[i] * du[i] * v[i]).sum();
        let boundary = u[np - 1] * v[np - 1] - u[0] * v[0];
        let scale = lhs.abs().max(vol.abs()).max(1.0);
        ibp_worst = ibp_worst.max((lhs - (boundary - vol)).abs() / scale);
    }
    checks.push(AuditCheck::new(
        "discrete_integration_by_parts",
        ibp_worst,
        1e-12,
    ));
}

fn nse_audit(config: &CaseConfig) -> Result<AuditReport, SolverError> {
    let (ops, mesh) = prepare_mesh_3d(config)?;
    let gas = config.gas;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut checks = Vec::new();
    sbp_checks(&ops, &mut rng, &mut checks);

    // metric identities and watertightness
    let ja_scale = mesh
        .elements
        .iter()
        .flat_map(|e| e.metrics.contravariant.iter())
        .flat_map(|m| m.iter().flat_map(|v| v.iter()))
        .fold(0.0f64, |a, &v| a.max(v.abs()))
        .max(1.0);
    checks.push(AuditCheck::new(
        "metric_identities",
        mesh.metric_identity_residual(&ops),
        1e-12 * ja_scale,
    ));
    let surf_scale = mesh
        .faces
        .iter()
        .flat_map(|f| f.surf.iter())
        .fold(0.0f64, |a, &s| a.max(s))
        .max(1.0);
    checks.push(AuditCheck::new(
        "watertightness",
        mesh.watertightness()?,
        1e-12 * surf_scale,
    ));

    // free-stream preservation, both volume modes
    let mut fields = FieldsNse::new(&mesh);
    let mut ws = NseWorkspace::new(&mesh);
    let free = State::from_primitive(1.0, [0.3, -0.2, 0.7], 0.9, &gas);
    let umax = free.0.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    for (name, volume) in [
        ("free_stream_ec", VolumeMode::EntropyConservative),
        ("free_stream_standard", VolumeMode::Standard),
    ] {
        let scheme = SchemeConfig {
            volume,
            ..config.scheme
        };
        fields.set_from(&mesh, |_| free);
        rhs_nse(&mesh, &ops, &scheme, &gas, &mut fields, &mut ws)?;
        let rmax = fields
            .rhs
            .iter()
            .flat_map(|s| s.0.iter())
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        checks.push(AuditCheck::new(name, rmax / umax, 1e-11));
    }

    // EC flux condition on random pairs, Cartesian and contravariant
    let mut worst_cartesian = 0.0f64;
    for _ in 0..10_000 {
        let left = random_valid_state(&mut rng, &gas);
        let right = random_valid_state(&mut rng, &gas);
        let w_l = entropy_variables(left, &gas);
        let w_r = entropy_variables(right, &gas);
        let f_l = euler_flux(left, &gas);
        let f_r = euler_flux(right, &gas);
        let (_, fe_l) = entropy_and_flux(left, &gas);
        let (_, fe_r) = entropy_and_flux(right, &gas);
        for dir in 0..3 {
            let f = kepec_flux(left, right, dir, &gas);
            let t1: f64 = (0..5).map(|c| f.0[c] * (w_r.0[c] - w_l.0[c])).sum();
            let t2: f64 = (0..5)
                .map(|c| f_r.0[dir].0[c] * w_r.0[c] - f_l.0[dir].0[c] * w_l.0[c])
                .sum();
            worst_cartesian = worst_cartesian.max((t1 - t2 + fe_r[dir] - fe_l[dir]).abs());
        }
    }
    checks.push(AuditCheck::new(
        "ec_flux_condition_cartesian",
        worst_cartesian,
        1e-11,
    ));

    let mut worst_contra = 0.0f64;
    let np = mesh.n_per_dim();
    for face in mesh.faces.iter() {
        for fp in [0, (np * np) / 2, np * np - 1] {
            let ja = [
                face.surf[fp] * face.normal[fp][0],
                face.surf[fp] * face.normal[fp][1],
                face.surf[fp] * face.normal[fp][2],
            ];
            let left = random_valid_state(&mut rng, &gas);
            let right = random_valid_state(&mut rng, &gas);
            let f = contravariant_ec_flux(left, right, ja, &gas);
            let w_l = entropy_variables(left, &gas);
            let w_r = entropy_variables(right, &gas);
            let b_l = euler_flux(left, &gas);
            let b_r = euler_flux(right, &gas);
            let (_, fe_l) = entropy_and_flux(left, &gas);
            let (_, fe_r) = entropy_and_flux(right, &gas);
            let mut fn_l = State::default();
            let mut fn_r = State::default();
            let mut fent = 0.0;
            for m in 0..3 {
                fn_l = fn_l + b_l.0[m] * ja[m];
                fn_r = fn_r + b_r.0[m] * ja[m];
                fent += ja[m] * (fe_r[m] - fe_l[m]);
            }
            let t1: f64 = (0..5).map(|c| f.0[c] * (w_r.0[c] - w_l.0[c])).sum();
            let t2: f64 = (0..5)
                .map(|c| fn_r.0[c] * w_r.0[c] - fn_l.0[c] * w_l.0[c])
                .sum();
            worst_contra = worst_contra.max((t1 - t2 + fent).abs());
        }
    }
    checks.push(AuditCheck::new(
        "ec_flux_condition_contravariant",
        worst_contra,
        1e-11 * surf_scale,
    ));

    // semi-discrete entropy rates on a randomized smooth field with
    // genuine interface jumps
    randomized_smooth_field(&mesh, &gas, config.seed, &mut fields);
    let initial_u = fields.u.clone();
    let entropy_scale = total_entropy(&mesh, &ops, &initial_u, &gas).abs().max(1.0);

    let euler_gas = GasParams {
        reynolds: f64::INFINITY,
        ..gas
    };
    let ec_scheme = SchemeConfig {
        volume: VolumeMode::EntropyConservative,
        interface: InterfaceFlux::Ec,
        sigma: config.scheme.sigma,
        suppress_viscous_interface: false,
    };
    rhs_nse(&mesh, &ops, &ec_scheme, &euler_gas, &mut fields, &mut ws)?;
    let rate = entropy_rate_audit(&mesh, &ops, &euler_gas, &initial_u, &fields.rhs);
    checks.push(AuditCheck::new(
        "entropy_rate_euler_ec",
        rate / entropy_scale,
        1e-10,
    ));

    let es_scheme = SchemeConfig {
        interface: InterfaceFlux::EcDissipation,
        ..ec_scheme
    };
    fields.u.copy_from_slice(&initial_u);
    rhs_nse(&mesh, &ops, &es_scheme, &euler_gas, &mut fields, &mut ws)?;
    let rate = entropy_rate_audit(&mesh, &ops, &euler_gas, &initial_u, &fields.rhs);
    checks.push(AuditCheck::upper_bound(
        "entropy_rate_euler_es",
        rate / entropy_scale,
        1e-13,
    ));

    let viscous_gas = if gas.viscous() {
        gas
    } else {
        GasParams {
            reynolds: 100.0,
            ..gas
        }
    };
    fields.u.copy_from_slice(&initial_u);
    rhs_nse(&mesh, &ops, &ec_scheme, &viscous_gas, &mut fields, &mut ws)?;
    let rate = entropy_rate_audit(&mesh, &ops, &viscous_gas, &initial_u, &fields.rhs);
    checks.push(AuditCheck::upper_bound(
        "entropy_rate_nse_br1",
        rate / entropy_scale,
        1e-10,
    ));

    // BR1 interface neutrality (difference of full and
    // interface-suppressed surface entropy accounting)
    fields.u.copy_from_slice(&initial_u);
    compute_entropy_variables(&mesh, &viscous_gas, &mut fields)?;
    compute_entropy_gradients(&mesh, &ops, &ec_scheme, &mut fields, &mut ws);
    let gap = br1_interface_entropy_gap(&mesh, &ops, &viscous_gas, &fields);
    checks.push(AuditCheck::new(
        "br1_interface_neutrality",
        gap / entropy_scale,
        1e-12,
    ));

    // semi-discrete conservation: quadrature totals of the RHS vanish
    fields.u.copy_from_slice(&initial_u);
    rhs_nse(&mesh, &ops, &ec_scheme, &viscous_gas, &mut fields, &mut ws)?;
    let totals = crate::diagnostics::conserved_totals(&mesh, &ops, &fields.rhs);
    let rhs_scale = fields
        .rhs
        .iter()
        .flat_map(|s| s.0.iter())
        .fold(0.0f64, |a, &v| a.max(v.abs()))
        .max(1.0)
        * mesh.volume(&ops);
    let worst_total = totals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    checks.push(AuditCheck::new(
        "semidiscrete_conservation",
        worst_total / rhs_scale,
        1e-13,
    ));

    Ok(AuditReport { checks })
}

fn scalar_audit(config: &CaseConfig) -> Result<AuditReport, SolverError> {
    let (ops, mesh) = prepare_mesh_1d(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut checks = Vec::new();
    sbp_checks(&ops, &mut rng, &mut checks);
    let np = ops.n_nodes();

    match config.equation {
        Equation::AdvDiff1d => {
            let coeffs = config
                .advdiff
                .ok_or_else(|| SolverError::Config("missing [advdiff] section".into()))?;
            let setup = LinearAdvDiffSetup::new(&mesh, &ops, coeffs)?;
            let mut fields = Fields1d::new(&mesh, &ops);
            for v in fields.u.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            let scheme = SchemeConfig {
                interface: InterfaceFlux::Upwind,
                sigma: 1.0,
                ..config.scheme
            };
            rhs_linear_advdiff(&mesh, &ops, &setup, &scheme, &mut fields);
            let mut rate = 0.0;
            for k in 0..mesh.n_elements() {
                for i in 0..np {
                    let g = k * np + i;
                    rate += 0.5 * mesh.width(k) * ops.weights()[i] * fields.u[g] * fields.rhs[g];
                }
            }
            checks.push(AuditCheck::upper_bound("energy_rate_upwind", rate, 1e-12));

            let contributions =
                advective_face_energy(&mesh, &ops, coeffs.advection, 1.0, &fields.u);
            let mut worst = 0.0f64;
            for (f, got) in contributions.into_iter().enumerate() {
                let left = f;
                let right = (f + 1) % mesh.n_elements();
                let ul = fields.u[left * np + np - 1];
                let ur = fields.u[right * np];
                let expected = -0.5 * coeffs.advection * (ur - ul) * (ur - ul);
                worst = worst.max((got - expected).abs());
            }
            checks.push(AuditCheck::new("face_energy_jump_formula", worst, 1e-12));
        }
        Equation::Burgers1d => {
            let mut worst_split = 0.0f64;
            let mut worst_contraction = 0.0f64;
            let mut fd = vec![0.0; np];
            let mut dusq = vec![0.0; np];
            let mut du = vec![0.0; np];
            for _ in 0..100 {
                let u: Vec<f64> = (0..np).map(|_| rng.random_range(-2.0..2.0)).collect();
                burgers_flux_difference_volume(&u, &ops, &mut fd);
                let usq: Vec<f64> = u.iter().map(|v| v * v).collect();
                ops.apply_diff(&usq, &mut dusq);
                ops.apply_diff(&u, &mut du);
                for i in 0..np {
                    let split = (dusq[i] + u[i] * du[i]) / 3.0;
                    worst_split = worst_split.max((fd[i] - split).abs() / split.abs().max(1.0));
                }
                let contraction: f64 = (0..np).map(|i| ops.weights()[i] * u[i] * fd[i]).sum();
                let expected = burgers_entropy_flux(u[np - 1]) - burgers_entropy_flux(u[0]);
                worst_contraction =
                    worst_contraction.max((contraction - expected).abs() / expected.abs().max(1.0));
            }
            checks.push(AuditCheck::new(
                "burgers_split_form_equivalence",
                worst_split,
                1e-12,
            ));
            checks.push(AuditCheck::new(
                "burgers_volume_contraction",
                worst_contraction,
                1e-12,
            ));

            let setup = BurgersSetup {
                viscosity: config.burgers_viscosity,
            };
            let mut fields = Fields1d::new(&mesh, &ops);
            let length = mesh.length();
            fields.set_from(&mesh, &ops, |x| {
                (2.0 * std::f64::consts::PI * x / length).sin()
            });
            rhs_burgers(&mesh, &ops, &setup, &config.scheme, &mut fields);
            let mut rate = 0.0;
            let mut scale: f64 = 1.0;
            for k in 0..mesh.n_elements() {
                for i in 0..np {
                    let g = k * np + i;
                    let contribution =
                        0.5 * mesh.width(k) * ops.weights()[i] * fields.u[g] * fields.rhs[g];
                    rate += contribution;
                    scale = scale.max(contribution.abs());
                }
            }
            checks.push(AuditCheck::upper_bound(
                "burgers_entropy_rate",
                rate / scale,
                1e-12,
            ));
        }
        Equation::Nse3d => unreachable!(),
    }
    Ok(AuditReport { checks })
}

/// Run every semi-discrete invariant check applicable to the configured
/// equation and write `audit_report.txt` (with the config echo and its
/// content hash) into the output directory.
pub fn audit_case(config: &CaseConfig) -> Result<AuditReport, SolverError> {
    std::fs::create_dir_all(&config.out_dir)?;
    let report = match config.equation {
        Equation::Nse3d => nse_audit(config)?,
        Equation::AdvDiff1d | Equation::Burgers1d => scalar_audit(config)?,
    };
    let mut file = std::fs::File::create(config.out_dir.join("audit_report.txt"))?;
    writeln!(file, "# esdg audit report")?;
    writeln!(file, "config_hash: {}", content_hash(&config.source_text))?;
    writeln!(file, "equation: {}", config.equation.name())?;
    writeln!(
        file,
        "result: {}",
        if report.all_pass() { "PASS" } else { "FAIL" }
    )?;
    write!(file, "{}", report.to_text())?;
    writeln!(file, "--- config echo ---")?;
    write!(file, "{}", config.source_text)?;
    Ok(report)
}
