//! Discrete functionals, semi-discrete audits and the diagnostic time
//! series.
//!
//! `entropy_rate_audit` contracts an assembled right-hand side with the
//! entropy variables, so the entropy rate statements can be checked
//! without committing to any time integrator.

use std::fmt::Write as _;

use crate::dg::FieldsNse;
use crate::error::SolverError;
use crate::mesh::{orient_face_point, side_node, Mesh, Mesh1d};
use crate::operators::OperatorSet;
use crate::physics::{
    entropy_and_flux, entropy_variables, velocity_gradient, viscous_flux, GasParams, State,
};

fn quadrature_sum(
    mesh: &Mesh,
    ops: &OperatorSet,
    mut integrand: impl FnMut(usize, usize) -> f64,
) -> f64 {
    let np = mesh.n_per_dim();
    let w = ops.weights();
    let mut total = 0.0;
    for element in 0..mesh.n_elements() {
        let jacobian = &mesh.elements[element].metrics.jacobian;
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let node = mesh.node_index(i, j, k);
                    total += w[i] * w[j] * w[k] * jacobian[node] * integrand(element, node);
                }
            }
        }
    }
    total
}

/// Total discrete entropy `sum_k <J s(U), 1>_N`.
pub fn total_entropy(mesh: &Mesh, ops: &OperatorSet, u: &[State], gas: &GasParams) -> f64 {
    let nodes = mesh.nodes_per_element();
    quadrature_sum(mesh, ops, |element, node| {
        entropy_and_flux(u[element * nodes + node], gas).0
    })
}

/// Quadrature totals of the five conserved variables.
pub fn conserved_totals(mesh: &Mesh, ops: &OperatorSet, u: &[State]) -> [f64; 5] {
    let nodes = mesh.nodes_per_element();
    let mut totals = [0.0; 5];
    for c in 0..5 {
        totals[c] = quadrature_sum(mesh, ops, |element, node| u[element * nodes + node].0[c]);
    }
    totals
}

/// Discrete kinetic energy `integral of rho |v|^2 / 2`.
pub fn kinetic_energy(mesh: &Mesh, ops: &OperatorSet, u: &[State]) -> f64 {
    let nodes = mesh.nodes_per_element();
    quadrature_sum(mesh, ops, |element, node| {
        let s = u[element * nodes + node];
        let m = s.momentum();
        0.5 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) / s.rho()
    })
}

/// Discrete enstrophy `integral of rho |curl v|^2 / 2`, with the
/// velocity gradients recovered from the BR1 lifted entropy gradients
/// already stored in the field (consistent with what the scheme sees).
pub fn enstrophy(mesh: &Mesh, ops: &OperatorSet, fields: &FieldsNse, gas: &GasParams) -> f64 {
    let nodes = mesh.nodes_per_element();
    quadrature_sum(mesh, ops, |element, node| {
        let g = element * nodes + node;
        let dv = velocity_gradient(fields.u[g], &fields.grad_w[g], gas);
        let vorticity = [
            dv[1][2] - dv[2][1],
            dv[2][0] - dv[0][2],
            dv[0][1] - dv[1][0],
        ];
        0.5 * fields.u[g].rho()
            * (vorticity[0] * vorticity[0]
                + vorticity[1] * vorticity[1]
                + vorticity[2] * vorticity[2])
    })
}

/// Semi-discrete entropy rate `dS/dt = sum omega J W^T (dU/dt)` for a
/// supplied right-hand side.
pub fn entropy_rate_audit(
    mesh: &Mesh,
    ops: &OperatorSet,
    gas: &GasParams,
    u: &[State],
    rhs: &[State],
) -> f64 {
    let nodes = mesh.nodes_per_element();
    quadrature_sum(mesh, ops, |element, node| {
        let g = element * nodes + node;
        let w = entropy_variables(u[g], gas);
        (0..5).map(|c| w.0[c] * rhs[g].0[c]).sum()
    })
}

/// Assembled viscous interface entropy contribution
/// `sum_faces <F~_vn>^T [W] - [F~_vn^T W] + <W>^T [F~_vn]`,
/// the difference between the full BR1 audit and one with the interface
/// coupling suppressed. Vanishes identically for the BR1 averages.
/// `fields.w` and `fields.grad_w` must be current.
pub fn br1_interface_entropy_gap(
    mesh: &Mesh,
    ops: &OperatorSet,
    gas: &GasParams,
    fields: &FieldsNse,
) -> f64 {
    let np = mesh.n_per_dim();
    let nodes = mesh.nodes_per_element();
    let weights = ops.weights();
    let mut total = 0.0;
    for face in &mesh.faces {
        for q in 0..np {
            for p in 0..np {
                let fp = p + np * q;
                let (mi, mj, mk) = side_node(face.master_side, p, q, mesh.degree);
                let m_global = face.master * nodes + mesh.node_index(mi, mj, mk);
                let (sp, sq) = orient_face_point(face.orientation, p, q, mesh.degree);
                let (si, sj, sk) = side_node(face.slave_side, sp, sq, mesh.degree);
                let s_global = face.slave * nodes + mesh.node_index(si, sj, sk);

                // normal viscous fluxes of both sides against the shared
                // face metric, in master orientation
                let fv_m = viscous_flux(fields.u[m_global], &fields.grad_w[m_global], gas);
                let fv_s = viscous_flux(fields.u[s_global], &fields.grad_w[s_global], gas);
                let ja = [
                    face.surf[fp] * face.normal[fp][0],
                    face.surf[fp] * face.normal[fp][1],
                    face.surf[fp] * face.normal[fp][2],
                ];
                let mut fn_m = State::default();
                let mut fn_s = State::default();
                for d in 0..3 {
                    fn_m = fn_m + fv_m.0[d] * ja[d];
                    fn_s = fn_s + fv_s.0[d] * ja[d];
                }
                let w_m = fields.w[m_global];
                let w_s = fields.w[s_global];
                let mut bracket = 0.0;
                for c in 0..5 {
                    let favg = 0.5 * (fn_m.0[c] + fn_s.0[c]);
                    let wavg = 0.5 * (w_m.0[c] + w_s.0[c]);
                    bracket += favg * (w_s.0[c] - w_m.0[c]);
                    bracket -= fn_s.0[c] * w_s.0[c] - fn_m.0[c] * w_m.0[c];
                    bracket += wavg * (fn_s.0[c] - fn_m.0[c]);
                }
                total += weights[p] * weights[q] * bracket;
            }
        }
    }
    total
}

/// Squared broken energy norm `sum_k (dx_k / 2) ||U^k||_N^2` of a 1D
/// field.
pub fn energy_norm_1d(mesh: &Mesh1d, ops: &OperatorSet, u: &[f64]) -> f64 {
    let np = ops.n_nodes();
    let mut total = 0.0;
    for k in 0..mesh.n_elements() {
        let jac = 0.5 * mesh.width(k);
        for i in 0..np {
            let v = u[k * np + i];
            total += jac * ops.weights()[i] * v * v;
        }
    }
    total
}

/// Quadrature integral of a 1D nodal field.
pub fn integral_1d(mesh: &Mesh1d, ops: &OperatorSet, u: &[f64]) -> f64 {
    let np = ops.n_nodes();
    let mut total = 0.0;
    for k in 0..mesh.n_elements() {
        let jac = 0.5 * mesh.width(k);
        for i in 0..np {
            total += jac * ops.weights()[i] * u[k * np + i];
        }
    }
    total
}

/// One record of the diagnostic series. Unavailable entries (kinetic
/// energy of a 1D run, say) stay `None` and are emitted as empty CSV
/// fields.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub t: f64,
    pub entropy: f64,
    pub kinetic: Option<f64>,
    pub enstrophy: Option<f64>,
    pub mass: f64,
}

/// Ordered diagnostic records with strictly increasing time.
#[derive(Debug, Clone, Default)]
pub struct TimeSeries {
    samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: Sample) -> Result<(), SolverError> {
        if let Some(last) = self.samples.last() {
            if sample.t <= last.t {
                return Err(SolverError::NonMonotoneSeries {
                    t: sample.t,
                    previous: last.t,
                });
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Kinetic-energy dissipation rate `-dE_kin/dt` at sample `i` by
    /// centered differencing; needs interior samples with kinetic
    /// energy present.
    pub fn dissipation_rate(&self, i: usize) -> Option<f64> {
        if i == 0 || i + 1 >= self.samples.len() {
            return None;
        }
        let before = &self.samples[i - 1];
        let after = &self.samples[i + 1];
        match (before.kinetic, after.kinetic) {
            (Some(e0), Some(e1)) => Some(-(e1 - e0) / (after.t - before.t)),
            _ => None,
        }
    }

    /// `Re_num = 2 ens / diss`; absent where the dissipation rate is
    /// unavailable or nonpositive.
    pub fn numerical_reynolds(&self, i: usize) -> Option<f64> {
        let diss = self.dissipation_rate(i)?;
        if diss <= 0.0 {
            return None;
        }
        self.samples[i].enstrophy.map(|ens| 2.0 * ens / diss)
    }

    /// CSV with the fixed column order
    /// `t,S,Ekin,ens,diss,Re_num,mass`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,S,Ekin,ens,diss,Re_num,mass\n");
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        for (i, s) in self.samples.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{},{},{},{},{:.16e}",
                s.t,
                s.entropy,
                fmt_opt(s.kinetic),
                fmt_opt(s.enstrophy),
                fmt_opt(self.dissipation_rate(i)),
                fmt_opt(self.numerical_reynolds(i)),
                s.mass
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{compute_entropy_gradients, NseWorkspace, SchemeConfig};
    use crate::mesh::{build_box_mesh, Warp};

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn uniform_reference_state_has_zero_entropy() {
        let ops = OperatorSet::new(3).unwrap();
        let mesh = build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::None).unwrap();
        let gas = GasParams::default();
        let u = vec![
            State::from_primitive(1.0, [0.3, 0.0, 0.0], 1.0, &gas);
            mesh.n_elements() * mesh.nodes_per_element()
        ];
        assert!(total_entropy(&mesh, &ops, &u, &gas).abs() < 1e-10);
    }

    #[test]
    fn uniform_pressure_e_entropy_value() {
        // rho = 1, p = e gives sigma = 1, s = -1/(gamma - 1), so
        // S = -Vol/(gamma - 1)
        let ops = OperatorSet::new(3).unwrap();
        let mesh = build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::None).unwrap();
        let gas = GasParams::default();
        let u = vec![
            State::from_primitive(1.0, [0.0; 3], std::f64::consts::E, &gas);
            mesh.n_elements() * mesh.nodes_per_element()
        ];
        let vol = TAU * TAU * TAU;
        let expected = -vol / (gas.gamma - 1.0);
        let got = total_entropy(&mesh, &ops, &u, &gas);
        assert!(
            (got - expected).abs() <= 1e-12 * expected.abs(),
            "{got} vs {expected}"
        );
    }

    #[test]
    fn functionals_invariant_under_mesh_partition() {
        let ops = OperatorSet::new(4).unwrap();
        let gas = GasParams::default();
        let state = State::from_primitive(1.2, [0.1, -0.4, 0.2], 0.7, &gas);
        let mut entropies = Vec::new();
        let mut kinetics = Vec::new();
        let mut totals = Vec::new();
        for elements in [1usize, 2] {
            let mesh = build_box_mesh([TAU; 3], [elements; 3], &ops, Warp::None).unwrap();
            let u = vec![state; mesh.n_elements() * mesh.nodes_per_element()];
            entropies.push(total_entropy(&mesh, &ops, &u, &gas));
            kinetics.push(kinetic_energy(&mesh, &ops, &u));
            totals.push(conserved_totals(&mesh, &ops, &u));
        }
        assert!((entropies[0] - entropies[1]).abs() <= 1e-12 * entropies[0].abs().max(1.0));
        assert!((kinetics[0] - kinetics[1]).abs() <= 1e-12 * kinetics[0].abs().max(1.0));
        for c in 0..5 {
            let scale = totals[0][c].abs().max(1.0);
            assert!((totals[0][c] - totals[1][c]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn rigid_translation_has_zero_enstrophy() {
        let ops = OperatorSet::new(3).unwrap();
        let mesh =
            build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::Sine { amplitude: 0.1 }).unwrap();
        let gas = GasParams {
            reynolds: 100.0,
            ..GasParams::default()
        };
        let mut fields = FieldsNse::new(&mesh);
        let mut ws = NseWorkspace::new(&mesh);
        fields.set_from(&mesh, |_| {
            State::from_primitive(1.0, [0.4, -0.3, 0.2], 1.0, &gas)
        });
        crate::dg::compute_entropy_variables(&mesh, &gas, &mut fields).unwrap();
        compute_entropy_gradients(&mesh, &ops, &SchemeConfig::default(), &mut fields, &mut ws);
        let ens = enstrophy(&mesh, &ops, &fields, &gas);
        assert!(ens.abs() < 1e-20, "enstrophy of rigid translation: {ens}");
    }

    #[test]
    fn entropy_rate_audit_is_linear_and_signed() {
        let ops = OperatorSet::new(2).unwrap();
        let mesh = build_box_mesh([1.0; 3], [1, 1, 1], &ops, Warp::None).unwrap();
        let gas = GasParams::default();
        let n = mesh.nodes_per_element();
        let u = vec![State::from_primitive(1.0, [0.2, 0.1, 0.0], 0.8, &gas); n];
        let zero = vec![State::default(); n];
        assert_eq!(entropy_rate_audit(&mesh, &ops, &gas, &u, &zero), 0.0);
        let rhs: Vec<State> = (0..n)
            .map(|i| State([0.01 * i as f64, 0.0, 0.02, -0.01, 0.005]))
            .collect();
        let forward = entropy_rate_audit(&mesh, &ops, &gas, &u, &rhs);
        let reversed: Vec<State> = rhs.iter().map(|s| *s * -1.0).collect();
        let backward = entropy_rate_audit(&mesh, &ops, &gas, &u, &reversed);
        assert!((forward + backward).abs() < 1e-15 * forward.abs().max(1.0));
    }

    #[test]
    fn energy_norm_reference_values() {
        let ops = OperatorSet::new(4).unwrap();
        let mesh = Mesh1d::uniform(3.0, 5, false).unwrap();
        // U = 1 on [0, L] gives L
        let u = vec![1.0; mesh.n_elements() * ops.n_nodes()];
        assert!((energy_norm_1d(&mesh, &ops, &u) - 3.0).abs() < 1e-13);
        // single element, U = xi: (dx/2) * 2/3
        let mesh1 = Mesh1d::uniform(2.0, 1, false).unwrap();
        let u1: Vec<f64> = ops.nodes().to_vec();
        assert!((energy_norm_1d(&mesh1, &ops, &u1) - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn series_requires_increasing_time_and_derives_columns() {
        let mut series = TimeSeries::new();
        for i in 0..5 {
            series
                .push(Sample {
                    t: i as f64 * 0.1,
                    entropy: -1.0,
                    kinetic: Some(1.0 - 0.01 * i as f64),
                    enstrophy: Some(0.5),
                    mass: 1.0,
                })
                .unwrap();
        }
        assert!(series
            .push(Sample {
                t: 0.3,
                entropy: 0.0,
                kinetic: None,
                enstrophy: None,
                mass: 1.0,
            })
            .is_err());
        // centered difference of the linear decay is exact
        let diss = series.dissipation_rate(2).unwrap();
        assert!((diss - 0.1).abs() < 1e-12);
        let re = series.numerical_reynolds(2).unwrap();
        assert!((re - 2.0 * 0.5 / 0.1).abs() < 1e-10);
        // first/last rows have empty derived entries
        let csv = series.to_csv();
        let first_row = csv.lines().nth(1).unwrap();
        assert!(first_row.contains(",,"));
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("t,S,Ekin,ens,diss,Re_num,mass"));
    }

    #[test]
    fn steady_kinetic_energy_gives_zero_dissipation() {
        let mut series = TimeSeries::new();
        for i in 0..4 {
            series
                .push(Sample {
                    t: i as f64,
                    entropy: 0.0,
                    kinetic: Some(2.5),
                    enstrophy: Some(1.0),
                    mass: 1.0,
                })
                .unwrap();
        }
        assert_eq!(series.dissipation_rate(1), Some(0.0));
        // nonpositive dissipation suppresses Re_num
        assert_eq!(series.numerical_reynolds(1), None);
    }
}
