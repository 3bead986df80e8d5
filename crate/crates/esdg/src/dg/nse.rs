//! Right-hand side assembly for the 3D compressible Navier-Stokes
//! equations on curvilinear hexahedral meshes.
//!
//! The evaluation is two-phase: embarrassingly parallel per-element
//! work (entropy variables, gradients, viscous fluxes, volume terms)
//! and a face sweep that computes every shared numerical flux exactly
//! once into a face buffer. Elements then gather from the buffer, so
//! results are bitwise reproducible for any thread count and the
//! lifted fluxes telescope exactly.

use rayon::prelude::*;

use crate::dg::{InterfaceFlux, SchemeConfig, VolumeMode};
use crate::error::SolverError;
use crate::flux::{br1_average_state, contravariant_ec_flux, es_dissipation};
use crate::mesh::{orient_face_point, side_node, Mesh, MetricData, Side, ALL_SIDES};
use crate::operators::OperatorSet;
use crate::physics::{
    entropy_variables, euler_flux, pressure, viscous_flux, BlockFlux, EntropyState, GasParams,
    GradW, State, PRESSURE_MIN, RHO_MIN,
};

/// Nodal solution storage: conservative state, entropy variables, the
/// lifted entropy-variable gradients and the RHS accumulator, all
/// element-major with lexicographic nodes (i fastest).
#[derive(Debug, Clone)]
pub struct FieldsNse {
    pub n_elements: usize,
    pub nodes_per_element: usize,
    pub u: Vec<State>,
    pub w: Vec<EntropyState>,
    pub grad_w: Vec<GradW>,
    pub rhs: Vec<State>,
}

impl FieldsNse {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.n_elements() * mesh.nodes_per_element();
        Self {
            n_elements: mesh.n_elements(),
            nodes_per_element: mesh.nodes_per_element(),
            u: vec![State::default(); n],
            w: vec![EntropyState::default(); n],
            grad_w: vec![GradW::default(); n],
            rhs: vec![State::default(); n],
        }
    }

    /// Collocate an analytic state function at the mapped nodes.
    pub fn set_from(&mut self, mesh: &Mesh, f: impl Fn([f64; 3]) -> State) {
        for (element, chunk) in self.u.chunks_mut(self.nodes_per_element).enumerate() {
            let geometry = &mesh.elements[element].geometry;
            for (node, value) in chunk.iter_mut().enumerate() {
                *value = f(geometry[node]);
            }
        }
    }
}

/// Scratch buffers reused across RHS evaluations.
#[derive(Debug, Clone)]
pub struct NseWorkspace {
    /// Cartesian viscous flux per node.
    visc_flux: Vec<BlockFlux>,
    /// Contravariant viscous flux per node, slot l holds `F~_v^l`.
    visc_contra: Vec<BlockFlux>,
    /// Master-outward numerical advective flux per face point.
    face_adv: Vec<State>,
    /// Master-outward numerical viscous flux per face point.
    face_visc: Vec<State>,
    /// BR1 averaged entropy variables per face point.
    face_wstar: Vec<EntropyState>,
}

impl NseWorkspace {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.n_elements() * mesh.nodes_per_element();
        let np = mesh.n_per_dim();
        let face_points = mesh.faces.len() * np * np;
        Self {
            visc_flux: vec![BlockFlux::default(); n],
            visc_contra: vec![BlockFlux::default(); n],
            face_adv: vec![State::default(); face_points],
            face_visc: vec![State::default(); face_points],
            face_wstar: vec![EntropyState::default(); face_points],
        }
    }
}

/// Compute the entropy variables of every node, validating positivity.
/// The first offending node is reported with its element.
pub fn compute_entropy_variables(
    mesh: &Mesh,
    gas: &GasParams,
    fields: &mut FieldsNse,
) -> Result<(), SolverError> {
    let nodes = mesh.nodes_per_element();
    fields
        .u
        .par_chunks(nodes)
        .zip(fields.w.par_chunks_mut(nodes))
        .enumerate()
        .try_for_each(|(element, (u, w))| {
            for node in 0..nodes {
                let rho = u[node].rho();
                let p = pressure(u[node], gas);
                if !(rho > RHO_MIN) || !(p > PRESSURE_MIN) {
                    return Err(SolverError::InvalidState {
                        element,
                        node,
                        rho,
                        pressure: p,
                    });
                }
                w[node] = entropy_variables(u[node], gas);
            }
            Ok(())
        })
}

/// Contravariant components of a Cartesian block flux at one node.
#[inline]
fn contravariant(block: &BlockFlux, metric: &[[f64; 3]; 3]) -> BlockFlux {
    let mut out = [State::default(); 3];
    for (l, slot) in out.iter_mut().enumerate() {
        *slot = block.0[0] * metric[l][0] + block.0[1] * metric[l][1] + block.0[2] * metric[l][2];
    }
    BlockFlux(out)
}

/// Strong-form reference divergence of a per-node contravariant block
/// flux, accumulated into `acc`.
fn add_reference_divergence(
    contra: &[BlockFlux],
    ops: &OperatorSet,
    scale: f64,
    acc: &mut [State],
) {
    let np = ops.n_nodes();
    let d = ops.diff();
    let idx = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                let mut sum = State::default();
                for m in 0..np {
                    sum = sum
                        + contra[idx(m, j, k)].0[0] * d[[i, m]]
                        + contra[idx(i, m, k)].0[1] * d[[j, m]]
                        + contra[idx(i, j, m)].0[2] * d[[k, m]];
                }
                acc[idx(i, j, k)] = acc[idx(i, j, k)] + sum * scale;
            }
        }
    }
}

/// Flux-differencing (or standard) volume term `D(F~)` of one element,
/// not divided by the Jacobian and not negated.
pub fn flux_difference_volume(
    u: &[State],
    metrics: &MetricData,
    ops: &OperatorSet,
    gas: &GasParams,
    mode: VolumeMode,
    out: &mut [State],
) {
    let np = ops.n_nodes();
    debug_assert_eq!(u.len(), np * np * np);
    out.iter_mut().for_each(|s| *s = State::default());

    if mode == VolumeMode::Standard {
        let contra: Vec<BlockFlux> = (0..u.len())
            .map(|g| contravariant(&euler_flux(u[g], gas), &metrics.contravariant[g]))
            .collect();
        add_reference_divergence(&contra, ops, 1.0, out);
        return;
    }

    let d = ops.diff();
    let idx = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    // One line sum per tensor direction; each unordered pair is
    // evaluated once, which both halves the flux count and makes the
    // symmetry of the two-point flux bitwise.
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                let g_i = idx(i, j, k);
                for m in i..np {
                    let g_m = idx(m, j, k);
                    let ja = average_metric(
                        &metrics.contravariant[g_i][0],
                        &metrics.contravariant[g_m][0],
                    );
                    let f = contravariant_ec_flux(u[g_i], u[g_m], ja, gas);
                    out[g_i] = out[g_i] + f * (2.0 * d[[i, m]]);
                    if m != i {
                        out[g_m] = out[g_m] + f * (2.0 * d[[m, i]]);
                    }
                }
            }
        }
    }
    for k in 0..np {
        for i in 0..np {
            for j in 0..np {
                let g_j = idx(i, j, k);
                for m in j..np {
                    let g_m = idx(i, m, k);
                    let ja = average_metric(
                        &metrics.contravariant[g_j][1],
                        &metrics.contravariant[g_m][1],
                    );
                    let f = contravariant_ec_flux(u[g_j], u[g_m], ja, gas);
                    out[g_j] = out[g_j] + f * (2.0 * d[[j, m]]);
                    if m != j {
                        out[g_m] = out[g_m] + f * (2.0 * d[[m, j]]);
                    }
                }
            }
        }
    }
    for j in 0..np {
        for i in 0..np {
            for k in 0..np {
                let g_k = idx(i, j, k);
                for m in k..np {
                    let g_m = idx(i, j, m);
                    let ja = average_metric(
                        &metrics.contravariant[g_k][2],
                        &metrics.contravariant[g_m][2],
                    );
                    let f = contravariant_ec_flux(u[g_k], u[g_m], ja, gas);
                    out[g_k] = out[g_k] + f * (2.0 * d[[k, m]]);
                    if m != k {
                        out[g_m] = out[g_m] + f * (2.0 * d[[m, k]]);
                    }
                }
            }
        }
    }
}

#[inline]
fn average_metric(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

/// Iterate the face points of an element side, yielding
/// `(face_point_index, own_node_index)`. Face points are always indexed
/// in the master side's `(p, q)` order; slave nodes go through the
/// orientation map.
fn for_each_face_point(
    mesh: &Mesh,
    element: usize,
    side: Side,
    mut body: impl FnMut(usize, usize),
) {
    let link = mesh.face_of(element, side);
    let face = &mesh.faces[link.face];
    let np = mesh.n_per_dim();
    let degree = mesh.degree;
    for q in 0..np {
        for p in 0..np {
            let fp = p + np * q;
            let (own_p, own_q) = if link.is_master {
                (p, q)
            } else {
                orient_face_point(face.orientation, p, q, degree)
            };
            let (i, j, k) = side_node(side, own_p, own_q, degree);
            body(fp, mesh.node_index(i, j, k));
        }
    }
}

/// BR1 lifted gradients of the entropy variables:
/// `J Q_d = sum_i Ja^i_d dW/dxi^i + lift((W* - W) shat n_d)`, divided by
/// the nodal Jacobian. `W*` is the arithmetic interface average unless
/// the viscous interface is suppressed for an audit.
pub fn compute_entropy_gradients(
    mesh: &Mesh,
    ops: &OperatorSet,
    scheme: &SchemeConfig,
    fields: &mut FieldsNse,
    ws: &mut NseWorkspace,
) {
    let np = mesh.n_per_dim();
    let nodes = mesh.nodes_per_element();
    let face_points = np * np;

    // interface averages of the entropy variables
    if !scheme.suppress_viscous_interface {
        let w = &fields.w;
        ws.face_wstar
            .par_chunks_mut(face_points)
            .enumerate()
            .for_each(|(face_id, wstar)| {
                let face = &mesh.faces[face_id];
                for q in 0..np {
                    for p in 0..np {
                        let fp = p + np * q;
                        let (mi, mj, mk) = side_node(face.master_side, p, q, mesh.degree);
                        let m_node = face.master * nodes + mesh.node_index(mi, mj, mk);
                        let (sp, sq) = orient_face_point(face.orientation, p, q, mesh.degree);
                        let (si, sj, sk) = side_node(face.slave_side, sp, sq, mesh.degree);
                        let s_node = face.slave * nodes + mesh.node_index(si, sj, sk);
                        wstar[fp] = br1_average_state(w[m_node], w[s_node]);
                    }
                }
            });
    }

    let w = &fields.w;
    let wstar = &ws.face_wstar;
    let weights = ops.weights();
    fields
        .grad_w
        .par_chunks_mut(nodes)
        .enumerate()
        .for_each(|(element, grad)| {
            let metrics = &mesh.elements[element].metrics;
            let w_el = &w[element * nodes..(element + 1) * nodes];
            // volume part: physical gradient of the interpolant
            let mut component = vec![0.0; nodes];
            let mut derivative = vec![[0.0; 3]; nodes]; // per reference axis
            let mut scratch = vec![0.0; nodes];
            for g in grad.iter_mut() {
                *g = GradW::default();
            }
            for c in 0..5 {
                for node in 0..nodes {
                    component[node] = w_el[node].0[c];
                }
                for axis in 0..3 {
                    crate::mesh::tensor_derivative(&component, ops, axis, &mut scratch);
                    for node in 0..nodes {
                        derivative[node][axis] = scratch[node];
                    }
                }
                for node in 0..nodes {
                    let ja = &metrics.contravariant[node];
                    for d in 0..3 {
                        grad[node].0[d][c] = ja[0][d] * derivative[node][0]
                            + ja[1][d] * derivative[node][1]
                            + ja[2][d] * derivative[node][2];
                    }
                }
            }
            // face lift against the face-stored metric-weighted normal,
            // shared by both sides so the coupling is single-valued
            if !scheme.suppress_viscous_interface {
                for side in ALL_SIDES {
                    let link = mesh.face_of(element, side);
                    let face = &mesh.faces[link.face];
                    let out_sign = if link.is_master { 1.0 } else { -1.0 };
                    let w_end = if side.is_positive() {
                        weights[np - 1]
                    } else {
                        weights[0]
                    };
                    let star = &wstar[link.face * face_points..(link.face + 1) * face_points];
                    for_each_face_point(mesh, element, side, |fp, node| {
                        let shat = face.surf[fp];
                        let normal = face.normal[fp];
                        for c in 0..5 {
                            let jump = star[fp].0[c] - w_el[node].0[c];
                            for d in 0..3 {
                                grad[node].0[d][c] += jump * out_sign * shat * normal[d] / w_end;
                            }
                        }
                    });
                }
            }
            for (node, g) in grad.iter_mut().enumerate() {
                let inv_j = 1.0 / metrics.jacobian[node];
                for d in 0..3 {
                    for c in 0..5 {
                        g.0[d][c] *= inv_j;
                    }
                }
            }
        });
}

/// Assemble `dU/dt` for the compressible Navier-Stokes equations.
///
/// Sequence: entropy variables from `U` (with positivity checks), BR1
/// gradients, nodal viscous fluxes, flux-differencing volume terms,
/// interface fluxes, quadrature-weighted lifting, division by `J`.
pub fn rhs_nse(
    mesh: &Mesh,
    ops: &OperatorSet,
    scheme: &SchemeConfig,
    gas: &GasParams,
    fields: &mut FieldsNse,
    ws: &mut NseWorkspace,
) -> Result<(), SolverError> {
    let np = mesh.n_per_dim();
    let nodes = mesh.nodes_per_element();
    let face_points = np * np;
    let viscous = gas.viscous();
    let inv_re = if viscous { 1.0 / gas.reynolds } else { 0.0 };

    compute_entropy_variables(mesh, gas, fields)?;
    if viscous {
        compute_entropy_gradients(mesh, ops, scheme, fields, ws);
    }

    // nodal viscous fluxes, Cartesian and contravariant
    if viscous {
        let u = &fields.u;
        let grad_w = &fields.grad_w;
        ws.visc_flux
            .par_chunks_mut(nodes)
            .zip(ws.visc_contra.par_chunks_mut(nodes))
            .enumerate()
            .for_each(|(element, (visc, visc_c))| {
                let metrics = &mesh.elements[element].metrics;
                for node in 0..nodes {
                    let g = element * nodes + node;
                    visc[node] = viscous_flux(u[g], &grad_w[g], gas);
                    visc_c[node] = contravariant(&visc[node], &metrics.contravariant[node]);
                }
            });
    }

    // shared interface fluxes, master-outward, one evaluation per point
    {
        let u = &fields.u;
        let visc_flux = &ws.visc_flux;
        let suppress = scheme.suppress_viscous_interface;
        ws.face_adv
            .par_chunks_mut(face_points)
            .zip(ws.face_visc.par_chunks_mut(face_points))
            .enumerate()
            .for_each(|(face_id, (adv, visc))| {
                let face = &mesh.faces[face_id];
                for q in 0..np {
                    for p in 0..np {
                        let fp = p + np * q;
                        let (mi, mj, mk) = side_node(face.master_side, p, q, mesh.degree);
                        let m_global = face.master * nodes + mesh.node_index(mi, mj, mk);
                        let (sp, sq) = orient_face_point(face.orientation, p, q, mesh.degree);
                        let (si, sj, sk) = side_node(face.slave_side, sp, sq, mesh.degree);
                        let s_global = face.slave * nodes + mesh.node_index(si, sj, sk);

                        let shat = face.surf[fp];
                        let normal = face.normal[fp];
                        let ja = [shat * normal[0], shat * normal[1], shat * normal[2]];
                        let mut f = contravariant_ec_flux(u[m_global], u[s_global], ja, gas);
                        if scheme.interface == InterfaceFlux::EcDissipation {
                            f = f + es_dissipation(u[m_global], u[s_global], normal, shat, gas);
                        }
                        adv[fp] = f;

                        if viscous && !suppress {
                            // BR1 average of the Cartesian blocks against
                            // the shared face metric
                            let mean = [
                                (visc_flux[m_global].0[0] + visc_flux[s_global].0[0]) * 0.5,
                                (visc_flux[m_global].0[1] + visc_flux[s_global].0[1]) * 0.5,
                                (visc_flux[m_global].0[2] + visc_flux[s_global].0[2]) * 0.5,
                            ];
                            visc[fp] = mean[0] * ja[0] + mean[1] * ja[1] + mean[2] * ja[2];
                        }
                    }
                }
            });
    }

    // volume terms, face gather, scaling
    {
        let u = &fields.u;
        let visc_flux = &ws.visc_flux;
        let visc_contra = &ws.visc_contra;
        let face_adv = &ws.face_adv;
        let face_visc = &ws.face_visc;
        let weights = ops.weights();
        let suppress = scheme.suppress_viscous_interface;
        fields
            .rhs
            .par_chunks_mut(nodes)
            .enumerate()
            .for_each(|(element, acc)| {
                let metrics = &mesh.elements[element].metrics;
                let u_el = &u[element * nodes..(element + 1) * nodes];
                flux_difference_volume(u_el, metrics, ops, gas, scheme.volume, acc);
                if viscous {
                    let visc_el = &visc_contra[element * nodes..(element + 1) * nodes];
                    add_reference_divergence(visc_el, ops, -inv_re, acc);
                }
                // surface terms evaluate the element's own fluxes against
                // the face-stored metric, so the numerical and interior
                // contributions cancel exactly for continuous data
                for side in ALL_SIDES {
                    let link = mesh.face_of(element, side);
                    let face = &mesh.faces[link.face];
                    let w_end = if side.is_positive() {
                        weights[np - 1]
                    } else {
                        weights[0]
                    };
                    // numerical fluxes are stored master-outward
                    let num_sign = if link.is_master { 1.0 } else { -1.0 };
                    let adv_face =
                        &face_adv[link.face * face_points..(link.face + 1) * face_points];
                    let visc_face =
                        &face_visc[link.face * face_points..(link.face + 1) * face_points];
                    for_each_face_point(mesh, element, side, |fp, node| {
                        let g = element * nodes + node;
                        let shat = face.surf[fp];
                        let normal = face.normal[fp];
                        let ja = [shat * normal[0], shat * normal[1], shat * normal[2]];
                        let block = euler_flux(u[g], gas);
                        let own_adv = block.0[0] * ja[0] + block.0[1] * ja[1] + block.0[2] * ja[2];
                        let mut surf = (adv_face[fp] - own_adv) * num_sign;
                        if viscous && !suppress {
                            let fv = &visc_flux[g];
                            let own_visc = fv.0[0] * ja[0] + fv.0[1] * ja[1] + fv.0[2] * ja[2];
                            surf = surf - (visc_face[fp] - own_visc) * (num_sign * inv_re);
                        }
                        acc[node] = acc[node] + surf * (1.0 / w_end);
                    });
                }
                for (node, value) in acc.iter_mut().enumerate() {
                    *value = *value * (-1.0 / metrics.jacobian[node]);
                }
            });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, Warp};
    use crate::physics::entropy_and_flux;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TAU: f64 = 2.0 * std::f64::consts::PI;

    fn smooth_field(x: [f64; 3]) -> State {
        let gas = GasParams::default();
        let rho = 1.0 + 0.2 * (x[0].sin() * x[1].cos() * x[2].cos());
        let v = [
            0.3 * x[1].sin() * x[2].cos(),
            -0.2 * x[0].cos() * x[2].sin(),
            0.1 * x[0].sin() * x[1].sin(),
        ];
        let p = 1.0 + 0.1 * ((x[0] + x[1]).cos() * x[2].sin());
        State::from_primitive(rho, v, p, &gas)
    }

    #[test]
    fn constant_state_is_steady_on_warped_mesh() {
        let ops = OperatorSet::new(4).unwrap();
        let mesh =
            build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::Sine { amplitude: 0.12 }).unwrap();
        let gas = GasParams::default();
        let scheme = SchemeConfig::default();
        let mut fields = FieldsNse::new(&mesh);
        let mut ws = NseWorkspace::new(&mesh);
        let free = State::from_primitive(1.0, [0.3, -0.2, 0.7], 0.9, &gas);
        fields.set_from(&mesh, |_| free);
        rhs_nse(&mesh, &ops, &scheme, &gas, &mut fields, &mut ws).unwrap();
        let umax = free.0.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let rmax = fields
            .rhs
            .iter()
            .flat_map(|s| s.0.iter())
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(rmax <= 1e-11 * umax, "free-stream residual {rmax}");
    }

    #[test]
    fn standard_mode_also_preserves_free_stream() {
        let ops = OperatorSet::new(3).unwrap();
        let mesh =
            build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::Sine { amplitude: 0.1 }).unwrap();
        let gas = GasParams::default();
        let scheme = SchemeConfig {
            volume: VolumeMode::Standard,
            ..SchemeConfig::default()
        };
        let mut fields = FieldsNse::new(&mesh);
        let mut ws = NseWorkspace::new(&mesh);
        let free = State::from_primitive(1.0, [0.4, 0.1, -0.3], 1.1, &gas);
        fields.set_from(&mesh, |_| free);
        rhs_nse(&mesh, &ops, &scheme, &gas, &mut fields, &mut ws).unwrap();
        let rmax = fields
            .rhs
            .iter()
            .flat_map(|s| s.0.iter())
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(rmax <= 1e-11, "standard-mode free-stream residual {rmax}");
    }

    #[test]
    fn volume_term_matches_brute_force_expansion() {
        // independent straight-loop oracle expanding the two-point volume
        // sum term by term, including diagonal entries
        let ops = OperatorSet::new(1).unwrap();
        let mesh = build_box_mesh([1.0, 1.3, 0.8], [1, 1, 1], &ops, Warp::None).unwrap();
        let gas = GasParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let metrics = &mesh.elements[0].metrics;
        let np = 2usize;
        let u: Vec<State> = (0..np * np * np)
            .map(|_| {
                State::from_primitive(
                    rng.random_range(0.5..2.0),
                    [
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ],
                    rng.random_range(0.5..2.0),
                    &gas,
                )
            })
            .collect();
        let mut got = vec![State::default(); u.len()];
        flux_difference_volume(
            &u,
            metrics,
            &ops,
            &gas,
            VolumeMode::EntropyConservative,
            &mut got,
        );

        let d = ops.diff();
        let idx = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let g = idx(i, j, k);
                    let mut want = State::default();
                    for m in 0..np {
                        let pairs = [
                            (idx(m, j, k), 0usize, d[[i, m]]),
                            (idx(i, m, k), 1, d[[j, m]]),
                            (idx(i, j, m), 2, d[[k, m]]),
                        ];
                        for (gm, l, dcoef) in pairs {
                            let ja = [
                                0.5 * (metrics.contravariant[g][l][0]
                                    + metrics.contravariant[gm][l][0]),
                                0.5 * (metrics.contravariant[g][l][1]
                                    + metrics.contravariant[gm][l][1]),
                                0.5 * (metrics.contravariant[g][l][2]
                                    + metrics.contravariant[gm][l][2]),
                            ];
                            want =
                                want + contravariant_ec_flux(u[g], u[gm], ja, &gas) * (2.0 * dcoef);
                        }
                    }
                    for c in 0..5 {
                        assert!(
                            (got[g].0[c] - want.0[c]).abs() <= 1e-13 * want.0[c].abs().max(1.0),
                            "volume term mismatch at node {g} comp {c}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn volume_entropy_contraction_reduces_to_surface_integral() {
        // per element: sum omega W . D(F~)^ec = surface integral of the
        // contravariant entropy flux
        let ops = OperatorSet::new(4).unwrap();
        let mesh =
            build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::Sine { amplitude: 0.12 }).unwrap();
        let gas = GasParams::default();
        let np = ops.n_nodes();
        let mut fields = FieldsNse::new(&mesh);
        fields.set_from(&mesh, smooth_field);
        compute_entropy_variables(&mesh, &gas, &mut fields).unwrap();
        let weights = ops.weights();
        let nodes = mesh.nodes_per_element();
        let mut volume = vec![State::default(); nodes];
        for element in 0..mesh.n_elements() {
            let metrics = &mesh.elements[element].metrics;
            let u_el = &fields.u[element * nodes..(element + 1) * nodes];
            let w_el = &fields.w[element * nodes..(element + 1) * nodes];
            flux_difference_volume(
                u_el,
                metrics,
                &ops,
                &gas,
                VolumeMode::EntropyConservative,
                &mut volume,
            );
            let mut contraction = 0.0;
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        let node = mesh.node_index(i, j, k);
                        let wq = weights[i] * weights[j] * weights[k];
                        let dot: f64 = (0..5).map(|c| w_el[node].0[c] * volume[node].0[c]).sum();
                        contraction += wq * dot;
                    }
                }
            }
            let mut surface = 0.0;
            for side in ALL_SIDES {
                let sign = side.orientation_sign();
                let axis = side.axis();
                for q in 0..np {
                    for p in 0..np {
                        let (i, j, k) = side_node(side, p, q, mesh.degree);
                        let node = mesh.node_index(i, j, k);
                        let (_, f_ent) = entropy_and_flux(u_el[node], &gas);
                        let ja = metrics.contravariant[node][axis];
                        let fn_ent = ja[0] * f_ent[0] + ja[1] * f_ent[1] + ja[2] * f_ent[2];
                        surface += weights[p] * weights[q] * sign * fn_ent;
                    }
                }
            }
            let scale = contraction.abs().max(surface.abs()).max(1.0);
            assert!(
                (contraction - surface).abs() <= 1e-11 * scale,
                "element {element}: contraction {contraction} vs surface {surface}"
            );
        }
    }

    #[test]
    fn gradients_exact_for_linear_fields_on_affine_mesh() {
        let ops = OperatorSet::new(3).unwrap();
        let mesh = build_box_mesh([2.0, 2.0, 2.0], [2, 2, 2], &ops, Warp::None).unwrap();
        let scheme = SchemeConfig::default();
        let mut fields = FieldsNse::new(&mesh);
        let mut ws = NseWorkspace::new(&mesh);
        // a globally continuous piecewise field whose entropy variables
        // cannot be linear; instead drive the gradient operator directly
        // with linear data through w
        let nodes = mesh.nodes_per_element();
        for element in 0..mesh.n_elements() {
            let geometry = &mesh.elements[element].geometry;
            for node in 0..nodes {
                let x = geometry[node];
                let mut w = [0.0; 5];
                for (c, wc) in w.iter_mut().enumerate() {
                    *wc = 0.3 * x[0] - 0.7 * x[1] + 0.2 * x[2] + c as f64;
                }
                fields.w[element * nodes + node] = EntropyState(w);
            }
        }
        // the linear profile is discontinuous across the periodic wrap,
        // so exercise the volume part alone via suppressed interfaces
        let suppressed = SchemeConfig {
            suppress_viscous_interface: true,
            ..scheme
        };
        compute_entropy_gradients(&mesh, &ops, &suppressed, &mut fields, &mut ws);
        for g in 0..fields.grad_w.len() {
            for c in 0..5 {
                let grad = [
                    fields.grad_w[g].0[0][c],
                    fields.grad_w[g].0[1][c],
                    fields.grad_w[g].0[2][c],
                ];
                assert!((grad[0] - 0.3).abs() < 1e-12, "d/dx {}", grad[0]);
                assert!((grad[1] + 0.7).abs() < 1e-12, "d/dy {}", grad[1]);
                assert!((grad[2] - 0.2).abs() < 1e-12, "d/dz {}", grad[2]);
            }
        }
    }

    #[test]
    fn gradients_vanish_for_constant_w() {
        let ops = OperatorSet::new(3).unwrap();
        let mesh =
            build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::Sine { amplitude: 0.1 }).unwrap();
        let scheme = SchemeConfig::default();
        let mut fields = FieldsNse::new(&mesh);
        let mut ws = NseWorkspace::new(&mesh);
        let gas = GasParams::default();
        fields.set_from(&mesh, |_| {
            State::from_primitive(1.3, [0.2, -0.4, 0.5], 0.8, &gas)
        });
        compute_entropy_variables(&mesh, &gas, &mut fields).unwrap();
        compute_entropy_gradients(&mesh, &ops, &scheme, &mut fields, &mut ws);
        for g in &fields.grad_w {
            for d in 0..3 {
                for c in 0..5 {
                    assert!(g.0[d][c].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gradient_lift_is_local_to_adjacent_face_layers() {
        // a deliberate discontinuity across one face must produce lift
        // contributions only in the two adjacent elements' face layers
        let ops = OperatorSet::new(3).unwrap();
        let mesh = build_box_mesh([2.0; 3], [2, 1, 1], &ops, Warp::None).unwrap();
        let scheme = SchemeConfig::default();
        let mut fields = FieldsNse::new(&mesh);
        let mut ws = NseWorkspace::new(&mesh);
        let nodes = mesh.nodes_per_element();
        // piecewise-constant w: 1 in element 0, 2 in element 1
        for element in 0..mesh.n_elements() {
            for node in 0..nodes {
                fields.w[element * nodes + node] = EntropyState([1.0 + element as f64; 5]);
            }
        }
        compute_entropy_gradients(&mesh, &ops, &scheme, &mut fields, &mut ws);
        let np = ops.n_nodes();
        for element in 0..2 {
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        let g = element * nodes + mesh.node_index(i, j, k);
                        let on_x_face = i == 0 || i == np - 1;
                        let magnitude: f64 = (0..3)
                            .flat_map(|d| (0..5).map(move |c| (d, c)))
                            .map(|(d, c)| fields.grad_w[g].0[d][c].abs())
                            .fold(0.0, f64::max);
                        if on_x_face {
                            assert!(magnitude > 1e-3, "expected lift at face node");
                        } else {
                            assert!(magnitude < 1e-13, "interior node polluted: {magnitude}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_state_reports_element_and_node() {
        let ops = OperatorSet::new(2).unwrap();
        let mesh = build_box_mesh([1.0; 3], [2, 1, 1], &ops, Warp::None).unwrap();
        let gas = GasParams::default();
        let mut fields = FieldsNse::new(&mesh);
        let mut ws = NseWorkspace::new(&mesh);
        fields.set_from(&mesh, |_| State::from_primitive(1.0, [0.0; 3], 1.0, &gas));
        let nodes = mesh.nodes_per_element();
        fields.u[nodes + 5] = State::new(-1.0, [0.0; 3], 1.0);
        let err = rhs_nse(
            &mesh,
            &ops,
            &SchemeConfig::default(),
            &gas,
            &mut fields,
            &mut ws,
        )
        .unwrap_err();
        match err {
            SolverError::InvalidState { element, node, .. } => {
                assert_eq!(element, 1);
                assert_eq!(node, 5);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn ec_and_standard_volume_agree_on_resolved_field() {
        // on a well-resolved smooth field the two volume forms differ by
        // a spectrally small aliasing term that shrinks with N
        let gas = GasParams::default();
        let mut previous = f64::INFINITY;
        for n in [3usize, 5, 7] {
            let ops = OperatorSet::new(n).unwrap();
            let mesh = build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::None).unwrap();
            let mut fields = FieldsNse::new(&mesh);
            let mut ws = NseWorkspace::new(&mesh);
            fields.set_from(&mesh, smooth_field);
            let mut rhs_ec = vec![State::default(); fields.u.len()];
            rhs_nse(
                &mesh,
                &ops,
                &SchemeConfig::default(),
                &gas,
                &mut fields,
                &mut ws,
            )
            .unwrap();
            rhs_ec.copy_from_slice(&fields.rhs);
            rhs_nse(
                &mesh,
                &ops,
                &SchemeConfig {
                    volume: VolumeMode::Standard,
                    ..SchemeConfig::default()
                },
                &gas,
                &mut fields,
                &mut ws,
            )
            .unwrap();
            let diff = rhs_ec
                .iter()
                .zip(&fields.rhs)
                .flat_map(|(a, b)| (0..5).map(move |c| (a.0[c] - b.0[c]).abs()))
                .fold(0.0f64, f64::max);
            assert!(
                diff < previous * 0.8,
                "aliasing difference not decaying: {diff} after {previous}"
            );
            previous = diff;
        }
        assert!(previous < 1e-2);
    }
}
