//! 1D DGSEM operators for the scalar model problems: the linear
//! advection-diffusion equation in split form and the viscous Burgers
//! equation with entropy-conservative flux differencing. Both use BR1
//! averages for the viscous coupling.

use crate::dg::{SchemeConfig, VolumeMode};
use crate::error::SolverError;
use crate::flux::{burgers_ec_flux, linear_numerical_flux};
use crate::mesh::Mesh1d;
use crate::operators::OperatorSet;
use crate::physics::{burgers_flux, AdvDiffCoeffs};

/// Nodal storage for a scalar 1D field: solution, lifted gradient,
/// viscous flux and RHS, element-major.
#[derive(Debug, Clone)]
pub struct Fields1d {
    pub n_elements: usize,
    pub nodes_per_element: usize,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub fv: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl Fields1d {
    pub fn new(mesh: &Mesh1d, ops: &OperatorSet) -> Self {
        let n = mesh.n_elements() * ops.n_nodes();
        Self {
            n_elements: mesh.n_elements(),
            nodes_per_element: ops.n_nodes(),
            u: vec![0.0; n],
            q: vec![0.0; n],
            fv: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }

    pub fn set_from(&mut self, mesh: &Mesh1d, ops: &OperatorSet, f: impl Fn(f64) -> f64) {
        for k in 0..self.n_elements {
            for (i, &xi) in ops.nodes().iter().enumerate() {
                self.u[k * self.nodes_per_element + i] = f(mesh.coord(k, xi));
            }
        }
    }
}

/// Linear advection-diffusion problem data with the diffusivity sampled
/// at the nodes and element edges.
#[derive(Debug, Clone)]
pub struct LinearAdvDiffSetup {
    pub coeffs: AdvDiffCoeffs,
    pub b_nodes: Vec<f64>,
    pub b_edges: Vec<f64>,
}

impl LinearAdvDiffSetup {
    pub fn new(
        mesh: &Mesh1d,
        ops: &OperatorSet,
        coeffs: AdvDiffCoeffs,
    ) -> Result<Self, SolverError> {
        let b_nodes = coeffs.diffusivity.sample(&mesh.node_coords(ops))?;
        let b_edges = coeffs.diffusivity.sample(&mesh.edges)?;
        Ok(Self {
            coeffs,
            b_nodes,
            b_edges,
        })
    }
}

/// Viscous Burgers problem data; `viscosity = 0` disables the viscous
/// path (inviscid, periodic use only).
#[derive(Debug, Clone, Copy)]
pub struct BurgersSetup {
    pub viscosity: f64,
}

/// Value of the solution at an element's left/right end node.
#[inline]
fn end_values(u: &[f64], k: usize, np: usize) -> (f64, f64) {
    (u[k * np], u[k * np + np - 1])
}

/// BR1 gradient of a scalar field: `J q = D u + lift(u* - u)` with
/// `u* = <u>` at interior faces and the supplied boundary closures at
/// the domain ends (ignored when periodic).
fn br1_gradient_1d(
    mesh: &Mesh1d,
    ops: &OperatorSet,
    u: &[f64],
    left_ustar: impl Fn(f64) -> f64,
    right_ustar: impl Fn(f64) -> f64,
    q: &mut [f64],
) {
    let np = ops.n_nodes();
    let ne = mesh.n_elements();
    let w0 = ops.weights()[0];
    let wn = ops.weights()[np - 1];

    for k in 0..ne {
        ops.apply_diff(&u[k * np..(k + 1) * np], &mut q[k * np..(k + 1) * np]);
    }
    // interior faces: lift (u* - u) with outward sign
    let n_faces = if mesh.periodic { ne } else { ne - 1 };
    for f in 0..n_faces {
        let left = f;
        let right = (f + 1) % ne;
        let (_, ul) = end_values(u, left, np);
        let (ur, _) = end_values(u, right, np);
        let ustar = 0.5 * (ul + ur);
        q[left * np + np - 1] += (ustar - ul) / wn;
        q[right * np] -= (ustar - ur) / w0;
    }
    if !mesh.periodic {
        let (u0, _) = end_values(u, 0, np);
        let (_, ulast) = end_values(u, ne - 1, np);
        q[0] -= (left_ustar(u0) - u0) / w0;
        q[(ne - 1) * np + np - 1] += (right_ustar(ulast) - ulast) / wn;
    }
    for k in 0..ne {
        let inv_j = 2.0 / mesh.width(k);
        for i in 0..np {
            q[k * np + i] *= inv_j;
        }
    }
}

/// Split-form advective volume term of the linear equation at every
/// node of one element: `1/2 [ D(aU) + a_n (M^-1 D^T M U) ]` written so
/// that the quadrature-weighted form matches
/// `1/2 { <(I^N(aU))', phi> - <U, (I^N(a phi))'> }`.
fn linear_split_volume(ops: &OperatorSet, a: f64, u: &[f64], scratch: &mut [f64], out: &mut [f64]) {
    let np = ops.n_nodes();
    let d = ops.diff();
    let w = ops.weights();
    for i in 0..np {
        scratch[i] = a * u[i];
    }
    ops.apply_diff(scratch, out);
    for n in 0..np {
        let mut transpose_term = 0.0;
        for m in 0..np {
            transpose_term += w[m] * d[[m, n]] * u[m];
        }
        out[n] = 0.5 * (out[n] - a * transpose_term / w[n]);
    }
}

/// Semi-discrete RHS of the 1D linear advection-diffusion equation.
///
/// Split advective volume, numerical flux `a<U> - sigma/2 |a| [U]` at
/// interior faces, BR1 averages for the viscous coupling, and the
/// boundary closures `F* = 0, U* = 0, Q* = Q` (left) and
/// `F* = aU, U* = U, Q* = 0` (right) when the mesh is not periodic.
pub fn rhs_linear_advdiff(
    mesh: &Mesh1d,
    ops: &OperatorSet,
    setup: &LinearAdvDiffSetup,
    scheme: &SchemeConfig,
    fields: &mut Fields1d,
) {
    let np = ops.n_nodes();
    let ne = mesh.n_elements();
    debug_assert_eq!(fields.u.len(), ne * np);
    let a = setup.coeffs.advection;
    let sigma = scheme.sigma_value();
    let w0 = ops.weights()[0];
    let wn = ops.weights()[np - 1];

    br1_gradient_1d(mesh, ops, &fields.u, |_| 0.0, |u| u, &mut fields.q);
    for g in 0..ne * np {
        fields.fv[g] = setup.b_nodes[g] * fields.q[g];
    }

    // volume terms
    let mut scratch = vec![0.0; np];
    let mut advective = vec![0.0; np];
    for k in 0..ne {
        let span = k * np..(k + 1) * np;
        linear_split_volume(
            ops,
            a,
            &fields.u[span.clone()],
            &mut scratch,
            &mut advective,
        );
        ops.apply_diff(&fields.fv[span.clone()], &mut scratch);
        for i in 0..np {
            fields.rhs[k * np + i] = -advective[i] + scratch[i];
        }
    }

    // interior faces: advective flux and BR1 viscous flux
    let n_faces = if mesh.periodic { ne } else { ne - 1 };
    for f in 0..n_faces {
        let left = f;
        let right = (f + 1) % ne;
        let (_, ul) = end_values(&fields.u, left, np);
        let (ur, _) = end_values(&fields.u, right, np);
        let fstar = linear_numerical_flux(a, ul, ur, sigma);
        let b_face = setup.b_edges[f + 1 - usize::from(mesh.periodic && f + 1 == ne)];
        let qstar = 0.5 * (fields.q[left * np + np - 1] + fields.q[right * np]);
        let fvstar = b_face * qstar;
        let gl = left * np + np - 1;
        let gr = right * np;
        fields.rhs[gl] += (-(fstar - 0.5 * a * fields.u[gl]) + (fvstar - fields.fv[gl])) / wn;
        fields.rhs[gr] += ((fstar - 0.5 * a * fields.u[gr]) - (fvstar - fields.fv[gr])) / w0;
    }
    if !mesh.periodic {
        // left end: F* = 0, Q* = Q so the viscous penalty vanishes
        let g0 = 0;
        fields.rhs[g0] += ((0.0 - 0.5 * a * fields.u[g0]) - 0.0) / w0;
        // right end: F* = a U, F_v* = 0 (Q* = 0)
        let gn = (ne - 1) * np + np - 1;
        let fstar = a * fields.u[gn];
        fields.rhs[gn] += (-(fstar - 0.5 * a * fields.u[gn]) + (0.0 - fields.fv[gn])) / wn;
    }

    for k in 0..ne {
        let inv_j = 2.0 / mesh.width(k);
        for i in 0..np {
            fields.rhs[k * np + i] *= inv_j;
        }
    }
}

/// Flux-differencing Burgers volume term `D(F)^ec` of one element,
/// pairwise over the entropy-conservative two-point flux.
pub fn burgers_flux_difference_volume(u: &[f64], ops: &OperatorSet, out: &mut [f64]) {
    let np = ops.n_nodes();
    let d = ops.diff();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..np {
        for m in i..np {
            let f = burgers_ec_flux(u[i], u[m]);
            out[i] += 2.0 * d[[i, m]] * f;
            if m != i {
                out[m] += 2.0 * d[[m, i]] * f;
            }
        }
    }
}

/// Burgers boundary flux: entropy-conservative flux against the ghost
/// value plus local Lax-Friedrichs dissipation, which keeps the weak
/// Dirichlet closure dissipative.
fn burgers_boundary_flux(u_left: f64, u_right: f64) -> f64 {
    let lambda = u_left.abs().max(u_right.abs());
    burgers_ec_flux(u_left, u_right) - 0.5 * lambda * (u_right - u_left)
}

/// Semi-discrete RHS of the viscous Burgers equation with
/// entropy-conservative flux differencing (or the standard volume in
/// `VolumeMode::Standard`), EC interface fluxes, BR1 viscous coupling
/// and weak `u = 0` boundary values when not periodic.
pub fn rhs_burgers(
    mesh: &Mesh1d,
    ops: &OperatorSet,
    setup: &BurgersSetup,
    scheme: &SchemeConfig,
    fields: &mut Fields1d,
) {
    let np = ops.n_nodes();
    let ne = mesh.n_elements();
    debug_assert_eq!(fields.u.len(), ne * np);
    let viscous = setup.viscosity > 0.0;
    let w0 = ops.weights()[0];
    let wn = ops.weights()[np - 1];

    if viscous {
        // entropy variable w = u, Dirichlet data w* = 0 at the ends
        br1_gradient_1d(mesh, ops, &fields.u, |_| 0.0, |_| 0.0, &mut fields.q);
        for g in 0..ne * np {
            fields.fv[g] = setup.viscosity * fields.q[g];
        }
    } else {
        fields.q.iter_mut().for_each(|v| *v = 0.0);
        fields.fv.iter_mut().for_each(|v| *v = 0.0);
    }

    let mut volume = vec![0.0; np];
    let mut scratch = vec![0.0; np];
    for k in 0..ne {
        let span = k * np..(k + 1) * np;
        match scheme.volume {
            VolumeMode::EntropyConservative => {
                burgers_flux_difference_volume(&fields.u[span.clone()], ops, &mut volume);
            }
            VolumeMode::Standard => {
                for i in 0..np {
                    scratch[i] = burgers_flux(fields.u[k * np + i]);
                }
                ops.apply_diff(&scratch, &mut volume);
            }
        }
        ops.apply_diff(&fields.fv[span.clone()], &mut scratch);
        for i in 0..np {
            fields.rhs[k * np + i] = -volume[i] + scratch[i];
        }
    }

    let n_faces = if mesh.periodic { ne } else { ne - 1 };
    for f in 0..n_faces {
        let left = f;
        let right = (f + 1) % ne;
        let gl = left * np + np - 1;
        let gr = right * np;
        let fstar = burgers_ec_flux(fields.u[gl], fields.u[gr]);
        let fvstar = 0.5 * (fields.fv[gl] + fields.fv[gr]);
        fields.rhs[gl] += (-(fstar - burgers_flux(fields.u[gl])) + (fvstar - fields.fv[gl])) / wn;
        fields.rhs[gr] += ((fstar - burgers_flux(fields.u[gr])) - (fvstar - fields.fv[gr])) / w0;
    }
    if !mesh.periodic {
        let g0 = 0;
        let fstar = burgers_boundary_flux(0.0, fields.u[g0]);
        fields.rhs[g0] += ((fstar - burgers_flux(fields.u[g0])) - 0.0) / w0;
        let gn = (ne - 1) * np + np - 1;
        let fstar = burgers_boundary_flux(fields.u[gn], 0.0);
        fields.rhs[gn] += (-(fstar - burgers_flux(fields.u[gn])) + 0.0) / wn;
    }

    for k in 0..ne {
        let inv_j = 2.0 / mesh.width(k);
        for i in 0..np {
            fields.rhs[k * np + i] *= inv_j;
        }
    }
}

/// Per-interior-face advective energy contribution of the linear
/// scheme, `F* [U] - a/2 [U^2]`, one entry per face in element order.
pub fn advective_face_energy(
    mesh: &Mesh1d,
    ops: &OperatorSet,
    a: f64,
    sigma: f64,
    u: &[f64],
) -> Vec<f64> {
    let np = ops.n_nodes();
    let ne = mesh.n_elements();
    let n_faces = if mesh.periodic { ne } else { ne - 1 };
    let mut out = Vec::with_capacity(n_faces);
    for f in 0..n_faces {
        let left = f;
        let right = (f + 1) % ne;
        let ul = u[left * np + np - 1];
        let ur = u[right * np];
        let fstar = linear_numerical_flux(a, ul, ur, sigma);
        out.push(fstar * (ur - ul) - 0.5 * a * (ur * ur - ul * ul));
    }
    out
}
