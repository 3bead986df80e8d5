//! Explicit low-storage Runge-Kutta advancement and CFL-based step
//! estimates.

use crate::error::SolverError;
use crate::mesh::{Mesh, Mesh1d};
use crate::operators::OperatorSet;
use crate::physics::{GasParams, State};

/// Anything that can live in a Runge-Kutta register.
pub trait Register: Copy + Default + Send + Sync {
    fn scale(&mut self, c: f64);
    fn scaled_add(&mut self, c: f64, other: &Self);
}

impl Register for f64 {
    fn scale(&mut self, c: f64) {
        *self *= c;
    }
    fn scaled_add(&mut self, c: f64, other: &Self) {
        *self += c * other;
    }
}

impl Register for State {
    fn scale(&mut self, c: f64) {
        for v in self.0.iter_mut() {
            *v *= c;
        }
    }
    fn scaled_add(&mut self, c: f64, other: &Self) {
        for (v, o) in self.0.iter_mut().zip(other.0) {
            *v += c * o;
        }
    }
}

/// Named low-storage Runge-Kutta coefficient set (2N-register form).
#[derive(Debug, Clone)]
pub struct RkScheme {
    pub name: &'static str,
    pub order: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl RkScheme {
    /// Carpenter-Kennedy five-stage fourth-order low-storage scheme,
    /// the community default for DGSEM.
    pub fn lserk54() -> Self {
        Self {
            name: "lserk54",
            order: 4,
            a: vec![
                0.0,
                -567301805773.0 / 1357537059087.0,
                -2404267990393.0 / 2016746695238.0,
                -3550918686646.0 / 2091501179385.0,
                -1275806237668.0 / 842570457699.0,
            ],
            b: vec![
                1432997174477.0 / 9575080441755.0,
                5161836677717.0 / 13612068292357.0,
                1720146321549.0 / 2090206949498.0,
                3134564353537.0 / 4481467310338.0,
                2277821191437.0 / 14882151754819.0,
            ],
        }
    }

    /// Williamson three-stage third-order low-storage scheme.
    pub fn lserk33() -> Self {
        Self {
            name: "lserk33",
            order: 3,
            a: vec![0.0, -5.0 / 9.0, -153.0 / 128.0],
            b: vec![1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0],
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "lserk54" => Some(Self::lserk54()),
            "lserk33" => Some(Self::lserk33()),
            _ => None,
        }
    }

    pub fn stages(&self) -> usize {
        self.a.len()
    }
}

/// Reusable registers for [`step`].
#[derive(Debug, Clone)]
pub struct StepWorkspace<X> {
    candidate: Vec<X>,
    register: Vec<X>,
    rhs: Vec<X>,
}

impl<X: Register> StepWorkspace<X> {
    pub fn new(len: usize) -> Self {
        Self {
            candidate: vec![X::default(); len],
            register: vec![X::default(); len],
            rhs: vec![X::default(); len],
        }
    }
}

/// Advance `u` by one low-storage RK step. The update runs on a
/// candidate copy and is committed only on success, so a failing RHS
/// (positivity abort) leaves `u` untouched.
pub fn step<X: Register, E>(
    scheme: &RkScheme,
    dt: f64,
    u: &mut [X],
    work: &mut StepWorkspace<X>,
    mut rhs: impl FnMut(&[X], &mut [X]) -> Result<(), E>,
) -> Result<(), E> {
    assert!(dt >= 0.0, "time step must be nonnegative");
    let n = u.len();
    assert_eq!(
        work.candidate.len(),
        n,
        "workspace sized for a different field"
    );
    work.candidate.copy_from_slice(u);
    work.register.iter_mut().for_each(|r| *r = X::default());
    for stage in 0..scheme.stages() {
        rhs(&work.candidate, &mut work.rhs)?;
        let (a, b) = (scheme.a[stage], scheme.b[stage]);
        for i in 0..n {
            work.register[i].scale(a);
            work.register[i].scaled_add(dt, &work.rhs[i]);
            work.candidate[i].scaled_add(b, &work.register[i]);
        }
    }
    u.copy_from_slice(&work.candidate);
    Ok(())
}

/// Advective and viscous CFL step estimate for the 3D solver:
/// `dt = CFL * min_nodes min( h / ((|v| + a) N^2), Re h^2 / (nu N^4) )`
/// with the local length `h` taken from the ratio of the Jacobian to
/// the metric-vector magnitudes and `nu` a conservative bound on the
/// momentum/heat diffusivities.
pub fn estimate_dt(
    mesh: &Mesh,
    ops: &OperatorSet,
    u: &[State],
    cfl: f64,
    gas: &GasParams,
) -> Result<f64, SolverError> {
    let n = ops.degree().max(1) as f64;
    let advective_scale = n * n;
    let viscous_scale = n * n * n * n;
    let mut dt = f64::INFINITY;
    let nodes = mesh.nodes_per_element();
    for (element, el) in mesh.elements.iter().enumerate() {
        for node in 0..nodes {
            let jac = el.metrics.jacobian[node];
            if !(jac > 0.0) {
                return Err(SolverError::ZeroMeasureElement(element));
            }
            let mut h = f64::INFINITY;
            for l in 0..3 {
                let m = el.metrics.contravariant[node][l];
                let mag = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
                if mag > 0.0 {
                    h = h.min(2.0 * jac / mag);
                }
            }
            if !h.is_finite() || h <= 0.0 {
                return Err(SolverError::ZeroMeasureElement(element));
            }
            let state = u[element * nodes + node];
            let v = state.velocity();
            let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() + state.sound_speed(gas);
            dt = dt.min(h / (speed * advective_scale));
            if gas.viscous() {
                let nu = gas.mu / state.rho() * (4.0 / 3.0f64).max(gas.gamma / gas.prandtl);
                dt = dt.min(gas.reynolds * h * h / (nu * viscous_scale));
            }
        }
    }
    Ok(cfl * dt)
}

/// 1D step estimate with wave speed `lambda` and diffusivity bound
/// `b_max` (zero for inviscid problems).
pub fn estimate_dt_1d(
    mesh: &Mesh1d,
    ops: &OperatorSet,
    lambda: f64,
    b_max: f64,
    cfl: f64,
) -> Result<f64, SolverError> {
    let n = ops.degree().max(1) as f64;
    let mut dt = f64::INFINITY;
    for k in 0..mesh.n_elements() {
        let h = mesh.width(k);
        if !(h > 0.0) {
            return Err(SolverError::ZeroMeasureElement(k));
        }
        if lambda > 0.0 {
            dt = dt.min(h / (lambda * n * n));
        }
        if b_max > 0.0 {
            dt = dt.min(h * h / (b_max * n * n * n * n));
        }
    }
    if !dt.is_finite() {
        return Err(SolverError::Config(
            "time step estimate needs a positive wave speed or diffusivity".into(),
        ));
    }
    Ok(cfl * dt)
}
