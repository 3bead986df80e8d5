//! Compressible Navier-Stokes state algebra: conservative and entropy
//! variables, advective/viscous fluxes and the entropy pair, plus the
//! scalar coefficients of the 1D model problems.
//!
//! All formulas are nondimensional with free-stream scaling; the 1/Re
//! factor on the viscous terms is applied by the DG operator, not here.

use std::ops::{Add, Mul, Sub};

use crate::error::SolverError;

/// Density floor below which a state is treated as invalid. Positivity
/// is diagnosed, never enforced.
pub const RHO_MIN: f64 = 1e-10;
/// Pressure floor, same role as [`RHO_MIN`].
pub const PRESSURE_MIN: f64 = 1e-10;

/// Conservative state `(rho, rho v1, rho v2, rho v3, rho E)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State(pub [f64; 5]);

/// Entropy variables `w = ds/du`, stored in the same component order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EntropyState(pub [f64; 5]);

/// Block vector of the three Cartesian flux components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockFlux(pub [State; 3]);

/// Gradient of the entropy variables, `grad_w[d][c] = d w_c / d x_d`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradW(pub [[f64; 5]; 3]);

/// Gas and nondimensionalization parameters. `reynolds` may be
/// `f64::INFINITY`, which disables the viscous path entirely.
#[derive(Debug, Clone, Copy)]
pub struct GasParams {
    pub gamma: f64,
    pub reynolds: f64,
    pub prandtl: f64,
    pub mach: f64,
    /// Constant dynamic viscosity in free-stream units.
    pub mu: f64,
}

impl Default for GasParams {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            reynolds: f64::INFINITY,
            prandtl: 0.72,
            mach: 0.1,
            mu: 1.0,
        }
    }
}

impl GasParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.gamma > 1.0
            && self.reynolds > 0.0
            && self.prandtl > 0.0
            && self.mach > 0.0
            && self.mu > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::Config(format!(
                "gas parameters must be positive (gamma > 1): {self:?}"
            )))
        }
    }

    pub fn viscous(&self) -> bool {
        self.reynolds.is_finite()
    }

    /// Heat conduction coefficient `lambda = mu / ((gamma-1) Pr M^2)`.
    pub fn heat_coefficient(&self) -> f64 {
        self.mu / ((self.gamma - 1.0) * self.prandtl * self.mach * self.mach)
    }
}

impl Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        let mut out = self.0;
        for (a, b) in out.iter_mut().zip(rhs.0) {
            *a += b;
        }
        State(out)
    }
}

impl Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        let mut out = self.0;
        for (a, b) in out.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        State(out)
    }
}

impl Mul<f64> for State {
    type Output = State;
    fn mul(self, s: f64) -> State {
        State(self.0.map(|v| v * s))
    }
}

impl State {
    pub fn new(rho: f64, momentum: [f64; 3], energy: f64) -> Self {
        State([rho, momentum[0], momentum[1], momentum[2], energy])
    }

    pub fn from_primitive(rho: f64, velocity: [f64; 3], pressure: f64, gas: &GasParams) -> Self {
        let ke = 0.5 * rho * (velocity[0].powi(2) + velocity[1].powi(2) + velocity[2].powi(2));
        State([
            rho,
            rho * velocity[0],
            rho * velocity[1],
            rho * velocity[2],
            pressure / (gas.gamma - 1.0) + ke,
        ])
    }

    pub fn rho(&self) -> f64 {
        self.0[0]
    }

    pub fn momentum(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn total_energy(&self) -> f64 {
        self.0[4]
    }

    pub fn velocity(&self) -> [f64; 3] {
        let inv = 1.0 / self.0[0];
        [self.0[1] * inv, self.0[2] * inv, self.0[3] * inv]
    }

    /// Check the positivity conditions required by the entropy-variable
    /// mapping.
    pub fn validate(&self, gas: &GasParams) -> Result<(), SolverError> {
        let p = pressure(*self, gas);
        if !(self.rho() > RHO_MIN) || !(p > PRESSURE_MIN) {
            return Err(SolverError::InvalidState {
                element: 0,
                node: 0,
                rho: self.rho(),
                pressure: p,
            });
        }
        Ok(())
    }

    pub fn sound_speed(&self, gas: &GasParams) -> f64 {
        (gas.gamma * pressure(*self, gas) / self.rho()).sqrt()
    }
}

impl EntropyState {
    pub fn as_array(&self) -> [f64; 5] {
        self.0
    }
}

/// `p = (gamma - 1)(rho E - |rho v|^2 / (2 rho))`.
pub fn pressure(u: State, gas: &GasParams) -> f64 {
    let m = u.momentum();
    let ke = 0.5 * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) / u.rho();
    (gas.gamma - 1.0) * (u.total_energy() - ke)
}

/// The three Cartesian advective flux components.
pub fn euler_flux(u: State, gas: &GasParams) -> BlockFlux {
    let p = pressure(u, gas);
    let v = u.velocity();
    let h_rho = u.total_energy() + p; // rho H
    let mut out = [State::default(); 3];
    for d in 0..3 {
        let mut f = [0.0; 5];
        f[0] = u.0[1 + d];
        for c in 0..3 {
            f[1 + c] = u.0[1 + d] * v[c];
        }
        f[1 + d] += p;
        f[4] = v[d] * h_rho;
        out[d] = State(f);
    }
    BlockFlux(out)
}

/// Physical entropy `sigma = ln p - gamma ln rho`.
fn physical_entropy(u: State, gas: &GasParams) -> f64 {
    pressure(u, gas).ln() - gas.gamma * u.rho().ln()
}

/// Entropy variables of a valid state (`rho > 0`, `p > 0`).
pub fn entropy_variables(u: State, gas: &GasParams) -> EntropyState {
    let p = pressure(u, gas);
    debug_assert!(u.rho() > 0.0 && p > 0.0);
    let v = u.velocity();
    let vsq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let sigma = physical_entropy(u, gas);
    let rho_over_p = u.rho() / p;
    EntropyState([
        (gas.gamma - sigma) / (gas.gamma - 1.0) - 0.5 * rho_over_p * vsq,
        rho_over_p * v[0],
        rho_over_p * v[1],
        rho_over_p * v[2],
        -rho_over_p,
    ])
}

/// Invert the entropy-variable map. Requires `w5 < 0`.
pub fn conservative_from_entropy(w: EntropyState, gas: &GasParams) -> Result<State, SolverError> {
    let w5 = w.0[4];
    if !(w5 < 0.0) {
        return Err(SolverError::InvalidEntropyState(w5));
    }
    let v = [-w.0[1] / w5, -w.0[2] / w5, -w.0[3] / w5];
    let vsq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    // w1 = (gamma - sigma)/(gamma - 1) + w5 |v|^2 / 2
    let sigma = gas.gamma - (gas.gamma - 1.0) * (w.0[0] - 0.5 * w5 * vsq);
    // sigma = ln p - gamma ln rho with rho = -w5 p
    let ln_p = -(sigma + gas.gamma * (-w5).ln()) / (gas.gamma - 1.0);
    let p = ln_p.exp();
    let rho = -w5 * p;
    Ok(State::from_primitive(rho, v, p, gas))
}

/// Entropy function `s = -rho sigma / (gamma - 1)` and its flux `s v`.
pub fn entropy_and_flux(u: State, gas: &GasParams) -> (f64, [f64; 3]) {
    let s = -u.rho() * physical_entropy(u, gas) / (gas.gamma - 1.0);
    let v = u.velocity();
    (s, [s * v[0], s * v[1], s * v[2]])
}

/// Velocity gradient recovered from the entropy-variable gradient:
/// `dv_c/dx_d = (p/rho) (dw_{1+c}/dx_d + v_c dw_5/dx_d)`.
pub fn velocity_gradient(u: State, grad_w: &GradW, gas: &GasParams) -> [[f64; 3]; 3] {
    let p_over_rho = pressure(u, gas) / u.rho();
    let v = u.velocity();
    let mut dv = [[0.0; 3]; 3]; // dv[d][c] = d v_c / d x_d
    for d in 0..3 {
        for c in 0..3 {
            dv[d][c] = p_over_rho * (grad_w.0[d][1 + c] + v[c] * grad_w.0[d][4]);
        }
    }
    dv
}

/// Viscous flux from the state and the entropy-variable gradients.
///
/// The primitive gradients are recovered by the chain rule (velocities
/// as above, `dT/dx_d = gamma M^2 (p/rho)^2 dw_5/dx_d`), then the
/// stress tensor with the -2/3 divergence term and the heat flux are
/// assembled. The 1/Re factor is left to the caller.
pub fn viscous_flux(u: State, grad_w: &GradW, gas: &GasParams) -> BlockFlux {
    let dv = velocity_gradient(u, grad_w, gas);
    let v = u.velocity();
    let p_over_rho = pressure(u, gas) / u.rho();
    let t_coeff = gas.gamma * gas.mach * gas.mach * p_over_rho * p_over_rho;
    let divergence = dv[0][0] + dv[1][1] + dv[2][2];
    let lambda = gas.heat_coefficient();

    let mut tau = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            tau[i][j] = gas.mu * (dv[i][j] + dv[j][i]);
        }
        tau[i][i] -= 2.0 / 3.0 * gas.mu * divergence;
    }

    let mut out = [State::default(); 3];
    for i in 0..3 {
        let mut f = [0.0; 5];
        let mut work = 0.0;
        for j in 0..3 {
            f[1 + j] = tau[i][j];
            work += v[j] * tau[i][j];
        }
        let dt_dxi = t_coeff * grad_w.0[i][4];
        f[4] = work + lambda * dt_dxi;
        out[i] = State(f);
    }
    BlockFlux(out)
}

/// Burgers advective flux `u^2 / 2`.
pub fn burgers_flux(u: f64) -> f64 {
    0.5 * u * u
}

/// Burgers entropy `s(u) = u^2 / 2`.
pub fn burgers_entropy(u: f64) -> f64 {
    0.5 * u * u
}

/// Burgers entropy flux `u^3 / 3`.
pub fn burgers_entropy_flux(u: f64) -> f64 {
    u * u * u / 3.0
}

/// Burgers entropy variable `w(u) = ds/du = u`.
pub fn burgers_entropy_variable(u: f64) -> f64 {
    u
}

/// Variable diffusivity of the 1D linear advection-diffusion problem.
#[derive(Debug, Clone, Copy)]
pub enum Viscosity1d {
    Constant(f64),
    /// `b(x) = offset + amplitude sin(x)`.
    Sine {
        offset: f64,
        amplitude: f64,
    },
}

impl Viscosity1d {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Viscosity1d::Constant(b) => b,
            Viscosity1d::Sine { offset, amplitude } => offset + amplitude * x.sin(),
        }
    }

    /// Sample at a set of points, rejecting nonpositive values.
    pub fn sample(&self, points: &[f64]) -> Result<Vec<f64>, SolverError> {
        points
            .iter()
            .map(|&x| {
                let b = self.eval(x);
                if b > 0.0 {
                    Ok(b)
                } else {
                    Err(SolverError::NonPositiveViscosity { x, value: b })
                }
            })
            .collect()
    }
}

/// Coefficients of the 1D linear advection-diffusion equation
/// `u_t + (a u)_x = (b(x) u_x)_x`, `a` constant and positive.
#[derive(Debug, Clone, Copy)]
pub struct AdvDiffCoeffs {
    pub advection: f64,
    pub diffusivity: Viscosity1d,
}

impl AdvDiffCoeffs {
    pub fn new(advection: f64, diffusivity: Viscosity1d) -> Result<Self, SolverError> {
        if !(advection > 0.0) {
            return Err(SolverError::Config(format!(
                "advection speed must be positive, got {advection}"
            )));
        }
        Ok(Self {
            advection,
            diffusivity,
        })
    }
}
