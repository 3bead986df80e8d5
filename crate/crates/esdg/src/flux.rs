//! Two-point numerical fluxes: the kinetic-energy-preserving and
//! entropy-conservative (KEPEC) Euler flux, its contravariant assembly
//! with averaged metric terms, matrix dissipation for the
//! entropy-stable variant, BR1 interface averages and the scalar
//! fluxes of the 1D model problems.

use crate::physics::{entropy_variables, pressure, EntropyState, GasParams, State};

/// Threshold on `u = ((zeta-1)/(zeta+1))^2` below which the series
/// branch of the logarithmic mean takes over. Both branches agree to
/// 1e-13 at the switch.
const LOG_MEAN_SERIES_THRESHOLD: f64 = 1e-4;

/// Numerically stable logarithmic mean `(aR - aL)/(ln aR - ln aL)`.
///
/// Arguments must be positive. Inputs are ordered before evaluation so
/// the result is exactly symmetric, which the flux-differencing volume
/// kernels rely on.
pub fn log_mean(a_left: f64, a_right: f64) -> f64 {
    debug_assert!(a_left > 0.0 && a_right > 0.0);
    let (lo, hi) = if a_left <= a_right {
        (a_left, a_right)
    } else {
        (a_right, a_left)
    };
    let zeta = lo / hi;
    let f = (zeta - 1.0) / (zeta + 1.0);
    let u = f * f;
    if u < LOG_MEAN_SERIES_THRESHOLD {
        let series = 1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0;
        0.5 * (lo + hi) / series
    } else {
        (hi - lo) / (hi / lo).ln()
    }
}

/// Arithmetic mean of two states, the BR1 interface flux.
pub fn br1_average_flux(left: State, right: State) -> State {
    (left + right) * 0.5
}

/// Arithmetic mean of two entropy-variable vectors, the BR1 interface
/// solution value.
pub fn br1_average_state(left: EntropyState, right: EntropyState) -> EntropyState {
    let mut out = [0.0; 5];
    for c in 0..5 {
        out[c] = 0.5 * (left.0[c] + right.0[c]);
    }
    EntropyState(out)
}

/// Shared two-point averages feeding the KEPEC flux and the matrix
/// dissipation.
#[derive(Debug, Clone, Copy)]
struct KepecMeans {
    rho_ln: f64,
    beta_ln: f64,
    v_avg: [f64; 3],
    p_avg: f64,
    /// `2(<v1>^2 + <v2>^2 + <v3>^2) - (<v1^2> + <v2^2> + <v3^2>)`
    vsq_bar: f64,
}

fn kepec_means(left: State, right: State, gas: &GasParams) -> KepecMeans {
    let p_l = pressure(left, gas);
    let p_r = pressure(right, gas);
    let beta_l = left.rho() / (2.0 * p_l);
    let beta_r = right.rho() / (2.0 * p_r);
    let v_l = left.velocity();
    let v_r = right.velocity();
    let mut v_avg = [0.0; 3];
    let mut vsq_bar = 0.0;
    for c in 0..3 {
        v_avg[c] = 0.5 * (v_l[c] + v_r[c]);
        vsq_bar += 2.0 * v_avg[c] * v_avg[c] - 0.5 * (v_l[c] * v_l[c] + v_r[c] * v_r[c]);
    }
    KepecMeans {
        rho_ln: log_mean(left.rho(), right.rho()),
        beta_ln: log_mean(beta_l, beta_r),
        v_avg,
        p_avg: 0.5 * (left.rho() + right.rho()) / (beta_l + beta_r),
        vsq_bar,
    }
}

fn kepec_from_means(m: &KepecMeans, dir: usize, gas: &GasParams) -> State {
    let p_ln = m.rho_ln / (2.0 * m.beta_ln);
    let mass = m.rho_ln * m.v_avg[dir];
    let mut f = [0.0; 5];
    f[0] = mass;
    for c in 0..3 {
        f[1 + c] = mass * m.v_avg[c];
    }
    f[1 + dir] += m.p_avg;
    f[4] =
        p_ln * m.v_avg[dir] / (gas.gamma - 1.0) + m.p_avg * m.v_avg[dir] + 0.5 * mass * m.vsq_bar;
    State(f)
}

/// Kinetic-energy-preserving, entropy-conservative two-point flux for
/// the Cartesian direction `dir` (0, 1 or 2). Symmetric in its state
/// arguments and consistent with the Euler flux.
pub fn kepec_flux(left: State, right: State, dir: usize, gas: &GasParams) -> State {
    let means = kepec_means(left, right, gas);
    kepec_from_means(&means, dir, gas)
}

/// Entropy-conservative flux contracted with a (two-point averaged)
/// metric vector: `sum_m ja_avg[m] F^ec_m`.
pub fn contravariant_ec_flux(
    left: State,
    right: State,
    ja_avg: [f64; 3],
    gas: &GasParams,
) -> State {
    let means = kepec_means(left, right, gas);
    let mut out = State::default();
    for m in 0..3 {
        if ja_avg[m] != 0.0 {
            out = out + kepec_from_means(&means, m, gas) * ja_avg[m];
        }
    }
    out
}

/// Deterministic orthonormal tangent pair for a unit normal: the
/// in-plane axis to cross against is picked from the largest-magnitude
/// normal component.
fn tangent_basis(normal: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut largest = 0;
    for c in 1..3 {
        if normal[c].abs() > normal[largest].abs() {
            largest = c;
        }
    }
    let helper_axis = (largest + 1) % 3;
    let mut e = [0.0; 3];
    e[helper_axis] = 1.0;
    // Gram-Schmidt of the helper axis against the normal
    let dot = e[0] * normal[0] + e[1] * normal[1] + e[2] * normal[2];
    let mut t1 = [
        e[0] - dot * normal[0],
        e[1] - dot * normal[1],
        e[2] - dot * normal[2],
    ];
    let norm = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    for c in 0..3 {
        t1[c] /= norm;
    }
    let t2 = [
        normal[1] * t1[2] - normal[2] * t1[1],
        normal[2] * t1[0] - normal[0] * t1[2],
        normal[0] * t1[1] - normal[1] * t1[0],
    ];
    (t1, t2)
}

fn rotate_state_to_frame(u: State, n: [f64; 3], t1: [f64; 3], t2: [f64; 3]) -> State {
    let m = u.momentum();
    State([
        u.rho(),
        m[0] * n[0] + m[1] * n[1] + m[2] * n[2],
        m[0] * t1[0] + m[1] * t1[1] + m[2] * t1[2],
        m[0] * t2[0] + m[1] * t2[1] + m[2] * t2[2],
        u.total_energy(),
    ])
}

/// Matrix-dissipation penalty of the entropy-stable flux,
/// `-1/2 shat R |Lambda| T R^T [w]`, with `[w] = w(right) - w(left)`.
///
/// The eigenvector matrix is written for the first Cartesian direction;
/// arbitrary face normals are handled by rotating velocity into the
/// `(n, t1, t2)` frame, applying the aligned dissipation and rotating
/// back, which keeps the entropy-production sign. The penalty vanishes
/// on stationary contacts.
pub fn es_dissipation(
    left: State,
    right: State,
    normal: [f64; 3],
    surf: f64,
    gas: &GasParams,
) -> State {
    let (t1, t2) = tangent_basis(normal);
    let ul = rotate_state_to_frame(left, normal, t1, t2);
    let ur = rotate_state_to_frame(right, normal, t1, t2);

    let m = kepec_means(ul, ur, gas);
    let a_bar = (gas.gamma * m.p_avg / m.rho_ln).sqrt();
    let h_bar = gas.gamma / (2.0 * m.beta_ln * (gas.gamma - 1.0)) + 0.5 * m.vsq_bar;
    let v = m.v_avg;

    // right eigenvector matrix for the normal direction
    let r = [
        [1.0, 1.0, 0.0, 0.0, 1.0],
        [v[0] - a_bar, v[0], 0.0, 0.0, v[0] + a_bar],
        [v[1], v[1], 1.0, 0.0, v[1]],
        [v[2], v[2], 0.0, 1.0, v[2]],
        [
            h_bar - v[0] * a_bar,
            0.5 * m.vsq_bar,
            v[1],
            v[2],
            h_bar + v[0] * a_bar,
        ],
    ];
    let lambda_abs = [
        (v[0] - a_bar).abs(),
        v[0].abs(),
        v[0].abs(),
        v[0].abs(),
        (v[0] + a_bar).abs(),
    ];
    let scaling = [
        m.rho_ln / (2.0 * gas.gamma),
        m.rho_ln * (gas.gamma - 1.0) / gas.gamma,
        m.p_avg,
        m.p_avg,
        m.rho_ln / (2.0 * gas.gamma),
    ];

    let w_l = entropy_variables(ul, gas);
    let w_r = entropy_variables(ur, gas);
    let mut dw = [0.0; 5];
    for c in 0..5 {
        dw[c] = w_r.0[c] - w_l.0[c];
    }
    // R^T [w], then scale by |Lambda| T, then back through R
    let mut rt_dw = [0.0; 5];
    for k in 0..5 {
        for c in 0..5 {
            rt_dw[k] += r[c][k] * dw[c];
        }
    }
    for (k, v) in rt_dw.iter_mut().enumerate() {
        *v *= lambda_abs[k] * scaling[k];
    }
    let mut pen = [0.0; 5];
    for c in 0..5 {
        for k in 0..5 {
            pen[c] += r[c][k] * rt_dw[k];
        }
    }
    let factor = -0.5 * surf;
    // rotate momentum back to Cartesian components
    State([
        factor * pen[0],
        factor * (pen[1] * normal[0] + pen[2] * t1[0] + pen[3] * t2[0]),
        factor * (pen[1] * normal[1] + pen[2] * t1[1] + pen[3] * t2[1]),
        factor * (pen[1] * normal[2] + pen[2] * t1[2] + pen[3] * t2[2]),
        factor * pen[4],
    ])
}

/// Entropy-conservative two-point Burgers flux `(uL^2 + uL uR + uR^2)/6`.
pub fn burgers_ec_flux(u_left: f64, u_right: f64) -> f64 {
    (u_left * u_left + u_left * u_right + u_right * u_right) / 6.0
}

/// Linear numerical flux `a <u> - sigma/2 |a| [u]`; `sigma = 1` is fully
/// upwind, `sigma = 0` central.
pub fn linear_numerical_flux(a: f64, u_left: f64, u_right: f64, sigma: f64) -> f64 {
    a * 0.5 * (u_left + u_right) - 0.5 * sigma * a.abs() * (u_right - u_left)
}
