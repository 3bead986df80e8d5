//! Curl-form metric terms and face geometry.

use crate::error::SolverError;
use crate::mesh::{side_node, Side};
use crate::operators::OperatorSet;

/// Metric terms of one element: covariant basis vectors, the
/// volume-weighted contravariant vectors and the Jacobian determinant,
/// all collocated at the LGL nodes.
#[derive(Debug, Clone)]
pub struct MetricData {
    /// `covariant[node][i]` is `a_i = dX/dxi^i`.
    pub covariant: Vec<[[f64; 3]; 3]>,
    /// `contravariant[node][l]` is `J a^l`; `contravariant[node][l][n]`
    /// its n-th physical component.
    pub contravariant: Vec<[[f64; 3]; 3]>,
    /// Jacobian determinant `J` per node.
    pub jacobian: Vec<f64>,
}

/// Derivative of a nodal scalar field along one reference axis of the
/// `(N+1)^3` tensor-product grid (lexicographic, i fastest).
pub fn tensor_derivative(values: &[f64], ops: &OperatorSet, axis: usize, out: &mut [f64]) {
    let np = ops.n_nodes();
    debug_assert_eq!(values.len(), np * np * np);
    debug_assert_eq!(out.len(), values.len());
    let d = ops.diff();
    let idx = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    match axis {
        0 => {
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        let mut acc = 0.0;
                        for m in 0..np {
                            acc += d[[i, m]] * values[idx(m, j, k)];
                        }
                        out[idx(i, j, k)] = acc;
                    }
                }
            }
        }
        1 => {
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        let mut acc = 0.0;
                        for m in 0..np {
                            acc += d[[j, m]] * values[idx(i, m, k)];
                        }
                        out[idx(i, j, k)] = acc;
                    }
                }
            }
        }
        2 => {
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        let mut acc = 0.0;
                        for m in 0..np {
                            acc += d[[k, m]] * values[idx(i, j, m)];
                        }
                        out[idx(i, j, k)] = acc;
                    }
                }
            }
        }
        _ => unreachable!("axis out of range"),
    }
}

/// Element geometry translated to its centroid. The metric terms are
/// translation invariant, and working in local coordinates keeps the
/// curl-form roundoff proportional to the element size instead of the
/// domain size, which is what makes large periodic meshes watertight
/// to the stated tolerance.
fn local_geometry(geometry: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut centroid = [0.0; 3];
    for x in geometry {
        for c in 0..3 {
            centroid[c] += x[c];
        }
    }
    let inv = 1.0 / geometry.len() as f64;
    for c in centroid.iter_mut() {
        *c *= inv;
    }
    geometry
        .iter()
        .map(|x| [x[0] - centroid[0], x[1] - centroid[1], x[2] - centroid[2]])
        .collect()
}

fn covariant_basis(geometry: &[[f64; 3]], ops: &OperatorSet) -> Vec<[[f64; 3]; 3]> {
    let n_nodes = geometry.len();
    let mut covariant = vec![[[0.0; 3]; 3]; n_nodes];
    let mut component = vec![0.0; n_nodes];
    let mut derivative = vec![0.0; n_nodes];
    for c in 0..3 {
        for (node, x) in geometry.iter().enumerate() {
            component[node] = x[c];
        }
        for axis in 0..3 {
            tensor_derivative(&component, ops, axis, &mut derivative);
            for node in 0..n_nodes {
                covariant[node][axis][c] = derivative[node];
            }
        }
    }
    covariant
}

fn jacobian_from_covariant(covariant: &[[[f64; 3]; 3]]) -> Vec<f64> {
    covariant
        .iter()
        .map(|a| {
            let cross = [
                a[1][1] * a[2][2] - a[1][2] * a[2][1],
                a[1][2] * a[2][0] - a[1][0] * a[2][2],
                a[1][0] * a[2][1] - a[1][1] * a[2][0],
            ];
            a[0][0] * cross[0] + a[0][1] * cross[1] + a[0][2] * cross[2]
        })
        .collect()
}

/// Metric terms in the curl form
/// `Ja^i_n = -xi^i . curl( I^N(X_l grad X_m) )`, `(n, m, l)` cyclic,
/// which satisfies the discrete metric identities on curved elements.
pub fn compute_metrics_curl_form(
    geometry: &[[f64; 3]],
    ops: &OperatorSet,
) -> Result<MetricData, SolverError> {
    let n_nodes = geometry.len();
    let local = local_geometry(geometry);
    let covariant = covariant_basis(&local, ops);
    let jacobian = jacobian_from_covariant(&covariant);
    let mut contravariant = vec![[[0.0; 3]; 3]; n_nodes];

    let mut g = [vec![0.0; n_nodes], vec![0.0; n_nodes], vec![0.0; n_nodes]];
    let mut dg = vec![[[0.0; 3]; 3]; n_nodes]; // dg[node][e][d] = d G_e / d xi^d
    let mut scratch = vec![0.0; n_nodes];
    for n in 0..3 {
        let m = (n + 1) % 3;
        let l = (n + 2) % 3;
        for node in 0..n_nodes {
            for e in 0..3 {
                g[e][node] = local[node][l] * covariant[node][e][m];
            }
        }
        for e in 0..3 {
            for d in 0..3 {
                if d == e {
                    continue;
                }
                tensor_derivative(&g[e], ops, d, &mut scratch);
                for node in 0..n_nodes {
                    dg[node][e][d] = scratch[node];
                }
            }
        }
        for node in 0..n_nodes {
            for i in 0..3 {
                let j = (i + 1) % 3;
                let k = (i + 2) % 3;
                contravariant[node][i][n] = -(dg[node][k][j] - dg[node][j][k]);
            }
        }
    }

    for (node, &j) in jacobian.iter().enumerate() {
        if !(j > 0.0) {
            return Err(SolverError::NonPositiveJacobian {
                element: 0,
                node,
                value: j,
            });
        }
    }
    Ok(MetricData {
        covariant,
        contravariant,
        jacobian,
    })
}

/// Naive metric terms `Ja^i = a_j x a_k` sampled nodally. On curved
/// elements these violate the discrete metric identities; kept as the
/// control case demonstrating why the curl form is required.
pub fn compute_metrics_cross_product(
    geometry: &[[f64; 3]],
    ops: &OperatorSet,
) -> Result<MetricData, SolverError> {
    let n_nodes = geometry.len();
    let local = local_geometry(geometry);
    let covariant = covariant_basis(&local, ops);
    let jacobian = jacobian_from_covariant(&covariant);
    let mut contravariant = vec![[[0.0; 3]; 3]; n_nodes];
    for node in 0..n_nodes {
        let a = &covariant[node];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            contravariant[node][i] = [
                a[j][1] * a[k][2] - a[j][2] * a[k][1],
                a[j][2] * a[k][0] - a[j][0] * a[k][2],
                a[j][0] * a[k][1] - a[j][1] * a[k][0],
            ];
        }
    }
    for (node, &j) in jacobian.iter().enumerate() {
        if !(j > 0.0) {
            return Err(SolverError::NonPositiveJacobian {
                element: 0,
                node,
                value: j,
            });
        }
    }
    Ok(MetricData {
        covariant,
        contravariant,
        jacobian,
    })
}

/// Max residual of the discrete metric identities
/// `sum_l d(I^N(Ja^l_n))/dxi^l` over all nodes and physical directions.
pub fn check_metric_identities(metrics: &MetricData, ops: &OperatorSet) -> f64 {
    let n_nodes = metrics.contravariant.len();
    let mut component = vec![0.0; n_nodes];
    let mut derivative = vec![0.0; n_nodes];
    let mut residual = vec![0.0; n_nodes];
    let mut worst = 0.0f64;
    for n in 0..3 {
        residual.iter_mut().for_each(|r| *r = 0.0);
        for l in 0..3 {
            for node in 0..n_nodes {
                component[node] = metrics.contravariant[node][l][n];
            }
            tensor_derivative(&component, ops, l, &mut derivative);
            for node in 0..n_nodes {
                residual[node] += derivative[node];
            }
        }
        for &r in &residual {
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Outward unit normal and surface element at the `(N+1)^2` quadrature
/// points of an element side, from `shat n = sum_l Ja^l nhat^l`.
pub fn face_geometry(
    metrics: &MetricData,
    side: Side,
    degree: usize,
) -> Result<(Vec<[f64; 3]>, Vec<f64>), SolverError> {
    let np = degree + 1;
    let sign = side.orientation_sign();
    let axis = side.axis();
    let mut normal = vec![[0.0; 3]; np * np];
    let mut surf = vec![0.0; np * np];
    for q in 0..np {
        for p in 0..np {
            let (i, j, k) = side_node(side, p, q, degree);
            let node = i + np * (j + np * k);
            let v = metrics.contravariant[node][axis];
            let scaled = [sign * v[0], sign * v[1], sign * v[2]];
            let s = (scaled[0] * scaled[0] + scaled[1] * scaled[1] + scaled[2] * scaled[2]).sqrt();
            if !(s > 0.0) {
                return Err(SolverError::DegenerateFace {
                    element: 0,
                    side: side.index(),
                    point: p + np * q,
                });
            }
            let fp = p + np * q;
            normal[fp] = [scaled[0] / s, scaled[1] / s, scaled[2] / s];
            surf[fp] = s;
        }
    }
    Ok((normal, surf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_face_is_reported() {
        let ops = OperatorSet::new(2).unwrap();
        let n_nodes = 27;
        let metrics = MetricData {
            covariant: vec![[[0.0; 3]; 3]; n_nodes],
            contravariant: vec![[[0.0; 3]; 3]; n_nodes],
            jacobian: vec![1.0; n_nodes],
        };
        let err = face_geometry(&metrics, Side::XiPlus, ops.degree()).unwrap_err();
        assert!(matches!(err, SolverError::DegenerateFace { .. }));
    }

    #[test]
    fn tensor_derivative_is_exact_per_axis() {
        let ops = OperatorSet::new(3).unwrap();
        let np = ops.n_nodes();
        let mut values = vec![0.0; np * np * np];
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let (x, y, z) = (ops.nodes()[i], ops.nodes()[j], ops.nodes()[k]);
                    values[i + np * (j + np * k)] = x * x * y + z * y * y - 2.0 * z;
                }
            }
        }
        let mut out = vec![0.0; values.len()];
        for axis in 0..3 {
            tensor_derivative(&values, &ops, axis, &mut out);
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        let (x, y, z) = (ops.nodes()[i], ops.nodes()[j], ops.nodes()[k]);
                        let exact = match axis {
                            0 => 2.0 * x * y,
                            1 => x * x + 2.0 * z * y,
                            _ => y * y - 2.0,
                        };
                        let got = out[i + np * (j + np * k)];
                        assert!(
                            (got - exact).abs() < 1e-12,
                            "axis {axis} node ({i},{j},{k}): {got} vs {exact}"
                        );
                    }
                }
            }
        }
    }
}
