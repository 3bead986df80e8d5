//! Legendre-Gauss-Lobatto quadrature and the collocation derivative,
//! SBP and boundary matrices for one polynomial degree.

use ndarray::Array2;

use crate::error::SolverError;

/// Degree beyond which the SBP invariants are no longer CI-enforced.
/// Construction above this is allowed but not covered by the test sweep.
pub const MAX_VERIFIED_DEGREE: usize = 32;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Quadrature nodes/weights and the derivative, SBP and boundary
/// matrices for a single polynomial degree. Immutable after
/// construction, so it can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    diff: Array2<f64>,
    sbp: Array2<f64>,
    boundary: Array2<f64>,
}

impl OperatorSet {
    pub fn new(degree: usize) -> Result<Self, SolverError> {
        let (nodes, weights) = lgl_rule(degree)?;
        let diff = diff_matrix(&nodes)?;
        let (sbp, boundary) = sbp_matrices(&diff, &weights);
        Ok(Self {
            degree,
            nodes,
            weights,
            diff,
            sbp,
            boundary,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of nodes per direction, `N + 1`.
    pub fn n_nodes(&self) -> usize {
        self.degree + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Collocation derivative matrix `D`.
    pub fn diff(&self) -> &Array2<f64> {
        &self.diff
    }

    /// SBP matrix `Q = diag(w) D`.
    pub fn sbp(&self) -> &Array2<f64> {
        &self.sbp
    }

    /// Boundary evaluation matrix `B = diag(-1, 0, ..., 0, 1)`.
    pub fn boundary(&self) -> &Array2<f64> {
        &self.boundary
    }

    /// Derivative of the nodal vector `values` in place of a matrix-vector
    /// product with `D`; `out` must have the same length.
    pub fn apply_diff(&self, values: &[f64], out: &mut [f64]) {
        let np = self.n_nodes();
        debug_assert_eq!(values.len(), np);
        debug_assert_eq!(out.len(), np);
        for i in 0..np {
            let mut acc = 0.0;
            for m in 0..np {
                acc += self.diff[[i, m]] * values[m];
            }
            out[i] = acc;
        }
    }

    /// Plain-text dump of the tables (row-major, 17 significant digits)
    /// for cross-language diffing.
    pub fn dump_tables(&self) -> String {
        let mut out = String::new();
        let fmt_row = |row: &[f64]| {
            row.iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&format!("degree {}\n", self.degree));
        out.push_str("nodes\n");
        out.push_str(&fmt_row(&self.nodes));
        out.push_str("\nweights\n");
        out.push_str(&fmt_row(&self.weights));
        for (name, mat) in [("D", &self.diff), ("Q", &self.sbp), ("B", &self.boundary)] {
            out.push_str(&format!("\n{name}\n"));
            for i in 0..self.n_nodes() {
                let row: Vec<f64> = (0..self.n_nodes()).map(|j| mat[[i, j]]).collect();
                out.push_str(&fmt_row(&row));
                out.push('\n');
            }
        }
        out
    }
}

/// Evaluate the Legendre polynomial `P_n` and its derivative at `x` by
/// the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    let mut dp_prev = 0.0;
    let mut dp = 1.0;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        let dp_next = dp_prev + (2.0 * kf - 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

/// `q(x) = P_{N+1}(x) - P_{N-1}(x)` shares its interior roots with
/// `(1 - x^2) P_N'(x)`, and `q'(x) = (2N + 1) P_N(x)`.
fn lgl_objective(n: usize, x: f64) -> (f64, f64) {
    let (p_hi, _) = legendre(n + 1, x);
    let (p_lo, _) = legendre(n - 1, x);
    let (p_n, _) = legendre(n, x);
    (p_hi - p_lo, (2 * n + 1) as f64 * p_n)
}

/// Legendre-Gauss-Lobatto rule of degree `n`: nodes are the roots of
/// `(1 - x^2) P_n'(x)`, weights `w_i = 2 / (n (n+1) P_n(x_i)^2)`.
///
/// Interior roots come from Newton iteration started at the
/// Chebyshev-Gauss-Lobatto points, with a bisection fallback when the
/// iteration leaves its bracket. Nodes and weights are mirrored about
/// the origin so the symmetry `x_i = -x_{n-i}`, `w_i = w_{n-i}` holds
/// exactly.
pub fn lgl_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    if n == 0 {
        return Err(SolverError::InvalidDegree(0));
    }
    let np = n + 1;
    let mut nodes = vec![0.0; np];
    let mut weights = vec![0.0; np];
    nodes[0] = -1.0;
    nodes[n] = 1.0;

    // Chebyshev-Gauss-Lobatto initial guesses, left half only; the right
    // half is the mirror image.
    let cgl = |j: usize| -(std::f64::consts::PI * j as f64 / n as f64).cos();
    for j in 1..=n / 2 {
        let x = if 2 * j == n {
            0.0
        } else {
            let lo = 0.5 * (cgl(j - 1) + cgl(j));
            let hi = 0.5 * (cgl(j) + cgl(j + 1));
            newton_with_bisection(n, cgl(j), lo, hi).ok_or(SolverError::RootSolveFailed {
                degree: n,
                index: j,
            })?
        };
        nodes[j] = x;
        nodes[n - j] = -x;
    }

    let scale = 2.0 / (n as f64 * (n + 1) as f64);
    for j in 0..=n / 2 {
        let (p_n, _) = legendre(n, nodes[j]);
        let w = scale / (p_n * p_n);
        weights[j] = w;
        weights[n - j] = w;
    }
    Ok((nodes, weights))
}

fn newton_with_bisection(n: usize, guess: f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut x = guess;
    for _ in 0..NEWTON_MAX_ITER {
        let (q, dq) = lgl_objective(n, x);
        if dq == 0.0 {
            break;
        }
        let step = q / dq;
        x -= step;
        if step.abs() <= NEWTON_TOL {
            return Some(x);
        }
        if !(lo..=hi).contains(&x) {
            break;
        }
    }
    // Bisection fallback on the Chebyshev bracket.
    let (mut q_lo, _) = lgl_objective(n, lo);
    let (q_hi, _) = lgl_objective(n, hi);
    if q_lo == 0.0 {
        return Some(lo);
    }
    if q_hi == 0.0 {
        return Some(hi);
    }
    if q_lo.signum() == q_hi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (q_mid, _) = lgl_objective(n, mid);
        if q_mid == 0.0 || 0.5 * (hi - lo) <= NEWTON_TOL {
            return Some(mid);
        }
        if q_mid.signum() == q_lo.signum() {
            lo = mid;
            q_lo = q_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Collocation derivative matrix `D_ij = l_j'(x_i)` through barycentric
/// Lagrange differentiation with the negative-sum trick on the diagonal.
pub fn diff_matrix(nodes: &[f64]) -> Result<Array2<f64>, SolverError> {
    let np = nodes.len();
    for i in 0..np {
        for j in i + 1..np {
            if nodes[i] == nodes[j] {
                return Err(SolverError::DuplicateNodes(i, j));
            }
        }
    }
    let mut bary = vec![1.0; np];
    for j in 0..np {
        for k in 0..np {
            if k != j {
                bary[j] *= nodes[j] - nodes[k];
            }
        }
        bary[j] = 1.0 / bary[j];
    }
    let mut d = Array2::zeros((np, np));
    for i in 0..np {
        let mut row_sum = 0.0;
        for j in 0..np {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[[i, j]] = v;
                row_sum += v;
            }
        }
        d[[i, i]] = -row_sum;
    }
    Ok(d)
}

/// `Q = diag(w) D` and the boundary matrix `B`; together they satisfy
/// `Q + Q^T = B`.
pub fn sbp_matrices(diff: &Array2<f64>, weights: &[f64]) -> (Array2<f64>, Array2<f64>) {
    let np = weights.len();
    let mut q = Array2::zeros((np, np));
    for i in 0..np {
        for j in 0..np {
            q[[i, j]] = weights[i] * diff[[i, j]];
        }
    }
    let mut b = Array2::zeros((np, np));
    b[[0, 0]] = -1.0;
    b[[np - 1, np - 1]] = 1.0;
    (q, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(nodes: &[f64], weights: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        nodes
            .iter()
            .zip(weights)
            .map(|(&x, &w)| w * f(x))
            .sum::<f64>()
    }

    #[test]
    fn degree_zero_rejected() {
        assert!(matches!(lgl_rule(0), Err(SolverError::InvalidDegree(0))));
    }

    #[test]
    fn n1_rule_is_trapezoidal_endpoints() {
        let (nodes, weights) = lgl_rule(1).unwrap();
        assert_eq!(nodes, vec![-1.0, 1.0]);
        assert_eq!(weights, vec![1.0, 1.0]);
    }

    #[test]
    fn n2_rule_matches_closed_form() {
        // Root-find oracle: the single interior root of (1-x^2)P_2'(x)
        // is x = 0; weights follow from the closed form.
        let (nodes, weights) = lgl_rule(2).unwrap();
        assert!((nodes[0] + 1.0).abs() < 1e-15);
        assert!(nodes[1].abs() < 1e-15);
        assert!((nodes[2] - 1.0).abs() < 1e-15);
        assert!((weights[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((weights[1] - 4.0 / 3.0).abs() < 1e-15);
        assert!((weights[2] - 1.0 / 3.0).abs() < 1e-15);
        // and reproduces the moment integral of x^2 on [-1, 1]
        assert!((quad(&nodes, &weights, |x| x * x) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn n4_nodes_match_closed_form() {
        let (nodes, _) = lgl_rule(4).unwrap();
        let inner = (3.0f64 / 7.0).sqrt();
        assert!((nodes[1] + inner).abs() < 1e-14);
        assert!((nodes[3] - inner).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_two_and_quadrature_precision() {
        for n in 1..=MAX_VERIFIED_DEGREE {
            let (nodes, weights) = lgl_rule(n).unwrap();
            let total: f64 = weights.iter().sum();
            assert!(
                (total - 2.0).abs() < 1e-13,
                "sum of weights off at N={n}: {total}"
            );
            assert!(weights.iter().all(|&w| w > 0.0));
            // exactness up to degree 2N-1: check the even monomial of
            // highest exact degree and the vanishing odd one
            let k = 2 * n - 2;
            let exact = 2.0 / (k as f64 + 1.0);
            let approx = quad(&nodes, &weights, |x| x.powi(k as i32));
            assert!(
                (approx - exact).abs() < 1e-12 * exact.abs().max(1.0),
                "even moment {k} wrong at N={n}"
            );
            let odd = quad(&nodes, &weights, |x| x.powi((2 * n - 1) as i32));
            assert!(odd.abs() < 1e-13, "odd moment not zero at N={n}: {odd}");
        }
    }

    #[test]
    fn node_and_weight_symmetry() {
        for n in 1..=MAX_VERIFIED_DEGREE {
            let (nodes, weights) = lgl_rule(n).unwrap();
            for i in 0..=n {
                assert_eq!(nodes[i], -nodes[n - i], "node asymmetry at N={n}");
                assert_eq!(weights[i], weights[n - i], "weight asymmetry at N={n}");
            }
            assert_eq!(nodes[0], -1.0);
            assert_eq!(nodes[n], 1.0);
            for i in 0..n {
                assert!(nodes[i] < nodes[i + 1]);
            }
        }
    }

    #[test]
    fn n1_diff_matrix_matches_hand_derivative() {
        // l0 = (1-x)/2, l1 = (1+x)/2, so every row of D is [-1/2, 1/2].
        let d = diff_matrix(&[-1.0, 1.0]).unwrap();
        for i in 0..2 {
            assert!((d[[i, 0]] + 0.5).abs() < 1e-15);
            assert!((d[[i, 1]] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn diff_matrix_rejects_duplicates() {
        assert!(matches!(
            diff_matrix(&[-1.0, 0.5, 0.5, 1.0]),
            Err(SolverError::DuplicateNodes(1, 2))
        ));
    }

    #[test]
    fn diff_matrix_exact_on_polynomials() {
        for n in 1..=16 {
            let ops = OperatorSet::new(n).unwrap();
            let np = n + 1;
            // derivative of a constant vanishes (rows sum to zero)
            let ones = vec![1.0; np];
            let mut out = vec![0.0; np];
            ops.apply_diff(&ones, &mut out);
            assert!(out.iter().all(|v| v.abs() < 1e-13), "row sums at N={n}");
            // derivative of x^N equals N x^(N-1) at the nodes
            let xn: Vec<f64> = ops.nodes().iter().map(|x| x.powi(n as i32)).collect();
            ops.apply_diff(&xn, &mut out);
            for (i, &x) in ops.nodes().iter().enumerate() {
                let exact = n as f64 * x.powi(n as i32 - 1);
                assert!(
                    (out[i] - exact).abs() < 1e-12 * exact.abs().max(1.0),
                    "monomial derivative off at N={n}, node {i}"
                );
            }
        }
    }

    #[test]
    fn n1_sbp_matrices_match_hand_computation() {
        let ops = OperatorSet::new(1).unwrap();
        let q = ops.sbp();
        assert!((q[[0, 0]] + 0.5).abs() < 1e-15);
        assert!((q[[0, 1]] - 0.5).abs() < 1e-15);
        assert!((q[[1, 0]] + 0.5).abs() < 1e-15);
        assert!((q[[1, 1]] - 0.5).abs() < 1e-15);
        // Q + Q^T = diag(-1, 1)
        assert!((q[[0, 0]] + q[[0, 0]] + 1.0).abs() < 1e-15);
        assert!((q[[1, 1]] + q[[1, 1]] - 1.0).abs() < 1e-15);
        assert!((q[[0, 1]] + q[[1, 0]]).abs() < 1e-15);
    }

    #[test]
    fn sbp_identity_up_to_max_degree() {
        for n in 1..=MAX_VERIFIED_DEGREE {
            let ops = OperatorSet::new(n).unwrap();
            let (q, b) = (ops.sbp(), ops.boundary());
            let mut worst = 0.0f64;
            for i in 0..=n {
                for j in 0..=n {
                    worst = worst.max((q[[i, j]] + q[[j, i]] - b[[i, j]]).abs());
                }
            }
            assert!(worst <= 1e-13, "SBP identity residual {worst} at N={n}");
        }
    }

    #[test]
    fn q_annihilates_constants_and_b_has_two_entries() {
        for n in [1, 3, 7, 12] {
            let ops = OperatorSet::new(n).unwrap();
            for i in 0..=n {
                let row: f64 = (0..=n).map(|m| ops.sbp()[[i, m]]).sum();
                assert!(row.abs() < 1e-13);
            }
            let nonzero = ops.boundary().iter().filter(|v| v.abs() > 0.0).count();
            assert_eq!(nonzero, 2);
        }
    }

    #[test]
    fn discrete_integration_by_parts_random_polynomials() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=12 {
            let ops = OperatorSet::new(n).unwrap();
            let np = n + 1;
            for _ in 0..20 {
                let u: Vec<f64> = (0..np).map(|_| rng.random_range(-1.0..1.0)).collect();
                let v: Vec<f64> = (0..np).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mut du = vec![0.0; np];
                let mut dv = vec![0.0; np];
                ops.apply_diff(&u, &mut du);
                ops.apply_diff(&v, &mut dv);
                let w = ops.weights();
                let lhs: f64 = (0..np).map(|i| w[i] * u[i] * dv[i]).sum();
                let rhs_vol: f64 = (0..np).map(|i| w[i] * du[i] * v[i]).sum();
                let boundary = u[np - 1] * v[np - 1] - u[0] * v[0];
                let scale = lhs.abs().max(rhs_vol.abs()).max(1.0);
                assert!(
                    (lhs - (boundary - rhs_vol)).abs() <= 1e-12 * scale,
                    "integration by parts residual at N={n}"
                );
            }
        }
    }

    #[test]
    fn dump_tables_has_full_precision() {
        let ops = OperatorSet::new(3).unwrap();
        let dump = ops.dump_tables();
        assert!(dump.starts_with("degree 3"));
        for section in ["nodes", "weights", "D", "Q", "B"] {
            assert!(dump.contains(section));
        }
        // 17 significant digits survive a parse round-trip
        let reparsed: f64 = dump
            .lines()
            .nth(2)
            .unwrap()
            .split_whitespace()
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(reparsed, ops.nodes()[1]);
    }
}
