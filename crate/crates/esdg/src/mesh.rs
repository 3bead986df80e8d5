//! Conforming curvilinear hexahedral meshes: geometry sampled at LGL
//! nodes, curl-form metric terms satisfying the discrete metric
//! identities, and watertight face geometry with a fixed master/slave
//! orientation. Also holds the trivial 1D mesh used by the scalar
//! model problems.

mod builder;
mod io;
mod metrics;

pub use builder::{build_box_mesh, Warp};
pub use io::{read_mesh, write_mesh};
pub use metrics::{
    check_metric_identities, compute_metrics_cross_product, compute_metrics_curl_form,
    face_geometry, tensor_derivative, MetricData,
};

use crate::error::SolverError;
use crate::operators::OperatorSet;

/// One of the six local sides of the reference hexahedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    XiMinus,
    XiPlus,
    EtaMinus,
    EtaPlus,
    ZetaMinus,
    ZetaPlus,
}

pub const ALL_SIDES: [Side; 6] = [
    Side::XiMinus,
    Side::XiPlus,
    Side::EtaMinus,
    Side::EtaPlus,
    Side::ZetaMinus,
    Side::ZetaPlus,
];

impl Side {
    pub fn axis(self) -> usize {
        match self {
            Side::XiMinus | Side::XiPlus => 0,
            Side::EtaMinus | Side::EtaPlus => 1,
            Side::ZetaMinus | Side::ZetaPlus => 2,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, Side::XiPlus | Side::EtaPlus | Side::ZetaPlus)
    }

    /// Outward reference normal sign along the side axis.
    pub fn orientation_sign(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::XiMinus => 0,
            Side::XiPlus => 1,
            Side::EtaMinus => 2,
            Side::EtaPlus => 3,
            Side::ZetaMinus => 4,
            Side::ZetaPlus => 5,
        }
    }

    pub fn from_index(i: usize) -> Result<Self, SolverError> {
        ALL_SIDES
            .get(i)
            .copied()
            .ok_or_else(|| SolverError::MeshFormat(format!("side index {i} out of range 0..6")))
    }

    pub fn opposite(self) -> Self {
        match self {
            Side::XiMinus => Side::XiPlus,
            Side::XiPlus => Side::XiMinus,
            Side::EtaMinus => Side::EtaPlus,
            Side::EtaPlus => Side::EtaMinus,
            Side::ZetaMinus => Side::ZetaPlus,
            Side::ZetaPlus => Side::ZetaMinus,
        }
    }
}

/// Volume node `(i, j, k)` touched by face point `(p, q)` of a side.
/// The two tangential indices are kept in lexicographic order, so the
/// face quadrature weight at `(p, q)` is `w_p w_q`.
pub fn side_node(side: Side, p: usize, q: usize, degree: usize) -> (usize, usize, usize) {
    match side {
        Side::XiMinus => (0, p, q),
        Side::XiPlus => (degree, p, q),
        Side::EtaMinus => (p, 0, q),
        Side::EtaPlus => (p, degree, q),
        Side::ZetaMinus => (p, q, 0),
        Side::ZetaPlus => (p, q, degree),
    }
}

/// Map a master face point `(p, q)` to the slave side index pair for one
/// of the eight tensor-product face symmetries (bit 0: flip p, bit 1:
/// flip q, bit 2: transpose, applied in that order).
pub fn orient_face_point(code: u8, p: usize, q: usize, degree: usize) -> (usize, usize) {
    let (mut p, mut q) = (p, q);
    if code & 1 != 0 {
        p = degree - p;
    }
    if code & 2 != 0 {
        q = degree - q;
    }
    if code & 4 != 0 {
        std::mem::swap(&mut p, &mut q);
    }
    (p, q)
}

/// Whether a face couples two distinct interior sides or wraps around a
/// periodic direction. Both kinds couple identically; the flag is kept
/// for mesh interchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Periodic,
}

/// An oriented face shared by a master and a slave element side.
///
/// `normal` and `surf` hold the master-outward unit normal and the
/// surface element at the `(N+1)^2` face quadrature points, indexed in
/// the master side's `(p, q)` order. The slave's outward normal is the
/// negation, and its face points map onto the master's through
/// `orientation`.
#[derive(Debug, Clone)]
pub struct Face {
    pub master: usize,
    pub master_side: Side,
    pub slave: usize,
    pub slave_side: Side,
    pub orientation: u8,
    pub kind: FaceKind,
    pub normal: Vec<[f64; 3]>,
    pub surf: Vec<f64>,
}

/// Reference from an element to one of its faces.
#[derive(Debug, Clone, Copy)]
pub struct FaceLink {
    pub face: usize,
    pub is_master: bool,
}

/// Geometry and metric terms of a single element.
#[derive(Debug, Clone)]
pub struct Element {
    /// Mapped node coordinates, lexicographic with i fastest.
    pub geometry: Vec<[f64; 3]>,
    pub metrics: MetricData,
}

/// A conforming periodic hexahedral mesh.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub degree: usize,
    pub extent: [f64; 3],
    pub elements_per_axis: [usize; 3],
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
    /// Per element, the face link for each of its six sides in
    /// `Side::index` order.
    pub element_faces: Vec<[FaceLink; 6]>,
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Nodes per direction.
    pub fn n_per_dim(&self) -> usize {
        self.degree + 1
    }

    /// Nodes per element.
    pub fn nodes_per_element(&self) -> usize {
        let np = self.n_per_dim();
        np * np * np
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let np = self.n_per_dim();
        i + np * (j + np * k)
    }

    /// Total mapped volume, `sum omega J`.
    pub fn volume(&self, ops: &OperatorSet) -> f64 {
        let w = ops.weights();
        let np = self.n_per_dim();
        let mut total = 0.0;
        for element in &self.elements {
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        total +=
                            w[i] * w[j] * w[k] * element.metrics.jacobian[i + np * (j + np * k)];
                    }
                }
            }
        }
        total
    }

    /// Worst metric-identity residual over all elements.
    pub fn metric_identity_residual(&self, ops: &OperatorSet) -> f64 {
        self.elements
            .iter()
            .map(|e| check_metric_identities(&e.metrics, ops))
            .fold(0.0, f64::max)
    }

    /// Worst pointwise mismatch of `shat * n` computed from the master
    /// and the slave side of every face (after orientation mapping and
    /// the sign flip). Zero for a perfectly watertight mesh.
    pub fn watertightness(&self) -> Result<f64, SolverError> {
        let mut worst = 0.0f64;
        let np = self.n_per_dim();
        for face in &self.faces {
            let slave = &self.elements[face.slave];
            let (s_normal, s_surf) = face_geometry(&slave.metrics, face.slave_side, self.degree)?;
            for q in 0..np {
                for p in 0..np {
                    let fp = p + np * q;
                    let (sp, sq) = orient_face_point(face.orientation, p, q, self.degree);
                    let sfp = sp + np * sq;
                    for c in 0..3 {
                        let master_vec = face.surf[fp] * face.normal[fp][c];
                        let slave_vec = s_surf[sfp] * s_normal[sfp][c];
                        worst = worst.max((master_vec + slave_vec).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Face link for an element side.
    pub fn face_of(&self, element: usize, side: Side) -> FaceLink {
        self.element_faces[element][side.index()]
    }
}

/// A 1D interval mesh for the scalar model problems.
#[derive(Debug, Clone)]
pub struct Mesh1d {
    /// Element edge coordinates, ascending, `K + 1` entries.
    pub edges: Vec<f64>,
    pub periodic: bool,
}

impl Mesh1d {
    pub fn uniform(length: f64, n_elements: usize, periodic: bool) -> Result<Self, SolverError> {
        if n_elements == 0 || !(length > 0.0) {
            return Err(SolverError::Config(format!(
                "1D mesh needs positive length and at least one element, got L={length}, K={n_elements}"
            )));
        }
        let h = length / n_elements as f64;
        let edges = (0..=n_elements).map(|k| k as f64 * h).collect();
        Ok(Self { edges, periodic })
    }

    pub fn n_elements(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn width(&self, k: usize) -> f64 {
        self.edges[k + 1] - self.edges[k]
    }

    pub fn length(&self) -> f64 {
        *self.edges.last().unwrap() - self.edges[0]
    }

    /// Physical coordinate of reference point `xi` in element `k`.
    pub fn coord(&self, k: usize, xi: f64) -> f64 {
        self.edges[k] + 0.5 * (xi + 1.0) * self.width(k)
    }

    /// All node coordinates, element-major.
    pub fn node_coords(&self, ops: &OperatorSet) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_elements() * ops.n_nodes());
        for k in 0..self.n_elements() {
            for &xi in ops.nodes() {
                out.push(self.coord(k, xi));
            }
        }
        out
    }
}
