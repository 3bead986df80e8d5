//! Periodic box mesh factory with optional analytic warping.

use crate::error::SolverError;
use crate::mesh::{
    compute_metrics_curl_form, face_geometry, Element, Face, FaceKind, FaceLink, Mesh, Side,
};
use crate::operators::OperatorSet;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Analytic deformation applied to the box geometry before it is
/// sampled at the LGL nodes and treated purely polynomially.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warp {
    None,
    /// Periodic product-of-sines displacement; each coordinate is
    /// displaced by a full-period wave in the other two, so elements are
    /// genuinely curved while the box stays periodic.
    Sine {
        amplitude: f64,
    },
}

impl Warp {
    pub fn apply(&self, x: [f64; 3], extent: [f64; 3]) -> [f64; 3] {
        match *self {
            Warp::None => x,
            Warp::Sine { amplitude } => {
                let s = [
                    (TAU * x[0] / extent[0]).sin(),
                    (TAU * x[1] / extent[1]).sin(),
                    (TAU * x[2] / extent[2]).sin(),
                ];
                let mut out = x;
                for c in 0..3 {
                    let j = (c + 1) % 3;
                    let k = (c + 2) % 3;
                    out[c] += amplitude * extent[c] / TAU * s[j] * s[k];
                }
                out
            }
        }
    }
}

/// Build a conforming, fully periodic hexahedral mesh of the box
/// `[0, extent]` with `elements_per_axis` elements per direction and the
/// curl-form metric terms. The lower element id of each face pair is
/// the master; the positive side wins the tie on self-periodic faces.
pub fn build_box_mesh(
    extent: [f64; 3],
    elements_per_axis: [usize; 3],
    ops: &OperatorSet,
    warp: Warp,
) -> Result<Mesh, SolverError> {
    if extent.iter().any(|&l| !(l > 0.0)) {
        return Err(SolverError::Config(format!(
            "box extent must be positive, got {extent:?}"
        )));
    }
    if elements_per_axis.iter().any(|&n| n == 0) {
        return Err(SolverError::Config(
            "need at least one element per axis".into(),
        ));
    }
    if let Warp::Sine { amplitude } = warp {
        if !amplitude.is_finite() {
            return Err(SolverError::Config(format!(
                "warp amplitude must be finite, got {amplitude}"
            )));
        }
    }

    let degree = ops.degree();
    let np = ops.n_nodes();
    let [nx, ny, nz] = elements_per_axis;
    let h = [
        extent[0] / nx as f64,
        extent[1] / ny as f64,
        extent[2] / nz as f64,
    ];
    let element_id = |ex: usize, ey: usize, ez: usize| ex + nx * (ey + ny * ez);

    let mut elements = Vec::with_capacity(nx * ny * nz);
    for ez in 0..nz {
        for ey in 0..ny {
            for ex in 0..nx {
                let mut geometry = vec![[0.0; 3]; np * np * np];
                for k in 0..np {
                    for j in 0..np {
                        for i in 0..np {
                            let reference = [
                                ex as f64 + 0.5 * (ops.nodes()[i] + 1.0),
                                ey as f64 + 0.5 * (ops.nodes()[j] + 1.0),
                                ez as f64 + 0.5 * (ops.nodes()[k] + 1.0),
                            ];
                            let x = [
                                reference[0] * h[0],
                                reference[1] * h[1],
                                reference[2] * h[2],
                            ];
                            geometry[i + np * (j + np * k)] = warp.apply(x, extent);
                        }
                    }
                }
                let metrics = compute_metrics_curl_form(&geometry, ops).map_err(|e| match e {
                    SolverError::NonPositiveJacobian { node, value, .. } => {
                        SolverError::NonPositiveJacobian {
                            element: element_id(ex, ey, ez),
                            node,
                            value,
                        }
                    }
                    other => other,
                })?;
                elements.push(Element { geometry, metrics });
            }
        }
    }

    // One face per element and axis, linking to the +axis neighbor with
    // periodic wrap. Lower id is master.
    let mut faces = Vec::with_capacity(3 * elements.len());
    for ez in 0..nz {
        for ey in 0..ny {
            for ex in 0..nx {
                let here = element_id(ex, ey, ez);
                let neighbors = [
                    element_id((ex + 1) % nx, ey, ez),
                    element_id(ex, (ey + 1) % ny, ez),
                    element_id(ex, ey, (ez + 1) % nz),
                ];
                let wraps = [ex + 1 == nx, ey + 1 == ny, ez + 1 == nz];
                for axis in 0..3 {
                    let there = neighbors[axis];
                    let positive = Side::from_index(2 * axis + 1).unwrap();
                    let (master, master_side, slave, slave_side) = if here <= there {
                        (here, positive, there, positive.opposite())
                    } else {
                        (there, positive.opposite(), here, positive)
                    };
                    let kind = if wraps[axis] {
                        FaceKind::Periodic
                    } else {
                        FaceKind::Interior
                    };
                    let (normal, surf) =
                        face_geometry(&elements[master].metrics, master_side, degree).map_err(
                            |e| match e {
                                SolverError::DegenerateFace { side, point, .. } => {
                                    SolverError::DegenerateFace {
                                        element: master,
                                        side,
                                        point,
                                    }
                                }
                                other => other,
                            },
                        )?;
                    faces.push(Face {
                        master,
                        master_side,
                        slave,
                        slave_side,
                        orientation: 0,
                        kind,
                        normal,
                        surf,
                    });
                }
            }
        }
    }

    let element_faces = link_faces(elements.len(), &faces)?;
    let mesh = Mesh {
        degree,
        extent,
        elements_per_axis,
        elements,
        faces,
        element_faces,
    };

    let mismatch = mesh.watertightness()?;
    let scale = mesh
        .faces
        .iter()
        .flat_map(|f| f.surf.iter())
        .fold(0.0f64, |a, &s| a.max(s));
    if mismatch > 1e-10 * scale.max(1.0) {
        return Err(SolverError::NotWatertight { mismatch });
    }
    Ok(mesh)
}

/// Build the per-element side-to-face table, checking that every side is
/// covered exactly once.
pub(crate) fn link_faces(
    n_elements: usize,
    faces: &[Face],
) -> Result<Vec<[FaceLink; 6]>, SolverError> {
    let placeholder = FaceLink {
        face: usize::MAX,
        is_master: false,
    };
    let mut links = vec![[placeholder; 6]; n_elements];
    let mut set = |elem: usize, side: Side, link: FaceLink| -> Result<(), SolverError> {
        if elem >= n_elements {
            return Err(SolverError::MeshFormat(format!(
                "face references element {elem} out of {n_elements}"
            )));
        }
        let slot = &mut links[elem][side.index()];
        if slot.face != usize::MAX {
            return Err(SolverError::MeshFormat(format!(
                "element {elem} side {} linked to two faces",
                side.index()
            )));
        }
        *slot = link;
        Ok(())
    };
    for (id, face) in faces.iter().enumerate() {
        set(
            face.master,
            face.master_side,
            FaceLink {
                face: id,
                is_master: true,
            },
        )?;
        set(
            face.slave,
            face.slave_side,
            FaceLink {
                face: id,
                is_master: false,
            },
        )?;
    }
    for (elem, sides) in links.iter().enumerate() {
        for (s, link) in sides.iter().enumerate() {
            if link.face == usize::MAX {
                return Err(SolverError::MeshFormat(format!(
                    "element {elem} side {s} has no face"
                )));
            }
        }
    }
    Ok(links)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(n: usize) -> OperatorSet {
        OperatorSet::new(n).unwrap()
    }

    #[test]
    fn single_affine_element_metrics() {
        let extent = [TAU, TAU, TAU];
        let ops = ops(3);
        let mesh = build_box_mesh(extent, [1, 1, 1], &ops, Warp::None).unwrap();
        assert_eq!(mesh.n_elements(), 1);
        let el = &mesh.elements[0];
        let expected_j = extent[0] * extent[1] * extent[2] / 8.0;
        for node in 0..mesh.nodes_per_element() {
            assert!((el.metrics.jacobian[node] - expected_j).abs() < 1e-10 * expected_j);
            for l in 0..3 {
                for n in 0..3 {
                    let expected = if l == n {
                        // axis-aligned box: Ja^l is the scaled axis vector
                        expected_j / (0.5 * extent[l])
                    } else {
                        0.0
                    };
                    assert!(
                        (el.metrics.contravariant[node][l][n] - expected).abs()
                            < 1e-10 * expected_j,
                        "metric ({l},{n}) at node {node}"
                    );
                }
            }
        }
    }

    #[test]
    fn affine_mesh_identity_residual_is_zero() {
        let mesh = build_box_mesh([TAU; 3], [2, 2, 2], &ops(4), Warp::None).unwrap();
        assert!(mesh.metric_identity_residual(&ops(4)) < 1e-12);
    }

    #[test]
    fn curl_form_satisfies_identities_on_warped_mesh() {
        let ops = ops(4);
        let mesh =
            build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::Sine { amplitude: 0.1 }).unwrap();
        let residual = mesh.metric_identity_residual(&ops);
        let scale = mesh
            .elements
            .iter()
            .flat_map(|e| e.metrics.contravariant.iter())
            .flat_map(|m| m.iter().flat_map(|v| v.iter()))
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(
            residual <= 1e-12 * scale.max(1.0),
            "identity residual {residual} vs scale {scale}"
        );
    }

    #[test]
    fn cross_product_metrics_fail_identities_on_curved_elements() {
        let ops = ops(4);
        let mesh =
            build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::Sine { amplitude: 0.1 }).unwrap();
        let mut worst = 0.0f64;
        for el in &mesh.elements {
            let naive = crate::mesh::compute_metrics_cross_product(&el.geometry, &ops).unwrap();
            worst = worst.max(crate::mesh::check_metric_identities(&naive, &ops));
        }
        assert!(
            worst > 1e-8,
            "cross-product control case unexpectedly satisfies identities: {worst}"
        );
    }

    #[test]
    fn watertight_and_conforming_topology() {
        let ops = ops(4);
        let mesh = build_box_mesh(
            [TAU, 1.5 * TAU, TAU],
            [2, 3, 2],
            &ops,
            Warp::Sine { amplitude: 0.12 },
        )
        .unwrap();
        assert_eq!(mesh.faces.len(), 3 * mesh.n_elements());
        assert!(mesh.watertightness().unwrap() <= 1e-12 * TAU);
        // every element links six sides, each exactly once
        for elem in 0..mesh.n_elements() {
            for side in crate::mesh::ALL_SIDES {
                let link = mesh.face_of(elem, side);
                let face = &mesh.faces[link.face];
                if link.is_master {
                    assert_eq!(face.master, elem);
                    assert_eq!(face.master_side, side);
                } else {
                    assert_eq!(face.slave, elem);
                    assert_eq!(face.slave_side, side);
                }
            }
        }
        // master ids never exceed slave ids (deterministic rule)
        for face in &mesh.faces {
            assert!(face.master <= face.slave);
        }
    }

    #[test]
    fn unit_normals_on_cube_faces() {
        let ops = ops(2);
        let mesh = build_box_mesh([1.0; 3], [1, 1, 1], &ops, Warp::None).unwrap();
        for face in &mesh.faces {
            let axis = face.master_side.axis();
            let sign = face.master_side.orientation_sign();
            for (fp, n) in face.normal.iter().enumerate() {
                for c in 0..3 {
                    let expected = if c == axis { sign } else { 0.0 };
                    assert!((n[c] - expected).abs() < 1e-12);
                }
                // face area factor of the unit cube side is 1/4
                assert!((face.surf[fp] - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normals_unit_length_on_warped_mesh() {
        let ops = ops(3);
        let mesh =
            build_box_mesh([TAU; 3], [2, 2, 2], &ops, Warp::Sine { amplitude: 0.15 }).unwrap();
        for face in &mesh.faces {
            for n in &face.normal {
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                assert!((len - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn excessive_warp_is_rejected_with_location() {
        let ops = ops(3);
        let err =
            build_box_mesh([TAU; 3], [1, 1, 1], &ops, Warp::Sine { amplitude: 3.0 }).unwrap_err();
        assert!(matches!(err, SolverError::NonPositiveJacobian { .. }));
    }
}
