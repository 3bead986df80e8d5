//! The box factory only emits identity face orientations, so this
//! exercises the orientation permutation machinery directly: re-pairing
//! a self-periodic cube face with a transposed orientation yields a
//! twisted but perfectly consistent topology, on which free-stream
//! preservation, conservation and entropy conservation must all still
//! hold exactly.

use esdg::dg::{rhs_nse, FieldsNse, NseWorkspace, SchemeConfig};
use esdg::diagnostics::{conserved_totals, entropy_rate_audit, total_entropy};
use esdg::mesh::{build_box_mesh, orient_face_point, Warp};
use esdg::operators::OperatorSet;
use esdg::physics::{GasParams, State};

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn twisted_cube(degree: usize) -> (OperatorSet, esdg::mesh::Mesh) {
    let ops = OperatorSet::new(degree).unwrap();
    let mut mesh = build_box_mesh([TAU; 3], [1, 1, 1], &ops, Warp::None).unwrap();
    // transpose the x-wrap pairing; the affine cube has constant face
    // geometry, so the twisted mesh stays watertight
    let face = mesh
        .faces
        .iter_mut()
        .find(|f| f.master_side.axis() == 0)
        .unwrap();
    face.orientation = 4;
    // the cube's face geometry is constant, so the twisted pairing is
    // still watertight (shat ~ pi^2 sets the roundoff scale)
    assert!(mesh.watertightness().unwrap() < 1e-12);
    (ops, mesh)
}

#[test]
fn orientation_permutations_are_self_inverse_only_when_expected() {
    // transpose (4) is an involution; combined flips are checked through
    // their bijection pairs
    let n = 4;
    for code in [4u8, 1, 2, 3] {
        let mut involution = true;
        for q in 0..=n {
            for p in 0..=n {
                let (sp, sq) = orient_face_point(code, p, q, n);
                let (bp, bq) = orient_face_point(code, sp, sq, n);
                if (bp, bq) != (p, q) {
                    involution = false;
                }
            }
        }
        // flips and pure transpose are involutions
        assert!(involution, "code {code} expected to be an involution");
    }
}

#[test]
fn free_stream_and_conservation_survive_twisted_pairing() {
    let (ops, mesh) = twisted_cube(3);
    let gas = GasParams::default();
    let scheme = SchemeConfig::default();
    let mut fields = FieldsNse::new(&mesh);
    let mut ws = NseWorkspace::new(&mesh);

    let free = State::from_primitive(1.0, [0.4, -0.1, 0.2], 1.1, &gas);
    fields.set_from(&mesh, |_| free);
    rhs_nse(&mesh, &ops, &scheme, &gas, &mut fields, &mut ws).unwrap();
    let rmax = fields
        .rhs
        .iter()
        .flat_map(|s| s.0.iter())
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    assert!(rmax < 1e-11, "free stream broken on twisted torus: {rmax}");

    // smooth data that is genuinely asymmetric in the transposed
    // directions
    fields.set_from(&mesh, |x| {
        let rho = 1.0 + 0.2 * (x[1].sin() * (2.0 * x[2]).cos());
        let v = [
            0.1 * x[2].sin(),
            0.2 * x[0].cos(),
            -0.1 * (x[1] + x[2]).sin(),
        ];
        let p = 1.0 + 0.1 * x[1].cos();
        State::from_primitive(rho, v, p, &gas)
    });
    rhs_nse(&mesh, &ops, &scheme, &gas, &mut fields, &mut ws).unwrap();
    let totals = conserved_totals(&mesh, &ops, &fields.rhs);
    let scale = fields
        .rhs
        .iter()
        .flat_map(|s| s.0.iter())
        .fold(0.0f64, |a, &v| a.max(v.abs()))
        * mesh.volume(&ops);
    for (c, total) in totals.iter().enumerate() {
        assert!(
            total.abs() <= 1e-13 * scale.max(1.0),
            "component {c} not conserved on twisted torus: {total}"
        );
    }
}

#[test]
fn twisted_mesh_survives_file_round_trip() {
    let (ops, mesh) = twisted_cube(3);
    let dir = std::env::temp_dir().join(format!("esdg_twist_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("twisted.mesh");
    esdg::mesh::write_mesh(&path, &mesh).unwrap();
    let back = esdg::mesh::read_mesh(&path, &ops).unwrap();
    let twisted = back
        .faces
        .iter()
        .find(|f| f.master_side.axis() == 0)
        .unwrap();
    assert_eq!(twisted.orientation, 4);

    let gas = GasParams::default();
    let mut fields = FieldsNse::new(&back);
    let mut ws = NseWorkspace::new(&back);
    let free = State::from_primitive(1.0, [0.4, -0.1, 0.2], 1.1, &gas);
    fields.set_from(&back, |_| free);
    rhs_nse(
        &back,
        &ops,
        &SchemeConfig::default(),
        &gas,
        &mut fields,
        &mut ws,
    )
    .unwrap();
    let rmax = fields
        .rhs
        .iter()
        .flat_map(|s| s.0.iter())
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    assert!(rmax < 1e-11);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn entropy_conservation_survives_twisted_pairing() {
    let (ops, mesh) = twisted_cube(4);
    let gas = GasParams::default();
    let scheme = SchemeConfig::default();
    let mut fields = FieldsNse::new(&mesh);
    let mut ws = NseWorkspace::new(&mesh);
    fields.set_from(&mesh, |x| {
        let rho = 1.0 + 0.15 * (x[0].sin() * x[1].cos() * x[2].cos());
        let v = [
            0.2 * x[1].sin() * x[2].cos(),
            -0.1 * x[2].sin(),
            0.15 * (x[0] + x[1]).cos(),
        ];
        let p = 1.0 + 0.1 * (x[0] + x[1] + x[2]).cos();
        State::from_primitive(rho, v, p, &gas)
    });
    let initial = fields.u.clone();
    rhs_nse(&mesh, &ops, &scheme, &gas, &mut fields, &mut ws).unwrap();
    let rate = entropy_rate_audit(&mesh, &ops, &gas, &initial, &fields.rhs);
    let scale = total_entropy(&mesh, &ops, &initial, &gas).abs().max(1.0);
    assert!(
        (rate / scale).abs() <= 1e-10,
        "entropy rate on twisted torus: {rate:.3e} (scale {scale:.3e})"
    );
}
