//! Line-oriented text interchange format for meshes.
//!
//! Layout: a header (`degree`, `elements`, `periodic`), then per element
//! the `(N+1)^3` geometry nodes as `x y z` triples in lexicographic
//! order (i fastest), then the face records
//! `master_elem master_side slave_elem slave_side orientation`.
//! Metric terms and face geometry are recomputed on read, so the file
//! carries only geometry and topology.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::SolverError;
use crate::mesh::builder::link_faces;
use crate::mesh::{compute_metrics_curl_form, face_geometry, Element, Face, FaceKind, Mesh, Side};
use crate::operators::OperatorSet;

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<(), SolverError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "degree {}", mesh.degree)?;
    writeln!(out, "elements {}", mesh.n_elements())?;
    writeln!(out, "periodic 1 1 1")?;
    writeln!(
        out,
        "extent {:.16e} {:.16e} {:.16e}",
        mesh.extent[0], mesh.extent[1], mesh.extent[2]
    )?;
    for (id, element) in mesh.elements.iter().enumerate() {
        writeln!(out, "element {id}")?;
        for x in &element.geometry {
            writeln!(out, "{:.16e} {:.16e} {:.16e}", x[0], x[1], x[2])?;
        }
    }
    writeln!(out, "faces {}", mesh.faces.len())?;
    for face in &mesh.faces {
        writeln!(
            out,
            "{} {} {} {} {}",
            face.master,
            face.master_side.index(),
            face.slave,
            face.slave_side.index(),
            face.orientation
        )?;
    }
    Ok(())
}

struct Lines<R> {
    reader: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<&str, SolverError> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Err(SolverError::MeshFormat(format!(
                    "unexpected end of file at line {}",
                    self.line_no
                )));
            }
            let trimmed = self.buf.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                // reborrow trimmed from buf to satisfy the borrow checker
                let start = self.buf.find(trimmed).unwrap();
                return Ok(&self.buf[start..start + trimmed.len()]);
            }
        }
    }

    fn error(&self, message: &str) -> SolverError {
        SolverError::MeshFormat(format!("line {}: {message}", self.line_no))
    }
}

fn keyword_fields<'a>(
    line: &'a str,
    keyword: &str,
    count: usize,
    line_no: usize,
) -> Result<Vec<&'a str>, SolverError> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(SolverError::MeshFormat(format!(
            "line {line_no}: expected `{keyword}`, got `{line}`"
        )));
    }
    let fields: Vec<&str> = parts.collect();
    if fields.len() != count {
        return Err(SolverError::MeshFormat(format!(
            "line {line_no}: `{keyword}` needs {count} fields"
        )));
    }
    Ok(fields)
}

/// Read a mesh written by [`write_mesh`], recomputing metric terms and
/// validating positivity, topology and watertightness.
pub fn read_mesh(path: &Path, ops: &OperatorSet) -> Result<Mesh, SolverError> {
    let file = std::fs::File::open(path)?;
    let mut lines = Lines {
        reader: std::io::BufReader::new(file),
        line_no: 0,
        buf: String::new(),
    };

    let degree: usize = {
        let line = lines.next()?.to_owned();
        keyword_fields(&line, "degree", 1, lines.line_no)?[0]
            .parse()
            .map_err(|_| lines.error("bad degree"))?
    };
    if degree != ops.degree() {
        return Err(SolverError::MeshFormat(format!(
            "mesh degree {degree} does not match operator degree {}",
            ops.degree()
        )));
    }
    let n_elements: usize = {
        let line = lines.next()?.to_owned();
        keyword_fields(&line, "elements", 1, lines.line_no)?[0]
            .parse()
            .map_err(|_| lines.error("bad element count"))?
    };
    {
        let line = lines.next()?.to_owned();
        let fields = keyword_fields(&line, "periodic", 3, lines.line_no)?;
        for f in fields {
            if f != "1" {
                return Err(lines.error("only fully periodic meshes are supported"));
            }
        }
    }
    let extent: [f64; 3] = {
        let line = lines.next()?.to_owned();
        let fields = keyword_fields(&line, "extent", 3, lines.line_no)?;
        let mut e = [0.0; 3];
        for (c, f) in fields.iter().enumerate() {
            e[c] = f.parse().map_err(|_| lines.error("bad extent"))?;
        }
        e
    };

    let np = degree + 1;
    let nodes_per_element = np * np * np;
    let mut elements = Vec::with_capacity(n_elements);
    for id in 0..n_elements {
        let line = lines.next()?.to_owned();
        let fields = keyword_fields(&line, "element", 1, lines.line_no)?;
        let got: usize = fields[0].parse().map_err(|_| lines.error("bad id"))?;
        if got != id {
            return Err(lines.error(&format!("expected element {id}, got {got}")));
        }
        let mut geometry = vec![[0.0; 3]; nodes_per_element];
        for point in geometry.iter_mut() {
            let line = lines.next()?;
            let mut parts = line.split_whitespace();
            for c in 0..3 {
                let field = parts
                    .next()
                    .ok_or_else(|| SolverError::MeshFormat("short node line".into()))?;
                point[c] = field
                    .parse()
                    .map_err(|_| SolverError::MeshFormat(format!("bad coordinate `{field}`")))?;
            }
        }
        let metrics = compute_metrics_curl_form(&geometry, ops).map_err(|e| match e {
            SolverError::NonPositiveJacobian { node, value, .. } => {
                SolverError::NonPositiveJacobian {
                    element: id,
                    node,
                    value,
                }
            }
            other => other,
        })?;
        elements.push(Element { geometry, metrics });
    }

    let n_faces: usize = {
        let line = lines.next()?.to_owned();
        keyword_fields(&line, "faces", 1, lines.line_no)?[0]
            .parse()
            .map_err(|_| lines.error("bad face count"))?
    };
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let line = lines.next()?.to_owned();
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(lines.error("face records need 5 fields"));
        }
        let master: usize = fields[0].parse().map_err(|_| lines.error("bad master"))?;
        let master_side = Side::from_index(
            fields[1]
                .parse()
                .map_err(|_| lines.error("bad master side"))?,
        )?;
        let slave: usize = fields[2].parse().map_err(|_| lines.error("bad slave"))?;
        let slave_side = Side::from_index(
            fields[3]
                .parse()
                .map_err(|_| lines.error("bad slave side"))?,
        )?;
        let orientation: u8 = fields[4]
            .parse()
            .map_err(|_| lines.error("bad orientation"))?;
        if orientation > 7 {
            return Err(lines.error("orientation codes are 0..8"));
        }
        if master >= n_elements || slave >= n_elements {
            return Err(lines.error("face references missing element"));
        }
        let (normal, surf) = face_geometry(&elements[master].metrics, master_side, degree)?;
        faces.push(Face {
            master,
            master_side,
            slave,
            slave_side,
            orientation,
            kind: FaceKind::Interior,
            normal,
            surf,
        });
    }

    let element_faces = link_faces(n_elements, &faces)?;
    let mesh = Mesh {
        degree,
        extent,
        elements_per_axis: [0, 0, 0],
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
