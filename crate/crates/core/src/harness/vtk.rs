//! Legacy ASCII VTK export of nodal fields.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::mesh::Mesh;
use crate::solver::FieldState;

const VTK_TRIANGLE: u8 = 5;

/// Writes the mesh as an unstructured grid with point scalars `u1, u2, p, c`.
pub fn write_vtk<W: Write>(mut out: W, mesh: &Mesh, state: &FieldState) -> Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "fields at t={}", state.t)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_nodes())?;
    for [x, y] in mesh.nodes() {
        writeln!(out, "{x:e} {y:e} 0")?;
    }
    let ne = mesh.num_elements();
    writeln!(out, "CELLS {ne} {}", 4 * ne)?;
    for [a, b, c] in mesh.elements() {
        writeln!(out, "3 {a} {b} {c}")?;
    }
    writeln!(out, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(out, "{VTK_TRIANGLE}")?;
    }
    writeln!(out, "POINT_DATA {}", mesh.num_nodes())?;
    for (name, values) in [
        ("u1", &state.u1),
        ("u2", &state.u2),
        ("p", &state.p),
        ("c", &state.c),
    ] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in values.iter() {
            writeln!(out, "{v:e}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_vtk_file(path: &Path, mesh: &Mesh, state: &FieldState) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk(f, mesh, state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_counts() {
        let mesh = Mesh::unit_square(2).unwrap();
        let state = FieldState::interpolate_exact(&mesh, 0.0);
        let mut buf = Vec::new();
        write_vtk(&mut buf, &mesh, &state).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("POINTS 9 double"));
        assert!(text.contains("CELLS 8 32"));
        assert!(text.contains("CELL_TYPES 8"));
        assert!(text.contains("POINT_DATA 9"));
        assert_eq!(text.matches("SCALARS").count(), 4);
        assert_eq!(
            text.lines().count(),
            5 + 9 + 1 + 8 + 1 + 8 + 1 + 4 * (2 + 9)
        );
    }
}
