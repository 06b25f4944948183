use std::io::Write;

use crate::basis::limit_position;
use crate::error::{Error, Result};
use crate::topology::{ControlMesh, Point3};

/// Writes per-vertex fields as a legacy ASCII VTK POLYDATA file.
///
/// The mesh and the coefficients are refined `viz_levels` times, then every
/// vertex is moved to its limit position and every field is replaced by its
/// limit value there, so the output samples the actual limit function.
pub fn write_vtk<W: Write>(
    mesh: &ControlMesh,
    fields: &[(&str, &[f64])],
    viz_levels: usize,
    title: &str,
    mut out: W,
) -> Result<()> {
    for (name, values) in fields {
        if values.len() != mesh.num_vertices() {
            return Err(Error::MeshMismatch(format!(
                "field '{name}' has {} values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Config(format!("invalid VTK field name '{name}'")));
        }
    }
    let mut viz = mesh.clone();
    let mut data: Vec<Vec<f64>> = fields.iter().map(|(_, v)| v.to_vec()).collect();
    for _ in 0..viz_levels {
        data = data.iter().map(|v| viz.subdivide_values(v)).collect();
        viz = viz.subdivide();
    }
    let points: Vec<Point3> = (0..viz.num_vertices()).map(|v| limit_position(&viz, v)).collect();

    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET POLYDATA")?;
    writeln!(out, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(out, "{:e} {:e} {:e}", p.x, p.y, p.z)?;
    }
    writeln!(out, "POLYGONS {} {}", viz.num_cells(), 4 * viz.num_cells())?;
    for [a, b, c] in viz.cells() {
        writeln!(out, "3 {a} {b} {c}")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {}", points.len())?;
        for ((name, _), values) in fields.iter().zip(&data) {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in 0..viz.num_vertices() {
                writeln!(out, "{:e}", viz.limit_value(values, v))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate_spherical_3_4;

    #[test]
    fn vtk_layout() {
        let mesh = generate_spherical_3_4();
        let u: Vec<f64> = (0..mesh.num_vertices()).map(|v| v as f64).collect();
        let mut buf = Vec::new();
        write_vtk(&mesh, &[("u", &u)], 1, "test", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\ntest\nASCII\nDATASET POLYDATA\nPOINTS 14 double\n"));
        assert!(text.contains("POLYGONS 24 96\n"));
        assert!(text.contains("POINT_DATA 14\nSCALARS u double 1\nLOOKUP_TABLE default\n"));
        let scalars = text.split("LOOKUP_TABLE default\n").nth(1).unwrap();
        assert_eq!(scalars.lines().count(), 14);
    }

    #[test]
    fn vtk_limit_values_of_constants() {
        let mesh = generate_spherical_3_4();
        let ones = vec![2.5; mesh.num_vertices()];
        let mut buf = Vec::new();
        write_vtk(&mesh, &[("c", &ones)], 0, "t", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for line in text.split("LOOKUP_TABLE default\n").nth(1).unwrap().lines() {
            assert!((line.parse::<f64>().unwrap() - 2.5).abs() < 1e-14);
        }
        assert!(write_vtk(&mesh, &[("c", &ones[1..])], 0, "t", Vec::new()).is_err());
        assert!(write_vtk(&mesh, &[("a b", &ones)], 0, "t", Vec::new()).is_err());
    }
}
