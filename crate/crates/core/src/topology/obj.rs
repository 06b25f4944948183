use std::io::{BufRead, Write};

use super::{ControlMesh, Point3};
use crate::error::{Error, Result};

/// Reads `v` and `f` records of a triangle-only Wavefront OBJ file.
/// Other record types are ignored.
pub fn read_obj<R: BufRead>(reader: R) -> Result<ControlMesh> {
    let mut positions = Vec::new();
    let mut cells = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in xyz.iter_mut() {
                    let tok = tokens.next().ok_or_else(|| parse_err(lineno, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, &format!("bad coordinate '{tok}'")))?;
                }
                positions.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let ids = tokens
                    .map(|tok| face_index(tok, positions.len(), lineno))
                    .collect::<Result<Vec<_>>>()?;
                if ids.len() != 3 {
                    return Err(parse_err(lineno, "only triangular faces are supported"));
                }
                cells.push([ids[0], ids[1], ids[2]]);
            }
            _ => {}
        }
    }
    ControlMesh::new(cells, positions)
}

fn face_index(tok: &str, count: usize, lineno: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or(tok);
    let idx: i64 = head
        .parse()
        .map_err(|_| parse_err(lineno, &format!("bad face index '{tok}'")))?;
    let resolved = match idx {
        0 => return Err(parse_err(lineno, "face indices are 1-based")),
        i if i > 0 => i - 1,
        i => count as i64 + i,
    };
    if resolved < 0 {
        return Err(parse_err(lineno, &format!("face index '{tok}' out of range")));
    }
    Ok(resolved as usize)
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse { line, message: message.to_string() }
}

/// Writes vertices then faces; floats use the shortest round-trip form.
pub fn write_obj<W: Write>(mesh: &ControlMesh, mut out: W) -> Result<()> {
    for p in mesh.positions() {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for c in mesh.cells() {
        writeln!(out, "f {} {} {}", c[0] + 1, c[1] + 1, c[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "# tetrahedron\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n\
                         f 1 3 2\nf 1 2 4\nf 2 3 4\nf 3 1 4\n";

    #[test]
    fn reads_and_round_trips() {
        let mesh = read_obj(TETRA.as_bytes()).unwrap();
        assert_eq!(mesh.num_vertices(), 4);
        assert_eq!(mesh.num_cells(), 4);
        let mut buf = Vec::new();
        write_obj(&mesh.subdivide(), &mut buf).unwrap();
        let again = read_obj(buf.as_slice()).unwrap();
        assert_eq!(again.cells(), mesh.subdivide().cells());
        assert_eq!(again.positions(), mesh.subdivide().positions());
    }

    #[test]
    fn accepts_slash_and_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n\
                    f 1/1 3/3 2/2\nf -4 -3 -1\nf 2//1 3//1 4//1\nf 3 1 4\n";
        assert_eq!(read_obj(text.as_bytes()).unwrap().num_cells(), 4);
    }

    #[test]
    fn rejects_quads() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(read_obj(text.as_bytes()), Err(Error::Parse { line: 5, .. })));
    }
}
