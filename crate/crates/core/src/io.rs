//! Plain-text exchange formats.
//!
//! Field file: one header line `dim nv ne`, then `nv` vertex lines
//! (`x` in 1D, `x y` in 2D), then `ne` element lines of 0-based vertex
//! indices, then optionally one value per vertex or per element. Floats
//! are printed in shortest round-trip form, so write → read → write is
//! byte-identical.
//!
//! Sparse matrices export as `i j value` coordinate lines for debugging.

use crate::mesh::Mesh;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Values attached to a field file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Vertex,
    Element,
}

pub fn format_field_file(mesh: &Mesh, field: Option<(FieldKind, &[f64])>) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", mesh.dim, mesh.n_vertices(), mesh.n_elements());
    for v in &mesh.vertices {
        if mesh.dim == 1 {
            let _ = writeln!(out, "{}", v[0]);
        } else {
            let _ = writeln!(out, "{} {}", v[0], v[1]);
        }
    }
    for vs in mesh.elements() {
        let line: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    if let Some((kind, values)) = field {
        let expected = match kind {
            FieldKind::Vertex => mesh.n_vertices(),
            FieldKind::Element => mesh.n_elements(),
        };
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "field has {} values, expected {expected} for {kind:?} data",
                values.len()
            )));
        }
        for v in values {
            let _ = writeln!(out, "{v}");
        }
    }
    Ok(out)
}

pub fn write_field_file(
    path: impl AsRef<Path>,
    mesh: &Mesh,
    field: Option<(FieldKind, &[f64])>,
) -> Result<()> {
    std::fs::write(path, format_field_file(mesh, field)?)?;
    Ok(())
}

/// Parse a field file; the attached values (if any) are classified by
/// count, preferring vertex data when the counts coincide.
pub fn parse_field_file(text: &str) -> Result<(Mesh, Option<(FieldKind, Vec<f64>)>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("bad header `{header}`: {e}"))))
        .collect::<Result<_>>()?;
    if head.len() != 3 {
        return Err(Error::Parse(format!("header must be `dim nv ne`, got `{header}`")));
    }
    let (dim, nv, ne) = (head[0], head[1], head[2]);
    if dim != 1 && dim != 2 {
        return Err(Error::Parse(format!("unsupported dimension {dim}")));
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated vertex block".into()))?;
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("bad coordinate `{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if coords.len() != dim {
            return Err(Error::Parse(format!("vertex line `{line}` has {} coordinates", coords.len())));
        }
        vertices.push([coords[0], if dim == 2 { coords[1] } else { 0.0 }]);
    }
    let nodes = dim + 1;
    let mut elem2vtx = Vec::with_capacity(ne * nodes);
    for _ in 0..ne {
        let line = lines.next().ok_or_else(|| Error::Parse("truncated element block".into()))?;
        let ids: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("bad index `{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if ids.len() != nodes {
            return Err(Error::Parse(format!("element line `{line}` has {} indices", ids.len())));
        }
        elem2vtx.extend_from_slice(&ids);
    }
    let values: Vec<f64> = lines
        .map(|l| l.trim().parse::<f64>().map_err(|e| Error::Parse(format!("bad value `{l}`: {e}"))))
        .collect::<Result<_>>()?;
    let field = match values.len() {
        0 => None,
        n if n == nv => Some((FieldKind::Vertex, values)),
        n if n == ne => Some((FieldKind::Element, values)),
        n => {
            return Err(Error::Parse(format!(
                "field block has {n} values; expected {nv} (vertex) or {ne} (element)"
            )))
        }
    };
    let boundary = reconstruct_boundary(dim, nv, &elem2vtx);
    let mesh = Mesh::from_parts(dim, vertices, elem2vtx, boundary)?;
    Ok((mesh, field))
}

pub fn read_field_file(path: impl AsRef<Path>) -> Result<(Mesh, Option<(FieldKind, Vec<f64>)>)> {
    let text = std::fs::read_to_string(path)?;
    parse_field_file(&text)
}

/// Boundary edges are not stored in the file; rebuild them as the element
/// edges owned by exactly one element (in the owner's orientation), or the
/// degree-1 vertices in 1D.
fn reconstruct_boundary(dim: usize, nv: usize, elem2vtx: &[usize]) -> Vec<[usize; 2]> {
    if dim == 1 {
        let mut degree = vec![0usize; nv];
        for &v in elem2vtx {
            degree[v] += 1;
        }
        return (0..nv).filter(|&v| degree[v] == 1).map(|v| [v, v]).collect();
    }
    use std::collections::HashMap;
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in elem2vtx.chunks(3) {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut edges = Vec::new();
    for tri in elem2vtx.chunks(3) {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 {
                edges.push([a, b]);
            }
        }
    }
    edges
}

/// `i j value` coordinate export, 0-based.
pub fn write_matrix_coo(path: impl AsRef<Path>, m: &CsrMatrix) -> Result<()> {
    let mut out = String::new();
    for (i, j, v) in m.triplets() {
        let _ = writeln!(out, "{i} {j} {v}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Comma-separated table with a header row and LF line endings.
pub fn write_csv(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    std::fs::write(path, format_csv(header, rows))?;
    Ok(())
}

pub fn format_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_disk, gen_interval, gen_rectangle};

    #[test]
    fn round_trip_is_byte_identical() {
        for mesh in [gen_interval(7).unwrap(), gen_rectangle(1.0, 2.0, 3, 2).unwrap(), gen_disk(1.0, 3).unwrap()] {
            let field: Vec<f64> = (0..mesh.n_vertices()).map(|i| (i as f64 * 0.1).sin() / 3.0).collect();
            let text = format_field_file(&mesh, Some((FieldKind::Vertex, &field))).unwrap();
            let (back, parsed) = parse_field_file(&text).unwrap();
            let (kind, values) = parsed.unwrap();
            assert_eq!(kind, FieldKind::Vertex);
            assert_eq!(values, field);
            assert_eq!(back.vertices, mesh.vertices);
            let again = format_field_file(&back, Some((FieldKind::Vertex, &values))).unwrap();
            assert_eq!(text, again);
        }
    }

    #[test]
    fn element_fields_and_boundary_reconstruction() {
        let mesh = gen_rectangle(1.0, 1.0, 4, 4).unwrap();
        let field: Vec<f64> = (0..mesh.n_elements()).map(|e| e as f64).collect();
        let text = format_field_file(&mesh, Some((FieldKind::Element, &field))).unwrap();
        let (back, parsed) = parse_field_file(&text).unwrap();
        // ambiguity never arises here: ne ≠ nv
        assert_eq!(parsed.unwrap().0, FieldKind::Element);
        assert_eq!(back.boundary_vertices(), mesh.boundary_vertices());
        back.validate().unwrap();
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_field_file("").is_err());
        assert!(parse_field_file("2 1").is_err());
        assert!(parse_field_file("1 2 1\n0.0\n1.0\n0 1\n3.5\n4.5\n9.9").is_err());
        assert!(parse_field_file("3 0 0").is_err());
    }

    #[test]
    fn csv_formatting() {
        let text = format_csv(&["a", "b"], &[vec!["1".into(), "2".into()]]);
        assert_eq!(text, "a,b\n1,2\n");
    }
}
