//! Deterministic structured discretizations of the interval, the rectangle
//! and the disk, with boundary identification.
//!
//! Conventions:
//!
//! - vertices are stored as `[x, y]` pairs; 1D meshes keep `y = 0`;
//! - 2D elements are vertex-index triples with positive (counter-clockwise)
//!   orientation, 1D elements are index pairs ordered left to right;
//! - `boundary_edges` are oriented so the domain lies on the left of
//!   `a → b`; a 1D boundary "edge" is the degenerate pair `[v, v]`, one per
//!   endpoint, carrying the counting measure used by the Robin term.
//!
//! The disk is meshed with concentric rings at radii `i·R/n`, ring `i`
//! carrying `6·i` equally spaced vertices, so the mesh is exactly invariant
//! under the dihedral symmetries of the hexagonal subdivision and the
//! triangles stay near-isotropic under refinement.

use crate::{Error, Result};

/// Which generator produced a mesh. Structured kinds allow O(band) point
/// location; meshes read back from files are `Generic`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshKind {
    Interval { n_cells: usize },
    Rectangle { lx: f64, ly: f64, nx: usize, ny: usize },
    Disk { radius: f64, n_rings: usize },
    Generic,
}

/// A conforming triangulation (2D) or partition (1D) of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<[f64; 2]>,
    elem2vtx: Vec<usize>,
    nodes_per_elem: usize,
    pub boundary_edges: Vec<[usize; 2]>,
    pub element_measure: Vec<f64>,
    pub kind: MeshKind,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elem2vtx.len() / self.nodes_per_elem
    }

    pub fn nodes_per_elem(&self) -> usize {
        self.nodes_per_elem
    }

    /// Vertex indices of element `e`.
    pub fn elem(&self, e: usize) -> &[usize] {
        let k = self.nodes_per_elem;
        &self.elem2vtx[e * k..(e + 1) * k]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.elem2vtx.chunks(self.nodes_per_elem)
    }

    /// Total measure of the discrete domain.
    pub fn total_measure(&self) -> f64 {
        self.element_measure.iter().sum()
    }

    /// Measure of the discrete boundary (edge lengths in 2D, point count in 1D).
    pub fn boundary_measure(&self) -> f64 {
        if self.dim == 1 {
            self.boundary_edges.len() as f64
        } else {
            self.boundary_edges
                .iter()
                .map(|&[a, b]| {
                    let pa = self.vertices[a];
                    let pb = self.vertices[b];
                    ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
                })
                .sum()
        }
    }

    /// Centroid of element `e`.
    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let vs = self.elem(e);
        let mut c = [0.0, 0.0];
        for &v in vs {
            c[0] += self.vertices[v][0];
            c[1] += self.vertices[v][1];
        }
        let k = vs.len() as f64;
        [c[0] / k, c[1] / k]
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        let mut h = 0.0f64;
        for vs in self.elements() {
            for i in 0..vs.len() {
                for j in i + 1..vs.len() {
                    let a = self.vertices[vs[i]];
                    let b = self.vertices[vs[j]];
                    let d = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    h = h.max(d);
                }
            }
        }
        h
    }

    /// Deduplicated, sorted boundary vertex indices.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.boundary_edges.iter().flatten().copied().collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    /// Per-vertex interpolation values of a per-element field are often
    /// needed the other way around: this evaluates the mean of the vertex
    /// field over each element (the value at the element centroid for P1).
    pub fn centroid_values(&self, vertex_field: &[f64]) -> Vec<f64> {
        assert_eq!(vertex_field.len(), self.n_vertices());
        self.elements()
            .map(|vs| vs.iter().map(|&v| vertex_field[v]).sum::<f64>() / vs.len() as f64)
            .collect()
    }

    /// Index of the element containing `p`, if any. Structured kinds narrow
    /// the scan to the relevant band/cell; `Generic` meshes do a full scan.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let tol = 1e-12 * (1.0 + self.max_coord());
        match self.kind {
            MeshKind::Interval { n_cells } => {
                if self.dim != 1 {
                    return self.scan_all(p, tol);
                }
                let x = p[0];
                if !(-tol..=1.0 + tol).contains(&x) {
                    return None;
                }
                let e = ((x * n_cells as f64).floor() as isize).clamp(0, n_cells as isize - 1);
                Some(e as usize)
            }
            MeshKind::Rectangle { lx, ly, nx, ny } => {
                if p[0] < -tol || p[0] > lx + tol || p[1] < -tol || p[1] > ly + tol {
                    return None;
                }
                let i = ((p[0] / lx * nx as f64).floor() as isize).clamp(0, nx as isize - 1) as usize;
                let j = ((p[1] / ly * ny as f64).floor() as isize).clamp(0, ny as isize - 1) as usize;
                let base = 2 * (j * nx + i);
                for e in [base, base + 1] {
                    if self.tri_contains(e, p, tol) {
                        return Some(e);
                    }
                }
                self.scan_all(p, tol)
            }
            MeshKind::Disk { radius, n_rings } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if r > radius + tol {
                    return None;
                }
                let h = radius / n_rings as f64;
                let band = ((r / h).ceil() as isize).clamp(1, n_rings as isize) as usize;
                for b in [band, band.saturating_sub(1).max(1), (band + 1).min(n_rings)] {
                    let start = 6 * (b - 1) * (b - 1);
                    let count = 6 * (2 * b - 1);
                    for e in start..start + count {
                        if self.tri_contains(e, p, tol) {
                            return Some(e);
                        }
                    }
                }
                self.scan_all(p, tol)
            }
            MeshKind::Generic => self.scan_all(p, tol),
        }
    }

    fn max_coord(&self) -> f64 {
        self.vertices
            .iter()
            .flatten()
            .fold(0.0f64, |m, &c| m.max(c.abs()))
    }

    fn scan_all(&self, p: [f64; 2], tol: f64) -> Option<usize> {
        if self.dim == 1 {
            return (0..self.n_elements()).find(|&e| {
                let vs = self.elem(e);
                let a = self.vertices[vs[0]][0];
                let b = self.vertices[vs[1]][0];
                p[0] >= a - tol && p[0] <= b + tol
            });
        }
        (0..self.n_elements()).find(|&e| self.tri_contains(e, p, tol))
    }

    fn tri_contains(&self, e: usize, p: [f64; 2], tol: f64) -> bool {
        let vs = self.elem(e);
        let a = self.vertices[vs[0]];
        let b = self.vertices[vs[1]];
        let c = self.vertices[vs[2]];
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if det.abs() < f64::MIN_POSITIVE {
            return false;
        }
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        let l0 = 1.0 - l1 - l2;
        let lo = -tol / det.abs().sqrt().max(1e-300);
        l0 >= lo && l1 >= lo && l2 >= lo
    }

    /// Consistency checks: positive measures, index ranges, conforming
    /// boundary (every boundary edge belongs to exactly one element, every
    /// interior edge to exactly two).
    pub fn validate(&self) -> Result<()> {
        let nv = self.n_vertices();
        for (e, vs) in self.elements().enumerate() {
            for &v in vs {
                if v >= nv {
                    return Err(Error::invalid(format!(
                        "element {e} references vertex {v} out of range {nv}"
                    )));
                }
            }
            if self.element_measure[e] <= 0.0 {
                return Err(Error::AssemblyFailure {
                    element: e,
                    detail: format!("nonpositive measure {}", self.element_measure[e]),
                });
            }
        }
        if self.dim == 1 {
            if self.boundary_edges.len() != 2 {
                return Err(Error::invalid("1D mesh must have exactly two boundary points"));
            }
            return Ok(());
        }
        // count how many elements own each undirected edge
        use std::collections::HashMap;
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for vs in self.elements() {
            for k in 0..3 {
                let a = vs[k];
                let b = vs[(k + 1) % 3];
                *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        for (&(a, b), &c) in &count {
            if c > 2 {
                return Err(Error::invalid(format!("edge ({a},{b}) shared by {c} elements")));
            }
        }
        let boundary_from_elems: Vec<(usize, usize)> = count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&k, _)| k)
            .collect();
        if boundary_from_elems.len() != self.boundary_edges.len() {
            return Err(Error::invalid(format!(
                "boundary edge count mismatch: {} stored vs {} geometric",
                self.boundary_edges.len(),
                boundary_from_elems.len()
            )));
        }
        for &[a, b] in &self.boundary_edges {
            if count.get(&(a.min(b), a.max(b))) != Some(&1) {
                return Err(Error::invalid(format!("stored boundary edge ({a},{b}) is interior")));
            }
        }
        Ok(())
    }

    /// Assemble a mesh from raw parts (used by the file reader).
    pub fn from_parts(
        dim: usize,
        vertices: Vec<[f64; 2]>,
        elem2vtx: Vec<usize>,
        boundary_edges: Vec<[usize; 2]>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid(format!("dim must be 1 or 2, got {dim}")));
        }
        let nodes_per_elem = dim + 1;
        if elem2vtx.len() % nodes_per_elem != 0 {
            return Err(Error::invalid("connectivity length not a multiple of nodes per element"));
        }
        let mut mesh = Mesh {
            dim,
            vertices,
            elem2vtx,
            nodes_per_elem,
            boundary_edges,
            element_measure: Vec::new(),
            kind: MeshKind::Generic,
        };
        mesh.element_measure = (0..mesh.n_elements()).map(|e| mesh.compute_measure(e)).collect();
        Ok(mesh)
    }

    fn compute_measure(&self, e: usize) -> f64 {
        let vs = self.elem(e);
        if self.dim == 1 {
            self.vertices[vs[1]][0] - self.vertices[vs[0]][0]
        } else {
            let a = self.vertices[vs[0]];
            let b = self.vertices[vs[1]];
            let c = self.vertices[vs[2]];
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        }
    }
}

/// Uniform partition of the unit interval (0,1) into `n_cells` segments.
pub fn gen_interval(n_cells: usize) -> Result<Mesh> {
    if n_cells < 2 {
        return Err(Error::invalid(format!("gen_interval requires n_cells >= 2, got {n_cells}")));
    }
    let n = n_cells;
    let vertices: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 / n as f64, 0.0]).collect();
    let mut elem2vtx = Vec::with_capacity(2 * n);
    for i in 0..n {
        elem2vtx.push(i);
        elem2vtx.push(i + 1);
    }
    let element_measure = (0..n).map(|i| vertices[i + 1][0] - vertices[i][0]).collect();
    Ok(Mesh {
        dim: 1,
        vertices,
        elem2vtx,
        nodes_per_elem: 2,
        boundary_edges: vec![[0, 0], [n, n]],
        element_measure,
        kind: MeshKind::Interval { n_cells },
    })
}

/// Uniform triangulation of the rectangle (0,lx)×(0,ly); every cell is split
/// along the same diagonal (bottom-left to top-right).
pub fn gen_rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::invalid(format!("rectangle dimensions must be positive, got {lx}x{ly}")));
    }
    if nx < 2 || ny < 2 {
        return Err(Error::invalid(format!("gen_rectangle requires nx, ny >= 2, got {nx}x{ny}")));
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([i as f64 * lx / nx as f64, j as f64 * ly / ny as f64]);
        }
    }
    let mut elem2vtx = Vec::with_capacity(9 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10) = (vid(i, j), vid(i + 1, j));
            let (v01, v11) = (vid(i, j + 1), vid(i + 1, j + 1));
            elem2vtx.extend_from_slice(&[v00, v10, v11]);
            elem2vtx.extend_from_slice(&[v00, v11, v01]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push([vid(i, 0), vid(i + 1, 0)]);
    }
    for j in 0..ny {
        boundary_edges.push([vid(nx, j), vid(nx, j + 1)]);
    }
    for i in (0..nx).rev() {
        boundary_edges.push([vid(i + 1, ny), vid(i, ny)]);
    }
    for j in (0..ny).rev() {
        boundary_edges.push([vid(0, j + 1), vid(0, j)]);
    }
    let mut mesh = Mesh {
        dim: 2,
        vertices,
        elem2vtx,
        nodes_per_elem: 3,
        boundary_edges,
        element_measure: Vec::new(),
        kind: MeshKind::Rectangle { lx, ly, nx, ny },
    };
    mesh.element_measure = (0..mesh.n_elements()).map(|e| mesh.compute_measure(e)).collect();
    Ok(mesh)
}

/// First vertex index of disk ring `i` (1-based; index 0 is the center).
fn ring_start(i: usize) -> usize {
    1 + 3 * i * (i - 1)
}

/// Structured polar triangulation of the disk of given radius: ring `i`
/// holds `6·i` vertices, bands are fan-split so every band `i` contributes
/// `6·(2i−1)` triangles (band `i` occupies element indices
/// `6(i−1)² .. 6i²`, which `locate` exploits).
pub fn gen_disk(radius: f64, n_rings: usize) -> Result<Mesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("disk radius must be positive, got {radius}")));
    }
    if n_rings < 2 {
        return Err(Error::invalid(format!("gen_disk requires n_rings >= 2, got {n_rings}")));
    }
    let n = n_rings;
    let mut vertices = Vec::with_capacity(1 + 3 * n * (n + 1));
    vertices.push([0.0, 0.0]);
    for i in 1..=n {
        let r = i as f64 * radius / n as f64;
        let count = 6 * i;
        for k in 0..count {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            vertices.push([r * theta.cos(), r * theta.sin()]);
        }
    }
    let mut elem2vtx = Vec::with_capacity(18 * n * n);
    // innermost fan around the center
    for k in 0..6 {
        elem2vtx.extend_from_slice(&[0, ring_start(1) + k, ring_start(1) + (k + 1) % 6]);
    }
    for i in 2..=n {
        let n_in = 6 * (i - 1);
        let n_out = 6 * i;
        let inner = |idx: usize| ring_start(i - 1) + idx % n_in;
        let outer = |idx: usize| ring_start(i) + idx % n_out;
        for s in 0..6 {
            let i_base = s * (i - 1);
            let o_base = s * i;
            for j in 0..i - 1 {
                elem2vtx.extend_from_slice(&[outer(o_base + j), outer(o_base + j + 1), inner(i_base + j)]);
                elem2vtx.extend_from_slice(&[inner(i_base + j), outer(o_base + j + 1), inner(i_base + j + 1)]);
            }
            elem2vtx.extend_from_slice(&[outer(o_base + i - 1), outer(o_base + i), inner(i_base + i - 1)]);
        }
    }
    let n_outer = 6 * n;
    let boundary_edges = (0..n_outer)
        .map(|k| [ring_start(n) + k, ring_start(n) + (k + 1) % n_outer])
        .collect();
    let mut mesh = Mesh {
        dim: 2,
        vertices,
        elem2vtx,
        nodes_per_elem: 3,
        boundary_edges,
        element_measure: Vec::new(),
        kind: MeshKind::Disk { radius, n_rings },
    };
    mesh.element_measure = (0..mesh.n_elements()).map(|e| mesh.compute_measure(e)).collect();
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_basic() {
        let m = gen_interval(2).unwrap();
        assert_eq!(m.n_vertices(), 3);
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.vertices[1][0], 0.5);
        assert_relative_eq!(m.element_measure[0], 0.5);
        m.validate().unwrap();

        let m = gen_interval(10).unwrap();
        assert_relative_eq!(m.total_measure(), 1.0, max_relative = 1e-12);

        let m = gen_interval(1000).unwrap();
        assert_eq!(m.n_vertices(), 1001);
        assert_eq!(m.boundary_vertices().len(), 2);
        assert!(gen_interval(1).is_err());
    }

    #[test]
    fn rectangle_basic() {
        let m = gen_rectangle(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(m.n_elements(), 8);
        assert_relative_eq!(m.total_measure(), 1.0, max_relative = 1e-12);
        m.validate().unwrap();

        let m = gen_rectangle(1.0, 1.0, 5, 7).unwrap();
        assert_eq!(m.n_elements(), 2 * 5 * 7);
        m.validate().unwrap();

        let m = gen_rectangle(2.0, 1.0, 4, 2).unwrap();
        for &a in &m.element_measure {
            assert_relative_eq!(a, 0.125, max_relative = 1e-12);
        }
        assert!(gen_rectangle(-1.0, 1.0, 2, 2).is_err());
        assert!(gen_rectangle(1.0, 1.0, 1, 2).is_err());
    }

    #[test]
    fn disk_basic() {
        let m = gen_disk(1.0, 2).unwrap();
        assert_eq!(m.n_vertices(), 1 + 6 + 12);
        assert_eq!(m.n_elements(), 6 * 4);
        for &a in &m.element_measure {
            assert!(a > 0.0);
        }
        m.validate().unwrap();

        let m = gen_disk(1.0, 64).unwrap();
        let err = (m.total_measure() - std::f64::consts::PI).abs() / std::f64::consts::PI;
        assert!(err < 1e-3, "polygonal area error {err}");
        m.validate().unwrap();

        let r = 1.0 / std::f64::consts::PI.sqrt();
        let m = gen_disk(r, 96).unwrap();
        assert!((m.total_measure() - 1.0).abs() < 5e-4);
    }

    #[test]
    fn disk_area_converges_quadratically() {
        let exact = std::f64::consts::PI;
        let e1 = (gen_disk(1.0, 16).unwrap().total_measure() - exact).abs();
        let e2 = (gen_disk(1.0, 32).unwrap().total_measure() - exact).abs();
        assert!(e1 / e2 >= 3.5, "area error ratio {}", e1 / e2);
    }

    #[test]
    fn refinement_counts_and_diameters() {
        // rectangle and disk quadruple their element count when the cell
        // counts double; the interval doubles (one refinement direction)
        let (r1, r2) = (gen_rectangle(1.0, 1.0, 4, 4).unwrap(), gen_rectangle(1.0, 1.0, 8, 8).unwrap());
        assert!(r2.n_elements() >= 4 * r1.n_elements());
        assert!(r2.max_diameter() <= 1.5 * r1.max_diameter() / 2.0);

        let (d1, d2) = (gen_disk(1.0, 8).unwrap(), gen_disk(1.0, 16).unwrap());
        assert!(d2.n_elements() >= 4 * d1.n_elements());
        assert!(d2.max_diameter() <= 1.5 * d1.max_diameter() / 2.0);

        let (i1, i2) = (gen_interval(8).unwrap(), gen_interval(16).unwrap());
        assert_eq!(i2.n_elements(), 2 * i1.n_elements());
        assert!(i2.max_diameter() <= 1.5 * i1.max_diameter() / 2.0);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_disk(1.0, 7).unwrap();
        let b = gen_disk(1.0, 7).unwrap();
        assert_eq!(a, b);
        let a = gen_rectangle(1.5, 0.5, 3, 4).unwrap();
        let b = gen_rectangle(1.5, 0.5, 3, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn locate_finds_centroids() {
        for mesh in [
            gen_interval(17).unwrap(),
            gen_rectangle(2.0, 1.0, 5, 3).unwrap(),
            gen_disk(1.0, 9).unwrap(),
        ] {
            for e in 0..mesh.n_elements() {
                let c = mesh.centroid(e);
                let found = mesh.locate(c).expect("centroid not located");
                // centroids are interior, so the element is unique
                assert_eq!(found, e, "mesh {:?} element {e}", mesh.kind);
            }
            assert!(mesh.locate([50.0, 50.0]).is_none());
        }
    }

    #[test]
    fn disk_band_index_layout() {
        // locate() depends on band i occupying elements 6(i-1)^2 .. 6i^2
        let m = gen_disk(2.0, 5).unwrap();
        for i in 1..=5usize {
            let start = 6 * (i - 1) * (i - 1);
            let count = 6 * (2 * i - 1);
            for e in start..start + count {
                let c = m.centroid(e);
                let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
                let h = 2.0 / 5.0;
                assert!(r > (i as f64 - 1.0) * h - 1e-12 && r < i as f64 * h + 1e-12);
            }
        }
    }
}
