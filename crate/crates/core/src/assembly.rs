//! P1 finite-element assembly of the operators entering the Rayleigh
//! quotient (∫|∇φ|² + β∫_{∂Ω}φ²) / ∫ m φ²:
//!
//! - `K`  — stiffness ∫ ∇φᵢ·∇φⱼ,
//! - `B`  — boundary mass ∫_{∂Ω} φᵢφⱼ (point masses in 1D, exact edge
//!   integrals in 2D),
//! - `M0` — mass ∫ φᵢφⱼ,
//! - `M(m)` — weighted mass ∫ m φᵢφⱼ with m constant per element.
//!
//! Weights are stored per element so set volumes are exact sums of element
//! measures, and membership for analytic descriptors is decided by element
//! centroid. All integrals are exact for P1.

use crate::mesh::Mesh;
use crate::rearrange::{DiskCap, RadialRings};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Robin parameter β ≥ 0, or the Dirichlet limit ("β = +∞", imposed by
/// eliminating boundary rows/columns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Robin(f64),
    Dirichlet,
}

impl BoundaryCondition {
    pub const NEUMANN: BoundaryCondition = BoundaryCondition::Robin(0.0);

    pub fn validate(&self) -> Result<()> {
        match self {
            BoundaryCondition::Robin(beta) if !(*beta >= 0.0 && beta.is_finite()) => Err(
                Error::invalid(format!("Robin parameter must satisfy β ≥ 0, got {beta}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self, BoundaryCondition::Robin(b) if *b == 0.0)
    }
}

/// Analytic description of the favorable set E, when one exists.
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    /// E = (a, a+c) on the unit interval.
    Interval { a: f64, c: f64 },
    /// Union of concentric rings about the origin.
    RadialRings(RadialRings),
    /// Piece of disk meeting ∂Ω orthogonally.
    DiskCap(DiskCap),
    Custom,
}

/// Per-element weight m with −1 ≤ m ≤ κ; bang-bang weights take exactly
/// the values {κ, −1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub per_element: Vec<f64>,
    pub kappa: f64,
    pub descriptor: Descriptor,
    /// ∫_Ω m, exact at the discrete level.
    pub integral: f64,
    /// |Ω⁺_m| = measure of {m > 0}.
    pub positive_measure: f64,
}

impl Weight {
    /// Validating constructor for arbitrary per-element values.
    pub fn from_values(mesh: &Mesh, kappa: f64, per_element: Vec<f64>) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
        }
        if per_element.len() != mesh.n_elements() {
            return Err(Error::invalid(format!(
                "weight has {} values for {} elements",
                per_element.len(),
                mesh.n_elements()
            )));
        }
        let tol = 1e-12 * kappa.max(1.0);
        for (e, &v) in per_element.iter().enumerate() {
            if !(v >= -1.0 - tol && v <= kappa + tol) {
                return Err(Error::invalid(format!(
                    "weight value {v} on element {e} outside [-1, {kappa}]"
                )));
            }
        }
        let integral = per_element
            .iter()
            .zip(&mesh.element_measure)
            .map(|(&m, &a)| m * a)
            .sum();
        let positive_measure = per_element
            .iter()
            .zip(&mesh.element_measure)
            .filter(|(&m, _)| m > 0.0)
            .map(|(_, &a)| a)
            .sum();
        if positive_measure <= 0.0 {
            return Err(Error::invalid("weight has no favorable region: |Ω⁺| = 0"));
        }
        Ok(Weight {
            per_element,
            kappa,
            descriptor: Descriptor::Custom,
            integral,
            positive_measure,
        })
    }

    /// Bang-bang weight κ·1_E − 1_{Ω∖E} from an element selection mask.
    pub fn bang_bang(mesh: &Mesh, kappa: f64, selected: &[bool]) -> Result<Self> {
        if selected.len() != mesh.n_elements() {
            return Err(Error::invalid("selection mask length mismatch"));
        }
        let values = selected.iter().map(|&s| if s { kappa } else { -1.0 }).collect();
        Weight::from_values(mesh, kappa, values)
    }

    /// Element mask of the favorable set {m > 0}.
    pub fn selected(&self) -> Vec<bool> {
        self.per_element.iter().map(|&v| v > 0.0).collect()
    }

    pub fn is_bang_bang(&self) -> bool {
        self.per_element.iter().all(|&v| v == self.kappa || v == -1.0)
    }

    /// Admissibility of the weight for the optimal design problem at the
    /// given mass bound: ∫ m ≤ −m0·|Ω|.
    pub fn satisfies_mass_bound(&self, mesh: &Mesh, m0: f64) -> bool {
        self.integral <= -m0 * mesh.total_measure() + 1e-12 * mesh.total_measure()
    }
}

/// Build a bang-bang weight by centroid membership in the descriptor set.
pub fn weight_from_descriptor(mesh: &Mesh, descriptor: Descriptor, kappa: f64) -> Result<Weight> {
    let selected: Vec<bool> = (0..mesh.n_elements())
        .map(|e| {
            let c = mesh.centroid(e);
            match &descriptor {
                Descriptor::Interval { a, c: len } => c[0] >= *a && c[0] <= a + len,
                Descriptor::RadialRings(rings) => rings.contains_radius((c[0] * c[0] + c[1] * c[1]).sqrt()),
                Descriptor::DiskCap(cap) => cap.contains(c),
                Descriptor::Custom => false,
            }
        })
        .collect();
    let mut w = Weight::bang_bang(mesh, kappa, &selected)?;
    w.descriptor = descriptor;
    Ok(w)
}

/// Bang-bang weight from an arbitrary membership predicate on centroids.
pub fn weight_from_predicate(
    mesh: &Mesh,
    kappa: f64,
    pred: impl Fn([f64; 2]) -> bool,
) -> Result<Weight> {
    let selected: Vec<bool> = (0..mesh.n_elements()).map(|e| pred(mesh.centroid(e))).collect();
    Weight::bang_bang(mesh, kappa, &selected)
}

/// The assembled symmetric operators of a mesh, plus the boundary vertex
/// list needed for Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    pub k: CsrMatrix,
    pub b: CsrMatrix,
    pub m0: CsrMatrix,
    pub n: usize,
    pub boundary_vertices: Vec<usize>,
}

impl OperatorBundle {
    /// Interior vertex indices (complement of the boundary), sorted.
    pub fn interior_vertices(&self) -> Vec<usize> {
        let mut on_boundary = vec![false; self.n];
        for &v in &self.boundary_vertices {
            on_boundary[v] = true;
        }
        (0..self.n).filter(|&v| !on_boundary[v]).collect()
    }
}

/// Assemble stiffness, boundary mass and mass for a valid mesh.
pub fn assemble_operators(mesh: &Mesh) -> Result<OperatorBundle> {
    let n = mesh.n_vertices();
    let mut tk = Vec::new();
    let mut tm = Vec::new();
    for (e, vs) in mesh.elements().enumerate() {
        let meas = mesh.element_measure[e];
        if !(meas > 0.0) || !meas.is_finite() {
            return Err(Error::AssemblyFailure {
                element: e,
                detail: format!("degenerate element, measure {meas}"),
            });
        }
        if mesh.dim == 1 {
            let h = meas;
            let (a, b) = (vs[0], vs[1]);
            for (i, j, kv, mv) in [
                (a, a, 1.0 / h, h / 3.0),
                (a, b, -1.0 / h, h / 6.0),
                (b, a, -1.0 / h, h / 6.0),
                (b, b, 1.0 / h, h / 3.0),
            ] {
                tk.push((i, j, kv));
                tm.push((i, j, mv));
            }
        } else {
            let p: Vec<[f64; 2]> = vs.iter().map(|&v| mesh.vertices[v]).collect();
            // gradient coefficients: ∇λᵢ = (bᵢ, cᵢ) / (2A)
            let bg = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
            let cg = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
            for i in 0..3 {
                for j in 0..3 {
                    let kv = (bg[i] * bg[j] + cg[i] * cg[j]) / (4.0 * meas);
                    let mv = meas / 12.0 * if i == j { 2.0 } else { 1.0 };
                    tk.push((vs[i], vs[j], kv));
                    tm.push((vs[i], vs[j], mv));
                }
            }
        }
    }
    let mut tb = Vec::new();
    for &[a, b] in &mesh.boundary_edges {
        if mesh.dim == 1 {
            tb.push((a, a, 1.0));
        } else {
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            tb.push((a, a, len / 3.0));
            tb.push((b, b, len / 3.0));
            tb.push((a, b, len / 6.0));
            tb.push((b, a, len / 6.0));
        }
    }
    Ok(OperatorBundle {
        k: CsrMatrix::from_triplets(n, &tk),
        b: CsrMatrix::from_triplets(n, &tb),
        m0: CsrMatrix::from_triplets(n, &tm),
        n,
        boundary_vertices: mesh.boundary_vertices(),
    })
}

/// Weighted mass M(m) with m constant per element; linear in the weight
/// values and indefinite as soon as m changes sign.
pub fn weighted_mass(mesh: &Mesh, w: &Weight) -> Result<CsrMatrix> {
    if w.per_element.len() != mesh.n_elements() {
        return Err(Error::invalid("weight length does not match element count"));
    }
    weighted_mass_values(mesh, &w.per_element)
}

/// Weighted mass for raw per-element values (also used for μ-weights).
pub fn weighted_mass_values(mesh: &Mesh, values: &[f64]) -> Result<CsrMatrix> {
    if values.len() != mesh.n_elements() {
        return Err(Error::invalid("value length does not match element count"));
    }
    let n = mesh.n_vertices();
    let mut tm = Vec::new();
    for (e, vs) in mesh.elements().enumerate() {
        let meas = mesh.element_measure[e];
        let m = values[e];
        if mesh.dim == 1 {
            let (a, b) = (vs[0], vs[1]);
            tm.push((a, a, m * meas / 3.0));
            tm.push((b, b, m * meas / 3.0));
            tm.push((a, b, m * meas / 6.0));
            tm.push((b, a, m * meas / 6.0));
        } else {
            for i in 0..3 {
                for j in 0..3 {
                    tm.push((vs[i], vs[j], m * meas / 12.0 * if i == j { 2.0 } else { 1.0 }));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, &tm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_disk, gen_interval, gen_rectangle};
    use crate::sparse;
    use approx::assert_relative_eq;

    #[test]
    fn constants_in_stiffness_kernel() {
        for mesh in [gen_interval(2).unwrap(), gen_rectangle(1.0, 1.0, 3, 3).unwrap(), gen_disk(1.0, 4).unwrap()] {
            let ops = assemble_operators(&mesh).unwrap();
            let ones = vec![1.0; ops.n];
            let k1 = ops.k.matvec_alloc(&ones);
            let worst = k1.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            assert!(worst < 1e-12 * ops.k.inf_norm(), "K·1 = {worst}");
        }
    }

    #[test]
    fn mass_partition_of_unity() {
        for mesh in [gen_interval(10).unwrap(), gen_rectangle(2.0, 1.0, 4, 3).unwrap(), gen_disk(1.0, 6).unwrap()] {
            let ops = assemble_operators(&mesh).unwrap();
            let ones = vec![1.0; ops.n];
            let m1 = ops.m0.matvec_alloc(&ones);
            assert_relative_eq!(sparse::dot(&ones, &m1), mesh.total_measure(), max_relative = 1e-10);
            let b1 = ops.b.matvec_alloc(&ones);
            assert_relative_eq!(sparse::dot(&ones, &b1), mesh.boundary_measure(), max_relative = 1e-10);
        }
    }

    #[test]
    fn weighted_mass_reduces_to_mass() {
        let mesh = gen_rectangle(1.0, 1.0, 3, 3).unwrap();
        let ops = assemble_operators(&mesh).unwrap();
        let w_plus = Weight::from_values(&mesh, 1.0, vec![1.0; mesh.n_elements()]).unwrap();
        let m = weighted_mass(&mesh, &w_plus).unwrap();
        assert_eq!(m, ops.m0);
        // m ≡ −1 cannot be built as a Weight (empty Ω⁺); check linearity on values
        let m_neg = weighted_mass_values(&mesh, &vec![-1.0; mesh.n_elements()]).unwrap();
        let diff = CsrMatrix::linear_combination(&[(1.0, &m_neg), (1.0, &ops.m0)]);
        assert!(diff.inf_norm() < 1e-14);
    }

    #[test]
    fn bang_bang_weighted_sum() {
        let mesh = gen_interval(10).unwrap();
        let kappa = 0.5;
        let selected: Vec<bool> = (0..10).map(|e| e < 3).collect();
        let w = Weight::bang_bang(&mesh, kappa, &selected).unwrap();
        let m = weighted_mass(&mesh, &w).unwrap();
        let ones = vec![1.0; mesh.n_vertices()];
        let total = sparse::dot(&ones, &m.matvec_alloc(&ones));
        // κ|E| − |Ω∖E|
        assert_relative_eq!(total, kappa * 0.3 - 0.7, max_relative = 1e-12);
        assert_relative_eq!(w.integral, total, max_relative = 1e-12);
    }

    #[test]
    fn weight_validation() {
        let mesh = gen_interval(4).unwrap();
        assert!(Weight::from_values(&mesh, 0.5, vec![0.7, -1.0, -1.0, -1.0]).is_err());
        assert!(Weight::from_values(&mesh, 0.5, vec![-1.0; 4]).is_err());
        assert!(Weight::from_values(&mesh, 0.5, vec![0.5; 3]).is_err());
        let w = Weight::from_values(&mesh, 0.5, vec![0.5, -1.0, -1.0, -1.0]).unwrap();
        assert!(w.is_bang_bang());
    }

    #[test]
    fn quadratic_forms_have_correct_signs() {
        let mesh = gen_disk(1.0, 5).unwrap();
        let ops = assemble_operators(&mesh).unwrap();
        let v: Vec<f64> = (0..ops.n).map(|i| ((i * 7919 % 101) as f64 - 50.0) / 50.0).collect();
        let kv = sparse::dot(&v, &ops.k.matvec_alloc(&v));
        let mv = sparse::dot(&v, &ops.m0.matvec_alloc(&v));
        let bv = sparse::dot(&v, &ops.b.matvec_alloc(&v));
        assert!(kv >= 0.0);
        assert!(mv > 0.0);
        assert!(bv >= 0.0);
        assert!(ops.k.symmetry_defect() < 1e-14);
        assert!(ops.m0.symmetry_defect() < 1e-14);
        assert!(ops.b.symmetry_defect() < 1e-14);
    }

    #[test]
    fn rayleigh_quotient_approaches_pi_squared() {
        // v = sin(πx) interpolated on (0,1): vᵀKv / vᵀM0v → π² at rate h²
        let quot = |n: usize| {
            let mesh = gen_interval(n).unwrap();
            let ops = assemble_operators(&mesh).unwrap();
            let v: Vec<f64> = mesh
                .vertices
                .iter()
                .map(|p| (std::f64::consts::PI * p[0]).sin())
                .collect();
            sparse::dot(&v, &ops.k.matvec_alloc(&v)) / sparse::dot(&v, &ops.m0.matvec_alloc(&v))
        };
        let pi2 = std::f64::consts::PI.powi(2);
        let e1 = (quot(32) - pi2).abs();
        let e2 = (quot(64) - pi2).abs();
        assert!(e1 < 0.05);
        assert!(e1 / e2 > 3.5, "O(h²) expected, ratio {}", e1 / e2);
    }

    #[test]
    fn weighted_mass_linear_in_weight() {
        let mesh = gen_rectangle(1.0, 1.0, 2, 2).unwrap();
        let a: Vec<f64> = (0..8).map(|e| (e as f64) / 8.0).collect();
        let b: Vec<f64> = (0..8).map(|e| 0.25 - (e as f64) / 16.0).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ma = weighted_mass_values(&mesh, &a).unwrap();
        let mb = weighted_mass_values(&mesh, &b).unwrap();
        let msum = weighted_mass_values(&mesh, &sum).unwrap();
        let lin = CsrMatrix::linear_combination(&[(1.0, &ma), (1.0, &mb), (-1.0, &msum)]);
        assert!(lin.inf_norm() < 1e-13);
    }
}
