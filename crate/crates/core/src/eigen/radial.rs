//! Radial reduction: the eigenvalue problem on the N-ball with a radially
//! symmetric weight reduces to U'' + ((N−1)/r)U' + λ m(r) U = 0 on (0, R),
//! discretized with P1 elements and the measure r^{N−1} dr in every inner
//! product. The no-flux condition at r = 0 is natural; the Robin term at
//! r = R carries the surface factor R^{N−1}.

use super::{solve_principal, EigenResult, PencilSystem, SolveHint};
use crate::assembly::BoundaryCondition;
use crate::rearrange::RadialRings;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// ∫ r^k dr over [lo, hi].
fn power_integral(lo: f64, hi: f64, k: u32) -> f64 {
    (hi.powi(k as i32 + 1) - lo.powi(k as i32 + 1)) / (k as f64 + 1.0)
}

/// Principal eigenvalue of the radial problem in dimension `n_dim` with the
/// bang-bang weight κ on the ring set and −1 elsewhere, on a uniform grid
/// of `n_cells` segments over [0, R]. The returned eigenfunction lives on
/// the radii i·R/n_cells, i = 0..=n_cells.
pub fn radial_eigen(
    n_dim: u32,
    rings: &RadialRings,
    kappa: f64,
    bc: BoundaryCondition,
    n_cells: usize,
) -> Result<EigenResult> {
    radial_eigen_with_hint(n_dim, rings, kappa, bc, n_cells, &SolveHint::default())
}

pub fn radial_eigen_with_hint(
    n_dim: u32,
    rings: &RadialRings,
    kappa: f64,
    bc: BoundaryCondition,
    n_cells: usize,
    hint: &SolveHint,
) -> Result<EigenResult> {
    bc.validate()?;
    if n_dim < 1 {
        return Err(Error::invalid("dimension must satisfy N ≥ 1"));
    }
    if n_cells < 2 {
        return Err(Error::invalid("radial grid needs at least 2 cells"));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    if rings.rings.is_empty() {
        return Err(Error::invalid("empty ring set: favorable region has measure zero"));
    }
    let r_max = rings.domain_radius;
    let n = n_cells + 1;
    let radius_at = |i: usize| i as f64 * r_max / n_cells as f64;

    let mut tk = Vec::new();
    let mut tm0 = Vec::new();
    let mut tm = Vec::new();
    let mut weight_integral = 0.0;
    for e in 0..n_cells {
        let (lo, hi) = (radius_at(e), radius_at(e + 1));
        let h = hi - lo;
        let mid = 0.5 * (lo + hi);
        let m_e = if rings.contains_radius(mid) { kappa } else { -1.0 };
        let ring_vol = power_integral(lo, hi, n_dim - 1);
        weight_integral += m_e * ring_vol;
        // stiffness: derivative product is ±1/h², the rest integrates exactly
        let k_loc = ring_vol / (h * h);
        tk.push((e, e, k_loc));
        tk.push((e + 1, e + 1, k_loc));
        tk.push((e, e + 1, -k_loc));
        tk.push((e + 1, e, -k_loc));
        // mass: hats are affine, so φa·φb·r^{N−1} integrates in closed form
        let coeff = |left: bool| if left { (hi / h, -1.0 / h) } else { (-lo / h, 1.0 / h) };
        let pair = |pa: (f64, f64), pb: (f64, f64)| {
            pa.0 * pb.0 * power_integral(lo, hi, n_dim - 1)
                + (pa.0 * pb.1 + pa.1 * pb.0) * power_integral(lo, hi, n_dim)
                + pa.1 * pb.1 * power_integral(lo, hi, n_dim + 1)
        };
        let (cl, cr) = (coeff(true), coeff(false));
        for (i, j, v) in [
            (e, e, pair(cl, cl)),
            (e + 1, e + 1, pair(cr, cr)),
            (e, e + 1, pair(cl, cr)),
            (e + 1, e, pair(cl, cr)),
        ] {
            tm0.push((i, j, v));
            tm.push((i, j, m_e * v));
        }
    }
    let k = CsrMatrix::from_triplets(n, &tk);
    let m0 = CsrMatrix::from_triplets(n, &tm0);
    let m = CsrMatrix::from_triplets(n, &tm);

    let (a, keep) = match bc {
        BoundaryCondition::Robin(beta) => {
            if beta == 0.0 && weight_integral >= 0.0 {
                return Err(Error::NoPositiveEigenvalue(format!(
                    "radial Neumann problem requires ∫ m r^{{N−1}} dr < 0, got {weight_integral}"
                )));
            }
            let surface = CsrMatrix::from_triplets(n, &[(n - 1, n - 1, r_max.powi(n_dim as i32 - 1))]);
            (CsrMatrix::linear_combination(&[(1.0, &k), (beta, &surface)]), None)
        }
        BoundaryCondition::Dirichlet => {
            let keep: Vec<usize> = (0..n - 1).collect();
            (k.restrict(&keep), Some(keep))
        }
    };
    let (m, m0) = match &keep {
        None => (m, m0),
        Some(kp) => (m.restrict(kp), m0.restrict(kp)),
    };
    let sys = PencilSystem { a, m, m0, keep, n_full: n, shift_base: kappa };
    solve_principal(&sys, bc.is_neumann(), hint)
}
