//! Eigenvalue solvers for the indefinite pencil (K + βB) φ = λ M(m) φ.
//!
//! The principal eigenvalue λ(m) — the unique positive λ whose
//! eigenfunction keeps one sign — is computed as the positive root of
//!
//!   ρ(λ) = smallest eigenvalue of the pencil (K + βB − λ·M(m), M0),
//!
//! which is concave in λ, nonnegative at λ = 0, and crosses zero exactly
//! once on (0, ∞) under the admissibility conditions (|Ω⁺| > 0, and
//! ∫ m < 0 when β = 0). The root is bracketed by doubling from λ = 1 and
//! then pinched by a safeguarded Illinois/bisection iteration; each probe
//! is a symmetric pencil solve warm-started from the previous probe's
//! eigenvector.
//!
//! Dirichlet conditions are imposed by eliminating boundary rows and
//! columns, matching the β → ∞ limit of the Robin problem.

mod interval;
mod pencil;
mod radial;

pub use interval::{beta_star, interval_eigen_1d};
pub use pencil::{smallest_pencil_eigenpair, PencilEig, PencilOptions};
pub use radial::radial_eigen;

use crate::assembly::{weighted_mass, weighted_mass_values, BoundaryCondition, OperatorBundle, Weight};
use crate::mesh::Mesh;
use crate::sparse::{self, CsrMatrix, IncompleteCholesky};
use crate::{Error, Result};

/// Principal eigenpair with solver diagnostics.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// The positive principal eigenvalue.
    pub lambda: f64,
    /// Vertex values of the eigenfunction, M0-normalized (∫φ² = 1) and
    /// sign-fixed so the M0-weighted mean is positive. Dirichlet solves
    /// carry explicit zeros on the boundary.
    pub phi: Vec<f64>,
    /// ‖(K+βB−λM)φ‖ in the M0-dual norm, per unit ‖φ‖_{M0}.
    pub residual: f64,
    /// Accumulated inner (pencil) iterations over all probes.
    pub iters: usize,
    /// Minimum vertex value of φ after the sign fix.
    pub positivity_margin: f64,
}

/// One evaluation of ρ(λ).
#[derive(Debug, Clone)]
pub struct SpectralProbe {
    pub lam: f64,
    /// min over v≠0 of vᵀ(K+βB−λM)v / vᵀM0v.
    pub rho: f64,
    /// Minimizer, M0-normalized (full vertex vector; zeros on the boundary
    /// for Dirichlet).
    pub eigvec: Vec<f64>,
}

/// The (possibly Dirichlet-reduced) matrices of one eigenvalue problem.
pub(crate) struct PencilSystem {
    pub a: CsrMatrix,
    pub m: CsrMatrix,
    pub m0: CsrMatrix,
    /// Kept (interior) vertex indices when reduced; `None` when full.
    pub keep: Option<Vec<usize>>,
    pub n_full: usize,
    /// s₀ such that A − λM + (λ·s₀ + 1)·M0 is positive definite for λ ≥ 0.
    pub shift_base: f64,
}

impl PencilSystem {
    pub(crate) fn build(
        bundle: &OperatorBundle,
        m_full: &CsrMatrix,
        bc: BoundaryCondition,
    ) -> Result<PencilSystem> {
        bc.validate()?;
        let shift_base = diag_ratio_bound(m_full, &bundle.m0);
        match bc {
            BoundaryCondition::Robin(beta) => {
                let a = CsrMatrix::linear_combination(&[(1.0, &bundle.k), (beta, &bundle.b)]);
                Ok(PencilSystem {
                    a,
                    m: m_full.clone(),
                    m0: bundle.m0.clone(),
                    keep: None,
                    n_full: bundle.n,
                    shift_base,
                })
            }
            BoundaryCondition::Dirichlet => {
                let keep = bundle.interior_vertices();
                if keep.is_empty() {
                    return Err(Error::invalid("Dirichlet reduction leaves no interior vertex"));
                }
                Ok(PencilSystem {
                    a: bundle.k.restrict(&keep),
                    m: m_full.restrict(&keep),
                    m0: bundle.m0.restrict(&keep),
                    keep: Some(keep),
                    n_full: bundle.n,
                    shift_base,
                })
            }
        }
    }

    /// Scatter a reduced vector back to all vertices (zeros elsewhere).
    pub(crate) fn embed(&self, x: &[f64]) -> Vec<f64> {
        match &self.keep {
            None => x.to_vec(),
            Some(keep) => {
                let mut full = vec![0.0; self.n_full];
                for (k, &i) in keep.iter().enumerate() {
                    full[i] = x[k];
                }
                full
            }
        }
    }

    /// Restrict a full vector to the kept indices.
    pub(crate) fn reduce(&self, x: &[f64]) -> Vec<f64> {
        match &self.keep {
            None => x.to_vec(),
            Some(keep) => keep.iter().map(|&i| x[i]).collect(),
        }
    }

    fn rho(&self, lam: f64, x0: Option<Vec<f64>>, rel_tol: f64, shift: Option<f64>) -> Result<PencilEig> {
        let g = CsrMatrix::linear_combination(&[(1.0, &self.a), (-lam, &self.m)]);
        let opts = PencilOptions {
            rel_tol,
            max_iter: 1200,
            x0,
            spd_shift: shift.unwrap_or(lam.abs() * self.shift_base + 1.0),
        };
        smallest_pencil_eigenpair(&g, &self.m0, &opts)
    }
}

/// max_i |diag(M)_i| / diag(M0)_i — a cheap bound on the weight magnitude
/// seen by the pencil, used only to pick the preconditioner shift.
fn diag_ratio_bound(m: &CsrMatrix, m0: &CsrMatrix) -> f64 {
    let dm = m.diag();
    let d0 = m0.diag();
    dm.iter()
        .zip(&d0)
        .map(|(&a, &b)| if b > 0.0 { a.abs() / b } else { 0.0 })
        .fold(0.0, f64::max)
}

/// Evaluate ρ(λ) for an assembled weighted mass.
pub fn spectral_rho(
    bundle: &OperatorBundle,
    m: &CsrMatrix,
    bc: BoundaryCondition,
    lam: f64,
) -> Result<SpectralProbe> {
    let sys = PencilSystem::build(bundle, m, bc)?;
    let eig = sys.rho(lam, None, 1e-10, None)?;
    Ok(SpectralProbe { lam, rho: eig.value, eigvec: sys.embed(&eig.vector) })
}

/// The auxiliary eigenvalue γ(μ): smallest eigenvalue of the pencil
/// (K + βB − M(μ), M0). A single linear eigensolve, no root-finding.
pub fn gamma_eigen(
    mesh: &Mesh,
    bundle: &OperatorBundle,
    mu: &[f64],
    bc: BoundaryCondition,
) -> Result<(f64, Vec<f64>)> {
    let m_mu = weighted_mass_values(mesh, mu)?;
    let sys = PencilSystem::build(bundle, &m_mu, bc)?;
    let eig = sys.rho(1.0, None, 1e-10, None)?;
    Ok((eig.value, sys.embed(&eig.vector)))
}

/// Warm-start data for the principal solve.
#[derive(Debug, Clone, Default)]
pub struct SolveHint {
    pub lambda: Option<f64>,
    /// Full-length eigenfunction guess.
    pub phi: Option<Vec<f64>>,
}

/// Principal eigenvalue and eigenfunction of (K+βB)φ = λ M(m) φ.
pub fn principal_eigen(
    mesh: &Mesh,
    bundle: &OperatorBundle,
    w: &Weight,
    bc: BoundaryCondition,
) -> Result<EigenResult> {
    principal_eigen_with_hint(mesh, bundle, w, bc, &SolveHint::default())
}

/// As [`principal_eigen`], reusing a previous solution as starting guess
/// (the thresholding optimizer's successive problems differ by a few
/// elements, so this typically cuts the probe count several-fold).
pub fn principal_eigen_with_hint(
    mesh: &Mesh,
    bundle: &OperatorBundle,
    w: &Weight,
    bc: BoundaryCondition,
    hint: &SolveHint,
) -> Result<EigenResult> {
    bc.validate()?;
    if w.positive_measure <= 0.0 {
        return Err(Error::invalid("weight has no favorable region"));
    }
    if bc.is_neumann() && w.integral >= 0.0 {
        return Err(Error::NoPositiveEigenvalue(format!(
            "Neumann problem requires ∫m < 0, got ∫m = {}",
            w.integral
        )));
    }
    let m = weighted_mass(mesh, w)?;
    let mut sys = PencilSystem::build(bundle, &m, bc)?;
    // the b-independent generic bound can under-estimate on bang-bang
    // weights; the exact bound is max m⁺
    let max_pos = w.per_element.iter().cloned().fold(0.0f64, f64::max);
    sys.shift_base = sys.shift_base.max(max_pos);
    solve_principal(&sys, bc.is_neumann(), hint)
}

/// Shared root-finder on ρ(λ); also used by the radial solver.
pub(crate) fn solve_principal(
    sys: &PencilSystem,
    neumann: bool,
    hint: &SolveHint,
) -> Result<EigenResult> {
    let lambda_floor = if neumann { 1e-6 } else { 1e-12 };
    let mut total_iters = 0usize;
    let mut warm: Option<Vec<f64>> = hint.phi.as_ref().map(|p| sys.reduce(p));
    let mut probes = 0usize;
    // preconditioner shift: kept just above −ρ of the previous probe so the
    // factored matrix tracks the pencil instead of a worst-case bound
    let mut shift_next: Option<f64> = None;
    // each probe yields (ρ, ρ') — the derivative ρ'(λ) = −xᵀMx / xᵀM0x
    // comes free from the converged eigenvector
    let mut probe = |lam: f64, warm: &mut Option<Vec<f64>>, tol: f64, probes: &mut usize, shift: &mut Option<f64>, total: &mut usize| -> Result<(f64, f64)> {
        let eig = sys.rho(lam, warm.clone(), tol, *shift)?;
        *probes += 1;
        *total += eig.iterations;
        let mx = sys.m.matvec_alloc(&eig.vector);
        let m0x = sys.m0.matvec_alloc(&eig.vector);
        let slope = -sparse::dot(&eig.vector, &mx) / sparse::dot(&eig.vector, &m0x);
        *warm = Some(eig.vector);
        *shift = Some(1.0 + 1.5 * (-eig.value).max(0.0));
        Ok((eig.value, slope))
    };

    // bracket [lo, hi] with rho(lo) > 0 > rho(hi); a cold start doubles
    // outward from λ = 1, a warm start grows the step from 0.1% of the
    // hinted λ (optimizer iterates move the root very little)
    let mut lam = hint.lambda.unwrap_or(1.0).max(lambda_floor);
    let mut step = if hint.lambda.is_some() { 1e-3 } else { 1.0 };
    let (f0, s0) = probe(lam, &mut warm, 1e-7, &mut probes, &mut shift_next, &mut total_iters)?;
    let (mut lo, mut f_lo, mut hi, mut f_hi);
    let (mut s_lo, mut s_hi);
    if f0 > 0.0 {
        (lo, f_lo, s_lo) = (lam, f0, s0);
        loop {
            // overshoot the Newton prediction slightly when it is usable;
            // otherwise grow geometrically
            let newton = lam - f_lo / s_lo;
            lam = if s_lo < 0.0 && newton > lam && newton < lam * (1.0 + step) {
                newton + 0.25 * (newton - lam)
            } else {
                lam * (1.0 + step)
            };
            step = (step * 4.0).min(1.0);
            if lam > 1e8 {
                return Err(Error::numeric(format!(
                    "no sign change of rho(λ) found below λ = 1e8 (rho({lo}) = {f_lo})"
                )));
            }
            let (fv, sv) = probe(lam, &mut warm, 1e-7, &mut probes, &mut shift_next, &mut total_iters)?;
            if fv < 0.0 {
                (hi, f_hi, s_hi) = (lam, fv, sv);
                break;
            }
            (lo, f_lo, s_lo) = (lam, fv, sv);
        }
    } else {
        (hi, f_hi, s_hi) = (lam, f0, s0);
        loop {
            lam /= 1.0 + step;
            step = (step * 4.0).min(1.0);
            if lam < lambda_floor {
                return Err(Error::numeric(format!(
                    "rho(λ) stayed negative down to the λ floor {lambda_floor}; \
                     no positive principal eigenvalue isolated"
                )));
            }
            let (fv, sv) = probe(lam, &mut warm, 1e-7, &mut probes, &mut shift_next, &mut total_iters)?;
            if fv > 0.0 {
                (lo, f_lo, s_lo) = (lam, fv, sv);
                break;
            }
            (hi, f_hi, s_hi) = (lam, fv, sv);
        }
    }

    // safeguarded Newton from the endpoint with the smaller |ρ|, clamped
    // into the bracket, with bisection whenever progress stalls
    let mut iters_since_shrink = 0usize;
    while hi - lo > 1e-12 * hi {
        if probes > 220 {
            return Err(Error::numeric("root refinement exceeded probe budget"));
        }
        let width = hi - lo;
        let (from, f_from, s_from) = if f_lo.abs() <= f_hi.abs() { (lo, f_lo, s_lo) } else { (hi, f_hi, s_hi) };
        let mut cand = if s_from < 0.0 { from - f_from / s_from } else { f64::NAN };
        if !cand.is_finite() || cand <= lo + 1e-4 * width || cand >= hi - 1e-4 * width {
            cand = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if !cand.is_finite() || cand <= lo + 1e-3 * width || cand >= hi - 1e-3 * width {
                cand = 0.5 * (lo + hi);
            }
        }
        if iters_since_shrink >= 2 {
            cand = 0.5 * (lo + hi);
            iters_since_shrink = 0;
        }
        let (fv, sv) = probe(cand, &mut warm, 1e-10, &mut probes, &mut shift_next, &mut total_iters)?;
        let slope_scale = sv.abs().max((f_lo - f_hi).abs() / width);
        if fv.abs() <= 1e-12 * slope_scale * cand {
            lo = cand;
            hi = cand;
            break;
        }
        let old_width = width;
        if fv > 0.0 {
            (lo, f_lo, s_lo) = (cand, fv, sv);
        } else {
            (hi, f_hi, s_hi) = (cand, fv, sv);
        }
        iters_since_shrink = if hi - lo < 0.5 * old_width { 0 } else { iters_since_shrink + 1 };
    }
    let lambda = 0.5 * (lo + hi);

    // final tight solve at the root for the eigenfunction
    let final_eig = sys.rho(lambda, warm.clone(), 1e-11, shift_next)?;
    total_iters += final_eig.iterations;
    let mut phi_red = final_eig.vector;

    // sign fix: M0-weighted mean positive
    let m0_phi = sys.m0.matvec_alloc(&phi_red);
    if m0_phi.iter().sum::<f64>() < 0.0 {
        phi_red.iter_mut().for_each(|v| *v = -*v);
    }

    // membership in S(m): the principal branch has φᵀMφ > 0
    let m_phi = sys.m.matvec_alloc(&phi_red);
    let phi_m_phi = sparse::dot(&phi_red, &m_phi);
    if phi_m_phi <= 0.0 {
        return Err(Error::numeric(format!(
            "converged eigenvector has ∫mφ² = {phi_m_phi} ≤ 0 (non-principal branch)"
        )));
    }

    // residual in the M0-dual norm: sqrt(rᵀ M0⁻¹ r)
    let a_phi = sys.a.matvec_alloc(&phi_red);
    let r: Vec<f64> = a_phi.iter().zip(&m_phi).map(|(a, b)| a - lambda * b).collect();
    let ic_m0 = IncompleteCholesky::new(&sys.m0)?;
    let mut z = vec![0.0; r.len()];
    sparse::pcg(&sys.m0, &r, &mut z, &ic_m0, 1e-8, 400)
        .map_err(|e| Error::numeric(format!("M0-dual residual solve failed: {e}")))?;
    let residual = sparse::dot(&r, &z).max(0.0).sqrt();

    let phi = sys.embed(&phi_red);
    let positivity_margin = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(EigenResult { lambda, phi, residual, iters: total_iters, positivity_margin })
}
