//! Mesh-free principal eigenvalue on Ω = (0,1) for the interval weight
//! m = κ·1_{[a,a+c]} − 1 elsewhere.
//!
//! On the m = −1 pieces the eigenfunction is a cosh/sinh combination with
//! rate √λ; on the m = κ piece it oscillates with rate √(λκ). Matching
//! value and derivative across the interfaces gives a 2×2 transfer-matrix
//! product, and the Robin (or Dirichlet) end conditions turn the
//! eigenvalue problem into a scalar root-find on the determinant of the
//! end condition. The smallest positive root whose reconstructed
//! eigenfunction keeps one sign is the principal eigenvalue.

use crate::assembly::BoundaryCondition;
use crate::{Error, Result};

/// The threshold β*(κ, c) separating boundary from centered optimal
/// intervals:
///
/// - κ > 1:  β* = 2/(c√κ) · arctan(1/√κ)
/// - κ = 1:  β* = π/(2c)
/// - κ < 1:  β* = 1/(c√κ) · (arctan(2√κ/(κ−1)) + π)
pub fn beta_star(kappa: f64, c: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("c must lie in (0,1), got {c}")));
    }
    let sk = kappa.sqrt();
    Ok(if kappa > 1.0 {
        2.0 / (c * sk) * (1.0 / sk).atan()
    } else if kappa == 1.0 {
        std::f64::consts::PI / (2.0 * c)
    } else {
        ((2.0 * sk / (kappa - 1.0)).atan() + std::f64::consts::PI) / (c * sk)
    })
}

/// 2×2 state propagation of (φ, φ') across one piece.
#[derive(Clone, Copy)]
struct State {
    phi: f64,
    dphi: f64,
}

impl State {
    /// Piece with m = −1: φ'' = λφ.
    fn advance_negative(self, len: f64, lambda: f64) -> State {
        if len == 0.0 {
            return self;
        }
        let s = lambda.sqrt();
        let (ch, sh) = ((s * len).cosh(), (s * len).sinh());
        State {
            phi: self.phi * ch + self.dphi * sh / s,
            dphi: self.phi * s * sh + self.dphi * ch,
        }
    }

    /// Piece with m = κ: φ'' = −λκφ.
    fn advance_positive(self, len: f64, lambda: f64, kappa: f64) -> State {
        if len == 0.0 {
            return self;
        }
        let t = (lambda * kappa).sqrt();
        let (cs, sn) = ((t * len).cos(), (t * len).sin());
        State {
            phi: self.phi * cs + self.dphi * sn / t,
            dphi: -self.phi * t * sn + self.dphi * cs,
        }
    }

    /// Rescale to unit magnitude; cosh growth otherwise overflows long
    /// before the λ scan cap. The scaling is positive, so determinant
    /// signs and eigenfunction signs are unaffected.
    fn normalized(self) -> State {
        let m = self.phi.abs().max(self.dphi.abs());
        if m > 0.0 && m.is_finite() {
            State { phi: self.phi / m, dphi: self.dphi / m }
        } else {
            self
        }
    }
}

struct IntervalProblem {
    a: f64,
    c: f64,
    kappa: f64,
    bc: BoundaryCondition,
}

impl IntervalProblem {
    fn start_state(&self) -> State {
        match self.bc {
            // ∂ₙφ(0) = −φ'(0), so the Robin condition reads φ'(0) = βφ(0)
            BoundaryCondition::Robin(beta) => State { phi: 1.0, dphi: beta },
            BoundaryCondition::Dirichlet => State { phi: 0.0, dphi: 1.0 },
        }
    }

    /// End-condition determinant whose zeros are the eigenvalues.
    fn determinant(&self, lambda: f64) -> f64 {
        let s = self
            .start_state()
            .advance_negative(self.a, lambda)
            .normalized()
            .advance_positive(self.c, lambda, self.kappa)
            .normalized()
            .advance_negative(1.0 - self.a - self.c, lambda)
            .normalized();
        match self.bc {
            BoundaryCondition::Robin(beta) => s.dphi + beta * s.phi,
            BoundaryCondition::Dirichlet => s.phi,
        }
    }

    /// Reconstruct φ on a sampling grid and report its minimum and maximum.
    fn eigenfunction_range(&self, lambda: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut state = self.start_state();
        let pieces = [
            (self.a, false),
            (self.c, true),
            (1.0 - self.a - self.c, false),
        ];
        for (len, positive) in pieces {
            if len <= 0.0 {
                continue;
            }
            let samples = 256;
            for k in 0..=samples {
                let xi = len * k as f64 / samples as f64;
                let v = if positive {
                    state.advance_positive(xi, lambda, self.kappa).phi
                } else {
                    state.advance_negative(xi, lambda).phi
                };
                lo = lo.min(v);
                hi = hi.max(v);
            }
            state = if positive {
                state.advance_positive(len, lambda, self.kappa).normalized()
            } else {
                state.advance_negative(len, lambda).normalized()
            };
        }
        (lo, hi)
    }
}

/// Exact principal eigenvalue λ_β(a) for E = [a, a+c] on (0,1).
pub fn interval_eigen_1d(a: f64, c: f64, kappa: f64, bc: BoundaryCondition) -> Result<f64> {
    bc.validate()?;
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("c must lie in (0,1), got {c}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be positive, got {kappa}")));
    }
    let tol_a = 1e-14;
    if !(-tol_a..=1.0 - c + tol_a).contains(&a) {
        return Err(Error::invalid(format!("a = {a} outside [0, 1−c] = [0, {}]", 1.0 - c)));
    }
    let a = a.clamp(0.0, 1.0 - c);
    if bc.is_neumann() && kappa * c - (1.0 - c) >= 0.0 {
        return Err(Error::NoPositiveEigenvalue(format!(
            "Neumann interval problem requires κc < 1−c, got κ = {kappa}, c = {c}"
        )));
    }
    let problem = IntervalProblem { a, c, kappa, bc };

    // scan in steps of 0.1 for a sign change, starting just above the
    // trivial λ = 0 principal pair, then bisect
    let mut lam = 1e-9;
    let mut d_prev = problem.determinant(lam);
    let step = 0.1;
    loop {
        let lam_next = lam + step;
        if lam_next > 1e6 {
            return Err(Error::numeric(
                "no determinant sign change found below λ = 1e6",
            ));
        }
        let d_next = problem.determinant(lam_next);
        if d_prev.signum() != d_next.signum() {
            // refine to 1e-12
            let (mut lo, mut hi) = (lam, lam_next);
            let (mut d_lo, _) = (d_prev, d_next);
            while hi - lo > 1e-12 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                let dm = problem.determinant(mid);
                if dm.signum() == d_lo.signum() {
                    lo = mid;
                    d_lo = dm;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            // principal eigenvalue certificate: one-signed eigenfunction
            let (min_v, max_v) = problem.eigenfunction_range(root);
            if min_v >= -1e-9 * max_v.abs().max(1e-300) {
                return Ok(root);
            }
            // sign-changing branch: keep scanning
        }
        lam = lam_next;
        d_prev = d_next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn beta_star_reference_values() {
        assert_relative_eq!(beta_star(1.0, 0.5).unwrap(), std::f64::consts::PI, max_relative = 1e-15);
        assert_relative_eq!(beta_star(4.0, 0.25).unwrap(), 4.0 * 0.5f64.atan(), max_relative = 1e-12);
        // κ < 1 branch: the arctan argument is negative
        let expected = 4.0 * (std::f64::consts::PI - (4.0f64 / 3.0).atan());
        assert_relative_eq!(beta_star(0.25, 0.5).unwrap(), expected, max_relative = 1e-12);
        assert!(beta_star(0.0, 0.5).is_err());
        assert!(beta_star(1.0, 1.0).is_err());
    }

    #[test]
    fn beta_star_continuous_at_kappa_one() {
        for c in [0.2, 0.5, 0.8] {
            let at_one = beta_star(1.0, c).unwrap();
            let above = beta_star(1.0 + 1e-9, c).unwrap();
            let below = beta_star(1.0 - 1e-9, c).unwrap();
            assert!((above - at_one).abs() < 1e-6 * at_one);
            assert!((below - at_one).abs() < 1e-6 * at_one);
        }
    }

    #[test]
    fn symmetry_in_a() {
        for (kappa, c, beta) in [(0.5, 0.3, 2.0), (2.0, 0.2, 0.7), (1.0, 0.4, 5.0)] {
            for a in [0.0, 0.1, 0.25] {
                if a > 1.0 - c {
                    continue;
                }
                let l1 = interval_eigen_1d(a, c, kappa, BoundaryCondition::Robin(beta)).unwrap();
                let l2 = interval_eigen_1d(1.0 - c - a, c, kappa, BoundaryCondition::Robin(beta)).unwrap();
                assert_relative_eq!(l1, l2, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn constant_in_a_at_beta_star() {
        for (kappa, c) in [(0.5, 0.3), (2.0, 0.25), (1.0, 0.5)] {
            let bs = beta_star(kappa, c).unwrap();
            let bc = BoundaryCondition::Robin(bs);
            let l0 = interval_eigen_1d(0.0, c, kappa, bc).unwrap();
            let lmid = interval_eigen_1d((1.0 - c) / 2.0, c, kappa, bc).unwrap();
            assert!(
                (l0 - lmid).abs() <= 1e-8 * lmid,
                "κ={kappa}, c={c}: λ(0)={l0}, λ(mid)={lmid}"
            );
        }
    }

    #[test]
    fn dirichlet_limit_constant_weight() {
        // degenerate a=0, c→1 with κ=1 approaches the full-weight Dirichlet
        // problem; with E=(0,c) and κ=1 the exact principal eigenvalue for
        // c = 1 would be π². Check monotone approach.
        let l_big = interval_eigen_1d(0.0, 0.999, 1.0, BoundaryCondition::Dirichlet).unwrap();
        assert!((l_big - std::f64::consts::PI.powi(2)).abs() < 0.1);
    }

    #[test]
    fn neumann_existence_condition() {
        // κc ≥ 1−c has no positive eigenvalue under Neumann
        let err = interval_eigen_1d(0.0, 0.7, 0.5, BoundaryCondition::NEUMANN).unwrap_err();
        assert!(matches!(err, Error::NoPositiveEigenvalue(_)));
        assert!(interval_eigen_1d(0.0, 0.6, 0.5, BoundaryCondition::NEUMANN).is_ok());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(interval_eigen_1d(0.9, 0.3, 1.0, BoundaryCondition::Dirichlet).is_err());
        assert!(interval_eigen_1d(-0.1, 0.3, 1.0, BoundaryCondition::Dirichlet).is_err());
        assert!(interval_eigen_1d(0.0, 0.3, -1.0, BoundaryCondition::Dirichlet).is_err());
    }
}
