//! Semi-implicit time stepping for the diffusive logistic equation
//! u_t = Δu + ω·u·(m − u): diffusion is treated implicitly (removing the
//! parabolic dt ~ h² restriction), the reaction explicitly so every step
//! is one SPD solve with a fixed matrix,
//!
//!   (M0 + dt·(K + βB)) uⁿ⁺¹ = M0 uⁿ + dt·ω·(M(m) uⁿ − M_L·uⁿ⊙uⁿ),
//!
//! where M_L is the lumped mass. Keeping the linear reaction in its
//! consistent form M(m)u makes the scheme exactly neutral on the principal
//! eigenfunction at ω = λ(m), which is the survival-threshold statement in
//! discrete form. Small negative values from the P1 maximum-principle
//! violation are clipped to zero and counted.

use crate::assembly::{weighted_mass, BoundaryCondition, OperatorBundle, Weight};
use crate::eigen::PencilSystem;
use crate::mesh::Mesh;
use crate::sparse::{self, CsrMatrix, IncompleteCholesky};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SimParams {
    /// Growth-rate scale ω.
    pub omega: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Disable to time-step the linearization u_t = Δu + ω·m·u.
    pub nonlinear: bool,
}

impl SimParams {
    /// Default step resolving the reaction scale.
    pub fn default_dt(omega: f64) -> f64 {
        0.1 / omega
    }
}

/// Final state of a run.
#[derive(Debug, Clone)]
pub struct SimState {
    pub u: Vec<f64>,
    pub t: f64,
}

/// Per-step summary series.
#[derive(Debug, Clone)]
pub struct SimSeries {
    pub times: Vec<f64>,
    pub linf: Vec<f64>,
    /// ∫ u (consistent mass).
    pub mass: Vec<f64>,
    /// Number of vertex values clipped to zero over the whole run.
    pub clipped: usize,
}

pub fn simulate_logistic(
    mesh: &Mesh,
    bundle: &OperatorBundle,
    bc: BoundaryCondition,
    w: &Weight,
    params: &SimParams,
    u0: &[f64],
) -> Result<(SimState, SimSeries)> {
    bc.validate()?;
    if u0.len() != bundle.n {
        return Err(Error::invalid("initial condition length mismatch"));
    }
    if u0.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("initial condition must be nonnegative"));
    }
    if !u0.iter().any(|&v| v > 0.0) {
        return Err(Error::invalid("initial condition must not vanish identically"));
    }
    if !(params.dt > 0.0 && params.t_end > 0.0 && params.omega > 0.0) {
        return Err(Error::invalid("omega, dt and t_end must be positive"));
    }

    let m_w = weighted_mass(mesh, w)?;
    let sys = PencilSystem::build(bundle, &m_w, bc)?;
    let blowup_bound = 10.0 * (w.kappa + 1.0);

    // step matrix S = M0 + dt·A, factored once (incompletely) for PCG
    let s = CsrMatrix::linear_combination(&[(1.0, &sys.m0), (params.dt, &sys.a)]);
    let ic = IncompleteCholesky::new(&s)?;
    let lumped: Vec<f64> = {
        let ones = vec![1.0; sys.m0.n()];
        sys.m0.matvec_alloc(&ones)
    };

    let mut u = sys.reduce(u0);
    let n_steps = (params.t_end / params.dt).ceil() as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut linf = Vec::with_capacity(n_steps + 1);
    let mut mass = Vec::with_capacity(n_steps + 1);
    let mut clipped = 0usize;

    let record = |u: &[f64], t: f64, times: &mut Vec<f64>, linf: &mut Vec<f64>, mass: &mut Vec<f64>| {
        times.push(t);
        linf.push(u.iter().cloned().fold(0.0, f64::max));
        mass.push(sys.m0.matvec_alloc(u).iter().sum());
    };
    record(&u, 0.0, &mut times, &mut linf, &mut mass);

    let mut rhs = vec![0.0; u.len()];
    for step in 1..=n_steps {
        let t = (step as f64 * params.dt).min(params.t_end);
        let dt = if step == n_steps { t - times[step - 1] } else { params.dt };
        // rhs = M0 u + dt·ω·(M(m) u − M_L u²)
        let m0u = sys.m0.matvec_alloc(&u);
        let mu = sys.m.matvec_alloc(&u);
        for i in 0..u.len() {
            let reaction =
                mu[i] - if params.nonlinear { lumped[i] * u[i] * u[i] } else { 0.0 };
            rhs[i] = m0u[i] + dt * params.omega * reaction;
        }
        let s_step = if dt == params.dt {
            None
        } else {
            Some(CsrMatrix::linear_combination(&[(1.0, &sys.m0), (dt, &sys.a)]))
        };
        match &s_step {
            None => sparse::pcg(&s, &rhs, &mut u, &ic, 1e-10, 2000)?,
            Some(mat) => {
                let ic_last = IncompleteCholesky::new(mat)?;
                sparse::pcg(mat, &rhs, &mut u, &ic_last, 1e-10, 2000)?
            }
        };
        for v in u.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped += 1;
            }
        }
        let peak = u.iter().cloned().fold(0.0, f64::max);
        if peak > blowup_bound {
            return Err(Error::Instability(format!(
                "‖u‖∞ = {peak} exceeded {blowup_bound} at t = {t}; reduce dt (current {})",
                params.dt
            )));
        }
        record(&u, t, &mut times, &mut linf, &mut mass);
    }

    let state = SimState { u: sys.embed(&u), t: *times.last().unwrap() };
    Ok((state, SimSeries { times, linf, mass, clipped }))
}

/// Normalized steady-state defect ‖−Au + ω(M(m)u − M_L u²)‖₂ relative to
/// the operator scale; small values certify an equilibrium of the scheme.
pub fn steady_state_residual(
    mesh: &Mesh,
    bundle: &OperatorBundle,
    bc: BoundaryCondition,
    w: &Weight,
    omega: f64,
    u: &[f64],
) -> Result<f64> {
    let m_w = weighted_mass(mesh, w)?;
    let sys = PencilSystem::build(bundle, &m_w, bc)?;
    let ur = sys.reduce(u);
    let au = sys.a.matvec_alloc(&ur);
    let mu = sys.m.matvec_alloc(&ur);
    let ones = vec![1.0; ur.len()];
    let lumped = sys.m0.matvec_alloc(&ones);
    let r: Vec<f64> = (0..ur.len())
        .map(|i| -au[i] + omega * (mu[i] - lumped[i] * ur[i] * ur[i]))
        .collect();
    let scale = (sys.a.inf_norm() + omega * sys.m.inf_norm()) * sparse::norm2(&ur).max(1e-300);
    Ok(sparse::norm2(&r) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_operators, weight_from_descriptor, Descriptor};
    use crate::eigen::principal_eigen;
    use crate::mesh::gen_interval;

    fn setup() -> (Mesh, OperatorBundle, Weight) {
        let mesh = gen_interval(256).unwrap();
        let ops = assemble_operators(&mesh).unwrap();
        // the Neumann-optimal boundary interval at c = 0.2
        let w = weight_from_descriptor(&mesh, Descriptor::Interval { a: 0.0, c: 0.2 }, 0.5).unwrap();
        (mesh, ops, w)
    }

    #[test]
    fn extinction_below_threshold_persistence_above() {
        let (mesh, ops, w) = setup();
        let bc = BoundaryCondition::NEUMANN;
        let lambda = principal_eigen(&mesh, &ops, &w, bc).unwrap().lambda;
        let u0 = vec![1.0; ops.n];

        let run = |omega: f64| {
            let params = SimParams {
                omega,
                t_end: 50.0 / lambda,
                dt: SimParams::default_dt(omega),
                nonlinear: true,
            };
            simulate_logistic(&mesh, &ops, bc, &w, &params, &u0).unwrap()
        };

        let (_, ext) = run(0.5 * lambda);
        assert!(
            ext.mass.last().unwrap() < &(1e-3 * ext.mass[0]),
            "expected extinction: mass fell only to {}",
            ext.mass.last().unwrap() / ext.mass[0]
        );

        let (state, per) = run(2.0 * lambda);
        let tail = per.mass.len() * 9 / 10;
        let (lo, hi) = per.mass[tail..]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(*per.mass.last().unwrap() > 1e-3);
        assert!((hi - lo) / hi <= 1e-3, "tail not settled: [{lo}, {hi}]");
        let resid = steady_state_residual(&mesh, &ops, bc, &w, 2.0 * lambda, &state.u).unwrap();
        assert!(resid <= 1e-4, "steady defect {resid}");
    }

    #[test]
    fn linearized_neutral_at_threshold() {
        let (mesh, ops, w) = setup();
        let bc = BoundaryCondition::NEUMANN;
        let eig = principal_eigen(&mesh, &ops, &w, bc).unwrap();
        let u0: Vec<f64> = eig.phi.iter().map(|&v| v.max(0.0)).collect();
        let params = SimParams {
            omega: eig.lambda,
            t_end: 1.0,
            dt: 0.001,
            nonlinear: false,
        };
        let (_, series) = simulate_logistic(&mesh, &ops, bc, &w, &params, &u0).unwrap();
        let drift = (series.mass.last().unwrap() - series.mass[0]).abs() / series.mass[0];
        assert!(drift < 0.01, "neutral mode drifted by {drift}");
    }

    #[test]
    fn rejects_bad_initial_data() {
        let (mesh, ops, w) = setup();
        let params = SimParams { omega: 1.0, t_end: 1.0, dt: 0.1, nonlinear: true };
        let mut u0 = vec![0.0; ops.n];
        assert!(simulate_logistic(&mesh, &ops, BoundaryCondition::NEUMANN, &w, &params, &u0).is_err());
        u0[0] = -1.0;
        assert!(simulate_logistic(&mesh, &ops, BoundaryCondition::NEUMANN, &w, &params, &u0).is_err());
    }

    #[test]
    fn mass_positivity_no_clipping_at_default_dt() {
        let (mesh, ops, w) = setup();
        let lambda = principal_eigen(&mesh, &ops, &w, BoundaryCondition::NEUMANN).unwrap().lambda;
        let omega = 2.0 * lambda;
        let params = SimParams { omega, t_end: 10.0 / lambda, dt: SimParams::default_dt(omega), nonlinear: true };
        let u0 = vec![0.25; ops.n];
        let (_, series) = simulate_logistic(&mesh, &ops, BoundaryCondition::NEUMANN, &w, &params, &u0).unwrap();
        assert_eq!(series.clipped, 0);
    }
}
