//! The multi-level modified Galerkin method.
//!
//! Level 0 is the plain Galerkin system for `p_0` with `q_0 = Phi_0(p_0)`.
//! Level 1 feeds the stored `q_0` into the nonlinear term of the `p_1`
//! system and rebuilds `q_1` from `p_1` and `q_0`. From level 2 on, `p_k`
//! sees `q_{k-1}` and
//!
//! ```text
//! q_k = (nu A)^{-1} [ Qf - QB(p_k) - QB(p_k, q_{k-1}) - QB(q_{k-1}, p_k)
//!                     - QB(q_{k-2}) - q'_{k-2} ]
//! ```
//!
//! Every level starts from `p_k(0) = P u_0`, uses the same time grid, and
//! evaluates its `q_k` at every grid point. Values of `q_{k-1}` between grid
//! points come from cubic Lagrange interpolation; `q'_{k-2}` is the first
//! difference of the stored samples.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::{project, spectral_params, Projection, SpectralField, SpectralParams};
use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorConfig, Provenance, Trajectory};
use crate::nonlinear::BilinearWorkspace;
use crate::problem::ProblemSpec;

/// The algebraic small-scale maps and the level right-hand side for one
/// cutoff pair `(m, m_out)`.
pub struct LadderOps {
    m: usize,
    m_out: usize,
    nu: f64,
    pf: SpectralField,
    qf: SpectralField,
    ws: BilinearWorkspace,
}

impl LadderOps {
    pub fn new(nu: f64, forcing: &SpectralField, m: usize, m_out: usize) -> Result<Self> {
        if m == 0 || m_out < m {
            return Err(Error::InvalidArgument(format!("need 1 <= m <= m_out, got m={m}, m_out={m_out}")));
        }
        if !forcing.supported_in_block(m_out) {
            return Err(Error::Support(format!("forcing extends beyond m_out = {m_out}")));
        }
        let pf = project(forcing, Projection::Pm, m)?.resized(m)?;
        let qf = project(&forcing.resized(m_out)?, Projection::Qm, m)?;
        Ok(LadderOps {
            m,
            m_out,
            nu,
            pf,
            qf,
            ws: BilinearWorkspace::new(),
        })
    }

    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        Self::new(spec.nu, &spec.forcing, spec.m, spec.m_out)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn m_out(&self) -> usize {
        self.m_out
    }

    /// `P f` at cutoff `m`.
    pub fn pf(&self) -> &SpectralField {
        &self.pf
    }

    /// `Q f` at cutoff `m_out`.
    pub fn qf(&self) -> &SpectralField {
        &self.qf
    }

    fn check_large(&self, p: &SpectralField, what: &str) -> Result<()> {
        self.qf.check_compatible(p)?;
        if !p.supported_in_block(self.m) {
            return Err(Error::Support(format!("{what} has coefficients outside the P_{} block", self.m)));
        }
        Ok(())
    }

    fn check_small(&self, q: &SpectralField, what: &str) -> Result<()> {
        self.qf.check_compatible(q)?;
        if !q.vanishes_in_block(self.m) {
            return Err(Error::Support(format!("{what} has coefficients inside the P_{} block", self.m)));
        }
        if !q.supported_in_block(self.m_out) {
            return Err(Error::Support(format!("{what} extends beyond m_out = {}", self.m_out)));
        }
        Ok(())
    }

    /// `(nu A)^{-1} [Qf - Q sum_i B(a_i, b_i) - extra]`, with pairs that
    /// have an identically zero factor dropped.
    fn reconstruct(&mut self, pairs: &[(&SpectralField, &SpectralField)], extra: Option<&SpectralField>) -> Result<SpectralField> {
        let live: Vec<_> = pairs
            .iter()
            .copied()
            .filter(|(a, b)| a.max_abs() != 0.0 && b.max_abs() != 0.0)
            .collect();
        let mut rhs = self.qf.clone();
        if !live.is_empty() {
            let b = self.ws.bilinear_sum(&live, self.m_out)?;
            rhs.axpy(-1.0, &project(&b, Projection::Qm, self.m)?)?;
        }
        if let Some(e) = extra {
            rhs.axpy(-1.0, e)?;
        }
        rhs.inv_nu_a(self.nu)
    }

    /// `Phi_0(p) = (nu A)^{-1} [Qf - QB(p)]`.
    pub fn phi0(&mut self, p: &SpectralField) -> Result<SpectralField> {
        self.check_large(p, "p")?;
        self.reconstruct(&[(p, p)], None)
    }

    /// `(nu A)^{-1} [Qf - QB(p1) - QB(p1, q0) - QB(q0, p1)]`.
    pub fn q1_map(&mut self, p1: &SpectralField, q0: &SpectralField) -> Result<SpectralField> {
        self.check_large(p1, "p1")?;
        self.check_small(q0, "q0")?;
        self.reconstruct(&[(p1, p1), (p1, q0), (q0, p1)], None)
    }

    /// `(nu A)^{-1} [Qf - QB(p) - QB(p, q_k1) - QB(q_k1, p) - QB(q_k) - q_k']`.
    pub fn qk2_map(
        &mut self,
        p: &SpectralField,
        q_k1: &SpectralField,
        q_k: &SpectralField,
        qk_prime: &SpectralField,
    ) -> Result<SpectralField> {
        self.check_large(p, "p")?;
        self.check_small(q_k1, "q_{k+1}")?;
        self.check_small(q_k, "q_k")?;
        self.check_small(qk_prime, "q_k'")?;
        let prime = (qk_prime.max_abs() != 0.0).then_some(qk_prime);
        self.reconstruct(&[(p, p), (p, q_k1), (q_k1, p), (q_k, q_k)], prime)
    }

    /// Nonlinear tendency `Pf - P B(p + q_prev)` of a level's ODE; the
    /// viscous part is left to the integrator.
    pub fn level_rhs(&mut self, p: &SpectralField, q_prev: Option<&SpectralField>) -> Result<SpectralField> {
        self.check_large(p, "p")?;
        let b = match q_prev {
            Some(q) if q.max_abs() != 0.0 => {
                self.check_small(q, "q")?;
                let u = p.add(q)?;
                self.ws.bilinear(&u, &u, self.m)?
            }
            _ => self.ws.bilinear(p, p, self.m)?,
        };
        self.pf.resized(p.cutoff())?.sub(&b.resized(p.cutoff())?)
    }
}

/// One level of a ladder run.
#[derive(Clone, Debug)]
pub struct LevelRecord {
    pub k: usize,
    pub p: Trajectory,
    pub q: Trajectory,
    pub u: Trajectory,
    pub wall_clock_s: f64,
}

#[derive(Clone, Debug)]
pub struct LadderResult {
    pub levels: Vec<LevelRecord>,
    pub spec: ProblemSpec,
    pub params: SpectralParams,
}

impl LadderResult {
    pub fn level(&self, k: usize) -> Option<&LevelRecord> {
        self.levels.get(k)
    }

    /// `u_K(T)` of the highest level.
    pub fn terminal(&self) -> &SpectralField {
        self.levels.last().expect("at least one level").u.last()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderOptions {
    /// Evaluate the highest level's `q` only at `t = T`.
    pub postprocess_only: bool,
}

/// `q_k` at grid index `i` from `p_k(t_i)` and the stored lower levels.
fn small_scale_at(ops: &mut LadderOps, k: usize, p: &SpectralField, i: usize, below: &[LevelRecord]) -> Result<SpectralField> {
    match k {
        0 => ops.phi0(p),
        1 => ops.q1_map(p, &below[0].q.samples()[i]),
        _ => {
            let q_k1 = &below[k - 1].q.samples()[i];
            let q_k2 = &below[k - 2].q;
            let prime = q_k2.time_derivative(i)?;
            ops.qk2_map(p, q_k1, &q_k2.samples()[i], &prime)
        }
    }
}

fn provenance(spec: &ProblemSpec, k: usize, component: &str) -> Provenance {
    Provenance {
        producer: "ladder".into(),
        level: Some(k),
        component: Some(component.into()),
        config_hash: spec.fingerprint(),
    }
}

/// Integrate the `p_k` system of level `k` given the completed lower levels.
pub fn integrate_level(spec: &ProblemSpec, ops: &mut LadderOps, k: usize, below: &[LevelRecord]) -> Result<Trajectory> {
    let p0 = project(&spec.initial, Projection::Pm, spec.m)?.resized(spec.m)?;
    let coupling = (k > 0).then(|| &below[k - 1].q);
    let cfg = IntegratorConfig::new(spec.h);
    let mut traj = integrate(
        &p0,
        spec.nu,
        |p, t| match coupling {
            Some(q) => {
                let q_t = q.sample_interpolate(t)?;
                ops.level_rhs(p, Some(&q_t))
            }
            None => ops.level_rhs(p, None),
        },
        spec.t_end,
        &cfg,
    )?;
    traj.meta = provenance(spec, k, "p");
    Ok(traj)
}

/// `u_k(T)` computed once from the final `p_k` sample, for the last level
/// of a run.
pub fn postprocess_at_t(ops: &mut LadderOps, p: &Trajectory, below: &[LevelRecord]) -> Result<SpectralField> {
    let k = below.len();
    let i = p.len() - 1;
    let q = small_scale_at(ops, k, p.last(), i, below)?;
    p.last().add(&q)
}

/// Run levels `0..=spec.levels`.
pub fn run_ladder(spec: &ProblemSpec) -> Result<LadderResult> {
    run_ladder_with(spec, LadderOptions::default())
}

pub fn run_ladder_with(spec: &ProblemSpec, opts: LadderOptions) -> Result<LadderResult> {
    spec.validate()?;
    let params = spectral_params(spec.m, spec.period)?;
    let mut ops = LadderOps::from_spec(spec)?;
    let mut levels: Vec<LevelRecord> = Vec::with_capacity(spec.levels + 1);
    for k in 0..=spec.levels {
        let start = Instant::now();
        let record = run_level(spec, &mut ops, k, &levels, opts.postprocess_only && k == spec.levels)
            .map_err(|e| Error::Level {
                level: k,
                source: Box::new(e),
            })?;
        log::debug!("level {k} done in {:.2?}", start.elapsed());
        levels.push(LevelRecord {
            wall_clock_s: start.elapsed().as_secs_f64(),
            ..record
        });
    }
    Ok(LadderResult {
        levels,
        spec: spec.clone(),
        params,
    })
}

fn run_level(spec: &ProblemSpec, ops: &mut LadderOps, k: usize, below: &[LevelRecord], terminal_only: bool) -> Result<LevelRecord> {
    let p = integrate_level(spec, ops, k, below)?;
    let (t0, indices): (f64, Vec<usize>) = if terminal_only {
        (p.t_end(), vec![p.len() - 1])
    } else {
        (p.t0, (0..p.len()).collect())
    };
    let mut qs = Vec::with_capacity(indices.len());
    let mut us = Vec::with_capacity(indices.len());
    for &i in &indices {
        let p_i = &p.samples()[i];
        let q = small_scale_at(ops, k, p_i, i, below)?;
        if !q.is_finite() {
            return Err(Error::NonFinite { step: i, time: p.time(i) });
        }
        us.push(p_i.add(&q)?);
        qs.push(q);
    }
    let q = Trajectory::new(t0, p.h, qs, provenance(spec, k, "q"))?;
    let u = Trajectory::new(t0, p.h, us, provenance(spec, k, "u"))?;
    Ok(LevelRecord {
        k,
        p,
        q,
        u,
        wall_clock_s: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{random_field, ModeIndex, Variant};
    use crate::problem::band_forcing;
    use std::f64::consts::TAU;

    fn ops(m: usize) -> LadderOps {
        let f = band_forcing(TAU, 1, 2, 1.0, 1)
            .unwrap()
            .add(&random_field(TAU, 2 * m, 4, 1.0).unwrap())
            .unwrap();
        LadderOps::new(0.8, &f, m, 2 * m).unwrap()
    }

    fn large(m: usize, seed: u64) -> SpectralField {
        random_field(TAU, m, seed, 0.5).unwrap()
    }

    fn small(m: usize, seed: u64) -> SpectralField {
        project(&random_field(TAU, 2 * m, seed, 0.5).unwrap(), Projection::Qm, m).unwrap()
    }

    fn diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn phi0_of_zero_is_forcing_response() {
        let mut o = ops(3);
        let zero = SpectralField::zeros(TAU, 3).unwrap();
        let q = o.phi0(&zero).unwrap();
        assert_eq!(q, o.qf().inv_nu_a(0.8).unwrap());
        assert!(q.vanishes_in_block(3));
    }

    #[test]
    fn phi0_single_mode_with_large_scale_forcing() {
        let f = band_forcing(TAU, 1, 2, 1.0, 1).unwrap();
        let mut o = LadderOps::new(1.0, &f, 3, 6).unwrap();
        let w = SpectralField::single_mode(TAU, 3, ModeIndex::new(2, 1, Variant::SinMinus).unwrap(), 0.7).unwrap();
        assert!(o.phi0(&w).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn phi0_rejects_small_scale_input() {
        let mut o = ops(3);
        assert!(matches!(o.phi0(&small(3, 1)), Err(Error::Support(_))));
        assert!(matches!(o.q1_map(&large(3, 1), &large(3, 2)), Err(Error::Support(_))));
    }

    #[test]
    fn maps_reduce_to_phi0_bit_for_bit() {
        let mut o = ops(4);
        let p = large(4, 3);
        let z = SpectralField::zeros(TAU, 8).unwrap();
        let phi = o.phi0(&p).unwrap();
        assert_eq!(o.q1_map(&p, &z).unwrap(), phi);
        assert_eq!(o.qk2_map(&p, &z, &z, &z).unwrap(), phi);
        let zp = SpectralField::zeros(TAU, 4).unwrap();
        let base = o.qf().inv_nu_a(0.8).unwrap();
        assert_eq!(o.q1_map(&zp, &small(4, 2)).unwrap(), base);
        assert_eq!(o.qk2_map(&zp, &z, &z, &z).unwrap(), base);
    }

    #[test]
    fn level_rhs_reduces_to_forcing() {
        let mut o = ops(3);
        let zero = SpectralField::zeros(TAU, 3).unwrap();
        assert_eq!(o.level_rhs(&zero, None).unwrap(), *o.pf());
        let w = SpectralField::single_mode(TAU, 3, ModeIndex::new(1, 1, Variant::CosPlus).unwrap(), 2.0).unwrap();
        assert!(diff(&o.level_rhs(&w, None).unwrap(), o.pf()) < 1e-14);
        let zq = SpectralField::zeros(TAU, 6).unwrap();
        assert_eq!(o.level_rhs(&w, Some(&zq)).unwrap(), o.level_rhs(&w, None).unwrap());
    }
}
