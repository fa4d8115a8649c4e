//! Fast invariant checks run by `mgalerkin selftest`.

use std::f64::consts::TAU;

use crate::basis::{dof_count, project, random_field, spectral_params, ModeIndex, Projection, Variant};
use crate::error::Result;
use crate::ladder::run_ladder;
use crate::nonlinear::{bilinear_b_oracle, BilinearWorkspace};
use crate::reference::{SpecialKind, SpecialSolution};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        passed: value <= limit,
        detail: format!("{value:.3e} (limit {limit:.0e})"),
    }
}

fn dofs() -> Result<Check> {
    let ok = dof_count(6) == 168 && dof_count(10) == 440;
    let p = spectral_params(6, TAU)?;
    Ok(Check {
        name: "dof count and spectral gap",
        passed: ok && (p.delta - 1.0 / 49.0).abs() < 1e-15,
        detail: format!("dof(6) = {}, dof(10) = {}", dof_count(6), dof_count(10)),
    })
}

fn bilinear_vs_oracle() -> Result<Check> {
    let mut ws = BilinearWorkspace::new();
    let mut worst = 0.0f64;
    for seed in 0..4 {
        let u = random_field(TAU, 3, seed, 1.0)?;
        let v = random_field(TAU, 3, seed + 100, 1.0)?;
        let fast = ws.bilinear(&u, &v, 3)?;
        let slow = bilinear_b_oracle(&u, &v, 3)?;
        worst = worst.max(fast.sub(&slow)?.max_abs());
    }
    Ok(check("fast bilinear term matches quadrature", worst, 1e-12))
}

fn skew_symmetry() -> Result<Check> {
    let mut ws = BilinearWorkspace::new();
    let mut worst = 0.0f64;
    for seed in 0..4 {
        let u = random_field(TAU, 4, seed, 1.0)?;
        let v = random_field(TAU, 4, seed + 10, 1.0)?;
        let w = random_field(TAU, 4, seed + 20, 1.0)?;
        let vw = ws.trilinear(&u, &v, &w)?;
        let wv = ws.trilinear(&u, &w, &v)?;
        worst = worst.max((vw + wv).abs() / vw.abs().max(1.0));
        worst = worst.max(ws.trilinear(&u, &v, &v)?.abs());
    }
    Ok(check("trilinear skew symmetry", worst, 1e-12))
}

fn split_identity() -> Result<Check> {
    let mut ws = BilinearWorkspace::new();
    let mut worst = 0.0f64;
    for m in [4, 8] {
        let u = random_field(TAU, m, 3, 0.5)?;
        let pp = project(&u, Projection::Pp, m)?;
        let b = ws.bilinear(&pp, &pp, 2 * m)?;
        worst = worst.max(project(&b, Projection::Qm, m)?.max_abs());
    }
    Ok(check("large-scale self-interaction stays in P_m", worst, 1e-13))
}

fn steady_ladder() -> Result<Check> {
    let mode = ModeIndex::new(1, 1, Variant::CosPlus)?;
    let s = SpecialSolution::new(SpecialKind::Steady, mode, 0.7, 1.0, TAU);
    let spec = s.problem(2, 0.1, 0.01, 2)?;
    let res = run_ladder(&spec)?;
    let exact = s.state_at(0.1, 2)?;
    let mut worst = 0.0f64;
    for level in &res.levels {
        worst = worst.max(level.u.last().sub(&exact)?.norm_l2());
        worst = worst.max(level.q.last().norm_l2());
    }
    Ok(check("steady single-mode solution on every level", worst, 1e-10))
}

pub fn run_all() -> Vec<Check> {
    let suites: [(&'static str, fn() -> Result<Check>); 5] = [
        ("dof count and spectral gap", dofs),
        ("fast bilinear term matches quadrature", bilinear_vs_oracle),
        ("trilinear skew symmetry", skew_symmetry),
        ("large-scale self-interaction stays in P_m", split_identity),
        ("steady single-mode solution on every level", steady_ladder),
    ];
    suites
        .into_iter()
        .map(|(name, f)| {
            f().unwrap_or_else(|e| Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            })
        })
        .collect()
}
