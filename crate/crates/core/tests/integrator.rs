use std::f64::consts::TAU;

use mgalerkin::{
    band_forcing, canonical_modes, integrate, project, random_field, BilinearWorkspace, IntegratorConfig, LadderOps,
    Projection, SpectralField, Trajectory,
};

fn forced_problem(m: usize) -> (SpectralField, SpectralField) {
    let f = band_forcing(TAU, 1, 2, 10.0, 5).unwrap().resized(m).unwrap();
    let u0 = random_field(TAU, m, 9, 1.5).unwrap();
    (f, u0)
}

fn solve(m: usize, nu: f64, t_end: f64, h: f64) -> Trajectory {
    let (f, u0) = forced_problem(m);
    let mut ws = BilinearWorkspace::new();
    integrate(
        &u0,
        nu,
        |u, _| f.sub(&ws.bilinear(u, u, m)?),
        t_end,
        &IntegratorConfig::new(h),
    )
    .unwrap()
}

#[test]
fn fourth_order_against_fine_run() {
    let (m, nu, t_end) = (6, 0.5, 0.5);
    let fine = solve(m, nu, t_end, 0.01 / 8.0);
    let errs: Vec<f64> = [0.01, 0.005]
        .iter()
        .map(|&h| solve(m, nu, t_end, h).last().sub(fine.last()).unwrap().norm_l2())
        .collect();
    let order = (errs[0] / errs[1]).log2();
    assert!((order - 4.0).abs() <= 0.2, "order {order}, errors {errs:?}");
}

#[test]
fn linear_part_is_exact_for_every_mode() {
    let (nu, h) = (0.3, 0.01);
    let u0 = random_field(TAU, 5, 2, 0.0).unwrap();
    let traj = integrate(
        &u0,
        nu,
        |u, _| SpectralField::zeros(u.period(), u.cutoff()),
        1.0,
        &IntegratorConfig::new(h),
    )
    .unwrap();
    for (i, s) in traj.samples().iter().enumerate() {
        let t = traj.time(i);
        for mode in canonical_modes(5) {
            let want = u0.get(mode) * (-nu * mode.eigenvalue(TAU) * t).exp();
            let got = s.get(mode);
            assert!((got - want).abs() <= 1e-14 * want.abs().max(1e-300), "{mode:?} at {t}: {got} vs {want}");
        }
    }
}

#[test]
fn bit_identical_reruns() {
    let a = solve(4, 0.5, 0.2, 0.01);
    let b = solve(4, 0.5, 0.2, 0.01);
    for (x, y) in a.samples().iter().zip(b.samples()) {
        assert!(x.coeffs().iter().zip(y.coeffs()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

/// Largest centered-difference residual of the level-0 energy law
/// `d/dt |p|^2 / 2 + nu ||p||^2 - (Pf, p)` along the Galerkin run.
fn energy_residual(h: f64) -> f64 {
    let (m, nu) = (4, 0.5);
    let f = band_forcing(TAU, 1, 2, 10.0, 5).unwrap().resized(2 * m).unwrap();
    let mut ops = LadderOps::new(nu, &f, m, 2 * m).unwrap();
    let p0 = project(&random_field(TAU, m, 9, 1.5).unwrap(), Projection::Pm, m).unwrap();
    let traj = integrate(&p0, nu, |p, _| ops.level_rhs(p, None), 0.4, &IntegratorConfig::new(h)).unwrap();
    let pf = ops.pf().resized(m).unwrap();
    let s = traj.samples();
    (1..s.len() - 1)
        .map(|i| {
            let de = 0.5 * (s[i + 1].norm_l2().powi(2) - s[i - 1].norm_l2().powi(2)) / (2.0 * h);
            (de + nu * s[i].norm_h1().powi(2) - pf.dot(&s[i]).unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn galerkin_energy_law_is_second_order() {
    let r1 = energy_residual(0.004);
    let r2 = energy_residual(0.002);
    let ratio = r1 / r2;
    assert!((3.5..=4.5).contains(&ratio), "residuals {r1:e} {r2:e}");
}
