//! Fixed-step integrating-factor Runge-Kutta for `c' = -nu A c + N(c, t)`.
//!
//! The viscous part is diagonal in the basis and is propagated exactly by
//! the factors `exp(-nu lambda_k tau)`; the nonlinear part goes through the
//! classical four-stage scheme in the transformed variable (Lawson's
//! method).

use serde::{Deserialize, Serialize};

use crate::basis::SpectralField;
use crate::error::{Error, Result};

/// Where a trajectory came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub producer: String,
    pub level: Option<usize>,
    pub component: Option<String>,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(producer: impl Into<String>) -> Self {
        Provenance {
            producer: producer.into(),
            ..Default::default()
        }
    }
}

/// Uniformly sampled field history; sample `i` sits at `t0 + i * h`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub h: f64,
    samples: Vec<SpectralField>,
    pub meta: Provenance,
}

impl Trajectory {
    pub fn new(t0: f64, h: f64, samples: Vec<SpectralField>, meta: Provenance) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("a trajectory needs at least one sample".into()))?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample spacing must be positive, got {h}")));
        }
        for s in &samples {
            first.check_compatible(s)?;
            if s.cutoff() != first.cutoff() {
                return Err(Error::InvalidArgument("trajectory samples differ in cutoff".into()));
            }
        }
        Ok(Trajectory { t0, h, samples, meta })
    }

    pub fn samples(&self) -> &[SpectralField] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<SpectralField> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn last(&self) -> &SpectralField {
        self.samples.last().expect("non-empty by construction")
    }

    pub fn cutoff(&self) -> usize {
        self.samples[0].cutoff()
    }

    pub fn period(&self) -> f64 {
        self.samples[0].period()
    }

    /// Index of the sample at `t` when `t` is a grid time up to rounding.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.h;
        let i = x.round();
        if i < 0.0 || i as usize >= self.samples.len() {
            return None;
        }
        ((x - i).abs() <= 1e-9).then_some(i as usize)
    }

    /// Field at time `t` by 4-point Lagrange interpolation of the samples.
    pub fn sample_interpolate(&self, t: f64) -> Result<SpectralField> {
        let end = self.t_end();
        let slack = 1e-12 * self.h;
        if !(t >= self.t0 - slack && t <= end + slack) {
            return Err(Error::Extrapolation {
                t,
                start: self.t0,
                end,
            });
        }
        if let Some(i) = self.index_of(t) {
            return Ok(self.samples[i].clone());
        }
        let n = self.samples.len();
        let points = n.min(4);
        let x = (t - self.t0) / self.h;
        let left = (x.floor() as isize - 1).clamp(0, (n - points) as isize) as usize;
        let nodes: Vec<f64> = (left..left + points).map(|i| i as f64).collect();
        let mut out = self.samples[left].scaled(0.0);
        for (a, &xa) in nodes.iter().enumerate() {
            let mut w = 1.0;
            for (b, &xb) in nodes.iter().enumerate() {
                if a != b {
                    w *= (x - xb) / (xa - xb);
                }
            }
            out.axpy(w, &self.samples[left + a])?;
        }
        Ok(out)
    }

    /// First difference at sample `index`: backward for `index >= 1`,
    /// forward at `index == 0`.
    pub fn time_derivative(&self, index: usize) -> Result<SpectralField> {
        if self.samples.len() < 2 {
            return Err(Error::InvalidArgument(
                "a time derivative needs at least two samples".into(),
            ));
        }
        if index >= self.samples.len() {
            return Err(Error::InvalidArgument(format!(
                "sample index {index} out of range ({} samples)",
                self.samples.len()
            )));
        }
        let (a, b) = if index == 0 { (1, 0) } else { (index, index - 1) };
        Ok(self.samples[a].sub(&self.samples[b])?.scaled(1.0 / self.h))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Integrating-factor classical Runge-Kutta, fourth order.
    #[default]
    Ifrk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub h: f64,
    pub scheme: Scheme,
    /// Keep every `sample_stride`-th step.
    pub sample_stride: usize,
}

impl IntegratorConfig {
    pub fn new(h: f64) -> Self {
        IntegratorConfig {
            h,
            scheme: Scheme::Ifrk4,
            sample_stride: 1,
        }
    }

    pub fn with_stride(self, sample_stride: usize) -> Self {
        IntegratorConfig { sample_stride, ..self }
    }
}

/// Number of steps of size `h` covering `[0, t_end]`; `h` must divide the
/// horizon to 1e-12 relative.
pub fn step_count(t_end: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {h}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {t_end}")));
    }
    let steps = (t_end / h).round();
    if steps < 1.0 || (steps * h - t_end).abs() > 1e-12 * t_end {
        return Err(Error::InvalidArgument(format!(
            "step {h} does not divide the horizon {t_end}"
        )));
    }
    Ok(steps as usize)
}

/// Integrate `c' = -nu A c + rhs(c, t)` over `[0, t_end]` from `initial`.
///
/// `rhs` must return fields with the cutoff of the state.
pub fn integrate<F>(
    initial: &SpectralField,
    nu: f64,
    mut rhs: F,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: FnMut(&SpectralField, f64) -> Result<SpectralField>,
{
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
    }
    if cfg.sample_stride == 0 {
        return Err(Error::InvalidArgument("sample stride must be at least 1".into()));
    }
    let steps = step_count(t_end, cfg.h)?;
    if steps % cfg.sample_stride != 0 {
        return Err(Error::InvalidArgument(format!(
            "sample stride {} does not divide {steps} steps",
            cfg.sample_stride
        )));
    }
    let h = cfg.h;
    let cutoff = initial.cutoff();
    let lam = SpectralField::slot_eigenvalues(initial.period(), cutoff);
    let full: Vec<f64> = lam.iter().map(|l| (-nu * l * h).exp()).collect();
    let half: Vec<f64> = lam.iter().map(|l| (-nu * l * 0.5 * h).exp()).collect();

    let check = |f: &SpectralField, step: usize, t: f64| -> Result<()> {
        if f.cutoff() != cutoff {
            return Err(Error::InvalidArgument(format!(
                "nonlinear term returned cutoff {} for a cutoff-{cutoff} state",
                f.cutoff()
            )));
        }
        if !f.is_finite() {
            return Err(Error::NonFinite { step, time: t });
        }
        Ok(())
    };

    let mut state = initial.clone();
    if !state.is_finite() {
        return Err(Error::NonFinite { step: 0, time: 0.0 });
    }
    let mut samples = Vec::with_capacity(steps / cfg.sample_stride + 1);
    samples.push(state.clone());
    let mut stage = state.clone();
    for step in 0..steps {
        let t = step as f64 * h;
        let c = state.coeffs().to_vec();

        let k1 = rhs(&state, t)?;
        check(&k1, step, t)?;
        let k1c = k1.coeffs();
        for (i, s) in stage.coeffs_mut().iter_mut().enumerate() {
            *s = half[i] * (c[i] + 0.5 * h * k1c[i]);
        }
        let k2 = rhs(&stage, t + 0.5 * h)?;
        check(&k2, step, t)?;
        let k2c = k2.coeffs();
        for (i, s) in stage.coeffs_mut().iter_mut().enumerate() {
            *s = half[i] * c[i] + 0.5 * h * k2c[i];
        }
        let k3 = rhs(&stage, t + 0.5 * h)?;
        check(&k3, step, t)?;
        let k3c = k3.coeffs();
        for (i, s) in stage.coeffs_mut().iter_mut().enumerate() {
            *s = full[i] * c[i] + h * half[i] * k3c[i];
        }
        let k4 = rhs(&stage, t + h)?;
        check(&k4, step, t)?;
        let k4c = k4.coeffs();
        for (i, s) in state.coeffs_mut().iter_mut().enumerate() {
            *s = full[i] * c[i]
                + h / 6.0 * (full[i] * k1c[i] + 2.0 * half[i] * (k2c[i] + k3c[i]) + k4c[i]);
        }
        if !state.is_finite() {
            return Err(Error::NonFinite {
                step: step + 1,
                time: (step + 1) as f64 * h,
            });
        }
        if (step + 1) % cfg.sample_stride == 0 {
            samples.push(state.clone());
        }
    }
    Trajectory::new(0.0, h * cfg.sample_stride as f64, samples, Provenance::new("integrator"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{random_field, ModeIndex, Variant};
    use std::f64::consts::TAU;

    fn field_traj(h: f64, n: usize, f: impl Fn(f64) -> f64) -> Trajectory {
        let mode = ModeIndex::new(1, 2, Variant::CosMinus).unwrap();
        let samples = (0..n)
            .map(|i| SpectralField::single_mode(1.0, 2, mode, f(i as f64 * h)).unwrap())
            .collect();
        Trajectory::new(0.0, h, samples, Provenance::new("test")).unwrap()
    }

    fn value(f: &SpectralField) -> f64 {
        f.get(ModeIndex::new(1, 2, Variant::CosMinus).unwrap())
    }

    #[test]
    fn linear_decay_is_exact() {
        let nu = 0.7;
        let u0 = random_field(TAU, 4, 9, 0.5).unwrap();
        let zero = SpectralField::zeros(TAU, 4).unwrap();
        let traj = integrate(&u0, nu, |_, _| Ok(zero.clone()), 1.0, &IntegratorConfig::new(0.05)).unwrap();
        assert_eq!(traj.len(), 21);
        for (i, s) in traj.samples().iter().enumerate() {
            let t = traj.time(i);
            for (mode, c) in s.iter() {
                let want = u0.get(mode) * (-nu * mode.eigenvalue(TAU) * t).exp();
                assert!((c - want).abs() <= 1e-14 * want.abs() + 1e-300, "{mode} at {t}");
            }
        }
    }

    #[test]
    fn steady_forcing_is_a_fixed_point() {
        let nu = 1.0;
        let mode = ModeIndex::new(1, 0, Variant::CosPlus).unwrap();
        let w = SpectralField::single_mode(TAU, 2, mode, 1.0).unwrap();
        let forcing = w.scaled(nu * mode.eigenvalue(TAU));
        let traj = integrate(&w, nu, |_, _| Ok(forcing.clone()), 1.0, &IntegratorConfig::new(1e-3)).unwrap();
        for s in traj.samples() {
            assert!(s.sub(&w).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn stride_keeps_every_nth_step() {
        let u0 = random_field(1.0, 2, 1, 0.0).unwrap();
        let zero = SpectralField::zeros(1.0, 2).unwrap();
        let fine = integrate(&u0, 0.01, |_, _| Ok(zero.clone()), 1.0, &IntegratorConfig::new(0.1)).unwrap();
        let coarse = integrate(
            &u0,
            0.01,
            |_, _| Ok(zero.clone()),
            1.0,
            &IntegratorConfig::new(0.1).with_stride(5),
        )
        .unwrap();
        assert_eq!(coarse.len(), 3);
        assert_eq!(coarse.h, 0.5);
        assert_eq!(&coarse.samples()[2], fine.last());
        assert!(integrate(&u0, 0.01, |_, _| Ok(zero.clone()), 1.0, &IntegratorConfig::new(0.1).with_stride(3)).is_err());
    }

    #[test]
    fn blow_up_reports_step() {
        let u0 = random_field(1.0, 2, 1, 0.0).unwrap();
        let err = integrate(
            &u0,
            1e-3,
            |c, _| Ok(c.scaled(0.0).add(&c.map_eigen(|_| 1.0).scaled(1e300)).unwrap()),
            1.0,
            &IntegratorConfig::new(0.1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err}");
    }

    #[test]
    fn step_must_divide_horizon() {
        assert!(step_count(1.0, 0.3).is_err());
        assert_eq!(step_count(2.0, 2e-3).unwrap(), 1000);
        assert_eq!(step_count(1.0, 1e-3).unwrap(), 1000);
        assert!(step_count(1.0, 0.0).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_cubics() {
        let h = 0.1;
        let cubic = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t + 3.0 * t * t * t;
        let traj = field_traj(h, 11, cubic);
        for t in [0.0, 0.03, 0.15, 0.55, 0.97, 1.0] {
            let v = value(&traj.sample_interpolate(t).unwrap());
            assert!((v - cubic(t)).abs() < 1e-12, "t = {t}");
        }
        // Grid points return the stored sample bit-for-bit.
        assert_eq!(traj.sample_interpolate(0.3).unwrap(), traj.samples()[3]);
        assert!(matches!(traj.sample_interpolate(1.2), Err(Error::Extrapolation { .. })));
        assert!(traj.sample_interpolate(-0.01).is_err());
    }

    #[test]
    fn interpolation_error_is_fourth_order() {
        let err = |h: f64| {
            let n = (1.0 / h).round() as usize + 1;
            let traj = field_traj(h, n, f64::sin);
            (0..n - 1)
                .map(|i| {
                    let t = (i as f64 + 0.5) * h;
                    (value(&traj.sample_interpolate(t).unwrap()) - t.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        // Lagrange bound with |f''''| <= 1: (3/128) h^4 in the interior
        // stencil, larger at the one-sided ends.
        assert!(e1 < 1e-9, "{e1}");
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.3, "{order}");
    }

    #[test]
    fn short_trajectories_interpolate_with_fewer_points() {
        let traj = field_traj(0.5, 2, |t| 2.0 + 4.0 * t);
        assert!((value(&traj.sample_interpolate(0.25).unwrap()) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn first_differences() {
        let constant = field_traj(0.1, 4, |_| 3.0);
        for i in 0..4 {
            assert_eq!(constant.time_derivative(i).unwrap().max_abs(), 0.0);
        }
        let linear = field_traj(0.25, 5, |t| 1.0 + 2.0 * t);
        for i in 0..5 {
            assert!((value(&linear.time_derivative(i).unwrap()) - 2.0).abs() < 1e-14);
        }
        let h = 1e-3;
        let sine = field_traj(h, 200, f64::sin);
        for i in 0..200 {
            let t = i as f64 * h;
            let d = value(&sine.time_derivative(i).unwrap());
            // |f''| <= 1, first-order one-sided stencil.
            assert!((d - t.cos()).abs() <= 1e-3, "t = {t}");
        }
        assert!(field_traj(0.1, 1, |_| 1.0).time_derivative(0).is_err());
    }
}
