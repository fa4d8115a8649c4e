//! Resolved pseudo-spectral integration of the full equation, used as the
//! error oracle, plus closed-form single-mode solutions.

use serde::{Deserialize, Serialize};

use crate::basis::{ModeIndex, SpectralField};
use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorConfig, Provenance, Trajectory};
use crate::nonlinear::BilinearWorkspace;
use crate::problem::ProblemSpec;

/// Integrate `u' + nu A u + B(u, u) = f` on all modes up to `m_ref` with
/// step `h_ref`, keeping samples on the grid of `spec.h` when `h_ref`
/// divides it.
pub fn run_reference(spec: &ProblemSpec, m_ref: usize, h_ref: f64) -> Result<Trajectory> {
    spec.validate()?;
    if m_ref < 2 * spec.m_out {
        return Err(Error::InvalidArgument(format!(
            "reference cutoff {m_ref} is below 2 m_out = {}",
            2 * spec.m_out
        )));
    }
    if !(h_ref > 0.0 && h_ref <= spec.h * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "reference step {h_ref} must be positive and at most h = {}",
            spec.h
        )));
    }
    run_full(spec, m_ref, h_ref)
}

/// Same as [`run_reference`] without the cutoff checks against the ladder.
pub fn run_full(spec: &ProblemSpec, m_ref: usize, h_ref: f64) -> Result<Trajectory> {
    let ratio = spec.h / h_ref;
    let stride = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        1
    };
    let forcing = spec.forcing.resized(m_ref)?;
    let u0 = spec.initial.resized(m_ref)?;
    let mut ws = BilinearWorkspace::new();
    let cfg = IntegratorConfig::new(h_ref).with_stride(stride);
    let mut traj = integrate(
        &u0,
        spec.nu,
        |u, _| {
            let b = ws.bilinear(u, u, m_ref)?;
            forcing.sub(&b)
        },
        spec.t_end,
        &cfg,
    )?;
    traj.meta = Provenance {
        producer: "reference".into(),
        level: None,
        component: Some("u".into()),
        config_hash: spec.fingerprint(),
    };
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialKind {
    /// `u(t) = a exp(-nu lambda t) w` with `f = 0`.
    Decay,
    /// `u = a w` with `f = a nu lambda w`.
    Steady,
}

/// Exact solution built on a single basis function, whose self-advection
/// vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecialSolution {
    pub kind: SpecialKind,
    pub mode: ModeIndex,
    pub amplitude: f64,
    pub nu: f64,
    pub period: f64,
}

impl SpecialSolution {
    pub fn new(kind: SpecialKind, mode: ModeIndex, amplitude: f64, nu: f64, period: f64) -> Self {
        SpecialSolution {
            kind,
            mode,
            amplitude,
            nu,
            period,
        }
    }

    fn rate(&self) -> f64 {
        self.nu * self.mode.eigenvalue(self.period)
    }

    pub fn forcing(&self, cutoff: usize) -> Result<SpectralField> {
        let a = match self.kind {
            SpecialKind::Decay => 0.0,
            SpecialKind::Steady => self.amplitude * self.rate(),
        };
        let mut f = SpectralField::zeros(self.period, cutoff)?;
        if a != 0.0 {
            f.set(self.mode, a)?;
        }
        Ok(f)
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        match self.kind {
            SpecialKind::Decay => self.amplitude * (-self.rate() * t).exp(),
            SpecialKind::Steady => self.amplitude,
        }
    }

    pub fn state_at(&self, t: f64, cutoff: usize) -> Result<SpectralField> {
        SpectralField::single_mode(self.period, cutoff, self.mode, self.amplitude_at(t))
    }

    /// `d/dt` of the closed form.
    pub fn rate_of_change_at(&self, t: f64, cutoff: usize) -> Result<SpectralField> {
        let d = match self.kind {
            SpecialKind::Decay => -self.rate() * self.amplitude_at(t),
            SpecialKind::Steady => 0.0,
        };
        SpectralField::single_mode(self.period, cutoff, self.mode, d)
    }

    /// Closed form sampled at `i * h`, `i = 0..count`.
    pub fn trajectory(&self, h: f64, count: usize, cutoff: usize) -> Result<Trajectory> {
        let samples = (0..count)
            .map(|i| self.state_at(i as f64 * h, cutoff))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(0.0, h, samples, Provenance::new("exact"))
    }

    /// A problem whose exact solution is this closed form.
    pub fn problem(&self, m: usize, t_end: f64, h: f64, levels: usize) -> Result<ProblemSpec> {
        let cutoff = m.max(self.mode.order());
        ProblemSpec::new(
            self.nu,
            self.forcing(cutoff)?,
            self.state_at(0.0, cutoff)?,
            m,
            t_end,
            h,
            levels,
        )
    }
}
