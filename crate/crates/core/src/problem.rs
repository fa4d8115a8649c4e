use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::basis::SpectralField;
use crate::error::{Error, Result};
use crate::integrate::step_count;

/// Physical and numerical setup of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    /// Side of the periodic square.
    pub period: f64,
    /// Kinematic viscosity.
    pub nu: f64,
    /// Time-independent, band-limited forcing.
    pub forcing: SpectralField,
    /// Galerkin cutoff: the large scales are the modes with `j1, j2 <= m`.
    pub m: usize,
    /// Truncation of the small-scale space.
    pub m_out: usize,
    pub t_end: f64,
    pub h: f64,
    pub initial: SpectralField,
    /// Highest ladder level.
    pub levels: usize,
}

impl ProblemSpec {
    /// Spec with the default outer cutoff `2m`.
    pub fn new(
        nu: f64,
        forcing: SpectralField,
        initial: SpectralField,
        m: usize,
        t_end: f64,
        h: f64,
        levels: usize,
    ) -> Result<Self> {
        let spec = ProblemSpec {
            period: forcing.period(),
            nu,
            forcing,
            m,
            m_out: 2 * m,
            t_end,
            h,
            initial,
            levels,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_m_out(mut self, m_out: usize) -> Result<Self> {
        self.m_out = m_out;
        self.validate()?;
        Ok(self)
    }

    /// Same problem at another cutoff, keeping the outer cutoff ratio.
    pub fn with_cutoff(&self, m: usize) -> Result<Self> {
        let ratio = self.m_out as f64 / self.m as f64;
        let mut spec = self.clone();
        spec.m = m;
        spec.m_out = ((m as f64 * ratio).round() as usize).max(m);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad(format!("period must be positive, got {}", self.period));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if self.m < 1 {
            return bad("m must be at least 1".into());
        }
        if self.m_out < self.m {
            return bad(format!("m_out ({}) must be at least m ({})", self.m_out, self.m));
        }
        if !(self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.t_end >= self.h) {
            return bad(format!("T ({}) must be at least h ({})", self.t_end, self.h));
        }
        step_count(self.t_end, self.h).map_err(|e| Error::Config(e.to_string()))?;
        for (name, f) in [("forcing", &self.forcing), ("initial state", &self.initial)] {
            if f.period() != self.period {
                return bad(format!("{name} has period {} but the domain has {}", f.period(), self.period));
            }
            if !f.is_finite() {
                return bad(format!("{name} has non-finite coefficients"));
            }
        }
        if !self.forcing.supported_in_block(self.m_out) {
            return bad(format!(
                "forcing has modes beyond m_out = {}; raise m_out or band-limit the forcing",
                self.m_out
            ));
        }
        Ok(())
    }

    /// Stable fingerprint of every input that influences the numbers.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Echo<'a> {
            period: f64,
            nu: f64,
            m: usize,
            m_out: usize,
            t_end: f64,
            h: f64,
            levels: usize,
            forcing: &'a [f64],
            forcing_cutoff: usize,
            initial: &'a [f64],
            initial_cutoff: usize,
        }
        let echo = Echo {
            period: self.period,
            nu: self.nu,
            m: self.m,
            m_out: self.m_out,
            t_end: self.t_end,
            h: self.h,
            levels: self.levels,
            forcing: self.forcing.coeffs(),
            forcing_cutoff: self.forcing.cutoff(),
            initial: self.initial.coeffs(),
            initial_cutoff: self.initial.cutoff(),
        };
        let bytes = serde_json::to_vec(&echo).expect("plain data serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Forcing on every canonical mode with `lo <= j1, j2 <= hi`, coefficients
/// drawn uniformly from `[-amplitude, amplitude]` with a fixed seed.
pub fn band_forcing(period: f64, lo: usize, hi: usize, amplitude: f64, seed: u64) -> Result<SpectralField> {
    use rand::{Rng, SeedableRng};
    if lo > hi || hi == 0 {
        return Err(Error::InvalidArgument(format!("empty forcing band [{lo}, {hi}]")));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(period, hi)?;
    for mode in crate::basis::canonical_modes(hi) {
        if mode.j1 < lo || mode.j2 < lo {
            continue;
        }
        f.set(mode, amplitude * rng.gen_range(-1.0..=1.0))?;
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::random_field;

    fn base() -> ProblemSpec {
        let f = band_forcing(1.0, 1, 2, 1.0, 0).unwrap();
        let u0 = random_field(1.0, 3, 0, 1.0).unwrap();
        ProblemSpec::new(1.0, f, u0, 4, 1.0, 0.01, 2).unwrap()
    }

    #[test]
    fn defaults_and_validation() {
        let s = base();
        assert_eq!(s.m_out, 8);
        assert!(s.clone().with_m_out(3).is_err());
        let mut bad = s.clone();
        bad.nu = 0.0;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = s.clone();
        bad.h = 0.3;
        assert!(bad.validate().is_err());
        let mut bad = s.clone();
        bad.m_out = 1;
        bad.m = 1;
        assert!(bad.validate().is_err(), "forcing reaches j = 2");
        assert_eq!(s.with_cutoff(6).unwrap().m_out, 12);
    }

    #[test]
    fn fingerprint_tracks_inputs() {
        let a = base();
        let mut b = base();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.nu = 1.5;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn band_forcing_support() {
        let f = band_forcing(1.0, 1, 2, 0.5, 3).unwrap();
        assert!(f.iter().all(|(m, c)| (m.j1 >= 1 && m.j2 >= 1) || c == 0.0));
        assert!(f.max_abs() <= 0.5 && f.max_abs() > 0.0);
        assert_eq!(f.iter().filter(|(_, c)| *c != 0.0).count(), 16);
    }
}
