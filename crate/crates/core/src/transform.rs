//! Mapping between basis coefficients and collocation samples.
//!
//! Internally a real basis coefficient `c` of mode `w` with wavevector `k`
//! and unit polarization `e` becomes the pair of complex exponential
//! amplitudes
//!
//! ```text
//! sin:  u_hat(k) = -i a e,  u_hat(-k) = +i a e
//! cos:  u_hat(k) =    a e,  u_hat(-k) =    a e      with a = c / (sqrt(2) l)
//! ```
//!
//! and the inverse map reads the coefficient back as `-sqrt(2) l e . Im u_hat(k)`
//! or `sqrt(2) l e . Re u_hat(k)`. Dotting with `e` drops the component of
//! `u_hat(k)` along `k`, which is the Leray projection.
//!
//! Two real fields are always transformed together as `a + i b`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::basis::{canonical_modes, ModeIndex, SpectralField};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which real quantity of a field to place in a spectral buffer.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Component {
    /// Velocity component, 0 or 1.
    pub comp: usize,
    /// Optional derivative direction, 0 for `d/dx1`, 1 for `d/dx2`.
    pub deriv: Option<usize>,
}

impl Component {
    pub const fn value(comp: usize) -> Self {
        Component { comp, deriv: None }
    }

    pub const fn deriv(comp: usize, dir: usize) -> Self {
        Component {
            comp,
            deriv: Some(dir),
        }
    }
}

fn bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Complex amplitude of the `+k` exponential for one basis coefficient.
fn plus_amplitude(mode: &ModeIndex, c: f64, period: f64, what: Component) -> Complex64 {
    let (e1, e2) = mode.polarization();
    let e = if what.comp == 0 { e1 } else { e2 };
    let a = c * e / (SQRT_2 * period);
    let mut amp = if mode.variant.is_sine() {
        -I * a
    } else {
        Complex64::new(a, 0.0)
    };
    if let Some(dir) = what.deriv {
        let (k1, k2) = mode.wavevector();
        let kd = if dir == 0 { k1 } else { k2 } as f64;
        amp *= I * (2.0 * PI * kd / period);
    }
    amp
}

/// A square FFT grid with plans and scratch.
pub(crate) struct Grid2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Grid2 {
    pub fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Grid2 {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::default(); len],
            tmp: vec![Complex64::default(); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zeroed(&self) -> Vec<Complex64> {
        vec![Complex64::default(); self.n * self.n]
    }

    /// Add the `what` part of `field`, times `weight`, to a spectral buffer
    /// laid out as `[k2][k1]`.
    pub fn scatter(&self, buf: &mut [Complex64], field: &SpectralField, what: Component, weight: Complex64) {
        let n = self.n;
        for (mode, c) in field.iter() {
            if c == 0.0 {
                continue;
            }
            let amp = weight * plus_amplitude(&mode, c, field.period(), what);
            let amp_minus = weight * plus_amplitude(&mode, c, field.period(), what).conj();
            let (k1, k2) = mode.wavevector();
            buf[bin(k2, n) * n + bin(k1, n)] += amp;
            buf[bin(-k2, n) * n + bin(-k1, n)] += amp_minus;
        }
    }

    fn rows(&mut self, buf: &mut [Complex64], rows: &[std::ops::Range<usize>], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inverse } else { &self.forward };
        for r in rows {
            if r.is_empty() {
                continue;
            }
            plan.process_with_scratch(&mut buf[r.start * n..r.end * n], &mut self.scratch);
        }
    }

    fn transpose(&mut self, buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                self.tmp[j * n + i] = buf[i * n + j];
            }
        }
        buf.copy_from_slice(&self.tmp);
    }

    /// Rows `|k| <= kmax` of a length-`n` axis as contiguous ranges.
    fn band(&self, kmax: usize) -> Vec<std::ops::Range<usize>> {
        let n = self.n;
        if 2 * kmax + 1 >= n {
            vec![0..n]
        } else {
            vec![0..kmax + 1, n - kmax..n]
        }
    }

    /// Spectral `[k2][k1]` with `|k2| <= kmax` to physical samples laid out
    /// `[x1][x2]`, in place.
    pub fn to_physical(&mut self, buf: &mut [Complex64], kmax: usize) {
        let band = self.band(kmax);
        self.rows(buf, &band, true);
        self.transpose(buf);
        let all = [0..self.n];
        self.rows(buf, &all, true);
    }

    /// Physical `[x1][x2]` to spectral `[k2][k1]`, unnormalized, computing
    /// only the rows `|k2| <= kmax`.
    pub fn to_spectral(&mut self, buf: &mut [Complex64], kmax: usize) {
        let all = [0..self.n];
        self.rows(buf, &all, false);
        self.transpose(buf);
        let band = self.band(kmax);
        self.rows(buf, &band, false);
    }

    /// Read basis coefficients up to `extract` from the unnormalized spectrum
    /// of the packed physical field `v1 + i v2`.
    pub fn gather(&self, buf: &[Complex64], out: &mut SpectralField, extract: usize) {
        let n = self.n;
        let period = out.period();
        let norm = 1.0 / (n * n) as f64;
        for mode in canonical_modes(extract) {
            let (k1, k2) = mode.wavevector();
            let w_plus = buf[bin(k2, n) * n + bin(k1, n)];
            let w_minus = buf[bin(-k2, n) * n + bin(-k1, n)].conj();
            let v1 = (w_plus + w_minus) * 0.5 * norm;
            let v2 = (w_plus - w_minus) * (-0.5 * I) * norm;
            let (e1, e2) = mode.polarization();
            let c = if mode.variant.is_sine() {
                -SQRT_2 * period * (e1 * v1.im + e2 * v2.im)
            } else {
                SQRT_2 * period * (e1 * v1.re + e2 * v2.re)
            };
            let slot = SpectralField::slot_of(out.cutoff(), mode.j1, mode.j2, mode.variant);
            out.coeffs_mut()[slot] = c;
        }
    }
}

/// Smallest `n >= min` whose only prime factors are 2, 3 and 5.
pub(crate) fn fft_friendly(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

/// Velocity samples on the uniform `n x n` collocation grid
/// `x = (l i1 / n, l i2 / n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocitySamples {
    pub n: usize,
    pub period: f64,
    /// `u1` at `[i1 * n + i2]`.
    pub u1: Vec<f64>,
    /// `u2` at `[i1 * n + i2]`.
    pub u2: Vec<f64>,
}

impl VelocitySamples {
    pub fn at(&self, i1: usize, i2: usize) -> (f64, f64) {
        let k = i1 * self.n + i2;
        (self.u1[k], self.u2[k])
    }

    /// Midpoint quadrature of `|u|^2` over the period cell; exact for
    /// band-limited fields sampled without aliasing.
    pub fn energy_quadrature(&self) -> f64 {
        let cell = (self.period / self.n as f64).powi(2);
        self.u1
            .iter()
            .zip(&self.u2)
            .map(|(a, b)| a * a + b * b)
            .sum::<f64>()
            * cell
    }
}

fn check_grid(grid: usize, cutoff: usize) -> Result<()> {
    let required = 2 * cutoff + 2;
    if grid < required {
        return Err(Error::GridTooSmall { grid, required });
    }
    Ok(())
}

/// Pointwise velocity of `u` on a `grid x grid` collocation grid.
pub fn evaluate_physical(u: &SpectralField, grid: usize) -> Result<VelocitySamples> {
    check_grid(grid, u.cutoff())?;
    let mut planner = FftPlanner::new();
    let mut g = Grid2::new(&mut planner, grid);
    let mut buf = g.zeroed();
    g.scatter(&mut buf, u, Component::value(0), Complex64::new(1.0, 0.0));
    g.scatter(&mut buf, u, Component::value(1), I);
    g.to_physical(&mut buf, u.cutoff());
    Ok(VelocitySamples {
        n: grid,
        period: u.period(),
        u1: buf.iter().map(|z| z.re).collect(),
        u2: buf.iter().map(|z| z.im).collect(),
    })
}

/// Basis coefficients up to `cutoff` of sampled velocity data. Any
/// gradient part of the samples is discarded.
pub fn from_physical(samples: &VelocitySamples, cutoff: usize) -> Result<SpectralField> {
    check_grid(samples.n, cutoff)?;
    let n = samples.n;
    if samples.u1.len() != n * n || samples.u2.len() != n * n {
        return Err(Error::InvalidArgument("sample arrays do not match the grid".into()));
    }
    let mut planner = FftPlanner::new();
    let mut g = Grid2::new(&mut planner, n);
    let mut buf: Vec<Complex64> = samples
        .u1
        .iter()
        .zip(&samples.u2)
        .map(|(a, b)| Complex64::new(*a, *b))
        .collect();
    g.to_spectral(&mut buf, cutoff);
    let mut out = SpectralField::zeros(samples.period, cutoff)?;
    g.gather(&buf, &mut out, cutoff);
    Ok(out)
}
