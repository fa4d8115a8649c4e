//! The convective term `B(u, v) = (u . grad) v` expanded in the
//! divergence-free basis.
//!
//! Products are formed on a zero-padded collocation grid with at least
//! `cutoff(u) + cutoff(v) + cutoff(out) + 1` points per direction, which
//! makes every retained output coefficient exact for band-limited inputs.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::basis::{canonical_modes, ModeIndex, SpectralField};
use crate::error::{Error, Result};
use crate::transform::{fft_friendly, Component, Grid2};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Reusable FFT plans and scratch for evaluating convective terms.
///
/// A workspace is not `Sync`-shared; give each worker its own.
pub struct BilinearWorkspace {
    planner: FftPlanner<f64>,
    grids: HashMap<usize, Grid2>,
    fixed: Option<usize>,
}

impl Default for BilinearWorkspace {
    fn default() -> Self {
        Self::new()
    }
}

impl BilinearWorkspace {
    /// Workspace that picks the padded grid size per call.
    pub fn new() -> Self {
        BilinearWorkspace {
            planner: FftPlanner::new(),
            grids: HashMap::new(),
            fixed: None,
        }
    }

    /// Workspace pinned to one grid size; calls needing more padding fail
    /// with [`Error::GridTooSmall`].
    pub fn with_grid(n: usize) -> Self {
        BilinearWorkspace {
            fixed: Some(n),
            ..Self::new()
        }
    }

    /// Minimum padded grid for a product of the given cutoffs.
    pub fn required_grid(cut_u: usize, cut_v: usize, out: usize) -> usize {
        cut_u + cut_v + out.min(cut_u + cut_v) + 1
    }

    fn grid(&mut self, required: usize) -> Result<&mut Grid2> {
        let n = match self.fixed {
            Some(n) if n < required => return Err(Error::GridTooSmall { grid: n, required }),
            Some(n) => n,
            None => fft_friendly(required),
        };
        let planner = &mut self.planner;
        Ok(self.grids.entry(n).or_insert_with(|| Grid2::new(planner, n)))
    }

    /// `B(u, v)` truncated at `out_cutoff`.
    pub fn bilinear(&mut self, u: &SpectralField, v: &SpectralField, out_cutoff: usize) -> Result<SpectralField> {
        self.bilinear_sum(&[(u, v)], out_cutoff)
    }

    /// `sum_i B(u_i, v_i)` truncated at `out_cutoff`, with a single
    /// transform back to the basis.
    pub fn bilinear_sum(&mut self, pairs: &[(&SpectralField, &SpectralField)], out_cutoff: usize) -> Result<SpectralField> {
        let first = pairs
            .first()
            .ok_or_else(|| Error::InvalidArgument("no factors given".into()))?;
        if out_cutoff == 0 {
            return Err(Error::InvalidArgument("output cutoff must be at least 1".into()));
        }
        let period = first.0.period();
        let mut reach = 0;
        for (u, v) in pairs {
            u.check_compatible(v)?;
            first.0.check_compatible(u)?;
            reach = reach.max(u.cutoff() + v.cutoff());
        }
        // Coefficients above cutoff(u) + cutoff(v) vanish identically.
        let extract = out_cutoff.min(reach);
        let mut out = SpectralField::zeros(period, out_cutoff)?;
        let grid = self.grid(reach + extract + 1)?;
        let n = grid.n();

        let mut acc = grid.zeroed();
        let mut z1 = grid.zeroed();
        let mut z2 = grid.zeroed();
        let mut z3 = grid.zeroed();
        for (u, v) in pairs {
            for z in [&mut z1, &mut z2, &mut z3] {
                z.fill(Complex64::default());
            }
            // z1 = u1 + i u2, z2 = d1 v1 + i d2 v1, z3 = d1 v2 + i d2 v2
            grid.scatter(&mut z1, u, Component::value(0), ONE);
            grid.scatter(&mut z1, u, Component::value(1), I);
            grid.scatter(&mut z2, v, Component::deriv(0, 0), ONE);
            grid.scatter(&mut z2, v, Component::deriv(0, 1), I);
            grid.scatter(&mut z3, v, Component::deriv(1, 0), ONE);
            grid.scatter(&mut z3, v, Component::deriv(1, 1), I);
            grid.to_physical(&mut z1, u.cutoff());
            grid.to_physical(&mut z2, v.cutoff());
            grid.to_physical(&mut z3, v.cutoff());
            for k in 0..n * n {
                let (u1, u2) = (z1[k].re, z1[k].im);
                let b1 = u1 * z2[k].re + u2 * z2[k].im;
                let b2 = u1 * z3[k].re + u2 * z3[k].im;
                acc[k] += Complex64::new(b1, b2);
            }
        }
        grid.to_spectral(&mut acc, extract);
        grid.gather(&acc, &mut out, extract);
        Ok(out)
    }

    /// `b(u, v, w) = (B(u, v), w)`.
    pub fn trilinear(&mut self, u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64> {
        u.check_compatible(w)?;
        let b = self.bilinear(u, v, u.cutoff() + v.cutoff())?;
        b.dot(w)
    }
}

/// One-shot `B(u, v)` with a temporary workspace.
pub fn bilinear_b(u: &SpectralField, v: &SpectralField, out_cutoff: usize) -> Result<SpectralField> {
    BilinearWorkspace::new().bilinear(u, v, out_cutoff)
}

/// One-shot `b(u, v, w)`.
pub fn trilinear_b(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64> {
    BilinearWorkspace::new().trilinear(u, v, w)
}

/// Point values of a basis function and its gradient from the closed-form
/// trigonometric expressions.
struct ModeSample {
    /// `w` components.
    val: [f64; 2],
    /// `d w_i / d x_j` at `[i][j]`.
    grad: [[f64; 2]; 2],
}

fn sample_mode(mode: &ModeIndex, period: f64, x1: f64, x2: f64) -> ModeSample {
    let (k1, k2) = mode.wavevector();
    let (e1, e2) = mode.polarization();
    let scale = SQRT_2 / period;
    let phase = 2.0 * PI * (k1 as f64 * x1 + k2 as f64 * x2) / period;
    let (s, c) = phase.sin_cos();
    // d/dx of sin is cos, of cos is -sin, times 2 pi k / l.
    let (t, dt) = if mode.variant.is_sine() { (s, c) } else { (c, -s) };
    let kk = [2.0 * PI * k1 as f64 / period, 2.0 * PI * k2 as f64 / period];
    let e = [e1, e2];
    let mut grad = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            grad[i][j] = scale * e[i] * dt * kk[j];
        }
    }
    ModeSample {
        val: [scale * e1 * t, scale * e2 * t],
        grad,
    }
}

/// Reference evaluation of `B(u, v)` without any fast transform.
///
/// Builds `u` and `grad v` pointwise by summing the trigonometric basis
/// functions on a uniform grid fine enough for the quadrature of
/// `(B(u,v), w)` to be exact, then integrates against every output basis
/// function. Cost grows like the fourth power of the cutoffs; intended for
/// cutoffs up to about 12.
pub fn bilinear_b_oracle(u: &SpectralField, v: &SpectralField, out_cutoff: usize) -> Result<SpectralField> {
    u.check_compatible(v)?;
    let period = u.period();
    let mut out = SpectralField::zeros(period, out_cutoff)?;
    let nq = u.cutoff() + v.cutoff() + out_cutoff + 1;
    let h = period / nq as f64;
    let u_modes: Vec<_> = u.iter().filter(|(_, c)| *c != 0.0).collect();
    let v_modes: Vec<_> = v.iter().filter(|(_, c)| *c != 0.0).collect();
    let out_modes: Vec<_> = canonical_modes(out_cutoff).collect();
    let mut acc = vec![0.0; out_modes.len()];
    for i1 in 0..nq {
        for i2 in 0..nq {
            let (x1, x2) = (h * i1 as f64, h * i2 as f64);
            let mut uu = [0.0; 2];
            for (mode, c) in &u_modes {
                let s = sample_mode(mode, period, x1, x2);
                uu[0] += c * s.val[0];
                uu[1] += c * s.val[1];
            }
            let mut gv = [[0.0; 2]; 2];
            for (mode, c) in &v_modes {
                let s = sample_mode(mode, period, x1, x2);
                for i in 0..2 {
                    for j in 0..2 {
                        gv[i][j] += c * s.grad[i][j];
                    }
                }
            }
            let b = [
                uu[0] * gv[0][0] + uu[1] * gv[0][1],
                uu[0] * gv[1][0] + uu[1] * gv[1][1],
            ];
            for (slot, mode) in out_modes.iter().enumerate() {
                let w = sample_mode(mode, period, x1, x2);
                acc[slot] += b[0] * w.val[0] + b[1] * w.val[1];
            }
        }
    }
    for (mode, a) in out_modes.iter().zip(acc) {
        // Contributions above cutoff(u) + cutoff(v) are quadrature noise.
        if mode.order() <= u.cutoff() + v.cutoff() {
            out.set(*mode, a * h * h)?;
        }
    }
    Ok(out)
}
