//! Divergence-free trigonometric eigenbasis of the Stokes operator on the
//! periodic square `(0, l)^2`.
//!
//! Every basis function has the form
//!
//! ```text
//! w = (sqrt(2)/l) * (j2, -s*j1)/|j| * trig(2*pi*(j1*x1 + s*j2*x2)/l)
//! ```
//!
//! with `s = +1` for the "plus" variants, `s = -1` for the "minus" variants
//! and `trig` either `sin` or `cos`. The functions are orthonormal in
//! `L^2((0,l)^2)` and each one is an eigenfunction of `A = -Laplacian` with
//! eigenvalue `4*pi^2*(j1^2 + j2^2)/l^2`.
//!
//! On the axes (`j1 == 0` or `j2 == 0`) the plus and minus variants agree up
//! to sign, so only the plus variants are kept. With this convention the
//! canonical set up to cutoff `m` has exactly `4m^2 + 4m` members.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the four trigonometric functions attached to `(j1, j2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    SinPlus = 1,
    SinMinus = 2,
    CosPlus = 3,
    CosMinus = 4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::SinPlus,
        Variant::SinMinus,
        Variant::CosPlus,
        Variant::CosMinus,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Variant::SinPlus),
            2 => Some(Variant::SinMinus),
            3 => Some(Variant::CosPlus),
            4 => Some(Variant::CosMinus),
            _ => None,
        }
    }

    pub fn is_sine(self) -> bool {
        matches!(self, Variant::SinPlus | Variant::SinMinus)
    }

    pub fn is_plus(self) -> bool {
        matches!(self, Variant::SinPlus | Variant::CosPlus)
    }

    /// Sign `s` applied to `j2` in the phase `j1*x1 + s*j2*x2`.
    pub fn sign(self) -> i64 {
        if self.is_plus() {
            1
        } else {
            -1
        }
    }

    fn slot(self) -> usize {
        self as usize - 1
    }
}

/// One canonical basis function `w^{variant}_{j1,j2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub j1: usize,
    pub j2: usize,
    pub variant: Variant,
}

impl ModeIndex {
    pub fn new(j1: usize, j2: usize, variant: Variant) -> Result<Self> {
        if j1 == 0 && j2 == 0 {
            return Err(Error::InvalidMode {
                j1,
                j2,
                variant: variant.code(),
                reason: "the constant mode is not part of the space",
            });
        }
        if (j1 == 0 || j2 == 0) && !variant.is_plus() {
            return Err(Error::InvalidMode {
                j1,
                j2,
                variant: variant.code(),
                reason: "axis modes only carry the plus variants",
            });
        }
        Ok(ModeIndex { j1, j2, variant })
    }

    pub fn is_axis(&self) -> bool {
        self.j1 == 0 || self.j2 == 0
    }

    /// Largest of `j1`, `j2`; the smallest cutoff that contains the mode.
    pub fn order(&self) -> usize {
        self.j1.max(self.j2)
    }

    /// Integer wavevector `(j1, s*j2)` of the phase.
    pub fn wavevector(&self) -> (i64, i64) {
        (self.j1 as i64, self.variant.sign() * self.j2 as i64)
    }

    /// Unit polarization `(j2, -s*j1)/|j|`, orthogonal to the wavevector.
    pub fn polarization(&self) -> (f64, f64) {
        let (j1, j2) = (self.j1 as f64, self.j2 as f64);
        let norm = (j1 * j1 + j2 * j2).sqrt();
        let s = self.variant.sign() as f64;
        (j2 / norm, -s * j1 / norm)
    }

    pub fn eigenvalue(&self, period: f64) -> f64 {
        eigenvalue_unchecked(self.j1, self.j2, period)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})#{}", self.j1, self.j2, self.variant.code())
    }
}

fn eigenvalue_unchecked(j1: usize, j2: usize, period: f64) -> f64 {
    let k2 = (j1 * j1 + j2 * j2) as f64;
    4.0 * PI * PI * k2 / (period * period)
}

/// Eigenvalue `4 pi^2 (j1^2 + j2^2) / l^2` of `A = -Laplacian`.
pub fn eigenvalue(j1: usize, j2: usize, period: f64) -> Result<f64> {
    if j1 == 0 && j2 == 0 {
        return Err(Error::InvalidMode {
            j1,
            j2,
            variant: 0,
            reason: "the constant mode is not part of the space",
        });
    }
    check_period(period)?;
    Ok(eigenvalue_unchecked(j1, j2, period))
}

fn check_period(period: f64) -> Result<()> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "period must be positive and finite, got {period}"
        )));
    }
    Ok(())
}

/// All canonical modes with `max(j1, j2) <= cutoff`, ordered by `j1`, then
/// `j2`, then variant.
pub fn canonical_modes(cutoff: usize) -> impl Iterator<Item = ModeIndex> {
    (0..=cutoff).flat_map(move |j1| {
        (0..=cutoff).flat_map(move |j2| {
            Variant::ALL
                .into_iter()
                .filter_map(move |v| ModeIndex::new(j1, j2, v).ok())
        })
    })
}

/// Number of real unknowns in a Galerkin system with cutoff `m`.
pub fn dof_count(m: usize) -> usize {
    4 * m * m + 4 * m
}

/// Spectral quantities attached to a cutoff `m` and period `l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    /// Least eigenvalue `4 pi^2 / l^2`.
    pub lambda: f64,
    /// Least eigenvalue outside the retained block, `lambda (m+1)^2`.
    pub big_lambda: f64,
    /// Spectral gap parameter `lambda / big_lambda = 1/(m+1)^2`.
    pub delta: f64,
    /// `delta(m/2)` when `m` is even.
    pub delta1: Option<f64>,
    /// `1 + ln(2 m^2)`.
    pub log_factor: f64,
    /// `1 + ln(2 (m/2)^2)` when `m` is even.
    pub log_factor1: Option<f64>,
}

pub fn delta(m: usize) -> f64 {
    let mp1 = (m + 1) as f64;
    1.0 / (mp1 * mp1)
}

fn log_factor(m: usize) -> f64 {
    let m = m as f64;
    1.0 + (2.0 * m * m).ln()
}

pub fn spectral_params(m: usize, period: f64) -> Result<SpectralParams> {
    if m == 0 {
        return Err(Error::InvalidArgument("cutoff m must be at least 1".into()));
    }
    check_period(period)?;
    let lambda = 4.0 * PI * PI / (period * period);
    let mp1 = (m + 1) as f64;
    let half = (m % 2 == 0).then_some(m / 2);
    Ok(SpectralParams {
        lambda,
        big_lambda: lambda * mp1 * mp1,
        delta: delta(m),
        delta1: half.map(delta),
        log_factor: log_factor(m),
        log_factor1: half.map(log_factor),
    })
}

/// A velocity field in `H` stored as real coefficients over the canonical
/// basis, densely for every `(j1, j2, variant)` with `j1, j2 <= cutoff`.
///
/// Slots of non-canonical axis variants and of `(0,0)` exist in the table
/// but are always zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    period: f64,
    cutoff: usize,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(period: f64, cutoff: usize) -> Result<Self> {
        check_period(period)?;
        if cutoff == 0 {
            return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
        }
        Ok(SpectralField {
            period,
            cutoff,
            coeffs: vec![0.0; slots(cutoff)],
        })
    }

    pub fn single_mode(period: f64, cutoff: usize, mode: ModeIndex, amplitude: f64) -> Result<Self> {
        let mut f = Self::zeros(period, cutoff)?;
        f.set(mode, amplitude)?;
        Ok(f)
    }

    pub fn from_modes<I>(period: f64, cutoff: usize, modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeIndex, f64)>,
    {
        let mut f = Self::zeros(period, cutoff)?;
        for (mode, c) in modes {
            f.set(mode, c)?;
        }
        Ok(f)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Raw dense table, see [`SpectralField::slot_of`] for the layout.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Position of `(j1, j2, variant)` in the dense table.
    pub fn slot_of(cutoff: usize, j1: usize, j2: usize, variant: Variant) -> usize {
        (j1 * (cutoff + 1) + j2) * 4 + variant.slot()
    }

    pub fn get(&self, mode: ModeIndex) -> f64 {
        if mode.order() > self.cutoff {
            return 0.0;
        }
        self.coeffs[Self::slot_of(self.cutoff, mode.j1, mode.j2, mode.variant)]
    }

    pub fn set(&mut self, mode: ModeIndex, value: f64) -> Result<()> {
        if mode.order() > self.cutoff {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} lies beyond cutoff {}",
                self.cutoff
            )));
        }
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite coefficient for mode {mode}"
            )));
        }
        let slot = Self::slot_of(self.cutoff, mode.j1, mode.j2, mode.variant);
        self.coeffs[slot] = value;
        Ok(())
    }

    /// Canonical modes paired with their coefficients.
    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, f64)> + '_ {
        canonical_modes(self.cutoff).map(move |m| (m, self.get(m)))
    }

    /// Eigenvalue attached to every slot of the dense table (zero on the
    /// unused slots).
    pub fn slot_eigenvalues(period: f64, cutoff: usize) -> Vec<f64> {
        let mut out = vec![0.0; slots(cutoff)];
        for mode in canonical_modes(cutoff) {
            out[Self::slot_of(cutoff, mode.j1, mode.j2, mode.variant)] = mode.eigenvalue(period);
        }
        out
    }

    /// Copy zero-extended or truncated to `cutoff`.
    pub fn resized(&self, cutoff: usize) -> Result<Self> {
        if cutoff == self.cutoff {
            return Ok(self.clone());
        }
        let mut out = Self::zeros(self.period, cutoff)?;
        let keep = cutoff.min(self.cutoff);
        for j1 in 0..=keep {
            for j2 in 0..=keep {
                let src = Self::slot_of(self.cutoff, j1, j2, Variant::SinPlus);
                let dst = Self::slot_of(cutoff, j1, j2, Variant::SinPlus);
                out.coeffs[dst..dst + 4].copy_from_slice(&self.coeffs[src..src + 4]);
            }
        }
        Ok(out)
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.period != other.period {
            return Err(Error::PeriodMismatch(self.period, other.period));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_compatible(other)?;
        let cutoff = self.cutoff.max(other.cutoff);
        let a = self.resized(cutoff)?;
        let b = other.resized(cutoff)?;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| op(*x, *y)).collect();
        Ok(SpectralField {
            period: self.period,
            cutoff,
            coeffs,
        })
    }

    /// Sum; the result has the larger of the two cutoffs.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SpectralField {
            period: self.period,
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self += factor * other`; `other` must not exceed `self`'s cutoff
    /// outside zero coefficients.
    pub fn axpy(&mut self, factor: f64, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        if other.cutoff == self.cutoff {
            for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
                *a += factor * b;
            }
            return Ok(());
        }
        if other.cutoff > self.cutoff && !other.vanishes_beyond(self.cutoff) {
            return Err(Error::Support(format!(
                "cannot accumulate a cutoff-{} field into cutoff {}",
                other.cutoff, self.cutoff
            )));
        }
        let keep = self.cutoff.min(other.cutoff);
        for j1 in 0..=keep {
            for j2 in 0..=keep {
                let src = Self::slot_of(other.cutoff, j1, j2, Variant::SinPlus);
                let dst = Self::slot_of(self.cutoff, j1, j2, Variant::SinPlus);
                for i in 0..4 {
                    self.coeffs[dst + i] += factor * other.coeffs[src + i];
                }
            }
        }
        Ok(())
    }

    /// L^2 inner product.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let keep = self.cutoff.min(other.cutoff);
        let mut acc = 0.0;
        for j1 in 0..=keep {
            for j2 in 0..=keep {
                let a = Self::slot_of(self.cutoff, j1, j2, Variant::SinPlus);
                let b = Self::slot_of(other.cutoff, j1, j2, Variant::SinPlus);
                for i in 0..4 {
                    acc += self.coeffs[a + i] * other.coeffs[b + i];
                }
            }
        }
        Ok(acc)
    }

    fn weighted_norm(&self, power: i32) -> f64 {
        let mut acc = 0.0;
        for (mode, c) in self.iter() {
            let w = mode.eigenvalue(self.period).powi(power);
            acc += w * c * c;
        }
        acc.sqrt()
    }

    /// `|u|`, the L^2 norm.
    pub fn norm_l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `||u||`, the norm of grad u.
    pub fn norm_h1(&self) -> f64 {
        self.weighted_norm(1)
    }

    /// `|Laplacian u|`.
    pub fn norm_lap(&self) -> f64 {
        self.weighted_norm(2)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2 => self.norm_l2(),
            NormKind::H1 => self.norm_h1(),
            NormKind::Lap => self.norm_lap(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Multiply every coefficient by a function of its eigenvalue.
    pub fn map_eigen(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for mode in canonical_modes(self.cutoff) {
            let slot = Self::slot_of(self.cutoff, mode.j1, mode.j2, mode.variant);
            out.coeffs[slot] *= f(mode.eigenvalue(self.period));
        }
        out
    }

    /// `(nu A)^{-1} u`.
    pub fn inv_nu_a(&self, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
        }
        Ok(self.map_eigen(|lam| 1.0 / (nu * lam)))
    }

    /// `A u = -Laplacian u`.
    pub fn apply_a(&self) -> Self {
        self.map_eigen(|lam| lam)
    }

    /// True when every coefficient outside the block `j1, j2 <= m` is zero.
    pub fn supported_in_block(&self, m: usize) -> bool {
        self.vanishes_beyond(m)
    }

    fn vanishes_beyond(&self, m: usize) -> bool {
        self.iter().all(|(mode, c)| mode.order() <= m || c == 0.0)
    }

    /// True when every coefficient inside the block `j1, j2 <= m` is zero.
    pub fn vanishes_in_block(&self, m: usize) -> bool {
        self.iter().all(|(mode, c)| mode.order() > m || c == 0.0)
    }
}

fn slots(cutoff: usize) -> usize {
    (cutoff + 1) * (cutoff + 1) * 4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "L2")]
    L2,
    #[serde(rename = "H1")]
    H1,
    #[serde(rename = "LAP")]
    Lap,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L2, NormKind::H1, NormKind::Lap];

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L2 => "L2",
            NormKind::H1 => "H1",
            NormKind::Lap => "LAP",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L2" => Ok(NormKind::L2),
            "H1" => Ok(NormKind::H1),
            "LAP" => Ok(NormKind::Lap),
            _ => Err(Error::InvalidArgument(format!("unknown norm {s:?}"))),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Orthogonal projections onto blocks of the basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    /// Modes with `j1, j2 <= m`.
    Pm,
    /// Complement of `Pm` up to the field's cutoff.
    Qm,
    /// Modes with `j1, j2 <= m/2`; requires even `m`.
    Pp,
    /// `Pm - Pp`; requires even `m`.
    Pq,
}

/// Zero the coefficients outside the selected set; the cutoff is unchanged.
pub fn project(u: &SpectralField, which: Projection, m: usize) -> Result<SpectralField> {
    let n = match which {
        Projection::Pp | Projection::Pq => {
            if m % 2 != 0 {
                return Err(Error::OddCutoff(m));
            }
            m / 2
        }
        _ => 0,
    };
    let keep = |mode: &ModeIndex| {
        let o = mode.order();
        match which {
            Projection::Pm => o <= m,
            Projection::Qm => o > m,
            Projection::Pp => o <= n,
            Projection::Pq => o > n && o <= m,
        }
    };
    let mut out = u.clone();
    for mode in canonical_modes(u.cutoff) {
        if !keep(&mode) {
            let slot = SpectralField::slot_of(u.cutoff, mode.j1, mode.j2, mode.variant);
            out.coeffs[slot] = 0.0;
        }
    }
    Ok(out)
}

/// Deterministic pseudo-random field with `|c| <= (j1^2 + j2^2)^(-decay)`.
///
/// The magnitude envelope uses the eigenvalue relative to the least one, so
/// the same arguments give the same coefficients for every period.
pub fn random_field(period: f64, cutoff: usize, seed: u64, decay: f64) -> Result<SpectralField> {
    let mut field = SpectralField::zeros(period, cutoff)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for mode in canonical_modes(cutoff) {
        let k2 = (mode.j1 * mode.j1 + mode.j2 * mode.j2) as f64;
        let c = rng.gen_range(-1.0..=1.0) * k2.powf(-decay);
        field.set(mode, c)?;
    }
    Ok(field)
}
