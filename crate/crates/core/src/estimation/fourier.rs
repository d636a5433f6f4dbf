//! Fourier-series posterior: `P(φ) = Σ_k p_k e^{ikφ}` with `p_{−k} = p_k*`.
//!
//! Only harmonics `k ≥ 0` are stored. A Ramsey likelihood with sensing time
//! `t · τ_min` has harmonics `0` and `±t`, so an update couples each stored
//! coefficient to its neighbours at distance `t`:
//!
//! ```text
//! p_k ← a_μ p_k + h [e^{i(μπ+ϑ)} p_{k−t} + e^{−i(μπ+ϑ)} p_{k+t}]
//! a_μ = (1 + (−1)^μ (F0 − F1))/2,   h = (F0 + F1 − 1)/4 · exp(−(τ/T2*)²)
//! ```
//!
//! followed by rescaling so that `p_0 = 1/(2π)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::model::{MeasurementModel, Outcome, RamseySetting};
use super::CircularDistribution;
use crate::error::{invalid, Error, Result};

const P0: f64 = 1.0 / TAU;

/// Sparse set of nonnegative-index Fourier coefficients, sorted by index.
/// Index 0 is always present and equal to `1/(2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDistribution {
    coeffs: Vec<(usize, Complex64)>,
}

impl Default for FourierDistribution {
    fn default() -> Self {
        Self::uniform()
    }
}

impl FourierDistribution {
    pub fn uniform() -> Self {
        Self {
            coeffs: vec![(0, Complex64::new(P0, 0.0))],
        }
    }

    /// Builds a distribution from `(k, p_k)` pairs with `k ≥ 0`.
    ///
    /// The coefficients are rescaled so that `p_0 = 1/(2π)`; the result is
    /// rejected if any `|p_k|` then exceeds `p_0`, which no density allows.
    pub fn from_coefficients(pairs: impl IntoIterator<Item = (usize, Complex64)>) -> Result<Self> {
        let mut coeffs: Vec<(usize, Complex64)> = pairs.into_iter().collect();
        coeffs.sort_by_key(|&(k, _)| k);
        if coeffs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("coeffs", "duplicate harmonic index"));
        }
        let Some(&(0, c0)) = coeffs.first() else {
            return Err(invalid("coeffs", "harmonic 0 is required"));
        };
        if !(c0.re > 0.0) || c0.im != 0.0 {
            return Err(invalid("coeffs", "p_0 must be real and positive"));
        }
        let scale = P0 / c0.re;
        for (k, c) in coeffs.iter_mut() {
            *c *= scale;
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(invalid("coeffs", format!("non-finite coefficient at k={k}")));
            }
            if c.norm() > P0 * (1.0 + 1e-12) {
                return Err(invalid("coeffs", format!("|p_{k}| exceeds 1/(2π)")));
            }
        }
        coeffs[0].1 = Complex64::new(P0, 0.0);
        Ok(Self { coeffs })
    }

    /// Number of stored coefficients (including `k = 0`).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_index(&self) -> usize {
        self.coeffs.last().map(|&(k, _)| k).unwrap_or(0)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.iter().map(|&(k, _)| k)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.coeffs.iter().copied()
    }

    /// `p_k` for any signed `k`, using conjugate symmetry for negative indices.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        if k < 0 {
            self.stored(k.unsigned_abs() as usize).conj()
        } else {
            self.stored(k as usize)
        }
    }

    #[inline]
    fn stored(&self, k: usize) -> Complex64 {
        match self.coeffs.binary_search_by_key(&k, |&(i, _)| i) {
            Ok(pos) => self.coeffs[pos].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    #[inline]
    fn signed(&self, k: usize, shift: usize, up: bool) -> Complex64 {
        if up {
            self.stored(k + shift)
        } else if k >= shift {
            self.stored(k - shift)
        } else {
            self.stored(shift - k).conj()
        }
    }

    /// Unnormalized post-measurement coefficient at harmonic `k`.
    #[inline]
    pub(crate) fn raw_updated(&self, k: usize, a: f64, h: f64, rot: Complex64, t: usize) -> Complex64 {
        let down = self.signed(k, t, false);
        let up = self.signed(k, t, true);
        self.stored(k) * a + (rot * down + rot.conj() * up) * h
    }

    /// Every harmonic that can be nonzero after an update with sensing time `t`.
    pub fn reachable_indices(&self, t_units: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.coeffs.len() * 3);
        for &(k, _) in &self.coeffs {
            out.push(k);
            out.push(k + t_units);
            out.push(k.abs_diff(t_units));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Bayesian update keeping every reachable harmonic.
    pub fn update(
        &self,
        outcome: Outcome,
        setting: RamseySetting,
        model: &MeasurementModel,
    ) -> Result<Self> {
        let keep = self.reachable_indices(setting.t_units);
        self.update_within(outcome, setting, model, &keep)
    }

    /// Bayesian update computing only the harmonics in `keep`.
    ///
    /// `keep` must be sorted ascending, unique, and start with 0. Each output
    /// coefficient depends only on `p_k` and `p_{k±t}`, so the values are
    /// identical to those of a full update followed by trimming.
    pub fn update_within(
        &self,
        outcome: Outcome,
        setting: RamseySetting,
        model: &MeasurementModel,
        keep: &[usize],
    ) -> Result<Self> {
        if keep.first() != Some(&0) {
            return Err(Error::MissingHarmonic(0));
        }
        let t = setting.t_units;
        let a = model.offset(outcome);
        let h = 0.5 * model.visibility(t);
        let rot = Complex64::from_polar(1.0, outcome.phase_shift() + setting.theta);

        // normalization P(μ) = 2π · Re(c_0); c_0 is real up to rounding
        let norm = TAU * self.raw_updated(0, a, h, rot, t).re;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let inv = norm.recip();
        let mut coeffs = Vec::with_capacity(keep.len());
        coeffs.push((0, Complex64::new(P0, 0.0)));
        for &k in &keep[1..] {
            coeffs.push((k, self.raw_updated(k, a, h, rot, t) * inv));
        }
        Ok(Self { coeffs })
    }

    /// Drops every coefficient not in `keep`; `keep` must contain 0.
    pub fn retain(&self, keep: &[usize]) -> Result<Self> {
        if !keep.contains(&0) {
            return Err(Error::MissingHarmonic(0));
        }
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .copied()
                .filter(|(k, _)| sorted.binary_search(k).is_ok())
                .collect(),
        })
    }

    /// Density at a single phase by direct summation.
    pub fn density_at(&self, phi: f64) -> f64 {
        let mut acc = P0;
        for &(k, c) in &self.coeffs[1..] {
            acc += 2.0 * (c * Complex64::from_polar(1.0, k as f64 * phi)).re;
        }
        acc
    }

    /// Complex density `Σ_k p_k e^{ikφ}` on the grid `φ_j = −π + 2πj/M`,
    /// evaluated with an inverse FFT. The imaginary part is rounding noise for
    /// a valid distribution. Requires `M > 2 · max_index` to avoid aliasing.
    pub fn complex_density_on_grid(&self, grid_size: usize) -> Result<Vec<Complex64>> {
        if grid_size <= 2 * self.max_index() {
            return Err(invalid(
                "grid_size",
                format!("must exceed twice the largest harmonic ({})", self.max_index()),
            ));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); grid_size];
        for &(k, c) in &self.coeffs {
            // e^{ik(−π + 2πj/M)} = (−1)^k e^{2πi kj/M}
            let c = if k % 2 == 1 { -c } else { c };
            buf[k] += c;
            if k > 0 {
                buf[grid_size - k] += c.conj();
            }
        }
        FftPlanner::new().plan_fft_inverse(grid_size).process(&mut buf);
        Ok(buf)
    }

    /// Real density on the uniform grid `φ_j = −π + 2πj/M`.
    pub fn density_on_grid(&self, grid_size: usize) -> Result<Vec<f64>> {
        Ok(self
            .complex_density_on_grid(grid_size)?
            .into_iter()
            .map(|z| z.re)
            .collect())
    }
}

impl CircularDistribution for FourierDistribution {
    fn moment(&self, harmonic: usize) -> Complex64 {
        // ∫ Σ p_k e^{ikφ} e^{inφ} dφ = 2π p_{−n}
        self.stored(harmonic).conj() * TAU
    }
}

/// Fourier-form Bayesian update keeping all reachable harmonics.
pub fn fourier_update(
    dist: &FourierDistribution,
    outcome: Outcome,
    setting: RamseySetting,
    model: &MeasurementModel,
) -> Result<FourierDistribution> {
    dist.update(outcome, setting, model)
}
