//! Degenerate density profiles `ρ(z) = (s_δ(z) + ε)^α` on the torus.
//!
//! On the physical strip the profile is `(z + ε)^α`; its even extension
//! `(|z| + ε)^α` has kinks at `z = 0` and at the seam `z = ±1`. Both kinks
//! are smoothed on a scale `δ` by replacing `|z|` with
//!
//! ```text
//! s_δ(z) = δ·h(|z|/δ)          for |z| ≤ δ,
//!          |z|                  for δ ≤ |z| ≤ 1-δ,
//!          1 - δ·h((1-|z|)/δ)   for |z| ≥ 1-δ,
//! ```
//!
//! where `h(y) = (5 + 15y² - 5y⁴ + y⁶)/16` is the unique even sextic with
//! `h(1) = h'(1) = 1` and `h''(1) = h'''(1) = 0`, so `s_δ` is C³ on the
//! whole torus (and exactly `|z|` when `δ = 0`). `h(0) = 5/16 > 0` keeps
//! `s_δ` strictly positive for `δ > 0`, and `s_δ` increases from `5δ/16`
//! at `z = 0` to `1 - 5δ/16` at the seam, which gives closed-form density
//! bounds.
//!
//! [`DensityProfile::spectrum`] computes the order-`m_ρ` cosine
//! coefficients by composite Gauss–Legendre panels split at the patch
//! boundaries and geometrically graded toward `z = 0`, so the returned
//! coefficients are accurate to round-off and independent of resolution
//! choices. Everything downstream (operator assembly, products) consumes
//! only this band-limited spectrum, never raw point values of `ρ`.

use crate::basis::{Parity, SpectralField};
use crate::quadrature::Rule;
use crate::{Result, SolverError};
use num_complex::Complex64;

/// The even sextic patch `h` and its derivatives on `[0, 1]`.
fn patch(y: f64) -> f64 {
    (5.0 + y * y * (15.0 + y * y * (-5.0 + y * y))) / 16.0
}

fn patch_d1(y: f64) -> f64 {
    y * (30.0 + y * y * (-20.0 + 6.0 * y * y)) / 16.0
}

fn patch_d2(y: f64) -> f64 {
    (30.0 + y * y * (-60.0 + 30.0 * y * y)) / 16.0
}

/// A degenerate density profile, even and 2-periodic in `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    /// Degeneracy exponent `α ≥ 0`.
    pub alpha: f64,
    /// Floor `ε ≥ 0` keeping the profile positive (with `δ = 0`, `ε = 0`
    /// the profile vanishes at `z = 0`).
    pub eps: f64,
    /// Kink-smoothing scale `0 ≤ δ ≤ 0.45`; `0` means no smoothing.
    pub delta: f64,
    /// Truncation order of the density spectrum used in products.
    pub m_rho: usize,
}

impl DensityProfile {
    pub fn new(alpha: f64, eps: f64, delta: f64, m_rho: usize) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(SolverError::InvalidParameter(format!(
                "density exponent must be finite and nonnegative, got {alpha}"
            )));
        }
        if !eps.is_finite() || eps < 0.0 {
            return Err(SolverError::InvalidParameter(format!(
                "density floor must be finite and nonnegative, got {eps}"
            )));
        }
        if !delta.is_finite() || delta < 0.0 || delta > 0.45 {
            return Err(SolverError::InvalidParameter(format!(
                "smoothing scale must lie in [0, 0.45], got {delta}"
            )));
        }
        if eps == 0.0 && delta == 0.0 && alpha > 0.0 {
            // Allowed: the profile touches zero at z = 0. Downstream
            // positivity of the band-limited spectrum is checked at
            // system construction, not here.
        }
        Ok(DensityProfile {
            alpha,
            eps,
            delta,
            m_rho,
        })
    }

    /// Wrap to the fundamental cell `[-1, 1)`; in-range values pass
    /// through bit-exactly.
    fn wrap(z: f64) -> f64 {
        if (-1.0..1.0).contains(&z) {
            return z;
        }
        let t = (z + 1.0).rem_euclid(2.0) - 1.0;
        if t >= 1.0 {
            -1.0
        } else {
            t
        }
    }

    /// The C³ mollified distance `s_δ(z)`.
    pub fn smoothed_distance(&self, z: f64) -> f64 {
        let a = Self::wrap(z).abs();
        let d = self.delta;
        if d == 0.0 {
            a
        } else if a <= d {
            d * patch(a / d)
        } else if a >= 1.0 - d {
            1.0 - d * patch((1.0 - a) / d)
        } else {
            a
        }
    }

    /// `d s_δ / dz` (odd in `z`).
    pub fn smoothed_distance_dz(&self, z: f64) -> f64 {
        let zw = Self::wrap(z);
        let a = zw.abs();
        let sign = if zw >= 0.0 { 1.0 } else { -1.0 };
        let d = self.delta;
        let da = if d == 0.0 {
            1.0
        } else if a <= d {
            patch_d1(a / d)
        } else if a >= 1.0 - d {
            patch_d1((1.0 - a) / d)
        } else {
            1.0
        };
        sign * da
    }

    /// `d² s_δ / dz²` (even in `z`).
    pub fn smoothed_distance_dzz(&self, z: f64) -> f64 {
        let a = Self::wrap(z).abs();
        let d = self.delta;
        if d == 0.0 {
            0.0
        } else if a <= d {
            patch_d2(a / d) / d
        } else if a >= 1.0 - d {
            -patch_d2((1.0 - a) / d) / d
        } else {
            0.0
        }
    }

    /// Pointwise density `(s_δ(z) + ε)^α`.
    pub fn eval(&self, z: f64) -> f64 {
        (self.smoothed_distance(z) + self.eps).powf(self.alpha)
    }

    /// Exact `(min, max)` of the density over the torus.
    ///
    /// `s_δ` increases from `5δ/16` at `z = 0` to `1 - 5δ/16` at the seam,
    /// so the extrema are attained there.
    pub fn bounds(&self) -> (f64, f64) {
        let s_min = if self.delta == 0.0 {
            0.0
        } else {
            self.delta * patch(0.0)
        };
        let s_max = if self.delta == 0.0 {
            1.0
        } else {
            1.0 - self.delta * patch(0.0)
        };
        let lo = (s_min + self.eps).powf(self.alpha);
        let hi = (s_max + self.eps).powf(self.alpha);
        if self.alpha == 0.0 {
            (1.0, 1.0)
        } else {
            (lo, hi)
        }
    }

    /// Panel edges on `[0, 1]` resolving the patch boundaries and the
    /// steep layer near `z = 0`, plus a uniform background fine enough
    /// for the oscillation of `cos(πk₂z)` up to `k₂ = m_ρ`.
    fn panel_edges(&self) -> Vec<f64> {
        let mut edges = vec![0.0, 1.0];
        if self.delta > 0.0 {
            edges.push(self.delta);
            edges.push(1.0 - self.delta);
        }
        // Geometric grading from the steepness scale near z = 0.
        let t0 = self.delta.max(self.eps).max(1e-9);
        let mut e = t0;
        while e < 0.1 {
            edges.push(e);
            e *= 2.0;
        }
        // Uniform background for the oscillatory factor.
        let n_u = self.m_rho + 8;
        for j in 1..n_u {
            edges.push(j as f64 / n_u as f64);
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        edges
    }

    /// Order-`m_ρ` cosine spectrum of the density (x-independent row).
    ///
    /// Torus coefficients of an even profile: `a₀ = ∫₀¹ ρ dz` and
    /// `a_{k₂} = 2∫₀¹ ρ cos(πk₂z) dz` for `k₂ ≥ 1`.
    pub fn spectrum(&self) -> SpectralField {
        let rule = Rule::composite(&self.panel_edges(), 14);
        let mut field = SpectralField::zero(self.m_rho, Parity::Cos);
        for k2 in 0..=self.m_rho {
            let integral = rule.integrate(|z| self.eval(z) * (crate::basis::PI * k2 as f64 * z).cos());
            let a = if k2 == 0 { integral } else { 2.0 * integral };
            field.set_mode(0, k2, Complex64::new(a, 0.0));
        }
        field
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::GridSampling;
    use approx::assert_relative_eq;

    #[test]
    fn delta_zero_is_exactly_absolute_value() {
        let p = DensityProfile::new(2.0, 0.1, 0.0, 8).unwrap();
        assert_eq!(p.smoothed_distance(0.3), 0.3);
        assert_eq!(p.smoothed_distance(-0.3), 0.3);
        assert_eq!(p.smoothed_distance(0.0), 0.0);
        assert_eq!(p.eval(0.5), 0.6f64.powi(2));
    }

    #[test]
    fn closed_form_bounds() {
        // (ε^α, (1+ε)^α) with no smoothing.
        let p = DensityProfile::new(2.0, 1.0, 0.0, 4).unwrap();
        assert_eq!(p.bounds(), (1.0, 4.0));
        let p = DensityProfile::new(3.0, 0.1, 0.0, 4).unwrap();
        let (lo, hi) = p.bounds();
        assert_relative_eq!(lo, 1e-3, max_relative = 1e-12);
        assert_relative_eq!(hi, 1.331, max_relative = 1e-12);
        // α = 0 is the constant profile.
        let p = DensityProfile::new(0.0, 0.2, 0.0, 4).unwrap();
        assert_eq!(p.bounds(), (1.0, 1.0));
        // With smoothing the extremes move to 5δ/16 and 1 - 5δ/16.
        let p = DensityProfile::new(1.0, 0.0, 0.16, 4).unwrap();
        assert_relative_eq!(p.bounds().0, 0.05, max_relative = 1e-12);
        assert_relative_eq!(p.bounds().1, 0.95, max_relative = 1e-12);
        // And they are genuine pointwise extrema.
        let samples: Vec<f64> = (0..2000).map(|i| -1.0 + i as f64 / 1000.0).collect();
        let p = DensityProfile::new(1.7, 0.05, 0.2, 4).unwrap();
        let (lo, hi) = p.bounds();
        for &z in &samples {
            let v = p.eval(z);
            assert!(v >= lo - 1e-14 && v <= hi + 1e-14, "z = {z}: {v} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn patch_matches_absolute_value_to_third_order() {
        assert_eq!(patch(1.0), 1.0);
        assert_eq!(patch_d1(1.0), 1.0);
        assert_eq!(patch_d2(1.0), 0.0);
        // h''' (y) = (-120y + 120y³)/16 vanishes at y = 1 as well.
        let d3 = |y: f64| (-120.0 * y + 120.0 * y * y * y) / 16.0;
        assert_eq!(d3(1.0), 0.0);
        assert_eq!(patch(0.0), 5.0 / 16.0);
        assert_eq!(patch_d1(0.0), 0.0);
    }

    #[test]
    fn smoothed_distance_is_c3_across_patch_boundaries() {
        let p = DensityProfile::new(1.0, 0.0, 0.2, 4).unwrap();
        let s = |z: f64| p.smoothed_distance(z);
        // Values and first two analytic derivatives are continuous across
        // both patch boundaries.
        for &z0 in &[0.2f64, 0.8] {
            let (l, r) = (z0 * (1.0 - 1e-9), z0 * (1.0 + 1e-9));
            assert!((s(l) - s(r)).abs() < 1e-8);
            assert!((p.smoothed_distance_dz(l) - p.smoothed_distance_dz(r)).abs() < 1e-7);
            assert!((p.smoothed_distance_dzz(l) - p.smoothed_distance_dzz(r)).abs() < 1e-6);
        }
        // Third central difference straddling z = δ converges to the
        // continuous limit s'''(δ) = 0 linearly in h (the fourth
        // derivative jumps there, nothing lower). A genuine jump in s'''
        // would pin this quantity at an h-independent O(1/δ²) value.
        let d3 = |z0: f64, h: f64| {
            (s(z0 + 2.0 * h) - 2.0 * s(z0 + h) + 2.0 * s(z0 - h) - s(z0 - 2.0 * h))
                / (2.0 * h * h * h)
        };
        assert!(d3(0.2, 1e-3).abs() < 3.0, "d3(1e-3) = {}", d3(0.2, 1e-3));
        assert!(d3(0.2, 1e-4).abs() < 0.3, "d3(1e-4) = {}", d3(0.2, 1e-4));
        // Contrast: with δ = 0 the same machinery detects the kink at the
        // second difference already.
        let kinked = DensityProfile::new(1.0, 0.0, 0.0, 4).unwrap();
        let h = 1e-3;
        let d2_at_zero = (kinked.smoothed_distance(h) - 2.0 * kinked.smoothed_distance(0.0)
            + kinked.smoothed_distance(-h))
            / (h * h);
        assert!(d2_at_zero > 100.0, "unmollified kink went undetected");
        // Analytic derivative consistency on both patches and the middle.
        for &z in &[0.05, 0.1, 0.5, 0.85, 0.95, -0.07, -0.93] {
            let num = (s(z + 1e-6) - s(z - 1e-6)) / 2e-6;
            assert_relative_eq!(num, p.smoothed_distance_dz(z), epsilon = 1e-8);
            let num2 = (p.smoothed_distance_dz(z + 1e-6) - p.smoothed_distance_dz(z - 1e-6)) / 2e-6;
            assert_relative_eq!(num2, p.smoothed_distance_dzz(z), epsilon = 1e-6, max_relative = 1e-5);
        }
    }

    #[test]
    fn seam_is_even_and_periodic() {
        let p = DensityProfile::new(2.5, 0.01, 0.1, 8).unwrap();
        for &z in &[0.3, 0.97, 0.999, 1.0] {
            assert_relative_eq!(p.eval(z), p.eval(-z), max_relative = 1e-14);
            assert_relative_eq!(p.eval(z), p.eval(z + 2.0), max_relative = 1e-14);
            assert_relative_eq!(p.eval(z), p.eval(z - 2.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn mean_coefficient_matches_closed_form() {
        // δ = 0: a₀ = ∫₀¹ (z+ε)^α dz = ((1+ε)^{α+1} - ε^{α+1}) / (α+1).
        for &(alpha, eps) in &[(2.0, 0.0), (1.5, 0.1), (3.0, 1e-4), (0.5, 1e-6)] {
            let p = DensityProfile::new(alpha, eps, 0.0, 16).unwrap();
            let spec = p.spectrum();
            let exact = ((1.0 + eps).powf(alpha + 1.0) - eps.powf(alpha + 1.0)) / (alpha + 1.0);
            assert_relative_eq!(spec.coeff(0, 0).re, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn first_harmonic_matches_closed_form_for_linear_profile() {
        // α = 1, δ = 0: a₁ = 2∫₀¹ (z+ε)cos(πz) dz = -4/π² for any ε.
        let p = DensityProfile::new(1.0, 0.37, 0.0, 8).unwrap();
        let spec = p.spectrum();
        let exact = -4.0 / (crate::basis::PI * crate::basis::PI);
        assert_relative_eq!(spec.coeff(0, 1).re, exact, max_relative = 1e-12);
    }

    #[test]
    fn spectrum_is_resolution_independent() {
        // Doubling the order must reproduce the shared coefficients exactly:
        // the quadrature is converged, not grid-dependent.
        let p32 = DensityProfile::new(1.75, 1e-3, 0.05, 32).unwrap();
        let p64 = DensityProfile {
            m_rho: 64,
            ..p32.clone()
        };
        let s32 = p32.spectrum();
        let s64 = p64.spectrum();
        for k2 in 0..=32 {
            let a = s32.coeff(0, k2 as i64);
            let b = s64.coeff(0, k2 as i64);
            assert!(
                (a - b).norm() <= 1e-11 * (1.0 + a.norm()),
                "k₂ = {k2}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn smoothed_spectrum_reconstructs_pointwise() {
        let p = DensityProfile::new(2.0, 0.1, 0.05, 32).unwrap();
        let spec = p.spectrum();
        assert_eq!(spec.x_bandwidth(), 0);
        let grid = GridSampling::new(1, 256);
        let values = spec.synthesize(&grid);
        let mut worst: f64 = 0.0;
        for (j, &z) in grid.zs().iter().enumerate() {
            worst = worst.max((values[j] - p.eval(z)).abs());
        }
        // C³ profile: coefficient decay ~ k₂^{-4}, truncation tail at 32
        // modes is far below the percent level.
        assert!(worst < 1e-3, "reconstruction error {worst}");
        // Positivity of the band-limited profile on a fine grid.
        assert!(values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn coefficient_decay_reflects_c3_smoothness() {
        let smooth = DensityProfile::new(2.0, 0.1, 0.1, 32).unwrap().spectrum();
        let kinked = DensityProfile::new(2.0, 0.1, 0.0, 32).unwrap().spectrum();
        // The mollified profile's tail coefficient is orders of magnitude
        // below the kinked profile's (k^{-4} vs k^{-2} decay).
        let tail_s = smooth.coeff(0, 32).norm();
        let tail_k = kinked.coeff(0, 32).norm();
        assert!(
            tail_s < 1e-2 * tail_k,
            "smoothed tail {tail_s} not ≪ kinked tail {tail_k}"
        );
    }

    #[test]
    fn constructor_rejects_bad_parameters() {
        assert!(DensityProfile::new(-1.0, 0.1, 0.0, 4).is_err());
        assert!(DensityProfile::new(2.0, -0.1, 0.0, 4).is_err());
        assert!(DensityProfile::new(2.0, 0.1, 0.5, 4).is_err());
        assert!(DensityProfile::new(f64::NAN, 0.1, 0.0, 4).is_err());
        assert!(DensityProfile::new(2.0, 0.1, f64::INFINITY, 4).is_err());
    }
}
