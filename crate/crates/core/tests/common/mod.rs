//! Shared oracles for the acceptance suite.
//!
//! Everything here is deliberately independent of the solver's internal
//! assembly routes: projections are closed-form and mode-wise, products
//! go through the coefficient-convolution path, and the reference
//! integrator is written directly in field space.

use anelastic_core::basis::{
    analyze_separable, multiply_project, Parity, ProductMode, SpectralField, PI,
};
use anelastic_core::constraint::StateLayout;
use anelastic_core::dynamics::{Forcing, GalerkinSystem};
use anelastic_core::quadrature::Rule;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded band-limited field pair (cosine `v`, sine `w`) with an
/// `e^{-decay·|k|}` envelope. Unnormalized and unprojected, so the same
/// seed describes the same function regardless of the order it is later
/// embedded into.
pub fn seeded_fields(m: usize, seed: u64, decay: f64) -> (SpectralField, SpectralField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for parity in [Parity::Cos, Parity::Sin] {
        let mut f = SpectralField::zero(m, parity);
        for k1 in 0..=(m as i64) {
            for k2 in 0..=m {
                let env =
                    (-decay * (((k1 * k1) as f64 + (k2 * k2) as f64).sqrt())).exp();
                let a = Complex64::new(
                    env * rng.gen_range(-1.0..1.0),
                    env * rng.gen_range(-1.0..1.0),
                );
                f.set_mode(k1, k2, a);
            }
        }
        out.push(f);
    }
    let w = out.pop().unwrap();
    let v = out.pop().unwrap();
    (v, w)
}

/// Closed-form Helmholtz–Leray projection for unit density: removes, for
/// every mode, the component along the gradient direction.
pub fn classical_leray(v: &SpectralField, w: &SpectralField) -> (SpectralField, SpectralField) {
    let m = v.m();
    let mut v2 = v.clone();
    let mut w2 = w.clone();
    for k1 in 0..=(m as i64) {
        for k2 in 0..=m {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let vk = v.coeff(k1, k2 as i64);
            let wk = if k2 == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                w.coeff(k1, k2 as i64)
            };
            let div = Complex64::new(0.0, PI * k1 as f64) * vk + PI * k2 as f64 * wk;
            let q = -div / (PI * PI * ((k1 * k1) as f64 + (k2 * k2) as f64));
            v2.set_mode(k1, k2, vk - Complex64::new(0.0, PI * k1 as f64) * q);
            if k2 > 0 {
                w2.set_mode(k1, k2, wk + PI * k2 as f64 * q);
            }
        }
    }
    (v2, w2)
}

/// Reference incompressible solver in projection form: mode-wise Leray
/// projection, coefficient-convolution products, classical RK4 — written
/// directly on fields, sharing no assembly code with the solver under
/// test.
pub struct IncompressibleOracle {
    pub m: usize,
}

impl IncompressibleOracle {
    fn rhs(&self, v: &SpectralField, w: &SpectralField) -> (SpectralField, SpectralField) {
        let m = self.m;
        let big = 2 * m;
        let conv = ProductMode::Convolution;
        let mut adv_v = multiply_project(v, &v.dx(), big, conv);
        adv_v.axpy(1.0, &multiply_project(w, &v.dz(), big, conv));
        let mut adv_w = multiply_project(v, &w.dx(), big, conv);
        adv_w.axpy(1.0, &multiply_project(w, &w.dz(), big, conv));
        let mut rv = v.laplacian();
        rv.axpy(-1.0, &adv_v.project(m));
        let mut rw = w.laplacian();
        rw.axpy(-1.0, &adv_w.project(m));
        classical_leray(&rv, &rw)
    }

    pub fn rk4(
        &self,
        v0: &SpectralField,
        w0: &SpectralField,
        dt: f64,
        steps: usize,
    ) -> (SpectralField, SpectralField) {
        let mut v = v0.clone();
        let mut w = w0.clone();
        for _ in 0..steps {
            let (k1v, k1w) = self.rhs(&v, &w);
            let mut v2 = v.clone();
            v2.axpy(0.5 * dt, &k1v);
            let mut w2 = w.clone();
            w2.axpy(0.5 * dt, &k1w);
            let (k2v, k2w) = self.rhs(&v2, &w2);
            let mut v3 = v.clone();
            v3.axpy(0.5 * dt, &k2v);
            let mut w3 = w.clone();
            w3.axpy(0.5 * dt, &k2w);
            let (k3v, k3w) = self.rhs(&v3, &w3);
            let mut v4 = v.clone();
            v4.axpy(dt, &k3v);
            let mut w4 = w.clone();
            w4.axpy(dt, &k3w);
            let (k4v, k4w) = self.rhs(&v4, &w4);
            v.axpy(dt / 6.0, &k1v);
            v.axpy(dt / 3.0, &k2v);
            v.axpy(dt / 3.0, &k3v);
            v.axpy(dt / 6.0, &k4v);
            w.axpy(dt / 6.0, &k1w);
            w.axpy(dt / 3.0, &k2w);
            w.axpy(dt / 3.0, &k3w);
            w.axpy(dt / 6.0, &k4w);
        }
        (v, w)
    }
}

/// Analytic shear benchmark: the exact solution is
/// `u(x, z, t) = (e^{-λt} V(z), 0)` with `V(z) = exp(sin²(πz))`, an even,
/// analytic, z-periodic profile whose cosine coefficients decay
/// super-exponentially, so the Galerkin error is dominated by the
/// spectral tail beyond order `m`.
///
/// The flow satisfies the weighted divergence constraint exactly for any
/// density (it is x-independent with zero vertical velocity, i.e. the
/// stream-function `ψ(z) e^{-λt}` flow with `ψ' = ρ̃·V`), the advection
/// term vanishes identically, and the pressure stays zero. The forcing
/// that makes it an exact solution of the forced system is
/// `F(t) = e^{-λt}·P_m(-λ ρ̃ V - V'')`, computed here with exact products
/// from a high-order representation of `V`.
pub struct AnalyticShearCase {
    layout: StateLayout,
    lambda: f64,
    /// `V` at the reference order, the "truth" the run is compared with.
    v_full: SpectralField,
    /// Time-independent part of the packed forcing.
    f0: DVector<f64>,
}

/// Order used for the reference representation of `V`; its coefficients
/// at this order are far below round-off.
pub const SHEAR_REFERENCE_ORDER: usize = 24;

impl AnalyticShearCase {
    pub fn new(sys: &GalerkinSystem, lambda: f64) -> Self {
        let order = SHEAR_REFERENCE_ORDER;
        let rule = Rule::uniform(-1.0, 1.0, 24, 14);
        let v_full = analyze_separable(
            &|_x, z| (PI * z).sin().powi(2).exp(),
            Parity::Cos,
            order,
            2 * order + 2,
            &rule,
        );
        let m = sys.m();
        let rho = sys.density_spectrum();
        let rho_v = multiply_project(rho, &v_full, m, ProductMode::Quadrature);
        let lap_v = v_full.laplacian().project(m);
        let mut f_v = rho_v;
        f_v.scale(-lambda);
        f_v.axpy(-1.0, &lap_v);
        let layout = sys.layout();
        let f0 = layout.pack_state(&f_v, &SpectralField::zero(m, Parity::Sin));
        AnalyticShearCase {
            layout,
            lambda,
            v_full,
            f0,
        }
    }

    pub fn initial_state(&self) -> DVector<f64> {
        let v_m = self.v_full.project(self.layout.m);
        self.layout
            .pack_state(&v_m, &SpectralField::zero(self.layout.m, Parity::Sin))
    }

    /// Relative L² error of a packed state against the exact solution.
    pub fn relative_error(&self, a: &DVector<f64>, t: f64) -> f64 {
        let (v, w) = self.layout.unpack_state(a);
        let mut exact = self.v_full.clone();
        exact.scale((-self.lambda * t).exp());
        let diff = v.project(SHEAR_REFERENCE_ORDER).sub(&exact);
        (diff.l2_norm_sq() + w.l2_norm_sq()).sqrt() / exact.l2_norm()
    }
}

impl Forcing for AnalyticShearCase {
    fn packed(&self, t: f64) -> DVector<f64> {
        &self.f0 * (-self.lambda * t).exp()
    }
}
