//! The weighted incompressibility constraint `div(ρu) = 0` in packed form.
//!
//! States stack a horizontal velocity (cosine parity) and a vertical
//! velocity (sine parity) into one real vector. Three linear maps are
//! assembled column by column from exact field operations:
//!
//! * `G` — packed gradient: pressure coordinates to state coordinates,
//! * `M` — weighted mass: state `a ↦ P_m(ρ̃ u)` (block diagonal over the
//!   two velocity components, dense within each),
//! * `C = -Gᵀ M` — packed coordinates of `P_m(div(ρ̃ u))`, which follows
//!   from integration by parts on the torus; the identity is exact here
//!   because products are projected without aliasing.
//!
//! The pressure operator `A = -Gᵀ M G` is then symmetric negative
//! definite on the mean-zero cosine space whenever the band-limited
//! density stays positive, so `-A` gets one Cholesky factorization that
//! serves pressure solves, constraint projection of initial data, and
//! condition-number estimates. For `ρ ≡ 1` the operator reduces to the
//! Laplacian, diagonal in packed coordinates — a closed-form oracle the
//! tests lean on.

use crate::basis::{
    multiply_project, pack, unpack, unpack_pressure, BasisSpec, Parity, ProductMode,
    SpectralField,
};
use crate::{Result, SolverError};
use nalgebra::{DMatrix, DVector};

/// Index bookkeeping for stacked `(v, w)` state vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub m: usize,
    /// Horizontal-velocity block length (cosine dofs).
    pub nv: usize,
    /// Vertical-velocity block length (sine dofs).
    pub nw: usize,
}

impl StateLayout {
    pub fn new(m: usize) -> Self {
        let spec = BasisSpec::new(m);
        StateLayout {
            m,
            nv: spec.dof_count(Parity::Cos),
            nw: spec.dof_count(Parity::Sin),
        }
    }

    pub fn total(&self) -> usize {
        self.nv + self.nw
    }

    pub fn pressure_len(&self) -> usize {
        BasisSpec::new(self.m).pressure_dof_count()
    }

    pub fn pack_state(&self, v: &SpectralField, w: &SpectralField) -> DVector<f64> {
        assert_eq!(v.parity(), Parity::Cos);
        assert_eq!(w.parity(), Parity::Sin);
        assert_eq!(v.m(), self.m);
        assert_eq!(w.m(), self.m);
        let pv = pack(v);
        let pw = pack(w);
        let mut out = DVector::zeros(self.total());
        out.rows_mut(0, self.nv).copy_from(&pv);
        out.rows_mut(self.nv, self.nw).copy_from(&pw);
        out
    }

    pub fn unpack_state(&self, a: &DVector<f64>) -> (SpectralField, SpectralField) {
        assert_eq!(a.len(), self.total(), "state length mismatch");
        let v = unpack(&a.rows(0, self.nv).into_owned(), self.m, Parity::Cos);
        let w = unpack(&a.rows(self.nv, self.nw).into_owned(), self.m, Parity::Sin);
        (v, w)
    }
}

/// Packed gradient `G`: column `j` holds `(∂x e_j, ∂z e_j)` for the j-th
/// mean-zero cosine basis function.
pub fn assemble_gradient(m: usize) -> DMatrix<f64> {
    let layout = StateLayout::new(m);
    let np = layout.pressure_len();
    let mut g = DMatrix::zeros(layout.total(), np);
    for j in 0..np {
        let mut e = DVector::zeros(np);
        e[j] = 1.0;
        let q = unpack_pressure(&e, m);
        let col = layout.pack_state(&q.dx(), &q.dz());
        g.set_column(j, &col);
    }
    g
}

/// Packed weighted mass `M`: column `j` holds `P_m(ρ̃ · e_j)` for the j-th
/// state basis function. Block diagonal over the velocity components.
pub fn assemble_weighted_mass(rho: &SpectralField, m: usize, mode: ProductMode) -> DMatrix<f64> {
    assert_eq!(rho.parity(), Parity::Cos, "density must have cosine parity");
    let layout = StateLayout::new(m);
    let n = layout.total();
    let mut mat = DMatrix::zeros(n, n);
    // Horizontal block.
    for j in 0..layout.nv {
        let mut e = DVector::zeros(layout.nv);
        e[j] = 1.0;
        let f = unpack(&e, m, Parity::Cos);
        let col = pack(&multiply_project(rho, &f, m, mode));
        mat.view_mut((0, j), (layout.nv, 1)).copy_from(&col);
    }
    // Vertical block.
    for j in 0..layout.nw {
        let mut e = DVector::zeros(layout.nw);
        e[j] = 1.0;
        let f = unpack(&e, m, Parity::Sin);
        let col = pack(&multiply_project(rho, &f, m, mode));
        mat.view_mut((layout.nv, layout.nv + j), (layout.nw, 1))
            .copy_from(&col);
    }
    mat
}

/// The assembled constraint/pressure machinery for one `(ρ̃, m)` pair.
pub struct PressureOperator {
    pub layout: StateLayout,
    grad: DMatrix<f64>,
    mass: DMatrix<f64>,
    matrix: DMatrix<f64>,
    /// Cholesky of `-A` (SPD).
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl PressureOperator {
    pub fn new(rho: &SpectralField, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(SolverError::InvalidParameter(
                "pressure space is empty at order 0; need m ≥ 1".into(),
            ));
        }
        let layout = StateLayout::new(m);
        let grad = assemble_gradient(m);
        let mass = assemble_weighted_mass(rho, m, ProductMode::Quadrature);
        let matrix = -(grad.transpose() * &mass * &grad);
        let neg = -matrix.clone();
        let chol = nalgebra::Cholesky::new(neg).ok_or_else(|| SolverError::Factorization {
            operator: "pressure operator",
            detail: "matrix is not negative definite; band-limited density may change sign".into(),
        })?;
        Ok(PressureOperator {
            layout,
            grad,
            mass,
            matrix,
            chol,
        })
    }

    pub fn m(&self) -> usize {
        self.layout.m
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grad(&self) -> &DMatrix<f64> {
        &self.grad
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// `A q`.
    pub fn apply(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.matrix * q
    }

    /// Solve `A q = rhs` on the mean-zero space.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        -self.chol.solve(rhs)
    }

    /// Packed coordinates of `P_m(div(ρ̃ u))`: `C a = -Gᵀ (M a)`.
    pub fn weighted_divergence(&self, a: &DVector<f64>) -> DVector<f64> {
        -(self.grad.transpose() * (&self.mass * a))
    }

    /// Torus L² norm of the projected weighted divergence.
    pub fn divergence_residual(&self, a: &DVector<f64>) -> f64 {
        self.weighted_divergence(a).norm()
    }

    /// Weighted Leray projection `a - G A⁻¹ C a`: the unique correction by
    /// a gradient that lands the state on the constraint manifold.
    /// Idempotent; annihilates pure gradients.
    pub fn project_constraint(&self, a: &DVector<f64>) -> DVector<f64> {
        let c = self.weighted_divergence(a);
        let q = self.solve(&c);
        a - &self.grad * q
    }

    /// Condition number estimate `λ_max/λ_min` of `-A` via power iteration
    /// on the operator and on its Cholesky inverse. Deterministic start.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.matrix.nrows();
        let neg = -self.matrix.clone();
        let lam_max = power_iteration(|v| &neg * v, n);
        let lam_inv = power_iteration(|v| self.chol.solve(v), n);
        lam_max * lam_inv
    }
}

fn power_iteration(apply: impl Fn(&DVector<f64>) -> DVector<f64>, n: usize) -> f64 {
    // Deterministic pseudo-random start avoids symmetry traps.
    let mut v = DVector::from_fn(n, |i, _| ((i * 2654435761 + 1).wrapping_mul(40503) % 1000) as f64 / 1000.0 + 0.1);
    v /= v.norm();
    let mut lam = 0.0;
    for _ in 0..500 {
        let w = apply(&v);
        let new_lam = w.norm();
        if new_lam == 0.0 {
            return 0.0;
        }
        let w = w / new_lam;
        let delta: f64 = (new_lam - lam).abs();
        v = w;
        lam = new_lam;
        if delta <= 1e-12 * lam {
            break;
        }
    }
    lam
}
