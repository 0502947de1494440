//! Trigonometric basis on the extended torus `[0,2) × [-1,1)`.
//!
//! A field of order `m` is stored as complex coefficients `a_{k₁,k₂}` over
//! `-m ≤ k₁ ≤ m`, `0 ≤ k₂ ≤ m`, with one of two vertical parities:
//!
//! ```text
//! Cos:  f(x,z) = Σ a_{k₁,k₂} e^{iπk₁x} cos(πk₂z)     (even in z)
//! Sin:  f(x,z) = Σ a_{k₁,k₂} e^{iπk₁x} sin(πk₂z)     (odd in z)
//! ```
//!
//! Real-valued fields keep the Hermitian symmetry `a_{-k₁,k₂} = conj(a_{k₁,k₂})`;
//! every operation here preserves it, and sine fields keep the identically
//! vanishing `k₂ = 0` row at exactly zero. Derivatives act mode-wise
//! (`∂x ↦ iπk₁`, `∂z` swaps parity with factor `∓πk₂`), so the Laplacian is
//! diagonal with eigenvalue `-π²(k₁²+k₂²)`.
//!
//! Products are never truncated approximately: [`multiply_project`] samples
//! both factors on a uniform grid large enough that analysing the pointwise
//! product back to the requested order commits no aliasing at all, which
//! keeps Galerkin identities exact to round-off. A second, quadrature-free
//! route through coefficient convolution ([`ProductMode::Convolution`])
//! exists solely so the two can be checked against each other.
//!
//! For dense linear algebra the Hermitian coefficient set is flattened to a
//! real vector in L²-orthonormal coordinates ([`pack`]/[`unpack`]); inner
//! products of packed vectors equal torus L² inner products of fields.

use num_complex::Complex64;

pub const PI: f64 = std::f64::consts::PI;

/// Vertical parity of a field on the symmetric torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Even in `z`: spanned by `cos(πk₂z)`. Horizontal velocity, pressure, density.
    Cos,
    /// Odd in `z`: spanned by `sin(πk₂z)`. Vertical velocity.
    Sin,
}

impl Parity {
    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::Cos
        } else {
            Parity::Sin
        }
    }
}

/// Truncation order bookkeeping: mode ranges and real dimension counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub m: usize,
}

impl BasisSpec {
    pub fn new(m: usize) -> Self {
        BasisSpec { m }
    }

    /// Number of stored complex slots per field: `(2m+1)(m+1)`.
    pub fn slot_count(&self) -> usize {
        (2 * self.m + 1) * (self.m + 1)
    }

    /// Real dimension of one field of the given parity after Hermitian
    /// reduction; sine fields exclude the vanishing `k₂ = 0` row.
    pub fn dof_count(&self, parity: Parity) -> usize {
        match parity {
            Parity::Cos => (2 * self.m + 1) * (self.m + 1),
            Parity::Sin => (2 * self.m + 1) * self.m,
        }
    }

    /// Real dimension of the mean-zero cosine space (pressure unknowns).
    pub fn pressure_dof_count(&self) -> usize {
        self.dof_count(Parity::Cos) - 1
    }

    /// Formal real dimension of the coupled (v, w, p) space counting the
    /// sine `k₂ = 0` row: `3(2m+1)(m+1) - 1`. Reported for bookkeeping;
    /// the active unknown counts come from [`Self::dof_count`].
    pub fn formal_dim(&self) -> usize {
        3 * (2 * self.m + 1) * (self.m + 1) - 1
    }
}

/// A band-limited field: complex coefficients plus parity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    m: usize,
    parity: Parity,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zero(m: usize, parity: Parity) -> Self {
        SpectralField {
            m,
            parity,
            coeffs: vec![Complex64::new(0.0, 0.0); (2 * m + 1) * (m + 1)],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    #[inline]
    fn idx(&self, k1: i64, k2: usize) -> usize {
        debug_assert!(k1.unsigned_abs() as usize <= self.m && k2 <= self.m);
        ((k1 + self.m as i64) as usize) * (self.m + 1) + k2
    }

    /// Coefficient at `(k₁, k₂)`; zero outside the stored range.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        if k1.unsigned_abs() as usize > self.m || k2 < 0 || k2 as usize > self.m {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[self.idx(k1, k2 as usize)]
    }

    /// Set the `(k₁, k₂)` mode and its Hermitian partner `(-k₁, k₂)`.
    /// `k₁ = 0` keeps only the real part; setting a sine `k₂ = 0` mode is
    /// a no-op since those functions vanish identically.
    pub fn set_mode(&mut self, k1: i64, k2: usize, a: Complex64) {
        assert!(
            k1.unsigned_abs() as usize <= self.m && k2 <= self.m,
            "mode ({k1},{k2}) outside order {}",
            self.m
        );
        if self.parity == Parity::Sin && k2 == 0 {
            return;
        }
        if k1 == 0 {
            let i = self.idx(0, k2);
            self.coeffs[i] = Complex64::new(a.re, 0.0);
        } else {
            let i = self.idx(k1, k2);
            self.coeffs[i] = a;
            let j = self.idx(-k1, k2);
            self.coeffs[j] = a.conj();
        }
    }

    /// True when Hermitian symmetry and the sine `k₂ = 0` zero row hold
    /// to round-off. Used by debug assertions after arithmetic.
    pub fn invariants_hold(&self) -> bool {
        let m = self.m as i64;
        for k1 in 0..=m {
            for k2 in 0..=self.m {
                let a = self.coeffs[self.idx(k1, k2)];
                let b = self.coeffs[self.idx(-k1, k2)];
                if (a - b.conj()).norm() > 1e-12 * (1.0 + a.norm()) {
                    return false;
                }
                if self.parity == Parity::Sin && k2 == 0 && a.norm() != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// Iterate stored modes as `(k₁, k₂, coefficient)`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, usize, Complex64)> + '_ {
        let m = self.m as i64;
        (-m..=m).flat_map(move |k1| {
            (0..=self.m).map(move |k2| (k1, k2, self.coeffs[self.idx(k1, k2)]))
        })
    }

    /// Largest `|k₁|` carrying a nonzero coefficient (0 for x-independent
    /// fields); used to size exact product grids tightly.
    pub fn x_bandwidth(&self) -> usize {
        let m = self.m as i64;
        let mut bw = 0usize;
        for k1 in -m..=m {
            for k2 in 0..=self.m {
                if self.coeffs[self.idx(k1, k2)].norm_sqr() != 0.0 {
                    bw = bw.max(k1.unsigned_abs() as usize);
                }
            }
        }
        bw
    }

    /// Largest `k₂` carrying a nonzero coefficient.
    pub fn z_bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for k2 in 0..=self.m {
            let m = self.m as i64;
            for k1 in -m..=m {
                if self.coeffs[self.idx(k1, k2)].norm_sqr() != 0.0 {
                    bw = bw.max(k2);
                    break;
                }
            }
        }
        bw
    }

    /// `∂x`: multiplies mode `(k₁,k₂)` by `iπk₁`; parity unchanged.
    pub fn dx(&self) -> SpectralField {
        let mut out = self.clone();
        let m = self.m as i64;
        for k1 in -m..=m {
            let factor = Complex64::new(0.0, PI * k1 as f64);
            for k2 in 0..=self.m {
                let i = self.idx(k1, k2);
                out.coeffs[i] = self.coeffs[i] * factor;
            }
        }
        debug_assert!(out.invariants_hold());
        out
    }

    /// `∂z`: cosine rows map to sine with factor `-πk₂`, sine rows to
    /// cosine with `+πk₂`; the `k₂ = 0` output row is exactly zero.
    pub fn dz(&self) -> SpectralField {
        let out_parity = match self.parity {
            Parity::Cos => Parity::Sin,
            Parity::Sin => Parity::Cos,
        };
        let mut out = SpectralField::zero(self.m, out_parity);
        let m = self.m as i64;
        let sign = match self.parity {
            Parity::Cos => -1.0,
            Parity::Sin => 1.0,
        };
        for k1 in -m..=m {
            for k2 in 1..=self.m {
                let i = self.idx(k1, k2);
                out.coeffs[i] = self.coeffs[i] * (sign * PI * k2 as f64);
            }
        }
        debug_assert!(out.invariants_hold());
        out
    }

    /// `Δ`: diagonal with eigenvalue `-π²(k₁²+k₂²)`.
    pub fn laplacian(&self) -> SpectralField {
        let mut out = self.clone();
        let m = self.m as i64;
        for k1 in -m..=m {
            for k2 in 0..=self.m {
                let i = self.idx(k1, k2);
                out.coeffs[i] *= -PI * PI * ((k1 * k1) as f64 + (k2 * k2) as f64);
            }
        }
        out
    }

    /// Orthogonal projection onto order `m_out`: coefficients are copied
    /// on the shared index range, everything else is zero. Idempotent and
    /// L²-self-adjoint.
    pub fn project(&self, m_out: usize) -> SpectralField {
        let mut out = SpectralField::zero(m_out, self.parity);
        let keep = self.m.min(m_out) as i64;
        for k1 in -keep..=keep {
            for k2 in 0..=(self.m.min(m_out)) {
                let i = out.idx(k1, k2);
                out.coeffs[i] = self.coeffs[self.idx(k1, k2)];
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    /// `self += s · other`; orders and parities must match.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        assert_eq!(self.m, other.m, "order mismatch in field arithmetic");
        assert_eq!(self.parity, other.parity, "parity mismatch in field arithmetic");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Squared L² norm over the full torus, by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        let m = self.m as i64;
        let mut sum = 0.0;
        for k1 in -m..=m {
            for k2 in 0..=self.m {
                let w = mode_l2_sq(self.parity, k2);
                sum += w * self.coeffs[self.idx(k1, k2)].norm_sqr();
            }
        }
        sum
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Torus L² inner product with `other` (same order and parity).
    pub fn inner(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.m, other.m, "order mismatch in inner product");
        assert_eq!(self.parity, other.parity, "parity mismatch in inner product");
        let m = self.m as i64;
        let mut sum = 0.0;
        for k1 in -m..=m {
            for k2 in 0..=self.m {
                let i = self.idx(k1, k2);
                let w = mode_l2_sq(self.parity, k2);
                sum += w * (self.coeffs[i] * other.coeffs[i].conj()).re;
            }
        }
        sum
    }

    /// Evaluate at sample points, `result[ix·zs.len() + iz] = f(xs[ix], zs[iz])`.
    ///
    /// Two-stage separable sum; exact evaluation of the trigonometric
    /// polynomial at arbitrary nodes.
    pub fn synthesize_at(&self, xs: &[f64], zs: &[f64]) -> Vec<f64> {
        let m = self.m;
        let nz = zs.len();
        // Stage 1: contract the vertical index at each z node.
        let mut g = vec![Complex64::new(0.0, 0.0); (2 * m + 1) * nz];
        let ztab = z_table(self.parity, m, zs);
        for (r1, chunk) in g.chunks_mut(nz).enumerate() {
            let base = r1 * (m + 1);
            for (iz, out) in chunk.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for k2 in 0..=m {
                    acc += self.coeffs[base + k2] * ztab[k2 * nz + iz];
                }
                *out = acc;
            }
        }
        // Stage 2: contract the horizontal index.
        let mut out = vec![0.0; xs.len() * nz];
        for (ix, &x) in xs.iter().enumerate() {
            for k1 in -(m as i64)..=(m as i64) {
                let phase = Complex64::from_polar(1.0, PI * k1 as f64 * x);
                let row = ((k1 + m as i64) as usize) * nz;
                for iz in 0..nz {
                    out[ix * nz + iz] += (g[row + iz] * phase).re;
                }
            }
        }
        out
    }

    /// Evaluate on a uniform grid.
    pub fn synthesize(&self, grid: &GridSampling) -> Vec<f64> {
        self.synthesize_at(&grid.xs(), &grid.zs())
    }

    /// Evaluate at a single point.
    pub fn eval(&self, x: f64, z: f64) -> f64 {
        self.synthesize_at(&[x], &[z])[0]
    }
}

/// Squared torus L² norm of the basis function with vertical index `k₂`:
/// `∫ |e^{iπk₁x}|² dx · ∫ trig²(πk₂z) dz`.
fn mode_l2_sq(parity: Parity, k2: usize) -> f64 {
    match (parity, k2) {
        (Parity::Cos, 0) => 4.0,
        (Parity::Sin, 0) => 0.0,
        _ => 2.0,
    }
}

fn z_table(parity: Parity, m: usize, zs: &[f64]) -> Vec<f64> {
    let nz = zs.len();
    let mut t = vec![0.0; (m + 1) * nz];
    for k2 in 0..=m {
        for (iz, &z) in zs.iter().enumerate() {
            let arg = PI * k2 as f64 * z;
            t[k2 * nz + iz] = match parity {
                Parity::Cos => arg.cos(),
                Parity::Sin => arg.sin(),
            };
        }
    }
    t
}

/// Uniform sampling grid on the torus: `x_i = 2i/nx`, `z_j = -1 + 2j/nz`.
///
/// The rectangle rule on such a grid integrates `e^{iπkx}` exactly unless
/// `k` is a nonzero multiple of the node count, so a grid with
/// `n ≥ bandwidth + 1` nodes per direction integrates any field of that
/// total bandwidth exactly. All product-projection grids are sized from
/// that rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSampling {
    pub nx: usize,
    pub nz: usize,
}

impl GridSampling {
    pub fn new(nx: usize, nz: usize) -> Self {
        assert!(nx > 0 && nz > 0);
        GridSampling { nx, nz }
    }

    /// Smallest even grid that analyses a single field of order `m` exactly.
    pub fn for_order(m: usize) -> Self {
        let n = round_up_even(2 * m + 1);
        GridSampling { nx: n, nz: n }
    }

    /// Grid that projects a product of given per-direction total factor
    /// bandwidths onto order `m_out` exactly (and still analyses order
    /// `m_out` on its own).
    pub fn for_product(bw_x: usize, bw_z: usize, m_out: usize) -> Self {
        GridSampling {
            nx: round_up_even((bw_x + m_out).max(2 * m_out) + 1),
            nz: round_up_even((bw_z + m_out).max(2 * m_out) + 1),
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| 2.0 * i as f64 / self.nx as f64).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        (0..self.nz)
            .map(|j| -1.0 + 2.0 * j as f64 / self.nz as f64)
            .collect()
    }

    /// Area element of one grid cell, `(2/nx)·(2/nz)`.
    pub fn cell_area(&self) -> f64 {
        4.0 / (self.nx as f64 * self.nz as f64)
    }
}

fn round_up_even(n: usize) -> usize {
    if n % 2 == 0 {
        n
    } else {
        n + 1
    }
}

/// Recover coefficients of order `m` from uniform grid samples.
///
/// Exact (to round-off) whenever the samples come from a field whose
/// bandwidth `B` satisfies `n ≥ B + m + 1` per direction; the guard below
/// only enforces the minimal `n ≥ 2m + 1` self-consistency requirement.
/// Hermitian symmetry is enforced exactly on the result.
pub fn analyze(
    samples: &[f64],
    grid: &GridSampling,
    parity: Parity,
    m: usize,
) -> crate::Result<SpectralField> {
    let need = 2 * m + 1;
    if grid.nx < need || grid.nz < need {
        return Err(crate::SolverError::Resolution {
            required: need,
            actual: grid.nx.min(grid.nz),
        });
    }
    assert_eq!(samples.len(), grid.nx * grid.nz, "sample count mismatch");

    let nz = grid.nz;
    let xs = grid.xs();
    let zs = grid.zs();
    // Stage 1: horizontal Fourier sums at every z node.
    let mut f1 = vec![Complex64::new(0.0, 0.0); (2 * m + 1) * nz];
    for (ix, &x) in xs.iter().enumerate() {
        for k1 in -(m as i64)..=(m as i64) {
            let phase = Complex64::from_polar(1.0, -PI * k1 as f64 * x);
            let row = ((k1 + m as i64) as usize) * nz;
            for iz in 0..nz {
                f1[row + iz] += samples[ix * nz + iz] * phase;
            }
        }
    }
    // Stage 2: vertical trigonometric sums, then normalize by mode norms.
    let ztab = z_table(parity, m, &zs);
    let dxdz = grid.cell_area();
    let mut out = SpectralField::zero(m, parity);
    for k1 in -(m as i64)..=(m as i64) {
        let row = ((k1 + m as i64) as usize) * nz;
        for k2 in 0..=m {
            let w = mode_l2_sq(parity, k2);
            if w == 0.0 {
                continue; // sine k₂ = 0 row stays identically zero
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for iz in 0..nz {
                acc += f1[row + iz] * ztab[k2 * nz + iz];
            }
            let i = out.idx(k1, k2);
            out.coeffs[i] = acc * dxdz / w;
        }
    }
    // Real samples give Hermitian coefficients up to round-off; make the
    // symmetry exact so packed representations are well defined.
    for k1 in 1..=(m as i64) {
        for k2 in 0..=m {
            let i = out.idx(k1, k2);
            let j = out.idx(-k1, k2);
            let avg = 0.5 * (out.coeffs[i] + out.coeffs[j].conj());
            out.coeffs[i] = avg;
            out.coeffs[j] = avg.conj();
        }
    }
    for k2 in 0..=m {
        let i = out.idx(0, k2);
        out.coeffs[i] = Complex64::new(out.coeffs[i].re, 0.0);
    }
    Ok(out)
}

/// Analyse a pointwise function that is band-limited in `x` but not in
/// `z`: rectangle rule over `x` (exact when `nx ≥ x-bandwidth + m + 1`)
/// and the supplied quadrature rule over `z ∈ [-1, 1]` (accuracy set by
/// the caller's panel layout). Used for forcing terms and reference
/// solutions involving `ρ^{±1}` point values.
pub fn analyze_separable(
    f: &dyn Fn(f64, f64) -> f64,
    parity: Parity,
    m: usize,
    nx: usize,
    z_rule: &crate::quadrature::Rule,
) -> SpectralField {
    assert!(nx >= 2 * m + 1, "rectangle rule too coarse for order {m}");
    let nz = z_rule.nodes.len();
    let dx = 2.0 / nx as f64;
    // Stage 1: horizontal Fourier sums at every z quadrature node.
    let mut f1 = vec![Complex64::new(0.0, 0.0); (2 * m + 1) * nz];
    for ix in 0..nx {
        let x = 2.0 * ix as f64 / nx as f64;
        let samples: Vec<f64> = z_rule.nodes.iter().map(|&z| f(x, z)).collect();
        for k1 in -(m as i64)..=(m as i64) {
            let phase = Complex64::from_polar(dx, -PI * k1 as f64 * x);
            let row = ((k1 + m as i64) as usize) * nz;
            for iz in 0..nz {
                f1[row + iz] += samples[iz] * phase;
            }
        }
    }
    // Stage 2: weighted vertical sums.
    let ztab = z_table(parity, m, &z_rule.nodes);
    let mut out = SpectralField::zero(m, parity);
    for k1 in 0..=(m as i64) {
        let row = ((k1 + m as i64) as usize) * nz;
        for k2 in 0..=m {
            let w = mode_l2_sq(parity, k2);
            if w == 0.0 {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for iz in 0..nz {
                acc += f1[row + iz] * z_rule.weights[iz] * ztab[k2 * nz + iz];
            }
            out.set_mode(k1, k2, acc / w);
        }
    }
    out
}

/// How [`multiply_project`] evaluates the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductMode {
    /// Sample on an exactly-sized grid, multiply pointwise, re-analyse.
    /// This is the production route used by all operator assembly.
    Quadrature,
    /// Direct coefficient convolution in the exponential representation.
    /// Slower; kept as an independent cross-check of the quadrature route.
    Convolution,
}

/// Projected pointwise product `P_{m_out}(f · g)`, exact to round-off.
///
/// The output parity follows the product rule (`cos·cos = sin·sin = cos`,
/// mixed = `sin`). Factors of different orders combine exactly; the grid
/// (in quadrature mode) is sized from the factors' effective bandwidths,
/// so x-independent factors such as density spectra cost nothing extra.
pub fn multiply_project(
    f: &SpectralField,
    g: &SpectralField,
    m_out: usize,
    mode: ProductMode,
) -> SpectralField {
    let parity = f.parity().product(g.parity());
    match mode {
        ProductMode::Quadrature => {
            let bw_x = f.x_bandwidth() + g.x_bandwidth();
            let bw_z = f.z_bandwidth() + g.z_bandwidth();
            let grid = GridSampling::for_product(bw_x, bw_z, m_out);
            let fs = f.synthesize(&grid);
            let gs = g.synthesize(&grid);
            let prod: Vec<f64> = fs.iter().zip(&gs).map(|(a, b)| a * b).collect();
            analyze(&prod, &grid, parity, m_out).expect("product grid sized for exactness")
        }
        ProductMode::Convolution => {
            let ef = ExponentialRep::from_field(f);
            let eg = ExponentialRep::from_field(g);
            ef.convolve(&eg).to_field(parity, m_out)
        }
    }
}

/// Full exponential representation `Σ c_{k₁,k₂} e^{iπ(k₁x + k₂z)}` with
/// both indices signed; the reference route for products.
struct ExponentialRep {
    kx: i64,
    kz: i64,
    c: Vec<Complex64>,
}

impl ExponentialRep {
    fn idx(&self, k1: i64, k2: i64) -> usize {
        ((k1 + self.kx) as usize) * (2 * self.kz + 1) as usize + (k2 + self.kz) as usize
    }

    fn from_field(f: &SpectralField) -> Self {
        let kx = f.m() as i64;
        let kz = f.m() as i64;
        let mut rep = ExponentialRep {
            kx,
            kz,
            c: vec![Complex64::new(0.0, 0.0); ((2 * kx + 1) * (2 * kz + 1)) as usize],
        };
        let half = Complex64::new(0.5, 0.0);
        let half_over_i = Complex64::new(0.0, -0.5); // 1/(2i)
        for (k1, k2, a) in f.modes() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let k2 = k2 as i64;
            match f.parity() {
                Parity::Cos => {
                    if k2 == 0 {
                        let i = rep.idx(k1, 0);
                        rep.c[i] += a;
                    } else {
                        let i = rep.idx(k1, k2);
                        rep.c[i] += a * half;
                        let j = rep.idx(k1, -k2);
                        rep.c[j] += a * half;
                    }
                }
                Parity::Sin => {
                    // sin(πk₂z) = (e^{iπk₂z} - e^{-iπk₂z}) / (2i)
                    let i = rep.idx(k1, k2);
                    rep.c[i] += a * half_over_i;
                    let j = rep.idx(k1, -k2);
                    rep.c[j] -= a * half_over_i;
                }
            }
        }
        rep
    }

    fn convolve(&self, other: &ExponentialRep) -> ExponentialRep {
        let kx = self.kx + other.kx;
        let kz = self.kz + other.kz;
        let mut out = ExponentialRep {
            kx,
            kz,
            c: vec![Complex64::new(0.0, 0.0); ((2 * kx + 1) * (2 * kz + 1)) as usize],
        };
        for a1 in -self.kx..=self.kx {
            for a2 in -self.kz..=self.kz {
                let ca = self.c[self.idx(a1, a2)];
                if ca.norm_sqr() == 0.0 {
                    continue;
                }
                for b1 in -other.kx..=other.kx {
                    for b2 in -other.kz..=other.kz {
                        let cb = other.c[other.idx(b1, b2)];
                        if cb.norm_sqr() == 0.0 {
                            continue;
                        }
                        let i = out.idx(a1 + b1, a2 + b2);
                        out.c[i] += ca * cb;
                    }
                }
            }
        }
        out
    }

    fn to_field(&self, parity: Parity, m: usize) -> SpectralField {
        let mut out = SpectralField::zero(m, parity);
        let reach = m.min(self.kx.min(self.kz).max(0) as usize) as i64;
        let kmax_x = m.min(self.kx as usize) as i64;
        let _ = reach;
        for k1 in -kmax_x..=kmax_x {
            for k2 in 0..=m.min(self.kz as usize) {
                let k2i = k2 as i64;
                let cp = self.c[self.idx(k1, k2i)];
                let cm = if k2 == 0 {
                    cp
                } else {
                    self.c[self.idx(k1, -k2i)]
                };
                let a = match parity {
                    Parity::Cos => {
                        if k2 == 0 {
                            cp
                        } else {
                            cp + cm
                        }
                    }
                    Parity::Sin => {
                        if k2 == 0 {
                            continue;
                        }
                        // field = Σ_{k₂>0} a·sin ⇒ a = i(c₊ - c₋)
                        Complex64::new(0.0, 1.0) * (cp - cm)
                    }
                };
                out.set_mode(k1, k2, a);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Real packing: Hermitian coefficients <-> orthonormal real coordinates.
// ---------------------------------------------------------------------------

/// Scale of the packed coordinate for complex mode `(k₁ ≥ 0, k₂)`: the L²
/// norm of the corresponding real basis function. With this scaling the
/// Euclidean inner product of packed vectors equals the torus L² inner
/// product of fields.
fn pack_scale(parity: Parity, k1: i64, k2: usize) -> f64 {
    let w = mode_l2_sq(parity, k2); // ‖e_{k₁,k₂}‖²
    if k1 == 0 {
        w.sqrt()
    } else {
        (2.0 * w).sqrt()
    }
}

/// Canonical dof order of one field: `k₁ = 0` rows first (real parts),
/// then for each `k₁ ≥ 1` the interleaved (Re, Im) pairs over `k₂`. Sine
/// fields skip `k₂ = 0` everywhere.
fn for_each_dof(spec: BasisSpec, parity: Parity, mut visit: impl FnMut(i64, usize, bool)) {
    let k2_start = match parity {
        Parity::Cos => 0,
        Parity::Sin => 1,
    };
    for k2 in k2_start..=spec.m {
        visit(0, k2, false);
    }
    for k1 in 1..=(spec.m as i64) {
        for k2 in k2_start..=spec.m {
            visit(k1, k2, false);
            visit(k1, k2, true);
        }
    }
}

/// Flatten a field into orthonormal real coordinates.
pub fn pack(field: &SpectralField) -> nalgebra::DVector<f64> {
    let spec = BasisSpec::new(field.m());
    let mut out = Vec::with_capacity(spec.dof_count(field.parity()));
    for_each_dof(spec, field.parity(), |k1, k2, imag| {
        let a = field.coeff(k1, k2 as i64);
        let s = pack_scale(field.parity(), k1, k2);
        out.push(if imag { a.im * s } else { a.re * s });
    });
    nalgebra::DVector::from_vec(out)
}

/// Inverse of [`pack`].
pub fn unpack(v: &nalgebra::DVector<f64>, m: usize, parity: Parity) -> SpectralField {
    let spec = BasisSpec::new(m);
    assert_eq!(v.len(), spec.dof_count(parity), "packed length mismatch");
    let mut field = SpectralField::zero(m, parity);
    let mut i = 0usize;
    // First pass collects (re, im) per mode in canonical order.
    let mut pending: Option<(i64, usize, f64)> = None;
    for_each_dof(spec, parity, |k1, k2, imag| {
        let s = pack_scale(parity, k1, k2);
        let val = v[i] / s;
        i += 1;
        if k1 == 0 {
            field.set_mode(0, k2, Complex64::new(val, 0.0));
        } else if !imag {
            pending = Some((k1, k2, val));
        } else {
            let (k1p, k2p, re) = pending.take().expect("re precedes im in dof order");
            debug_assert!(k1p == k1 && k2p == k2);
            field.set_mode(k1, k2, Complex64::new(re, val));
        }
    });
    field
}

/// Pack the mean-zero cosine space (pressure coordinates): the cosine
/// packing with the `(0,0)` slot removed.
pub fn pack_pressure(field: &SpectralField) -> nalgebra::DVector<f64> {
    assert_eq!(field.parity(), Parity::Cos, "pressure fields have cosine parity");
    let full = pack(field);
    nalgebra::DVector::from_fn(full.len() - 1, |i, _| full[i + 1])
}

/// Inverse of [`pack_pressure`]; the mean mode is restored as zero.
pub fn unpack_pressure(v: &nalgebra::DVector<f64>, m: usize) -> SpectralField {
    let spec = BasisSpec::new(m);
    assert_eq!(v.len(), spec.pressure_dof_count(), "pressure length mismatch");
    let mut full = nalgebra::DVector::zeros(spec.dof_count(Parity::Cos));
    for i in 0..v.len() {
        full[i + 1] = v[i];
    }
    unpack(&full, m, Parity::Cos)
}

/// Laplacian eigenvalue `-π²(k₁²+k₂²)` per packed dof.
pub fn laplacian_diag(m: usize, parity: Parity) -> nalgebra::DVector<f64> {
    let spec = BasisSpec::new(m);
    let mut out = Vec::with_capacity(spec.dof_count(parity));
    for_each_dof(spec, parity, |k1, k2, _| {
        out.push(-PI * PI * ((k1 * k1) as f64 + (k2 * k2) as f64));
    });
    nalgebra::DVector::from_vec(out)
}

/// Mode labels `(k₁, k₂)` per packed dof, for diagnostics.
pub fn dof_modes(m: usize, parity: Parity) -> Vec<(i64, usize)> {
    let spec = BasisSpec::new(m);
    let mut out = Vec::with_capacity(spec.dof_count(parity));
    for_each_dof(spec, parity, |k1, k2, _| out.push((k1, k2)));
    out
}
