//! Normal-ordered coefficients of a Gaussian unitary and the x̄-dependent
//! generating kernel, evaluated either at a point or as truncated Taylor
//! series.
//!
//! The kernel packages the matrices `A(x̄)`, `B(x̄)`, the diagonal `D(x̄)` and
//! the scalar prefactor `1/(|det U| ∏√D_i)`. Photon-number projectors arise
//! as x̄-derivatives of the kernel at the origin, detection patterns select
//! rows and columns of the shifted phase-space matrix, and hafnians of those
//! selections carry the combinatorics.
//!
//! The closed forms below assume `U⁻¹V` is elementwise diagonal, which holds
//! for every transform built as squeezers followed by an interferometer (and
//! trivially whenever `x̄ = 0`). [`kernel_at`] verifies the resulting pair
//! block is symmetric and rejects inputs outside that domain.

use num_complex::Complex64 as C64;

use crate::error::{Result, UbsError};
use crate::linalg::{c, symmetry_residual, CMat, ONE, ZERO};
use crate::symplectic::SymplecticGaussian;
use crate::taylor::{TaylorScalar, TaylorShape};

/// Default cap on the total Taylor order carried by [`kernel_taylor`].
pub const DEFAULT_ORDER_LIMIT: usize = 8;

/// The three closed-form coefficient matrices of the normally-ordered form of
/// a Gaussian unitary: pair creation, number mixing (as a matrix logarithm),
/// and pair annihilation.
#[derive(Debug, Clone)]
pub struct NormalOrderedUnitary {
    /// `-(1/2) U^{-*T} Vᵀ`, symmetric.
    pub pair_creation: CMat,
    /// `(1/2) V^{*T} U^{-*T}`, symmetric.
    pub pair_annihilation: CMat,
    /// `log U^{-*T}` (principal branch).
    pub mixing_log: CMat,
}

/// Closed-form normal-ordering coefficients of a transformation.
pub fn normal_order_coefficients(t: &SymplecticGaussian) -> Result<NormalOrderedUnitary> {
    let u_inv = t
        .u()
        .clone()
        .try_inverse()
        .expect("U of a symplectic transformation is invertible");
    let u_inv_adj = u_inv.adjoint(); // U^{-*T}
    let pair_creation = (&u_inv_adj * t.v().transpose()) * c(-0.5);
    let pair_annihilation = (t.v().adjoint() * &u_inv_adj) * c(0.5);
    for (name, m) in [("pair_creation", &pair_creation), ("pair_annihilation", &pair_annihilation)]
    {
        let resid = symmetry_residual(m);
        if resid > 1e-10 * (1.0 + m.norm()) {
            return Err(UbsError::Integrity(format!(
                "{name} lost its symmetry (residual {resid:.3e})"
            )));
        }
    }
    let mixing_log = crate::linalg::matrix_log(&u_inv_adj)?;
    Ok(NormalOrderedUnitary {
        pair_creation,
        pair_annihilation,
        mixing_log,
    })
}

/// The generating kernel evaluated at a real point `x̄ ∈ [0,1]^M`.
#[derive(Debug, Clone)]
pub struct GeneratingKernel {
    /// Symmetric pair block `A(x̄)`.
    pub pair_block: CMat,
    /// Mixing block `B(x̄)`; equals `-1` at `x̄ = 0`.
    pub mixing_block: CMat,
    /// Diagonal `D_i(x̄)`.
    pub diagonal: Vec<C64>,
    /// `1/(|det U| ∏√D_i)`.
    pub prefactor: C64,
    pub evaluation_point: Vec<f64>,
}

impl GeneratingKernel {
    pub fn mode_count(&self) -> usize {
        self.diagonal.len()
    }

    /// The `2M × 2M` phase-space matrix `[[A, B], [Bᵀ, A*]]`.
    pub fn full_matrix(&self) -> CMat {
        assemble_phase_space(&self.pair_block, &self.mixing_block, 0.0)
    }

    /// The phase-space matrix with the mixing blocks shifted by the identity:
    /// `[[A, B+1], [(B+1)ᵀ, A*]]`. Selecting rows and columns of this matrix
    /// under a detection pattern yields the hafnian weights of that pattern.
    pub fn detection_matrix(&self) -> CMat {
        assemble_phase_space(&self.pair_block, &self.mixing_block, 1.0)
    }
}

fn assemble_phase_space(pair: &CMat, mixing: &CMat, shift: f64) -> CMat {
    let m = pair.nrows();
    let mut g = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let b = mixing[(i, j)] + if i == j { c(shift) } else { ZERO };
            g[(i, j)] = pair[(i, j)];
            g[(i, m + j)] = b;
            g[(m + j, i)] = b;
            g[(m + i, m + j)] = pair[(i, j)].conj();
        }
    }
    g
}

/// Shared precomputation for both kernel evaluations.
struct KernelMatrices {
    u_inv: CMat,       // U⁻¹
    u_inv_t: CMat,     // U^{-T}
    u_inv_adj: CMat,   // U^{-*T}
    u_inv_conj: CMat,  // U^{-*}
    v_conj: CMat,      // V*
    v_t: CMat,         // Vᵀ
    pair_zero: CMat,   // -V* U⁻ : the pair block at x̄ = 0
    s_conj: CMat,      // V^{*T} U^{-*T}
    abs_det_u: f64,
}

impl KernelMatrices {
    fn new(t: &SymplecticGaussian) -> Self {
        let u_inv = t
            .u()
            .clone()
            .try_inverse()
            .expect("U of a symplectic transformation is invertible");
        let u_inv_t = u_inv.transpose();
        let u_inv_adj = u_inv.adjoint();
        let u_inv_conj = u_inv.conjugate();
        let v_conj = t.v().conjugate();
        let v_t = t.v().transpose();
        let pair_zero = -(&v_conj * &u_inv);
        let s_conj = t.v().adjoint() * &u_inv_adj;
        let abs_det_u = t.u().clone().lu().determinant().norm();
        Self {
            u_inv,
            u_inv_t,
            u_inv_adj,
            u_inv_conj,
            v_conj,
            v_t,
            pair_zero,
            s_conj,
            abs_det_u,
        }
    }
}

/// Evaluates the kernel at a point of the physical domain `x̄ ∈ [0,1]^M`.
pub fn kernel_at(t: &SymplecticGaussian, x: &[f64]) -> Result<GeneratingKernel> {
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(UbsError::Domain(format!(
            "evaluation point {x:?} leaves [0,1]^M"
        )));
    }
    kernel_at_unchecked(t, x)
}

/// Point evaluation without the domain check; internal callers probe small
/// negative offsets for finite differencing.
pub(crate) fn kernel_at_unchecked(t: &SymplecticGaussian, x: &[f64]) -> Result<GeneratingKernel> {
    let m = t.mode_count();
    if x.len() != m {
        return Err(UbsError::Shape(format!(
            "expected {m} coordinates, got {}",
            x.len()
        )));
    }
    let k = KernelMatrices::new(t);
    let xd = CMat::from_fn(m, m, |i, j| if i == j { c(x[i]) } else { ZERO });

    // D = diag(1 - X U^{-*} V* X Vᵀ U^{-T})
    let inner = &xd * &k.u_inv_conj * &k.v_conj * &xd * &k.v_t * &k.u_inv_t;
    let mut diagonal = Vec::with_capacity(m);
    let mut dinv = CMat::zeros(m, m);
    let mut prefactor = c(1.0 / k.abs_det_u);
    for i in 0..m {
        let d = ONE - inner[(i, i)];
        if d.norm() < 1e-12 {
            return Err(UbsError::SingularKernel {
                mode: i,
                magnitude: d.norm(),
            });
        }
        dinv[(i, i)] = ONE / d;
        prefactor /= d.sqrt();
        diagonal.push(d);
    }

    // B = -(1 - U^{-*T} X D⁻ U⁻)
    let mixing_block =
        &k.u_inv_adj * &xd * &dinv * &k.u_inv - CMat::identity(m, m);
    // A = -V* U⁻ + U^{-T} X D⁻ V^{*T} U^{-*T} X U⁻
    let pair_block =
        &k.pair_zero + &k.u_inv_t * &xd * &dinv * &k.s_conj * &xd * &k.u_inv;

    let resid = symmetry_residual(&pair_block);
    if resid > 1e-10 * (1.0 + pair_block.norm()) {
        return Err(UbsError::Domain(format!(
            "pair block not symmetric (residual {resid:.3e}): the closed-form \
             kernel needs U⁻¹V diagonal, as produced by squeezer-then-interferometer transforms"
        )));
    }
    Ok(GeneratingKernel {
        pair_block,
        mixing_block,
        diagonal,
        prefactor,
        evaluation_point: x.to_vec(),
    })
}

/// The kernel with every entry carried as a truncated Taylor series in `x̄`.
#[derive(Debug, Clone)]
pub struct TaylorKernel {
    shape: TaylorShape,
    mode_count: usize,
    /// `A(x̄)` entries, row-major.
    pub pair_block: Vec<TaylorScalar>,
    /// `B(x̄)` entries, row-major.
    pub mixing_block: Vec<TaylorScalar>,
    pub diagonal: Vec<TaylorScalar>,
    pub prefactor: TaylorScalar,
}

impl TaylorKernel {
    pub fn shape(&self) -> &TaylorShape {
        &self.shape
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    /// Entry `(i, j)` of the `2M × 2M` detection matrix (mixing blocks
    /// shifted by the identity), assembled on demand.
    pub fn detection_entry(&self, i: usize, j: usize) -> TaylorScalar {
        let m = self.mode_count;
        let (row_creator, i0) = (i >= m, i % m);
        let (col_creator, j0) = (j >= m, j % m);
        match (row_creator, col_creator) {
            (false, false) => self.pair_block[i0 * m + j0].clone(),
            (true, true) => conj_series(&self.pair_block[i0 * m + j0]),
            (false, true) => shifted_mixing(self, i0, j0),
            (true, false) => shifted_mixing(self, j0, i0),
        }
    }
}

fn shifted_mixing(k: &TaylorKernel, row: usize, col: usize) -> TaylorScalar {
    let m = k.mode_count;
    let e = &k.mixing_block[row * m + col];
    if row == col {
        e.add_scalar(ONE)
    } else {
        e.clone()
    }
}

/// Conjugates every coefficient; valid as `f(x̄)*` because the variables are
/// real.
fn conj_series(t: &TaylorScalar) -> TaylorScalar {
    let shape = t.shape().clone();
    let mut out = TaylorScalar::zero(&shape);
    let orders = shape.orders().to_vec();
    let mut multi = vec![0usize; orders.len()];
    loop {
        let v = t.coeff(&multi);
        if v != ZERO {
            out = out.add(&monomial(&shape, &multi, v.conj()));
        }
        if !advance_multi(&mut multi, &orders) {
            break;
        }
    }
    out
}

fn monomial(shape: &TaylorShape, multi: &[usize], value: C64) -> TaylorScalar {
    let mut t = TaylorScalar::constant(shape, value);
    for (var, &deg) in multi.iter().enumerate() {
        for _ in 0..deg {
            t = t.mul(&TaylorScalar::linear(shape, var, ONE));
        }
    }
    t
}

fn advance_multi(multi: &mut [usize], orders: &[usize]) -> bool {
    for v in (0..multi.len()).rev() {
        if multi[v] < orders[v] {
            multi[v] += 1;
            return true;
        }
        multi[v] = 0;
    }
    false
}

/// Builds the kernel as Taylor series truncated at per-mode orders `orders`.
pub fn kernel_taylor(t: &SymplecticGaussian, orders: &[usize]) -> Result<TaylorKernel> {
    kernel_taylor_with_limit(t, orders, DEFAULT_ORDER_LIMIT)
}

pub fn kernel_taylor_with_limit(
    t: &SymplecticGaussian,
    orders: &[usize],
    order_limit: usize,
) -> Result<TaylorKernel> {
    let m = t.mode_count();
    if orders.len() != m {
        return Err(UbsError::Shape(format!(
            "expected {m} truncation orders, got {}",
            orders.len()
        )));
    }
    let total: usize = orders.iter().sum();
    if total > order_limit {
        return Err(UbsError::ResourceLimit(format!(
            "total Taylor order {total} exceeds the limit {order_limit}"
        )));
    }
    let k = KernelMatrices::new(t);
    let shape = TaylorShape::new(orders);

    // D_i = 1 - Σ_j x_i x_j (U^{-*} V*)_{ij} (Vᵀ U^{-T})_{ji}
    let m1 = &k.u_inv_conj * &k.v_conj;
    let m2 = &k.v_t * &k.u_inv_t;
    let mut diagonal = Vec::with_capacity(m);
    let mut dinv = Vec::with_capacity(m);
    let mut inv_sqrt = Vec::with_capacity(m);
    for i in 0..m {
        let mut d = TaylorScalar::constant(&shape, ONE);
        for j in 0..m {
            let coeff = m1[(i, j)] * m2[(j, i)];
            if coeff != ZERO {
                let xi = TaylorScalar::linear(&shape, i, ONE);
                let xj = TaylorScalar::linear(&shape, j, ONE);
                d = d.sub(&xi.mul(&xj).scale(coeff));
            }
        }
        dinv.push(d.recip());
        inv_sqrt.push(d.inv_sqrt());
        diagonal.push(d);
    }

    // g_i = x_i / D_i appears in both blocks
    let g: Vec<TaylorScalar> = (0..m)
        .map(|i| TaylorScalar::linear(&shape, i, ONE).mul(&dinv[i]))
        .collect();

    // B = -1 + U^{-*T} X D⁻ U⁻
    let mut mixing_block = vec![TaylorScalar::zero(&shape); m * m];
    for kk in 0..m {
        for l in 0..m {
            let mut e = if kk == l {
                TaylorScalar::constant(&shape, -ONE)
            } else {
                TaylorScalar::zero(&shape)
            };
            for i in 0..m {
                let w = k.u_inv_adj[(kk, i)] * k.u_inv[(i, l)];
                if w != ZERO {
                    e = e.add(&g[i].scale(w));
                }
            }
            mixing_block[kk * m + l] = e;
        }
    }

    // A = -V* U⁻ + U^{-T} X D⁻ V^{*T} U^{-*T} X U⁻
    let mut pair_block = vec![TaylorScalar::zero(&shape); m * m];
    let mut h = Vec::with_capacity(m * m); // h_ij = (x_i/D_i) x_j
    for i in 0..m {
        for j in 0..m {
            h.push(g[i].mul(&TaylorScalar::linear(&shape, j, ONE)));
        }
    }
    for kk in 0..m {
        for l in 0..m {
            let mut e = TaylorScalar::constant(&shape, k.pair_zero[(kk, l)]);
            for i in 0..m {
                for j in 0..m {
                    let w = k.u_inv_t[(kk, i)] * k.s_conj[(i, j)] * k.u_inv[(j, l)];
                    if w != ZERO {
                        e = e.add(&h[i * m + j].scale(w));
                    }
                }
            }
            pair_block[kk * m + l] = e;
        }
    }

    let mut prefactor = TaylorScalar::constant(&shape, c(1.0 / k.abs_det_u));
    for s in &inv_sqrt {
        prefactor = prefactor.mul(s);
    }

    let kernel = TaylorKernel {
        shape,
        mode_count: m,
        pair_block,
        mixing_block,
        diagonal,
        prefactor,
    };

    // constant terms must agree with the point evaluation at the origin
    let at_zero = kernel_at_unchecked(t, &vec![0.0; m])?;
    for i in 0..m {
        for j in 0..m {
            let da = (kernel.pair_block[i * m + j].constant_term() - at_zero.pair_block[(i, j)])
                .norm();
            let db = (kernel.mixing_block[i * m + j].constant_term()
                - at_zero.mixing_block[(i, j)])
                .norm();
            if da > 1e-12 || db > 1e-12 {
                return Err(UbsError::Integrity(format!(
                    "taylor kernel constant terms diverge at ({i},{j}): {da:.3e}/{db:.3e}"
                )));
            }
        }
    }
    if (kernel.prefactor.constant_term() - at_zero.prefactor).norm() > 1e-12 {
        return Err(UbsError::Integrity(
            "taylor prefactor constant term diverges".into(),
        ));
    }
    Ok(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::PhotonPattern;
    use crate::fock::{truncated_unitary, FockBasis, QuadraticFockOperator};
    use crate::symplectic::{
        build_circuit_transform, hamiltonian_coeffs, haar_unitary, random_symplectic, CircuitSpec,
        HamiltonianCoeffs, InterferometerSpec, SymplecticGaussian,
    };
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_has_zero_coefficients() {
        let no = normal_order_coefficients(&SymplecticGaussian::identity(3)).unwrap();
        assert!(no.pair_creation.norm() < 1e-14);
        assert!(no.pair_annihilation.norm() < 1e-14);
        assert!(no.mixing_log.norm() < 1e-14);
    }

    #[test]
    fn squeezer_coefficients_closed_form() {
        let r = 0.6f64;
        let no = normal_order_coefficients(&SymplecticGaussian::squeezer(&[r])).unwrap();
        assert_abs_diff_eq!(no.pair_creation[(0, 0)].re, -r.tanh() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(no.pair_annihilation[(0, 0)].re, r.tanh() / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(no.mixing_log[(0, 0)].re, -r.cosh().ln(), epsilon = 1e-12);
    }

    #[test]
    fn interferometer_coefficients_are_pure_mixing() {
        let w = haar_unitary(3, 31).unwrap();
        let t = SymplecticGaussian::interferometer(w.clone()).unwrap();
        let no = normal_order_coefficients(&t).unwrap();
        assert!(no.pair_creation.norm() < 1e-12);
        assert!(no.pair_annihilation.norm() < 1e-12);
        // U^{-*T} = W for unitary W
        let lw = crate::linalg::matrix_log(&w).unwrap();
        assert!((no.mixing_log - lw).norm() < 1e-9);
    }

    /// Builds exp(Q̂) on a truncated basis for a non-hermitian quadratic form
    /// by exponentiating i(-iQ̂).
    fn exp_quadratic(
        basis: &FockBasis,
        h11: Option<&CMat>,
        h12: Option<&CMat>,
        h21: Option<&CMat>,
        x: &[C64],
    ) -> Vec<C64> {
        let m = basis.modes();
        let mi = C64::new(0.0, -1.0);
        let mut h = CMat::zeros(2 * m, 2 * m);
        if let Some(b) = h11 {
            for i in 0..m {
                for j in 0..m {
                    h[(i, j)] = mi * b[(i, j)];
                }
            }
        }
        if let Some(b) = h12 {
            for i in 0..m {
                for j in 0..m {
                    h[(i, m + j)] = mi * b[(i, j)];
                }
            }
        }
        if let Some(b) = h21 {
            for i in 0..m {
                for j in 0..m {
                    h[(m + i, j)] = mi * b[(i, j)];
                }
            }
        }
        let op = QuadraticFockOperator::new(&HamiltonianCoeffs { h }, basis);
        op.exp_i_apply(x)
    }

    #[test]
    fn factored_product_reproduces_truncated_unitary() {
        // exp(a† B a†) e^{tr D/2} exp(D a†a) exp(a A a) column-by-column
        // against the dense exponential of the full generator. The two
        // constructions fix the global phase differently (the scalar carries
        // e^{i arg det U / 2} here, the generator splits it the other way),
        // so columns are compared after aligning on the vacuum amplitude.
        for (modes, seed, dbs, cutoff) in
            [(1usize, 3u64, vec![2.0], 18), (2, 8, vec![2.0, 1.5], 18)]
        {
            let spec = CircuitSpec {
                modes,
                squeezing_db: dbs,
                interferometer: InterferometerSpec::Haar { seed },
                scenario: "roundtrip".into(),
            };
            let t = build_circuit_transform(&spec).unwrap();
            let no = normal_order_coefficients(&t).unwrap();
            let h = hamiltonian_coeffs(&t).unwrap();
            let basis = FockBasis::new(modes, cutoff);
            let dense = truncated_unitary(&h, &basis).unwrap();

            let trace_half = (0..modes)
                .map(|i| no.mixing_log[(i, i)])
                .sum::<C64>()
                * c(0.5);
            let scalar = trace_half.exp();
            let vac = basis.index_of(&vec![0; modes]);
            let phase_align = dense.matrix[(vac, vac)] / scalar;
            assert_abs_diff_eq!(phase_align.norm(), 1.0, epsilon = 1e-6);

            for col in 0..basis.dim() {
                let occ = basis.occupation_of(col);
                if occ.iter().sum::<usize>() > 2 {
                    continue;
                }
                let mut state = vec![ZERO; basis.dim()];
                state[col] = ONE;
                let state = exp_quadratic(&basis, None, None, Some(&no.pair_annihilation), &state);
                let state = exp_quadratic(&basis, Some(&no.mixing_log), None, None, &state);
                let mut state = exp_quadratic(&basis, None, Some(&no.pair_creation), None, &state);
                let full = scalar * phase_align;
                state.iter_mut().for_each(|v| *v *= full);

                for row in 0..basis.dim() {
                    let row_occ = basis.occupation_of(row);
                    if row_occ.iter().sum::<usize>() > cutoff / 2 {
                        continue; // compare only the low sector
                    }
                    let want = dense.matrix[(row, col)];
                    assert!(
                        (state[row] - want).norm() < 1e-8,
                        "modes {modes} col {col} row {row}: {} vs {want}",
                        state[row]
                    );
                }
            }
        }
    }

    #[test]
    fn kernel_at_identity() {
        let t = SymplecticGaussian::identity(2);
        let k = kernel_at(&t, &[0.3, 0.8]).unwrap();
        assert!(k.pair_block.norm() < 1e-14);
        assert_abs_diff_eq!(k.mixing_block[(0, 0)].re, -0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(k.mixing_block[(1, 1)].re, -0.2, epsilon = 1e-14);
        assert!((k.diagonal[0] - ONE).norm() < 1e-14);
        assert!((k.prefactor - ONE).norm() < 1e-14);
    }

    #[test]
    fn kernel_at_squeezer_origin() {
        let r = 0.5f64;
        let t = SymplecticGaussian::squeezer(&[r]);
        let k = kernel_at(&t, &[0.0]).unwrap();
        assert_abs_diff_eq!(k.pair_block[(0, 0)].re, -r.tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(k.mixing_block[(0, 0)].re, -1.0, epsilon = 1e-12);
        assert!((k.diagonal[0] - ONE).norm() < 1e-12);
        assert_abs_diff_eq!(k.prefactor.re, 1.0 / r.cosh(), epsilon = 1e-12);
    }

    #[test]
    fn kernel_at_origin_pair_block_is_minus_vstar_uinv() {
        for seed in [2u64, 5, 9] {
            let t = random_symplectic(3, 0.7, seed);
            let k = kernel_at(&t, &[0.0, 0.0, 0.0]).unwrap();
            let expect = -(t.v().conjugate() * t.u().clone().try_inverse().unwrap());
            assert!((&k.pair_block - &expect).norm() < 1e-11);
            assert!(symmetry_residual(&k.pair_block) < 1e-10);
        }
    }

    #[test]
    fn kernel_domain_checks() {
        let t = SymplecticGaussian::identity(1);
        assert!(kernel_at(&t, &[1.5]).is_err());
        assert!(kernel_at(&t, &[-0.1]).is_err());
        assert!(kernel_at(&t, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn diagonal_formulations_agree() {
        // diag(1 - X U^{-*} V* X Vᵀ U^{-T}) == diag(1 - X U^{-*} V* X U⁻ V)
        // because U⁻¹V is symmetric for any symplectic transformation
        for seed in 0..20u64 {
            let t = random_symplectic(3, 0.8, 50 + seed);
            let u_inv = t.u().clone().try_inverse().unwrap();
            let x = [0.3, 0.9, 0.6];
            let xd = CMat::from_fn(3, 3, |i, j| if i == j { c(x[i]) } else { ZERO });
            let a = &xd * u_inv.conjugate() * t.v().conjugate() * &xd * t.v().transpose()
                * u_inv.transpose();
            let b = &xd * u_inv.conjugate() * t.v().conjugate() * &xd * &u_inv * t.v();
            for i in 0..3 {
                assert!((a[(i, i)] - b[(i, i)]).norm() < 1e-12, "seed {seed} mode {i}");
            }
        }
    }

    #[test]
    fn prefactor_positive_on_physical_domain() {
        let spec = CircuitSpec {
            modes: 3,
            squeezing_db: vec![10.0, 10.0, 10.0],
            interferometer: InterferometerSpec::Haar { seed: 77 },
            scenario: "strong".into(),
        };
        let t = build_circuit_transform(&spec).unwrap();
        for point in [[0.0; 3], [0.5; 3], [1.0; 3], [0.2, 0.9, 0.4]] {
            let k = kernel_at(&t, &point).unwrap();
            assert!(k.prefactor.norm() > 0.0);
            assert!(k.prefactor.im.abs() < 1e-12 && k.prefactor.re > 0.0);
        }
    }

    #[test]
    fn kernel_trace_identity() {
        // prefactor(x̄) / sqrt((-1)^M det G(x̄)) == Π 1/(1-x_k): the trace of
        // the generating operator, a strong end-to-end check of the kernel
        let spec = CircuitSpec {
            modes: 2,
            squeezing_db: vec![4.0, 2.0],
            interferometer: InterferometerSpec::Haar { seed: 13 },
            scenario: "trace".into(),
        };
        let t = build_circuit_transform(&spec).unwrap();
        for x in [[0.0, 0.0], [0.4, 0.7], [0.9, 0.2]] {
            let k = kernel_at(&t, &x).unwrap();
            let g = k.full_matrix();
            let det = g.lu().determinant();
            let sign = if t.mode_count() % 2 == 1 { -1.0 } else { 1.0 };
            let s = det * c(sign);
            assert!(s.im.abs() < 1e-10 && s.re > 0.0, "s = {s}");
            let trace = k.prefactor / s.sqrt();
            let expect: f64 = x.iter().map(|&v| 1.0 / (1.0 - v)).product();
            assert!(
                (trace - c(expect)).norm() < 1e-9,
                "x = {x:?}: trace {trace} vs {expect}"
            );
        }
    }

    #[test]
    fn taylor_kernel_constant_terms_and_linear_entry() {
        let t = SymplecticGaussian::identity(2);
        let k = kernel_taylor(&t, &[1, 1]).unwrap();
        // B_ii = -1 + x_i exactly
        let b00 = &k.mixing_block[0];
        assert!((b00.constant_term() + ONE).norm() < 1e-14);
        assert!((b00.coeff(&[1, 0]) - ONE).norm() < 1e-14);
        assert!(b00.coeff(&[0, 1]).norm() < 1e-14);

        // zero orders reproduce the point kernel
        let t = random_symplectic(2, 0.5, 3);
        let k0 = kernel_taylor(&t, &[0, 0]).unwrap();
        let at0 = kernel_at(&t, &[0.0, 0.0]).unwrap();
        assert!((k0.prefactor.constant_term() - at0.prefactor).norm() < 1e-12);
    }

    #[test]
    fn taylor_prefactor_second_derivative_matches_finite_differences() {
        let r = squeezing_db_to_r_local(5.0);
        let t = SymplecticGaussian::squeezer(&[r]);
        let k = kernel_taylor(&t, &[2]).unwrap();
        let series_d2 = k.prefactor.derivative_at_zero(&[2]);

        // Richardson-extrapolated central second difference of the scalar
        // prefactor x -> 1/(cosh r sqrt(1 - x² tanh² r))
        let f = |x: f64| {
            let k = kernel_at_unchecked(&t, &[x]).unwrap();
            k.prefactor.re
        };
        let h = 1e-4 * 2.0f64;
        let d2 = |step: f64| (f(step) - 2.0 * f(0.0) + f(-step)) / (step * step);
        let fd = (4.0 * d2(h / 2.0) - d2(h)) / 3.0;
        assert!(
            (series_d2.re - fd).abs() < 1e-6,
            "taylor {series_d2} vs fd {fd}"
        );
    }

    fn squeezing_db_to_r_local(db: f64) -> f64 {
        crate::symplectic::squeezing_db_to_r(db)
    }

    #[test]
    fn taylor_kernel_matches_point_evaluation() {
        // polynomial evaluation of the truncated series reproduces kernel_at
        // up to the truncation order
        let spec = CircuitSpec {
            modes: 2,
            squeezing_db: vec![3.0, 6.0],
            interferometer: InterferometerSpec::Haar { seed: 4 },
            scenario: "eval".into(),
        };
        let t = build_circuit_transform(&spec).unwrap();
        let k = kernel_taylor(&t, &[3, 3]).unwrap();
        let x = [0.05, 0.03];
        let at = kernel_at(&t, &x).unwrap();
        let m = 2;
        for i in 0..m {
            for j in 0..m {
                let series = k.pair_block[i * m + j].eval_real(&x);
                assert!(
                    (series - at.pair_block[(i, j)]).norm() < 1e-8,
                    "pair ({i},{j})"
                );
            }
        }
        let series = k.prefactor.eval_real(&x);
        assert!((series - at.prefactor).norm() < 1e-8);
    }

    #[test]
    fn order_limit_enforced() {
        let t = SymplecticGaussian::identity(3);
        assert!(matches!(
            kernel_taylor(&t, &[3, 3, 3]),
            Err(UbsError::ResourceLimit(_))
        ));
        assert!(kernel_taylor_with_limit(&t, &[3, 3, 3], 9).is_ok());
    }

    #[test]
    fn detection_matrix_shifts_mixing_only() {
        let t = SymplecticGaussian::squeezer(&[0.4]);
        let k = kernel_at(&t, &[0.0]).unwrap();
        let g = k.detection_matrix();
        // B(0) = -1 so the shifted mixing entry vanishes
        assert!(g[(0, 1)].norm() < 1e-13);
        assert!((g[(0, 0)] - k.pair_block[(0, 0)]).norm() < 1e-13);

        let kt = kernel_taylor(&t, &[1]).unwrap();
        let e01 = kt.detection_entry(0, 1);
        assert!((e01.constant_term()).norm() < 1e-13);
        let _ = PhotonPattern(vec![1]);
    }
}
