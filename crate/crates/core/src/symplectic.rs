//! Complex symplectic transformations in `(U, V)` block form.
//!
//! A multimode Gaussian transformation acts on the ladder-operator vector
//! `[a_1 .. a_M, a†_1 .. a†_M]` through the `2M × 2M` matrix
//!
//! ```text
//!     T = | U   V  |
//!         | V*  U* |
//! ```
//!
//! subject to `U U*ᵀ − V V*ᵀ = 1` and `U Vᵀ = V Uᵀ`. This module validates
//! and composes such transformations, decomposes them into
//! interferometer × squeezers × interferometer (Bloch-Messiah), builds them
//! from circuit descriptions (squeezers followed by an interferometer), and
//! recovers the hermitian Hamiltonian coefficient matrix that generates a
//! given transformation.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, UbsError};
use crate::linalg::{c, hermitian_eigen, matrix_exp, matrix_log, takagi, CMat, ONE, ZERO};

/// Symplectic-constraint tolerance used by [`validate_symplectic`].
pub const SYMPLECTIC_TOL: f64 = 1e-10;

/// Decibel-to-squeezing-parameter conversion factor: `r = ζ · ln(10) / 20`.
///
/// The field-quadrature convention `ζ = 10 log10(e^{2r})`. Callers that need a
/// different convention can convert externally and feed `ζ' = r · 20/ln(10)`.
pub const DB_TO_R: f64 = core::f64::consts::LN_10 / 20.0;

/// Converts a squeezing strength in decibels to the dimensionless parameter.
pub fn squeezing_db_to_r(db: f64) -> f64 {
    db * DB_TO_R
}

/// Residuals of the two symplectic constraints.
#[derive(Debug, Clone, Copy)]
pub struct SymplecticReport {
    /// Frobenius norm of `U U*ᵀ − V V*ᵀ − 1`.
    pub unitary_residual: f64,
    /// Frobenius norm of `U Vᵀ − V Uᵀ`.
    pub symmetry_residual: f64,
    pub pass: bool,
}

/// Checks the two symplectic constraints and reports both residual norms.
pub fn validate_symplectic(u: &CMat, v: &CMat) -> Result<SymplecticReport> {
    let m = u.nrows();
    if u.ncols() != m || v.nrows() != m || v.ncols() != m {
        return Err(UbsError::Shape(format!(
            "U and V must be square and equal-sized, got {}x{} and {}x{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    let id = CMat::identity(m, m);
    let unitary_residual = (u * u.adjoint() - v * v.adjoint() - id).norm();
    let symmetry_residual = (u * v.transpose() - v * u.transpose()).norm();
    Ok(SymplecticReport {
        unitary_residual,
        symmetry_residual,
        pass: unitary_residual < SYMPLECTIC_TOL && symmetry_residual < SYMPLECTIC_TOL,
    })
}

/// A validated multimode Gaussian transformation.
#[derive(Debug, Clone)]
pub struct SymplecticGaussian {
    mode_count: usize,
    u: CMat,
    v: CMat,
}

impl SymplecticGaussian {
    pub fn new(u: CMat, v: CMat) -> Result<Self> {
        let report = validate_symplectic(&u, &v)?;
        if !report.pass {
            return Err(UbsError::NotSymplectic {
                first: report.unitary_residual,
                second: report.symmetry_residual,
            });
        }
        Ok(Self {
            mode_count: u.nrows(),
            u,
            v,
        })
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            mode_count: modes,
            u: CMat::identity(modes, modes),
            v: CMat::zeros(modes, modes),
        }
    }

    /// Independent single-mode squeezers with parameters `r_i`.
    pub fn squeezer(rs: &[f64]) -> Self {
        let m = rs.len();
        let u = CMat::from_fn(m, m, |i, j| if i == j { c(rs[i].cosh()) } else { ZERO });
        let v = CMat::from_fn(m, m, |i, j| if i == j { c(rs[i].sinh()) } else { ZERO });
        Self {
            mode_count: m,
            u,
            v,
        }
    }

    /// Embeds a unitary interferometer (`V = 0`).
    pub fn interferometer(w: CMat) -> Result<Self> {
        let m = w.nrows();
        Self::new(w, CMat::zeros(m, m))
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn u(&self) -> &CMat {
        &self.u
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    /// The full `2M × 2M` phase-space matrix `[[U, V], [V*, U*]]`.
    pub fn full_matrix(&self) -> CMat {
        let m = self.mode_count;
        let mut t = CMat::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                t[(i, j)] = self.u[(i, j)];
                t[(i, m + j)] = self.v[(i, j)];
                t[(m + i, j)] = self.v[(i, j)].conj();
                t[(m + i, m + j)] = self.u[(i, j)].conj();
            }
        }
        t
    }

    pub fn report(&self) -> SymplecticReport {
        validate_symplectic(&self.u, &self.v).expect("shapes are valid by construction")
    }

    /// Relabels the modes by `perm` (new mode `i` is old mode `perm[i]`).
    pub fn permute_modes(&self, perm: &[usize]) -> Self {
        let m = self.mode_count;
        assert_eq!(perm.len(), m);
        let u = CMat::from_fn(m, m, |i, j| self.u[(perm[i], perm[j])]);
        let v = CMat::from_fn(m, m, |i, j| self.v[(perm[i], perm[j])]);
        Self {
            mode_count: m,
            u,
            v,
        }
    }
}

/// Applies `first`, then `second`; the block form of the matrix product
/// `T_second · T_first`.
pub fn compose(first: &SymplecticGaussian, second: &SymplecticGaussian) -> Result<SymplecticGaussian> {
    if first.mode_count != second.mode_count {
        return Err(UbsError::Shape(format!(
            "mode count mismatch: {} vs {}",
            first.mode_count, second.mode_count
        )));
    }
    let u = &second.u * &first.u + &second.v * first.v.conjugate();
    let v = &second.u * &first.v + &second.v * first.u.conjugate();
    SymplecticGaussian::new(u, v)
}

/// Bloch-Messiah factors `T = L · S · R` with `L`, `R` unitary blocks and `S`
/// the squeezer core built from `sigma_u` (descending) and `sigma_v`.
#[derive(Debug, Clone)]
pub struct BlochMessiahFactors {
    pub left: CMat,
    pub right: CMat,
    pub sigma_u: Vec<f64>,
    pub sigma_v: Vec<C64>,
}

impl BlochMessiahFactors {
    /// Reassembles the `(U, V)` blocks `U = L σ_u R`, `V = L σ_v R*`.
    pub fn reconstruct(&self) -> Result<SymplecticGaussian> {
        let m = self.sigma_u.len();
        let su = CMat::from_fn(m, m, |i, j| if i == j { c(self.sigma_u[i]) } else { ZERO });
        let sv = CMat::from_fn(m, m, |i, j| if i == j { self.sigma_v[i] } else { ZERO });
        let u = &self.left * su * &self.right;
        let v = &self.left * sv * self.right.conjugate();
        SymplecticGaussian::new(u, v)
    }

    /// Squeezing parameters `z_i = artanh(σ_v,i / σ_u,i)` of the core.
    pub fn squeeze_parameters(&self) -> Vec<C64> {
        self.sigma_u
            .iter()
            .zip(self.sigma_v.iter())
            .map(|(&su, &sv)| {
                let ratio = sv / c(su);
                // artanh for |ratio| < 1; sigma_v is real-normalized here
                c(ratio.re.atanh()) + C64::new(0.0, ratio.im)
            })
            .collect()
    }
}

/// Groups indices of a descending list into clusters within `tol`.
fn descending_groups(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..values.len() {
        match groups.last_mut() {
            Some(g) if (values[*g.last().unwrap()] - values[i]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Bloch-Messiah decomposition through the hermitian eigenproblem of `U U*ᵀ`
/// and a Takagi pairing of `V` inside degenerate singular-value groups.
///
/// `sigma_u` comes out sorted descending; `sigma_v` is phase-normalized to be
/// real and nonnegative. Degenerate groups get an arbitrary-but-deterministic
/// orthonormal basis.
pub fn bloch_messiah(t: &SymplecticGaussian) -> Result<BlochMessiahFactors> {
    let m = t.mode_count;
    let gram = t.u() * t.u().adjoint();
    let (vals, vecs) = hermitian_eigen(&gram);
    let mut left = CMat::zeros(m, m);
    for i in 0..m {
        left.set_column(i, &vecs.column(m - 1 - i));
    }
    let sigma_u: Vec<f64> = (0..m).map(|i| vals[m - 1 - i].max(1.0).sqrt()).collect();

    // R = σ_u^{-1} L† U is unitary; N = L† V Rᵀ must be diagonalized within
    // each degenerate σ_u group by a Takagi rotation.
    let inv_su = CMat::from_fn(m, m, |i, j| {
        if i == j {
            c(1.0 / sigma_u[i])
        } else {
            ZERO
        }
    });
    let mut right = inv_su * left.adjoint() * t.u();
    let mut n_mat = left.adjoint() * t.v() * right.transpose();

    let scale = sigma_u.first().copied().unwrap_or(1.0);
    for group in descending_groups(&sigma_u, 1e-7 * scale) {
        let k = group.len();
        let mut block = CMat::zeros(k, k);
        for (a, &ga) in group.iter().enumerate() {
            for (b, &gb) in group.iter().enumerate() {
                block[(a, b)] = n_mat[(ga, gb)];
            }
        }
        // symmetrize away numerical dust before the Takagi step
        let block = (&block + block.transpose()) * c(0.5);
        if block.norm() <= 1e-13 * (1.0 + scale) {
            continue; // no squeezing in this group
        }
        let (q, _) = takagi(&block)?;
        // L_g <- L_g Q, R_g <- Q† R_g
        let mut lg = CMat::zeros(m, k);
        for (b, &gb) in group.iter().enumerate() {
            lg.set_column(b, &left.column(gb));
        }
        let lg_new = lg * &q;
        for (b, &gb) in group.iter().enumerate() {
            left.set_column(gb, &lg_new.column(b));
        }
        let mut rg = CMat::zeros(k, m);
        for (a, &ga) in group.iter().enumerate() {
            rg.set_row(a, &right.row(ga));
        }
        let rg_new = q.adjoint() * rg;
        for (a, &ga) in group.iter().enumerate() {
            right.set_row(ga, &rg_new.row(a));
        }
    }
    n_mat = left.adjoint() * t.v() * right.transpose();

    // the Takagi rotations leave real nonnegative diagonal entries
    let mut sigma_v = Vec::with_capacity(m);
    for i in 0..m {
        let d = n_mat[(i, i)];
        if d.im.abs() > 1e-9 * (1.0 + d.norm()) {
            return Err(UbsError::Integrity(format!(
                "squeezing singular value {i} kept a phase ({d})"
            )));
        }
        sigma_v.push(c(d.re.max(0.0)));
    }

    let factors = BlochMessiahFactors {
        left,
        right,
        sigma_u: sigma_u.clone(),
        sigma_v,
    };

    // invariants: unitarity, pairing, reconstruction
    let id = CMat::identity(m, m);
    let lu = (factors.left.adjoint() * &factors.left - &id).norm();
    let ru = (factors.right.adjoint() * &factors.right - &id).norm();
    if lu > 1e-10 || ru > 1e-10 {
        return Err(UbsError::Integrity(format!(
            "bloch-messiah factors lost unitarity ({lu:.3e}, {ru:.3e})"
        )));
    }
    for i in 0..m {
        let gap = (sigma_u[i] * sigma_u[i] - 1.0 - factors.sigma_v[i].norm_sqr()).abs();
        if gap > 1e-8 {
            return Err(UbsError::Integrity(format!(
                "singular-value pairing violated at mode {i} (gap {gap:.3e})"
            )));
        }
    }
    let rec = factors.reconstruct()?;
    let resid = (rec.u() - t.u()).norm() + (rec.v() - t.v()).norm();
    if resid > 1e-9 * (1.0 + t.u().norm()) {
        return Err(UbsError::Integrity(format!(
            "bloch-messiah reconstruction residual {resid:.3e}"
        )));
    }
    Ok(factors)
}

/// Haar-distributed random unitary: QR of a complex Ginibre matrix with the
/// R-diagonal phases folded back into Q. Deterministic for a fixed seed.
pub fn haar_unitary(modes: usize, seed: u64) -> Result<CMat> {
    if modes == 0 {
        return Err(UbsError::Shape("haar_unitary needs at least one mode".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let g = CMat::from_fn(modes, modes, |_, _| C64::new(draw(), draw()));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..modes {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / c(d.norm()) } else { ONE };
        for i in 0..modes {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// How the interferometer of a circuit is specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InterferometerSpec {
    Haar { seed: u64 },
    Explicit { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

/// A squeezers-then-interferometer circuit description.
///
/// Serializes to `{"modes": M, "squeezing_db": [...], "interferometer":
/// {"type": "haar", "seed": n} | {"type": "explicit", "re": [[..]], "im":
/// [[..]]}, "scenario": "..."}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub modes: usize,
    pub squeezing_db: Vec<f64>,
    pub interferometer: InterferometerSpec,
    pub scenario: String,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.squeezing_db.len() != self.modes {
            return Err(UbsError::Shape(format!(
                "squeezing_db has {} entries for {} modes",
                self.squeezing_db.len(),
                self.modes
            )));
        }
        for (i, &db) in self.squeezing_db.iter().enumerate() {
            if !db.is_finite() || db < 0.0 {
                return Err(UbsError::Domain(format!(
                    "squeezing_db[{i}] = {db} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }

    pub fn interferometer_matrix(&self) -> Result<CMat> {
        match &self.interferometer {
            InterferometerSpec::Haar { seed } => haar_unitary(self.modes, *seed),
            InterferometerSpec::Explicit { re, im } => {
                let m = self.modes;
                if re.len() != m || im.len() != m || re.iter().any(|r| r.len() != m)
                    || im.iter().any(|r| r.len() != m)
                {
                    return Err(UbsError::Shape(
                        "explicit interferometer must be modes x modes".into(),
                    ));
                }
                let w = CMat::from_fn(m, m, |i, j| C64::new(re[i][j], im[i][j]));
                let unit = (&w * w.adjoint() - CMat::identity(m, m)).norm();
                if unit > 1e-8 {
                    return Err(UbsError::Domain(format!(
                        "explicit interferometer not unitary (residual {unit:.3e})"
                    )));
                }
                Ok(w)
            }
        }
    }
}

/// Builds the transform of a circuit: squeezers first, interferometer second,
/// `T = T_W · T_S` with `r_i = ζ_i · ln(10)/20`.
pub fn build_circuit_transform(spec: &CircuitSpec) -> Result<SymplecticGaussian> {
    spec.validate()?;
    let rs: Vec<f64> = spec.squeezing_db.iter().map(|&db| squeezing_db_to_r(db)).collect();
    let squeezers = SymplecticGaussian::squeezer(&rs);
    let w = spec.interferometer_matrix()?;
    let interferometer = SymplecticGaussian::interferometer(w)?;
    compose(&squeezers, &interferometer)
}

/// Hermitian coefficient matrix of the quadratic Hamiltonian generating a
/// transformation.
#[derive(Debug, Clone)]
pub struct HamiltonianCoeffs {
    pub h: CMat,
}

impl HamiltonianCoeffs {
    pub fn mode_count(&self) -> usize {
        self.h.nrows() / 2
    }

    /// Blocks `(H11, H12, H21, H22)` coupling `a†a`, `a†a†`, `aa`, `aa†`.
    pub fn blocks(&self) -> (CMat, CMat, CMat, CMat) {
        let m = self.mode_count();
        let b = |r0: usize, c0: usize| CMat::from_fn(m, m, |i, j| self.h[(r0 + i, c0 + j)]);
        (b(0, 0), b(0, m), b(m, 0), b(m, m))
    }

    /// The phase-space matrix `exp` of this generator: the transformation it
    /// produces when exponentiated.
    pub fn propagate(&self) -> CMat {
        let m = self.mode_count();
        let (h11, h12, h21, h22) = self.blocks();
        let g1 = &h11 + h22.transpose();
        let g2 = &h12 + h12.transpose();
        let g3 = &h21 + h21.transpose();
        let mut k = CMat::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                k[(i, j)] = -g1[(i, j)];
                k[(i, m + j)] = -g2[(i, j)];
                k[(m + i, j)] = g3[(i, j)];
                k[(m + i, m + j)] = g1[(j, i)];
            }
        }
        matrix_exp(&(k * C64::new(0.0, 1.0)))
    }
}

/// Recovers the Hamiltonian coefficients of a transformation from the
/// principal logarithm of its phase-space matrix.
///
/// Fails with [`UbsError::LogBranchFailure`] when the spectrum touches the
/// negative real axis; callers may then fall back to the Bloch-Messiah
/// factors, each of which has a safe logarithm.
pub fn hamiltonian_coeffs(t: &SymplecticGaussian) -> Result<HamiltonianCoeffs> {
    let m = t.mode_count();
    let x = matrix_log(&t.full_matrix())?;
    let sub = |r0: usize, c0: usize| CMat::from_fn(m, m, |i, j| x[(r0 + i, c0 + j)]);
    let x11 = sub(0, 0);
    let x12 = sub(0, m);
    let x21 = sub(m, 0);
    let half_i = C64::new(0.0, 0.5);
    let mut h = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            h[(i, j)] = half_i * x11[(i, j)];
            h[(i, m + j)] = half_i * x12[(i, j)];
            h[(m + i, j)] = -half_i * x21[(i, j)];
            h[(m + i, m + j)] = half_i * x11[(j, i)];
        }
    }
    let coeffs = HamiltonianCoeffs { h };

    let herm = crate::linalg::hermiticity_residual(&coeffs.h);
    if herm > 1e-10 * (1.0 + coeffs.h.norm()) {
        return Err(UbsError::Integrity(format!(
            "hamiltonian coefficients not hermitian (residual {herm:.3e})"
        )));
    }
    let rec = coeffs.propagate();
    let resid = (&rec - t.full_matrix()).norm();
    if resid > 1e-8 * (1.0 + t.full_matrix().norm()) {
        return Err(UbsError::Integrity(format!(
            "generator does not reproduce the transformation (residual {resid:.3e})"
        )));
    }
    Ok(coeffs)
}

/// Closed-form generator of a single-mode-squeezer bank with parameters `z`.
pub fn squeezer_hamiltonian(z: &[C64]) -> HamiltonianCoeffs {
    let m = z.len();
    let mut h = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        h[(i, m + i)] = C64::new(0.0, 0.5) * z[i];
        h[(m + i, i)] = -C64::new(0.0, 0.5) * z[i].conj();
    }
    HamiltonianCoeffs { h }
}

/// Closed-form generator of a pure interferometer `W`.
pub fn interferometer_hamiltonian(w: &CMat) -> Result<HamiltonianCoeffs> {
    let m = w.nrows();
    let lw = crate::linalg::unitary_log(w)?;
    let half_i = C64::new(0.0, 0.5);
    let mut h = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            h[(i, j)] = half_i * lw[(i, j)];
            h[(m + i, m + j)] = half_i * lw[(j, i)];
        }
    }
    Ok(HamiltonianCoeffs { h })
}

/// Random symplectic transformation built as Haar ∘ squeezers ∘ Haar:
/// general-position test input with controlled squeezing strength.
pub fn random_symplectic(modes: usize, max_r: f64, seed: u64) -> SymplecticGaussian {
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    use rand::Rng;
    let rs: Vec<f64> = (0..modes).map(|_| rng.gen::<f64>() * max_r).collect();
    let l = haar_unitary(modes, rng.gen()).expect("modes >= 1");
    let r = haar_unitary(modes, rng.gen()).expect("modes >= 1");
    let a = SymplecticGaussian::interferometer(r).unwrap();
    let s = SymplecticGaussian::squeezer(&rs);
    let b = SymplecticGaussian::interferometer(l).unwrap();
    compose(&compose(&a, &s).unwrap(), &b).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn validate_identity_and_squeezer() {
        let m = 1;
        let id = CMat::identity(m, m);
        let z = CMat::zeros(m, m);
        let rep = validate_symplectic(&id, &z).unwrap();
        assert!(rep.pass && rep.unitary_residual == 0.0 && rep.symmetry_residual == 0.0);

        let r = 0.3f64;
        let u = CMat::from_element(1, 1, c(r.cosh()));
        let v = CMat::from_element(1, 1, c(r.sinh()));
        assert!(validate_symplectic(&u, &v).unwrap().pass);

        let v_bad = CMat::from_element(1, 1, c(2.0 * r.sinh()));
        let rep = validate_symplectic(&u, &v_bad).unwrap();
        assert!(!rep.pass);
        assert_abs_diff_eq!(rep.unitary_residual, 3.0 * r.sinh().powi(2), epsilon = 1e-14);
    }

    #[test]
    fn validate_rejects_shape_mismatch() {
        let u = CMat::identity(2, 2);
        let v = CMat::zeros(1, 1);
        assert!(validate_symplectic(&u, &v).is_err());
    }

    #[test]
    fn compose_identity_and_inverse_pair() {
        let t = random_symplectic(3, 0.6, 5);
        let id = SymplecticGaussian::identity(3);
        let same = compose(&id, &t).unwrap();
        assert!((same.u() - t.u()).norm() < 1e-12);

        let s = SymplecticGaussian::squeezer(&[0.4]);
        let s_inv = SymplecticGaussian::squeezer(&[-0.4]);
        let prod = compose(&s, &s_inv).unwrap();
        assert!((prod.u() - CMat::identity(1, 1)).norm() < 1e-12);
        assert!(prod.v().norm() < 1e-12);
    }

    #[test]
    fn compose_of_random_pairs_is_symplectic() {
        for seed in 0..100u64 {
            let t1 = random_symplectic(3, 0.7, 2 * seed);
            let t2 = random_symplectic(3, 0.7, 2 * seed + 1);
            let t = compose(&t1, &t2).unwrap();
            assert!(t.report().pass, "seed {seed}");
        }
    }

    #[test]
    fn compose_associativity() {
        for seed in 0..10u64 {
            for m in 1..=4usize {
                let a = random_symplectic(m, 0.5, 3 * seed);
                let b = random_symplectic(m, 0.5, 3 * seed + 1);
                let d = random_symplectic(m, 0.5, 3 * seed + 2);
                let left = compose(&compose(&a, &b).unwrap(), &d).unwrap();
                let right = compose(&a, &compose(&b, &d).unwrap()).unwrap();
                assert!(
                    (left.u() - right.u()).norm() + (left.v() - right.v()).norm() < 1e-12,
                    "seed {seed} m {m}"
                );
            }
        }
    }

    #[test]
    fn bloch_messiah_identity_and_squeezer() {
        let f = bloch_messiah(&SymplecticGaussian::identity(2)).unwrap();
        assert!(f.sigma_u.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert!(f.sigma_v.iter().all(|z| z.norm() < 1e-12));

        let r = 0.7f64;
        let f = bloch_messiah(&SymplecticGaussian::squeezer(&[r])).unwrap();
        assert_abs_diff_eq!(f.sigma_u[0], r.cosh(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.sigma_v[0].re, r.sinh(), epsilon = 1e-12);
    }

    #[test]
    fn bloch_messiah_random_reconstruction() {
        for seed in 0..30u64 {
            let t = random_symplectic(4, 0.8, seed + 100);
            let f = bloch_messiah(&t).unwrap();
            let rec = f.reconstruct().unwrap();
            let resid = (rec.u() - t.u()).norm() + (rec.v() - t.v()).norm();
            assert!(resid < 1e-10, "seed {seed}: residual {resid:.3e}");
            assert!(f.sigma_u.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        }
    }

    #[test]
    fn bloch_messiah_degenerate_squeezing() {
        // equal squeezing on every mode: fully degenerate sigma_u
        let spec = CircuitSpec {
            modes: 3,
            squeezing_db: vec![4.0, 4.0, 4.0],
            interferometer: InterferometerSpec::Haar { seed: 9 },
            scenario: "test".into(),
        };
        let t = build_circuit_transform(&spec).unwrap();
        let f = bloch_messiah(&t).unwrap();
        let rec = f.reconstruct().unwrap();
        assert!((rec.u() - t.u()).norm() + (rec.v() - t.v()).norm() < 1e-10);
    }

    #[test]
    fn bloch_messiah_redecomposition_is_stable() {
        let t = random_symplectic(4, 0.9, 41);
        let f1 = bloch_messiah(&t).unwrap();
        let f2 = bloch_messiah(&f1.reconstruct().unwrap()).unwrap();
        for i in 0..4 {
            assert!((f1.sigma_u[i] - f2.sigma_u[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn haar_unitary_determinism_and_unitarity() {
        let a = haar_unitary(4, 42).unwrap();
        let b = haar_unitary(4, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.adjoint() * &a - CMat::identity(4, 4)).norm() < 1e-12);
        assert!(haar_unitary(0, 1).is_err());

        let w = haar_unitary(1, 7).unwrap();
        assert_abs_diff_eq!(w[(0, 0)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn haar_unitary_seed_collisions() {
        let mats: Vec<CMat> = (0..100).map(|s| haar_unitary(3, s).unwrap()).collect();
        for i in 0..mats.len() {
            for j in i + 1..mats.len() {
                assert!((&mats[i] - &mats[j]).norm() > 1e-6, "seeds {i} {j} collided");
            }
        }
    }

    #[test]
    fn haar_moment_matches_measure() {
        // mean of |U_00|^2 over many draws: 1/M within 3 standard errors
        let m = 4;
        let draws = 10_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for s in 0..draws {
            let u = haar_unitary(m, 5_000_000 + s).unwrap();
            let x = u[(0, 0)].norm_sqr();
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / draws as f64;
        let var = (sumsq / draws as f64 - mean * mean).max(0.0);
        let se = (var / draws as f64).sqrt();
        assert!(
            (mean - 1.0 / m as f64).abs() < 3.0 * se,
            "mean {mean}, se {se}"
        );
    }

    #[test]
    fn circuit_construction() {
        let spec = CircuitSpec {
            modes: 2,
            squeezing_db: vec![0.0, 0.0],
            interferometer: InterferometerSpec::Explicit {
                re: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                im: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            },
            scenario: "idle".into(),
        };
        let t = build_circuit_transform(&spec).unwrap();
        assert!((t.u() - CMat::identity(2, 2)).norm() < 1e-14);
        assert!(t.v().norm() < 1e-14);

        // single mode: r = 0.5 via dB conversion
        let db = 0.5 / DB_TO_R;
        let spec = CircuitSpec {
            modes: 1,
            squeezing_db: vec![db],
            interferometer: InterferometerSpec::Explicit {
                re: vec![vec![1.0]],
                im: vec![vec![0.0]],
            },
            scenario: "sq".into(),
        };
        let t = build_circuit_transform(&spec).unwrap();
        assert_abs_diff_eq!(t.u()[(0, 0)].re, 0.5f64.cosh(), epsilon = 1e-12);
        assert_abs_diff_eq!(t.v()[(0, 0)].re, 0.5f64.sinh(), epsilon = 1e-12);

        let bad = CircuitSpec {
            modes: 1,
            squeezing_db: vec![-1.0],
            interferometer: InterferometerSpec::Haar { seed: 0 },
            scenario: String::new(),
        };
        assert!(build_circuit_transform(&bad).is_err());

        // saturated-style spec validates
        let spec = CircuitSpec {
            modes: 2,
            squeezing_db: vec![3.0, 3.0],
            interferometer: InterferometerSpec::Haar { seed: 11 },
            scenario: "saturated".into(),
        };
        let t = build_circuit_transform(&spec).unwrap();
        assert!(t.report().pass);
    }

    #[test]
    fn circuit_spec_json_roundtrip() {
        let spec = CircuitSpec {
            modes: 2,
            squeezing_db: vec![3.0, 0.0],
            interferometer: InterferometerSpec::Haar { seed: 17 },
            scenario: "saturated".into(),
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"type\":\"haar\""), "{text}");
        assert!(text.contains("\"modes\":2"));
        let back: CircuitSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.modes, 2);
        let explicit = r#"{"modes":1,"squeezing_db":[0.0],
            "interferometer":{"type":"explicit","re":[[1.0]],"im":[[0.0]]},
            "scenario":"x"}"#;
        let spec: CircuitSpec = serde_json::from_str(explicit).unwrap();
        assert!(build_circuit_transform(&spec).is_ok());
    }

    #[test]
    fn hamiltonian_identity_is_zero() {
        let h = hamiltonian_coeffs(&SymplecticGaussian::identity(2)).unwrap();
        assert!(h.h.norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_of_squeezer_matches_closed_form() {
        let r = 0.45f64;
        let t = SymplecticGaussian::squeezer(&[r]);
        let h = hamiltonian_coeffs(&t).unwrap();
        let expected = squeezer_hamiltonian(&[c(r)]);
        assert!((&h.h - &expected.h).norm() < 1e-10);
        assert!((h.propagate() - t.full_matrix()).norm() < 1e-10);
    }

    #[test]
    fn hamiltonian_of_interferometer_matches_closed_form() {
        let w = haar_unitary(3, 23).unwrap();
        let t = SymplecticGaussian::interferometer(w.clone()).unwrap();
        let h = hamiltonian_coeffs(&t).unwrap();
        let closed = interferometer_hamiltonian(&w).unwrap();
        assert!((&h.h - &closed.h).norm() < 1e-9);
        assert!((closed.propagate() - t.full_matrix()).norm() < 1e-9);
    }

    #[test]
    fn hamiltonian_random_roundtrip() {
        // general-position symplectics can carry negative-real spectrum, for
        // which the principal log legitimately fails; everything else must
        // round-trip
        let mut ok = 0;
        for seed in 0..20u64 {
            let t = random_symplectic(3, 0.6, 900 + seed);
            match hamiltonian_coeffs(&t) {
                Ok(h) => {
                    assert!(crate::linalg::hermiticity_residual(&h.h) < 1e-10);
                    assert!((h.propagate() - t.full_matrix()).norm() < 1e-8);
                    ok += 1;
                }
                Err(UbsError::LogBranchFailure(_)) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
        assert!(ok >= 12, "only {ok}/20 seeds yielded a principal generator");
    }

    #[test]
    fn db_conversion_constant() {
        // zeta = 10 log10(e^{2r})  <=>  r = zeta ln(10)/20
        let r = 0.55;
        let zeta = 10.0 * (2.0 * r as f64).exp().log10();
        assert_abs_diff_eq!(squeezing_db_to_r(zeta), r, epsilon = 1e-12);
    }
}
