//! Dense complex linear algebra helpers: matrix exponential and principal
//! logarithm, Takagi factorization of complex symmetric matrices, and a sorted
//! hermitian eigensolver.
//!
//! Everything here operates on [`CMat`] (dynamically sized `Complex64`
//! matrices). Sizes in this crate are desk-scale (a few dozen rows at most for
//! phase-space objects), so plain dense algorithms are used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Result, UbsError};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Maximum absolute column sum (induced 1-norm).
pub fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frobenius distance to the hermitian-conjugate, i.e. how far `a` is from
/// being hermitian.
pub fn hermiticity_residual(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

/// Frobenius distance to the transpose.
pub fn symmetry_residual(a: &CMat) -> f64 {
    (a - a.transpose()).norm()
}

/// Matrix exponential by scaling-and-squaring with the degree-13 Padé
/// approximant.
pub fn matrix_exp(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix_exp requires a square matrix");
    // theta_13 from Higham's 2005 analysis.
    const THETA13: f64 = 5.371920351148152;
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let s = s.clamp(0, 60);
    let x = a * c(0.5f64.powi(s));

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id = CMat::identity(n, n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x2 * &x4;
    let u_inner = &x6 * c(B[13]) + &x4 * c(B[11]) + &x2 * c(B[9]);
    let u = &x * (&x6 * u_inner + &x6 * c(B[7]) + &x4 * c(B[5]) + &x2 * c(B[3]) + &id * c(B[1]));
    let v_inner = &x6 * c(B[12]) + &x4 * c(B[10]) + &x2 * c(B[8]);
    let v = &x6 * v_inner + &x6 * c(B[6]) + &x4 * c(B[4]) + &x2 * c(B[2]) + &id * c(B[0]);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut e = lhs
        .lu()
        .solve(&rhs)
        .expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

/// Principal square root of an upper-triangular matrix by the
/// Björck–Hammarling recurrence. Diagonal entries take the principal scalar
/// root, so the result is the principal branch by construction.
fn sqrt_triangular(t: &CMat) -> Result<CMat> {
    let n = t.nrows();
    let mut r = CMat::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for off in 1..n {
        for i in 0..n - off {
            let j = i + off;
            let mut sum = t[(i, j)];
            for k in i + 1..j {
                sum -= r[(i, k)] * r[(k, j)];
            }
            let denom = r[(i, i)] + r[(j, j)];
            if denom.norm() < 1e-14 {
                return Err(UbsError::LogBranchFailure(
                    "triangular square root hit cancelling eigenvalue pair".into(),
                ));
            }
            r[(i, j)] = sum / denom;
        }
    }
    Ok(r)
}

/// Principal matrix logarithm by inverse scaling-and-squaring on the Schur
/// form.
///
/// The complex Schur factor has the eigenvalues on its diagonal, so spectrum
/// on the negative real axis is detected exactly and reported as
/// [`UbsError::LogBranchFailure`] rather than silently perturbed. Square
/// roots of the triangular factor are taken until it is close to the
/// identity, then `log(x) = 2 atanh((x-1)(x+1)^-1)` is summed as a series.
pub fn matrix_log(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix_log requires a square matrix");
    let schur = a.clone().schur();
    let (q, mut t) = schur.unpack();
    // enforce exact triangularity (the factor can carry subdiagonal dust)
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    for i in 0..n {
        let lam = t[(i, i)];
        if lam.norm() < 1e-300 {
            return Err(UbsError::LogBranchFailure("singular input".into()));
        }
        if lam.re < 0.0 && lam.im.abs() <= 1e-13 * lam.norm() {
            return Err(UbsError::LogBranchFailure(format!(
                "eigenvalue {lam} on the negative real axis"
            )));
        }
    }

    let id = CMat::identity(n, n);
    let mut k = 0u32;
    while (&t - &id).norm() > 0.25 {
        if k >= 60 {
            return Err(UbsError::LogBranchFailure(
                "too many square roots without contraction".into(),
            ));
        }
        t = sqrt_triangular(&t)?;
        k += 1;
    }

    // atanh series in w = (t-1)(t+1)^-1, ||w|| <= ~0.13 here.
    let num = &t - &id;
    let den = &t + &id;
    let w = den
        .lu()
        .solve(&num)
        .ok_or_else(|| UbsError::LogBranchFailure("t + I singular".into()))?;
    let w2 = &w * &w;
    let mut term = w.clone();
    let mut acc = w.clone();
    let mut m = 1u32;
    loop {
        term = &term * &w2;
        m += 2;
        acc += &term * c(1.0 / m as f64);
        if term.norm() / m as f64 <= 1e-18 || m > 99 {
            break;
        }
    }
    let lg = &q * acc * c(2.0 * 2f64.powi(k as i32)) * q.adjoint();

    let residual = (matrix_exp(&lg) - a).norm();
    if residual > 1e-8 * (1.0 + a.norm()) {
        return Err(UbsError::LogBranchFailure(format!(
            "re-exponentiation residual {residual:.3e}"
        )));
    }
    Ok(lg)
}

/// Skew-hermitian logarithm of a unitary matrix.
///
/// Unitaries are normal, so the Schur form is diagonal and the log acts on
/// unit-modulus eigenvalues; an eigenvalue at `-1` takes phase `±π` by the
/// principal argument instead of failing (either sign reproduces the input).
pub fn unitary_log(w: &CMat) -> Result<CMat> {
    let n = w.nrows();
    let unit = (w * w.adjoint() - CMat::identity(n, n)).norm();
    if unit > 1e-8 * (1.0 + w.norm()) {
        return Err(UbsError::Domain(format!(
            "unitary_log input not unitary (residual {unit:.3e})"
        )));
    }
    let (q, t) = w.clone().schur().unpack();
    let mut lg = CMat::zeros(n, n);
    for i in 0..n {
        lg[(i, i)] = t[(i, i)].ln();
    }
    let x = &q * lg * q.adjoint();
    let residual = (matrix_exp(&x) - w).norm();
    if residual > 1e-9 * (1.0 + w.norm()) {
        return Err(UbsError::LogBranchFailure(format!(
            "unitary log re-exponentiation residual {residual:.3e}"
        )));
    }
    Ok(x)
}

/// Eigendecomposition of a hermitian matrix, eigenvalues sorted ascending.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Groups indices of a descending-sorted value list into clusters closer than
/// `tol` to their neighbor.
fn degeneracy_groups(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..values.len() {
        match groups.last_mut() {
            Some(g) if (values[g[g.len() - 1]] - values[i]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Jointly diagonalizes a pair of commuting real symmetric matrices.
///
/// Returns a real orthogonal matrix (as a `CMat` with zero imaginary part)
/// whose columns diagonalize both inputs.
fn joint_real_diagonalization(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let ex = nalgebra::SymmetricEigen::new(x.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ex.eigenvalues[j].total_cmp(&ex.eigenvalues[i]));
    let mut basis = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        basis.set_column(dst, &ex.eigenvectors.column(src));
    }
    let sorted: Vec<f64> = order.iter().map(|&i| ex.eigenvalues[i]).collect();
    let scale = sorted.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for group in degeneracy_groups(&sorted, 1e-8 * scale) {
        if group.len() < 2 {
            continue;
        }
        let cols: Vec<usize> = group.clone();
        let mut sub = DMatrix::<f64>::zeros(n, cols.len());
        for (j, &cidx) in cols.iter().enumerate() {
            sub.set_column(j, &basis.column(cidx));
        }
        let projected = sub.transpose() * y * &sub;
        let ey = nalgebra::SymmetricEigen::new(projected);
        let rotated = &sub * ey.eigenvectors;
        for (j, &cidx) in cols.iter().enumerate() {
            basis.set_column(cidx, &rotated.column(j));
        }
    }
    basis
}

/// Symmetric unitary square root: for symmetric unitary `z` returns symmetric
/// unitary `s` with `s * s = z`.
fn symmetric_unitary_sqrt(z: &CMat) -> CMat {
    let n = z.nrows();
    let x = z.map(|v| v.re);
    let y = z.map(|v| v.im);
    // x and y commute for a symmetric unitary; diagonalize them together.
    let basis = joint_real_diagonalization(&x, &y);
    let dx = basis.transpose() * &x * &basis;
    let dy = basis.transpose() * &y * &basis;
    let mut s = CMat::zeros(n, n);
    for i in 0..n {
        let theta = dy[(i, i)].atan2(dx[(i, i)]);
        s[(i, i)] = C64::from_polar(1.0, theta / 2.0);
    }
    let cb = basis.map(|v| c(v));
    &cb * s * cb.transpose()
}

/// Takagi factorization `a = q diag(sigma) q^T` of a complex symmetric matrix,
/// with `q` unitary and `sigma` real nonnegative sorted descending.
pub fn takagi(a: &CMat) -> Result<(CMat, Vec<f64>)> {
    let n = a.nrows();
    let sym = symmetry_residual(a);
    if sym > 1e-10 * (1.0 + a.norm()) {
        return Err(UbsError::Domain(format!(
            "takagi input not symmetric (residual {sym:.3e})"
        )));
    }
    // Work on the exactly symmetric part so the factorization identities hold
    // to machine precision.
    let a_sym = (a + a.transpose()) * c(0.5);
    let svd = a_sym.clone().svd(true, true);
    let w = svd.u.as_ref().expect("u requested").clone();
    let xh = svd.v_t.as_ref().expect("v_t requested").clone();
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();

    // a = w sigma xh implies z := w^H conj(x) is symmetric unitary and
    // block-diagonal over degenerate singular-value groups.
    let z = w.adjoint() * xh.transpose();
    let mut q = w.clone();
    let scale = sigma.first().copied().unwrap_or(1.0).max(1.0);
    for group in degeneracy_groups(&sigma, 1e-8 * scale) {
        if sigma[group[0]] <= 1e-14 * scale {
            continue; // null space: phases are irrelevant
        }
        let k = group.len();
        let mut zg = CMat::zeros(k, k);
        for (bi, &gi) in group.iter().enumerate() {
            for (bj, &gj) in group.iter().enumerate() {
                zg[(bi, bj)] = z[(gi, gj)];
            }
        }
        let sg = symmetric_unitary_sqrt(&zg);
        let mut wg = CMat::zeros(n, k);
        for (bj, &gj) in group.iter().enumerate() {
            wg.set_column(bj, &w.column(gj));
        }
        let qg = wg * sg;
        for (bj, &gj) in group.iter().enumerate() {
            q.set_column(gj, &qg.column(bj));
        }
    }

    let mut rec = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut sum = ZERO;
            for k in 0..n {
                sum += q[(i, k)] * c(sigma[k]) * q[(j, k)];
            }
            rec[(i, j)] = sum;
        }
    }
    let residual = (&rec - &a_sym).norm();
    if residual > 1e-9 * (1.0 + a_sym.norm()) {
        return Err(UbsError::Integrity(format!(
            "takagi reconstruction residual {residual:.3e}"
        )));
    }
    Ok((q, sigma))
}
