//! Dense complex matrix helpers.
//!
//! Everything here is generic small-matrix numerics (the matrices are
//! (N+1) x (N+1) with small N); the Lie-algebraic structure lives in
//! `algebra`. The matrix exponential below is the reference against
//! which the closed-form exponential on m is tested.

use crate::error::Error;
use crate::Result;
use num_complex::Complex64;

pub type CMat = nalgebra::DMatrix<Complex64>;

/// Commutator a b - b a.
pub fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Largest entry magnitude.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = max_abs(a) * n as f64;
    // scale so the series argument has norm below 1/2
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let b = a.map(|z| z / Complex64::new(2f64.powi(s as i32), 0.0));
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..=20 {
        term = (&term * &b).map(|z| z / Complex64::new(k as f64, 0.0));
        sum += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Deviation from unitarity, max |a^H a - I|.
pub fn unitarity_deviation(a: &CMat) -> f64 {
    let n = a.nrows();
    max_abs(&(a.adjoint() * a - CMat::identity(n, n)))
}

/// Nearest special-unitary matrix: polar factor with the determinant
/// phase spread evenly over the diagonal.
pub fn unitarize(a: &CMat) -> Result<CMat> {
    let svd = a.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::DimensionMismatch("svd failed".into())),
    };
    let mut q = u * vt;
    // det(q) lies on the unit circle; divide out its n-th root
    let det = q.determinant();
    let n = q.nrows();
    let phase = det.arg() / n as f64;
    let root = Complex64::from_polar(1.0, -phase);
    q.iter_mut().for_each(|z| *z *= root);
    Ok(q)
}

/// Principal logarithm of a unitary matrix via inverse scaling and
/// squaring: repeated principal square roots (Denman-Beavers), then a
/// Mercator series. Fails if an eigenvalue sits at the branch cut -1.
pub fn log_unitary(h: &CMat) -> Result<CMat> {
    let n = h.nrows();
    let id = CMat::identity(n, n);
    let mut k = h.clone();
    let mut doublings = 0u32;
    while max_abs(&(&k - &id)) > 0.25 {
        if doublings >= 40 {
            return Err(Error::LogBranchCut);
        }
        k = sqrtm_db(&k)?;
        doublings += 1;
    }
    let e = &k - &id;
    let mut term = e.clone();
    let mut sum = e.clone();
    for j in 2..=40 {
        term = &term * &e;
        let c = if j % 2 == 0 { -1.0 } else { 1.0 } / j as f64;
        sum += term.map(|z| z * c);
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    let mut w = sum.map(|z| z * 2f64.powi(doublings as i32));
    // the log of a unitary matrix is anti-Hermitian; clean roundoff
    w = (&w - w.adjoint()).map(|z| z * 0.5);
    Ok(w)
}

/// Principal square root by the Denman-Beavers iteration.
fn sqrtm_db(a: &CMat) -> Result<CMat> {
    let mut y = a.clone();
    let n = a.nrows();
    let mut z = CMat::identity(n, n);
    for _ in 0..60 {
        let yi = y
            .clone()
            .try_inverse()
            .ok_or(Error::LogBranchCut)?;
        let zi = z
            .clone()
            .try_inverse()
            .ok_or(Error::LogBranchCut)?;
        let y_next = (&y + zi).map(|v| v * 0.5);
        let z_next = (&z + yi).map(|v| v * 0.5);
        let delta = max_abs(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta < 1e-15 {
            break;
        }
    }
    Ok(y)
}

/// Eigenvalues of an anti-Hermitian matrix, returned as the real
/// numbers mu_j with spectrum {i mu_j}, sorted ascending.
pub fn spectrum_antihermitian(x: &CMat) -> Vec<f64> {
    // -i x is Hermitian when x is anti-Hermitian
    let herm = x.map(|z| z * Complex64::new(0.0, -1.0));
    // symmetrize to guard against small residuals
    let herm = (&herm + herm.adjoint()).map(|z| z * 0.5);
    let mut eig: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}
