//! Initial data constructors for the q-side flows.
//!
//! Random band-limited fields are drawn coefficientwise in Fourier
//! space, so the same seed yields the same smooth function on any
//! grid resolution. That is what makes refinement studies compare the
//! same trajectory.

use crate::algebra::{AlgebraDescriptor, C64, MVector};
use crate::calculus::{Grid, PeriodicField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Dispersion relation of the plane-wave solution: q = a e^{i(kx+wt)} d
/// solves the NLS flow exactly with w = efac (k^2 - 2 a^2).
pub fn plane_wave_omega(desc: &AlgebraDescriptor, a: f64, k: i64) -> f64 {
    let kk = k as f64;
    desc.efac * (kk * kk - 2.0 * a * a)
}

/// Plane wave at time t along the unit direction `dir`; `k` counts
/// whole periods so the field is grid-periodic for any length L = 2 pi.
pub fn plane_wave(
    desc: &AlgebraDescriptor,
    grid: Grid,
    a: f64,
    k: i64,
    dir: usize,
    t: f64,
) -> PeriodicField<MVector> {
    assert!(dir < desc.n, "direction index out of range");
    let omega = plane_wave_omega(desc, a, k);
    let kappa = 2.0 * PI * k as f64 / grid.length;
    PeriodicField::from_fn(grid, |x| {
        let mut v = MVector::zeros(desc.n);
        v.0[dir] = C64::from_polar(a, kappa * x + omega * t);
        v
    })
}

/// Seeded band-limited field: independent complex Gaussian Fourier
/// coefficients for frequencies |f| <= kmax, normalized so the root
/// mean square amplitude equals `amplitude`.
pub fn random_band(
    desc: &AlgebraDescriptor,
    grid: Grid,
    seed: u64,
    kmax: i64,
    amplitude: f64,
) -> PeriodicField<MVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = (2 * kmax + 1) as usize;
    // rms of the sum of `modes` unit-variance complex coefficients per
    // component is sqrt(2 modes n)
    let scale = amplitude / (2.0 * modes as f64 * desc.n as f64).sqrt();
    let coefs: Vec<Vec<C64>> = (0..desc.n)
        .map(|_| {
            (-kmax..=kmax)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re, im) * scale
                })
                .collect()
        })
        .collect();
    PeriodicField::from_fn(grid, |x| {
        MVector(
            coefs
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(-kmax..=kmax)
                        .map(|(c, f)| c * C64::from_polar(1.0, 2.0 * PI * f as f64 * x / grid.length))
                        .sum()
                })
                .collect(),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_has_constant_modulus() {
        let d = AlgebraDescriptor::new(2);
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let q = plane_wave(&d, g, 0.7, 3, 1, 0.25);
        for v in &q.values {
            assert!(v.0[0].norm() < 1e-15);
            assert!((v.0[1].norm() - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn random_band_is_grid_independent() {
        let d = AlgebraDescriptor::new(2);
        let g1 = Grid::new(64, 2.0 * PI).unwrap();
        let g2 = Grid::new(128, 2.0 * PI).unwrap();
        let q1 = random_band(&d, g1, 9, 3, 0.5);
        let q2 = random_band(&d, g2, 9, 3, 0.5);
        // same function sampled on the coarse points
        for j in 0..64 {
            let a = &q1.values[j];
            let b = &q2.values[2 * j];
            assert!(a.sub(b).max_abs() < 1e-14);
        }
        // and spectrally: upsampling the coarse field gives the fine one
        assert!(q1.resample(128).unwrap().sub(&q2).max_abs() < 1e-12);
    }

    #[test]
    fn random_band_amplitude_is_calibrated() {
        let d = AlgebraDescriptor::new(1);
        let g = Grid::new(256, 2.0 * PI).unwrap();
        let q = random_band(&d, g, 17, 4, 0.5);
        let ms: f64 =
            q.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / g.m as f64;
        let rms = ms.sqrt();
        assert!(rms > 0.15 && rms < 1.5, "rms {rms}");
    }
}
