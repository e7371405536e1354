//! Explicit RK4 and integrating-factor RK4 time steppers
//!
//! The integrating-factor scheme handles a constant-coefficient linear
//! part exactly in Fourier space: for u_t = L u + N(u) it applies RK4
//! to the transformed variable v = exp(-L t) u, so the stiff
//! dispersive term never enters the stability bound. `L` is given as a
//! diagonal Fourier symbol over integer frequencies, the same for
//! every component.

use crate::algebra::C64;
use crate::calculus::{signed_freq, FieldElement, PeriodicField};
use crate::error::Error;
use crate::Result;

/// RK4 imaginary-axis stability bound on |lambda dt| for the largest
/// retained mode of an explicit step.
pub const RK4_IMAG_LIMIT: f64 = 2.828;

/// One explicit RK4 step of u_t = rhs(u).
pub fn rk4_step<T: FieldElement>(
    f: &PeriodicField<T>,
    dt: f64,
    rhs: &mut dyn FnMut(&PeriodicField<T>) -> Result<PeriodicField<T>>,
) -> Result<PeriodicField<T>> {
    let k1 = rhs(f)?;
    let mut y = f.clone();
    y.add_scaled_mut(&k1, dt / 2.0);
    let k2 = rhs(&y)?;
    let mut y = f.clone();
    y.add_scaled_mut(&k2, dt / 2.0);
    let k3 = rhs(&y)?;
    let mut y = f.clone();
    y.add_scaled_mut(&k3, dt);
    let k4 = rhs(&y)?;

    let mut out = f.clone();
    out.add_scaled_mut(&k1, dt / 6.0);
    out.add_scaled_mut(&k2, dt / 3.0);
    out.add_scaled_mut(&k3, dt / 3.0);
    out.add_scaled_mut(&k4, dt / 6.0);
    Ok(out)
}

fn exp_symbol(m: usize, linear: &dyn Fn(i64) -> C64, dt: f64) -> Vec<C64> {
    (0..m).map(|j| (linear(signed_freq(j, m)) * dt).exp()).collect()
}

fn mul_modes(spectra: &mut [Vec<C64>], factors: &[C64]) {
    for spec in spectra.iter_mut() {
        for (z, f) in spec.iter_mut().zip(factors) {
            *z *= f;
        }
    }
}

fn lin_comb(a: &[Vec<C64>], b: &[Vec<C64>], c: f64) -> Vec<Vec<C64>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y * c).collect())
        .collect()
}

/// One integrating-factor RK4 step of u_t = L u + N(u), with `linear`
/// the Fourier symbol of L.
pub fn ifrk4_step<T: FieldElement>(
    f: &PeriodicField<T>,
    dt: f64,
    linear: &dyn Fn(i64) -> C64,
    nonlinear: &mut dyn FnMut(&PeriodicField<T>) -> Result<PeriodicField<T>>,
) -> Result<PeriodicField<T>> {
    let grid = f.grid;
    let proto = &f.values[0];
    let e_half = exp_symbol(grid.m, linear, dt / 2.0);
    let e_half_inv = exp_symbol(grid.m, linear, -dt / 2.0);
    let e_full = exp_symbol(grid.m, linear, dt);
    let e_full_inv = exp_symbol(grid.m, linear, -dt);

    let w0 = f.to_spectral();
    let k1 = nonlinear(f)?.to_spectral();

    let mut s = lin_comb(&w0, &k1, dt / 2.0);
    mul_modes(&mut s, &e_half);
    let ya = PeriodicField::from_spectral(grid, proto, &s);
    let mut k2 = nonlinear(&ya)?.to_spectral();
    mul_modes(&mut k2, &e_half_inv);

    let mut s = lin_comb(&w0, &k2, dt / 2.0);
    mul_modes(&mut s, &e_half);
    let yb = PeriodicField::from_spectral(grid, proto, &s);
    let mut k3 = nonlinear(&yb)?.to_spectral();
    mul_modes(&mut k3, &e_half_inv);

    let mut s = lin_comb(&w0, &k3, dt);
    mul_modes(&mut s, &e_full);
    let yc = PeriodicField::from_spectral(grid, proto, &s);
    let mut k4 = nonlinear(&yc)?.to_spectral();
    mul_modes(&mut k4, &e_full_inv);

    let mut acc = lin_comb(&w0, &k1, dt / 6.0);
    acc = lin_comb(&acc, &k2, dt / 3.0);
    acc = lin_comb(&acc, &k3, dt / 3.0);
    acc = lin_comb(&acc, &k4, dt / 6.0);
    mul_modes(&mut acc, &e_full);
    Ok(PeriodicField::from_spectral(grid, proto, &acc))
}

/// Which stepper an evolution driver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Rk4,
    IfRk4,
}

/// March `steps` steps of size `dt`, dealiasing the state after each
/// step when requested, and invoking `on_step(i, state)` after step i.
/// Detects non-finite states and reports the last finite time.
pub fn evolve<T: FieldElement>(
    f0: &PeriodicField<T>,
    dt: f64,
    steps: usize,
    integrator: Integrator,
    linear: &dyn Fn(i64) -> C64,
    rhs: &mut dyn FnMut(&PeriodicField<T>) -> Result<PeriodicField<T>>,
    dealias: bool,
    on_step: &mut dyn FnMut(usize, &PeriodicField<T>) -> Result<()>,
) -> Result<PeriodicField<T>> {
    let mut f = f0.clone();
    for i in 0..steps {
        let next = match integrator {
            Integrator::Rk4 => {
                // fold the linear symbol into the RHS for the fully
                // explicit scheme
                let mut full = |y: &PeriodicField<T>| -> Result<PeriodicField<T>> {
                    let mut r = rhs(y)?;
                    let lin = y.spectral_map(|fr| linear(fr));
                    r.add_scaled_mut(&lin, 1.0);
                    Ok(r)
                };
                rk4_step(&f, dt, &mut full)?
            }
            Integrator::IfRk4 => ifrk4_step(&f, dt, linear, rhs)?,
        };
        f = if dealias { next.dealias() } else { next };
        if !f.is_finite() {
            return Err(Error::BlowUp { time: i as f64 * dt });
        }
        on_step(i, &f)?;
    }
    Ok(f)
}
