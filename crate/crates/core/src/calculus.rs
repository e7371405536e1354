//! Periodic spatial discretization on a uniform grid
//!
//! Fields are uniform samples of algebra-valued functions on [0, L)
//! with periodic identification. Differentiation, antidifferentiation,
//! and dealiasing are Fourier pseudo-spectral, applied componentwise
//! through the [`FieldElement`] view of each element type.
//!
//! Dx is exactly invertible only on mean-free input; [`dx_inv`] always
//! returns the antiderivative of the mean-free part and the policy
//! fixes the integration constant. Callers that need the constant of
//! a dropped mean add it back explicitly (the hierarchy module
//! documents those corrections).
//!
//! [`dx_inv`]: PeriodicField::dx_inv

use crate::algebra::{C64, HElement, MVector};
use crate::error::Error;
use crate::linalg::CMat;
use crate::Result;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::f64::consts::PI;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [C64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
    if inverse {
        let s = 1.0 / buf.len() as f64;
        for z in buf.iter_mut() {
            *z *= s;
        }
    }
}

/// Signed integer frequency of mode index j on an m-point grid, in
/// -m/2+1 ..= m/2 with the Nyquist mode counted positive.
pub fn signed_freq(j: usize, m: usize) -> i64 {
    if j <= m / 2 {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

/// Uniform periodic grid on [0, L).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub m: usize,
    pub length: f64,
}

impl Grid {
    /// Power-of-two point counts keep the FFT sizes trivial and the
    /// 2/3-rule cutoffs exact.
    pub fn new(m: usize, length: f64) -> Result<Self> {
        if m < 16 || !m.is_power_of_two() || length <= 0.0 {
            return Err(Error::BadGrid(m));
        }
        Ok(Grid { m, length })
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.m as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.point(j)).collect()
    }

    /// Physical wavenumber 2 pi f / L of integer frequency f.
    pub fn wavenumber(&self, freq: i64) -> f64 {
        2.0 * PI * freq as f64 / self.length
    }

    /// Highest frequency kept by the 2/3 dealiasing rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.m / 3) as i64
    }

    pub fn ensure_matches(&self, other: &Grid) -> Result<()> {
        if self.m != other.m || (self.length - other.length).abs() > 1e-14 {
            return Err(Error::GridMismatch(format!(
                "{} x {} vs {} x {}",
                self.m, self.length, other.m, other.length
            )));
        }
        Ok(())
    }
}

/// Componentwise complex view of an element type, so every field kind
/// shares one spectral kernel.
pub trait FieldElement: Clone {
    fn comp_len(&self) -> usize;
    fn comp(&self, k: usize) -> C64;
    fn set_comp(&mut self, k: usize, z: C64);

    fn zero_like(&self) -> Self {
        let mut out = self.clone();
        for k in 0..out.comp_len() {
            out.set_comp(k, C64::new(0.0, 0.0));
        }
        out
    }

    fn scale_mut(&mut self, c: f64) {
        for k in 0..self.comp_len() {
            let z = self.comp(k);
            self.set_comp(k, z * c);
        }
    }

    /// self += c * other
    fn add_scaled(&mut self, other: &Self, c: f64) {
        for k in 0..self.comp_len() {
            let z = self.comp(k) + other.comp(k) * c;
            self.set_comp(k, z);
        }
    }

    fn elem_max_abs(&self) -> f64 {
        (0..self.comp_len()).fold(0.0f64, |m, k| m.max(self.comp(k).norm()))
    }

    fn is_finite(&self) -> bool {
        (0..self.comp_len()).all(|k| {
            let z = self.comp(k);
            z.re.is_finite() && z.im.is_finite()
        })
    }
}

impl FieldElement for f64 {
    fn comp_len(&self) -> usize {
        1
    }
    fn comp(&self, _: usize) -> C64 {
        C64::new(*self, 0.0)
    }
    fn set_comp(&mut self, _: usize, z: C64) {
        *self = z.re;
    }
}

impl FieldElement for C64 {
    fn comp_len(&self) -> usize {
        1
    }
    fn comp(&self, _: usize) -> C64 {
        *self
    }
    fn set_comp(&mut self, _: usize, z: C64) {
        *self = z;
    }
}

impl FieldElement for MVector {
    fn comp_len(&self) -> usize {
        self.0.len()
    }
    fn comp(&self, k: usize) -> C64 {
        self.0[k]
    }
    fn set_comp(&mut self, k: usize, z: C64) {
        self.0[k] = z;
    }
}

impl FieldElement for HElement {
    fn comp_len(&self) -> usize {
        let n = self.block.nrows();
        n * n
    }
    fn comp(&self, k: usize) -> C64 {
        let n = self.block.nrows();
        self.block[(k / n, k % n)]
    }
    fn set_comp(&mut self, k: usize, z: C64) {
        let n = self.block.nrows();
        self.block[(k / n, k % n)] = z;
    }
}

impl FieldElement for CMat {
    fn comp_len(&self) -> usize {
        self.nrows() * self.ncols()
    }
    fn comp(&self, k: usize) -> C64 {
        self[(k / self.ncols(), k % self.ncols())]
    }
    fn set_comp(&mut self, k: usize, z: C64) {
        let c = self.ncols();
        self[(k / c, k % c)] = z;
    }
}

/// Integration-constant policy for the spectral antiderivative.
#[derive(Debug, Clone)]
pub enum DxInvPolicy<T> {
    /// Antiderivative with zero spatial mean (the default).
    ZeroMean,
    /// Antiderivative vanishing at x = 0.
    BasePointZero,
    /// Zero-mean antiderivative plus the given constant element, so
    /// dx_inv(0) is the constant field.
    Cokernel(T),
}

/// Uniform samples of a `T`-valued function on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField<T> {
    pub grid: Grid,
    pub values: Vec<T>,
}

impl<T: FieldElement> PeriodicField<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Self {
        assert_eq!(values.len(), grid.m, "one value per grid point");
        PeriodicField { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> T) -> Self {
        let values = (0..grid.m).map(|j| f(grid.point(j))).collect();
        PeriodicField { grid, values }
    }

    pub fn constant(grid: Grid, elem: T) -> Self {
        PeriodicField { grid, values: vec![elem; grid.m] }
    }

    fn comp_len(&self) -> usize {
        self.values[0].comp_len()
    }

    pub fn map<U: FieldElement>(&self, f: impl Fn(&T) -> U) -> PeriodicField<U> {
        PeriodicField { grid: self.grid, values: self.values.iter().map(f).collect() }
    }

    /// Pointwise binary operation; grids must already agree.
    pub fn zip<U: FieldElement, V: FieldElement>(
        &self,
        other: &PeriodicField<U>,
        f: impl Fn(&T, &U) -> V,
    ) -> PeriodicField<V> {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        PeriodicField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            v.scale_mut(c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled_mut(other, 1.0);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled_mut(other, -1.0);
        out
    }

    /// self += c * other, pointwise.
    pub fn add_scaled_mut(&mut self, other: &Self, c: f64) {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a.add_scaled(b, c);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.elem_max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Spatial mean as a single element.
    pub fn mean_element(&self) -> T {
        let mut acc = self.values[0].zero_like();
        let w = 1.0 / self.grid.m as f64;
        for v in &self.values {
            acc.add_scaled(v, w);
        }
        acc
    }

    /// Fourier coefficients, one mode sequence per component.
    pub fn to_spectral(&self) -> Vec<Vec<C64>> {
        (0..self.comp_len())
            .map(|c| {
                let mut buf: Vec<C64> = self.values.iter().map(|v| v.comp(c)).collect();
                fft_in_place(&mut buf, false);
                buf
            })
            .collect()
    }

    pub fn from_spectral(grid: Grid, proto: &T, spectra: &[Vec<C64>]) -> Self {
        let mut out = PeriodicField::constant(grid, proto.zero_like());
        for (c, spec) in spectra.iter().enumerate() {
            let mut buf = spec.clone();
            fft_in_place(&mut buf, true);
            for (v, z) in out.values.iter_mut().zip(buf) {
                v.set_comp(c, z);
            }
        }
        out
    }

    /// Apply a diagonal Fourier multiplier given by integer frequency.
    pub fn spectral_map(&self, mult: impl Fn(i64) -> C64) -> Self {
        let m = self.grid.m;
        let mut spectra = self.to_spectral();
        for spec in spectra.iter_mut() {
            for (j, z) in spec.iter_mut().enumerate() {
                *z *= mult(signed_freq(j, m));
            }
        }
        Self::from_spectral(self.grid, &self.values[0], &spectra)
    }

    /// Spectral derivative; the Nyquist mode is annihilated along with
    /// constants.
    pub fn dx(&self) -> Self {
        let g = self.grid;
        let nyq = (g.m / 2) as i64;
        self.spectral_map(|f| {
            if f == nyq {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, g.wavenumber(f))
            }
        })
    }

    /// p-th spectral derivative; odd orders annihilate the Nyquist
    /// mode like [`dx`](Self::dx).
    pub fn dx_n(&self, p: u32) -> Self {
        let g = self.grid;
        let nyq = (g.m / 2) as i64;
        self.spectral_map(|f| {
            if f == nyq && p % 2 == 1 {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, g.wavenumber(f)).powu(p)
            }
        })
    }

    /// Spectral antiderivative of the mean-free part, with the
    /// integration constant fixed by `policy`. Components whose mean
    /// exceeds `mean_tol` are rejected; pass infinity to drop means
    /// silently (the hierarchy operators document their corrections).
    pub fn dx_inv(&self, policy: &DxInvPolicy<T>, mean_tol: f64) -> Result<Self> {
        let m = self.grid.m;
        let g = self.grid;
        let mut spectra = self.to_spectral();
        for (c, spec) in spectra.iter_mut().enumerate() {
            let mean = spec[0] / m as f64;
            if mean.norm() > mean_tol {
                return Err(Error::NonIntegrable { component: c, mean: mean.norm() });
            }
            spec[0] = C64::new(0.0, 0.0);
            for (j, z) in spec.iter_mut().enumerate().skip(1) {
                let k = g.wavenumber(signed_freq(j, m));
                *z /= C64::new(0.0, k);
            }
        }
        let mut out = Self::from_spectral(self.grid, &self.values[0], &spectra);
        match policy {
            DxInvPolicy::ZeroMean => {}
            DxInvPolicy::BasePointZero => {
                let g0 = out.values[0].clone();
                for v in out.values.iter_mut() {
                    v.add_scaled(&g0, -1.0);
                }
            }
            DxInvPolicy::Cokernel(c) => {
                for v in out.values.iter_mut() {
                    v.add_scaled(c, 1.0);
                }
            }
        }
        Ok(out)
    }

    /// Zero all modes above the 2/3-rule cutoff; idempotent.
    pub fn dealias(&self) -> Self {
        let cut = self.grid.dealias_cutoff();
        self.spectral_map(|f| {
            if f.abs() > cut {
                C64::new(0.0, 0.0)
            } else {
                C64::new(1.0, 0.0)
            }
        })
    }

    /// Spectral interpolation onto a grid with `m_new` points. The
    /// Nyquist mode is split (up) or folded (down) symmetrically.
    pub fn resample(&self, m_new: usize) -> Result<Self> {
        let g_new = Grid::new(m_new, self.grid.length)?;
        let m = self.grid.m;
        let spectra = self.to_spectral();
        let ratio = m_new as f64 / m as f64;
        let keep = (m.min(m_new) / 2) as i64;
        let mut out_spectra = vec![vec![C64::new(0.0, 0.0); m_new]; spectra.len()];
        for (spec, out) in spectra.iter().zip(out_spectra.iter_mut()) {
            for (j, z) in spec.iter().enumerate() {
                let f = signed_freq(j, m);
                let z = *z * ratio;
                if f.abs() < keep {
                    let idx = if f >= 0 { f as usize } else { (f + m_new as i64) as usize };
                    out[idx] += z;
                } else if f.abs() == keep {
                    // split between +keep and -keep on the finer grid,
                    // fold onto +keep on the coarser one
                    if m_new > m {
                        out[keep as usize] += z * 0.5;
                        out[(m_new as i64 - keep) as usize] += z * 0.5;
                    } else {
                        out[keep as usize] += z;
                    }
                }
            }
        }
        Ok(Self::from_spectral(g_new, &self.values[0], &out_spectra))
    }
}

impl PeriodicField<f64> {
    /// Periodic trapezoid rule, sum times spacing.
    pub fn quadrature(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.spacing()
    }
}
