//! Curve and spin faces of the hierarchy in the affine algebra.
//!
//! A curve gamma takes values in su(N+1) (embedded matrices) with the
//! non-stretching normalization g(gamma_x, gamma_x) = 1 in the metric
//! g = -Kill. Its tangent T = gamma_x lives on the adjoint orbit of
//! A / |A|, and the spin models evolve T directly. The binormal flow
//! -[gamma_x, gamma_xx] is the filament (NLS) face; its x-derivative
//! -[T, T_xx] is the Heisenberg face. The mKdV faces are the axial
//! curve flow and the conservative spin vector model; the cubic terms
//! carry the fixed scale (3/2) efac pinned by the N = 1 reduction and
//! by matching the q-side flows through the frame transform.
//!
//! Time scales on the efac clock: gamma_t = efac^{3/2} vfe_rhs and
//! T_t = efac^{3/2} heisenberg_rhs for the NLS face, gamma_t =
//! efac vfe_axial_rhs and T_t = efac spin_mkdv_rhs for the mKdV face.
//! Spin Hamiltonians are evaluated on the orbit variable sqrt(efac) T
//! so they equal the q-side functionals without extra constants.

use crate::algebra::{extract_m, AlgebraDescriptor};
use crate::calculus::PeriodicField;
use crate::error::Error;
use crate::hierarchy::recursion_apply;
use crate::linalg::{comm, spectrum_antihermitian, CMat};
use crate::algebra::MVector;
use crate::tol;
use crate::Result;

/// Curvature below this is treated as vanishing; normal and binormal
/// are flagged undefined there.
pub const KAPPA_MIN: f64 = 1e-8;

/// Arclength-parametrized curve in su(N+1).
#[derive(Debug, Clone)]
pub struct CurveState {
    pub desc: AlgebraDescriptor,
    pub gamma: PeriodicField<CMat>,
    pub time: f64,
}

impl CurveState {
    pub fn new(desc: AlgebraDescriptor, gamma: PeriodicField<CMat>, time: f64) -> Self {
        assert_eq!(gamma.values[0].nrows(), desc.n + 1, "matrix size vs descriptor");
        CurveState { desc, gamma, time }
    }
}

/// Unit spin field on the adjoint orbit of A / |A|.
#[derive(Debug, Clone)]
pub struct SpinState {
    pub desc: AlgebraDescriptor,
    pub t_field: PeriodicField<CMat>,
    pub time: f64,
}

impl SpinState {
    pub fn new(desc: AlgebraDescriptor, t_field: PeriodicField<CMat>, time: f64) -> Self {
        assert_eq!(t_field.values[0].nrows(), desc.n + 1, "matrix size vs descriptor");
        SpinState { desc, t_field, time }
    }
}

/// Binormal curve flow -[gamma_x, gamma_xx].
pub fn vfe_rhs(gamma: &PeriodicField<CMat>) -> PeriodicField<CMat> {
    let gx = gamma.dx();
    let gxx = gamma.dx_n(2);
    gx.zip(&gxx, |a, b| -comm(a, b))
}

/// Axial curve flow -gamma_xxx + (3/2) efac [gamma_xx, [gamma_xx, gamma_x]].
pub fn vfe_axial_rhs(desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> PeriodicField<CMat> {
    let gx = gamma.dx();
    let gxx = gamma.dx_n(2);
    let gxxx = gamma.dx_n(3);
    let c = 1.5 * desc.efac;
    let mut vals = Vec::with_capacity(gamma.grid.m);
    for j in 0..gamma.grid.m {
        let cubic = comm(&gxx.values[j], &comm(&gxx.values[j], &gx.values[j]));
        vals.push(-&gxxx.values[j] + cubic.map(|z| z * c));
    }
    PeriodicField::new(gamma.grid, vals)
}

/// Heisenberg flow -[T, T_xx], the x-derivative of the filament flow.
pub fn heisenberg_rhs(t_field: &PeriodicField<CMat>) -> PeriodicField<CMat> {
    let txx = t_field.dx_n(2);
    t_field.zip(&txx, |a, b| -comm(a, b))
}

/// Spin vector model in conservative form,
/// -T_xxx + (3/2) efac ([T_xx, [T_x, T]] + [T_x, [T_xx, T]]);
/// the cubic part is d/dx [T_x, [T_x, T]], so this is the x-derivative
/// of the axial curve flow and conserves the norm functional.
pub fn spin_mkdv_rhs(desc: &AlgebraDescriptor, t_field: &PeriodicField<CMat>) -> PeriodicField<CMat> {
    let tx = t_field.dx();
    let txx = t_field.dx_n(2);
    let txxx = t_field.dx_n(3);
    let c = 1.5 * desc.efac;
    let mut vals = Vec::with_capacity(t_field.grid.m);
    for j in 0..t_field.grid.m {
        let t = &t_field.values[j];
        let d1 = &tx.values[j];
        let d2 = &txx.values[j];
        let cubic = comm(d2, &comm(d1, t)) + comm(d1, &comm(d2, t));
        vals.push(-&txxx.values[j] + cubic.map(|z| z * c));
    }
    PeriodicField::new(t_field.grid, vals)
}

/// Pseudo-inverse of ad(T) on the orbit tangent space: -efac [T, x].
/// Inverts ad(T) on the m-like part and annihilates the h-like part
/// (ad(T)^2 = -(1/efac) projection there).
pub fn orbit_ad_inv(desc: &AlgebraDescriptor, t: &CMat, x: &CMat) -> CMat {
    comm(t, x).map(|z| z * (-desc.efac))
}

/// Conserved spin functionals, densities on S = sqrt(efac) T:
/// (1) (1/2)|S_x|^2, (2) (1/2) S_xx.[S, S_x],
/// (3) (1/2)|S_xx|^2 - (5/8)|[S_x,[S_x,S]]|^2,
/// (4) (1/2)[S,S_xx].S_xxx + (7/8)[S_x,[S_x,S]].[S_x,S_xx],
/// all in g = -Kill. They equal the q-side Hamiltonians.
pub fn spin_hamiltonian(
    desc: &AlgebraDescriptor,
    t_field: &PeriodicField<CMat>,
    k: u32,
) -> Result<f64> {
    let s = t_field.scale(desc.enorminv());
    let sx = s.dx();
    let density: PeriodicField<f64> = match k {
        1 => sx.map(|d| 0.5 * desc.metric(d, d)),
        2 => {
            let sxx = s.dx_n(2);
            let mut vals = Vec::with_capacity(s.grid.m);
            for j in 0..s.grid.m {
                let br = comm(&s.values[j], &sx.values[j]);
                vals.push(0.5 * desc.metric(&sxx.values[j], &br));
            }
            PeriodicField::new(s.grid, vals)
        }
        3 => {
            let sxx = s.dx_n(2);
            let mut vals = Vec::with_capacity(s.grid.m);
            for j in 0..s.grid.m {
                let w = comm(&sx.values[j], &comm(&sx.values[j], &s.values[j]));
                vals.push(
                    0.5 * desc.metric(&sxx.values[j], &sxx.values[j])
                        - 0.625 * desc.metric(&w, &w),
                );
            }
            PeriodicField::new(s.grid, vals)
        }
        4 => {
            let sxx = s.dx_n(2);
            let sxxx = s.dx_n(3);
            let mut vals = Vec::with_capacity(s.grid.m);
            for j in 0..s.grid.m {
                let w = comm(&sx.values[j], &comm(&sx.values[j], &s.values[j]));
                let a = comm(&s.values[j], &sxx.values[j]);
                let b = comm(&sx.values[j], &sxx.values[j]);
                vals.push(
                    0.5 * desc.metric(&a, &sxxx.values[j]) + 0.875 * desc.metric(&w, &b),
                );
            }
            PeriodicField::new(s.grid, vals)
        }
        _ => return Err(Error::HamiltonianIndexOutOfRange { index: k, max: 4 }),
    };
    Ok(density.quadrature())
}

pub fn spin_hamiltonians(desc: &AlgebraDescriptor, t_field: &PeriodicField<CMat>) -> Result<[f64; 4]> {
    Ok([
        spin_hamiltonian(desc, t_field, 1)?,
        spin_hamiltonian(desc, t_field, 2)?,
        spin_hamiltonian(desc, t_field, 3)?,
        spin_hamiltonian(desc, t_field, 4)?,
    ])
}

/// Frenet data of a curve: curvature, tangent, unit normal, binormal
/// B = ad(T)^{-1} N. The normal and binormal are zeroed and flagged
/// where kappa < KAPPA_MIN.
#[derive(Debug, Clone)]
pub struct Frenet {
    pub kappa: PeriodicField<f64>,
    pub tangent: PeriodicField<CMat>,
    pub normal: PeriodicField<CMat>,
    pub binormal: PeriodicField<CMat>,
    pub defined: Vec<bool>,
}

pub fn frenet(desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> Frenet {
    let t = gamma.dx();
    let tx = gamma.dx_n(2);
    let m = gamma.grid.m;
    let mut kappa = Vec::with_capacity(m);
    let mut normal = Vec::with_capacity(m);
    let mut binormal = Vec::with_capacity(m);
    let mut defined = Vec::with_capacity(m);
    for j in 0..m {
        let k = desc.metric(&tx.values[j], &tx.values[j]).max(0.0).sqrt();
        kappa.push(k);
        if k > KAPPA_MIN {
            let n = tx.values[j].map(|z| z / k);
            binormal.push(orbit_ad_inv(desc, &t.values[j], &n));
            normal.push(n);
            defined.push(true);
        } else {
            normal.push(CMat::zeros(desc.n + 1, desc.n + 1));
            binormal.push(CMat::zeros(desc.n + 1, desc.n + 1));
            defined.push(false);
        }
    }
    Frenet {
        kappa: PeriodicField::new(gamma.grid, kappa),
        tangent: t,
        normal: PeriodicField::new(gamma.grid, normal),
        binormal: PeriodicField::new(gamma.grid, binormal),
        defined,
    }
}

pub fn curvature(desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> PeriodicField<f64> {
    frenet(desc, gamma).kappa
}

/// Geometric recursion operator: conjugate an orbit-tangent field to
/// the q-representation with the frame, apply the q-side recursion,
/// conjugate back, and rescale by sqrt(efac). The frame must satisfy
/// psi_x = psi embed(q) and t_field = Ad(psi) A / |A|; q is passed
/// explicitly because the recursion acts in that representation.
pub fn spin_recursion(
    desc: &AlgebraDescriptor,
    t_field: &PeriodicField<CMat>,
    psi: &PeriodicField<CMat>,
    q: &PeriodicField<MVector>,
    p: &PeriodicField<CMat>,
) -> Result<PeriodicField<CMat>> {
    let a = desc.a_embedded();
    let scale = desc.enorm();
    let mut deviation: f64 = 0.0;
    for j in 0..t_field.grid.m {
        let built = (&psi.values[j] * &a * psi.values[j].adjoint()).map(|z| z * scale);
        deviation = deviation.max((built - &t_field.values[j]).camax());
    }
    if deviation > tol::FRAME_RESIDUAL {
        return Err(Error::InconsistentFrame { deviation });
    }
    let y = psi.zip(p, |u, x| extract_m(&(u.adjoint() * x * u)));
    let r = recursion_apply(q, &y)?;
    let out = psi.zip(&r, |u, v| {
        (u * v.embed() * u.adjoint()).map(|z| z * desc.enorminv())
    });
    Ok(out)
}

/// Spin-model flows with their efac-clock scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinFlow {
    Heisenberg,
    Mkdv,
}

impl SpinFlow {
    pub fn rhs(self, desc: &AlgebraDescriptor, t_field: &PeriodicField<CMat>) -> PeriodicField<CMat> {
        match self {
            SpinFlow::Heisenberg => heisenberg_rhs(t_field).scale(desc.efac * desc.enorminv()),
            SpinFlow::Mkdv => spin_mkdv_rhs(desc, t_field).scale(desc.efac),
        }
    }
}

/// Curve flows with their efac-clock scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFlow {
    Filament,
    Axial,
}

impl CurveFlow {
    pub fn rhs(self, desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> PeriodicField<CMat> {
        match self {
            CurveFlow::Filament => vfe_rhs(gamma).scale(desc.efac * desc.enorminv()),
            CurveFlow::Axial => vfe_axial_rhs(desc, gamma).scale(desc.efac),
        }
    }
}

/// Min and max over the grid of |T| in the g-metric.
pub fn spin_norm_extrema(desc: &AlgebraDescriptor, t_field: &PeriodicField<CMat>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in &t_field.values {
        let n = desc.metric(v, v).max(0.0).sqrt();
        lo = lo.min(n);
        hi = hi.max(n);
    }
    (lo, hi)
}

/// Max over the grid of the eigenvalue deviation of sqrt(efac) T from
/// the spectrum of A (orbit membership diagnostic).
pub fn spin_spectrum_drift(desc: &AlgebraDescriptor, t_field: &PeriodicField<CMat>) -> f64 {
    let reference = spectrum_antihermitian(&desc.a_embedded());
    let mut worst = 0.0f64;
    for v in &t_field.values {
        let spec = spectrum_antihermitian(&v.map(|z| z * desc.enorminv()));
        for (a, b) in spec.iter().zip(reference.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Max over the grid of | |gamma_x| - 1 | in the g-metric.
pub fn curve_speed_drift(desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> f64 {
    let gx = gamma.dx();
    let mut worst = 0.0f64;
    for v in &gx.values {
        let n = desc.metric(v, v).max(0.0).sqrt();
        worst = worst.max((n - 1.0).abs());
    }
    worst
}

trait CamAbs {
    fn camax(&self) -> f64;
}

impl CamAbs for CMat {
    fn camax(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{C64, HElement};
    use crate::calculus::Grid;
    use crate::hierarchy;
    use crate::init;
    use crate::linalg::expm;
    use crate::timestep;
    use std::f64::consts::PI;

    // orthonormal su(2) basis in g = -Kill: u_j = -(i/(2 sqrt 2)) sigma_j,
    // with [x, y] = (1/sqrt 2) (x cross y) in these coordinates
    fn u_basis() -> [CMat; 3] {
        let s = -C64::new(0.0, 1.0) / (2.0 * 2.0f64.sqrt());
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        [
            CMat::from_row_slice(2, 2, &[z, one * s, one * s, z]),
            CMat::from_row_slice(2, 2, &[z, -i * s, i * s, z]),
            CMat::from_row_slice(2, 2, &[one * s, z, z, -one * s]),
        ]
    }

    fn to_r3(desc: &AlgebraDescriptor, x: &CMat) -> [f64; 3] {
        let u = u_basis();
        [
            desc.metric(x, &u[0]),
            desc.metric(x, &u[1]),
            desc.metric(x, &u[2]),
        ]
    }

    fn from_r3(v: [f64; 3]) -> CMat {
        let u = u_basis();
        u[0].map(|z| z * v[0]) + u[1].map(|z| z * v[1]) + u[2].map(|z| z * v[2])
    }

    fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    fn lin(a: [f64; 3], ca: f64, b: [f64; 3], cb: f64) -> [f64; 3] {
        [ca * a[0] + cb * b[0], ca * a[1] + cb * b[1], ca * a[2] + cb * b[2]]
    }

    // band-limited su(2)-valued field with fixed trig coefficients
    fn random_su2_field(grid: Grid, seed: u64) -> PeriodicField<CMat> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = Vec::new();
        for _ in 0..3 {
            let c: [f64; 3] = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let s: [f64; 3] = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            coeffs.push((c, s));
        }
        PeriodicField::from_fn(grid, |x| {
            let mut v = [0.0; 3];
            for (j, (c, s)) in coeffs.iter().enumerate() {
                let f = (j + 1) as f64 * 2.0 * PI / grid.length;
                v = lin(v, 1.0, *c, (f * x).cos());
                v = lin(v, 1.0, *s, (f * x).sin());
            }
            from_r3(v)
        })
    }

    fn field_diff(a: &PeriodicField<CMat>, b: &PeriodicField<CMat>) -> f64 {
        a.sub(b).max_abs()
    }

    #[test]
    fn constant_inputs_give_zero_flows() {
        let desc = AlgebraDescriptor::new(2);
        let grid = Grid::new(32, 2.0 * PI).unwrap();
        let t0 = desc.a_embedded().map(|z| z * desc.enorm());
        let t = PeriodicField::constant(grid, t0.clone());
        assert!(heisenberg_rhs(&t).max_abs() < 1e-14);
        assert!(spin_mkdv_rhs(&desc, &t).max_abs() < 1e-14);
        let gamma = PeriodicField::constant(grid, t0);
        assert!(vfe_rhs(&gamma).max_abs() < 1e-14);
        assert!(vfe_axial_rhs(&desc, &gamma).max_abs() < 1e-14);
        // degenerate curve: kappa = 0, frame flags unset everywhere
        let f = frenet(&desc, &gamma);
        assert!(f.kappa.max_abs() < 1e-14);
        assert!(f.defined.iter().all(|d| !d));
        assert!(f.normal.max_abs() == 0.0 && f.binormal.max_abs() == 0.0);
    }

    #[test]
    fn su2_flows_match_cross_product_forms() {
        // bracket vs cross: [x, y] = (1/sqrt 2) x cross y in orthonormal
        // coordinates, so each commutator formula has an R^3 twin
        let desc = AlgebraDescriptor::new(1);
        let grid = Grid::new(64, 2.0 * PI).unwrap();
        let gamma = random_su2_field(grid, 3);
        let (gx, gxx, gxxx) = (gamma.dx(), gamma.dx_n(2), gamma.dx_n(3));
        let s = 1.0 / 2.0f64.sqrt();

        let vfe = vfe_rhs(&gamma);
        let axial = vfe_axial_rhs(&desc, &gamma);
        let heis = heisenberg_rhs(&gx);
        let smkdv = spin_mkdv_rhs(&desc, &gx);
        let (txx, txxx) = (gxxx.clone(), gx.dx_n(3));
        for j in 0..grid.m {
            let t = to_r3(&desc, &gx.values[j]);
            let d2 = to_r3(&desc, &gxx.values[j]);
            let d3 = to_r3(&desc, &gxxx.values[j]);
            // filament: -(1/sqrt 2) t cross t_x
            let want = from_r3(lin([0.0; 3], 0.0, cross(t, d2), -s));
            assert!((from_r3(to_r3(&desc, &vfe.values[j])) - &want).camax() < 1e-12);
            // axial: -gamma_xxx + (3/2) gamma_xx cross (gamma_xx cross gamma_x)
            let want = from_r3(lin(d3, -1.0, cross(d2, cross(d2, t)), 1.5));
            assert!((&axial.values[j] - &want).camax() < 1e-11);
            // Heisenberg: -(1/sqrt 2) T cross T_xx
            let td2 = to_r3(&desc, &txx.values[j]);
            let want = from_r3(lin([0.0; 3], 0.0, cross(t, td2), -s));
            assert!((&heis.values[j] - &want).camax() < 1e-11);
            // spin mKdV: -T_xxx + (3/2)(T_xx cross (T_x cross T) + T_x cross (T_xx cross T))
            let t1 = to_r3(&desc, &gxx.values[j]);
            let td3 = to_r3(&desc, &txxx.values[j]);
            let cubic = lin(cross(td2, cross(t1, t)), 1.0, cross(t1, cross(td2, t)), 1.0);
            let want = from_r3(lin(td3, -1.0, cubic, 1.5));
            assert!((&smkdv.values[j] - &want).camax() < 1e-10);
        }
    }

    #[test]
    fn circle_frenet_and_smoke_ring_drift() {
        // unit-speed circle of radius r: kappa = 1/r, constant binormal
        // motion under the filament flow
        let desc = AlgebraDescriptor::new(1);
        for r in [1.0f64, 2.0] {
            let grid = Grid::new(64, 2.0 * PI * r).unwrap();
            let gamma = PeriodicField::from_fn(grid, |x| {
                from_r3([r * (x / r).cos(), r * (x / r).sin(), 0.0])
            });
            let f = frenet(&desc, &gamma);
            for j in 0..grid.m {
                assert!((f.kappa.values[j] - 1.0 / r).abs() < 1e-8, "radius {r}");
                assert!(f.defined[j]);
            }
            // gamma_x cross gamma_xx = (1/r) z-hat, so the flow is the
            // constant field -(1/(r sqrt 2)) u3
            let want = PeriodicField::constant(
                grid,
                from_r3([0.0, 0.0, -1.0 / (r * 2.0f64.sqrt())]),
            );
            assert!(field_diff(&vfe_rhs(&gamma), &want) < 1e-10, "radius {r}");
            // binormal has g-norm sqrt(efac), direction -z
            let want_b = PeriodicField::constant(
                grid,
                from_r3([0.0, 0.0, -(desc.efac.sqrt())]),
            );
            assert!(field_diff(&f.binormal, &want_b) < 1e-8, "radius {r}");
        }
    }

    // precessing spin wave: T(x) = Ad(exp(x P)) A / |A| with
    // P = embed(a d) + k A, the frame image of the plane wave
    // q = a exp(ikx) d; periodic when sqrt(a^2 + k^2/4) is a half-integer
    fn spin_wave(desc: &AlgebraDescriptor, grid: Grid, a: f64, k: f64) -> PeriodicField<CMat> {
        let mut d = MVector::zeros(desc.n);
        d.0[0] = C64::new(a, 0.0);
        let p = d.embed() + desc.a_embedded().map(|z| z * k);
        let a_emb = desc.a_embedded();
        PeriodicField::from_fn(grid, |x| {
            let g = expm(&p.map(|z| z * x));
            (&g * &a_emb * g.adjoint()).map(|z| z * desc.enorm())
        })
    }

    #[test]
    fn spin_wave_hamiltonians_match_plane_wave_values() {
        // N = 1, a = sqrt(3)/2, k = 1: the corresponding q is the plane
        // wave with |q| = a, so all four functionals have closed forms
        let desc = AlgebraDescriptor::new(1);
        let grid = Grid::new(128, 2.0 * PI).unwrap();
        let (a, k) = (3.0f64.sqrt() / 2.0, 1.0);
        let t = spin_wave(&desc, grid, a, k);

        let (lo, hi) = spin_norm_extrema(&desc, &t);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        assert!(spin_spectrum_drift(&desc, &t) < 1e-12);

        let l = grid.length;
        let nf = 2.0 * (desc.n as f64 + 1.0);
        let want = [
            nf * a * a * l,
            nf * k * a * a * l,
            nf * (k * k * a * a - a.powi(4)) * l,
            (nf * k.powi(3) * a * a - 3.0 * nf * k * a.powi(4)) * l,
        ];
        let got = spin_hamiltonians(&desc, &t).unwrap();
        for (i, (g, w)) in got.iter().zip(want.iter()).enumerate() {
            assert!((g - w).abs() < 1e-8, "H{} got {g} want {w}", i + 1);
        }
        // and they agree with the q-side functionals on the plane wave
        let q = init::plane_wave(&desc, grid, a, 1, 0, 0.0);
        for kk in 1..=4u32 {
            let hq = hierarchy::hamiltonian(&desc, &q, kk).unwrap();
            assert!((got[(kk - 1) as usize] - hq).abs() < 1e-8, "H{kk} vs q-side");
        }
        assert!(matches!(
            spin_hamiltonian(&desc, &t, 5),
            Err(Error::HamiltonianIndexOutOfRange { index: 5, max: 4 })
        ));
    }

    #[test]
    fn heisenberg_is_tangent_and_pointwise_isospectral() {
        let desc = AlgebraDescriptor::new(1);
        let grid = Grid::new(64, 2.0 * PI).unwrap();
        let t = spin_wave(&desc, grid, 3.0f64.sqrt() / 2.0, 1.0);
        let rhs = heisenberg_rhs(&t);
        for j in 0..grid.m {
            assert!(desc.metric(&t.values[j], &rhs.values[j]).abs() < 1e-12);
        }
        // one integrator step: unit norm and pointwise traces move at
        // the local-error scale only
        let dt = 1e-3;
        let stepped = timestep::rk4_step(&t, dt, &mut |f: &PeriodicField<CMat>| {
            Ok(SpinFlow::Heisenberg.rhs(&desc, f))
        })
        .unwrap();
        let (lo, hi) = spin_norm_extrema(&desc, &stepped);
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
        assert!(spin_spectrum_drift(&desc, &stepped) < 1e-10);
        for j in 0..grid.m {
            let tr2 = |x: &CMat| (x * x).trace();
            let tr3 = |x: &CMat| (x * x * x).trace();
            assert!((tr2(&stepped.values[j]) - tr2(&t.values[j])).norm() < 1e-10);
            assert!((tr3(&stepped.values[j]) - tr3(&t.values[j])).norm() < 1e-10);
        }
    }

    #[test]
    fn spin_flows_are_tangent_derivatives_of_curve_flows() {
        for n in [1usize, 2] {
            let desc = AlgebraDescriptor::new(n);
            let grid = Grid::new(64, 2.0 * PI).unwrap();
            let gamma = if n == 1 {
                random_su2_field(grid, 11)
            } else {
                // su(3)-valued trig field from random algebra elements
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
                let xs: Vec<CMat> = (0..4)
                    .map(|_| {
                        crate::algebra::random_m_vector(n, &mut rng, 0.4).embed()
                            + crate::algebra::random_h_element(n, &mut rng, 0.4).embed()
                    })
                    .collect();
                PeriodicField::from_fn(grid, |x| {
                    xs[0].map(|z| z * x.cos())
                        + xs[1].map(|z| z * x.sin())
                        + xs[2].map(|z| z * (2.0 * x).cos())
                        + xs[3].map(|z| z * (2.0 * x).sin())
                })
            };
            let t = gamma.dx();
            assert!(
                field_diff(&heisenberg_rhs(&t), &vfe_rhs(&gamma).dx()) < 1e-10,
                "n {n} filament"
            );
            assert!(
                field_diff(&spin_mkdv_rhs(&desc, &t), &vfe_axial_rhs(&desc, &gamma).dx()) < 1e-9,
                "n {n} axial"
            );
        }
    }

    #[test]
    fn spin_mkdv_conserves_norm_functional() {
        let desc = AlgebraDescriptor::new(1);
        let grid = Grid::new(128, 2.0 * PI).unwrap();
        let t = spin_wave(&desc, grid, 3.0f64.sqrt() / 2.0, 1.0);
        let rhs = spin_mkdv_rhs(&desc, &t);
        let pairing = t.zip(&rhs, |a, b| desc.metric(a, b)).quadrature();
        assert!(pairing.abs() < 1e-10, "norm pairing {pairing}");
    }

    #[test]
    fn orbit_projection_identity() {
        // ad(T)^2 = -(1/efac) on the conjugated m part, 0 on the h part
        use rand::SeedableRng;
        let desc = AlgebraDescriptor::new(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let gen = crate::algebra::random_m_vector(2, &mut rng, 0.8).embed()
            + crate::algebra::random_h_element(2, &mut rng, 0.8).embed();
        let g = expm(&gen);
        let t = (&g * desc.a_embedded() * g.adjoint()).map(|z| z * desc.enorm());
        let xm = &g * crate::algebra::random_m_vector(2, &mut rng, 1.0).embed() * g.adjoint();
        let xh = &g * crate::algebra::random_h_element(2, &mut rng, 1.0).embed() * g.adjoint();
        let twice_m = comm(&t, &comm(&t, &xm));
        assert!((twice_m.map(|z| z * desc.efac) + &xm).camax() < 1e-10);
        let twice_h = comm(&t, &comm(&t, &xh));
        assert!(twice_h.camax() < 1e-10);
        // the pseudo-inverse undoes ad(T) there
        let back = orbit_ad_inv(&desc, &t, &comm(&t, &xm));
        assert!((back - &xm).camax() < 1e-10);
    }

    #[test]
    fn spin_recursion_consistency_check() {
        let desc = AlgebraDescriptor::new(2);
        let grid = Grid::new(32, 2.0 * PI).unwrap();
        let t0 = desc.a_embedded().map(|z| z * desc.enorm());
        let t = PeriodicField::constant(grid, t0);
        let psi = PeriodicField::constant(grid, CMat::identity(3, 3));
        let q = PeriodicField::constant(grid, MVector::zeros(2));
        let p = PeriodicField::constant(grid, CMat::zeros(3, 3));
        assert!(spin_recursion(&desc, &t, &psi, &q, &p).unwrap().max_abs() < 1e-14);

        // frame that does not reproduce the spin field
        let bad = PeriodicField::constant(grid, expm(&HElement {
            block: CMat::from_fn(2, 2, |r, c| {
                if r == c { C64::new(0.0, 0.3 + r as f64) } else { C64::new(0.0, 0.0) }
            }),
        }
        .embed()));
        let bad_psi = bad.zip(&psi, |g, _| {
            let mut d = MVector::zeros(2);
            d.0[0] = C64::new(0.9, 0.0);
            g * expm(&d.embed())
        });
        match spin_recursion(&desc, &t, &bad_psi, &q, &p) {
            Err(Error::InconsistentFrame { deviation }) => assert!(deviation > 1e-3),
            other => panic!("expected inconsistent frame, got {other:?}"),
        }
    }

    #[test]
    fn flow_enums_apply_clock_scales() {
        let desc = AlgebraDescriptor::new(1);
        let grid = Grid::new(64, 2.0 * PI).unwrap();
        let t = spin_wave(&desc, grid, 3.0f64.sqrt() / 2.0, 1.0);
        let e32 = desc.efac * desc.efac.sqrt();
        assert!(
            field_diff(
                &SpinFlow::Heisenberg.rhs(&desc, &t),
                &heisenberg_rhs(&t).scale(e32)
            ) < 1e-13
        );
        assert!(
            field_diff(
                &SpinFlow::Mkdv.rhs(&desc, &t),
                &spin_mkdv_rhs(&desc, &t).scale(desc.efac)
            ) < 1e-13
        );
        let gamma = random_su2_field(grid, 31);
        assert!(
            field_diff(
                &CurveFlow::Filament.rhs(&desc, &gamma),
                &vfe_rhs(&gamma).scale(e32)
            ) < 1e-13
        );
        assert!(
            field_diff(
                &CurveFlow::Axial.rhs(&desc, &gamma),
                &vfe_axial_rhs(&desc, &gamma).scale(desc.efac)
            ) < 1e-13
        );
    }
}
