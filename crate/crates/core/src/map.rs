//! Schroedinger and mKdV maps into complex projective space, realized
//! on the adjoint orbit of the pivot element A in su(N+1).
//!
//! The production state is the matrix field gamma(x) = Ad(psi) A. It
//! has Killing norm sqrt(efac) pointwise and equals sqrt(efac) T for
//! the unit spin field T, so the map face runs on the spin clocks:
//! gamma_t = efac * schrodinger_map_rhs_matrix(gamma) is the NLS face
//! and gamma_t = efac * map_mkdv_rhs(gamma) the mKdV face. At gamma
//! the complex structure is J = ad(gamma), the projection onto the
//! orbit tangent space is P = -ad(gamma)^2, and the covariant
//! x-derivative is P Dx.
//!
//! The chart (theta, Theta) with |Theta| = 1 describes the same states
//! through the pointwise embedding
//!
//! ```text
//!   gamma = A + sin^2(theta) h(i conj(Theta)^T Theta)
//!             - sin(theta) cos(theta) m(i Theta),
//! ```
//!
//! a double cover of the ball s = sin(theta) Theta with hemispheres
//! theta < pi/2 and theta > pi/2. The chart evolution is a validation
//! path: its direction rate carries csc(2 theta) and is genuinely
//! singular at theta in {0, pi/2, pi}, so callers keep a margin from
//! that set and renormalize Theta between steps. The matrix path is
//! globally regular.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::algebra::{conj_dot, outer, AlgebraDescriptor, C64, HElement, MVector};
use crate::calculus::{FieldElement, Grid, PeriodicField};
use crate::error::Error;
use crate::linalg::{comm, spectrum_antihermitian, CMat};
use crate::tol;
use crate::Result;

/// Unit-norm deviation of Theta above which the embedding refuses the
/// chart data. The constructor holds the tighter type bound
/// [`tol::UNIT_DIRECTION`]; this looser limit tolerates the radial
/// drift of unrenormalized integrator stages.
pub const DIRECTION_LIMIT: f64 = 1e-8;

/// Chart data on the target: polar angle field theta and unit
/// direction field Theta.
#[derive(Debug, Clone)]
pub struct MapCoords {
    pub theta: PeriodicField<f64>,
    pub big_theta: PeriodicField<MVector>,
}

/// Matrix-valued map state on the adjoint orbit of A.
#[derive(Debug, Clone)]
pub struct MapState {
    pub desc: AlgebraDescriptor,
    pub gamma_map: PeriodicField<CMat>,
    pub time: f64,
}

impl MapCoords {
    pub fn new(theta: PeriodicField<f64>, big_theta: PeriodicField<MVector>) -> Result<Self> {
        theta.grid.ensure_matches(&big_theta.grid)?;
        let coords = MapCoords { theta, big_theta };
        coords.check_unit_directions(tol::UNIT_DIRECTION)?;
        Ok(coords)
    }

    /// Largest deviation of |Theta| from one must stay within `limit`.
    pub fn check_unit_directions(&self, limit: f64) -> Result<()> {
        for v in &self.big_theta.values {
            let deviation = (v.norm_sqr().sqrt() - 1.0).abs();
            if deviation > limit {
                return Err(Error::UnitNormLoss { deviation, limit });
            }
        }
        Ok(())
    }

    /// Every theta sample must keep at least `margin` distance from the
    /// chart's singular set {0, pi/2, pi}.
    pub fn check_margin(&self, margin: f64) -> Result<()> {
        for (index, &theta) in self.theta.values.iter().enumerate() {
            if singular_distance(theta) < margin {
                return Err(Error::CoordinateSingularity { index, theta, margin });
            }
        }
        Ok(())
    }

    /// Connection scalar phi = <i Theta_x, Theta>, the imaginary part
    /// of conj(Theta_x) . Theta.
    pub fn phi(&self) -> PeriodicField<f64> {
        self.big_theta
            .dx()
            .zip(&self.big_theta, |d, t| conj_dot(d, t).im)
    }

    /// Rescales every direction sample to unit norm and returns the
    /// largest removed radial deviation | |Theta| - 1 |.
    pub fn renormalize(&mut self) -> f64 {
        let mut worst = 0.0f64;
        for v in &mut self.big_theta.values {
            let r = v.norm_sqr().sqrt();
            if r > 0.0 {
                worst = worst.max((r - 1.0).abs());
                *v = v.scale(1.0 / r);
            }
        }
        worst
    }

    pub fn to_points(&self) -> PeriodicField<CoordPoint> {
        self.theta.zip(&self.big_theta, |&theta, dir| CoordPoint {
            theta,
            dir: dir.clone(),
        })
    }

    pub fn from_points(points: &PeriodicField<CoordPoint>) -> Self {
        MapCoords {
            theta: points.map(|p| p.theta),
            big_theta: points.map(|p| p.dir.clone()),
        }
    }
}

impl MapState {
    pub fn new(desc: AlgebraDescriptor, gamma_map: PeriodicField<CMat>, time: f64) -> Self {
        assert_eq!(
            gamma_map.values[0].nrows(),
            desc.n + 1,
            "matrix size vs descriptor"
        );
        MapState { desc, gamma_map, time }
    }

    pub fn from_coords(desc: &AlgebraDescriptor, coords: &MapCoords, time: f64) -> Result<Self> {
        Ok(MapState::new(desc.clone(), embed(desc, coords)?, time))
    }
}

/// Chart sample bundling theta with Theta, so coordinate evolution can
/// ride the shared steppers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordPoint {
    pub theta: f64,
    pub dir: MVector,
}

impl FieldElement for CoordPoint {
    fn comp_len(&self) -> usize {
        1 + self.dir.dim()
    }
    fn comp(&self, k: usize) -> C64 {
        if k == 0 {
            C64::new(self.theta, 0.0)
        } else {
            self.dir.0[k - 1]
        }
    }
    fn set_comp(&mut self, k: usize, z: C64) {
        if k == 0 {
            self.theta = z.re;
        } else {
            self.dir.0[k - 1] = z;
        }
    }
}

fn singular_distance(theta: f64) -> f64 {
    theta
        .abs()
        .min((theta - FRAC_PI_2).abs())
        .min((theta - PI).abs())
}

/// Pointwise chart-to-orbit embedding; equals Ad(exp_m(theta Theta)) A.
pub fn embed(desc: &AlgebraDescriptor, coords: &MapCoords) -> Result<PeriodicField<CMat>> {
    if coords.big_theta.values[0].dim() != desc.n {
        return Err(Error::DimensionMismatch(format!(
            "direction dimension {} vs algebra N = {}",
            coords.big_theta.values[0].dim(),
            desc.n
        )));
    }
    coords.check_unit_directions(DIRECTION_LIMIT)?;
    let a_emb = desc.a_embedded();
    let mut vals = Vec::with_capacity(coords.theta.grid.m);
    for j in 0..coords.theta.grid.m {
        let (s, c) = coords.theta.values[j].sin_cos();
        let dir = &coords.big_theta.values[j];
        let it = dir.j();
        let h = HElement { block: outer(dir, &it) };
        vals.push(&a_emb + h.embed().map(|z| z * (s * s)) + it.embed().map(|z| z * (-s * c)));
    }
    Ok(PeriodicField::new(coords.theta.grid, vals))
}

/// NLS-face map flow -[gamma, gamma_xx]. This is -J P gamma_xx written
/// without the projection, since ad(gamma) annihilates the normal part
/// of gamma_xx.
pub fn schrodinger_map_rhs_matrix(gamma: &PeriodicField<CMat>) -> PeriodicField<CMat> {
    let gxx = gamma.dx_n(2);
    gamma.zip(&gxx, |g, d| -comm(g, d))
}

/// Projection onto the orbit tangent space at gamma, P = -ad(gamma)^2;
/// ad(gamma)^2 is -1 on the tangent space and 0 on the normal space.
pub fn orbit_project(gamma: &CMat, x: &CMat) -> CMat {
    comm(gamma, &comm(gamma, x)).map(|z| -z)
}

/// mKdV-face map flow -(P Dx)^2 gamma_x + (1/2)[w, [w, gamma_x]] with
/// w = [gamma, gamma_x]; equals sqrt(efac) spin_mkdv_rhs on the unit
/// spin field gamma / sqrt(efac).
pub fn map_mkdv_rhs(gamma: &PeriodicField<CMat>) -> PeriodicField<CMat> {
    let gx = gamma.dx();
    let gxx = gamma.dx_n(2);
    let cov = gamma.zip(&gxx, orbit_project);
    let cov_x = cov.dx();
    let cov2 = gamma.zip(&cov_x, orbit_project);
    let mut vals = Vec::with_capacity(gamma.grid.m);
    for j in 0..gamma.grid.m {
        let w = comm(&gamma.values[j], &gx.values[j]);
        let cubic = comm(&w, &comm(&w, &gx.values[j]));
        vals.push(-&cov2.values[j] + cubic.map(|z| z * 0.5));
    }
    PeriodicField::new(gamma.grid, vals)
}

/// Chart rates (theta_t, Theta_t) of the bare flow
/// gamma_t = -[gamma, gamma_xx].
///
/// theta_t = -2 cos(2 theta) theta_x phi - (1/2) sin(2 theta) phi_x,
/// the expanded form of a quotient by cos(2 theta) that cancels
/// identically. Theta_t carries a genuine csc(2 theta) factor:
///
/// ```text
///   i Theta_t = 2 csc(2 theta) [ theta_x phi i Theta
///     - (1/2) sin(2 theta) cos(2 theta) phi i Theta_x
///     + ((1/2) sin(2 theta) phi i Theta)_x
///     + (theta_x Theta + (1/2) sin(2 theta) Theta_x)_x ],
/// ```
///
/// so the margin from {0, pi/2, pi} is enforced first. Composite
/// products are formed pointwise before their spectral derivative.
pub fn coord_evolution_rhs(
    coords: &MapCoords,
    theta_margin: f64,
) -> Result<(PeriodicField<f64>, PeriodicField<MVector>)> {
    coords.theta.grid.ensure_matches(&coords.big_theta.grid)?;
    coords.check_margin(theta_margin)?;
    let grid = coords.theta.grid;
    let theta_x = coords.theta.dx();
    let phi = coords.phi();
    let phi_x = phi.dx();
    let dir = &coords.big_theta;
    let dir_x = dir.dx();

    let mut theta_t = Vec::with_capacity(grid.m);
    let mut f1 = Vec::with_capacity(grid.m);
    let mut f2 = Vec::with_capacity(grid.m);
    for j in 0..grid.m {
        let (s2, c2) = (2.0 * coords.theta.values[j]).sin_cos();
        theta_t.push(-2.0 * c2 * theta_x.values[j] * phi.values[j] - 0.5 * s2 * phi_x.values[j]);
        f1.push(dir.values[j].j().scale(0.5 * s2 * phi.values[j]));
        f2.push(
            dir.values[j]
                .scale(theta_x.values[j])
                .add(&dir_x.values[j].scale(0.5 * s2)),
        );
    }
    let f1_x = PeriodicField::new(grid, f1).dx();
    let f2_x = PeriodicField::new(grid, f2).dx();

    let mut dir_t = Vec::with_capacity(grid.m);
    for j in 0..grid.m {
        let (s2, c2) = (2.0 * coords.theta.values[j]).sin_cos();
        let r = dir.values[j]
            .j()
            .scale(theta_x.values[j] * phi.values[j])
            .add(&dir_x.values[j].j().scale(-0.5 * s2 * c2 * phi.values[j]))
            .add(&f1_x.values[j])
            .add(&f2_x.values[j]);
        dir_t.push(r.scale(2.0 / s2).j_inv());
    }
    Ok((
        PeriodicField::new(grid, theta_t),
        PeriodicField::new(grid, dir_t),
    ))
}

/// Coordinate-path right side on the efac clock, bundled for the
/// steppers. Fails where the margin check fails; the caller
/// renormalizes Theta between steps.
pub fn coord_flow_rhs(
    desc: &AlgebraDescriptor,
    points: &PeriodicField<CoordPoint>,
    theta_margin: f64,
) -> Result<PeriodicField<CoordPoint>> {
    let coords = MapCoords::from_points(points);
    let (theta_t, dir_t) = coord_evolution_rhs(&coords, theta_margin)?;
    let vals = (0..points.grid.m)
        .map(|j| CoordPoint {
            theta: desc.efac * theta_t.values[j],
            dir: dir_t.values[j].scale(desc.efac),
        })
        .collect();
    Ok(PeriodicField::new(points.grid, vals))
}

/// Chart image s = sin(theta) Theta; |s| = sin(theta).
pub fn stereographic(coords: &MapCoords) -> PeriodicField<MVector> {
    coords
        .theta
        .zip(&coords.big_theta, |&th, dir| dir.scale(th.sin()))
}

/// Upper-hemisphere inverse of [`stereographic`]: theta = asin |s| in
/// [0, pi/2] and Theta = s / |s|. |s| is clamped to one against
/// roundoff; at s = 0 the direction falls back to the first basis
/// vector (the chart is singular there anyway).
pub fn stereographic_inverse(s: &PeriodicField<MVector>) -> MapCoords {
    let theta = s.map(|v| v.norm_sqr().sqrt().min(1.0).asin());
    let big_theta = s.map(|v| {
        let r = v.norm_sqr().sqrt();
        if r > 0.0 {
            v.scale(1.0 / r)
        } else {
            let mut e1 = MVector::zeros(v.dim());
            e1.0[0] = C64::new(1.0, 0.0);
            e1
        }
    });
    MapCoords { theta, big_theta }
}

/// Arclength integral of sqrt(g(gamma_x, gamma_x)).
pub fn total_arclength(desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> f64 {
    gamma
        .dx()
        .map(|v| desc.metric(v, v).max(0.0).sqrt())
        .quadrature()
}

/// Pointwise stretching rate d/dt g(gamma_x, gamma_x) = 2 g(rhs_x,
/// gamma_x) under the supplied evolution right side. For the
/// Schroedinger flow this equals 2 Dx g(P gamma_xx, [gamma, gamma_x]),
/// an exact flux derivative, so the squared-speed integral is
/// conserved for any data while the arclength integral is conserved on
/// constant-speed data.
pub fn local_stretch(
    desc: &AlgebraDescriptor,
    gamma: &PeriodicField<CMat>,
    rhs: &PeriodicField<CMat>,
) -> PeriodicField<f64> {
    rhs.dx().zip(&gamma.dx(), |a, b| 2.0 * desc.metric(a, b))
}

/// Conserved map functionals: H1 = int (1/2) g(gamma_x, gamma_x) dx
/// and H2 = int (1/2) g(P gamma_xx, [gamma, gamma_x]) dx. They equal
/// the first two q-side functionals under the frame correspondence.
pub fn map_hamiltonian(
    desc: &AlgebraDescriptor,
    gamma: &PeriodicField<CMat>,
    k: u32,
) -> Result<f64> {
    let gx = gamma.dx();
    let density: PeriodicField<f64> = match k {
        1 => gx.map(|v| 0.5 * desc.metric(v, v)),
        2 => {
            let gxx = gamma.dx_n(2);
            let mut vals = Vec::with_capacity(gamma.grid.m);
            for j in 0..gamma.grid.m {
                let cov = orbit_project(&gamma.values[j], &gxx.values[j]);
                let jg = comm(&gamma.values[j], &gx.values[j]);
                vals.push(0.5 * desc.metric(&cov, &jg));
            }
            PeriodicField::new(gamma.grid, vals)
        }
        _ => return Err(Error::HamiltonianIndexOutOfRange { index: k, max: 2 }),
    };
    Ok(density.quadrature())
}

pub fn map_hamiltonians(desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> Result<[f64; 2]> {
    Ok([
        map_hamiltonian(desc, gamma, 1)?,
        map_hamiltonian(desc, gamma, 2)?,
    ])
}

/// Max pointwise eigenvalue deviation of gamma from the spectrum of A,
/// the adjoint orbit membership diagnostic.
pub fn map_spectrum_drift(desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> f64 {
    let reference = spectrum_antihermitian(&desc.a_embedded());
    let mut worst = 0.0f64;
    for v in &gamma.values {
        let spec = spectrum_antihermitian(v);
        for (a, b) in spec.iter().zip(reference.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Map flows with their efac-clock scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFlow {
    Schrodinger,
    Mkdv,
}

impl MapFlow {
    pub fn rhs(self, desc: &AlgebraDescriptor, gamma: &PeriodicField<CMat>) -> PeriodicField<CMat> {
        match self {
            MapFlow::Schrodinger => schrodinger_map_rhs_matrix(gamma).scale(desc.efac),
            MapFlow::Mkdv => map_mkdv_rhs(gamma).scale(desc.efac),
        }
    }
}

/// Smooth chart data clear of the singular set: theta oscillates about
/// theta0 and the direction precesses about the first basis vector.
/// Integer `mode` keeps both fields periodic; `dir_amp` below one
/// keeps the direction nonvanishing.
pub fn coordinate_wave(
    n: usize,
    grid: Grid,
    theta0: f64,
    theta_amp: f64,
    dir_amp: f64,
    mode: i64,
) -> MapCoords {
    let w = 2.0 * PI * mode as f64 / grid.length;
    let theta = PeriodicField::from_fn(grid, |x| theta0 + theta_amp * (w * x).sin());
    let big_theta = PeriodicField::from_fn(grid, |x| {
        let mut v = MVector::zeros(n);
        v.0[0] = C64::new(1.0, 0.0);
        let slot = if n > 1 { 1 } else { 0 };
        v.0[slot] += C64::from_polar(dir_amp, w * x);
        v.scale(1.0 / v.norm_sqr().sqrt())
    });
    MapCoords { theta, big_theta }
}
