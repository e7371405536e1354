//! The symmetric Lie algebra su(N+1) = m + h for complex projective
//! space, in the fundamental matrix representation
//!
//! ```text
//!   [[ -tr(B),  a  ]
//!    [ -conj(a)^T, B ]]    a in C^N (row vector),  B in u(N)
//! ```
//!
//! The m part is identified with the row vector a, the h part with the
//! N x N anti-Hermitian block B (its corner entry is -tr(B)). All
//! brackets are evaluated in these reduced coordinates; the dense
//! (N+1) x (N+1) commutator is kept as an independent oracle in tests.
//!
//! The pivot element is A = h-embed of -(i/(N+1)) I_N, so J = ad(A)
//! multiplies m by i and kills h. The Killing form is
//! kill(x, y) = 2(N+1) tr(xy), with efac = -kill(A, A) = 2N.

use crate::error::Error;
use crate::linalg::{self, CMat};
use crate::Result;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type C64 = Complex64;

/// Full (N+1) x (N+1) anti-Hermitian traceless matrix. Constructors in
/// this module guarantee the invariants up to roundoff; see
/// [`algebra_residual`] for the checker used by tests and validators.
pub type AlgebraElement = CMat;

const I: C64 = C64::new(0.0, 1.0);

/// Element of m, a complex row vector in C^N.
#[derive(Debug, Clone, PartialEq)]
pub struct MVector(pub Vec<C64>);

/// Element of h, stored as its N x N anti-Hermitian block.
#[derive(Debug, Clone, PartialEq)]
pub struct HElement {
    pub block: CMat,
}

impl MVector {
    pub fn zeros(n: usize) -> Self {
        MVector(vec![C64::new(0.0, 0.0); n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Multiplication by i, the action of J = ad(A) on m.
    pub fn j(&self) -> Self {
        MVector(self.0.iter().map(|z| I * z).collect())
    }

    /// Inverse of J, multiplication by -i.
    pub fn j_inv(&self) -> Self {
        MVector(self.0.iter().map(|z| -I * z).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        MVector(self.0.iter().map(|z| z * c).collect())
    }

    pub fn scale_c(&self, c: C64) -> Self {
        MVector(self.0.iter().map(|z| z * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        MVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        MVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Squared Euclidean norm |a|^2 = sum |a_j|^2.
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Embed as the dense matrix [[0, a], [-conj(a)^T, 0]].
    pub fn embed(&self) -> CMat {
        let n = self.dim();
        let mut x = CMat::zeros(n + 1, n + 1);
        for j in 0..n {
            x[(0, j + 1)] = self.0[j];
            x[(j + 1, 0)] = -self.0[j].conj();
        }
        x
    }
}

/// conj(b) . a = sum conj(b_j) a_j. The real part is the inner product
/// <b, a> on C^N; the imaginary part is <ib, a>.
pub fn conj_dot(b: &MVector, a: &MVector) -> C64 {
    b.0.iter()
        .zip(&a.0)
        .map(|(bj, aj)| bj.conj() * aj)
        .sum()
}

/// Rank-one product conj(a)^T b, entry (r, c) = conj(a_r) b_c.
pub fn outer(a: &MVector, b: &MVector) -> CMat {
    CMat::from_fn(a.dim(), b.dim(), |r, c| a.0[r].conj() * b.0[c])
}

impl HElement {
    pub fn zeros(n: usize) -> Self {
        HElement { block: CMat::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.block.nrows()
    }

    /// Corner entry of the embedding, -tr(block).
    pub fn corner(&self) -> C64 {
        -self.block.diagonal().iter().sum::<C64>()
    }

    pub fn scale(&self, c: f64) -> Self {
        HElement { block: self.block.map(|z| z * c) }
    }

    pub fn add(&self, other: &Self) -> Self {
        HElement { block: &self.block + &other.block }
    }

    pub fn sub(&self, other: &Self) -> Self {
        HElement { block: &self.block - &other.block }
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.block)
    }

    /// Embed as the dense matrix diag(-tr(B), B).
    pub fn embed(&self) -> CMat {
        let n = self.dim();
        let mut x = CMat::zeros(n + 1, n + 1);
        x[(0, 0)] = self.corner();
        for r in 0..n {
            for c in 0..n {
                x[(r + 1, c + 1)] = self.block[(r, c)];
            }
        }
        x
    }
}

/// Structure constants and dimensions for su(N+1) = m + h.
#[derive(Debug, Clone)]
pub struct AlgebraDescriptor {
    /// Complex dimension N of m.
    pub n: usize,
    /// Squared Killing norm of A, equal to 2N = dim_R(m).
    pub efac: f64,
    /// Coefficient of tr(xy) in the Killing form, 2(N+1).
    pub killing_scale: f64,
    /// Pivot element A = h-embed of -(i/(N+1)) I_N.
    pub a: HElement,
}

impl AlgebraDescriptor {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "algebra requires N >= 1");
        let coeff = C64::new(0.0, -1.0 / (n as f64 + 1.0));
        let block = CMat::from_diagonal_element(n, n, coeff);
        AlgebraDescriptor {
            n,
            efac: 2.0 * n as f64,
            killing_scale: 2.0 * (n as f64 + 1.0),
            a: HElement { block },
        }
    }

    /// 1/sqrt(efac), the factor normalizing A to a unit vector.
    pub fn enorm(&self) -> f64 {
        1.0 / self.efac.sqrt()
    }

    /// sqrt(efac), the Killing norm of A.
    pub fn enorminv(&self) -> f64 {
        self.efac.sqrt()
    }

    pub fn a_embedded(&self) -> CMat {
        self.a.embed()
    }

    /// Killing form kill(x, y) = 2(N+1) tr(xy) on dense elements. Real
    /// for anti-Hermitian arguments.
    pub fn killing(&self, x: &CMat, y: &CMat) -> f64 {
        let tr: C64 = (x * y).diagonal().iter().sum();
        self.killing_scale * tr.re
    }

    /// Metric on m, <b, a> = -kill = 4(N+1) Re(conj(b) . a).
    pub fn ip_m(&self, b: &MVector, a: &MVector) -> f64 {
        2.0 * self.killing_scale * conj_dot(b, a).re
    }

    /// Metric on h, -kill(X, Y) = -2(N+1)(tr X tr Y + tr(XY)).
    pub fn ip_h(&self, x: &HElement, y: &HElement) -> f64 {
        let trx: C64 = x.block.diagonal().iter().sum();
        let try_: C64 = y.block.diagonal().iter().sum();
        let trxy: C64 = (&x.block * &y.block).diagonal().iter().sum();
        -self.killing_scale * (trx * try_ + trxy).re
    }

    /// Metric on dense elements, g(x, y) = -kill(x, y).
    pub fn metric(&self, x: &CMat, y: &CMat) -> f64 {
        -self.killing(x, y)
    }
}

/// Coefficient slots of the reduced bracket closed forms, addressable
/// by negative controls that knock one structure constant off its
/// exact value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketSlot {
    /// Trace term of [h, m].
    HmTrace,
    /// Right-action term of [h, m].
    HmAction,
    /// conj(b)^T a term of [m, m].
    MmLeft,
    /// conj(a)^T b term of [m, m].
    MmRight,
    /// xy term of [h, h].
    HhLeft,
    /// yx term of [h, h].
    HhRight,
    /// 2 conj(b).a cross term of ad(a)^2 b.
    AdCross,
    /// conj(a).b term of ad(a)^2 b.
    AdConjugate,
    /// conj(a).a term of ad(a)^2 b.
    AdNorm,
}

impl BracketSlot {
    pub const ALL: [BracketSlot; 9] = [
        BracketSlot::HmTrace,
        BracketSlot::HmAction,
        BracketSlot::MmLeft,
        BracketSlot::MmRight,
        BracketSlot::HhLeft,
        BracketSlot::HhRight,
        BracketSlot::AdCross,
        BracketSlot::AdConjugate,
        BracketSlot::AdNorm,
    ];

    /// Stable label for reports.
    pub fn label(self) -> &'static str {
        match self {
            BracketSlot::HmTrace => "hm_trace",
            BracketSlot::HmAction => "hm_action",
            BracketSlot::MmLeft => "mm_left",
            BracketSlot::MmRight => "mm_right",
            BracketSlot::HhLeft => "hh_left",
            BracketSlot::HhRight => "hh_right",
            BracketSlot::AdCross => "ad_cross",
            BracketSlot::AdConjugate => "ad_conjugate",
            BracketSlot::AdNorm => "ad_norm",
        }
    }

    /// Parses a label produced by [`BracketSlot::label`].
    pub fn parse(label: &str) -> Option<BracketSlot> {
        BracketSlot::ALL.iter().copied().find(|s| s.label() == label)
    }
}

/// One deliberately perturbed bracket coefficient.
#[derive(Debug, Clone, Copy)]
pub struct BracketTweak {
    pub slot: BracketSlot,
    pub size: f64,
}

impl BracketTweak {
    fn bump(self, slot: BracketSlot) -> f64 {
        if self.slot == slot { self.size } else { 0.0 }
    }
}

fn slot_coeff(base: f64, slot: BracketSlot, tweak: Option<BracketTweak>) -> f64 {
    base + tweak.map_or(0.0, |t| t.bump(slot))
}

/// [h, m] bracket in reduced form: [B, a] = -tr(B) a - a B.
pub fn bracket_hm(h: &HElement, a: &MVector) -> MVector {
    bracket_hm_perturbed(h, a, None)
}

/// [h, m] with optionally perturbed coefficients; the canonical
/// bracket is the `None` path.
pub fn bracket_hm_perturbed(h: &HElement, a: &MVector, tweak: Option<BracketTweak>) -> MVector {
    let ct = slot_coeff(-1.0, BracketSlot::HmTrace, tweak);
    let cr = slot_coeff(-1.0, BracketSlot::HmAction, tweak);
    let n = a.dim();
    let tr: C64 = h.block.diagonal().iter().sum();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        let mut ab = C64::new(0.0, 0.0);
        for i in 0..n {
            ab += a.0[i] * h.block[(i, j)];
        }
        out[j] = ct * tr * a.0[j] + cr * ab;
    }
    MVector(out)
}

/// [m, m] bracket in reduced form:
/// [a, b] = h-embed of conj(b)^T a - conj(a)^T b.
pub fn bracket_mm(a: &MVector, b: &MVector) -> HElement {
    bracket_mm_perturbed(a, b, None)
}

/// [m, m] with optionally perturbed coefficients; the canonical
/// bracket is the `None` path.
pub fn bracket_mm_perturbed(a: &MVector, b: &MVector, tweak: Option<BracketTweak>) -> HElement {
    let cl = slot_coeff(1.0, BracketSlot::MmLeft, tweak);
    let cr = slot_coeff(-1.0, BracketSlot::MmRight, tweak);
    let n = a.dim();
    let mut block = CMat::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            block[(r, c)] = cl * b.0[r].conj() * a.0[c] + cr * a.0[r].conj() * b.0[c];
        }
    }
    HElement { block }
}

/// [h, h] bracket, the block commutator.
pub fn bracket_hh(x: &HElement, y: &HElement) -> HElement {
    bracket_hh_perturbed(x, y, None)
}

/// [h, h] with optionally perturbed coefficients; the canonical
/// bracket is the `None` path.
pub fn bracket_hh_perturbed(x: &HElement, y: &HElement, tweak: Option<BracketTweak>) -> HElement {
    let cl = slot_coeff(1.0, BracketSlot::HhLeft, tweak);
    let cr = slot_coeff(-1.0, BracketSlot::HhRight, tweak);
    let xy = &x.block * &y.block;
    let yx = &y.block * &x.block;
    HElement { block: xy.map(|z| cl * z) + yx.map(|z| cr * z) }
}

/// ad(a)^2 b on m in closed form:
/// (2 conj(b).a - conj(a).b) a - (conj(a).a) b.
pub fn ad_squared_m(a: &MVector, b: &MVector) -> MVector {
    ad_squared_m_perturbed(a, b, None)
}

/// ad(a)^2 b with optionally perturbed coefficients; the canonical
/// operator is the `None` path.
pub fn ad_squared_m_perturbed(a: &MVector, b: &MVector, tweak: Option<BracketTweak>) -> MVector {
    let cc = slot_coeff(2.0, BracketSlot::AdCross, tweak);
    let cj = slot_coeff(-1.0, BracketSlot::AdConjugate, tweak);
    let cn = slot_coeff(-1.0, BracketSlot::AdNorm, tweak);
    let ba = conj_dot(b, a);
    let ab = conj_dot(a, b);
    let aa = conj_dot(a, a);
    let coeff = cc * ba + cj * ab;
    MVector(
        a.0.iter()
            .zip(&b.0)
            .map(|(aj, bj)| coeff * aj + cn * aa * bj)
            .collect(),
    )
}

/// Group exponential of the m element a, in closed form built from
/// sin|a|, cos|a|, and the unit direction.
pub fn exp_m(a: &MVector) -> CMat {
    let n = a.dim();
    let t = a.norm_sqr().sqrt();
    // series limits sin(t)/t -> 1 and (1-cos t)/t^2 -> 1/2 at t = 0
    let (sinc, verc) = if t < 1e-8 {
        (1.0 - t * t / 6.0, 0.5 - t * t / 24.0)
    } else {
        (t.sin() / t, (1.0 - t.cos()) / (t * t))
    };
    let x = a.embed();
    let x2 = &x * &x;
    CMat::identity(n + 1, n + 1) + x.map(|z| z * sinc) + x2.map(|z| z * verc)
}

/// Extract the m part of a dense element as a row vector,
/// symmetrizing the two off-diagonal blocks.
pub fn extract_m(x: &CMat) -> MVector {
    let n = x.nrows() - 1;
    MVector(
        (0..n)
            .map(|j| (x[(0, j + 1)] - x[(j + 1, 0)].conj()) * 0.5)
            .collect(),
    )
}

/// Extract the h part of a dense element as its block.
pub fn extract_h(x: &CMat) -> HElement {
    let n = x.nrows() - 1;
    let mut block = CMat::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            block[(r, c)] = x[(r + 1, c + 1)];
        }
    }
    HElement { block }
}

/// Orthogonal projection onto m (with respect to the Killing form).
pub fn project_m(x: &CMat) -> CMat {
    extract_m(x).embed()
}

/// Orthogonal projection onto h.
pub fn project_h(x: &CMat) -> CMat {
    x - project_m(x)
}

/// J = ad(A) on dense elements: i on the m part, zero on h.
pub fn j_apply(x: &CMat) -> CMat {
    extract_m(x).j().embed()
}

/// Max residual of the algebra-element invariants: anti-Hermiticity
/// and zero trace.
pub fn algebra_residual(x: &CMat) -> f64 {
    let herm = linalg::max_abs(&(x + x.adjoint()).map(|z| z * 0.5));
    let tr: C64 = x.diagonal().iter().sum();
    herm.max(tr.norm())
}

/// Which part of the algebra a random element lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    M,
    H,
    G,
}

/// Seeded random m vector with independent complex Gaussian entries of
/// standard deviation `scale` per real component.
pub fn random_m_vector(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> MVector {
    MVector(
        (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re * scale, im * scale)
            })
            .collect(),
    )
}

/// Seeded random h element, the anti-Hermitian part of a Gaussian
/// block.
pub fn random_h_element(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> HElement {
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * scale, im * scale)
    });
    HElement { block: (&g - g.adjoint()).map(|z| z * 0.5) }
}

/// Seeded random algebra element of the requested kind.
pub fn random_element(
    desc: &AlgebraDescriptor,
    kind: ElementKind,
    seed: u64,
    scale: f64,
) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        ElementKind::M => random_m_vector(desc.n, &mut rng, scale).embed(),
        ElementKind::H => random_h_element(desc.n, &mut rng, scale).embed(),
        ElementKind::G => {
            let m = random_m_vector(desc.n, &mut rng, scale).embed();
            let h = random_h_element(desc.n, &mut rng, scale).embed();
            m + h
        }
    }
}

/// Spectrum of an anti-Hermitian element: the sorted real numbers mu_j
/// with eigenvalues i mu_j.
pub fn spectrum(x: &CMat) -> Vec<f64> {
    linalg::spectrum_antihermitian(x)
}

/// Validate that a dense matrix is an algebra element within `tol`.
pub fn check_algebra_element(x: &CMat, tol: f64) -> Result<()> {
    let r = algebra_residual(x);
    if r > tol {
        return Err(Error::DimensionMismatch(format!(
            "matrix is not anti-Hermitian traceless: residual {r:.3e}"
        )));
    }
    Ok(())
}
