//! Seeded identity suite for the reduced algebra.
//!
//! Each line checks one closed form or structural fact against the
//! dense su(N+1) oracle (generic commutators, exponentials, traces),
//! recording the worst residual over seeded Gaussian draws. The
//! reduced side routes through the perturbable bracket path, so a
//! negative control that corrupts a single coefficient trips at least
//! one line.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{self, AlgebraDescriptor, BracketTweak, C64};
use crate::linalg;
use crate::tol;

/// Outcome of one identity line.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Magnitude of the Gaussian draws; order one, far from any small
/// regime where a wrong coefficient could hide.
const DRAW_SCALE: f64 = 0.8;

const NAMES: [&str; 14] = [
    "bracket_mm_closed_form",
    "bracket_hm_closed_form",
    "bracket_hh_closed_form",
    "bracket_inclusions",
    "jacobi_identity",
    "pivot_centralizer",
    "pivot_acts_as_j",
    "pivot_ad_squared_minus_one",
    "pivot_killing_norm",
    "killing_ad_invariance",
    "reduced_metrics_match_killing",
    "ad_squared_closed_form",
    "cubic_identity",
    "exp_m_closed_form",
];

/// Runs the identity suite with `samples` seeded draws per line,
/// optionally perturbing one reduced bracket coefficient.
pub fn identity_suite(
    desc: &AlgebraDescriptor,
    samples: usize,
    seed: u64,
    tweak: Option<BracketTweak>,
) -> Vec<IdentityCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = desc.n;
    let a_pivot = desc.a_embedded();
    let mut worst = [0.0f64; NAMES.len()];
    for _ in 0..samples {
        let a = algebra::random_m_vector(n, &mut rng, DRAW_SCALE);
        let b = algebra::random_m_vector(n, &mut rng, DRAW_SCALE);
        let c = algebra::random_m_vector(n, &mut rng, DRAW_SCALE);
        let h1 = algebra::random_h_element(n, &mut rng, DRAW_SCALE);
        let h2 = algebra::random_h_element(n, &mut rng, DRAW_SCALE);
        let h3 = algebra::random_h_element(n, &mut rng, DRAW_SCALE);
        let (ae, be) = (a.embed(), b.embed());
        let (h1e, h2e) = (h1.embed(), h2.embed());
        let x = &ae + &h1e;
        let y = &be + &h2e;
        let z = c.embed() + h3.embed();

        // reduced brackets against dense commutators
        worst[0] = worst[0].max(linalg::max_abs(
            &(algebra::bracket_mm_perturbed(&a, &b, tweak).embed() - linalg::comm(&ae, &be)),
        ));
        worst[1] = worst[1].max(linalg::max_abs(
            &(algebra::bracket_hm_perturbed(&h1, &a, tweak).embed() - linalg::comm(&h1e, &ae)),
        ));
        worst[2] = worst[2].max(linalg::max_abs(
            &(algebra::bracket_hh_perturbed(&h1, &h2, tweak).embed() - linalg::comm(&h1e, &h2e)),
        ));

        // [m, m] in h, [h, m] in m, [h, h] in h
        let inc = linalg::max_abs(&algebra::project_m(&linalg::comm(&ae, &be)))
            .max(linalg::max_abs(&algebra::project_h(&linalg::comm(&h1e, &ae))))
            .max(linalg::max_abs(&algebra::project_m(&linalg::comm(&h1e, &h2e))));
        worst[3] = worst[3].max(inc);

        // Jacobi on generic elements
        let jac = linalg::comm(&x, &linalg::comm(&y, &z))
            + linalg::comm(&y, &linalg::comm(&z, &x))
            + linalg::comm(&z, &linalg::comm(&x, &y));
        worst[4] = worst[4].max(linalg::max_abs(&jac));

        // h centralizes the pivot, via both the closed form and the dense route
        let cent = algebra::bracket_hh_perturbed(&desc.a, &h2, tweak)
            .max_abs()
            .max(linalg::max_abs(&linalg::comm(&a_pivot, &h2e)));
        worst[5] = worst[5].max(cent);

        // ad(A) acts as J on m, and squares to minus the identity
        worst[6] = worst[6].max(
            algebra::bracket_hm_perturbed(&desc.a, &a, tweak)
                .sub(&a.j())
                .max_abs(),
        );
        let twice = algebra::bracket_hm_perturbed(
            &desc.a,
            &algebra::bracket_hm_perturbed(&desc.a, &a, tweak),
            tweak,
        );
        worst[7] = worst[7].max(twice.add(&a).max_abs());

        // kill(A, A) = -2N
        worst[8] = worst[8].max((desc.killing(&a_pivot, &a_pivot) + desc.efac).abs());

        // kill([x, y], z) + kill(y, [x, z]) = 0
        worst[9] = worst[9].max(
            (desc.killing(&linalg::comm(&x, &y), &z) + desc.killing(&y, &linalg::comm(&x, &z)))
                .abs(),
        );

        // reduced inner products agree with the dense metric
        let met = (desc.ip_m(&b, &a) - desc.metric(&be, &ae))
            .abs()
            .max((desc.ip_h(&h1, &h2) - desc.metric(&h1e, &h2e)).abs());
        worst[10] = worst[10].max(met);

        // ad(a)^2 closed form vs the double commutator
        worst[11] = worst[11].max(linalg::max_abs(
            &(algebra::ad_squared_m_perturbed(&a, &b, tweak).embed()
                - linalg::comm(&ae, &linalg::comm(&ae, &be))),
        ));

        // ad(Jq)^2 q = -4|q|^2 q and ad(q)^2 Jq = -4i|q|^2 q
        let nq = a.norm_sqr();
        let cube = algebra::ad_squared_m_perturbed(&a.j(), &a, tweak)
            .sub(&a.scale(-4.0 * nq))
            .max_abs()
            .max(
                algebra::ad_squared_m_perturbed(&a, &a.j(), tweak)
                    .sub(&a.scale_c(C64::new(0.0, -4.0 * nq)))
                    .max_abs(),
            );
        worst[12] = worst[12].max(cube);

        // closed-form exponential vs the generic one
        worst[13] = worst[13].max(linalg::max_abs(&(algebra::exp_m(&a) - linalg::expm(&ae))));
    }
    NAMES
        .iter()
        .zip(worst)
        .map(|(&name, max_residual)| IdentityCheck {
            name,
            max_residual,
            tolerance: tol::ALG_IDENTITY,
            pass: max_residual <= tol::ALG_IDENTITY,
        })
        .collect()
}
