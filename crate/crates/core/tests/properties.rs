use nalgebra::DMatrix;
use proptest::prelude::*;

use glmcs::confsets::{
    analytic_adaptive_set, ewa_pseudo_labels, pseudo_label_ellipsoid, transductive_set, ConfidenceSet, RegretTerm,
};
use glmcs::estimators::{constrained_mle, ridge_mle};
use glmcs::family::{d_psi, negloglik, truncate};
use glmcs::forecasters::{ewa_init, mix_loss, replay_regret, shifted_mix_loss, telescoped_regret, GridSpec, Prior};
use glmcs::infogain::{info_gain_bound, info_gain_exact};
use glmcs::{GlmFamily, ObservationLog};

fn family() -> impl Strategy<Value = GlmFamily> {
    prop_oneof![Just(GlmFamily::Gaussian), Just(GlmFamily::Logistic)]
}

/// Rounds with labels valid for `fam`; the label is drawn as a bit and a
/// real so either family can use it.
fn rounds(d: usize, max_n: usize) -> impl Strategy<Value = Vec<(Vec<f64>, bool, f64)>> {
    rounds_from(d, 0, max_n)
}

fn rounds_from(d: usize, min_n: usize, max_n: usize) -> impl Strategy<Value = Vec<(Vec<f64>, bool, f64)>> {
    prop::collection::vec((prop::collection::vec(-1.5f64..1.5, d), any::<bool>(), -2.0f64..2.0), min_n..max_n)
}

fn build(fam: GlmFamily, d: usize, rs: &[(Vec<f64>, bool, f64)]) -> ObservationLog {
    let mut log = ObservationLog::new(d);
    for (x, bit, real) in rs {
        let y = match fam {
            GlmFamily::Gaussian => *real,
            GlmFamily::Logistic => f64::from(u8::from(*bit)),
        };
        log.push(x.clone(), y).unwrap();
    }
    log
}

fn gaussian_prior(fam: GlmFamily, d: usize, lambda: f64) -> glmcs::forecasters::Posterior {
    let grid = match fam {
        GlmFamily::Gaussian => None,
        GlmFamily::Logistic => Some(GridSpec {
            half_width: 6.0,
            nodes_per_dim: 301,
        }),
    };
    ewa_init(fam, d, &Prior::Gaussian { scale: 1.0 }, lambda, grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divergence_is_symmetric_nonnegative_and_vanishes_on_diagonal(fam in family(), z in -20.0f64..20.0, w in -20.0f64..20.0) {
        let a = d_psi(fam, z, w).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert_eq!(a, d_psi(fam, w, z).unwrap());
        prop_assert_eq!(d_psi(fam, z, z).unwrap(), 0.0);
    }

    #[test]
    fn truncation_is_an_idempotent_clamp(z in -1e6f64..1e6, b in 1e-3f64..100.0) {
        let t = truncate(z, b).unwrap();
        prop_assert!(t.abs() <= b);
        prop_assert_eq!(truncate(t, b).unwrap(), t);
        if z.abs() <= b {
            prop_assert_eq!(t, z);
        }
    }

    #[test]
    fn bernoulli_likelihood_normalizes(x in prop::collection::vec(-3.0f64..3.0, 2), th in prop::collection::vec(-3.0f64..3.0, 2)) {
        let p0 = (-negloglik(GlmFamily::Logistic, &x, 0.0, &th).unwrap()).exp();
        let p1 = (-negloglik(GlmFamily::Logistic, &x, 1.0, &th).unwrap()).exp();
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn telescoped_regret_matches_replay(fam in family(), rs in rounds(1, 25), bar in -2.0f64..2.0, lambda in 0.2f64..1.5) {
        let log = build(fam, 1, &rs);
        let prior = gaussian_prior(fam, 1, lambda);
        let a = telescoped_regret(&prior, &log, &[bar]).unwrap();
        let (b, post) = replay_regret(&prior, &log, &[bar]).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{} vs {}", a, b);
        prop_assert_eq!(post.rounds(), log.len());
    }

    #[test]
    fn unit_shift_is_the_plain_mixture_loss(fam in family(), rs in rounds(1, 10), x in -1.5f64..1.5, star in -1.0f64..1.0, bit in any::<bool>()) {
        let prior = gaussian_prior(fam, 1, 1.0);
        let mut post = prior.clone();
        for (xi, yi) in build(fam, 1, &rs).iter() {
            post.update_in_place(xi, yi).unwrap();
        }
        let y = match fam {
            GlmFamily::Gaussian => star + 0.5,
            GlmFamily::Logistic => f64::from(u8::from(bit)),
        };
        let plain = mix_loss(&post, &[x], y).unwrap();
        let shifted = shifted_mix_loss(&post, &[x], y, &[star], 1.0).unwrap();
        prop_assert!((plain - shifted).abs() <= 1e-10 * (1.0 + plain.abs()));
    }

    #[test]
    fn ellipsoid_quadratic_form_matches_definition(rs in rounds(2, 20), th in prop::collection::vec(-3.0f64..3.0, 2)) {
        let log = build(GlmFamily::Gaussian, 2, &rs);
        let prior = gaussian_prior(GlmFamily::Gaussian, 2, 0.5);
        let (labels, _) = ewa_pseudo_labels(&prior, &log, 2.0).unwrap();
        prop_assert!(labels.iter().all(|l| l.abs() <= 2.0));
        let set = pseudo_label_ellipsoid(&log, &labels, 1.0, RegretTerm::oracle(1.0), 0.1).unwrap();
        let q = set.quadratic_form(&th).unwrap();
        let s = set.definitional_sum(&th).unwrap();
        prop_assert!((q - s).abs() <= 1e-9 * (1.0 + s.abs()));
    }

    #[test]
    fn sets_contain_their_anchor(fam in family(), rs in rounds_from(2, 1, 30), delta in 0.01f64..0.9) {
        let log = build(fam, 2, &rs);
        let analytic: ConfidenceSet = analytic_adaptive_set(&log, fam, 1.0, delta).unwrap().into();
        let anchor = analytic.anchor();
        prop_assert!(analytic.contains(anchor.as_slice()).unwrap());
        let trans: ConfidenceSet = transductive_set(&log, fam, 1.0, delta).unwrap().into();
        let anchor = trans.anchor();
        prop_assert!(trans.contains(anchor.as_slice()).unwrap());
    }

    #[test]
    fn constrained_solution_is_feasible(fam in family(), rs in rounds_from(2, 1, 30), b in 0.1f64..2.0) {
        let log = build(fam, 2, &rs);
        let sol = constrained_mle(&log, fam, b).unwrap().solution;
        for x in log.covariates() {
            let z = sol[0] * x[0] + sol[1] * x[1];
            prop_assert!(z.abs() <= b * (1.0 + 1e-9));
        }
    }

    #[test]
    fn information_gain_below_logdet_bound(fam in family(), rs in rounds(1, 30), gamma in 0.2f64..3.0, lambda in 0.2f64..1.5) {
        let log = build(fam, 1, &rs);
        let exact = info_gain_exact(&log, fam, gamma, lambda).unwrap();
        let bound = info_gain_bound(log.gram(), fam.smoothness(), gamma, lambda).unwrap();
        prop_assert!(exact >= -1e-10);
        prop_assert!(exact <= bound + 1e-8, "{} > {}", exact, bound);
    }

    #[test]
    fn ridge_gradient_vanishes(fam in family(), rs in rounds(2, 30), gamma in 0.3f64..3.0) {
        let log = build(fam, 2, &rs);
        let r = ridge_mle(&log, fam, gamma, 1.0).unwrap();
        prop_assert!(r.converged);
        let scale = 1.0 + log.len() as f64;
        prop_assert!(r.gradient_norm <= 1e-8 * scale);
    }

    #[test]
    fn gram_is_sum_of_outer_products(rs in rounds(3, 30)) {
        let log = build(GlmFamily::Gaussian, 3, &rs);
        let mut g = DMatrix::zeros(3, 3);
        for (x, _, _) in &rs {
            for i in 0..3 {
                for j in 0..3 {
                    g[(i, j)] += x[i] * x[j];
                }
            }
        }
        prop_assert!((log.gram() - g).abs().max() <= 1e-12 * (1.0 + rs.len() as f64));
    }
}
