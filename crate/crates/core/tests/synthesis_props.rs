use proptest::prelude::*;
use qdfs_core::matrixkit::{is_negative_semidefinite, CMatrix, I};
use qdfs_core::passive_model::{check_realizability, realize, ChannelLabel, HamiltonianCoupling, PassiveSystem};
use qdfs_core::random;
use qdfs_core::synthesis::{
    closed_loop_matrices, complete_g3, controller_ac, hat_check, lemma1_spectral_split, lmi_block, lmi_feasible,
    synthesize_dfs, ControllerGains, ScatteringPair, SynthesisOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plant(r: &mut ChaCha8Rng, n: usize, n_y: usize, n_u: usize) -> PassiveSystem {
    let b1 = random::matrix(r, n, n_y);
    let b2 = random::matrix(r, n, n_u);
    let m = random::hermitian(r, n);
    realize(
        &HamiltonianCoupling::new(m, vec![(ChannelLabel::W, -&b1.adjoint()), (ChannelLabel::U, -&b2.adjoint())], 1e-9)
            .unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_splits(seed in any::<u64>(), n in 1usize..4, n_y in 1usize..3, n_u in 1usize..3) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let p = plant(&mut r, n, n_y, n_u);
        let size = n_y.max(n_u) + 1;
        let sw = ScatteringPair::new(random::unitary(&mut r, size), random::unitary(&mut r, size), n_y, n_u, 1e-9).unwrap();
        let g1 = random::matrix(&mut r, n, sw.n_y());
        let g2 = random::matrix(&mut r, n, sw.n_z());
        let a_c = controller_ac(&p, &sw, &g1, &g2).unwrap();
        let (hat, check) = hat_check(&p, &sw, &g1, &g2).unwrap();
        let k = ControllerGains { g1, g2, g3: CMatrix::zeros(n, n), a_c };
        let cl = closed_loop_matrices(&p, &k, &sw).unwrap();
        prop_assert!(lemma1_spectral_split(&cl, &hat, &check, 1e-7));
    }

    #[test]
    fn realizable_parts_close_realizably(seed in any::<u64>(), n in 1usize..4, nc in 1usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let p = plant(&mut r, n, 1, 1);
        let sw = ScatteringPair::observer(1, 1);
        let g1 = random::matrix(&mut r, nc, 1);
        let g2 = random::matrix(&mut r, nc, 1);
        let g3 = random::matrix(&mut r, nc, 1);
        let a_c = &random::hermitian(&mut r, nc).scale(-I) - &(&(&g1.gram() + &g2.gram()) + &g3.gram()).scale_re(0.5);
        let k = ControllerGains { g1, g2, g3, a_c };
        prop_assert!(k.realizability_residual() <= 1e-12);
        if nc == n {
            let cl = closed_loop_matrices(&p, &k, &sw).unwrap();
            prop_assert!(cl.realizability_residual() <= 1e-9);
            let sys = cl.as_passive_system().unwrap();
            prop_assert!(check_realizability(&sys, 1e-9).ok);
        }
    }

    #[test]
    fn lmi_forms_agree(seed in any::<u64>(), n in 1usize..5, shift in 0.0f64..6.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g1 = random::matrix(&mut r, n, 1);
        let g2 = random::matrix(&mut r, n, 2);
        let rm = random::hermitian(&mut r, n).add_diag(qdfs_core::matrixkit::c(-shift, 0.0));
        let v = lmi_feasible(&rm, &g1, &g2, 1e-9).unwrap();
        prop_assert_eq!(v.feasible, is_negative_semidefinite(&lmi_block(&rm, &g1, &g2), 1e-9).unwrap());
        if v.feasible {
            let g3 = complete_g3(&rm, &g1, &g2, 1e-9).unwrap();
            let k = ControllerGains { g1, g2, g3, a_c: rm.scale_re(0.5) };
            prop_assert!(k.realizability_residual() <= 1e-9);
        } else {
            prop_assert!(complete_g3(&rm, &g1, &g2, 1e-9).is_err());
        }
    }
}

#[test]
fn synthesis_is_deterministic_per_seed() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let k: f64 = r.gen_range(0.5..2.0);
    let ex = qdfs_core::presets::Example1 { kappa1: k, kappa2: k, m: 0.3 };
    let sw = ScatteringPair::observer(1, 1);
    let opts = SynthesisOptions { seed: 11, ..Default::default() };
    let a = synthesize_dfs(&ex.plant(), &sw, 1, &opts).unwrap();
    let b = synthesize_dfs(&ex.plant(), &sw, 1, &opts).unwrap();
    assert_eq!(a.gains, b.gains);
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.df_report.df_dimension, 1);
}
