use proptest::prelude::*;
use snbcert_core::channels::{depolarizing, factor_through_k, random_channel_any_rank, random_povm, KrausChannel};
use snbcert_core::circuit::{circuit_povm, prep_gates, run_circuit};
use snbcert_core::decomposition::{decompose_witness, game_inputs_from_decomposition, qutrit_basis};
use snbcert_core::game::{
    adversarial_payoff, certification_game, certify, correlation, exact_payoff, sample_game, witness_decomposition,
    MeasurementModel, Mode, OutcomeTable, Verdict,
};
use snbcert_core::linalg::product_trace;
use snbcert_core::random::seeded;
use snbcert_core::witnesses::{optimal_sn_witness, witness_value};
use snbcert_core::{ComplexMatrix, GameSpec, QuantumMap, C64};

fn bell_game(k: usize) -> GameSpec {
    certification_game(3, k, MeasurementModel::BellProjector).unwrap()
}

fn reference_unitaries() -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = |v: f64| C64::new(v, 0.0);
    let i = |v: f64| C64::new(0.0, v);
    let m = |e: [C64; 9]| ComplexMatrix::from_vec(3, 3, e.to_vec()).unwrap();
    let (o, z) = (r(1.0), r(0.0));
    vec![
        ComplexMatrix::identity(3),
        m([z, o, z, o, z, z, z, z, o]),
        m([z, z, o, z, o, z, o, z, z]),
        m([r(s), r(s), z, r(s), r(-s), z, z, z, o]),
        m([r(s), z, r(s), z, o, z, r(s), z, r(-s)]),
        m([z, o, z, r(s), z, r(s), r(s), z, r(-s)]),
        m([r(s), r(s), z, i(-s), i(s), z, z, z, o]),
        m([r(s), z, r(s), z, o, z, i(-s), z, i(s)]),
        m([z, o, z, r(s), z, r(s), i(-s), z, i(s)]),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn payoff_equals_witness_value(seed in any::<u64>(), k in 1usize..=2) {
        let ch = random_channel_any_rank(&mut seeded(seed), 3, 3);
        let w = optimal_sn_witness(3, k).unwrap();
        let direct = witness_value(&w, &ch.choi()).unwrap();
        prop_assert!((exact_payoff(&bell_game(k), &ch).unwrap() - direct).abs() <= 1e-9);
    }

    #[test]
    fn decomposition_preserves_witness_values(seed in any::<u64>()) {
        let j = random_channel_any_rank(&mut seeded(seed), 3, 3).choi();
        let w = optimal_sn_witness(3, 2).unwrap();
        let pd = witness_decomposition(3, 2).unwrap();
        let states = pd.basis_a.states();
        let mut via_gamma = 0.0;
        for x in 0..9 {
            for y in 0..9 {
                via_gamma += pd.gamma[(x, y)] * product_trace(&states[x], &states[y], j.matrix()).re;
            }
        }
        prop_assert!((via_gamma - witness_value(&w, &j).unwrap()).abs() <= 1e-9);
    }

    /// Any two-outcome measurement, paired with a channel that factors
    /// through a qubit, yields a non-negative payoff.
    #[test]
    fn measurement_device_independence(seed in any::<u64>(), povm_seed in any::<u64>()) {
        let ch = factor_through_k(3, 2, seed).unwrap();
        let povm = random_povm(9, 2, povm_seed).unwrap();
        prop_assert!(adversarial_payoff(&bell_game(2), &ch, &povm).unwrap() >= -1e-9);
    }

    #[test]
    fn certify_never_flags_factor_through_channels(seed in any::<u64>(), k in 1usize..=2) {
        let ch = factor_through_k(3, k, seed).unwrap();
        prop_assert_eq!(certify(&ch, k, 3, Mode::Exact).unwrap().verdict, Verdict::Inconclusive);
        let sampled = certify(&ch, k, 3, Mode::Sampled { shots: 20_000, seed }).unwrap();
        prop_assert_eq!(sampled.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn circuit_matches_abstract_povm(seed in any::<u64>()) {
        let ch = random_channel_any_rank(&mut seeded(seed), 3, 3);
        let pd = witness_decomposition(3, 2).unwrap();
        let (psi, phi) = game_inputs_from_decomposition(&pd);
        let (ga, gb) = (prep_gates(&psi).unwrap(), prep_gates(&phi).unwrap());
        for (x, sx) in psi.iter().enumerate() {
            for (y, sy) in phi.iter().enumerate() {
                let circ = run_circuit(&ch, x, y, &ga, &gb).unwrap();
                let abst = correlation(&ch, sx, sy, &MeasurementModel::Circuit).unwrap();
                for (o, p) in circ.iter().zip(&abst) {
                    prop_assert!((o.probability - p).abs() <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn circuit_statistics_at_origin_reproduce_payoff() {
    let pd = witness_decomposition(3, 2).unwrap();
    let (psi, phi) = game_inputs_from_decomposition(&pd);
    let (ga, gb) = (prep_gates(&psi).unwrap(), prep_gates(&phi).unwrap());
    for seed in 0..10 {
        let ch = random_channel_any_rank(&mut seeded(seed), 3, 3);
        let mut payoff = 0.0;
        for x in 0..9 {
            for y in 0..9 {
                let p00 = run_circuit(&ch, x, y, &ga, &gb).unwrap()[0].probability;
                let (prior, reward) = (1.0 / 81.0, 81.0 * pd.gamma[(x, y)]);
                payoff += prior * reward * p00;
            }
        }
        let exact = exact_payoff(&bell_game(2), &ch).unwrap();
        assert!((payoff - exact).abs() <= 1e-9, "{payoff} vs {exact}");
        let circuit_game = certification_game(3, 2, MeasurementModel::Circuit).unwrap();
        assert!((exact_payoff(&circuit_game, &ch).unwrap() - exact).abs() <= 1e-9);
    }
}

#[test]
fn reference_preparation_unitaries_prepare_transposed_states() {
    let basis = qutrit_basis();
    let zero = ComplexMatrix::basis_ket(3, 0);
    for (u, xi) in reference_unitaries().iter().zip(basis.states()) {
        assert!(u.is_unitary(1e-10));
        let prepared = (u * &zero).projector();
        assert!(prepared.max_abs_diff(&xi.transpose()) <= 1e-12);
    }
    let generated = prep_gates(&basis.states().iter().map(ComplexMatrix::transpose).collect::<Vec<_>>()).unwrap();
    for (g, u) in generated.iter().zip(reference_unitaries()) {
        let a = g.matrix().col(0);
        let b = u.col(0);
        assert!((a.inner(&b).norm() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn circuit_effect_at_origin_is_bell_projector() {
    let p = snbcert_core::channels::max_entangled_projector(3).unwrap();
    assert!(circuit_povm(3).unwrap()[0].max_abs_diff(&p) <= 1e-12);
}

#[test]
fn sampled_estimate_is_unbiased() {
    let spec = bell_game(2);
    let ch = depolarizing(3, 0.3).unwrap();
    let exact = exact_payoff(&spec, &ch).unwrap();
    let estimates: Vec<f64> = (0..100)
        .map(|seed| sample_game(&spec, &ch, 10_000, seed).unwrap().estimate.unwrap())
        .collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se_mean = (var / n).sqrt();
    assert!((mean - exact).abs() <= 5.0 * se_mean, "{mean} vs {exact} (se {se_mean})");
}

#[test]
fn outcome_table_probabilities_are_distributions() {
    let spec = certification_game(3, 2, MeasurementModel::Circuit).unwrap();
    let table = OutcomeTable::new(&spec, &KrausChannel::identity(3)).unwrap();
    for x in 0..9 {
        for y in 0..9 {
            let p = table.probabilities(x, y);
            assert!(p.iter().all(|&v| v >= -1e-12));
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn w1_decomposition_reproduces_its_value() {
    let basis = qutrit_basis();
    let w1 = optimal_sn_witness(3, 1).unwrap();
    let pd = decompose_witness(&w1, &basis, &basis).unwrap();
    assert!(pd.residual <= 1e-9);
    let p = snbcert_core::channels::max_entangled_projector(3).unwrap();
    let value = pd.reconstruct().trace_product(&p).re;
    assert!((value + 2.0).abs() <= 1e-9);
}
