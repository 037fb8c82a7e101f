use proptest::prelude::*;

use zeromat_lab::harness::{
    write_curve, write_reports, LockstateCurve, LockstatePoint, ReportFormat,
};
use zeromat_lab::ingest::{perturb_distribution, split, SplitSpec, ZipfSpec};
use zeromat_lab::metrics::{fit_zipf_exponent, mae, matthew_degree, EvalReport};
use zeromat_lab::zeromat::{init_factors, sgd_step};
use zeromat_lab::{global_max_dot, predict_rating, Dataset, Model, RatingTriple, TrainConfig};

fn positive_model() -> impl Strategy<Value = Model> {
    (1usize..6, 1usize..6, 1usize..4).prop_flat_map(|(n, m, k)| {
        (
            prop::collection::vec(0.01f64..2.0, n * k),
            prop::collection::vec(0.01f64..2.0, m * k),
        )
            .prop_map(move |(u, v)| Model::from_flat(n, m, k, u, v).unwrap())
    })
}

fn permuted(model: &Model, user_order: &[usize], item_order: &[usize]) -> Model {
    let u: Vec<f64> = user_order
        .iter()
        .flat_map(|&i| model.user(i).to_vec())
        .collect();
    let v: Vec<f64> = item_order
        .iter()
        .flat_map(|&j| model.item(j).to_vec())
        .collect();
    Model::from_flat(model.num_users(), model.num_items(), model.k(), u, v).unwrap()
}

proptest! {
    #[test]
    fn max_dot_prediction_hits_r_max_and_stays_positive(model in positive_model(), r_max in 1.0f64..10.0) {
        let max = global_max_dot(&model).unwrap();
        let mut best = f64::NEG_INFINITY;
        for i in 0..model.num_users() {
            for j in 0..model.num_items() {
                let r = predict_rating(&model, i, j, r_max, max).unwrap();
                prop_assert!(r > 0.0 && r <= r_max);
                best = best.max(r);
            }
        }
        prop_assert_eq!(best, r_max);
    }

    #[test]
    fn max_dot_ignores_row_order(model in positive_model(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut users: Vec<usize> = (0..model.num_users()).collect();
        let mut items: Vec<usize> = (0..model.num_items()).collect();
        users.shuffle(&mut rng);
        items.shuffle(&mut rng);
        prop_assert_eq!(
            global_max_dot(&permuted(&model, &users, &items)).unwrap(),
            global_max_dot(&model).unwrap()
        );
    }

    #[test]
    fn predictions_ignore_factor_scaling(model in positive_model(), c in 0.1f64..10.0, d in 0.1f64..10.0) {
        let scaled = model.scaled(c, d);
        let (m0, m1) = (global_max_dot(&model).unwrap(), global_max_dot(&scaled).unwrap());
        for i in 0..model.num_users() {
            for j in 0..model.num_items() {
                let a = predict_rating(&model, i, j, 5.0, m0).unwrap();
                let b = predict_rating(&scaled, i, j, 5.0, m1).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * 5.0);
            }
        }
    }

    #[test]
    fn sgd_step_keeps_rows_above_floor(
        model in positive_model(),
        eta in 0.001f64..2.0,
        pick in any::<(usize, usize)>(),
    ) {
        let eps = 1e-6;
        let (i, j) = (pick.0 % model.num_users(), pick.1 % model.num_items());
        let mut m = model.clone();
        if sgd_step(&mut m, i, j, eta, eps).is_ok() {
            prop_assert!(m.user(i).iter().chain(m.item(j)).all(|&x| x >= eps));
        }
    }

    #[test]
    fn stationary_point_is_fixed(eta in 0.0001f64..1.0) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = Model::from_flat(1, 1, 1, vec![s], vec![s]).unwrap();
        sgd_step(&mut m, 0, 0, eta, 1e-6).unwrap();
        prop_assert!((m.user(0)[0] - s).abs() <= 1e-12);
        prop_assert!((m.item(0)[0] - s).abs() <= 1e-12);
    }

    #[test]
    fn initialization_is_positive(n in 1usize..10, m in 1usize..10, k in 1usize..6, seed in any::<u64>()) {
        let cfg = TrainConfig::<f64> { k, seed, ..Default::default() };
        let model = init_factors(n, m, &cfg).unwrap();
        prop_assert!(model.min_entry() >= cfg.epsilon);
        for i in 0..n {
            for j in 0..m {
                prop_assert!(model.dot(i, j).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn perturbed_weights_are_distributions(s in 0.1f64..3.0, n in 1usize..300, lambda in 0.0f64..=1.0) {
        let spec = perturb_distribution(&ZipfSpec::new(s, 1, n, 1, 5.0), lambda).unwrap();
        let w = spec.weights();
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn skew_shrinks_as_mix_grows(s in 0.1f64..3.0, n in 2usize..200, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let base = ZipfSpec::new(s, 1, n, 1, 5.0);
        let skew = |l: f64| {
            let w = perturb_distribution(&base, l).unwrap().weights();
            let max = w.iter().copied().fold(f64::MIN, f64::max);
            let min = w.iter().copied().fold(f64::MAX, f64::min);
            max / min
        };
        prop_assert!(skew(hi) <= skew(lo) * (1.0 + 1e-12));
    }

    #[test]
    fn split_partitions_triples(len in 1usize..200, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let triples = (0..len).map(|x| RatingTriple::new(x / 20, x % 20, (x % 6) as f64)).collect();
        let data = Dataset::new(len.div_ceil(20), 20, 5.0, triples).unwrap();
        let (train, test) = split(&data, &SplitSpec::new(frac, seed).unwrap()).unwrap();
        prop_assert_eq!(train.len() + test.len(), len);
        prop_assert_eq!(train.len(), (frac * len as f64 - 1e-9).ceil() as usize);
        let mut all: Vec<_> = train.pairs().into_iter().chain(test.pairs()).collect();
        all.sort();
        let mut expected = data.pairs();
        expected.sort();
        prop_assert_eq!(all, expected);
    }

    #[test]
    fn mae_symmetric_and_translation_invariant(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..100),
        shift in -5.0f64..5.0,
    ) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = mae(&p, &t).unwrap();
        prop_assert_eq!(base, mae(&t, &p).unwrap());
        let ps: Vec<f64> = p.iter().map(|x| x + shift).collect();
        let ts: Vec<f64> = t.iter().map(|x| x + shift).collect();
        prop_assert!((mae(&ps, &ts).unwrap() - base).abs() <= 1e-9);
    }

    #[test]
    fn gini_scale_and_permutation_invariant(
        mut x in prop::collection::vec(0.0f64..100.0, 1..80),
        c in 0.01f64..100.0,
    ) {
        x.push(1.0);
        let g = matthew_degree(&x).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        prop_assert!((matthew_degree(&scaled).unwrap() - g).abs() <= 1e-12);
        x.reverse();
        prop_assert!((matthew_degree(&x).unwrap() - g).abs() <= 1e-12);
    }

    #[test]
    fn zipf_fit_ignores_scale(
        f in prop::collection::vec(0.01f64..100.0, 2..60),
        c in 0.01f64..100.0,
    ) {
        let scaled: Vec<f64> = f.iter().map(|v| v * c).collect();
        let a = fit_zipf_exponent(&f).unwrap();
        let b = fit_zipf_exponent(&scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn report_json_round_trips(
        mae_v in 0.0f64..5.0,
        gini in 0.0f64..1.0,
        slope in prop::option::of(-5.0f64..0.0),
        seed in any::<u64>(),
        eta in 0.0f64..1.0,
    ) {
        let mut config = std::collections::BTreeMap::new();
        config.insert("source".to_string(), "zipf".to_string());
        let reports = vec![EvalReport {
            method: "zeromat".into(),
            mae: mae_v,
            matthew_degree: gini,
            zipf_slope: slope,
            seed,
            k: 10,
            eta,
            iterations: 10_000,
            config,
        }];
        let mut buf = Vec::new();
        write_reports(&reports, ReportFormat::Json, &mut buf).unwrap();
        let back: Vec<EvalReport> = serde_json::from_slice(&buf).unwrap();
        prop_assert_eq!(back, reports);
    }

    #[test]
    fn curve_json_round_trips(values in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0, 0.0f64..5.0), 1..6)) {
        let n = values.len();
        let curve = LockstateCurve {
            points: values
                .into_iter()
                .enumerate()
                .map(|(i, (a, b, c))| LockstatePoint {
                    lambda: i as f64 / n as f64,
                    zeromat_mae: a,
                    pmf_mae: b,
                    random_mae: c,
                })
                .collect(),
            replicates: 2,
            seeds: vec![1, 2],
        };
        let mut buf = Vec::new();
        write_curve(&curve, ReportFormat::Json, &mut buf).unwrap();
        let back: LockstateCurve = serde_json::from_slice(&buf).unwrap();
        prop_assert_eq!(back, curve);
    }
}
