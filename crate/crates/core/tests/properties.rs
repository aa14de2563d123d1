mod common;

use proptest::prelude::*;
use proptest::strategy::Strategy as _;
use specgame::agents::{
    builder_step, builder_total_loss, fairness_loss, privacy_loss, regulator_step, BuilderConfig, LossVariant,
    RegulatorConfig, RegulatorKind,
};
use specgame::calibration::{estimate_lambda, knee_point, scalarize, LambdaTarget, LevelSetBinning, ScalarizationWeights};
use specgame::config::ExperimentConfig;
use specgame::engine::{mover_at, run_game, run_phases, Leadership, Mover, RegulatorSlots};
use specgame::frontier::{
    estimate_gradient, linspace, pareto_filter, AchievedObjectives, EvalPoint, FrontierModel, FrontierSettings,
    InterpolationMode, ObjectiveSpec, ResultSet, Strategy, StrategyBox,
};
use specgame::metrics::{demographic_disparity, disparate_impact_gap, DisparateImpactInput, PredictionRecord};
use specgame::oracle::{AnalyticSurfaceSpec, Oracle};

fn obj(acc: f64, cov: f64, d: f64, e: f64) -> AchievedObjectives {
    AchievedObjectives {
        accuracy: acc,
        coverage: cov,
        disparity_achieved: d,
        privacy_achieved: e,
    }
}

/// Objective values on a coarse lattice so that ties and duplicates occur.
fn objectives() -> impl proptest::strategy::Strategy<Value = AchievedObjectives> {
    (0u8..6, 0u8..6, 0u8..6, 0u8..6)
        .prop_map(|(a, c, d, e)| obj(a as f64 / 5.0, c as f64 / 5.0, d as f64 / 5.0, e as f64 * 2.0))
}

fn result_set(points: &[AchievedObjectives]) -> ResultSet {
    points
        .iter()
        .enumerate()
        .map(|(i, &o)| EvalPoint::seed(Strategy::new(0.01 + 0.001 * i as f64, 1.0 + 0.01 * i as f64), o))
        .collect()
}

fn knn() -> FrontierSettings {
    FrontierSettings {
        mode: InterpolationMode::KnnIdw,
        ..FrontierSettings::default()
    }
}

fn strategies(model: &FrontierModel) -> Vec<Strategy> {
    model.efficient_points().iter().map(|p| p.strategy).collect()
}

/// Grid on the default box whose builder error falls and whose achieved
/// disparity and privacy rise along both axes, so nothing is dominated.
fn monotone_grid(n: usize, incs: &[f64]) -> ResultSet {
    let b = StrategyBox::default();
    let rise: Vec<f64> = (0..n)
        .scan(0.0, |acc, i| {
            *acc += incs[i % incs.len()];
            Some(*acc * 0.4 / n as f64)
        })
        .collect();
    let mut set = ResultSet::new();
    for (i, g) in linspace(b.gamma[0], b.gamma[1], n).into_iter().enumerate() {
        for (j, e) in linspace(b.epsilon[0], b.epsilon[1], n).into_iter().enumerate() {
            set.add(EvalPoint::seed(Strategy::new(g, e), obj(0.1 + rise[i] + rise[j], 0.5, g, e)));
        }
    }
    set
}

fn analytic(noise_sd: f64, seed: u64) -> AnalyticSurfaceSpec {
    AnalyticSurfaceSpec {
        base_acc: 0.45,
        priv_gain: 0.25,
        priv_scale: 4.0,
        fair_gain: 0.3,
        cov_base: 0.5,
        cov_gain: 0.5,
        disparity_cap_base: 0.2,
        disparity_cap_gain: 0.5,
        noise_sd,
        seed,
    }
}

fn builder() -> BuilderConfig {
    BuilderConfig {
        lambda_fair: 0.3,
        lambda_priv: 0.01,
        lambda_b: 0.7,
        step_size: 10.0,
        decay: 0.67,
        loss_variant: LossVariant::Fairpate,
    }
}

fn regulator(kind: RegulatorKind, target: f64, c: f64) -> RegulatorConfig {
    RegulatorConfig {
        kind,
        target,
        penalty_scalar: c,
        step_size: 1.0,
        decay: 0.67,
    }
}

fn analytic_frontier() -> FrontierModel {
    let b = StrategyBox::default();
    let set = Oracle::Analytic(analytic(0.0, 0))
        .sample_grid(b.gamma, b.epsilon, 11, 11)
        .unwrap();
    pareto_filter(&set, &FrontierSettings::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pareto_matches_brute_force(points in prop::collection::vec(objectives(), 1..120)) {
        let set = result_set(&points);
        let model = pareto_filter(&set, &knn()).unwrap();
        let spec = ObjectiveSpec::default();
        let vectors: Vec<[f64; 3]> = set.iter().map(|p| spec.vector(&p.objectives)).collect();
        let expected: Vec<Strategy> = common::brute_force_front(&vectors)
            .into_iter()
            .map(|i| set.points()[i].strategy)
            .collect();
        prop_assert_eq!(strategies(&model), expected);
    }

    #[test]
    fn pareto_is_idempotent(points in prop::collection::vec(objectives(), 1..120)) {
        let once = pareto_filter(&result_set(&points), &knn()).unwrap();
        let again: ResultSet = once.efficient_points().iter().copied().collect();
        let twice = pareto_filter(&again, &knn()).unwrap();
        prop_assert_eq!(strategies(&once), strategies(&twice));
    }

    #[test]
    fn removed_points_are_dominated(points in prop::collection::vec(objectives(), 1..120)) {
        let set = result_set(&points);
        let model = pareto_filter(&set, &knn()).unwrap();
        let spec = ObjectiveSpec::default();
        let kept = strategies(&model);
        for p in set.iter().filter(|p| !kept.contains(&p.strategy)) {
            let v = spec.vector(&p.objectives);
            let covered = model.efficient_points().iter().any(|q| {
                let w = spec.vector(&q.objectives);
                w.iter().zip(&v).all(|(a, b)| a <= b)
            });
            prop_assert!(covered, "{:?} removed without a dominating or equal kept point", p.strategy);
        }
    }

    #[test]
    fn appending_matches_full_refilter(
        points in prop::collection::vec(objectives(), 1..60),
        extra in prop::collection::vec(objectives(), 1..20),
    ) {
        let mut set = result_set(&points);
        let mut model = pareto_filter(&set, &knn()).unwrap();
        for (k, &o) in extra.iter().enumerate() {
            let p = EvalPoint { round_tag: k as i64, ..EvalPoint::seed(Strategy::new(0.5 + 0.001 * k as f64, 9.0), o) };
            set.add(p);
            model = model.with_appended(p).unwrap();
            let full = pareto_filter(&set, &knn()).unwrap();
            let mut a = strategies(&model);
            let mut b = strategies(&full);
            let key = |s: &Strategy| (s.fairness_param.to_bits(), s.privacy_param.to_bits());
            a.sort_by_key(key);
            b.sort_by_key(key);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn interpolation_hits_samples_and_stays_in_range(
        incs in prop::collection::vec(0.1f64..1.0, 3..8),
        q in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let set = monotone_grid(6, &incs);
        let accs: Vec<f64> = set.iter().map(|p| p.objectives.accuracy).collect();
        let (lo, hi) = accs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &a| (l.min(a), h.max(a)));
        for mode in [InterpolationMode::GridBilinear, InterpolationMode::KnnIdw] {
            let settings = FrontierSettings { mode, ..FrontierSettings::default() };
            let model = pareto_filter(&set, &settings).unwrap();
            prop_assert_eq!(model.efficient_points().len(), set.len());
            for p in set.iter() {
                let got = model.interpolate(p.strategy).unwrap();
                prop_assert!((got.accuracy - p.objectives.accuracy).abs() < 1e-12);
            }
            let s = Strategy::new(0.01 + 0.99 * q.0, 1.0 + 9.0 * q.1);
            let a = model.interpolate(s).unwrap().accuracy;
            prop_assert!(a >= lo - 1e-12 && a <= hi + 1e-12, "{} outside [{}, {}]", a, lo, hi);
        }
    }

    #[test]
    fn affine_gradients_are_exact(
        a in 0.0f64..0.3, b in 0.0f64..0.03,
        q in (0.1f64..0.9, 0.1f64..0.9),
    ) {
        let bx = StrategyBox::default();
        let mut set = ResultSet::new();
        for g in linspace(bx.gamma[0], bx.gamma[1], 11) {
            for e in linspace(bx.epsilon[0], bx.epsilon[1], 11) {
                set.add(EvalPoint::seed(Strategy::new(g, e), obj(0.1 + a * g + b * e, 0.1 + 0.2 * g + 0.02 * e, g, e)));
            }
        }
        let model = pareto_filter(&set, &FrontierSettings::default()).unwrap();
        let s = Strategy::new(0.01 + 0.99 * q.0, 1.0 + 9.0 * q.1);
        let grad = estimate_gradient(&model, s, |o| o.accuracy, 1e-3).unwrap();
        for (got, want) in grad.value.iter().zip([a, b]) {
            prop_assert!((got - want).abs() <= 1e-6 * want.abs().max(1e-9) + 1e-12, "{} vs {}", got, want);
        }
    }

    #[test]
    fn oracle_is_deterministic_and_monotone(
        seed in any::<u64>(),
        g in 0.01f64..1.0, e in 1.0f64..10.0,
        dg in 0.0f64..0.5, de in 0.0f64..5.0,
    ) {
        let noisy = Oracle::Analytic(analytic(0.02, seed));
        let s = Strategy::new(g, e);
        prop_assert_eq!(noisy.evaluate(s).unwrap(), noisy.evaluate(s).unwrap());

        let clean = Oracle::Analytic(analytic(0.0, seed));
        let base = clean.evaluate(s).unwrap();
        prop_assert_eq!(base.privacy_achieved, e);
        prop_assert!(base.disparity_achieved <= g);
        let up_g = clean.evaluate(Strategy::new(g + dg, e)).unwrap();
        let up_e = clean.evaluate(Strategy::new(g, e + de)).unwrap();
        prop_assert!(up_g.accuracy >= base.accuracy);
        prop_assert!(up_e.accuracy >= base.accuracy);
    }

    #[test]
    fn hinges_vanish_exactly_when_compliant(achieved in 0.0f64..10.0, target in 0.0f64..10.0) {
        for loss in [fairness_loss(achieved, target), privacy_loss(achieved, target)] {
            prop_assert!(loss >= 0.0);
            prop_assert_eq!(loss == 0.0, achieved <= target);
        }
    }

    #[test]
    fn total_loss_monotone_in_active_penalties(
        d in 0.0f64..1.0, e in 1.0f64..10.0,
        gamma in 0.0f64..1.0, eps in 1.0f64..10.0,
        cf in 0.0f64..5.0, cp in 0.0f64..5.0, bump in 0.01f64..2.0,
    ) {
        let o = obj(0.8, 0.7, d, e);
        let b = builder();
        let fair = regulator(RegulatorKind::Fairness, gamma, cf);
        let privacy = regulator(RegulatorKind::Privacy, eps, cp);
        let base = builder_total_loss(&o, &b, &fair, &privacy);
        let more_cf = builder_total_loss(&o, &b, &RegulatorConfig { penalty_scalar: cf + bump, ..fair }, &privacy);
        let more_cp = builder_total_loss(&o, &b, &fair, &RegulatorConfig { penalty_scalar: cp + bump, ..privacy });
        let more_lf = builder_total_loss(&o, &BuilderConfig { lambda_fair: b.lambda_fair + bump, ..b }, &fair, &privacy);
        let more_lp = builder_total_loss(&o, &BuilderConfig { lambda_priv: b.lambda_priv + bump, ..b }, &fair, &privacy);
        let (fair_active, priv_active) = (d > gamma, e > eps);
        for (v, active) in [(more_cf, fair_active), (more_lf, fair_active), (more_cp, priv_active), (more_lp, priv_active)] {
            if active {
                prop_assert!(v >= base);
            } else {
                prop_assert_eq!(v, base);
            }
        }
    }

    #[test]
    fn argmin_survives_positive_scaling(
        points in prop::collection::vec(((0.0f64..1.0, 0.0f64..1.0), (0.0f64..1.0, 1.0f64..10.0)), 1..40),
        k in 0.01f64..100.0,
    ) {
        let b = builder();
        let fair = regulator(RegulatorKind::Fairness, 0.2, 3.0);
        let privacy = regulator(RegulatorKind::Privacy, 4.0, 3.0);
        let losses: Vec<f64> = points.iter().map(|&((a, c), (d, e))| builder_total_loss(&obj(a, c, d, e), &b, &fair, &privacy)).collect();
        let argmin = |f: &dyn Fn(f64) -> f64| {
            (0..losses.len()).min_by(|&i, &j| f(losses[i]).total_cmp(&f(losses[j])).then(i.cmp(&j))).unwrap()
        };
        prop_assert_eq!(argmin(&|l| l), argmin(&|l| k * l));
    }

    #[test]
    fn steps_stay_in_box(
        g in -0.5f64..1.5, e in -2.0f64..15.0,
        gamma in 0.0f64..0.8, eps in 1.0f64..9.0,
        cf in 0.0f64..5.0, cp in 0.0f64..5.0, eta in 0.0f64..100.0,
    ) {
        let frontier = analytic_frontier();
        let bx = frontier.settings().bounds;
        let s = Strategy::new(g, e);
        let fair = regulator(RegulatorKind::Fairness, gamma, cf);
        let privacy = regulator(RegulatorKind::Privacy, eps, cp);
        let next = builder_step(&frontier, s, &builder(), &fair, &privacy, eta, 1e-3).unwrap();
        prop_assert!(bx.contains(next));
        let start = bx.clamp(s);
        let f = regulator_step(&frontier, start, &fair, eta, 1e-3).unwrap();
        prop_assert!(bx.contains(f));
        prop_assert_eq!(f.privacy_param, start.privacy_param);
        let p = regulator_step(&frontier, start, &privacy, eta, 1e-3).unwrap();
        prop_assert!(bx.contains(p));
        prop_assert_eq!(p.fairness_param, start.fairness_param);
    }

    #[test]
    fn regulator_led_schedule(t in 1usize..1000) {
        for slots in [RegulatorSlots::FairnessFirst, RegulatorSlots::PrivacyFirst] {
            let m = mover_at(t, Leadership::RegulatorLed, slots);
            prop_assert_eq!(m == Mover::Builder, t % 3 == 1);
        }
    }

    #[test]
    fn lambda_estimate_ignores_order(seed in any::<u64>(), noise in 0.0f64..0.01) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let set = common::lambda_set(noise, seed);
        let mut shuffled: Vec<EvalPoint> = set.points().to_vec();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled: ResultSet = shuffled.into_iter().collect();
        let est = |r: &ResultSet, which| estimate_lambda(r, 1.5, &LevelSetBinning::default(), which, &ObjectiveSpec::default(), common::LAMBDA_TARGETS).unwrap();
        for which in [LambdaTarget::Priv, LambdaTarget::Fair] {
            prop_assert_eq!(est(&set, which), est(&shuffled, which));
        }
    }

    #[test]
    fn scalarize_ignores_weight_scale(
        w in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        k in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0, 8.0]),
        gamma in 0.0f64..1.0, eps in 1.0f64..10.0,
    ) {
        prop_assume!(w.0 + w.1 + w.2 > 0.0);
        let frontier = analytic_frontier();
        let target = Strategy::new(gamma, eps);
        let a = scalarize(&frontier, &ScalarizationWeights([w.0, w.1, w.2]), target).unwrap();
        let b = scalarize(&frontier, &ScalarizationWeights([k * w.0, k * w.1, k * w.2]), target).unwrap();
        prop_assert_eq!(a.strategy, b.strategy);
    }

    #[test]
    fn knee_is_affine_invariant(
        ys in prop::collection::vec(0.0f64..10.0, 3..12),
        ax in prop::sample::select(vec![0.5, 2.0, 4.0]), bx in -8.0f64..8.0,
        ay in prop::sample::select(vec![0.25, 2.0, 8.0]), by in -8.0f64..8.0,
    ) {
        let curve: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let moved: Vec<(f64, f64)> = curve.iter().map(|&(x, y)| (ax * x + bx, ay * y + by)).collect();
        let k0 = knee_point(&curve).unwrap();
        let k1 = knee_point(&moved).unwrap();
        prop_assert_eq!(k0.degenerate, k1.degenerate);
        if !k0.degenerate {
            prop_assert_eq!(ax * k0.x + bx, k1.x);
        }
    }

    #[test]
    fn disparity_entries_bounded_and_order_free(
        rows in prop::collection::vec((0usize..3, 0usize..4), 8..200),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut records: Vec<PredictionRecord> = (0..4).map(|z| PredictionRecord { predicted_class: z % 3, subgroup: z }).collect();
        records.extend(rows.iter().map(|&(k, z)| PredictionRecord { predicted_class: k, subgroup: z }));
        let report = demographic_disparity(&records, 3, 4).unwrap();
        prop_assert!(report.matrix.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        records.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(demographic_disparity(&records, 3, 4).unwrap(), report);
    }

    #[test]
    fn impact_gap_symmetric(a in (0.0f64..1.0, 0.0f64..1.0), b in (0.0f64..1.0, 0.0f64..1.0)) {
        let input = DisparateImpactInput {
            baseline: [("a".to_string(), a.0), ("b".to_string(), b.0)].into(),
            private: [("a".to_string(), a.1), ("b".to_string(), b.1)].into(),
        };
        let ab = disparate_impact_gap(&input, "a", "b").unwrap();
        prop_assert_eq!(ab, disparate_impact_gap(&input, "b", "a").unwrap());
        prop_assert_eq!(disparate_impact_gap(&input, "a", "a").unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn game_traces_stay_in_box_and_are_reproducible(
        gamma in 0.05f64..0.6, eps in 1.5f64..8.0,
        cf in 0.0f64..4.0, cp in 0.0f64..5.0,
        builder_led in any::<bool>(),
    ) {
        let mut cfg = ExperimentConfig::default().game_config().unwrap().with_penalties(cf, cp);
        if builder_led {
            cfg.leadership = Leadership::BuilderLed;
        }
        let target = Strategy::new(gamma, eps);
        let trace = run_game(&cfg, target).unwrap();
        prop_assert!(trace.records.iter().all(|r| cfg.bounds.contains(r.strategy)));
        if !builder_led {
            for r in trace.records.iter().skip(1) {
                prop_assert_eq!(r.mover == Mover::Builder, r.round % 3 == 1);
            }
        }
        let again = run_game(&cfg, target).unwrap();
        prop_assert_eq!(&again.records, &trace.records);
        prop_assert!(trace.converged);
    }

    #[test]
    fn phases_never_shrink_results(gamma in 0.05f64..0.6, eps in 1.5f64..8.0) {
        let mut cfg = ExperimentConfig::default().game_config().unwrap();
        cfg.phases = vec![[1.0, 1.0], [3.0, 3.0], [3.0, 4.5]];
        let traces = run_phases(&cfg, Strategy::new(gamma, eps)).unwrap();
        for w in traces.windows(2) {
            prop_assert!(w[1].results.len() >= w[0].results.len());
            for p in w[0].results.iter() {
                prop_assert!(w[1].results.iter().any(|q| q.strategy == p.strategy));
            }
        }
    }
}
