use std::collections::BTreeMap;

use causal_audit::adjustment::Verdict;
use causal_audit::dataset::Dataset;
use causal_audit::estimator::{
    fallout_experiment, kfold_cv, metrics, metrics_with, ols_fit, scenario_effect, NrmseNorm,
};
use causal_audit::presets::{building_query_spec, building_scm, fallout_arms};
use causal_audit::scm::{sample, ScmSpec, ScmVariable};
use proptest::prelude::*;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn independent_xy(n: usize, seed: u64) -> Dataset {
    let root = |name: &str| ScmVariable {
        name: name.into(),
        parents: vec![],
        coefficients: vec![],
        intercept: 10.0,
        noise_std: 1.0,
    };
    sample(&ScmSpec { format_version: 1, variables: vec![root("x"), root("y")], ranges: BTreeMap::new() }, n, seed)
}

#[test]
fn smape_hand_example() {
    let m = metrics(&[100.0, 200.0], &[110.0, 190.0]).unwrap();
    let hand = 0.5 * (20.0 / 210.0 + 20.0 / 390.0);
    assert!((m.smape - hand).abs() < 1e-9);
    assert!((m.smape - 0.0733).abs() < 5e-5);
}

#[test]
fn independent_target_gives_null_fit() {
    let d = independent_xy(10_000, 3);
    let m = ols_fit(&d, &names(&["x"]), "y").unwrap();
    assert!(m.coefficients[0].abs() < 0.05);
    let cv = kfold_cv(&d, &names(&["x"]), "y", 5, 3).unwrap();
    assert!(cv.mean.r2 <= 0.05);
    assert_eq!(cv.per_fold.len(), 5);
}

#[test]
fn residuals_are_orthogonal_to_features() {
    let spec = building_scm();
    let d = sample(&spec, 5_000, 8);
    let features: Vec<String> = d.names().iter().filter(|n| *n != "EUIHeating").cloned().collect();
    let m = ols_fit(&d, &features, "EUIHeating").unwrap();
    let yhat = m.predict(&d).unwrap();
    let y = d.column("EUIHeating").unwrap();
    let n = d.row_count() as f64;
    for f in &features {
        let x = d.column(f).unwrap();
        let dot: f64 = x.iter().zip(y).zip(&yhat).map(|((a, b), c)| a * (b - c)).sum();
        assert!(dot.abs() / n < 1e-6, "{f}: {dot}");
    }
}

#[test]
fn cv_is_deterministic_per_seed() {
    let d = sample(&building_scm(), 1_000, 2);
    let f = names(&["InsulationStandard", "ConstructionArea"]);
    assert_eq!(kfold_cv(&d, &f, "EUIHeating", 5, 4).unwrap(), kfold_cv(&d, &f, "EUIHeating", 5, 4).unwrap());
}

#[test]
fn fallout_on_building_preset() {
    let spec = building_scm();
    let arms = fallout_arms().arms;
    let report = fallout_experiment(&spec, &building_query_spec(), &arms, 50_000, 7).unwrap();
    assert_eq!(report.true_ace, -1.0);
    let one = report.arm("Scenario I").unwrap();
    let two = report.arm("Scenario II").unwrap();
    let val = report.arm("Validation").unwrap();
    assert!((one.estimated_effect + 1.0).abs() < 0.05, "{}", one.estimated_effect);
    assert!((two.estimated_effect - 1.0).abs() < 0.05, "{}", two.estimated_effect);
    assert!((val.estimated_effect + 1.0).abs() < 0.05, "{}", val.estimated_effect);
    assert!((one.cv_r2 - two.cv_r2).abs() < 0.15);
    assert!(two.cv_r2 > 0.8);
    assert_eq!(
        [one.audit_verdict, two.audit_verdict, val.audit_verdict],
        [Verdict::Unbiased, Verdict::Biased, Verdict::Unbiased]
    );
    assert_eq!([one.sign_agreement, two.sign_agreement, val.sign_agreement], [true, false, true]);
    let table = report.render_table();
    assert!(table.contains("Scenario II") && table.contains("FLIP"));
}

#[test]
fn biased_verdict_tracks_estimation_error() {
    let spec = building_scm();
    let arms = fallout_arms().arms;
    let q = building_query_spec();
    for seed in 0..20 {
        let report = fallout_experiment(&spec, &q, &arms, 5_000, seed).unwrap();
        for arm in &report.arms {
            let off = !arm.sign_agreement || (arm.estimated_effect - report.true_ace).abs() > 5.0 * arm.std_error;
            assert_eq!(arm.audit_verdict == Verdict::Biased, off, "seed {seed} arm {}", arm.name);
        }
    }
}

#[test]
fn scenario_effect_on_fitted_model() {
    let d = sample(&building_scm(), 2_000, 1);
    let f = names(&["InsulationStandard", "ConstructionArea", "Area"]);
    let m = ols_fit(&d, &f, "EUIHeating").unwrap();
    let base: BTreeMap<String, f64> = f.iter().map(|n| (n.clone(), 0.5)).collect();
    let eff = scenario_effect(&m, &base, "InsulationStandard", 0.0, 3.0).unwrap();
    assert!((eff - 3.0 * m.coefficients[0]).abs() < 1e-9);
}

proptest! {
    #[test]
    fn perfect_prediction(y in prop::collection::vec(1.0f64..100.0, 2..40)) {
        prop_assume!(y.iter().any(|v| *v != y[0]));
        let m = metrics(&y, &y).unwrap();
        prop_assert_eq!((m.r2, m.nrmse, m.smape), (1.0, 0.0, 0.0));
    }

    #[test]
    fn smape_is_symmetric_and_bounded(pairs in prop::collection::vec((0.1f64..100.0, -100.0f64..100.0), 2..40)) {
        let (y, yhat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(y.iter().any(|v| *v != y[0]) && yhat.iter().any(|v| *v != yhat[0]));
        let a = metrics(&y, &yhat).unwrap();
        let b = metrics(&yhat, &y);
        if let Ok(b) = b {
            prop_assert!((a.smape - b.smape).abs() < 1e-12);
        }
        prop_assert!((0.0..=2.0).contains(&a.smape));
        prop_assert!(a.r2 <= 1.0 && a.nrmse >= 0.0);
    }

    #[test]
    fn nrmse_is_scale_invariant(
        pairs in prop::collection::vec((1.0f64..100.0, 1.0f64..100.0), 2..40),
        alpha in 0.01f64..100.0,
    ) {
        let (y, yhat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(y.iter().any(|v| *v != y[0]));
        let scale = |v: &[f64]| v.iter().map(|x| x * alpha).collect::<Vec<_>>();
        for norm in [NrmseNorm::Mean, NrmseNorm::Range] {
            let a = metrics_with(&y, &yhat, norm).unwrap().nrmse;
            let b = metrics_with(&scale(&y), &scale(&yhat), norm).unwrap().nrmse;
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}
