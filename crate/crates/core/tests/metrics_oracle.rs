mod common;

use common::{hand_brier, hand_metrics, pairwise_auc};
use ddos_core::metrics::{agreement_metrics, brier_score, confusion_matrix, core_metrics, evaluate, roc_auc};
use proptest::prelude::*;

fn labels_and_scores(max_len: usize) -> impl Strategy<Value = (Vec<u8>, Vec<f64>)> {
    (2..=max_len)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(0u8..=1, n),
                // few distinct levels force heavy ties
                proptest::collection::vec(0u8..=6, n),
            )
        })
        .prop_filter("both classes", |(y, _)| y.contains(&0) && y.contains(&1))
        .prop_map(|(y, s)| (y, s.into_iter().map(|v| v as f64 / 6.0).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn metrics_match_hand_formulas(y in proptest::collection::vec(0u8..=1, 1..40), p_seed in proptest::collection::vec(0u8..=1, 40)) {
        let p = &p_seed[..y.len()];
        let cm = confusion_matrix(&y, p).unwrap();
        let h = hand_metrics(&y, p);
        prop_assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (h.tp, h.tn, h.fp, h.fn_));
        let c = core_metrics(&cm).unwrap();
        let a = agreement_metrics(&cm).unwrap();
        for (got, want) in [(c.accuracy, h.accuracy), (c.precision, h.precision), (c.recall, h.recall),
                            (c.f1, h.f1), (a.kappa, h.kappa), (a.mcc, h.mcc)] {
            prop_assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn auc_equals_concordance((y, s) in labels_and_scores(120)) {
        let roc = roc_auc(&y, &s).unwrap();
        prop_assert!((roc.auc - pairwise_auc(&y, &s)).abs() < 1e-12);
        let first = roc.points.first().unwrap();
        let last = roc.points.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in roc.points.windows(2) {
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform((y, s) in labels_and_scores(80)) {
        let shifted: Vec<f64> = s.iter().map(|v| v + 0.1).collect();
        let squared: Vec<f64> = shifted.iter().map(|v| v * v).collect();
        prop_assert_eq!(roc_auc(&y, &shifted).unwrap().auc, roc_auc(&y, &squared).unwrap().auc);
    }

    #[test]
    fn class_swap_duals(y in proptest::collection::vec(0u8..=1, 2..40), p_seed in proptest::collection::vec(0u8..=1, 40)) {
        let p = &p_seed[..y.len()];
        let ys: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        let ps: Vec<u8> = p.iter().map(|v| 1 - v).collect();
        let a = confusion_matrix(&y, p).unwrap();
        let b = confusion_matrix(&ys, &ps).unwrap();
        prop_assert_eq!((a.tp, a.tn, a.fp, a.fn_), (b.tn, b.tp, b.fn_, b.fp));
        prop_assert_eq!(core_metrics(&a).unwrap().accuracy, core_metrics(&b).unwrap().accuracy);
        prop_assert!((agreement_metrics(&a).unwrap().mcc - agreement_metrics(&b).unwrap().mcc).abs() < 1e-12);
        // precision of the swapped problem is the negative predictive value
        let npv = if a.tn + a.fn_ == 0 { 0.0 } else { a.tn as f64 / (a.tn + a.fn_) as f64 };
        prop_assert!((core_metrics(&b).unwrap().precision - npv).abs() < 1e-15);
    }

    #[test]
    fn perfect_agreement_iff_no_errors(y in proptest::collection::vec(0u8..=1, 2..30), p_seed in proptest::collection::vec(0u8..=1, 30)) {
        let p = &p_seed[..y.len()];
        let cm = confusion_matrix(&y, p).unwrap();
        let a = agreement_metrics(&cm).unwrap();
        let both = y.contains(&0) && y.contains(&1);
        let perfect = cm.fp == 0 && cm.fn_ == 0 && both;
        prop_assert_eq!(a.kappa == 1.0, perfect);
        prop_assert_eq!(a.mcc == 1.0, perfect);
    }

    #[test]
    fn brier_bounds((y, s) in labels_and_scores(60)) {
        let b = brier_score(&y, &s).unwrap();
        prop_assert!((b - hand_brier(&y, &s)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&b));
        let exact: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        prop_assert_eq!(brier_score(&y, &exact).unwrap(), 0.0);
    }
}

#[test]
fn report_examples() {
    let (r, roc) = evaluate(&[1, 0, 1, 0], &[1, 0, 0, 0], &[0.9, 0.6, 0.4, 0.1]).unwrap();
    assert_eq!((r.accuracy, r.precision, r.recall), (0.75, 1.0, 0.5));
    assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(r.auc, Some(0.75));
    let mut buf = Vec::new();
    roc.unwrap().write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("fpr,tpr\n0,0\n"));
    assert!(text.trim_end().ends_with("1,1"));
    assert!((brier_score(&[1, 0], &[0.8, 0.4]).unwrap() - 0.10).abs() < 1e-15);
}

#[test]
fn input_errors() {
    assert!(confusion_matrix(&[1, 0], &[1]).is_err());
    assert!(confusion_matrix(&[2], &[1]).is_err());
    assert!(roc_auc(&[1, 1], &[0.1, 0.2]).is_err());
    assert!(brier_score(&[], &[]).is_err());
    assert!(brier_score(&[1], &[1.5]).is_err());
}
