mod common;

use common::{brute_force_extended_f1, brute_force_f1, label_names, names, random_sets};
use lintext::metrics::{
    apply_unlabeled_extension, confusion_counts, f1_score, macro_f1, micro_f1, EvalOptions, EvalReport, UNLABELED,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(labels: &[String], truth: &[Vec<usize>], pred: &[Vec<usize>], ext: bool) -> EvalReport {
    EvalReport::from_predictions(labels, truth, pred, EvalOptions { unlabeled_extension: ext }).unwrap()
}

#[test]
fn matches_set_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..1000 {
        let n_labels = rng.gen_range(1..8);
        let n_rows = rng.gen_range(1..30);
        let labels = label_names(n_labels);
        let truth = random_sets(&mut rng, n_rows, n_labels);
        let pred = random_sets(&mut rng, n_rows, n_labels);
        let (tn, pn) = (names(&truth, &labels), names(&pred, &labels));

        let plain = report(&labels, &truth, &pred, false);
        let (micro, macro_) = brute_force_f1(&labels, &tn, &pn);
        assert_eq!(plain.micro_f1, micro);
        assert_eq!(plain.macro_f1, macro_);

        let ext = report(&labels, &truth, &pred, true);
        let (micro, macro_) = brute_force_extended_f1(&labels, &tn, &pn, UNLABELED);
        assert_eq!(ext.micro_f1, micro);
        assert_eq!(ext.macro_f1, macro_);
    }
}

#[test]
fn macro_between_label_extremes() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..500 {
        let n_labels = rng.gen_range(1..6);
        let truth = random_sets(&mut rng, 20, n_labels);
        let pred = random_sets(&mut rng, 20, n_labels);
        let c = confusion_counts(&truth, &pred, n_labels);
        let f = c.per_label_f1();
        let lo = f.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m = macro_f1(&c);
        assert!(lo - 1e-12 <= m && m <= hi + 1e-12);
        assert!((0.0..=1.0).contains(&micro_f1(&c)));
    }
}

#[test]
fn extension_gives_every_row_a_truth_label() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..500 {
        let n_labels = rng.gen_range(1..6);
        let n_rows = rng.gen_range(1..25);
        let labels = label_names(n_labels);
        let truth = random_sets(&mut rng, n_rows, n_labels);
        let pred = random_sets(&mut rng, n_rows, n_labels);
        let ext = apply_unlabeled_extension(&labels, &truth, &pred).unwrap();
        let c = confusion_counts(&ext.truth, &ext.pred, ext.labels.len());
        let covered: u64 = c.tp.iter().sum::<u64>() + c.fn_.iter().sum::<u64>();
        assert!(covered >= n_rows as u64);
        assert!(ext.pred.iter().all(|p| !p.is_empty()));
    }
}

#[test]
fn single_label_micro_is_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..300 {
        let k = rng.gen_range(2..7);
        let n = rng.gen_range(1..40);
        let truth: Vec<Vec<usize>> = (0..n).map(|_| vec![rng.gen_range(0..k)]).collect();
        let pred: Vec<Vec<usize>> = (0..n).map(|_| vec![rng.gen_range(0..k)]).collect();
        let hits = truth.iter().zip(&pred).filter(|(t, p)| t == p).count();
        let c = confusion_counts(&truth, &pred, k);
        assert!((micro_f1(&c) - hits as f64 / n as f64).abs() < 1e-12);
    }
}

#[test]
fn extension_without_empty_rows_is_neutral() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..200 {
        let n_labels = rng.gen_range(1..5);
        let labels = label_names(n_labels);
        let full = |rng: &mut ChaCha8Rng| -> Vec<Vec<usize>> {
            (0..15).map(|_| vec![rng.gen_range(0..n_labels)]).collect()
        };
        let truth = full(&mut rng);
        let pred = full(&mut rng);
        let a = report(&labels, &truth, &pred, false);
        let b = report(&labels, &truth, &pred, true);
        assert_eq!((a.micro_f1, a.macro_f1), (b.micro_f1, b.macro_f1));
    }
}

#[test]
fn zero_over_zero_is_zero() {
    assert_eq!(f1_score(0, 0, 0), 0.0);
    let labels = label_names(2);
    let r = report(&labels, &[vec![], vec![]], &[vec![], vec![]], false);
    assert_eq!((r.micro_f1, r.macro_f1), (0.0, 0.0));
    // every row unlabeled and predicted unlabeled: perfect under the extension
    let r = report(&labels, &[vec![], vec![]], &[vec![], vec![]], true);
    assert_eq!(r.micro_f1, 1.0);
    assert_eq!(r.macro_f1, 1.0 / 3.0);
}

#[test]
fn reserved_label_name_rejected() {
    let labels = vec!["a".to_string(), UNLABELED.to_string()];
    assert!(apply_unlabeled_extension(&labels, &[vec![0]], &[vec![1]]).is_err());
}
