use rand::Rng as _;
use refscore::encoder::fit_joint_budget;
use refscore::model::*;
use refscore::rng::seeded;

mod oracles;

fn tiny(kind: HeadKind) -> HeadConfig {
    HeadConfig {
        kind,
        fc_hidden: 5,
        cnn_filters: 3,
        cnn_kernel_rows: 2,
        lstm_units: 3,
    }
}

fn check_gradient(kind: HeadKind, loss: Loss, seed: u64) -> f64 {
    let (rows, cols) = (4, 3);
    let mut rng = seeded(seed);
    let mut head = Head::build((rows, cols), tiny(kind), seed).unwrap();
    for p in &mut head.params {
        *p += rng.random_range(-0.3..0.3);
    }
    let x: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = if loss == Loss::Bce { 1.0 } else { 0.3 };
    let mut grad = vec![0.0; head.params.len()];
    head.accumulate_gradient(&x, |z| loss.of_logit(z, y), &mut grad);
    let numeric = oracles::numeric_gradient(&head.params, 1e-5, |p| loss.of_logit(head.logit_with(p, &x), y).0);
    oracles::max_relative_error(&grad, &numeric, 1e-7)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for kind in [HeadKind::FcOnly, HeadKind::Cnn, HeadKind::Lstm] {
        for loss in [Loss::Mse, Loss::Bce] {
            for seed in 0..3 {
                let err = check_gradient(kind, loss, seed);
                assert!(err < 1e-4, "{kind} {loss:?} seed {seed}: relative error {err:e}");
            }
        }
    }
}

#[test]
fn gradients_accumulate_across_calls() {
    let head = Head::build((3, 2), tiny(HeadKind::FcOnly), 1).unwrap();
    let x = [0.5, -0.2, 0.1, 0.9, -0.4, 0.3];
    let mut once = vec![0.0; head.params.len()];
    head.accumulate_gradient(&x, |z| Loss::Mse.of_logit(z, 0.2), &mut once);
    let mut twice = vec![0.0; head.params.len()];
    for _ in 0..2 {
        head.accumulate_gradient(&x, |z| Loss::Mse.of_logit(z, 0.2), &mut twice);
    }
    for (a, b) in once.iter().zip(&twice) {
        assert!((2.0 * a - b).abs() < 1e-15);
    }
}

/// `(losses, expected last epoch, expected kept epoch)` with patience 3.
const STOP_CASES: [(&[f64], usize, Option<usize>); 10] = [
    (&[0.9, 0.8, 0.8, 0.8, 0.8], 5, Some(2)),
    (&[0.5, 0.6, 0.7, 0.8, 0.1], 4, Some(1)),
    (&[1.0, 0.9, 0.8, 0.7, 0.6, 0.5], 6, Some(6)),
    (&[0.4, 0.5, 0.3, 0.6, 0.7, 0.8, 0.1], 6, Some(3)),
    (&[0.4, 0.4, 0.4, 0.4], 4, Some(1)),
    (&[0.7, 0.6, 0.61, 0.59, 0.6, 0.6, 0.6], 7, Some(4)),
    (&[0.3], 1, Some(1)),
    (&[0.9, 0.9, 0.89, 0.9, 0.9, 0.88, 0.9, 0.9, 0.9], 9, Some(6)),
    (&[0.5, 0.4, 0.5, 0.4, 0.5, 0.4], 5, Some(2)),
    (&[f64::NAN, 0.5, 0.6, 0.7, 0.8], 5, Some(2)),
];

#[test]
fn early_stopping_scripted_cases() {
    for (i, (losses, last, kept)) in STOP_CASES.iter().enumerate() {
        assert_eq!(replay_schedule(losses, 3, 50), (*last, *kept), "case {i}");
    }
}

#[test]
fn max_epochs_caps_the_schedule() {
    let falling: Vec<f64> = (0..100).map(|i| 1.0 / (i + 1) as f64).collect();
    assert_eq!(replay_schedule(&falling, 3, 50), (50, Some(50)));
}

#[test]
fn joint_budget_is_filled_exactly_and_split_proportionally() {
    let mut rng = seeded(5);
    for _ in 0..1000 {
        let doc = rng.random_range(0..3000usize);
        let sum = rng.random_range(0..400usize);
        let l = fit_joint_budget(doc, sum, 512).unwrap();
        assert_eq!(3 + l.doc_keep + l.summary_keep + l.padding, 512);
        assert!(l.doc_keep <= doc && l.summary_keep <= sum);
        if doc + sum > 509 {
            assert_eq!(l.padding, 0);
            let ideal = 509.0 * doc as f64 / (doc + sum) as f64;
            assert!((l.doc_keep as f64 - ideal).abs() <= 1.0, "{doc}/{sum} -> {l:?}");
        } else {
            assert_eq!((l.doc_keep, l.summary_keep), (doc, sum));
        }
    }
}

fn separable(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = if x[0] + x[3] > 0.0 { 1.0 } else { 0.0 };
            (x, y)
        })
        .unzip()
}

#[test]
fn fitting_learns_a_separable_rule_and_keeps_the_best_epoch() {
    let (xs, ys) = separable(400, 1);
    let (vx, vy) = separable(100, 2);
    let mut cfg = TrainConfig::new(Loss::Bce, 9);
    cfg.learning_rate = 1e-2;
    let fit = fit_head((&xs, &ys), (&vx, &vy), (2, 3), HeadConfig::new(HeadKind::FcOnly), &cfg).unwrap();
    let best = fit.history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(fit.history[fit.best_epoch - 1].val_loss, best);
    let correct = vx
        .iter()
        .zip(&vy)
        .filter(|(x, y)| (fit.head.score(x) >= 0.5) == (**y == 1.0))
        .count();
    assert!(correct >= 90, "{correct}/100");
    assert!(fit.head.params.iter().all(|p| *p == *p as f32 as f64));
}

#[test]
fn fitting_is_reproducible() {
    let (xs, ys) = separable(100, 3);
    let (vx, vy) = separable(30, 4);
    let cfg = TrainConfig::new(Loss::Bce, 2);
    let run = || fit_head((&xs, &ys), (&vx, &vy), (2, 3), tiny(HeadKind::Lstm), &cfg).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.head.params, b.head.params);
    assert_eq!(a.best_epoch, b.best_epoch);
}
