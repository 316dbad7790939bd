//! Displacement errors and the straight-line baseline.

use crate::geom::Vec2;

use super::EvalError;

fn check(pred: &[Vec2], truth: &[Vec2]) -> Result<(), EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(EvalError::EmptyPrediction);
    }
    Ok(())
}

/// Mean L2 distance over timesteps.
pub fn ade(pred: &[Vec2], truth: &[Vec2]) -> Result<f64, EvalError> {
    check(pred, truth)?;
    let total: f64 = pred.iter().zip(truth).map(|(p, t)| p.distance(*t)).sum();
    Ok(total / pred.len() as f64)
}

/// L2 distance at the last timestep.
pub fn fde(pred: &[Vec2], truth: &[Vec2]) -> Result<f64, EvalError> {
    check(pred, truth)?;
    Ok(pred[pred.len() - 1].distance(truth[truth.len() - 1]))
}

/// Least-squares line through `observed` (one sample per frame), returning
/// its slope per frame and its value at the last observed frame.
pub fn linear_fit(observed: &[Vec2]) -> (Vec2, Vec2) {
    let n = observed.len();
    match n {
        0 => return (Vec2::ZERO, Vec2::ZERO),
        1 => return (Vec2::ZERO, observed[0]),
        _ => {}
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let p_mean = observed.iter().copied().sum::<Vec2>() / n as f64;
    let mut cov = Vec2::ZERO;
    let mut var = 0.0;
    for (k, &p) in observed.iter().enumerate() {
        let dt = k as f64 - t_mean;
        cov += (p - p_mean) * dt;
        var += dt * dt;
    }
    let slope = cov / var;
    (slope, p_mean + slope * ((n - 1) as f64 - t_mean))
}

/// Extends the least-squares line of x(t) and y(t) over the observed frames
/// by `t_pred` frames.
pub fn linear_baseline(observed: &[Vec2], t_pred: usize) -> Vec<Vec2> {
    let (slope, last) = linear_fit(observed);
    (1..=t_pred).map(|k| last + slope * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize, start: Vec2, v: Vec2) -> Vec<Vec2> {
        (0..n).map(|k| start + v * k as f64).collect()
    }

    #[test]
    fn identity_is_zero() {
        let t = line(8, Vec2::new(1.0, 2.0), Vec2::new(0.3, -0.1));
        assert_eq!(ade(&t, &t).unwrap(), 0.0);
        assert_eq!(fde(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        let t = line(8, Vec2::ZERO, Vec2::new(0.4, 0.0));
        let p: Vec<Vec2> = t.iter().map(|&q| q + Vec2::new(0.0, 1.0)).collect();
        assert!((ade(&p, &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fde_sees_only_the_last_point() {
        let t = line(8, Vec2::ZERO, Vec2::new(0.4, 0.0));
        let mut p = t.clone();
        p[7] += Vec2::new(3.0, 4.0);
        assert_eq!(fde(&p, &t).unwrap(), 5.0);
        p[2] += Vec2::new(10.0, 0.0);
        assert_eq!(fde(&p, &t).unwrap(), 5.0);
    }

    #[test]
    fn mismatch_and_empty_rejected() {
        let t = line(3, Vec2::ZERO, Vec2::ZERO);
        assert_eq!(ade(&t[..2], &t), Err(EvalError::LengthMismatch { pred: 2, truth: 3 }));
        assert_eq!(fde(&[], &[]), Err(EvalError::EmptyPrediction));
    }

    #[test]
    fn exact_line_continues() {
        let all = line(16, Vec2::new(-2.0, 1.0), Vec2::new(0.5, 0.25));
        let pred = linear_baseline(&all[..8], 8);
        assert!(ade(&pred, &all[8..]).unwrap() < 1e-12);
    }

    #[test]
    fn stationary_stays_put() {
        let obs = vec![Vec2::new(3.0, 4.0); 8];
        assert_eq!(linear_baseline(&obs, 5), vec![Vec2::new(3.0, 4.0); 5]);
    }

    fn coord() -> impl Strategy<Value = f64> {
        -20.0..20.0f64
    }

    proptest! {
        #[test]
        fn errors_are_rigid_invariant(
            pts in prop::collection::vec((coord(), coord(), coord(), coord()), 1..12),
            angle in -3.2..3.2f64, tx in coord(), ty in coord(),
        ) {
            let pred: Vec<Vec2> = pts.iter().map(|p| Vec2::new(p.0, p.1)).collect();
            let truth: Vec<Vec2> = pts.iter().map(|p| Vec2::new(p.2, p.3)).collect();
            let shift = Vec2::new(tx, ty);
            let moved = |v: &Vec<Vec2>| v.iter().map(|p| p.rotate(angle) + shift).collect::<Vec<_>>();
            let (a, b) = (ade(&pred, &truth).unwrap(), ade(&moved(&pred), &moved(&truth)).unwrap());
            prop_assert!((a - b).abs() < 1e-9);
            let (a, b) = (fde(&pred, &truth).unwrap(), fde(&moved(&pred), &moved(&truth)).unwrap());
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn errors_bounded_by_worst_step(
            pts in prop::collection::vec((coord(), coord(), coord(), coord()), 1..12),
        ) {
            let pred: Vec<Vec2> = pts.iter().map(|p| Vec2::new(p.0, p.1)).collect();
            let truth: Vec<Vec2> = pts.iter().map(|p| Vec2::new(p.2, p.3)).collect();
            let worst = pred.iter().zip(&truth).map(|(p, t)| p.distance(*t)).fold(0.0, f64::max);
            let a = ade(&pred, &truth).unwrap();
            prop_assert!(a >= 0.0 && a <= worst + 1e-12);
            prop_assert!(fde(&pred, &truth).unwrap() <= worst + 1e-12);
            prop_assert_eq!(a == 0.0, pred == truth);
        }

        #[test]
        fn baseline_is_rigid_equivariant(
            pts in prop::collection::vec((coord(), coord()), 2..10),
            angle in -3.2..3.2f64, tx in coord(), ty in coord(), t_pred in 1usize..10,
        ) {
            let obs: Vec<Vec2> = pts.iter().map(|p| Vec2::new(p.0, p.1)).collect();
            let shift = Vec2::new(tx, ty);
            let moved: Vec<Vec2> = obs.iter().map(|p| p.rotate(angle) + shift).collect();
            let a: Vec<Vec2> = linear_baseline(&obs, t_pred).iter().map(|p| p.rotate(angle) + shift).collect();
            let b = linear_baseline(&moved, t_pred);
            for (p, q) in a.iter().zip(&b) {
                prop_assert!(p.distance(*q) < 1e-8);
            }
        }
    }
}
