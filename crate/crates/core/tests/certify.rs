mod common;

use common::*;
use faithkit::certify::{attribute_certify, backward_bounds, concretize, ibp_bounds, CertifyConfig};
use faithkit::linalg::norm;
use faithkit::model::ClassifierModel;
use ndarray::Array2;
use rand::Rng;

fn cfg(radius: f64) -> CertifyConfig<f64> {
    CertifyConfig { radius, target: None }
}

/// A perturbation of Frobenius norm `radius · scale`, direction from the cube.
fn perturbation(r: &mut impl Rng, shape: (usize, usize), radius: f64, scale: f64) -> Array2<f64> {
    let dir = uniform(r, shape.0, shape.1, 1.0);
    let len = norm(&dir);
    dir * (radius * scale / len)
}

fn logit(model: &ClassifierModel<f64>, e: &Array2<f64>, k: usize) -> f64 {
    model.forward(e).unwrap().logits[k]
}

#[test]
fn zero_radius_intervals_collapse_to_clean_values() {
    let mut r = rng(1);
    let model = random_model(&mut r, 4, 6);
    let x = uniform(&mut r, 3, 4, 1.0);
    let t = model.forward(&x).unwrap();
    let b = ibp_bounds(&model, &x, 0.0).unwrap();
    assert_eq!(b.z1.lower, t.z1);
    assert_eq!(b.z1.upper, t.z1);
    // Deeper layers go through a sign-split affine, equal up to rounding.
    for j in 0..6 {
        assert!((b.a2.lower[j] - t.a2[j]).abs() <= 1e-12);
        assert!((b.a2.upper[j] - t.a2[j]).abs() <= 1e-12);
    }
    let lin = backward_bounds(&model, &x, &cfg(0.0)).unwrap();
    let (lo, hi) = concretize(&lin, &x, 0.0).unwrap();
    let clean = t.logits[t.label];
    assert!((lo - clean).abs() <= 1e-9 && (hi - clean).abs() <= 1e-9);
}

#[test]
fn first_layer_intervals_use_row_norms() {
    let mut r = rng(2);
    let model = random_model(&mut r, 5, 4);
    let x = uniform(&mut r, 3, 5, 1.0);
    let t = model.forward(&x).unwrap();
    let b = ibp_bounds(&model, &x, 0.3).unwrap();
    let w1 = &model.parts().w1;
    for i in 0..3 {
        for j in 0..4 {
            let row: Vec<f64> = w1.row(j).to_vec();
            let half = 0.3 * l2(&row);
            assert!((b.z1.upper[[i, j]] - t.z1[[i, j]] - half).abs() < 1e-12);
            assert!((t.z1[[i, j]] - b.z1.lower[[i, j]] - half).abs() < 1e-12);
        }
    }
}

#[test]
fn interval_widths_grow_with_radius_and_contain_clean_values() {
    let mut r = rng(3);
    for _ in 0..50 {
        let model = random_model(&mut r, 4, 6);
        let x = uniform(&mut r, 4, 4, 1.0);
        let t = model.forward(&x).unwrap();
        let small = ibp_bounds(&model, &x, 0.1).unwrap();
        let large = ibp_bounds(&model, &x, 0.4).unwrap();
        for (s, l) in [(&small.z2, &large.z2), (&small.a2, &large.a2)] {
            for j in 0..6 {
                assert!(l.upper[j] - l.lower[j] >= s.upper[j] - s.lower[j] - 1e-12);
            }
        }
        for j in 0..6 {
            assert!(small.z2.lower[j] <= t.z2[j] + 1e-12 && t.z2[j] <= small.z2.upper[j] + 1e-12);
            assert!(small.pooled.lower[j] <= t.pooled[j] + 1e-12 && t.pooled[j] <= small.pooled.upper[j] + 1e-12);
        }
        let (lo_s, hi_s) = concretize(&backward_bounds(&model, &x, &cfg(0.1)).unwrap(), &x, 0.1).unwrap();
        let (lo_l, hi_l) = concretize(&backward_bounds(&model, &x, &cfg(0.4)).unwrap(), &x, 0.4).unwrap();
        assert!(hi_l - lo_l >= hi_s - lo_s - 1e-9);
    }
}

#[test]
fn bounds_are_sound_under_sampling() {
    let mut r = rng(4);
    for case in 0..40 {
        let model = random_model(&mut r, 4, 6);
        let n = r.random_range(1..=5);
        let x = uniform(&mut r, n, 4, 1.0);
        let delta = r.random_range(0.0..1.0);
        let y = model.predict(&x).unwrap();
        let bounds = backward_bounds(&model, &x, &cfg(delta)).unwrap();
        let (lo, hi) = concretize(&bounds, &x, delta).unwrap();
        let clean = logit(&model, &x, y);
        assert!(lo <= clean + 1e-9 && clean <= hi + 1e-9, "case {case}");
        for s in 0..500 {
            let scale = if s % 2 == 0 { 1.0 } else { r.random::<f64>() };
            let e = &x + &perturbation(&mut r, x.dim(), delta, scale);
            let v = logit(&model, &e, y);
            assert!(lo - 1e-9 <= v && v <= hi + 1e-9, "case {case}: {lo} ≤ {v} ≤ {hi}");
        }
        // The minimiser of the lower linear function.
        let w = &bounds.lower_weights;
        let len = norm(w);
        if len > 0.0 {
            let e = &x - &(w * (delta / len));
            assert!(logit(&model, &e, y) >= lo - 1e-9);
        }
    }
}

#[test]
fn stable_models_get_exact_linear_bounds() {
    let mut r = rng(5);
    for _ in 0..20 {
        let model = collapse_model(&mut r, 5, 7);
        let n = r.random_range(1..=8);
        let x = uniform(&mut r, n, 5, 1.0);
        let delta = r.random_range(0.0..2.0);
        let y = model.predict(&x).unwrap();
        let (u, _) = logit_map(&model, y);
        let b = backward_bounds(&model, &x, &cfg(delta)).unwrap();
        for i in 0..n {
            for k in 0..5 {
                let w = u[k] / n as f64;
                assert!((b.lower_weights[[i, k]] - w).abs() <= 1e-9);
                assert!((b.upper_weights[[i, k]] - w).abs() <= 1e-9);
            }
        }
        assert!((b.lower_bias - b.upper_bias).abs() <= 1e-9 * b.lower_bias.abs().max(1.0));
        // Hyperplane distance: clean logit ∓ δ ‖u‖ / √n.
        let clean = logit(&model, &x, y);
        let reach = delta * l2(&u) / (n as f64).sqrt();
        let (lo, hi) = concretize(&b, &x, delta).unwrap();
        assert!((lo - (clean - reach)).abs() <= 1e-9, "{lo} vs {}", clean - reach);
        assert!((hi - (clean + reach)).abs() <= 1e-9);
    }
}

#[test]
fn certify_matches_logit_gradient_times_input_when_stable() {
    let mut r = rng(6);
    let model = collapse_model(&mut r, 5, 7);
    let x = uniform(&mut r, 6, 5, 1.0);
    let y = model.predict(&x).unwrap();
    let g = model.logit_grad_embeddings(&x, y).unwrap();
    let expected = (&g * &x).sum_axis(ndarray::Axis(1));
    for delta in [0.0, 0.1, 1.0] {
        let a = attribute_certify(&model, &x, &cfg(delta)).unwrap();
        for (s, e) in a.scores.iter().zip(expected.iter()) {
            assert!((s - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }
}

#[test]
fn certify_zero_token_scores_zero_and_rejects_bad_radius() {
    let mut r = rng(7);
    let model = random_model(&mut r, 4, 6);
    let mut x = uniform(&mut r, 4, 4, 1.0);
    x.row_mut(1).fill(0.0);
    assert_eq!(attribute_certify(&model, &x, &cfg(0.1)).unwrap().scores[1], 0.0);
    assert!(ibp_bounds(&model, &x, -1.0).is_err());
    assert!(ibp_bounds(&model, &x, f64::NAN).is_err());
}
