mod common;

use common::*;
use faithkit::attribution::{attribute_gradinp, attribute_occlusion, attribute_random, Attribution};
use faithkit::corpus::{SynonymLexicon, Vocabulary};
use faithkit::metrics::{
    comprehensiveness, interpolation_curve, pgd_attack, radius_for_set, removal_auc, sensitivity_auc,
    sensitivity_radius, stability, sufficiency, InterpolationMetric, SensitivityConfig, StabilityConfig,
    THRESHOLDS,
};
use faithkit::model::{ClassifierModel, TokenSequence};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn removal_matches_closed_form_in_linear_regime() {
    let mut r = rng(1);
    for _ in 0..20 {
        let model = collapse_model(&mut r, 5, 6);
        let n = r.random_range(1..=12);
        let x = uniform(&mut r, n, 5, 1.0);
        let y = model.predict(&x).unwrap();
        let (v, _) = margin_map(&model, y);
        let m = oracle_margin(&model, &x, y);
        let contrib: Vec<f64> = x.rows().into_iter().map(|row| dot(&v, row.iter().copied()) / n as f64).collect();
        let attr = attribute_gradinp(&model, &x).unwrap();
        for q in THRESHOLDS.into_iter().chain([1.0]) {
            let k = faithkit::metrics::relevant_size(q, n);
            let inside: f64 = attr.rank[..k].iter().map(|&i| contrib[i]).sum();
            let outside: f64 = attr.rank[k..].iter().map(|&i| contrib[i]).sum();
            let comp = comprehensiveness(&model, &x, &attr, q).unwrap();
            let suff = sufficiency(&model, &x, &attr, q).unwrap();
            assert!((comp - (sigmoid(m) - sigmoid(m - inside))).abs() <= 1e-10);
            assert!((suff - (sigmoid(m) - sigmoid(m - outside))).abs() <= 1e-10);
        }
    }
}

#[test]
fn removal_boundaries() {
    let mut r = rng(2);
    let model = random_model(&mut r, 4, 6);
    let x = uniform(&mut r, 5, 4, 1.0);
    let y = model.predict(&x).unwrap();
    let attr = attribute_occlusion(&model, &x).unwrap();
    let all_pad = model.score(&Array2::zeros((5, 4)), y).unwrap();
    let clean = model.score(&x, y).unwrap();
    assert_eq!(comprehensiveness(&model, &x, &attr, 1.0).unwrap(), clean - all_pad);
    assert_eq!(sufficiency(&model, &x, &attr, 1.0).unwrap(), 0.0);
    let one = uniform(&mut r, 1, 4, 1.0);
    let a1 = attribute_occlusion(&model, &one).unwrap();
    assert_eq!(sufficiency(&model, &one, &a1, 0.5).unwrap(), 0.0);
    assert!(comprehensiveness(&model, &x, &attr, 0.0).is_err());
    // Removing a PAD-embedded token changes nothing.
    let mut padded = x.clone();
    padded.row_mut(0).fill(0.0);
    let forced = Attribution::new(attr.method, ndarray::Array1::from_vec(vec![9.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
    assert_eq!(comprehensiveness(&model, &padded, &forced, 0.1).unwrap(), 0.0);
}

#[test]
fn removal_auc_examples() {
    assert_eq!(removal_auc(&[0.3_f64; 5]).unwrap(), 0.3);
    assert!((removal_auc(&[0.0_f64, 0.0, 0.0, 0.0, 1.0]).unwrap() - 0.2).abs() < 1e-15);
    assert!(removal_auc::<f64>(&[]).is_err());
    assert_eq!(removal_auc(&[0.5_f64, 0.25]).unwrap(), 0.375);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn removal_values_are_probability_differences(seed in any::<u64>(), n in 1usize..15, q in 0.01f64..=1.0) {
        let mut r = rng(seed);
        let model = random_model(&mut r, 3, 4);
        let x = uniform(&mut r, n, 3, 2.0);
        let attr = attribute_random(n, &mut r).unwrap();
        let comp = comprehensiveness(&model, &x, &attr, q).unwrap();
        let suff = sufficiency(&model, &x, &attr, q).unwrap();
        prop_assert!((-1.0..=1.0).contains(&comp) && (-1.0..=1.0).contains(&suff));
    }

    #[test]
    fn removal_auc_is_permutation_invariant(mut v in proptest::collection::vec(-1.0f64..1.0, 5), seed in any::<u64>()) {
        let a = removal_auc(&v).unwrap();
        let mut r = rng(seed);
        for i in (1..5).rev() {
            let j = r.random_range(0..=i);
            v.swap(i, j);
        }
        prop_assert!((removal_auc(&v).unwrap() - a).abs() <= 1e-15);
    }
}

fn full_set(n: usize) -> Vec<usize> {
    (0..n).collect()
}

#[test]
fn sensitivity_matches_hyperplane_distance() {
    let mut r = rng(3);
    let cfg = SensitivityConfig::default();
    let mut checked = 0;
    for _ in 0..15 {
        let model = collapse_model(&mut r, 5, 6);
        let n = r.random_range(1..=10);
        let x = uniform(&mut r, n, 5, 1.0);
        let y = model.predict(&x).unwrap();
        let (v, _) = margin_map(&model, y);
        let m = oracle_margin(&model, &x, y);
        let expected = m.abs() * (n as f64).sqrt() / l2(&v);
        if expected > 500.0 {
            continue;
        }
        let found = radius_for_set(&model, &x, &full_set(n), &cfg).unwrap();
        assert!(found.found);
        assert!((found.radius - expected).abs() <= 0.02 * expected, "{} vs {expected}", found.radius);
        // Bracketing, re-verified with fresh attacks.
        let succeed = pgd_attack(&model, &x, &full_set(n), found.radius, cfg.iterations, cfg.step).unwrap();
        let fail = pgd_attack(&model, &x, &full_set(n), 0.999 * found.radius, cfg.iterations, cfg.step).unwrap();
        assert!(succeed.success && !fail.success);
        assert_ne!(model.predict(&succeed.embeddings).unwrap(), y);
        checked += 1;
    }
    assert!(checked >= 12, "only {checked} cases in range");
}

#[test]
fn subset_radius_is_never_smaller_than_full_radius() {
    let mut r = rng(4);
    let cfg = SensitivityConfig::default();
    for _ in 0..10 {
        let model = random_model(&mut r, 4, 6);
        let n = r.random_range(2..=8);
        let x = uniform(&mut r, n, 4, 1.0);
        let full = radius_for_set(&model, &x, &full_set(n), &cfg).unwrap();
        let k = r.random_range(1..n);
        let subset: Vec<usize> = full_set(n)[..k].to_vec();
        let part = radius_for_set(&model, &x, &subset, &cfg).unwrap();
        if full.found {
            assert!(full.radius <= part.radius * 1.02, "{} vs {}", full.radius, part.radius);
        } else {
            assert!(!part.found);
        }
    }
}

#[test]
fn constant_model_cannot_be_attacked() {
    let mut r = rng(5);
    let model = constant_model(&mut r, 4, 6);
    let x = uniform(&mut r, 5, 4, 1.0);
    for eps in [0.0, 1.0, 1e3] {
        assert!(!pgd_attack(&model, &x, &[0, 1], eps, 100, 1.0).unwrap().success);
    }
    let cfg = SensitivityConfig::default();
    let attr = attribute_occlusion(&model, &x).unwrap();
    let one = sensitivity_radius(&model, &x, &attr, 0.2, &cfg).unwrap();
    assert!(!one.found && one.radius == f64::INFINITY && one.failing == 1024.0);
    let auc = sensitivity_auc(&model, &x, &attr, &cfg).unwrap();
    assert_eq!(auc.auc, None);
    assert_eq!(auc.failures, 5);
    assert!(pgd_attack(&model, &x, &[], 1.0, 10, 1.0).is_err());
    assert!(pgd_attack(&model, &x, &[7], 1.0, 10, 1.0).is_err());
}

#[test]
fn sensitivity_auc_is_mean_of_radii() {
    let mut r = rng(6);
    let model = random_model(&mut r, 4, 6);
    let x = uniform(&mut r, 10, 4, 1.0);
    let attr = attribute_gradinp(&model, &x).unwrap();
    let res = sensitivity_auc(&model, &x, &attr, &SensitivityConfig::default()).unwrap();
    assert_eq!(res.radii.len(), 5);
    let finite: Vec<f64> = res.radii.iter().filter(|r| r.found).map(|r| r.radius).collect();
    if !finite.is_empty() {
        let mean = finite.iter().sum::<f64>() / finite.len() as f64;
        assert!((res.auc.unwrap() - mean).abs() <= 1e-12);
    }
    assert!(res.radii.iter().all(|r| r.radius >= 0.0));
}

// ---------------------------------------------------------------- stability

struct Instance {
    model: ClassifierModel<f64>,
    vocab: Vocabulary,
    lexicon: SynonymLexicon,
    seq: TokenSequence,
    cfg: StabilityConfig,
}

/// Words `w2, w3, …`; the lexicon maps some of the sentence's words to other
/// in-vocabulary words.
fn instance(r: &mut impl Rng, n: usize, substitutable: &[usize], max_syn: usize) -> Instance {
    let words = 12;
    let mut vocab = Vocabulary::new();
    for w in 0..words {
        vocab.insert(&format!("w{w}"));
    }
    let model = {
        let mut parts = ClassifierModel::<f64>::random(vocab.len(), 4, 6, r).unwrap().into_parts();
        for v in parts.embedding.iter_mut().skip(4) {
            *v *= 10.0;
        }
        parts.b1.mapv_inplace(|_| r.random_range(-0.1..0.1));
        ClassifierModel::new(parts).unwrap()
    };
    let sentence: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let mut lexicon = SynonymLexicon::new();
    for &pos in substitutable {
        let count = r.random_range(1..=max_syn);
        let syns: Vec<String> = (0..count).map(|_| format!("w{}", r.random_range(n..words))).collect();
        lexicon.insert(&sentence[pos], syns);
    }
    let seq = vocab.encode(&sentence).unwrap();
    let cfg = StabilityConfig {
        max_substitutions: r.random_range(1..=4),
        tau: r.random_range(0.02..0.6),
    };
    Instance {
        model,
        vocab,
        lexicon,
        seq,
        cfg,
    }
}

/// Spearman on tie-averaged ranks, O(n²), falling back to positions when a
/// ranking is constant.
fn oracle_spearman(a: &[f64], b: &[f64]) -> f64 {
    let ranks = |s: &[f64]| -> Vec<f64> {
        s.iter()
            .map(|&v| {
                let below = s.iter().filter(|&&w| w < v).count() as f64;
                let equal = s.iter().filter(|&&w| w == v).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let pearson = |x: &[f64], y: &[f64]| -> Option<f64> {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(y).map(|(p, q)| (p - mx) * (q - my)).sum();
        let vx: f64 = x.iter().map(|p| (p - mx) * (p - mx)).sum();
        let vy: f64 = y.iter().map(|q| (q - my) * (q - my)).sum();
        (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
    };
    pearson(&ranks(a), &ranks(b)).unwrap_or_else(|| {
        let pos = |s: &[f64]| {
            let rank = faithkit::attribution::rank_of(s);
            let mut p = vec![0.0; s.len()];
            for (place, &i) in rank.iter().enumerate() {
                p[i] = place as f64;
            }
            p
        };
        pearson(&pos(a), &pos(b)).unwrap()
    })
}

/// Minimum correlation over every admissible contrast example with at most
/// `k` substituted positions; 1.0 when none is admissible.
fn exhaustive(inst: &Instance, method: &dyn Fn(&Array2<f64>) -> Vec<f64>) -> f64 {
    let model = &inst.model;
    let clean = model.embed(&inst.seq).unwrap();
    let y = model.predict(&clean).unwrap();
    let s0 = model.score(&clean, y).unwrap();
    let reference = method(&clean);
    let options: Vec<Vec<Option<String>>> = inst
        .seq
        .tokens()
        .iter()
        .map(|w| {
            let mut o = vec![None];
            o.extend(inst.lexicon.synonyms(w).iter().cloned().map(Some));
            o
        })
        .collect();
    let mut best = 1.0_f64;
    let mut choice = vec![0usize; options.len()];
    loop {
        let changed = choice.iter().filter(|&&c| c > 0).count();
        if changed > 0 && changed <= inst.cfg.max_substitutions {
            let mut seq = inst.seq.clone();
            for (pos, &c) in choice.iter().enumerate() {
                if let Some(word) = &options[pos][c] {
                    seq = seq.substituted(pos, word, inst.vocab.id(word));
                }
            }
            let e = model.embed(&seq).unwrap();
            if (model.score(&e, y).unwrap() - s0).abs() <= inst.cfg.tau {
                best = best.min(oracle_spearman(&reference, &method(&e)));
            }
        }
        let mut k = 0;
        loop {
            if k == choice.len() {
                return best;
            }
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn gradinp_scores(model: &ClassifierModel<f64>) -> impl Fn(&Array2<f64>) -> Vec<f64> + '_ {
    move |e| attribute_gradinp(model, e).unwrap().scores.to_vec()
}

#[test]
fn greedy_stability_equals_exhaustive_with_one_substitutable_token() {
    let mut r = rng(7);
    let mut moved = 0;
    for _ in 0..50 {
        let n = r.random_range(2..=4);
        let pos = r.random_range(0..n);
        let inst = instance(&mut r, n, &[pos], 3);
        let greedy = stability(&inst.model, &inst.seq, &inst.vocab, &inst.lexicon, &inst.cfg, |e| {
            attribute_gradinp(&inst.model, e)
        })
        .unwrap();
        let oracle = exhaustive(&inst, &gradinp_scores(&inst.model));
        assert!((greedy.spearman - oracle).abs() <= 1e-12, "{} vs {oracle}", greedy.spearman);
        moved += usize::from(greedy.spearman < 1.0);
    }
    assert!(moved >= 10, "too few instances exercise a substitution: {moved}");
}

#[test]
fn greedy_stability_is_an_admissible_upper_bound() {
    let mut r = rng(8);
    for _ in 0..40 {
        let n = r.random_range(2..=4);
        let all: Vec<usize> = (0..n).collect();
        let inst = instance(&mut r, n, &all, 3);
        let greedy = stability(&inst.model, &inst.seq, &inst.vocab, &inst.lexicon, &inst.cfg, |e| {
            attribute_gradinp(&inst.model, e)
        })
        .unwrap();
        let oracle = exhaustive(&inst, &gradinp_scores(&inst.model));
        assert!(greedy.spearman >= oracle - 1e-12);
        assert!((-1.0..=1.0).contains(&greedy.spearman));
        assert!(greedy.substitutions.len() <= inst.cfg.max_substitutions);
        // The returned contrast example respects τ.
        let e0 = inst.model.embed(&inst.seq).unwrap();
        let y = inst.model.predict(&e0).unwrap();
        let e1 = inst.model.embed(&greedy.contrast).unwrap();
        let change = (inst.model.score(&e1, y).unwrap() - inst.model.score(&e0, y).unwrap()).abs();
        assert!(change <= inst.cfg.tau);
    }
}

#[test]
fn stability_trivial_cases() {
    let mut r = rng(9);
    let inst = instance(&mut r, 4, &[0, 1, 2, 3], 3);
    let run = |lexicon: &SynonymLexicon, cfg: &StabilityConfig| {
        stability(&inst.model, &inst.seq, &inst.vocab, lexicon, cfg, |e| attribute_gradinp(&inst.model, e))
            .unwrap()
    };
    assert_eq!(run(&SynonymLexicon::new(), &inst.cfg).spearman, 1.0);
    let k0 = StabilityConfig {
        max_substitutions: 0,
        tau: 1.0,
    };
    assert_eq!(run(&inst.lexicon, &k0).spearman, 1.0);
    let strict = StabilityConfig {
        max_substitutions: 4,
        tau: 0.0,
    };
    let res = run(&inst.lexicon, &strict);
    assert_eq!(res.spearman, 1.0);
    assert!(res.substitutions.is_empty());
    assert_eq!(res.contrast, inst.seq);
    let bad = StabilityConfig {
        max_substitutions: 1,
        tau: 1.5,
    };
    assert!(stability(&inst.model, &inst.seq, &inst.vocab, &inst.lexicon, &bad, |e| attribute_gradinp(
        &inst.model,
        e
    ))
    .is_err());
}

// ------------------------------------------------------------ interpolation

#[test]
fn interpolation_endpoints_are_exact() {
    let mut r = rng(10);
    for _ in 0..20 {
        let model = random_model(&mut r, 4, 6);
        let n = r.random_range(8..=15);
        let x = uniform(&mut r, n, 4, 1.0);
        let attr = attribute_occlusion(&model, &x).unwrap();
        let curve = interpolation_curve(&model, &x, &attr, &InterpolationMetric::Comprehensiveness, &mut r).unwrap();
        if curve.degenerate {
            continue;
        }
        assert_eq!(curve.values[0], 0.0);
        assert_eq!(curve.values[4], 1.0);
        assert_eq!(curve.sets[0], attr.rank[..4].to_vec());
        for (i, set) in curve.sets.iter().enumerate() {
            let mut s = set.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 4);
            let outside = set.iter().filter(|j| !attr.rank[..4].contains(j)).count();
            assert_eq!(outside, i);
        }
    }
}

#[test]
fn interpolation_is_increasing_for_additive_contributions() {
    let mut r = rng(11);
    for _ in 0..20 {
        let model = collapse_model(&mut r, 5, 6);
        let (v, _) = margin_map(&model, 0);
        let len = l2(&v);
        let n = r.random_range(8..=14);
        // Row i = c_i · v / ‖v‖ with distinct c_i > 0: every token pushes towards class 0.
        let mut cs: Vec<f64> = (0..n).map(|i| 0.1 + 0.9 * (i as f64 + r.random::<f64>() * 0.5) / n as f64).collect();
        for i in (1..n).rev() {
            let j = r.random_range(0..=i);
            cs.swap(i, j);
        }
        let x = Array2::from_shape_fn((n, 5), |(i, k)| cs[i] * v[k] / len);
        assert_eq!(model.predict(&x).unwrap(), 0);
        let attr = attribute_gradinp(&model, &x).unwrap();
        let curve = interpolation_curve(&model, &x, &attr, &InterpolationMetric::Comprehensiveness, &mut r).unwrap();
        assert!(!curve.degenerate);
        for w in curve.values.windows(2) {
            assert!(w[1] > w[0], "{:?}", curve.values);
        }
    }
}

#[test]
fn interpolation_is_seeded_and_validates_input() {
    let mut r = rng(12);
    let model = random_model(&mut r, 4, 6);
    let x = uniform(&mut r, 10, 4, 1.0);
    let attr = attribute_occlusion(&model, &x).unwrap();
    let metric = InterpolationMetric::Sensitivity(SensitivityConfig::default());
    let a = interpolation_curve(&model, &x, &attr, &metric, &mut rng(5)).unwrap();
    let b = interpolation_curve(&model, &x, &attr, &metric, &mut rng(5)).unwrap();
    assert_eq!(a, b);
    let short = uniform(&mut r, 7, 4, 1.0);
    let short_attr = attribute_occlusion(&model, &short).unwrap();
    assert!(interpolation_curve(&model, &short, &short_attr, &metric, &mut r).is_err());
}

#[test]
fn interpolation_flags_degenerate_denominator() {
    let mut r = rng(13);
    let model = random_model(&mut r, 4, 6);
    let row = uniform(&mut r, 1, 4, 1.0);
    let x = Array2::from_shape_fn((9, 4), |(_, k)| row[[0, k]]);
    let attr = attribute_occlusion(&model, &x).unwrap();
    let curve = interpolation_curve(&model, &x, &attr, &InterpolationMetric::Comprehensiveness, &mut r).unwrap();
    assert!(curve.degenerate);
}
