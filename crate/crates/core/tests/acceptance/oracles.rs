use ener::dirichlet::{evidence_to_dirichlet, DirichletOutput, Evidence};
use ener::losses::{
    anneal_lambda2, cls_loss, importance_weight, iw_loss, kl_loss, mask_alpha, overall_loss, overall_loss_with_weights,
    unm_loss, Ablation, AnnealState, OneHot,
};
use ener::metrics::{auc, auc_pairwise, auc_ranked, ece, PredictionRecord, TieRule};
use ener::corpus::{build_vocab, LabelSchema, Origin, TaggedSentence};
use ener::model::{evidential_head, softmax_head, Head, ModelParams, ModelShape};
use ener::special::{digamma, log_gamma, sigmoid, trigamma};
use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::Verdict;

const KL_123: f64 = 0.551_197_381_662_155_375_4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub fn special_functions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_rec = 0.0f64;
    for _ in 0..1000 {
        let x: f64 = 100.0 * (1.0 - rng.gen::<f64>());
        let d = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
        let t = trigamma(x + 1.0).unwrap() - trigamma(x).unwrap() + 1.0 / (x * x);
        let l = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap() - x.ln();
        worst_rec = worst_rec.max(d.abs()).max(t.abs()).max(l.abs());
    }
    let h = 1e-5;
    let mut worst_fd = 0.0f64;
    for _ in 0..500 {
        let x = rng.gen_range(0.5..50.0);
        let fd_psi = (log_gamma(x + h).unwrap() - log_gamma(x - h).unwrap()) / (2.0 * h);
        let fd_tri = (digamma(x + h).unwrap() - digamma(x - h).unwrap()) / (2.0 * h);
        let psi = digamma(x).unwrap();
        let tri = trigamma(x).unwrap();
        worst_fd = worst_fd
            .max((fd_psi - psi).abs() / psi.abs().max(1e-3))
            .max((fd_tri - tri).abs() / tri.abs());
    }
    Verdict::new(
        worst_rec <= 1e-12 && worst_fd <= 1e-6,
        format!("max recurrence residual {worst_rec:.1e} (≤ 1e-12), max derivative error {worst_fd:.1e} (≤ 1e-6)"),
    )
}

pub fn mass_conservation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let c = rng.gen_range(2..=20);
        let e: Vec<f64> = (0..c).map(|_| rng.gen_range(0.0..=100.0)).collect();
        let d = evidence_to_dirichlet(&Evidence::new(e).unwrap());
        worst = worst.max((d.uncertainty + d.belief.iter().sum::<f64>() - 1.0).abs());
    }
    Verdict::new(worst <= 1e-12, format!("max |u + Σb − 1| = {worst:.1e} over 10⁴ vectors"))
}

pub fn kl_oracle() -> Verdict {
    let closed = kl_loss(&[1.0, 2.0, 3.0]).unwrap().value;
    let exact_ok = (closed - KL_123).abs() <= 1e-9;

    // ln Dir(p | [1,2,3]) − ln Dir(p | 1) = ln 30 + ln p₂ + 2 ln p₃.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let g2 = Gamma::new(2.0, 1.0).unwrap();
    let g3 = Gamma::new(3.0, 1.0).unwrap();
    let n = 10_000_000u64;
    let ln30 = 30f64.ln();
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let x1 = -(1.0 - rng.gen::<f64>()).ln();
        let x2 = g2.sample(&mut rng);
        let x3 = g3.sample(&mut rng);
        let s = x1 + x2 + x3;
        let v = ln30 + (x2 / s).ln() + 2.0 * (x3 / s).ln();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let z = (mean - closed) / se;
    Verdict::new(
        exact_ok && z.abs() <= 3.0,
        format!("closed form {closed:.10} vs oracle {KL_123:.10}; Monte Carlo {mean:.6} ± {se:.1e} (z = {z:.2})"),
    )
}

fn dir(alpha: &[f64]) -> DirichletOutput {
    DirichletOutput::from_alpha(alpha.to_vec()).unwrap()
}

fn numeric_grad(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[j] += h;
            down[j] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max)
}

fn random_alpha(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    loop {
        let a: Vec<f64> = (0..c).map(|_| 1.0 + rng.gen_range(0.0..20.0)).collect();
        let mut sorted = a.clone();
        sorted.sort_by(|x, y| y.total_cmp(x));
        if sorted[0] - sorted[1] > 0.5 && a.iter().all(|v| *v > 1.0 + 1e-3) {
            return a;
        }
    }
}

fn loss_gradients() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let ablations = [
        Ablation::FULL,
        Ablation::VANILLA_EDL,
        Ablation {
            disable_iw: true,
            disable_unm: false,
        },
        Ablation {
            disable_iw: false,
            disable_unm: true,
        },
    ];
    for round in 0..100 {
        let c = rng.gen_range(2..=10);
        let alpha = random_alpha(&mut rng, c);
        let y = OneHot::new(rng.gen_range(0..c), c).unwrap();
        let d = dir(&alpha);

        let num = numeric_grad(&alpha, h, |a| cls_loss(&dir(a), y).unwrap().value);
        worst = worst.max(max_rel(&cls_loss(&d, y).unwrap().grad, &num));
        let w = importance_weight(&d, y).unwrap();
        let num = numeric_grad(&alpha, h, |a| w * cls_loss(&dir(a), y).unwrap().value);
        worst = worst.max(max_rel(&iw_loss(&d, y).unwrap().grad, &num));
        let mut kl = kl_loss(&mask_alpha(&alpha, y).unwrap()).unwrap().grad;
        kl[y.class()] = 0.0;
        let num = numeric_grad(&alpha, h, |a| kl_loss(&mask_alpha(a, y).unwrap()).unwrap().value);
        worst = worst.max(max_rel(&kl, &num));
        let anneal = AnnealState::fixed(0.7, rng.gen_range(0.01..1.0));
        let (_, g) = unm_loss(&[d.clone()], &[y], &anneal).unwrap();
        let num = numeric_grad(&alpha, h, |a| unm_loss(&[dir(a)], &[y], &anneal).unwrap().0);
        worst = worst.max(max_rel(&g[0], &num));

        let n = rng.gen_range(1..=4);
        let alphas: Vec<Vec<f64>> = (0..n).map(|_| random_alpha(&mut rng, c)).collect();
        let labels: Vec<OneHot> = (0..n).map(|_| OneHot::new(rng.gen_range(0..c), c).unwrap()).collect();
        let outs: Vec<DirichletOutput> = alphas.iter().map(|a| dir(a)).collect();
        let weights: Vec<f64> = outs.iter().zip(&labels).map(|(d, l)| importance_weight(d, *l).unwrap()).collect();
        let ablation = ablations[round % ablations.len()];
        let loss = overall_loss(&outs, &labels, &anneal, ablation).unwrap();
        for i in 0..n {
            let num = numeric_grad(&alphas[i], h, |a| {
                let mut o = outs.clone();
                o[i] = dir(a);
                overall_loss_with_weights(&o, &labels, &weights, &anneal, ablation).unwrap().total
            });
            worst = worst.max(max_rel(&loss.grad_alpha[i], &num));
        }
    }
    worst
}

fn toy_batch() -> Vec<TaggedSentence> {
    [
        ("John Smith visited Paris .", "B-PER I-PER O B-LOC O"),
        ("The EU rejects German call", "O B-ORG O B-MISC O"),
        ("Maria lives in Berlin", "B-PER O O B-LOC"),
    ]
    .iter()
    .map(|(t, l)| {
        TaggedSentence::new(
            t.split(' ').map(String::from).collect(),
            l.split(' ').map(String::from).collect(),
            Origin::Id,
        )
        .unwrap()
    })
    .collect()
}

/// Objective of a whole batch and, on request, its parameter gradient.
fn model_total(
    head: Head,
    params: &ModelParams,
    batch: &[(Vec<usize>, Vec<OneHot>)],
    weights: &[Vec<f64>],
    want_grad: bool,
) -> (f64, ModelParams) {
    let anneal = AnnealState::fixed(0.6, 0.3);
    let mut total = 0.0;
    let mut grad = ModelParams::zeros(params.shape).unwrap();
    for (k, (ids, ys)) in batch.iter().enumerate() {
        let (logits, trace) = params.forward(ids).unwrap();
        let z: Vec<Vec<f64>> = logits.rows().into_iter().map(|r| r.to_vec()).collect();
        let g = match head {
            Head::Evidential => {
                let outs: Vec<DirichletOutput> = z.iter().map(|r| evidential_head(r)).collect();
                let loss = overall_loss_with_weights(&outs, ys, &weights[k], &anneal, Ablation::FULL).unwrap();
                total += loss.total;
                Array2::from_shape_fn(logits.dim(), |(i, j)| loss.grad_alpha[i][j] * sigmoid(z[i][j]))
            }
            Head::Softmax => {
                let mut g = Array2::zeros(logits.dim());
                for (i, r) in z.iter().enumerate() {
                    let p = softmax_head(r).prob;
                    total -= p[ys[i].class()].ln();
                    for j in 0..r.len() {
                        g[[i, j]] = p[j] - if j == ys[i].class() { 1.0 } else { 0.0 };
                    }
                }
                g
            }
        };
        if want_grad {
            params.backward_into(&trace, &g, &mut grad).unwrap();
        }
    }
    (total, grad)
}

fn end_to_end(head: Head, seed: u64) -> f64 {
    let data = toy_batch();
    let vocab = build_vocab(&data, 1).unwrap();
    let schema = LabelSchema::default();
    let c = schema.num_classes();
    let shape = ModelShape {
        vocab_size: vocab.len(),
        num_classes: c,
        window: 2,
        embed_dim: 6,
        hidden_dim: 8,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(shape, &mut rng).unwrap();
    for t in params.tensors_mut() {
        for v in t.iter_mut() {
            *v *= 5.0;
        }
    }
    for v in params.b_out.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let batch: Vec<(Vec<usize>, Vec<OneHot>)> = data
        .iter()
        .map(|s| {
            let ys = schema.label_ids(s).unwrap().into_iter().map(|k| OneHot::new(k, c).unwrap()).collect();
            (vocab.encode(&s.tokens), ys)
        })
        .collect();
    let weights: Vec<Vec<f64>> = batch
        .iter()
        .map(|(ids, ys)| {
            let (logits, _) = params.forward(ids).unwrap();
            logits
                .rows()
                .into_iter()
                .zip(ys)
                .map(|(r, y)| importance_weight(&evidential_head(&r.to_vec()), *y).unwrap())
                .collect()
        })
        .collect();
    let (_, analytic) = model_total(head, &params, &batch, &weights, true);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for t in 0..5 {
        let len = params.tensors()[t].len();
        let n = (len / 100).max(3).min(len);
        for idx in sample(&mut rng, len, n) {
            let mut up = params.clone();
            let mut down = params.clone();
            up.tensors_mut()[t][idx] += h;
            down.tensors_mut()[t][idx] -= h;
            let numeric = (model_total(head, &up, &batch, &weights, false).0
                - model_total(head, &down, &batch, &weights, false).0)
                / (2.0 * h);
            worst = worst.max(rel_err(analytic.tensors()[t][idx], numeric));
        }
    }
    worst
}

pub fn gradients() -> Verdict {
    let losses = loss_gradients();
    let model = [1, 2, 3]
        .map(|s| end_to_end(Head::Evidential, s))
        .into_iter()
        .chain([end_to_end(Head::Softmax, 4)])
        .fold(0.0, f64::max);
    Verdict::new(
        losses <= 1e-4 && model <= 1e-3,
        format!("loss gradients max rel error {losses:.1e} (≤ 1e-4), end-to-end {model:.1e} (≤ 1e-3)"),
    )
}

pub fn schedule() -> Verdict {
    let mut worst = 0.0f64;
    for lambda0 in [1e-2, 0.3, 1e-6] {
        for t_total in [2, 10, 50] {
            worst = worst
                .max((anneal_lambda2(lambda0, 0, t_total).unwrap() - lambda0).abs())
                .max((anneal_lambda2(lambda0, t_total / 2, t_total).unwrap() - lambda0.sqrt()).abs())
                .max((anneal_lambda2(lambda0, t_total, t_total).unwrap() - 1.0).abs());
        }
    }
    Verdict::new(worst <= 1e-12, format!("max deviation {worst:.1e}"))
}

fn record(gold: usize, predicted: usize, confidence: f64) -> PredictionRecord {
    PredictionRecord {
        sentence_id: 0,
        token_index: 0,
        gold,
        predicted,
        confidence,
        uncertainty: 0.5,
        origin: Origin::Id,
    }
}

pub fn metrics() -> Verdict {
    let mut records = Vec::new();
    for i in 0..60 {
        records.push(record(1, if i < 48 { 1 } else { 2 }, 0.9));
    }
    for i in 0..40 {
        records.push(record(1, if i < 28 { 1 } else { 2 }, 0.6));
    }
    let two_bin = ece(&records, 10).unwrap().0;
    let pair = auc(&[0.1, 0.4], &[0.3, 0.9], TieRule::Literal).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut mismatches = 0;
    for case in 0..1000 {
        let levels = if case % 3 == 0 { 7.0 } else { 1e6 };
        let n0 = rng.gen_range(1..=200);
        let n1 = rng.gen_range(1..=200);
        let neg: Vec<f64> = (0..n0).map(|_| (rng.gen::<f64>() * levels).floor() / levels).collect();
        let pos: Vec<f64> = (0..n1).map(|_| (rng.gen::<f64>() * levels).floor() / levels).collect();
        for rule in [TieRule::Literal, TieRule::Standard] {
            if auc_pairwise(&neg, &pos, rule).unwrap().to_bits() != auc_ranked(&neg, &pos, rule).unwrap().to_bits() {
                mismatches += 1;
            }
        }
    }
    Verdict::new(
        (two_bin - 0.10).abs() <= 1e-15 && pair == 0.75 && mismatches == 0,
        format!("two-bin ECE {two_bin}, pair AUC {pair}, fast/brute mismatches {mismatches} of 2000"),
    )
}
