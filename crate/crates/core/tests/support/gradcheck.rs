//! Central finite-difference checks for every differentiable operation.
//!
//! Each `check_*` function draws one random small instance, compares the
//! analytic gradient against central differences and returns the worst
//! per-element relative error.

#![allow(dead_code)]

use kbsqa_core::loss::{ranking_gradients, ranking_loss, well_order_gradients, well_order_term};
use kbsqa_core::matcher::{MatcherConfig, MatcherMode, Vocabulary};
use kbsqa_core::nn::{
    adaptive_max_pool1, adaptive_max_pool1_backward, affine, affine_backward, conv1d,
    conv1d_backward, embed, embed_backward, relu, relu_backward, transpose, Conv1dSpec, Tensor,
};
use kbsqa_core::{Matcher, ScoreGroup};
use rand::Rng;

pub const H: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// Relative error floor; below it differences are compared absolutely.
const FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(FLOOR))
        .fold(0.0, f64::max)
}

pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + H;
            let up = f(&probe);
            probe[i] = x[i] - H;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn uniform<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn tensor<R: Rng>(rng: &mut R, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, uniform(rng, n)).unwrap()
}

/// Values that are pairwise at least `gap` apart and at least `gap` away
/// from zero, so max and relu stay differentiable under the probe.
fn separated<R: Rng>(rng: &mut R, n: usize, gap: f64) -> Vec<f64> {
    loop {
        let v = uniform(rng, n);
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let spread = sorted.windows(2).all(|w| w[1] - w[0] > gap);
        if spread && v.iter().all(|x| x.abs() > gap) {
            return v;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_embed<R: Rng>(rng: &mut R) -> f64 {
    let (rows, dim) = (rng.random_range(2..6), rng.random_range(1..5));
    let ids: Vec<u32> = (0..rng.random_range(1..7))
        .map(|_| rng.random_range(0..rows as u32))
        .collect();
    let mut table = tensor(rng, &[rows, dim]);
    let c = uniform(rng, ids.len() * dim);
    embed_backward(&ids, &c, &mut table);
    let mut f = |v: &[f64]| {
        dot(
            embed(&ids, &Tensor::new(&[rows, dim], v.to_vec()).unwrap())
                .unwrap()
                .values(),
            &c,
        )
    };
    relative_error(
        table.grad().unwrap(),
        &central_difference(&mut f, table.values()),
    )
}

pub fn check_transpose<R: Rng>(rng: &mut R) -> f64 {
    let (r, c_) = (rng.random_range(1..6), rng.random_range(1..6));
    let x = tensor(rng, &[r, c_]);
    let c = uniform(rng, r * c_);
    let analytic = transpose(&Tensor::new(&[c_, r], c.clone()).unwrap()).unwrap();
    let mut f = |v: &[f64]| {
        dot(
            transpose(&Tensor::new(&[r, c_], v.to_vec()).unwrap())
                .unwrap()
                .values(),
            &c,
        )
    };
    relative_error(analytic.values(), &central_difference(&mut f, x.values()))
}

fn random_spec<R: Rng>(rng: &mut R) -> (Conv1dSpec, usize) {
    let spec = Conv1dSpec {
        in_channels: rng.random_range(1..4),
        out_channels: rng.random_range(1..4),
        kernel_size: rng.random_range(1..4),
        stride: rng.random_range(1..3),
        padding: rng.random_range(0..2),
    };
    let min_len = spec.kernel_size.saturating_sub(2 * spec.padding).max(1);
    (spec, rng.random_range(min_len..min_len + 5))
}

/// Worst error over the input, weight and bias gradients.
pub fn check_conv1d<R: Rng>(rng: &mut R) -> f64 {
    let (spec, len) = random_spec(rng);
    let x = tensor(rng, &[spec.in_channels, len]);
    let mut w = tensor(rng, &spec.weight_shape());
    let mut b = tensor(rng, &[spec.out_channels]);
    let out_len = spec.output_len(len).unwrap();
    let c = uniform(rng, spec.out_channels * out_len);
    let dx = conv1d_backward(&x, &spec, &mut w, &mut b, &c);

    let xs = x.shape().to_vec();
    let ws = w.shape().to_vec();
    let (wv, bv, xv) = (
        w.values().to_vec(),
        b.values().to_vec(),
        x.values().to_vec(),
    );
    let run = |x: &[f64], w: &[f64], b: &[f64]| {
        let x = Tensor::new(&xs, x.to_vec()).unwrap();
        let w = Tensor::new(&ws, w.to_vec()).unwrap();
        let b = Tensor::new(&[spec.out_channels], b.to_vec()).unwrap();
        dot(conv1d(&x, &spec, &w, &b).unwrap().values(), &c)
    };
    let nx = central_difference(&mut |v| run(v, &wv, &bv), &xv);
    let nw = central_difference(&mut |v| run(&xv, v, &bv), &wv);
    let nb = central_difference(&mut |v| run(&xv, &wv, v), &bv);
    relative_error(&dx, &nx)
        .max(relative_error(w.grad().unwrap(), &nw))
        .max(relative_error(b.grad().unwrap(), &nb))
}

pub fn check_relu<R: Rng>(rng: &mut R) -> f64 {
    let n = rng.random_range(1..10);
    let x = Tensor::new(&[n], separated(rng, n, 1e-3)).unwrap();
    let c = uniform(rng, n);
    let analytic = relu_backward(&x, &c);
    let mut f = |v: &[f64]| dot(relu(&Tensor::new(&[n], v.to_vec()).unwrap()).values(), &c);
    relative_error(&analytic, &central_difference(&mut f, x.values()))
}

pub fn check_max_pool<R: Rng>(rng: &mut R) -> f64 {
    let (channels, len) = (rng.random_range(1..4), rng.random_range(1..6));
    let x = Tensor::new(&[channels, len], separated(rng, channels * len, 1e-3)).unwrap();
    let c = uniform(rng, channels);
    let (_, argmax) = adaptive_max_pool1(&x).unwrap();
    let analytic = adaptive_max_pool1_backward(&argmax, len, &c);
    let mut f = |v: &[f64]| {
        dot(
            adaptive_max_pool1(&Tensor::new(&[channels, len], v.to_vec()).unwrap())
                .unwrap()
                .0
                .values(),
            &c,
        )
    };
    relative_error(&analytic, &central_difference(&mut f, x.values()))
}

pub fn check_affine<R: Rng>(rng: &mut R) -> f64 {
    let (k, c_) = (rng.random_range(1..4), rng.random_range(1..6));
    let x = tensor(rng, &[c_]);
    let mut w = tensor(rng, &[k, c_]);
    let mut b = tensor(rng, &[k]);
    let c = uniform(rng, k);
    let dx = affine_backward(&x, &mut w, &mut b, &c);
    let (xv, wv, bv) = (
        x.values().to_vec(),
        w.values().to_vec(),
        b.values().to_vec(),
    );
    let run = |x: &[f64], w: &[f64], b: &[f64]| {
        let out = affine(
            &Tensor::new(&[c_], x.to_vec()).unwrap(),
            &Tensor::new(&[k, c_], w.to_vec()).unwrap(),
            &Tensor::new(&[k], b.to_vec()).unwrap(),
        );
        dot(out.unwrap().values(), &c)
    };
    let nx = central_difference(&mut |v| run(v, &wv, &bv), &xv);
    let nw = central_difference(&mut |v| run(&xv, v, &bv), &wv);
    let nb = central_difference(&mut |v| run(&xv, &wv, v), &bv);
    relative_error(&dx, &nx)
        .max(relative_error(w.grad().unwrap(), &nw))
        .max(relative_error(b.grad().unwrap(), &nb))
}

fn tiny_matcher<R: Rng>(rng: &mut R) -> Matcher {
    let vocabulary =
        Vocabulary::from_symbols(["a", "b", "c", "d"].map(String::from).to_vec()).unwrap();
    let embed_dim = 3;
    let conv1 = Conv1dSpec {
        in_channels: embed_dim,
        out_channels: 4,
        kernel_size: 3,
        stride: 1,
        padding: 1,
    };
    let conv2 = Conv1dSpec {
        in_channels: 4,
        out_channels: 3,
        kernel_size: 3,
        stride: 1,
        padding: 1,
    };
    let config = MatcherConfig {
        mode: MatcherMode::Word,
        embed_dim,
        conv1,
        conv2,
        vocabulary,
    };
    Matcher::new(config, rng).unwrap()
}

/// Whole-network check through every layer. Instances where a probe would
/// cross a relu kink or change a max-pool argmax are redrawn.
pub fn check_matcher<R: Rng>(rng: &mut R) -> f64 {
    let words = ["a", "b", "c", "d", "zz"];
    loop {
        let mut m = tiny_matcher(rng);
        let pick = |rng: &mut R, n: usize| -> Vec<&str> {
            (0..n).map(|_| words[rng.random_range(0..5)]).collect()
        };
        let (nl, nr) = (rng.random_range(1..4), rng.random_range(1..4));
        let left = pick(rng, nl);
        let right = pick(rng, nr);
        let (_, cache) = m.forward(&left, &right).unwrap();
        m.backward(&cache, 1.0);
        let base = m.clone();
        let mut worst: f64 = 0.0;
        let mut smooth = true;
        for p in 0..7 {
            let values = base.params()[p].values().to_vec();
            let mut f = |v: &[f64]| {
                let mut probe = base.clone();
                probe.params_mut()[p].values_mut().copy_from_slice(v);
                probe.forward(&left, &right).unwrap().0
            };
            let numeric = central_difference(&mut f, &values);
            // A kink inside the probe shows up as a one-sided difference
            // far from the two-sided one; redraw in that case.
            for i in 0..values.len() {
                let mut v = values.clone();
                let at = f(&v);
                v[i] += H;
                let up = (f(&v) - at) / H;
                if ((up - numeric[i]).abs()) > 1e-3 * numeric[i].abs().max(1.0) {
                    smooth = false;
                }
            }
            worst = worst.max(relative_error(
                base.params()[p].grad().unwrap_or(&vec![0.0; values.len()]),
                &numeric,
            ));
        }
        if smooth {
            return worst;
        }
    }
}

fn group_from(v: &[f64], n1: usize) -> ScoreGroup {
    ScoreGroup::new(v[..n1].to_vec(), v[n1..].to_vec())
}

/// Draws a group whose hinge arguments all sit at least `gap` from 0.
fn smooth_group<R: Rng>(rng: &mut R, gap: f64, pairwise: bool, lambda: f64) -> ScoreGroup {
    loop {
        let (n1, n2) = (rng.random_range(1..6), rng.random_range(1..6));
        let g = ScoreGroup::new(uniform(rng, n1), uniform(rng, n2));
        let ok = if pairwise {
            g.positives
                .iter()
                .all(|p| g.negatives.iter().all(|n| (n - p + lambda).abs() > gap))
        } else {
            kbsqa_core::loss::well_order_aggregate(&g, lambda).abs() > gap
        };
        if ok {
            return g;
        }
    }
}

pub fn check_well_order<R: Rng>(rng: &mut R) -> f64 {
    let lambda = 0.1;
    let g = smooth_group(rng, 1e-3, false, lambda);
    let n1 = g.positives.len();
    let grads = well_order_gradients(&g, lambda);
    let analytic: Vec<f64> = grads
        .positives
        .iter()
        .chain(&grads.negatives)
        .copied()
        .collect();
    let flat: Vec<f64> = g.positives.iter().chain(&g.negatives).copied().collect();
    let mut f = |v: &[f64]| well_order_term(&group_from(v, n1), lambda);
    relative_error(&analytic, &central_difference(&mut f, &flat))
}

pub fn check_ranking<R: Rng>(rng: &mut R) -> f64 {
    let lambda = 0.1;
    let g = smooth_group(rng, 1e-3, true, lambda);
    let n1 = g.positives.len();
    let grads = ranking_gradients(&g, lambda);
    let analytic: Vec<f64> = grads
        .positives
        .iter()
        .chain(&grads.negatives)
        .copied()
        .collect();
    let flat: Vec<f64> = g.positives.iter().chain(&g.negatives).copied().collect();
    let mut f = |v: &[f64]| ranking_loss(&group_from(v, n1), lambda);
    relative_error(&analytic, &central_difference(&mut f, &flat))
}

/// Every check with its name.
/// A named check returning the worst relative error of one random instance.
pub type Check<R> = (&'static str, fn(&mut R) -> f64);

pub fn all_checks<R: Rng>() -> [Check<R>; 9] {
    [
        ("embed", check_embed::<R>),
        ("transpose", check_transpose::<R>),
        ("conv1d", check_conv1d::<R>),
        ("relu", check_relu::<R>),
        ("adaptive_max_pool1", check_max_pool::<R>),
        ("affine", check_affine::<R>),
        ("matcher", check_matcher::<R>),
        ("well_order_loss", check_well_order::<R>),
        ("ranking_loss", check_ranking::<R>),
    ]
}
