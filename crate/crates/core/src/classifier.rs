//! Binary logistic regression over hashed bag-of-lemma features.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::text::{content_lemmas, lemmas};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_WIDTH_BITS: u32 = 18;
const MODEL_VERSION: u32 = 1;

/// Sparse feature vector: (slot, value) with distinct slots in ascending order.
pub type Features<S> = Vec<(u32, S)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Example<S> {
    pub features: Features<S>,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TrainConfig<S> {
    pub learning_rate: S,
    pub epochs: usize,
    pub l2: S,
    pub seed: u64,
    pub width_bits: u32,
}

impl<S: Scalar> Default for TrainConfig<S> {
    fn default() -> Self {
        TrainConfig {
            learning_rate: S::one(),
            epochs: 200,
            l2: S::of(1e-4),
            seed: 0,
            width_bits: DEFAULT_WIDTH_BITS,
        }
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn slot(name: &str, width_bits: u32) -> u32 {
    (fnv1a(name.as_bytes()) & ((1u64 << width_bits) - 1)) as u32
}

/// Hashes named presence features and scales them to unit L2 norm.
pub fn hash_features<S: Scalar>(names: impl IntoIterator<Item = String>, width_bits: u32) -> Features<S> {
    let slots: BTreeSet<u32> = names.into_iter().map(|n| slot(&n, width_bits)).collect();
    if slots.is_empty() {
        return Vec::new();
    }
    let v = S::one() / S::of_usize(slots.len()).sqrt();
    slots.into_iter().map(|s| (s, v)).collect()
}

/// Unigram and adjacent-bigram lemma presence.
pub fn text_features<S: Scalar>(text: &str, width_bits: u32) -> Features<S> {
    let ls = lemmas(text);
    let mut names: Vec<String> = ls.iter().map(|l| format!("u:{l}")).collect();
    names.extend(ls.windows(2).map(|w| format!("b:{}|{}", w[0], w[1])));
    hash_features(names, width_bits)
}

/// Features of a (post, response) pair: shared content lemmas, lemma
/// crosses and a capped overlap count.
pub fn pair_features<S: Scalar>(post: &str, response: &str, width_bits: u32) -> Features<S> {
    let p: BTreeSet<String> = content_lemmas(post).into_iter().collect();
    let r: BTreeSet<String> = content_lemmas(response).into_iter().collect();
    let shared: Vec<&String> = p.intersection(&r).collect();
    let mut names: Vec<String> = shared.iter().map(|l| format!("s:{l}")).collect();
    names.push(format!("ov:{}", shared.len().min(4)));
    for a in &p {
        for b in &r {
            names.push(format!("x:{a}|{b}"));
        }
    }
    hash_features(names, width_bits)
}

fn sigmoid<S: Scalar>(z: S) -> S {
    let p = if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    };
    let eps = S::epsilon();
    p.max(eps).min(S::one() - eps)
}

/// `ln(1 + e^z)` without overflow.
fn softplus<S: Scalar>(z: S) -> S {
    z.max(S::zero()) + (S::one() + (-z.abs()).exp()).ln()
}

fn dot<S: Scalar>(weights: &[S], x: &[(u32, S)]) -> S {
    x.iter().map(|&(i, v)| weights[i as usize] * v).sum()
}

/// Mean logistic loss plus `l2 / 2 * |w|^2` (bias unregularized).
pub fn objective<S: Scalar>(weights: &[S], bias: S, examples: &[Example<S>], l2: S) -> S {
    let n = S::of_usize(examples.len());
    let data: S = examples
        .iter()
        .map(|e| {
            let z = dot(weights, &e.features) + bias;
            let y = if e.label { S::one() } else { S::zero() };
            softplus(z) - y * z
        })
        .sum();
    let reg: S = weights.iter().map(|&w| w * w).sum();
    data / n + l2 * reg / S::of(2.0)
}

/// Analytic gradient of [`objective`] with respect to weights and bias.
pub fn gradient<S: Scalar>(weights: &[S], bias: S, examples: &[Example<S>], l2: S) -> (Vec<S>, S) {
    let n = S::of_usize(examples.len());
    let mut gw: Vec<S> = weights.iter().map(|&w| l2 * w).collect();
    let mut gb = S::zero();
    for e in examples {
        let z = dot(weights, &e.features) + bias;
        let y = if e.label { S::one() } else { S::zero() };
        // unclamped residual keeps the gradient exact
        let p = if z >= S::zero() {
            S::one() / (S::one() + (-z).exp())
        } else {
            z.exp() / (S::one() + z.exp())
        };
        let r = (p - y) / n;
        gb = gb + r;
        for &(i, v) in &e.features {
            gw[i as usize] = gw[i as usize] + r * v;
        }
    }
    (gw, gb)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel<S> {
    width_bits: u32,
    weights: BTreeMap<u32, S>,
    bias: S,
    one_class: bool,
    config: TrainConfig<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport<S> {
    /// Objective before training followed by the value after each epoch.
    pub losses: Vec<S>,
    pub one_class: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct ModelFile<S> {
    version: u32,
    width_bits: u32,
    bias: S,
    one_class: bool,
    weights: Vec<(u32, S)>,
    config: TrainConfig<S>,
}

impl<S: Scalar> LinearModel<S> {
    /// All weights and the bias zero: predicts 0.5 everywhere.
    pub fn zeros(width_bits: u32) -> Self {
        LinearModel {
            width_bits,
            weights: BTreeMap::new(),
            bias: S::zero(),
            one_class: false,
            config: TrainConfig {
                width_bits,
                ..TrainConfig::default()
            },
        }
    }

    pub fn from_parts(width_bits: u32, weights: impl IntoIterator<Item = (u32, S)>, bias: S) -> Self {
        LinearModel {
            weights: weights.into_iter().filter(|(_, w)| *w != S::zero()).collect(),
            bias,
            ..Self::zeros(width_bits)
        }
    }

    /// Full-batch gradient descent from the prior model (zero weights, bias at
    /// the smoothed log-odds of the positive rate). One-class data returns the
    /// prior untouched with the flag set.
    pub fn train_examples(examples: &[Example<S>], cfg: &TrainConfig<S>) -> Result<(Self, TrainReport<S>)> {
        if examples.is_empty() {
            return Err(Error::NoExamples);
        }
        let n = examples.len();
        let pos = examples.iter().filter(|e| e.label).count();
        let prior = S::of((pos as f64 + 1.0) / (n as f64 + 2.0));
        let mut bias = (prior / (S::one() - prior)).ln();
        let one_class = pos == 0 || pos == n;

        // Train on a compact index space of the slots that occur.
        let active: Vec<u32> = examples
            .iter()
            .flat_map(|e| e.features.iter().map(|&(i, _)| i))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let compact: BTreeMap<u32, u32> = active.iter().enumerate().map(|(c, &i)| (i, c as u32)).collect();
        let local: Vec<Example<S>> = examples
            .iter()
            .map(|e| Example {
                features: e.features.iter().map(|&(i, v)| (compact[&i], v)).collect(),
                label: e.label,
            })
            .collect();
        let mut w = vec![S::zero(); active.len()];
        let mut losses = vec![objective(&w, bias, &local, cfg.l2)];
        if !one_class {
            for _ in 0..cfg.epochs {
                let (gw, gb) = gradient(&w, bias, &local, cfg.l2);
                for (wi, gi) in w.iter_mut().zip(gw) {
                    *wi = *wi - cfg.learning_rate * gi;
                }
                bias = bias - cfg.learning_rate * gb;
                losses.push(objective(&w, bias, &local, cfg.l2));
            }
        }
        let model = LinearModel {
            width_bits: cfg.width_bits,
            weights: active.into_iter().zip(w).filter(|(_, x)| *x != S::zero()).collect(),
            bias,
            one_class,
            config: cfg.clone(),
        };
        Ok((model, TrainReport { losses, one_class }))
    }

    /// Trains on raw texts with [`text_features`].
    pub fn train(examples: &[(String, bool)], cfg: &TrainConfig<S>) -> Result<(Self, TrainReport<S>)> {
        let ex: Vec<Example<S>> = examples
            .iter()
            .map(|(t, y)| Example {
                features: text_features(t, cfg.width_bits),
                label: *y,
            })
            .collect();
        Self::train_examples(&ex, cfg)
    }

    pub fn width_bits(&self) -> u32 {
        self.width_bits
    }

    pub fn bias(&self) -> S {
        self.bias
    }

    pub fn weight(&self, slot: u32) -> S {
        self.weights.get(&slot).copied().unwrap_or_else(S::zero)
    }

    pub fn is_one_class(&self) -> bool {
        self.one_class
    }

    pub fn score(&self, x: &[(u32, S)]) -> S {
        self.bias + x.iter().map(|&(i, v)| self.weight(i) * v).sum::<S>()
    }

    /// Sigmoid of the score, kept strictly inside (0, 1).
    pub fn predict_features(&self, x: &[(u32, S)]) -> S {
        sigmoid(self.score(x))
    }

    pub fn predict(&self, text: &str) -> S {
        self.predict_features(&text_features(text, self.width_bits))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            width_bits: self.width_bits,
            bias: self.bias,
            one_class: self.one_class,
            weights: self.weights.iter().map(|(&i, &w)| (i, w)).collect(),
            config: self.config.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let f: ModelFile<S> = serde_json::from_str(json).map_err(|e| Error::Malformed {
            line: e.line(),
            message: e.to_string(),
        })?;
        if f.version != MODEL_VERSION {
            return Err(Error::Config(format!("unsupported model version {}", f.version)));
        }
        Ok(LinearModel {
            width_bits: f.width_bits,
            weights: f.weights.into_iter().collect(),
            bias: f.bias,
            one_class: f.one_class,
            config: f.config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_predicts_half() {
        let m = LinearModel::<f64>::zeros(8);
        assert_eq!(m.predict("anything at all"), 0.5);
    }

    #[test]
    fn sigmoid_of_two() {
        let m = LinearModel::<f64>::from_parts(4, [(1, 1.5), (2, 0.5)], 0.0);
        let p = m.predict_features(&[(1, 1.0), (2, 1.0)]);
        assert!((p - 0.880_797_077_977_882_3).abs() < 1e-12);
    }

    #[test]
    fn unseen_features_give_sigmoid_of_bias() {
        let data = vec![("red apple".to_string(), true), ("green leaf".to_string(), false)];
        let (m, _) = LinearModel::<f64>::train(&data, &TrainConfig::default()).unwrap();
        let expect = 1.0 / (1.0 + (-m.bias()).exp());
        assert!((m.predict("zyzzyva") - expect).abs() < 1e-12);
    }

    #[test]
    fn one_class_and_zero_epochs_give_prior() {
        let data = vec![("a".to_string(), true), ("b".to_string(), true)];
        let (m, r) = LinearModel::<f64>::train(&data, &TrainConfig::default()).unwrap();
        assert!(r.one_class && m.is_one_class());
        assert!((m.predict("a") - 0.75).abs() < 1e-12);

        let data = vec![("a".to_string(), true), ("b".to_string(), false), ("c".to_string(), false)];
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (m, _) = LinearModel::<f64>::train(&data, &cfg).unwrap();
        assert!((m.predict("a") - 0.4).abs() < 1e-12);
        assert!(matches!(LinearModel::<f64>::train(&[], &cfg), Err(Error::NoExamples)));
    }

    #[test]
    fn loss_never_increases() {
        let data: Vec<(String, bool)> = (0..40)
            .map(|i| (format!("word{} shared {}", i % 7, if i % 3 == 0 { "peel" } else { "stone" }), i % 3 == 0))
            .collect();
        let (_, r) = LinearModel::<f64>::train(&data, &TrainConfig::default()).unwrap();
        for w in r.losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let data = vec![("red apple".to_string(), true), ("green leaf".to_string(), false)];
        let (m, _) = LinearModel::<f64>::train(&data, &TrainConfig::default()).unwrap();
        let back = LinearModel::<f64>::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
