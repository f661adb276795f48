//! Linear maximum-margin classifier trained with Pegasos-style stochastic
//! subgradient descent on the regularised hinge loss.
//!
//! The bias is learned as the weight of a constant input of 1, so it is
//! regularised and projected together with the weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl LinearModel {
    pub fn decision(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                got: row.len(),
            });
        }
        Ok(dot(&self.weights, row) + self.bias)
    }

    /// Strictly positive margin means the positive class.
    pub fn predict(&self, row: &[f64]) -> Result<bool> {
        Ok(self.decision(row)? > 0.0)
    }

    /// `lambda/2 * (|w|^2 + b^2) + mean hinge loss` over the given rows.
    pub fn objective(&self, x: &FeatureMatrix, y: &[bool]) -> Result<f64> {
        let mut loss = 0.0;
        for (row, &label) in x.rows().zip(y) {
            let sign = if label { 1.0 } else { -1.0 };
            loss += (1.0 - sign * self.decision(row)?).max(0.0);
        }
        let norm2 = dot(&self.weights, &self.weights) + self.bias * self.bias;
        Ok(self.lambda / 2.0 * norm2 + loss / y.len().max(1) as f64)
    }

    pub fn weight_norm(&self) -> f64 {
        dot(&self.weights, &self.weights).sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn svm_predict(model: &LinearModel, row: &[f64]) -> Result<bool> {
    model.predict(row)
}

pub fn svm_fit(x: &FeatureMatrix, y: &[bool], params: &SvmParams) -> Result<LinearModel> {
    if x.n_docs != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.n_docs,
            got: y.len(),
        });
    }
    let pos = y.iter().filter(|&&l| l).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::DegenerateFold(format!(
            "SVM needs both classes ({} rows, {pos} positive)",
            y.len()
        )));
    }
    if x.n_features == 0 {
        return Err(Error::Config("SVM needs at least one feature".into()));
    }
    if !(params.lambda > 0.0) {
        return Err(Error::Config(format!("lambda must be positive, got {}", params.lambda)));
    }

    let n = x.n_features;
    let lambda = params.lambda;
    let radius = 1.0 / lambda.sqrt();
    let row_norm2: Vec<f64> = x.rows().map(|r| dot(r, r) + 1.0).collect();

    // w = scale * v, with the bias stored as v[n]
    let mut v = vec![0.0; n + 1];
    let mut scale = 1.0;
    let mut v_norm2 = 0.0;
    let mut order: Vec<usize> = (0..x.n_docs).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut t = 0u64;

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(i);
            let label = if y[i] { 1.0 } else { -1.0 };
            let vx = dot(&v[..n], row) + v[n];
            let margin = label * scale * vx;

            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|c| *c = 0.0);
                scale = 1.0;
                v_norm2 = 0.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let a = eta * label / scale;
                let vx_now = if v_norm2 == 0.0 { 0.0 } else { vx };
                for (c, &r) in v[..n].iter_mut().zip(row) {
                    *c += a * r;
                }
                v[n] += a;
                v_norm2 += 2.0 * a * vx_now + a * a * row_norm2[i];
            }
            let norm = scale * v_norm2.max(0.0).sqrt();
            if norm > radius {
                scale *= radius / norm;
            }
            if scale < 1e-100 {
                v.iter_mut().for_each(|c| *c *= scale);
                v_norm2 = dot(&v, &v);
                scale = 1.0;
            }
        }
    }

    let weights = v[..n].iter().map(|c| c * scale).collect();
    Ok(LinearModel {
        weights,
        bias: v[n] * scale,
        lambda,
        epochs: params.epochs,
        seed: params.seed,
    })
}
