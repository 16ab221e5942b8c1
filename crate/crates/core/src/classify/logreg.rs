//! Class-weighted logistic regression with an L0 penalty, fitted by
//! cyclic coordinate proximal-gradient steps with hard thresholding and
//! polished by Newton steps on the final support.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogRegConfig {
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop when the objective changes by less than this between iterations.
    pub tol: f64,
    pub newton_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            lambda: 0.01,
            max_iter: 5000,
            tol: 1e-8,
            newton_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegFit {
    /// Coefficients on the original feature scale.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Column (mean, std) used internally.
    pub standardization: Vec<(f64, f64)>,
    /// [no-stress, stress].
    pub class_weights: [f64; 2],
    pub iterations: usize,
    pub objective: f64,
}

impl LogRegFit {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    pub fn nnz(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }
}

/// Balanced class weights `N / (2 N_c)` as [no-stress, stress].
pub fn class_weights(y: &[bool]) -> Result<[f64; 2]> {
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&v| v).count() as f64;
    let neg = n - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::Train("training labels contain a single class".into()));
    }
    Ok([n / (2.0 * neg), n / (2.0 * pos)])
}

/// Weighted mean logistic loss `sum w_i l_i / sum w_i`.
pub fn weighted_log_loss(x: &[Vec<f64>], y: &[bool], sample_weight: &[f64], w: &[f64], b: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((row, &yi), &sw) in x.iter().zip(y).zip(sample_weight) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        num += sw * (softplus(z) - if yi { z } else { 0.0 });
        den += sw;
    }
    num / den
}

struct Problem {
    /// Standardized design, column-major, without the intercept column.
    cols: Vec<Vec<f64>>,
    y: Vec<f64>,
    sw: Vec<f64>,
    sw_total: f64,
    /// Columns with zero variance never enter the model.
    active: Vec<bool>,
}

impl Problem {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        let mut z = vec![b; self.n()];
        for (col, &wj) in self.cols.iter().zip(w) {
            if wj != 0.0 {
                for (zi, &v) in z.iter_mut().zip(col) {
                    *zi += wj * v;
                }
            }
        }
        z
    }

    fn loss(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.y)
            .zip(&self.sw)
            .map(|((&zi, &yi), &s)| s * (softplus(zi) - yi * zi))
            .sum::<f64>()
            / self.sw_total
    }

    /// Gradient with respect to (w, b).
    fn gradient(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let r: Vec<f64> = z
            .iter()
            .zip(&self.y)
            .zip(&self.sw)
            .map(|((&zi, &yi), &s)| s * (sigmoid(zi) - yi) / self.sw_total)
            .collect();
        let gw = self
            .cols
            .iter()
            .map(|col| col.iter().zip(&r).map(|(a, b)| a * b).sum())
            .collect();
        (gw, r.iter().sum())
    }

    /// Coordinate-wise Lipschitz constants of the loss gradient (logistic
    /// curvature is at most 1/4).
    fn coordinate_lipschitz(&self) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| {
                let m: f64 = col.iter().zip(&self.sw).map(|(v, s)| s * v * v).sum::<f64>() / self.sw_total;
                (0.25 * m).max(1e-12)
            })
            .collect()
    }

    /// d loss / d w_j for the column `col` at margins `z`.
    fn partial(&self, z: &[f64], col: Option<&[f64]>) -> f64 {
        let mut g = 0.0;
        for i in 0..self.n() {
            let r = self.sw[i] * (sigmoid(z[i]) - self.y[i]);
            g += match col {
                Some(c) => r * c[i],
                None => r,
            };
        }
        g / self.sw_total
    }
}

/// Fits the penalized model. Rows are samples; every value must be finite.
pub fn train_logreg(x: &[Vec<f64>], y: &[bool], cfg: &LogRegConfig, seed: u64) -> Result<LogRegFit> {
    if x.len() != y.len() {
        return Err(Error::Train(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let cw = class_weights(y)?;
    let p = x.first().map_or(0, |r| r.len());
    if x.iter().any(|r| r.len() != p) {
        return Err(Error::Data("ragged feature matrix".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite feature value".into()));
    }
    let n = x.len();
    let mut standardization = Vec::with_capacity(p);
    let mut cols = Vec::with_capacity(p);
    let mut active = Vec::with_capacity(p);
    for j in 0..p {
        let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let std = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        let usable = std > 1e-12 * mean.abs().max(1.0);
        let scale = if usable { std } else { 1.0 };
        cols.push(if usable {
            col.iter().map(|v| (v - mean) / scale).collect()
        } else {
            vec![0.0; n]
        });
        standardization.push((mean, scale));
        active.push(usable);
    }
    let sw: Vec<f64> = y.iter().map(|&v| cw[usize::from(v)]).collect();
    let prob = Problem {
        cols,
        y: y.iter().map(|&v| f64::from(u8::from(v))).collect(),
        sw_total: sw.iter().sum(),
        sw,
        active,
    };

    let lip = prob.coordinate_lipschitz();
    let objective = |z: &[f64], w: &[f64]| prob.loss(z) + cfg.lambda * w.iter().filter(|&&v| v != 0.0).count() as f64;

    let pos_mass: f64 = prob.y.iter().zip(&prob.sw).map(|(a, b)| a * b).sum::<f64>() / prob.sw_total;
    let mut b = (pos_mass / (1.0 - pos_mass)).ln();
    let mut w = vec![0.0; p];
    let mut z = prob.margins(&w, b);
    let mut obj = objective(&z, &w);
    let mut order: Vec<usize> = (0..p).filter(|&j| prob.active[j]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        order.shuffle(&mut rng);
        for &j in &order {
            let col = &prob.cols[j];
            let v = w[j] - prob.partial(&z, Some(col)) / lip[j];
            // the step's loss reduction against dropping the weight is L/2 v^2
            let next = if 0.5 * lip[j] * v * v > cfg.lambda { v } else { 0.0 };
            let delta = next - w[j];
            if delta != 0.0 {
                for (zi, &x) in z.iter_mut().zip(col) {
                    *zi += delta * x;
                }
                w[j] = next;
            }
        }
        let db = -prob.partial(&z, None) / 0.25;
        b += db;
        z.iter_mut().for_each(|zi| *zi += db);
        let next = objective(&z, &w);
        let done = (obj - next).abs() < cfg.tol;
        obj = next;
        if done {
            break;
        }
    }

    newton_polish(&prob, &mut w, &mut b, cfg.newton_iter);
    z = prob.margins(&w, b);
    obj = objective(&z, &w);

    let weights: Vec<f64> = w
        .iter()
        .zip(&standardization)
        .map(|(&wj, &(_, s))| if wj == 0.0 { 0.0 } else { wj / s })
        .collect();
    let intercept = b - w
        .iter()
        .zip(&standardization)
        .map(|(&wj, &(m, s))| wj * m / s)
        .sum::<f64>();
    Ok(LogRegFit {
        weights,
        intercept,
        standardization,
        class_weights: cw,
        iterations,
        objective: obj,
    })
}

/// Damped Newton iterations on the smooth loss over the current support
/// (nonzero weights plus intercept). Never increases the loss.
fn newton_polish(prob: &Problem, w: &mut [f64], b: &mut f64, max_iter: usize) {
    let support: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
    let k = support.len() + 1;
    let mut z = prob.margins(w, *b);
    let mut loss = prob.loss(&z);
    for _ in 0..max_iter {
        let (gw, gb) = prob.gradient(&z);
        let mut g: Vec<f64> = support.iter().map(|&j| gw[j]).collect();
        g.push(gb);
        let d: Vec<f64> = z
            .iter()
            .zip(&prob.sw)
            .map(|(&zi, &s)| {
                let q = sigmoid(zi);
                s * q * (1.0 - q) / prob.sw_total
            })
            .collect();
        let col = |a: usize| -> Option<&Vec<f64>> { support.get(a).map(|&j| &prob.cols[j]) };
        let mut h = vec![0.0; k * k];
        for a in 0..k {
            for c in a..k {
                let v: f64 = match (col(a), col(c)) {
                    (Some(xa), Some(xc)) => xa.iter().zip(xc).zip(&d).map(|((p, q), r)| p * q * r).sum(),
                    (Some(xa), None) | (None, Some(xa)) => xa.iter().zip(&d).map(|(p, r)| p * r).sum(),
                    (None, None) => d.iter().sum(),
                };
                h[a * k + c] = v;
                h[c * k + a] = v;
            }
        }
        let trace: f64 = (0..k).map(|a| h[a * k + a]).sum();
        for a in 0..k {
            h[a * k + a] += 1e-10 * trace.max(1e-300);
        }
        let Some(delta) = cholesky_solve(&h, &g, k) else {
            return;
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let mut w2 = w.to_vec();
            for (a, &j) in support.iter().enumerate() {
                w2[j] -= t * delta[a];
            }
            let b2 = *b - t * delta[k - 1];
            let z2 = prob.margins(&w2, b2);
            let l2 = prob.loss(&z2);
            if l2 <= loss {
                let gain = loss - l2;
                w.copy_from_slice(&w2);
                *b = b2;
                z = z2;
                loss = l2;
                improved = gain > 0.0;
                break;
            }
            t *= 0.5;
        }
        let step_norm = t * delta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !improved || step_norm < 1e-12 {
            return;
        }
    }
}

fn cholesky_solve(h: &[f64], g: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = h[i * k + j];
            for m in 0..j {
                s -= l[i * k + m] * l[j * k + m];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    let mut y = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|m| l[i * k + m] * y[m]).sum();
        y[i] = (g[i] - s) / l[i * k + i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|m| l[m * k + i] * x[m]).sum();
        x[i] = (y[i] - s) / l[i * k + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let pos = i % 3 == 0;
            let c = if pos { sep / 2.0 } else { -sep / 2.0 };
            x.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
            y.push(pos);
        }
        (x, y)
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            train_logreg(&x, &[true, true], &LogRegConfig::default(), 0),
            Err(Error::Train(_))
        ));
    }

    #[test]
    fn non_finite_is_rejected() {
        let x = vec![vec![1.0], vec![f64::NAN]];
        assert!(matches!(
            train_logreg(&x, &[true, false], &LogRegConfig::default(), 0),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn large_lambda_leaves_balanced_intercept() {
        let (x, y) = blobs(90, 1.0, 3);
        let cfg = LogRegConfig {
            lambda: 100.0,
            ..Default::default()
        };
        let fit = train_logreg(&x, &y, &cfg, 1).unwrap();
        assert_eq!(fit.nnz(), 0);
        assert!(fit.intercept.abs() < 1e-9);
    }

    #[test]
    fn weighting_equals_duplication() {
        // 10 positives, 20 negatives; duplicating positives balances classes
        let (x, y) = blobs(30, 1.0, 5);
        let cw = class_weights(&y).unwrap();
        let sw: Vec<f64> = y.iter().map(|&v| cw[usize::from(v)]).collect();
        let mut xd = x.clone();
        let mut yd = y.clone();
        for (r, &v) in x.iter().zip(&y) {
            if v {
                xd.push(r.clone());
                yd.push(true);
            }
        }
        let ones = vec![1.0; xd.len()];
        for (w, b) in [([0.3, -0.2], 0.1), ([1.0, 2.0], -0.5)] {
            let a = weighted_log_loss(&x, &y, &sw, &w, b);
            let d = weighted_log_loss(&xd, &yd, &ones, &w, b);
            assert!((a - d).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_solves_spd() {
        let h = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&h, &[2.0, 1.0], 2).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-12);
    }
}
