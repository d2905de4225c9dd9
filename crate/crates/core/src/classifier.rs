//! Extreme learning machine: a single hidden layer with random input
//! weights whose output weights come from a least-squares pseudoinverse
//! solve.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
pub use crate::evaluation::ConfusionCounts;
use crate::evaluation::{classifier_measures, ClassifierMeasures};

/// Output class of a band crop. Index 0 is graphics, index 1 natural.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Class {
    Graphics,
    Natural,
}

impl Class {
    pub const ALL: [Class; 2] = [Class::Graphics, Class::Natural];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Class> {
        Class::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    /// `1 / (1 + exp(-(a.x + b)))`
    #[default]
    Sigmoid,
    /// `exp(-(b |x - a|)^2)`
    Rbf,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Rbf => "rbf",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "rbf" => Ok(Activation::Rbf),
            _ => Err(Error::InvalidParameter("activation must be sigmoid or rbf")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ElmConfig {
    pub hidden: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ElmConfig {
    fn default() -> Self {
        ElmConfig {
            hidden: 1000,
            activation: Activation::Sigmoid,
            seed: 0,
        }
    }
}

/// Feature vectors with their classes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    samples: Vec<(Vec<f64>, Class)>,
}

impl TrainingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: Vec<(Vec<f64>, Class)>) -> Result<Self> {
        let mut set = TrainingSet::new();
        for (x, t) in samples {
            set.push(x, t)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: Vec<f64>, t: Class) -> Result<()> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: x.len(),
                });
            }
        }
        if x.is_empty() {
            return Err(Error::InvalidParameter("feature vectors must not be empty"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("feature values must be finite"));
        }
        self.samples.push((x, t));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.0.len())
    }

    pub fn samples(&self) -> &[(Vec<f64>, Class)] {
        &self.samples
    }

    pub fn count(&self, class: Class) -> usize {
        self.samples.iter().filter(|s| s.1 == class).count()
    }

    fn subset(&self, idx: &[usize]) -> TrainingSet {
        TrainingSet {
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}

/// Anything that maps a feature vector to a class.
pub trait BandClassifier {
    fn input_dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<Class>;
}

/// Trained network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    /// L x d, row `i` is `a_i`.
    input_weights: DMatrix<f64>,
    biases: DVector<f64>,
    /// L x 2.
    output_weights: DMatrix<f64>,
    activation: Activation,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

fn gaussian(z: f64) -> f64 {
    libm::exp(-z * z)
}

/// Moore-Penrose pseudoinverse via SVD, singular values below
/// `eps * max(rows, cols) * sigma_max` treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.is_empty() {
        return Err(Error::InsufficientData);
    }
    let svd = m.clone().svd(true, true);
    let cutoff = svd_cutoff(&svd.singular_values, m.nrows(), m.ncols());
    svd.pseudo_inverse(cutoff).map_err(|_| Error::SvdFailed)
}

fn svd_cutoff(sigma: &DVector<f64>, rows: usize, cols: usize) -> f64 {
    let max = sigma.iter().copied().fold(0.0, f64::max);
    f64::EPSILON * rows.max(cols) as f64 * max
}

/// Least-squares minimum-norm solution of `h * beta = t`.
fn pinv_solve(h: DMatrix<f64>, t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = h.shape();
    let svd = h.svd(true, true);
    let cutoff = svd_cutoff(&svd.singular_values, rows, cols);
    svd.solve(t, cutoff).map_err(|_| Error::SvdFailed)
}

fn standardization(data: &TrainingSet, d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = data.len() as f64;
    let mut mean = alloc::vec![0.0; d];
    for (x, _) in data.samples() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = alloc::vec![0.0; d];
    for (x, _) in data.samples() {
        for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = libm::sqrt(s / n);
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

impl ElmModel {
    /// Draws `a_i`, `b_i` uniformly from [-3, 3], builds the hidden output
    /// matrix `H` and solves `beta = pinv(H) T` with +-1 one-hot targets.
    pub fn train(data: &TrainingSet, cfg: &ElmConfig) -> Result<ElmModel> {
        if cfg.hidden == 0 {
            return Err(Error::InvalidParameter("classifier.hidden must be at least 1"));
        }
        let d = data.dim().ok_or(Error::InsufficientData)?;
        if data.count(Class::Graphics) == 0 || data.count(Class::Natural) == 0 {
            return Err(Error::InsufficientData);
        }
        let (mean, scale) = standardization(data, d);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let input_weights = DMatrix::from_fn(cfg.hidden, d, |_, _| rng.random_range(-3.0..=3.0));
        let biases = DVector::from_fn(cfg.hidden, |_, _| rng.random_range(-3.0..=3.0));
        let mut model = ElmModel {
            input_weights,
            biases,
            output_weights: DMatrix::zeros(cfg.hidden, 2),
            activation: cfg.activation,
            mean,
            scale,
        };

        let n = data.len();
        let mut h = DMatrix::zeros(n, cfg.hidden);
        let mut t = DMatrix::from_element(n, 2, -1.0);
        for (r, (x, class)) in data.samples().iter().enumerate() {
            let hidden = model.hidden_of(&model.standardize(x));
            h.row_mut(r).copy_from(&hidden.transpose());
            t[(r, class.index())] = 1.0;
        }
        model.output_weights = pinv_solve(h, &t)?;
        if model.output_weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::SvdFailed);
        }
        Ok(model)
    }

    /// Rebuilds a model from row-major parts.
    pub fn from_parts(
        input_weights: Vec<f64>,
        biases: Vec<f64>,
        output_weights: Vec<f64>,
        activation: Activation,
        mean: Vec<f64>,
        scale: Vec<f64>,
    ) -> Result<ElmModel> {
        let l = biases.len();
        let d = mean.len();
        if l == 0 || d == 0 {
            return Err(Error::InsufficientData);
        }
        let expect = |want: usize, got: usize| {
            if want == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: want,
                    actual: got,
                })
            }
        };
        expect(l * d, input_weights.len())?;
        expect(l * 2, output_weights.len())?;
        expect(d, scale.len())?;
        let all = input_weights.iter().chain(&biases).chain(&output_weights).chain(&mean).chain(&scale);
        if all.clone().any(|v| !v.is_finite()) || scale.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidParameter("model entries must be finite with positive scales"));
        }
        Ok(ElmModel {
            input_weights: DMatrix::from_row_slice(l, d, &input_weights),
            biases: DVector::from_vec(biases),
            output_weights: DMatrix::from_row_slice(l, 2, &output_weights),
            activation,
            mean,
            scale,
        })
    }

    pub fn hidden_count(&self) -> usize {
        self.biases.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn biases(&self) -> &[f64] {
        self.biases.as_slice()
    }

    pub fn input_weights_row_major(&self) -> Vec<f64> {
        self.input_weights.transpose().as_slice().to_vec()
    }

    pub fn output_weights_row_major(&self) -> Vec<f64> {
        self.output_weights.transpose().as_slice().to_vec()
    }

    /// Multiplies every output weight by `factor`.
    pub fn scale_outputs(&mut self, factor: f64) {
        self.output_weights *= factor;
    }

    fn standardize(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s),
        )
    }

    fn hidden_of(&self, z: &DVector<f64>) -> DVector<f64> {
        match self.activation {
            Activation::Sigmoid => (&self.input_weights * z + &self.biases).map(sigmoid),
            Activation::Rbf => DVector::from_fn(self.hidden_count(), |i, _| {
                let dist = (self.input_weights.row(i).transpose() - z).norm();
                gaussian(self.biases[i] * dist)
            }),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Raw network outputs `[graphics, natural]`.
    pub fn outputs(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.check_dim(x)?;
        let h = self.hidden_of(&self.standardize(x));
        let o = self.output_weights.transpose() * h;
        Ok([o[0], o[1]])
    }

    /// Class of the largest output; a tie goes to graphics.
    pub fn predict(&self, x: &[f64]) -> Result<Class> {
        let [g, n] = self.outputs(x)?;
        Ok(if n > g { Class::Natural } else { Class::Graphics })
    }

    /// `|H beta - T| / |T|` over a data set.
    pub fn training_residual(&self, data: &TrainingSet) -> Result<f64> {
        let mut err = 0.0;
        let mut norm = 0.0;
        for (x, class) in data.samples() {
            let o = self.outputs(x)?;
            for (k, &ok) in o.iter().enumerate() {
                let t = if k == class.index() { 1.0 } else { -1.0 };
                err += (ok - t) * (ok - t);
                norm += t * t;
            }
        }
        Ok(libm::sqrt(err / norm))
    }
}

impl BandClassifier for ElmModel {
    fn input_dim(&self) -> usize {
        self.mean.len()
    }

    fn predict(&self, x: &[f64]) -> Result<Class> {
        ElmModel::predict(self, x)
    }
}

/// Confusion counts of `model` over `data`, natural being the positive class.
pub fn confusion<C: BandClassifier + ?Sized>(model: &C, data: &TrainingSet) -> Result<ConfusionCounts> {
    let mut c = ConfusionCounts::default();
    for (x, truth) in data.samples() {
        c.record(*truth == Class::Natural, model.predict(x)? == Class::Natural);
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KFoldReport {
    pub folds: Vec<ConfusionCounts>,
    pub total: ConfusionCounts,
    pub measures: ClassifierMeasures,
}

/// Stratified k-fold cross-validation: each class is shuffled with `seed`
/// and dealt round-robin to the folds.
pub fn k_fold_evaluate(data: &TrainingSet, k: usize, cfg: &ElmConfig) -> Result<KFoldReport> {
    if k < 2 {
        return Err(Error::InvalidParameter("k must be at least 2"));
    }
    if k > data.len() {
        return Err(Error::InvalidParameter("k exceeds the sample count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fold_of = alloc::vec![0usize; data.len()];
    let mut next = 0;
    for class in Class::ALL {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.samples()[i].1 == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let test: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] == f).collect();
        let train: Vec<usize> = (0..data.len()).filter(|&i| fold_of[i] != f).collect();
        let model = ElmModel::train(&data.subset(&train), cfg)?;
        folds.push(confusion(&model, &data.subset(&test))?);
    }
    let total = folds.iter().fold(ConfusionCounts::default(), |a, b| a + *b);
    Ok(KFoldReport {
        folds,
        measures: classifier_measures(&total),
        total,
    })
}
