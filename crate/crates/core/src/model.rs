//! Finite-probability foundations: sample spaces, densities, model
//! families, posterior weights, datasets, deterministic sampling, and the
//! convex-duality primitive that every bound in this crate rests on.
//!
//! Everything lives on a finite sample space `{0, .., M-1}` under counting
//! measure, so divergences and bound right-hand sides are exactly
//! computable. All types are immutable after construction; operations are
//! pure functions and safe to share across threads.
//!
//! Conventions: `0 * ln 0 = 0` everywhere, and mass-ratio blowups are
//! carried as explicit `f64::INFINITY`, never as NaN.

use crate::math::log_sum_exp;
use crate::rng::{CounterRng, RngSpec};
use thiserror::Error;

/// Absolute tolerance for "sums to one" checks on input vectors.
/// Internal computations keep full precision and never renormalize.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{quantity}[{index}] = {value} is negative")]
    NegativeMass {
        quantity: &'static str,
        index: usize,
        value: f64,
    },
    #[error("prior[{index}] = {value}; prior weights must be strictly positive")]
    PriorNotPositive { index: usize, value: f64 },
    #[error("{quantity} sums to 1{deviation:+e}, outside tolerance 1e-9")]
    SumOutOfTolerance { quantity: String, deviation: f64 },
    #[error("a sample space must contain at least one point")]
    EmptySpace,
    #[error("a model family must contain at least one model")]
    EmptyFamily,
    #[error("model {model} has {got} masses but the space has {expected} points")]
    WrongLength {
        model: usize,
        got: usize,
        expected: usize,
    },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("sample value {value} is outside the space of size {size}")]
    SampleOutOfRange { value: usize, size: usize },
}

/// Finite sample space: points are the indices `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpace {
    size: usize,
}

impl SampleSpace {
    pub fn new(size: usize) -> Result<Self, ModelError> {
        if size == 0 {
            return Err(ModelError::EmptySpace);
        }
        Ok(SampleSpace { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// Probability mass function on a finite sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    mass: Vec<f64>,
}

impl Density {
    pub fn new(mass: Vec<f64>) -> Result<Self, ModelError> {
        if mass.is_empty() {
            return Err(ModelError::EmptySpace);
        }
        let mut sum = 0.0;
        for (i, &m) in mass.iter().enumerate() {
            if !(m >= 0.0) {
                return Err(ModelError::NegativeMass {
                    quantity: "mass",
                    index: i,
                    value: m,
                });
            }
            sum += m;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::SumOutOfTolerance {
                quantity: "mass".to_string(),
                deviation: sum - 1.0,
            });
        }
        Ok(Density { mass })
    }

    pub fn uniform(size: usize) -> Self {
        assert!(size > 0);
        Density {
            mass: vec![1.0 / size as f64; size],
        }
    }

    pub fn point_mass(size: usize, at: usize) -> Self {
        assert!(at < size);
        let mut mass = vec![0.0; size];
        mass[at] = 1.0;
        Density { mass }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn at(&self, x: usize) -> f64 {
        self.mass[x]
    }
}

/// Finite indexed family of densities carrying a strictly positive prior.
///
/// Duplicate densities are permitted; indices, not contents, identify
/// models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    space: SampleSpace,
    models: Vec<Density>,
    prior: Vec<f64>,
}

impl ModelFamily {
    /// Validate raw masses and priors into a family. Values are checked,
    /// never silently renormalized.
    pub fn validate(models: Vec<Vec<f64>>, prior: Vec<f64>) -> Result<Self, ModelError> {
        if models.is_empty() {
            return Err(ModelError::EmptyFamily);
        }
        let width = models[0].len();
        let space = SampleSpace::new(width)?;
        let mut built = Vec::with_capacity(models.len());
        for (j, row) in models.into_iter().enumerate() {
            if row.len() != width {
                return Err(ModelError::WrongLength {
                    model: j,
                    got: row.len(),
                    expected: width,
                });
            }
            for (i, &m) in row.iter().enumerate() {
                if !(m >= 0.0) {
                    return Err(ModelError::NegativeMass {
                        quantity: "mass",
                        index: i,
                        value: m,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(ModelError::SumOutOfTolerance {
                    quantity: format!("model {j} mass"),
                    deviation: sum - 1.0,
                });
            }
            built.push(Density { mass: row });
        }
        Self::from_parts(space, built, prior)
    }

    /// Assemble a family from already-validated densities.
    pub fn from_parts(
        space: SampleSpace,
        models: Vec<Density>,
        prior: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if models.is_empty() {
            return Err(ModelError::EmptyFamily);
        }
        for (j, m) in models.iter().enumerate() {
            if m.len() != space.size() {
                return Err(ModelError::WrongLength {
                    model: j,
                    got: m.len(),
                    expected: space.size(),
                });
            }
        }
        if prior.len() != models.len() {
            return Err(ModelError::LengthMismatch {
                expected: models.len(),
                got: prior.len(),
            });
        }
        let mut sum = 0.0;
        for (j, &p) in prior.iter().enumerate() {
            if !(p > 0.0) {
                return Err(ModelError::PriorNotPositive { index: j, value: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::SumOutOfTolerance {
                quantity: "prior".to_string(),
                deviation: sum - 1.0,
            });
        }
        Ok(ModelFamily {
            space,
            models,
            prior,
        })
    }

    pub fn space(&self) -> SampleSpace {
        self.space
    }

    /// Number of models N.
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn model(&self, j: usize) -> &Density {
        &self.models[j]
    }

    pub fn models(&self) -> &[Density] {
        &self.models
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// Clone the densities named by `block`.
    pub fn gather(&self, block: &[usize]) -> Vec<Density> {
        block.iter().map(|&j| self.models[j].clone()).collect()
    }
}

/// Probability distribution over family indices: entry j is the posterior
/// probability of model j, i.e. the weight density times the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorWeights {
    mu: Vec<f64>,
}

impl PosteriorWeights {
    pub fn new(mu: Vec<f64>) -> Result<Self, ModelError> {
        if mu.is_empty() {
            return Err(ModelError::EmptyFamily);
        }
        let mut sum = 0.0;
        for (j, &m) in mu.iter().enumerate() {
            if !(m >= 0.0) {
                return Err(ModelError::NegativeMass {
                    quantity: "posterior mass",
                    index: j,
                    value: m,
                });
            }
            sum += m;
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ModelError::SumOutOfTolerance {
                quantity: "posterior mass".to_string(),
                deviation: sum - 1.0,
            });
        }
        Ok(PosteriorWeights { mu })
    }

    /// All mass on model `at`.
    pub fn point_mass(len: usize, at: usize) -> Self {
        assert!(at < len);
        let mut mu = vec![0.0; len];
        mu[at] = 1.0;
        PosteriorWeights { mu }
    }

    /// Internal constructor for weights normalized by this crate.
    pub(crate) fn from_normalized(mu: Vec<f64>) -> Self {
        debug_assert!((mu.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        PosteriorWeights { mu }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }
}

/// Ordered record of observed sample-space indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    samples: Vec<usize>,
}

impl Dataset {
    pub fn new(samples: Vec<usize>, space: SampleSpace) -> Result<Self, ModelError> {
        for &s in &samples {
            if s >= space.size() {
                return Err(ModelError::SampleOutOfRange {
                    value: s,
                    size: space.size(),
                });
            }
        }
        Ok(Dataset { samples })
    }

    pub fn empty() -> Self {
        Dataset {
            samples: Vec::new(),
        }
    }

    pub(crate) fn from_raw(samples: Vec<usize>) -> Self {
        Dataset { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }
}

/// Draw `n` i.i.d. categorical samples from `q`, deterministically in the
/// given stream.
pub fn sample_dataset(q: &Density, n: usize, spec: RngSpec) -> Dataset {
    let mut rng = CounterRng::new(spec);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        samples.push(sample_index(q, &mut rng));
    }
    Dataset { samples }
}

/// One categorical draw from `q`.
pub fn sample_index(q: &Density, rng: &mut CounterRng) -> usize {
    let u = rng.next_f64();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &m) in q.mass().iter().enumerate() {
        if m > 0.0 {
            last_positive = i;
            acc += m;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding can leave acc marginally below 1; land on the last
    // positive-mass point.
    last_positive
}

/// Σ_i ln p_j(X_i); `-inf` when the model assigns zero mass to any
/// observed point. The empty dataset gives 0.
pub fn log_likelihood(family: &ModelFamily, j: usize, data: &Dataset) -> f64 {
    let model = family.model(j);
    let mut acc = 0.0;
    for &x in data.samples() {
        let p = model.at(x);
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += p.ln();
    }
    acc
}

/// KL-entropy of posterior weights against the family prior:
/// Σ_j μ_j ln(μ_j / π_j), with 0 ln 0 = 0.
///
/// Nonnegative, zero exactly when the posterior equals the prior.
pub fn kl_entropy(post: &PosteriorWeights, family: &ModelFamily) -> f64 {
    assert_eq!(post.len(), family.len(), "posterior/family length mismatch");
    let mut acc = 0.0;
    for (&mu, &pi) in post.mu().iter().zip(family.prior()) {
        if mu > 0.0 {
            acc += mu * (mu.ln() - pi.ln());
        }
    }
    crate::math::snap_nonnegative(acc)
}

/// Slack in the convex-duality inequality for a score vector `f`:
///
/// gap = KL-entropy(post) + ln E_π e^f − E_π w f.
///
/// Analytically the gap is the KL divergence between `post` and the Gibbs
/// weights for `f`, hence nonnegative, vanishing exactly at those weights;
/// sub-tolerance rounding noise is truncated to zero.
pub fn convex_duality_gap(post: &PosteriorWeights, f: &[f64], family: &ModelFamily) -> f64 {
    assert_eq!(post.len(), family.len(), "posterior/family length mismatch");
    assert_eq!(f.len(), family.len(), "score/family length mismatch");
    let scores: Vec<f64> = family
        .prior()
        .iter()
        .zip(f)
        .map(|(&pi, &fj)| pi.ln() + fj)
        .collect();
    let log_partition = log_sum_exp(&scores);
    let mut mean_score = 0.0;
    for (&mu, &fj) in post.mu().iter().zip(f) {
        if mu > 0.0 {
            mean_score += mu * fj;
        }
    }
    crate::math::snap_nonnegative(kl_entropy(post, family) + log_partition - mean_score)
}
