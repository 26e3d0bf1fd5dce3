//! Reproducible named experiments: the slow-convergence construction for
//! standard two-part-code selection, the parametric-rate comparison on a
//! Bernoulli net, and parameter sweeps over the bound verifier.

use crate::bounds::{verify, BoundError, BoundReport, BoundSpec};
use crate::complexity::index_of_resolvability;
use crate::divergence;
use crate::estimator::{mdl_select, EstimatorError};
use crate::math::mean_and_se;
use crate::model::{sample_index, Dataset, Density, ModelError, ModelFamily, SampleSpace};
use crate::rng::{CounterRng, RngSpec};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("infeasible configuration: {0}")]
    ConfigInfeasible(String),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Configuration of the slow-convergence experiment: sample size n,
/// half-space size m (the space has 2m points), replicate count, and the
/// stream the replicates run on.
#[derive(Debug, Clone, Copy)]
pub struct CounterexampleConfig {
    pub n: usize,
    pub m: usize,
    pub replicates: usize,
    pub rng: RngSpec,
}

impl CounterexampleConfig {
    /// (m−n)^n / m^n, the survival probability floor the construction
    /// requires to be at least one half.
    pub fn feasibility_ratio(&self) -> f64 {
        if self.m <= self.n {
            return 0.0;
        }
        (self.n as f64 * ((self.m - self.n) as f64 / self.m as f64).ln()).exp()
    }

    fn check(&self) -> Result<(), ExperimentError> {
        if self.n == 0 || self.n >= 63 {
            return Err(ExperimentError::ConfigInfeasible(format!(
                "n = {} must lie in 1..=62",
                self.n
            )));
        }
        if self.m < self.n {
            return Err(ExperimentError::ConfigInfeasible(format!(
                "m = {} must be at least n = {}",
                self.m, self.n
            )));
        }
        let ratio = self.feasibility_ratio();
        if ratio < 0.5 {
            return Err(ExperimentError::ConfigInfeasible(format!(
                "(m-n)^n/m^n = {ratio:.4} < 0.5; pick a larger m"
            )));
        }
        if self.replicates == 0 {
            return Err(ExperimentError::ConfigInfeasible(
                "need at least one replicate".to_string(),
            ));
        }
        Ok(())
    }
}

/// Outcome of the slow-convergence experiment.
#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub n: usize,
    pub m: usize,
    pub replicates: usize,
    /// Empirical probability that selection recovers the true density.
    pub empirical_prob: f64,
    /// Binomial standard error of that frequency.
    pub se: f64,
    /// The analytic ceiling e^{-1/2} on the recovery probability.
    pub prob_bound: f64,
    /// Index of resolvability of the construction, ln(4)/n exactly.
    pub resolvability: f64,
    pub feasibility_ratio: f64,
    /// Replicates where the selection decision agreed with the
    /// all-candidates-killed event it is provably equivalent to.
    pub event_agreement: usize,
}

/// Build one random instance: the uniform truth with prior 1/4 plus 2^n
/// half-support densities drawn uniformly with replacement, each with
/// prior 3/2^{n+2}.
fn counterexample_family(
    n: usize,
    m: usize,
    rng: &mut CounterRng,
) -> Result<ModelFamily, ModelError> {
    let two_m = 2 * m;
    let space = SampleSpace::new(two_m)?;
    let candidates = 1usize << n;
    let mut models = Vec::with_capacity(candidates + 1);
    models.push(Density::uniform(two_m));
    let mut prior = Vec::with_capacity(candidates + 1);
    prior.push(0.25);
    let candidate_prior = 3.0 / (1u64 << (n + 2)) as f64;
    let mut indices: Vec<usize> = (0..two_m).collect();
    for _ in 0..candidates {
        // Seeded partial Fisher-Yates: the first m entries form the
        // support.
        for i in 0..m {
            let j = i + rng.below((two_m - i) as u64) as usize;
            indices.swap(i, j);
        }
        let mut mass = vec![0.0; two_m];
        for &x in &indices[..m] {
            mass[x] = 1.0 / m as f64;
        }
        models.push(Density::new(mass)?);
        prior.push(candidate_prior);
    }
    ModelFamily::from_parts(space, models, prior)
}

/// Run the slow-convergence experiment: fresh random family and dataset
/// per replicate, standard selection at λ = 1, and the frequency of exact
/// recovery of the truth.
pub fn run_counterexample(
    config: &CounterexampleConfig,
) -> Result<CounterexampleReport, ExperimentError> {
    config.check()?;
    let n = config.n;
    let m = config.m;
    let mut successes = 0usize;
    let mut event_agreement = 0usize;
    let mut resolvability = f64::NAN;
    for r in 0..config.replicates {
        let mut rng = CounterRng::new(config.rng.replicate(r as u64));
        let family = counterexample_family(n, m, &mut rng)?;
        let truth = family.model(0).clone();
        if r == 0 {
            resolvability = index_of_resolvability(&family, &truth, 1.0, n);
        }
        let samples: Vec<usize> = (0..n).map(|_| sample_index(&truth, &mut rng)).collect();
        let data = Dataset::new(samples, family.space())?;
        let selected = mdl_select(&family, &data, 1.0)?;
        let recovered = selected == 0;
        // Recovery happens exactly when every candidate density misses at
        // least one observed point: any surviving candidate beats the
        // truth's description length.
        let all_killed =
            (1..family.len()).all(|j| data.samples().iter().any(|&x| family.model(j).at(x) == 0.0));
        if recovered == all_killed {
            event_agreement += 1;
        }
        debug_assert_eq!(recovered, all_killed);
        if recovered {
            successes += 1;
        }
    }
    let p = successes as f64 / config.replicates as f64;
    let se = (p * (1.0 - p) / config.replicates as f64).sqrt();
    Ok(CounterexampleReport {
        n,
        m,
        replicates: config.replicates,
        empirical_prob: p,
        se,
        prob_bound: (-0.5f64).exp(),
        resolvability,
        feasibility_ratio: config.feasibility_ratio(),
        event_agreement,
    })
}

/// One row of the parametric-rate comparison.
#[derive(Debug, Clone)]
pub struct RateDemoRow {
    pub n: usize,
    /// Net size N: the grid has N + 1 points j/N.
    pub net_size: usize,
    /// Index of the grid point playing the truth.
    pub truth_index: usize,
    /// ln(N + 1).
    pub global_entropy: f64,
    pub localized_entropy: f64,
    /// Monte Carlo estimate of the selected model's Rényi divergence.
    pub risk_mean: f64,
    pub risk_se: f64,
    /// min over interior grid points of D_ρ^Re(q||p_k)/(θ*−θ_k)².
    pub quad_ratio_lower: f64,
    /// max over interior grid points of D_KL(q||p_k)/(θ*−θ_k)².
    pub quad_ratio_upper: f64,
}

/// Bernoulli-net rate comparison: discretize θ at j/N with N = ⌈√n⌉,
/// put the truth on an interior grid point, and compare the growing
/// global entropy ln(N+1) against the localized entropy, alongside a
/// Monte Carlo risk estimate for maximum-likelihood selection.
pub fn run_parametric_rate_demo(
    ns: &[usize],
    replicates: usize,
    rng: RngSpec,
) -> Result<Vec<RateDemoRow>, ExperimentError> {
    let rho = 0.5;
    let mut rows = Vec::with_capacity(ns.len());
    for (row_idx, &n) in ns.iter().enumerate() {
        if n < 4 {
            return Err(ExperimentError::ConfigInfeasible(format!(
                "n = {n} is too small for an interior truth on the net"
            )));
        }
        let net = (n as f64).sqrt().ceil() as usize;
        let truth_index = ((net as f64 / 2.0).round() as usize).clamp(1, net - 1);
        let thetas: Vec<f64> = (0..=net).map(|j| j as f64 / net as f64).collect();
        let models: Vec<Vec<f64>> = thetas.iter().map(|&t| vec![t, 1.0 - t]).collect();
        let prior = vec![1.0 / (net + 1) as f64; net + 1];
        let family = ModelFamily::validate(models, prior)?;
        let q = family.model(truth_index).clone();

        let global_entropy = ((net + 1) as f64).ln();
        let localized =
            crate::complexity::localized_entropy_term(&family, &q, rho, n, truth_index, 0.5)
                .expect("rho is in range");

        let renyi: Vec<f64> = (0..family.len())
            .map(|j| divergence::renyi_divergence(&q, family.model(j), rho).unwrap())
            .collect();
        let mut stats = Vec::with_capacity(replicates);
        let row_rng = rng.substream(row_idx as u64);
        for r in 0..replicates {
            let mut rep = CounterRng::new(row_rng.replicate(r as u64));
            let samples: Vec<usize> = (0..n).map(|_| sample_index(&q, &mut rep)).collect();
            let data = Dataset::new(samples, family.space())?;
            let k = mdl_select(&family, &data, 2.0)?;
            stats.push(renyi[k]);
        }
        let (risk_mean, risk_se) = mean_and_se(&stats);

        let theta_star = thetas[truth_index];
        let mut lower = f64::INFINITY;
        let mut upper = 0.0f64;
        for (k, &theta) in thetas.iter().enumerate() {
            if k == truth_index || !(0.1..=0.9).contains(&theta) {
                continue;
            }
            let gap = (theta_star - theta) * (theta_star - theta);
            lower = lower.min(renyi[k] / gap);
            upper = upper.max(divergence::kl(&q, family.model(k)) / gap);
        }

        rows.push(RateDemoRow {
            n,
            net_size: net,
            truth_index,
            global_entropy,
            localized_entropy: localized,
            risk_mean,
            risk_se,
            quad_ratio_lower: lower,
            quad_ratio_upper: upper,
        });
    }
    Ok(rows)
}

/// Parameter grid for sweeps. An empty axis is absent; the sweep is the
/// cartesian product of the present axes, in declaration order.
#[derive(Debug, Clone, Default)]
pub struct SweepGrid {
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub t: Vec<f64>,
    pub delta: Vec<f64>,
    pub n: Vec<usize>,
}

impl SweepGrid {
    fn point_count(&self) -> usize {
        let axes = [
            self.lambda.len(),
            self.rho.len(),
            self.gamma.len(),
            self.alpha.len(),
            self.t.len(),
            self.delta.len(),
            self.n.len(),
        ];
        if axes.iter().all(|&a| a == 0) {
            return 0;
        }
        axes.iter().filter(|&&a| a > 0).product()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct GridPoint {
    lambda: Option<f64>,
    rho: Option<f64>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    t: Option<f64>,
    delta: Option<f64>,
    n: Option<usize>,
}

fn grid_points(grid: &SweepGrid) -> Vec<GridPoint> {
    if grid.point_count() == 0 {
        return Vec::new();
    }
    let mut points = vec![GridPoint::default()];
    fn expand_f64(
        points: Vec<GridPoint>,
        axis: &[f64],
        set: impl Fn(&mut GridPoint, f64),
    ) -> Vec<GridPoint> {
        if axis.is_empty() {
            return points;
        }
        let mut out = Vec::with_capacity(points.len() * axis.len());
        for p in points {
            for &v in axis {
                let mut next = p;
                set(&mut next, v);
                out.push(next);
            }
        }
        out
    }
    points = expand_f64(points, &grid.lambda, |p, v| p.lambda = Some(v));
    points = expand_f64(points, &grid.rho, |p, v| p.rho = Some(v));
    points = expand_f64(points, &grid.gamma, |p, v| p.gamma = Some(v));
    points = expand_f64(points, &grid.alpha, |p, v| p.alpha = Some(v));
    points = expand_f64(points, &grid.t, |p, v| p.t = Some(v));
    points = expand_f64(points, &grid.delta, |p, v| p.delta = Some(v));
    if !grid.n.is_empty() {
        let mut out = Vec::with_capacity(points.len() * grid.n.len());
        for p in points {
            for &v in &grid.n {
                let mut next = p;
                next.n = Some(v);
                out.push(next);
            }
        }
        points = out;
    }
    points
}

/// Verify each bound token at every grid point. Rows come out in
/// deterministic order: tokens in the given order, grid points nested by
/// axis declaration order. Each cell runs on its own derived stream.
pub fn run_sweep(
    family: &ModelFamily,
    q: &Density,
    bounds: &[String],
    grid: &SweepGrid,
    replicates: usize,
    rng: RngSpec,
) -> Result<Vec<BoundReport>, ExperimentError> {
    let points = grid_points(grid);
    if !points.is_empty() && grid.n.is_empty() {
        return Err(ExperimentError::ConfigInfeasible(
            "sweep grid must provide an n axis".to_string(),
        ));
    }
    let mut rows = Vec::with_capacity(bounds.len() * points.len());
    let mut cell = 0u64;
    for token in bounds {
        for point in &points {
            let n = point.n.expect("n axis checked above");
            let mut spec = BoundSpec::from_token(token, n)?;
            spec.lambda = point.lambda;
            spec.rho = point.rho;
            spec.gamma = point.gamma;
            spec.alpha = point.alpha;
            spec.t = point.t;
            spec.delta = point.delta;
            rows.push(verify(
                &spec,
                family,
                q,
                replicates,
                rng.substream(cell),
                None,
            )?);
            cell += 1;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_prior_is_exactly_normalized() {
        // 1/4 + 2^n · 3/2^{n+2} = 1 exactly in floating point.
        for n in [3usize, 8, 12] {
            let candidates = (1u64 << n) as f64;
            let each = 3.0 / (1u64 << (n + 2)) as f64;
            assert_eq!(0.25 + candidates * each, 1.0);
        }
    }

    #[test]
    fn counterexample_feasibility_oracle() {
        // Direct evaluation: (120/128)^8 ≈ 0.5967 clears the 0.5 floor.
        let config = CounterexampleConfig {
            n: 8,
            m: 128,
            replicates: 1,
            rng: RngSpec::new(7, 0),
        };
        let ratio = config.feasibility_ratio();
        assert!((ratio - (120.0f64 / 128.0).powi(8)).abs() < 1e-12);
        assert!(ratio >= 0.5);

        let bad = CounterexampleConfig {
            n: 8,
            m: 9,
            replicates: 1,
            rng: RngSpec::new(7, 0),
        };
        assert!(matches!(
            run_counterexample(&bad),
            Err(ExperimentError::ConfigInfeasible(_))
        ));
    }

    #[test]
    fn counterexample_small_run_is_deterministic_and_consistent() {
        let config = CounterexampleConfig {
            n: 4,
            m: 64,
            replicates: 100,
            rng: RngSpec::new(7, 0),
        };
        let a = run_counterexample(&config).unwrap();
        let b = run_counterexample(&config).unwrap();
        assert_eq!(a.empirical_prob, b.empirical_prob);
        // Decision/event equivalence on every replicate.
        assert_eq!(a.event_agreement, 100);
        // ln(4)/n exactly: truth sits in the family with prior 1/4.
        assert_eq!(a.resolvability, 4.0f64.ln() / 4.0);
    }

    #[test]
    fn rate_demo_shapes_and_ratios() {
        let rows = run_parametric_rate_demo(&[64, 256], 50, RngSpec::new(3, 0)).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].net_size, 8);
        assert_eq!(rows[1].net_size, 16);
        for row in &rows {
            assert!((row.global_entropy - ((row.net_size + 1) as f64).ln()).abs() < 1e-15);
            assert!(row.localized_entropy <= row.global_entropy + 1e-12);
            assert!(row.quad_ratio_lower > 0.0);
            assert!(row.quad_ratio_upper.is_finite());
            assert!(row.quad_ratio_lower <= row.quad_ratio_upper);
            assert!(row.risk_mean >= 0.0);
        }
    }

    #[test]
    fn sweep_row_ordering_and_empty_grid() {
        let mut rng = CounterRng::new(RngSpec::new(51, 0));
        let family = crate::synth::random_family(&mut rng, 3, 4);
        let q = crate::synth::random_density(&mut rng, 3);

        let empty = SweepGrid::default();
        let rows = run_sweep(
            &family,
            &q,
            &["cor3.2".to_string()],
            &empty,
            10,
            RngSpec::new(1, 0),
        )
        .unwrap();
        assert!(rows.is_empty());

        let grid = SweepGrid {
            lambda: vec![1.5, 2.0],
            n: vec![2, 3],
            ..SweepGrid::default()
        };
        let rows = run_sweep(
            &family,
            &q,
            &["cor3.2".to_string()],
            &grid,
            10,
            RngSpec::new(1, 0),
        )
        .unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].lambda, Some(1.5));
        assert_eq!(rows[0].n, 2);
        assert_eq!(rows[1].n, 3);
        assert_eq!(rows[2].lambda, Some(2.0));

        // A one-point grid matches a direct verify call.
        let one = SweepGrid {
            lambda: vec![2.0],
            n: vec![3],
            ..SweepGrid::default()
        };
        let rows = run_sweep(
            &family,
            &q,
            &["thm5.1".to_string()],
            &one,
            10,
            RngSpec::new(1, 0),
        )
        .unwrap();
        let mut spec = BoundSpec::from_token("thm5.1", 3).unwrap();
        spec.lambda = Some(2.0);
        let direct = verify(
            &spec,
            &family,
            &q,
            10,
            RngSpec::new(1, 0).substream(0),
            None,
        )
        .unwrap();
        assert_eq!(rows[0].lhs, direct.lhs);
        assert_eq!(rows[0].rhs, direct.rhs);

        // Missing n axis with otherwise nonempty grid is refused.
        let no_n = SweepGrid {
            lambda: vec![2.0],
            ..SweepGrid::default()
        };
        assert!(run_sweep(
            &family,
            &q,
            &["cor3.2".to_string()],
            &no_n,
            10,
            RngSpec::new(1, 0)
        )
        .is_err());
    }
}
