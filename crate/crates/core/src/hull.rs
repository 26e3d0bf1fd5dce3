//! Convex-hull divergence optimization and n-fold product computations.
//!
//! The central object is the power mean g(w) = E_q (p_w/q)^ρ of a mixture
//! p_w = Σ_k w_k p_k, which is concave in the mixture weights. One
//! Frank-Wolfe ascent serves every hull quantity: the hull infima of both
//! the ρ- and Rényi divergences are monotone transforms of max g, and the
//! hull suprema come from vertex scans (KL is convex in its second
//! argument; min of concave g over the simplex also sits at a vertex).

use crate::divergence::{self, DivergenceError};
use crate::model::{Density, ModelFamily};
use thiserror::Error;

/// Frank-Wolfe stops when the linearized duality gap drops below this.
pub const FW_TOLERANCE: f64 = 1e-8;
/// Iteration cap for the Frank-Wolfe ascent.
pub const FW_MAX_ITERATIONS: usize = 10_000;
/// Exact product-space enumeration is refused beyond this many outcomes.
pub const PRODUCT_SPACE_CAP: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("hull of an empty block is undefined")]
    EmptyBlock,
    #[error("rho = {rho} is outside (0, 1)")]
    RhoOutOfRange { rho: f64 },
    #[error("product space has {size:e} outcomes, above the exact-enumeration cap {cap:e}")]
    ProductSpaceTooLarge { size: f64, cap: f64 },
}

impl From<DivergenceError> for HullError {
    fn from(e: DivergenceError) -> Self {
        match e {
            DivergenceError::RhoOutOfRange { rho } => HullError::RhoOutOfRange { rho },
        }
    }
}

/// Outcome of a hull optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct HullResult {
    /// Optimal value of the objective (the power mean for
    /// [`max_power_mean_over_hull`]).
    pub value: f64,
    /// Mixture weights over the block attaining it.
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn mixture_at(block: &[Density], weights: &[f64], x: usize) -> f64 {
    block
        .iter()
        .zip(weights)
        .map(|(p, &w)| if w > 0.0 { w * p.at(x) } else { 0.0 })
        .sum()
}

/// Pairwise Frank-Wolfe ascent of a concave objective over the simplex.
///
/// Each step moves mass from the active vertex with the smallest gradient
/// to the vertex with the largest one, with an exact (ternary) line
/// search; the restriction of a concave function to a segment is concave,
/// so the search is correct and the objective never decreases. The
/// standard linearized duality gap certifies global optimality; pairwise
/// steps avoid the zig-zag that stalls plain Frank-Wolfe when the optimum
/// sits on a face.
fn frank_wolfe_simplex_max(
    k: usize,
    objective: impl Fn(&[f64]) -> f64,
    gradient: impl Fn(&[f64], &mut [f64]),
) -> HullResult {
    let mut weights = vec![1.0 / k as f64; k];
    let mut value = objective(&weights);
    let mut grad = vec![0.0; k];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < FW_MAX_ITERATIONS {
        iterations += 1;
        gradient(&weights, &mut grad);
        let (towards, best_grad) = grad
            .iter()
            .cloned()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("simplex has at least one vertex");
        // Positive-weight coordinates have finite gradients, so the inner
        // product is well defined.
        let dot: f64 = weights
            .iter()
            .zip(&grad)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &g)| w * g)
            .sum();
        if best_grad - dot <= FW_TOLERANCE {
            converged = true;
            break;
        }
        let away = (0..k)
            .filter(|&i| weights[i] > 0.0)
            .min_by(|&a, &b| grad[a].partial_cmp(&grad[b]).unwrap())
            .expect("weights sum to one");
        if away == towards {
            converged = true;
            break;
        }
        let max_step = weights[away];
        let eval = |t: f64| -> f64 {
            let mut trial = weights.clone();
            trial[towards] += t;
            trial[away] -= t;
            if trial[away] < 0.0 {
                trial[away] = 0.0;
            }
            objective(&trial)
        };
        let mut lo = 0.0;
        let mut hi = max_step;
        for _ in 0..80 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if eval(a) < eval(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        // Snap to the face when the search ends next to it.
        let mut step = 0.5 * (lo + hi);
        if max_step - step <= 1e-12 * max_step {
            step = max_step;
        }
        let stepped = eval(step);
        let full = eval(max_step);
        let (step, stepped) = if full >= stepped {
            (max_step, full)
        } else {
            (step, stepped)
        };
        if stepped < value {
            // No representable improvement along the best pairwise
            // direction: numerically stationary.
            break;
        }
        weights[towards] += step;
        weights[away] = if step >= max_step {
            0.0
        } else {
            weights[away] - step
        };
        debug_assert!(stepped >= value, "ascent must be monotone");
        value = stepped;
    }
    HullResult {
        value,
        weights,
        iterations,
        converged,
    }
}

/// Maximize g(w) = E_q (p_w/q)^ρ over mixture weights on the block.
///
/// g is concave, so the pairwise Frank-Wolfe ascent reaches the global
/// maximum; the run is flagged unconverged if the duality gap is still
/// above [`FW_TOLERANCE`] after the iteration cap.
pub fn max_power_mean_over_hull(
    q: &Density,
    block: &[Density],
    rho: f64,
) -> Result<HullResult, HullError> {
    divergence::check_rho(rho)?;
    if block.is_empty() {
        return Err(HullError::EmptyBlock);
    }
    let m = q.len();
    for p in block {
        assert_eq!(p.len(), m, "densities on different spaces");
    }
    let objective = |w: &[f64]| -> f64 {
        let mut g = 0.0;
        for x in 0..m {
            let qx = q.at(x);
            if qx == 0.0 {
                continue;
            }
            let pw = mixture_at(block, w, x);
            if pw > 0.0 {
                g += ((1.0 - rho) * qx.ln() + rho * pw.ln()).exp();
            }
        }
        g
    };
    // Gradient: ∂g/∂w_k = ρ Σ_x q^{1−ρ} p_w^{ρ−1} p_k. A vanished mixture
    // coordinate with model mass present makes the component +inf; such
    // directions are always taken.
    let gradient = |w: &[f64], grad: &mut [f64]| {
        grad.fill(0.0);
        for x in 0..m {
            let qx = q.at(x);
            if qx == 0.0 {
                continue;
            }
            let pw = mixture_at(block, w, x);
            if pw == 0.0 {
                for (gk, p) in grad.iter_mut().zip(block) {
                    if p.at(x) > 0.0 {
                        *gk = f64::INFINITY;
                    }
                }
                continue;
            }
            let common = rho * ((1.0 - rho) * qx.ln() + (rho - 1.0) * pw.ln()).exp();
            for (gk, p) in grad.iter_mut().zip(block) {
                *gk += common * p.at(x);
            }
        }
    };
    Ok(frank_wolfe_simplex_max(block.len(), objective, gradient))
}

/// inf over the hull of D_ρ^Re(q || p): the monotone transform
/// −ln(max g)/(ρ(1−ρ)).
pub fn inf_renyi_over_hull(q: &Density, block: &[Density], rho: f64) -> Result<f64, HullError> {
    let r = max_power_mean_over_hull(q, block, rho)?;
    Ok(divergence::renyi_from_power_mean(r.value, rho))
}

/// inf over the hull of D_ρ(q || p): the transform (1 − max g)/(ρ(1−ρ)).
pub fn inf_rho_over_hull(q: &Density, block: &[Density], rho: f64) -> Result<f64, HullError> {
    let r = max_power_mean_over_hull(q, block, rho)?;
    Ok(divergence::rho_from_power_mean(r.value, rho))
}

/// sup over the hull of D_ρ^Re(q || p). The minimum of the concave power
/// mean over the simplex is attained at a vertex, so a vertex scan is
/// exact.
pub fn sup_renyi_over_hull(q: &Density, block: &[Density], rho: f64) -> Result<f64, HullError> {
    divergence::check_rho(rho)?;
    if block.is_empty() {
        return Err(HullError::EmptyBlock);
    }
    let min_g = block
        .iter()
        .map(|p| divergence::power_mean(q, p, rho))
        .fold(f64::INFINITY, f64::min);
    Ok(divergence::renyi_from_power_mean(min_g, rho))
}

/// sup over the hull of D_KL(q || p). KL is convex in its second
/// argument, so the supremum sits at a vertex: the max over block members.
pub fn sup_kl_over_hull(q: &Density, block: &[Density]) -> Result<f64, HullError> {
    if block.is_empty() {
        return Err(HullError::EmptyBlock);
    }
    Ok(block
        .iter()
        .map(|p| divergence::kl(q, p))
        .fold(0.0, f64::max))
}

/// inf over the hull of D_KL(q || p), via Frank-Wolfe on the concave
/// mixture log-likelihood Σ_x q(x) ln p_w(x).
pub fn inf_kl_over_hull(q: &Density, block: &[Density]) -> Result<f64, HullError> {
    if block.is_empty() {
        return Err(HullError::EmptyBlock);
    }
    let m = q.len();
    // If some q-carrying point is missed by every member, every mixture
    // misses it too.
    for x in 0..m {
        if q.at(x) > 0.0 && block.iter().all(|p| p.at(x) == 0.0) {
            return Ok(f64::INFINITY);
        }
    }
    let objective = |w: &[f64]| -> f64 {
        let mut h = 0.0;
        for x in 0..m {
            let qx = q.at(x);
            if qx == 0.0 {
                continue;
            }
            let pw = mixture_at(block, w, x);
            if pw == 0.0 {
                return f64::NEG_INFINITY;
            }
            h += qx * pw.ln();
        }
        h
    };
    let gradient = |w: &[f64], grad: &mut [f64]| {
        grad.fill(0.0);
        for x in 0..m {
            let qx = q.at(x);
            if qx == 0.0 {
                continue;
            }
            let pw = mixture_at(block, w, x);
            if pw == 0.0 {
                for (gk, p) in grad.iter_mut().zip(block) {
                    if p.at(x) > 0.0 {
                        *gk = f64::INFINITY;
                    }
                }
                continue;
            }
            for (gk, p) in grad.iter_mut().zip(block) {
                *gk += qx * p.at(x) / pw;
            }
        }
    };
    let result = frank_wolfe_simplex_max(block.len(), objective, gradient);
    // D_KL(q || p_w) = Σ q ln q − Σ q ln p_w.
    let entropy_part: f64 = q
        .mass()
        .iter()
        .filter(|&&qx| qx > 0.0)
        .map(|&qx| qx * qx.ln())
        .sum();
    Ok(crate::math::snap_nonnegative(entropy_part - result.value))
}

fn product_space_size(m: usize, n: usize) -> Result<(), HullError> {
    let size = (m as f64).powi(n as i32);
    if size > PRODUCT_SPACE_CAP {
        return Err(HullError::ProductSpaceTooLarge {
            size,
            cap: PRODUCT_SPACE_CAP,
        });
    }
    Ok(())
}

fn for_each_outcome(m: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; n];
    loop {
        f(&idx);
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Prior-weighted block mixture on the n-fold product space, exposed for
/// oracles: p̄(x_1..x_n) = Σ_{j∈block} π_j Π_i p_j(x_i) / π(block).
pub fn block_mixture_product_mass(family: &ModelFamily, block: &[usize], outcome: &[usize]) -> f64 {
    let mass: f64 = block
        .iter()
        .map(|&j| {
            let p = family.model(j);
            family.prior()[j] * outcome.iter().map(|&x| p.at(x)).product::<f64>()
        })
        .sum();
    let block_prior: f64 = block.iter().map(|&j| family.prior()[j]).sum();
    mass / block_prior
}

/// Exact Rényi divergence between the n-fold product of q and the block's
/// prior mixture on the product space, by full enumeration.
pub fn block_mixture_product_divergence(
    q: &Density,
    family: &ModelFamily,
    block: &[usize],
    rho: f64,
    n: usize,
) -> Result<f64, HullError> {
    divergence::check_rho(rho)?;
    if block.is_empty() {
        return Err(HullError::EmptyBlock);
    }
    assert!(n >= 1);
    let m = family.space().size();
    assert_eq!(q.len(), m);
    product_space_size(m, n)?;
    let mut g = 0.0;
    for_each_outcome(m, n, |outcome| {
        let qx: f64 = outcome.iter().map(|&x| q.at(x)).product();
        if qx == 0.0 {
            return;
        }
        let px = block_mixture_product_mass(family, block, outcome);
        if px > 0.0 {
            g += ((1.0 - rho) * qx.ln() + rho * px.ln()).exp();
        }
    });
    Ok(divergence::renyi_from_power_mean(g, rho))
}

/// Exact KL divergence between the n-fold product of q and the block's
/// prior mixture on the product space.
pub fn block_mixture_product_kl(
    q: &Density,
    family: &ModelFamily,
    block: &[usize],
    n: usize,
) -> Result<f64, HullError> {
    if block.is_empty() {
        return Err(HullError::EmptyBlock);
    }
    assert!(n >= 1);
    let m = family.space().size();
    assert_eq!(q.len(), m);
    product_space_size(m, n)?;
    let mut acc = 0.0;
    let mut infinite = false;
    for_each_outcome(m, n, |outcome| {
        if infinite {
            return;
        }
        let qx: f64 = outcome.iter().map(|&x| q.at(x)).product();
        if qx == 0.0 {
            return;
        }
        let px = block_mixture_product_mass(family, block, outcome);
        if px == 0.0 {
            infinite = true;
            return;
        }
        acc += qx * (qx.ln() - px.ln());
    });
    if infinite {
        Ok(f64::INFINITY)
    } else {
        Ok(crate::math::snap_nonnegative(acc))
    }
}

/// Posterior mass of each cover block under given model weights.
pub fn block_posterior_masses(cover_blocks: &[Vec<usize>], mu: &[f64]) -> Vec<f64> {
    cover_blocks
        .iter()
        .map(|block| block.iter().map(|&j| mu[j]).sum())
        .collect()
}
