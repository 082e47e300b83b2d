//! Distributions of random clock expiration times.
//!
//! Densities and closed-form interval masses for the three supported
//! families, the product joint density over clock copies, and automated
//! tightening of per-dimension integration bounds: the sampling interval
//! `[L, R] ⊆ [0, t_int]` is shrunk as long as each discarded tail keeps mass
//! at most `tau`, so the trimmed mass is below double-precision noise for
//! the default `tau = 2^-54`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

/// Discarded-tail threshold: the IEEE double unit roundoff `2^-54`.
pub const DEFAULT_TAU: f64 = 1.0 / 18014398509481984.0;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const BISECT_WIDTH: f64 = 1e-9;
const BISECT_MAX_ITERS: u32 = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("tail threshold tau must lie in (0, 1), got {0}")]
    InvalidTau(f64),
    #[error("integration bound t_int must be positive, got {0}")]
    InvalidTInt(f64),
    #[error("degenerate bounds: support mass inside [0, {t_int}] collapses ({lo} >= {hi})")]
    DegenerateBounds { lo: f64, hi: f64, t_int: f64 },
}

/// Expiration-time distribution of one random clock. Support is contained
/// in the nonnegative reals and total mass is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    FoldedNormal {
        mu: f64,
        sigma: f64,
    },
    #[serde(alias = "exp")]
    Exponential {
        lambda: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
}

/// Per-dimension integration interval after tightening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lo: f64,
    pub hi: f64,
}

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), StochError> {
        let fail = |msg: String| Err(StochError::InvalidDistribution(msg));
        match *self {
            DistributionSpec::FoldedNormal { mu, sigma } => {
                if !(mu >= 0.0 && mu.is_finite()) {
                    return fail(format!("folded normal requires mu >= 0, got {mu}"));
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return fail(format!("folded normal requires sigma > 0, got {sigma}"));
                }
            }
            DistributionSpec::Exponential { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return fail(format!("exponential requires lambda > 0, got {lambda}"));
                }
            }
            DistributionSpec::Uniform { a, b } => {
                if !(a >= 0.0 && b > a && b.is_finite()) {
                    return fail(format!("uniform requires 0 <= a < b, got a={a}, b={b}"));
                }
            }
        }
        Ok(())
    }

    /// Density at `x`; zero for negative arguments.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            DistributionSpec::FoldedNormal { mu, sigma } => {
                (phi((x - mu) / sigma) + phi((x + mu) / sigma)) / sigma
            }
            DistributionSpec::Exponential { lambda } => lambda * (-lambda * x).exp(),
            DistributionSpec::Uniform { a, b } => {
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
        }
    }

    /// Mass of `[lo, hi] ∩ [0, ∞)`, by closed forms. The folded-normal case
    /// goes through `erfc` so deep tails keep full relative accuracy.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let lo = lo.max(0.0);
        if hi <= lo {
            return 0.0;
        }
        match *self {
            DistributionSpec::FoldedNormal { mu, sigma } => {
                let c = sigma * SQRT_2;
                let piece = |shift: f64| {
                    0.5 * (erfc((lo + shift) / c) - erfc((hi + shift) / c))
                };
                (piece(-mu) + piece(mu)).clamp(0.0, 1.0)
            }
            DistributionSpec::Exponential { lambda } => {
                ((-lambda * lo).exp() - (-lambda * hi).exp()).clamp(0.0, 1.0)
            }
            DistributionSpec::Uniform { a, b } => {
                let overlap = (hi.min(b) - lo.max(a)).max(0.0);
                overlap / (b - a)
            }
        }
    }

    /// Center the binary searches aim at.
    fn search_target(&self) -> f64 {
        match *self {
            DistributionSpec::FoldedNormal { mu, .. } => mu,
            DistributionSpec::Exponential { lambda } => 1.0 / lambda,
            DistributionSpec::Uniform { a, b } => 0.5 * (a + b),
        }
    }

    /// Tighten the per-dimension integration interval inside `[0, t_int]`.
    ///
    /// Each side discards at most `tau` of mass, so
    /// `mass([lo, hi]) >= mass([0, t_int]) - 2·tau`. The folded normal
    /// starts from a symmetric window around the mean and corrects the
    /// inducing side before the final binary searches; the exponential
    /// upper bound is analytic; the uniform rule clips the support and the
    /// binary searches cannot move it.
    pub fn tighten_bounds(&self, t_int: f64, tau: f64) -> Result<BoundPair, StochError> {
        self.validate()?;
        if !(tau > 0.0 && tau < 1.0) {
            return Err(StochError::InvalidTau(tau));
        }
        if !(t_int > 0.0 && t_int.is_finite()) {
            return Err(StochError::InvalidTInt(t_int));
        }
        let (mut lo, mut hi) = match *self {
            DistributionSpec::FoldedNormal { mu, .. } => {
                if 2.0 * mu - t_int < 0.0 {
                    let mut hi = 2.0 * mu;
                    if self.interval_mass(hi, t_int) > tau {
                        hi = self.find_smaller(t_int, hi, t_int, tau);
                    }
                    (0.0, hi)
                } else {
                    let mut lo = 2.0 * mu - t_int;
                    if self.interval_mass(0.0, lo) > tau {
                        lo = self.find_larger(0.0, lo.min(t_int), tau);
                    }
                    (lo, t_int)
                }
            }
            DistributionSpec::Exponential { lambda } => {
                (0.0, t_int.min(-tau.ln() / lambda))
            }
            DistributionSpec::Uniform { a, b } => (a.max(0.0), b.min(t_int)),
        };
        let target = self.search_target();
        if lo < target.min(hi) {
            lo = self.find_larger(lo, target.min(hi), tau);
        }
        if hi > target.max(lo) {
            hi = self.find_smaller(hi, target.max(lo), t_int, tau);
        }
        if lo >= hi {
            return Err(StochError::DegenerateBounds { lo, hi, t_int });
        }
        Ok(BoundPair { lo, hi })
    }

    /// Largest `L` in `[lo, cap]` with `mass([0, L]) <= tau`; assumes `lo`
    /// itself qualifies, so the result never over-discards.
    fn find_larger(&self, lo: f64, cap: f64, tau: f64) -> f64 {
        debug_assert!(self.interval_mass(0.0, lo) <= tau);
        let mut good = lo;
        let mut bad = cap;
        if self.interval_mass(0.0, bad) <= tau {
            return bad;
        }
        let mut iters = 0;
        while bad - good > BISECT_WIDTH && iters < BISECT_MAX_ITERS {
            let mid = 0.5 * (good + bad);
            if self.interval_mass(0.0, mid) <= tau {
                good = mid;
            } else {
                bad = mid;
            }
            iters += 1;
        }
        good
    }

    /// Smallest `R` in `[floor, hi]` with `mass([R, t_int]) <= tau`; assumes
    /// `hi` itself qualifies.
    fn find_smaller(&self, hi: f64, floor: f64, t_int: f64, tau: f64) -> f64 {
        debug_assert!(self.interval_mass(hi, t_int) <= tau);
        let mut good = hi;
        let mut bad = floor;
        if self.interval_mass(bad, t_int) <= tau {
            return bad;
        }
        let mut iters = 0;
        while good - bad > BISECT_WIDTH && iters < BISECT_MAX_ITERS {
            let mid = 0.5 * (good + bad);
            if self.interval_mass(mid, t_int) <= tau {
                good = mid;
            } else {
                bad = mid;
            }
            iters += 1;
        }
        good
    }

    pub fn describe(&self) -> String {
        match *self {
            DistributionSpec::FoldedNormal { mu, sigma } => {
                format!("folded_normal(mu={mu}, sigma={sigma})")
            }
            DistributionSpec::Exponential { lambda } => format!("exponential(lambda={lambda})"),
            DistributionSpec::Uniform { a, b } => format!("uniform({a}, {b})"),
        }
    }
}

/// Product density of independent clock copies at a sample point.
pub fn joint_density(dists: &[DistributionSpec], point: &[f64]) -> f64 {
    debug_assert_eq!(dists.len(), point.len());
    dists
        .iter()
        .zip(point)
        .map(|(d, &x)| d.pdf(x))
        .product()
}
