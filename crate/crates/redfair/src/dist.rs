//! Uncertain agent-task cost models and frozen scenario tensors.
//!
//! Costs are random variables. To make set-function optimization well behaved,
//! a solve draws one [`SampleMatrix`] up front (common random numbers) and every
//! cost evaluation afterwards reads from that frozen tensor, so each task cost
//! is a deterministic function of the assignment. Resampling inside a solve is
//! forbidden by construction: the matrix is immutable once built.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemInstance;

/// Default cap on the joint support enumerated by [`exact_min_expectation`].
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// A random travel-time/cost model for one agent-task edge.
///
/// Serializes as `{"kind":"tgauss","mean":15.0,"std":5.0,"lower":5.0}` or
/// `{"kind":"discrete","support":[[10.0,0.5],[30.0,0.5]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Distribution {
    /// A Gaussian conditioned on being at least `lower`.
    #[serde(rename = "tgauss")]
    TruncatedGaussian { mean: f64, std: f64, lower: f64 },
    /// A finite support of `(value, probability)` atoms.
    #[serde(rename = "discrete")]
    Discrete { support: Vec<(f64, f64)> },
}

impl Distribution {
    /// A Gaussian with the given location and scale, conditioned on being
    /// `>= lower`.
    ///
    /// Sampling uses the inverse-CDF transform: one uniform draw is mapped
    /// through the truncated quantile function, so a draw consumes exactly one
    /// RNG value and is reproducible from the seed alone.
    pub fn truncated_gaussian(mean: f64, std: f64, lower: f64) -> Result<Self> {
        if !std.is_finite() || std <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "truncated gaussian needs std > 0, got {std}"
            )));
        }
        if !mean.is_finite() || !lower.is_finite() || lower < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "truncated gaussian needs finite mean and lower >= 0, got mean={mean} lower={lower}"
            )));
        }
        if math::normal_cdf((lower - mean) / std) > 1.0 - 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "truncation at {lower} removes nearly all mass of N({mean}, {std}^2)"
            )));
        }
        Ok(Distribution::TruncatedGaussian { mean, std, lower })
    }

    /// A finite distribution over strictly positive values. Probabilities must
    /// lie in `(0, 1]` and sum to 1 within `1e-12`.
    pub fn discrete(support: Vec<(f64, f64)>) -> Result<Self> {
        let d = Distribution::Discrete { support };
        d.validate()?;
        if let Distribution::Discrete { support } = &d {
            if let Some((v, _)) = support.iter().find(|(v, _)| *v <= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "discrete support values must be strictly positive, got {v}"
                )));
            }
        }
        Ok(d)
    }

    /// A single strictly positive atom.
    pub fn point_mass(value: f64) -> Result<Self> {
        Self::discrete(vec![(value, 1.0)])
    }

    /// A uniform empirical distribution over observed values.
    ///
    /// Unlike [`Distribution::discrete`] this accepts zeros: network-derived
    /// travel times are zero when an agent starts at its task's node.
    pub fn empirical(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "empirical distribution needs at least one value".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "empirical values must be finite and >= 0, got {v}"
            )));
        }
        let p = 1.0 / values.len() as f64;
        Ok(Distribution::Discrete {
            support: values.iter().map(|&v| (v, p)).collect(),
        })
    }

    /// Checks the structural invariants shared by every construction path,
    /// including deserialized values.
    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::TruncatedGaussian { mean, std, lower } => {
                Self::truncated_gaussian(*mean, *std, *lower).map(|_| ())
            }
            Distribution::Discrete { support } => {
                if support.is_empty() {
                    return Err(Error::InvalidParameter(
                        "discrete support must be nonempty".into(),
                    ));
                }
                let mut total = 0.0;
                for &(v, p) in support {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "discrete support values must be finite and >= 0, got {v}"
                        )));
                    }
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "discrete probabilities must lie in (0, 1], got {p}"
                        )));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "discrete probabilities sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The exact mean: the truncated-normal moment for Gaussians, the weighted
    /// sum of atoms for discrete supports.
    pub fn mean(&self) -> f64 {
        match self {
            Distribution::TruncatedGaussian { mean, std, lower } => {
                let a = (lower - mean) / std;
                mean + std * math::normal_pdf(a) / (1.0 - math::normal_cdf(a))
            }
            Distribution::Discrete { support } => support.iter().map(|(v, p)| v * p).sum(),
        }
    }

    /// Draws one value. Truncated Gaussians always return at least `lower`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::TruncatedGaussian { mean, std, lower } => {
                let p_lo = math::normal_cdf((lower - mean) / std);
                // u in [0, 1) keeps p strictly below 1, so the quantile is finite.
                let u = rng.gen::<f64>();
                let p = p_lo + u * (1.0 - p_lo);
                (mean + std * math::normal_inv_cdf(p)).max(*lower)
            }
            Distribution::Discrete { support } => {
                let u = rng.gen::<f64>();
                let mut acc = 0.0;
                for &(v, p) in support {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                // Rounding in the cumulative sum can leave u >= acc.
                support.last().map(|&(v, _)| v).unwrap_or(f64::NAN)
            }
        }
    }

    fn discrete_support(&self) -> Option<&[(f64, f64)]> {
        match self {
            Distribution::Discrete { support } => Some(support),
            _ => None,
        }
    }
}

/// The frozen `S x N x M` scenario tensor of cost draws.
///
/// Entry `(s, i, j)` is the scenario-`s` cost of agent `i` serving task `j`.
/// Regenerating with the same seed and instance reproduces the tensor
/// bit-exactly; scenario `s` draws from its own RNG stream derived from
/// `(seed, s)`, so sampling may be parallelized across scenarios without
/// changing the result.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    samples: Vec<f64>,
    scenarios: usize,
    agents: usize,
    tasks: usize,
    seed: u64,
}

impl SampleMatrix {
    /// Wraps raw per-scenario costs. Values must be finite and nonnegative;
    /// zeros are allowed (an agent colocated with a task has zero travel time).
    pub fn from_samples(
        samples: Vec<f64>,
        scenarios: usize,
        agents: usize,
        tasks: usize,
        seed: u64,
    ) -> Result<Self> {
        if scenarios == 0 || agents == 0 || tasks == 0 {
            return Err(Error::InvalidParameter(
                "sample matrix dimensions must be positive".into(),
            ));
        }
        if samples.len() != scenarios * agents * tasks {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                scenarios * agents * tasks,
                samples.len()
            )));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample costs must be finite and >= 0, got {v}"
            )));
        }
        Ok(SampleMatrix { samples, scenarios, agents, tasks, seed })
    }

    pub fn scenarios(&self) -> usize {
        self.scenarios
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn tasks(&self) -> usize {
        self.tasks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The cost draw for `(scenario, agent, task)`.
    #[inline]
    pub fn value(&self, scenario: usize, agent: usize, task: usize) -> f64 {
        debug_assert!(scenario < self.scenarios && agent < self.agents && task < self.tasks);
        self.samples[(scenario * self.agents + agent) * self.tasks + task]
    }

    /// Mean over scenarios of the minimum cost among `agents` for `task`.
    pub fn mean_min_cost(&self, agents: &[usize], task: usize) -> f64 {
        let mut total = 0.0;
        for s in 0..self.scenarios {
            let mut best = f64::INFINITY;
            for &i in agents {
                let v = self.value(s, i, task);
                if v < best {
                    best = v;
                }
            }
            total += best;
        }
        total / self.scenarios as f64
    }
}

/// The RNG stream for scenario `s` of a tensor seeded with `seed`.
pub(crate) fn scenario_rng(seed: u64, scenario: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(scenario as u64);
    rng
}

/// Draws the frozen scenario tensor for `instance`: entry `(s, i, j)` is the
/// `s`-th independent draw from edge `(i, j)`'s distribution. Edges are drawn
/// in row-major `(agent, task)` order within each scenario stream.
pub fn sample_cost_matrix(
    instance: &ProblemInstance,
    scenarios: usize,
    seed: u64,
) -> Result<SampleMatrix> {
    if scenarios == 0 {
        return Err(Error::InvalidParameter(
            "at least one scenario is required".into(),
        ));
    }
    let (n, m) = (instance.agents(), instance.tasks());
    let mut samples = vec![0.0; scenarios * n * m];
    for s in 0..scenarios {
        let mut rng = scenario_rng(seed, s);
        for i in 0..n {
            for j in 0..m {
                let v = instance.edge(i, j).sample(&mut rng);
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "edge ({i}, {j}) produced a non-positive cost draw {v}"
                    )));
                }
                samples[(s * n + i) * m + j] = v;
            }
        }
    }
    SampleMatrix::from_samples(samples, scenarios, n, m, seed)
}

/// `E[min of one independent draw per distribution]` by exact enumeration of
/// the joint product support, using the default cap.
pub fn exact_min_expectation(dists: &[&Distribution]) -> Result<f64> {
    exact_min_expectation_capped(dists, DEFAULT_ENUMERATION_CAP)
}

/// Like [`exact_min_expectation`] with an explicit cap on the joint support
/// size. Exceeding the cap returns [`Error::TooLarge`] so callers can fall
/// back to a [`SampleMatrix`].
pub fn exact_min_expectation_capped(dists: &[&Distribution], cap: usize) -> Result<f64> {
    if dists.is_empty() {
        return Err(Error::InvalidParameter(
            "expected at least one distribution".into(),
        ));
    }
    let supports: Vec<&[(f64, f64)]> = dists
        .iter()
        .map(|d| {
            d.discrete_support().ok_or_else(|| {
                Error::InvalidParameter(
                    "exact expectation requires discrete distributions".into(),
                )
            })
        })
        .collect::<Result<_>>()?;
    let mut joint = 1usize;
    for s in &supports {
        joint = joint
            .checked_mul(s.len())
            .filter(|&j| j <= cap)
            .ok_or_else(|| {
                Error::TooLarge(format!("joint support exceeds cap of {cap}"))
            })?;
    }

    // Odometer over the product support.
    let mut idx = vec![0usize; supports.len()];
    let mut expectation = 0.0;
    loop {
        let mut prob = 1.0;
        let mut min = f64::INFINITY;
        for (k, s) in supports.iter().enumerate() {
            let (v, p) = s[idx[k]];
            prob *= p;
            if v < min {
                min = v;
            }
        }
        expectation += prob * min;

        let mut k = supports.len();
        loop {
            if k == 0 {
                return Ok(expectation);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < supports[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub(crate) mod math {
    //! Normal CDF via the Abramowitz-Stegun erf approximation and its inverse
    //! via Acklam's rational approximation plus one Halley refinement.

    const SQRT_2PI: f64 = 2.5066282746310002;

    #[inline]
    pub fn normal_pdf(z: f64) -> f64 {
        (-0.5 * z * z).exp() / SQRT_2PI
    }

    pub fn erf(x: f64) -> f64 {
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        let x = x.abs();
        let t = 1.0 / (1.0 + 0.3275911 * x);
        let y = 1.0
            - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
                + 0.254829592)
                * t
                * (-x * x).exp();
        sign * y
    }

    pub fn normal_cdf(z: f64) -> f64 {
        0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
    }

    pub fn normal_inv_cdf(p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0, "p must be in (0, 1), got {p}");

        const A: [f64; 6] = [
            -3.969683028665376e+01,
            2.209460984245205e+02,
            -2.759285104469687e+02,
            1.383577518672690e+02,
            -3.066479806614716e+01,
            2.506628277459239e+00,
        ];
        const B: [f64; 5] = [
            -5.447609879822406e+01,
            1.615858368580409e+02,
            -1.556989798598866e+02,
            6.680131188771972e+01,
            -1.328068155288572e+01,
        ];
        const C: [f64; 6] = [
            -7.784894002430293e-03,
            -3.223964580411365e-01,
            -2.400758277161838e+00,
            -2.549732539343734e+00,
            4.374664141464968e+00,
            2.938163982698783e+00,
        ];
        const D: [f64; 4] = [
            7.784695709041462e-03,
            3.224671290700398e-01,
            2.445134137142996e+00,
            3.754408661907416e+00,
        ];
        const P_LOW: f64 = 0.02425;

        // The tail rational approximation already carries the sign of the
        // lower tail; the upper tail is its mirror image.
        if p < P_LOW {
            let q = (-2.0 * p.ln()).sqrt();
            (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
                / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
        } else if p > 1.0 - P_LOW {
            let q = (-2.0 * (1.0 - p).ln()).sqrt();
            -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
                / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
        } else {
            let q = p - 0.5;
            let r = q * q;
            (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
                / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
        }
    }
}
