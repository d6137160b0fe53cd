//! Value types, welfare arithmetic, parameter derivation and the two priors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Zero};

use crate::rng::{self, Purpose};
use crate::{Error, IndexSet, Rational};

/// Which of the two type spaces a profile lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Setting {
    /// Binary values: `x ∈ {0,1}ⁿ`, one coordinate per agent.
    SingleParameter,
    /// One additive agent over `n` goods: `x ∈ {0,1,α}ⁿ`.
    MultiDimensional,
}

/// One reported input vector `x`.
///
/// Construction does not enforce the setting's value set, so verifiers can be
/// run on arbitrary non-negative rational profiles; use
/// [`TypeProfile::check_domain`] to test membership in a prior's support.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeProfile {
    values: Vec<Rational>,
    setting: Setting,
}

impl TypeProfile {
    pub fn new(values: Vec<Rational>, setting: Setting) -> Self {
        TypeProfile { values, setting }
    }

    /// The binary profile whose value-1 coordinates are `support`.
    pub fn binary(support: &IndexSet) -> Self {
        Self::uniform_on(support, Rational::one(), Setting::SingleParameter)
    }

    /// `value` on every index of `support`, zero elsewhere (e.g. `α·T`).
    pub fn uniform_on(support: &IndexSet, value: Rational, setting: Setting) -> Self {
        let mut values = vec![Rational::zero(); support.universe()];
        for i in support.iter() {
            values[i] = value;
        }
        TypeProfile { values, setting }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    /// Indices with non-zero value.
    pub fn support(&self) -> IndexSet {
        IndexSet::from_indices(self.n(), self.values.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, _)| i))
    }

    /// `|x|`: number of non-zero coordinates.
    pub fn support_len(&self) -> usize {
        self.values.iter().filter(|v| !v.is_zero()).count()
    }

    pub fn total_value(&self) -> Rational {
        self.values.iter().fold(Rational::zero(), |acc, v| acc + v)
    }

    /// Checks that the profile belongs to the type space of `setting` under `params`.
    pub fn check_domain(&self, params: &Params) -> Result<(), Error> {
        if self.n() != params.n {
            return Err(Error::DimensionMismatch { expected: params.n, got: self.n() });
        }
        let allowed = |v: &Rational| match self.setting {
            Setting::SingleParameter => v.is_zero() || v.is_one(),
            Setting::MultiDimensional => v.is_zero() || v.is_one() || *v == params.alpha,
        };
        match self.values.iter().position(|v| !allowed(v)) {
            None => Ok(()),
            Some(i) => {
                Err(Error::Structural(format!("coordinate {i} has value {} outside the {:?} type space", self.values[i], self.setting)))
            }
        }
    }
}

/// An outcome `y ∈ {0,1}ⁿ`, stored as the set of served indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation {
    served: IndexSet,
}

impl Allocation {
    pub fn empty(n: usize) -> Self {
        Allocation { served: IndexSet::empty(n) }
    }

    pub fn new(served: IndexSet) -> Self {
        Allocation { served }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, indices: I) -> Self {
        Allocation { served: IndexSet::from_indices(n, indices) }
    }

    pub fn served(&self) -> &IndexSet {
        &self.served
    }

    pub fn into_served(self) -> IndexSet {
        self.served
    }

    pub fn n(&self) -> usize {
        self.served.universe()
    }

    pub fn is_empty(&self) -> bool {
        self.served.is_empty()
    }

    pub fn len(&self) -> usize {
        self.served.len()
    }
}

/// `Wel(y, x) = Σ_{i ∈ y} x_i`.
pub fn welfare(x: &TypeProfile, y: &Allocation) -> Result<Rational, Error> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch { expected: x.n(), got: y.n() });
    }
    Ok(welfare_unchecked(x, y))
}

pub(crate) fn welfare_unchecked(x: &TypeProfile, y: &Allocation) -> Rational {
    y.served.iter().fold(Rational::zero(), |acc, i| acc + x.values[i])
}

/// Integer parameters of the adversarial family and its priors.
///
/// Thresholds are stored already multiplied by `N`, so `overlap` is `ε_ST·N`,
/// `s_threshold` is `ε_S·N` and `t_threshold` is `ε_T·N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Params {
    pub n: usize,
    pub epsilon: Rational,
    /// `N`: the largest support `A_{S,T}` will serve.
    pub max_support: usize,
    /// `|S ∩ T|`.
    pub overlap: usize,
    pub s_threshold: usize,
    pub t_threshold: usize,
    /// The high value of the multi-dimensional type space, `2/ε_ST`.
    pub alpha: Rational,
    /// Per-coordinate activation probability `3N/4n`.
    pub activation_prob: Rational,
}

/// Explicit values that take precedence over derived ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamOverrides {
    pub max_support: Option<usize>,
    pub overlap: Option<usize>,
    pub s_threshold: Option<usize>,
    pub t_threshold: Option<usize>,
    pub alpha: Option<Rational>,
    pub activation_prob: Option<Rational>,
}

/// Default `ε` used when a configuration does not name one.
pub fn default_epsilon() -> Rational {
    Rational::new(1, 20)
}

impl Params {
    /// Builds a parameter set from the free integers, filling in the dependent fields.
    pub fn new(n: usize, epsilon: Rational, max_support: usize, overlap: usize, t_threshold: usize) -> Result<Self, Error> {
        Self::resolve(
            n,
            epsilon,
            &ParamOverrides {
                max_support: Some(max_support),
                overlap: Some(overlap),
                t_threshold: Some(t_threshold),
                ..Default::default()
            },
        )
    }

    /// Derives every field not fixed by `overrides`, then validates the result.
    pub fn resolve(n: usize, epsilon: Rational, overrides: &ParamOverrides) -> Result<Self, Error> {
        if n < 4 {
            return Err(Error::ParameterInfeasible(format!("n = {n} is below the minimum of 4")));
        }
        if epsilon <= Rational::zero() {
            return Err(Error::ParameterInfeasible(format!("epsilon = {epsilon} must be positive")));
        }
        let nf = n as f64;
        let max_support = match overrides.max_support {
            Some(m) => m,
            None => {
                let raw = libm::round(libm::pow(nf, 0.5 + 2.0 * crate::to_f64(&epsilon))) as usize;
                raw + raw % 2
            }
        };
        let big_n = max_support as f64;
        let overlap = overrides.overlap.unwrap_or_else(|| (libm::round(libm::pow(nf, -0.25) * big_n) as usize).max(1));
        let s_threshold = overrides.s_threshold.unwrap_or(2 * overlap);
        let t_threshold = overrides.t_threshold.unwrap_or_else(|| (libm::round(16.0 * libm::pow(nf, -0.5) * big_n) as usize).max(1));
        if overlap == 0 {
            return Err(Error::ParameterInfeasible("eps_ST_N must be positive".into()));
        }
        let alpha = overrides.alpha.unwrap_or_else(|| Rational::new(2 * max_support as i64, overlap as i64));
        let activation_prob = overrides.activation_prob.unwrap_or_else(|| Rational::new(3 * max_support as i64, 4 * n as i64));
        let params = Params { n, epsilon, max_support, overlap, s_threshold, t_threshold, alpha, activation_prob };
        params.validate()?;
        Ok(params)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), Error> {
        let fail = |msg| Err(Error::ParameterInfeasible(msg));
        let big_n = self.max_support;
        if self.n < 4 {
            return fail(format!("n = {} is below the minimum of 4", self.n));
        }
        if big_n == 0 || !big_n.is_multiple_of(2) {
            return fail(format!("N = {big_n} must be a positive even integer"));
        }
        if big_n > self.n {
            return fail(format!("N = {big_n} exceeds n = {}", self.n));
        }
        if self.overlap == 0 || self.t_threshold == 0 {
            return fail("eps_ST_N and eps_T_N must be positive".into());
        }
        if self.s_threshold != 2 * self.overlap {
            return fail(format!("eps_S_N = {} must equal 2 * eps_ST_N = {}", self.s_threshold, 2 * self.overlap));
        }
        if self.s_threshold > big_n / 2 {
            return fail(format!("eps_S_N = {} exceeds N/2 = {}", self.s_threshold, big_n / 2));
        }
        let alpha = Rational::new(2 * big_n as i64, self.overlap as i64);
        if self.alpha != alpha {
            return fail(format!("alpha = {} must equal 2N/eps_ST_N = {alpha}", self.alpha));
        }
        let q = Rational::new(3 * big_n as i64, 4 * self.n as i64);
        if self.activation_prob != q {
            return fail(format!("bernoulli_q = {} must equal 3N/4n = {q}", self.activation_prob));
        }
        if q >= Rational::one() {
            return fail(format!("bernoulli_q = {q} is not below 1"));
        }
        Ok(())
    }

    /// `ε_ST = |S∩T| / N`.
    pub fn overlap_fraction(&self) -> Rational {
        Rational::new(self.overlap as i64, self.max_support as i64)
    }

    /// `|S| = |T| = N/2`.
    pub fn half(&self) -> usize {
        self.max_support / 2
    }

    /// Whether `ε_ST > 2N/n`, the side condition of the query lower bound.
    pub fn overlap_dominates_density(&self) -> bool {
        self.overlap_fraction() > Rational::new(2 * self.max_support as i64, self.n as i64)
    }

    /// Whether a valid pair exists: `|S ∪ T| = N − |S∩T|` must fit in `n`.
    pub fn admits_valid_pair(&self) -> bool {
        self.max_support - self.overlap <= self.n
    }
}

/// Derives parameters from `n` and `ε` with the standard rounding.
pub fn derive_params(n: usize, epsilon: Rational) -> Result<Params, Error> {
    Params::resolve(n, epsilon, &ParamOverrides::default())
}

/// The product prior over type profiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorDistribution {
    pub params: Params,
    pub setting: Setting,
    pub seed: u64,
}

impl PriorDistribution {
    pub fn new(params: Params, setting: Setting, seed: u64) -> Self {
        PriorDistribution { params, setting, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        PriorDistribution { seed, ..self.clone() }
    }

    /// Probability that a coordinate takes the high value `α`, given it is non-zero.
    pub fn high_prob(&self) -> Rational {
        self.params.alpha.recip()
    }

    /// The `index`-th profile of this prior's stream.
    pub fn sample(&self, index: u64) -> TypeProfile {
        sample_profile(self, index)
    }
}

/// Draws the `index`-th profile of the deterministic stream keyed by `dist.seed`.
///
/// Coordinate `i` consumes slot `i` of the stream: the first word decides
/// whether it is active, the second whether an active multi-dimensional
/// coordinate is raised to `α`.
pub fn sample_profile(dist: &PriorDistribution, index: u64) -> TypeProfile {
    sample_profile_for(dist, Purpose::Profile, index)
}

/// Same as [`sample_profile`] but on the stream reserved for `purpose`, so
/// consumers sharing a seed draw independent profiles.
pub(crate) fn sample_profile_for(dist: &PriorDistribution, purpose: Purpose, index: u64) -> TypeProfile {
    let params = &dist.params;
    let mut rng = rng::stream(dist.seed, purpose, index);
    let high = dist.high_prob();
    let values = (0..params.n)
        .map(|_| {
            let active = rng::bernoulli(&mut rng, &params.activation_prob);
            let raised = rng::bernoulli(&mut rng, &high);
            match (active, dist.setting) {
                (false, _) => Rational::zero(),
                (true, Setting::MultiDimensional) if raised => params.alpha,
                (true, _) => Rational::one(),
            }
        })
        .collect();
    TypeProfile::new(values, dist.setting)
}

/// Number of profiles in the finite type space.
pub fn domain_size(n: usize, setting: Setting) -> u128 {
    let base: u128 = match setting {
        Setting::SingleParameter => 2,
        Setting::MultiDimensional => 3,
    };
    base.checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Enumerates `{0,1}ⁿ` or `{0,1,α}ⁿ` in counting order (coordinate 0 fastest).
pub fn enumerate_domain(n: usize, setting: Setting, alpha: Rational) -> impl Iterator<Item = TypeProfile> {
    let levels: Vec<Rational> = match setting {
        Setting::SingleParameter => vec![Rational::zero(), Rational::one()],
        Setting::MultiDimensional => vec![Rational::zero(), Rational::one(), alpha],
    };
    let mut digits = vec![0usize; n];
    let mut done = false;
    core::iter::from_fn(move || {
        if done {
            return None;
        }
        let profile = TypeProfile::new(digits.iter().map(|&d| levels[d]).collect(), setting);
        done = true;
        for d in digits.iter_mut() {
            *d += 1;
            if *d < levels.len() {
                done = false;
                break;
            }
            *d = 0;
        }
        Some(profile)
    })
}
