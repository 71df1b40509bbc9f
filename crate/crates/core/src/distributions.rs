//! Item-size distributions, quantiles and samplers for the stochastic and
//! random-permutation arrival models.

use std::fmt;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{DistributionError, ParseError};
use crate::model::{Instance, Size, CONTINUOUS_DEN};
use crate::rng::{rng_from_seed, Rng};

pub type Rational = Ratio<u64>;

/// A distribution of item sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DistributionSpec {
    /// Finite support of integer sizes over capacity `capacity`.
    Discrete {
        capacity: u64,
        support: Vec<u64>,
        probs: Vec<Rational>,
    },
    /// Uniform on (0, 1), quantized to [`CONTINUOUS_DEN`].
    Uniform,
    /// Atoms at `1/2 - epsilon` and `1/2 + epsilon`, each with probability 1/2.
    TwoPoint { epsilon: Rational },
}

impl DistributionSpec {
    pub fn discrete(
        capacity: u64,
        support: Vec<u64>,
        probs: Vec<Rational>,
    ) -> Result<Self, ParseError> {
        let bad = |m: &str| Err(ParseError::Distribution(m.to_string()));
        if support.is_empty() || support.len() != probs.len() {
            return bad("support and probs must be nonempty and of equal length");
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return bad("support must be strictly ascending");
        }
        if support[0] == 0 || *support.last().unwrap() >= capacity {
            return bad("support values must lie in [1, capacity - 1]");
        }
        if probs.iter().any(|p| *p.numer() == 0) {
            return bad("probabilities must be positive");
        }
        let total = probs
            .iter()
            .fold(Rational::from_integer(0), |acc, p| acc + p);
        if total != Rational::from_integer(1) {
            return bad("probabilities must sum to exactly 1");
        }
        Ok(DistributionSpec::Discrete {
            capacity,
            support,
            probs,
        })
    }

    pub fn two_point(epsilon: Rational) -> Result<Self, ParseError> {
        if *epsilon.numer() == 0 || epsilon >= Rational::new(1, 2) {
            return Err(ParseError::Distribution(
                "epsilon must lie in (0, 1/2)".into(),
            ));
        }
        Ok(DistributionSpec::TwoPoint { epsilon })
    }

    /// Uniform over the given integer sizes.
    pub fn discrete_uniform(capacity: u64, sizes: Vec<u64>) -> Result<Self, ParseError> {
        let n = sizes.len() as u64;
        let probs = vec![Rational::new(1, n.max(1)); sizes.len()];
        Self::discrete(capacity, sizes, probs)
    }

    /// B = 9, p2 = 35/48, p3 = 13/48.
    pub fn bounded_waste() -> Self {
        Self::discrete(
            9,
            vec![2, 3],
            vec![Rational::new(35, 48), Rational::new(13, 48)],
        )
        .unwrap()
    }

    /// B = 10, p1 = p3 = p5 = 1/4, p4 = p8 = 1/8.
    pub fn perfectly_packable() -> Self {
        let q = Rational::new(1, 4);
        let e = Rational::new(1, 8);
        Self::discrete(10, vec![1, 3, 4, 5, 8], vec![q, q, e, q, e]).unwrap()
    }

    /// B = 10, p3 = p4 = p5 = p8 = 1/4.
    pub fn linear_waste() -> Self {
        Self::discrete_uniform(10, vec![3, 4, 5, 8]).unwrap()
    }

    /// Denominator of every size this distribution produces.
    pub fn capacity(&self) -> u64 {
        match self {
            DistributionSpec::Discrete { capacity, .. } => *capacity,
            _ => CONTINUOUS_DEN,
        }
    }

    pub fn is_integer_regime(&self) -> bool {
        matches!(self, DistributionSpec::Discrete { .. })
    }

    /// Atoms of a finitely supported distribution, `None` for `Uniform`.
    pub fn atoms(&self) -> Option<Vec<(u64, Rational)>> {
        match self {
            DistributionSpec::Discrete { support, probs, .. } => {
                Some(support.iter().copied().zip(probs.iter().copied()).collect())
            }
            DistributionSpec::Uniform => None,
            DistributionSpec::TwoPoint { .. } => {
                let (lo, hi) = self.two_point_values();
                let half = Rational::new(1, 2);
                Some(vec![(lo, half), (hi, half)])
            }
        }
    }

    fn two_point_values(&self) -> (u64, u64) {
        let DistributionSpec::TwoPoint { epsilon } = self else {
            unreachable!("two_point_values on another variant")
        };
        let lo = (Rational::new(1, 2) - epsilon) * CONTINUOUS_DEN;
        let lo = lo.round().to_integer();
        (lo, CONTINUOUS_DEN - lo)
    }

    /// `F^{-1}(alpha) = inf { y : F(y) >= alpha }` as a numerator over
    /// [`capacity`](Self::capacity), with `F^{-1}(0) = 0` and `F^{-1}(1) = 1`.
    pub fn quantile(&self, alpha: Rational) -> u64 {
        let one = Rational::from_integer(1);
        assert!(alpha <= one, "alpha must lie in [0, 1]");
        let cap = self.capacity();
        if *alpha.numer() == 0 {
            return 0;
        }
        if alpha == one {
            return cap;
        }
        match self {
            DistributionSpec::Uniform => {
                let v = (alpha * cap).ceil().to_integer();
                v.clamp(1, cap)
            }
            _ => {
                let atoms = self.atoms().expect("finite support");
                let mut cum = Rational::from_integer(0);
                for (value, p) in &atoms {
                    cum += p;
                    if cum >= alpha {
                        return *value;
                    }
                }
                atoms.last().unwrap().0
            }
        }
    }

    /// Quantile instance `F^{-1}(i/T)` for `i = 0..T-1` (unshifted) or `i = 1..T`
    /// (shifted). Zero quantiles are dropped; a quantile of 1 is a full-bin item.
    pub fn quantile_instance(&self, t: usize, shifted: bool) -> Instance {
        assert!(t >= 1, "quantile instance needs T >= 1");
        let range = if shifted { 1..=t } else { 0..=t - 1 };
        let sizes = range
            .map(|i| self.quantile(Rational::new(i as u64, t as u64)))
            .filter(|&v| v > 0)
            .map(Size::raw)
            .collect();
        Instance::from_sizes_unchecked(self.capacity(), sizes)
    }

    pub fn sample_iid(&self, t: usize, seed: u64) -> Instance {
        self.sample_iid_with(t, &mut rng_from_seed(seed))
    }

    pub fn sample_iid_with(&self, t: usize, rng: &mut Rng) -> Instance {
        let sizes = match self {
            DistributionSpec::Uniform => (0..t)
                .map(|_| Size::raw(rng.gen_range(1..CONTINUOUS_DEN)))
                .collect(),
            DistributionSpec::TwoPoint { .. } => {
                let (lo, hi) = self.two_point_values();
                (0..t)
                    .map(|_| Size::raw(if rng.gen::<bool>() { hi } else { lo }))
                    .collect()
            }
            DistributionSpec::Discrete { support, probs, .. } => {
                let den = probs
                    .iter()
                    .fold(1u64, |l, p| num_integer_lcm(l, *p.denom()));
                let mut cum = Vec::with_capacity(probs.len());
                let mut acc = 0u64;
                for p in probs {
                    acc += p.numer() * (den / p.denom());
                    cum.push(acc);
                }
                debug_assert_eq!(acc, den);
                (0..t)
                    .map(|_| {
                        let r = rng.gen_range(0..den);
                        let j = cum.partition_point(|&c| c <= r);
                        Size::raw(support[j])
                    })
                    .collect()
            }
        };
        Instance::from_sizes_unchecked(self.capacity(), sizes)
    }

    /// Short identifier for tables.
    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn from_toml(text: &str) -> Result<Self, ParseError> {
        let raw: RawSpec = toml::from_str(text)?;
        raw.into_spec()
    }

    pub fn to_toml(&self) -> String {
        match self {
            DistributionSpec::Uniform => "kind = \"uniform\"\n".to_string(),
            DistributionSpec::TwoPoint { epsilon } => {
                format!(
                    "kind = \"two-point\"\nepsilon = \"{}\"\n",
                    fmt_ratio(epsilon)
                )
            }
            DistributionSpec::Discrete {
                capacity,
                support,
                probs,
            } => {
                let support: Vec<String> = support.iter().map(u64::to_string).collect();
                let probs: Vec<String> = probs
                    .iter()
                    .map(|p| format!("\"{}\"", fmt_ratio(p)))
                    .collect();
                format!(
                    "kind = \"discrete\"\ncapacity = {capacity}\nsupport = [{}]\nprobs = [{}]\n",
                    support.join(", "),
                    probs.join(", ")
                )
            }
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Uniform => write!(f, "uniform"),
            DistributionSpec::TwoPoint { epsilon } => {
                write!(f, "two-point({})", fmt_ratio(epsilon))
            }
            DistributionSpec::Discrete {
                capacity,
                support,
                probs,
            } => {
                write!(f, "discrete(B={capacity}")?;
                for (s, p) in support.iter().zip(probs) {
                    write!(f, "|{s}:{}", fmt_ratio(p))?;
                }
                write!(f, ")")
            }
        }
    }
}

fn fmt_ratio(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn num_integer_lcm(a: u64, b: u64) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

pub fn parse_ratio(s: &str) -> Result<Rational, ParseError> {
    let bad = || ParseError::Distribution(format!("bad rational `{s}`"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    capacity: Option<u64>,
    support: Option<Vec<u64>>,
    probs: Option<Vec<String>>,
    epsilon: Option<String>,
}

impl RawSpec {
    fn into_spec(self) -> Result<DistributionSpec, ParseError> {
        let missing = |f: &str| ParseError::Distribution(format!("missing field `{f}`"));
        match self.kind.as_str() {
            "uniform" => Ok(DistributionSpec::Uniform),
            "two-point" => {
                let eps = parse_ratio(&self.epsilon.ok_or_else(|| missing("epsilon"))?)?;
                DistributionSpec::two_point(eps)
            }
            "discrete" => {
                let capacity = self.capacity.ok_or_else(|| missing("capacity"))?;
                let support = self.support.ok_or_else(|| missing("support"))?;
                let probs = self
                    .probs
                    .ok_or_else(|| missing("probs"))?
                    .iter()
                    .map(|p| parse_ratio(p))
                    .collect::<Result<Vec<_>, _>>()?;
                DistributionSpec::discrete(capacity, support, probs)
            }
            other => Err(ParseError::Distribution(format!("unknown kind `{other}`"))),
        }
    }
}

/// An adversarial multiset for the random-permutation model, stored ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSet {
    instance: Instance,
}

impl GroundSet {
    pub fn new(instance: Instance) -> Self {
        GroundSet {
            instance: instance.sorted(),
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn len(&self) -> usize {
        self.instance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance.is_empty()
    }

    /// Uniformly random arrival order of the ground set.
    pub fn sample_permutation(&self, seed: u64) -> Instance {
        self.sample_permutation_with(&mut rng_from_seed(seed))
    }

    pub fn sample_permutation_with(&self, rng: &mut Rng) -> Instance {
        let mut sizes = self.instance.sizes().to_vec();
        sizes.shuffle(rng);
        Instance::from_sizes_unchecked(self.instance.capacity(), sizes)
    }
}

/// A ground set parametrised by its size: atom `i` receives a `weights[i]` share
/// of the `T` items (largest-remainder rounding, ties to the earlier atom).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSetFamily {
    pub capacity: u64,
    pub atoms: Vec<(u64, Rational)>,
}

impl GroundSetFamily {
    pub fn new(capacity: u64, atoms: Vec<(u64, Rational)>) -> Result<Self, ParseError> {
        let total = atoms
            .iter()
            .fold(Rational::from_integer(0), |a, (_, w)| a + w);
        if atoms.is_empty() || total != Rational::from_integer(1) {
            return Err(ParseError::Distribution(
                "ground-set weights must sum to 1".into(),
            ));
        }
        if atoms.iter().any(|&(v, _)| v == 0 || v > capacity) {
            return Err(ParseError::Distribution(
                "ground-set atom outside (0, capacity]".into(),
            ));
        }
        Ok(GroundSetFamily { capacity, atoms })
    }

    pub fn ground_set(&self, t: usize) -> GroundSet {
        let t64 = t as u64;
        let mut counts: Vec<u64> = self
            .atoms
            .iter()
            .map(|(_, w)| (*w * t64).floor().to_integer())
            .collect();
        let mut rest = t64 - counts.iter().sum::<u64>();
        let mut order: Vec<usize> = (0..self.atoms.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = (self.atoms[a].1 * t64).fract();
            let fb = (self.atoms[b].1 * t64).fract();
            fb.cmp(&fa).then(a.cmp(&b))
        });
        for i in order {
            if rest == 0 {
                break;
            }
            counts[i] += 1;
            rest -= 1;
        }
        let sizes = self
            .atoms
            .iter()
            .zip(&counts)
            .flat_map(|(&(v, _), &c)| std::iter::repeat_n(Size::raw(v), c as usize))
            .collect();
        GroundSet::new(Instance::from_sizes_unchecked(self.capacity, sizes))
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|(v, w)| format!("{v}:{}", fmt_ratio(w)))
            .collect();
        format!("ground(C={}|{})", self.capacity, parts.join("|"))
    }
}

/// `p_hat[j]` = fraction of `history` equal to `support[j]`.
pub fn empirical_pmf(history: &[Size], support: &[Size]) -> Result<Vec<f64>, DistributionError> {
    if history.is_empty() {
        return Err(DistributionError::EmptyHistory);
    }
    let mut counts = vec![0usize; support.len()];
    for s in history {
        let j = support
            .iter()
            .position(|x| x == s)
            .ok_or(DistributionError::UnknownSize(s.value()))?;
        counts[j] += 1;
    }
    let t = history.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: u64, d: u64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn quantile_boundaries_and_uniform() {
        let u = DistributionSpec::Uniform;
        assert_eq!(u.quantile(r(1, 2)), CONTINUOUS_DEN / 2);
        assert_eq!(u.quantile(r(0, 1)), 0);
        assert_eq!(u.quantile(r(1, 1)), CONTINUOUS_DEN);
        let bw = DistributionSpec::bounded_waste();
        assert_eq!(bw.quantile(r(0, 1)), 0);
        assert_eq!(bw.quantile(r(1, 1)), 9);
    }

    #[test]
    fn bounded_waste_median_is_two_ninths() {
        // F(2/9) = 35/48 >= 1/2 and F(y) = 0 below 2/9
        let bw = DistributionSpec::bounded_waste();
        assert_eq!(bw.quantile(r(1, 2)), 2);
        assert_eq!(bw.quantile(r(35, 48)), 2);
        assert_eq!(bw.quantile(r(36, 48)), 3);
    }

    #[test]
    fn quantile_instances() {
        let u = DistributionSpec::Uniform;
        let inst = u.quantile_instance(4, true);
        let q = CONTINUOUS_DEN / 4;
        assert_eq!(
            inst.values().collect::<Vec<_>>(),
            vec![q, 2 * q, 3 * q, 4 * q]
        );
        assert!(u.quantile_instance(1, false).is_empty());

        let tp = DistributionSpec::two_point(r(1, 10)).unwrap();
        let inst = tp.quantile_instance(2, true);
        // F^{-1}(1/2) = 1/2 - eps, and F^{-1}(1) = 1 by convention
        assert_eq!(
            inst.values().collect::<Vec<_>>(),
            vec![400_000_000, CONTINUOUS_DEN]
        );
        let inst = tp.quantile_instance(4, false);
        assert_eq!(
            inst.values().collect::<Vec<_>>(),
            vec![400_000_000, 400_000_000, 600_000_000]
        );
    }

    #[test]
    fn quantile_monotone_on_grid() {
        for f in [
            DistributionSpec::Uniform,
            DistributionSpec::bounded_waste(),
            DistributionSpec::perfectly_packable(),
            DistributionSpec::two_point(r(1, 5)).unwrap(),
        ] {
            let qs: Vec<u64> = (0..=97).map(|i| f.quantile(r(i, 97))).collect();
            assert!(qs.windows(2).all(|w| w[0] <= w[1]), "{f}");
        }
    }

    #[test]
    fn iid_sampling() {
        let tp = DistributionSpec::two_point(r(1, 10)).unwrap();
        assert!(tp.sample_iid(0, 1).is_empty());
        let inst = tp.sample_iid(10_000, 3);
        let small = inst.values().filter(|&v| v == 400_000_000).count();
        let large = inst.values().filter(|&v| v == 600_000_000).count();
        assert_eq!(small + large, 10_000);
        assert!((4500..=5500).contains(&small), "{small}");
        assert_eq!(tp.sample_iid(100, 9), tp.sample_iid(100, 9));
        assert_ne!(tp.sample_iid(100, 9), tp.sample_iid(100, 10));
    }

    #[test]
    fn discrete_frequencies_chi_square() {
        let pp = DistributionSpec::perfectly_packable();
        let n = 40_000;
        let inst = pp.sample_iid(n, 11);
        let atoms = pp.atoms().unwrap();
        let mut chi2 = 0.0;
        for (v, p) in &atoms {
            let obs = inst.values().filter(|x| x == v).count() as f64;
            let exp = n as f64 * (*p.numer() as f64 / *p.denom() as f64);
            chi2 += (obs - exp).powi(2) / exp;
        }
        // 4 degrees of freedom; 99.9th percentile is 18.47
        assert!(chi2 < 18.47, "chi2 = {chi2}");
    }

    #[test]
    fn permutation_is_multiset_equal() {
        let g = GroundSet::new(Instance::new(10, [6, 3, 3, 9, 1]).unwrap());
        assert_eq!(
            g.instance().values().collect::<Vec<_>>(),
            vec![1, 3, 3, 6, 9]
        );
        for seed in 0..50 {
            let p = g.sample_permutation(seed);
            assert_eq!(p.sorted(), *g.instance());
        }
        let one = GroundSet::new(Instance::new(10, [4]).unwrap());
        assert_eq!(
            one.sample_permutation(5).values().collect::<Vec<_>>(),
            vec![4]
        );
    }

    #[test]
    fn permutation_order_frequency() {
        let g = GroundSet::new(Instance::new(10, [3, 6]).unwrap());
        let first_small = (0..10_000u64)
            .filter(|&s| g.sample_permutation(s).sizes()[0].value() == 3)
            .count();
        assert!((4700..=5300).contains(&first_small), "{first_small}");
    }

    #[test]
    fn empirical_pmf_counts() {
        let s1 = Size::raw(2);
        let s2 = Size::raw(3);
        assert_eq!(empirical_pmf(&[s1], &[s1, s2]).unwrap(), vec![1.0, 0.0]);
        let p = empirical_pmf(&[s1, s2, s1], &[s1, s2]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            empirical_pmf(&[Size::raw(5)], &[s1, s2]),
            Err(DistributionError::UnknownSize(5))
        );
    }

    #[test]
    fn spec_file_round_trip() {
        for f in [
            DistributionSpec::Uniform,
            DistributionSpec::bounded_waste(),
            DistributionSpec::two_point(r(1, 10)).unwrap(),
        ] {
            assert_eq!(DistributionSpec::from_toml(&f.to_toml()).unwrap(), f);
        }
        let bad =
            "kind = \"discrete\"\ncapacity = 9\nsupport = [2, 3]\nprobs = [\"1/2\", \"1/3\"]\n";
        assert!(DistributionSpec::from_toml(bad).is_err());
    }

    #[test]
    fn ground_set_family_counts() {
        let fam = GroundSetFamily::new(10, vec![(6, r(1, 2)), (4, r(1, 2))]).unwrap();
        let g = fam.ground_set(9);
        assert_eq!(g.len(), 9);
        assert_eq!(g.instance().values().filter(|&v| v == 6).count(), 5);
        let fam = GroundSetFamily::new(10, vec![(2, r(1, 3)), (5, r(1, 3)), (7, r(1, 3))]).unwrap();
        assert_eq!(fam.ground_set(64).len(), 64);
    }
}
