//! Fourier symbols of the form `prefactor · ∏ (1 + a_j ξ²)^{e_j}`.
//!
//! Every member of the family is positive and even, and `symbol(ξ)·(1+ξ²)^{-order/2}`
//! is bounded above and below by positive constants, so the family covers the
//! coercive elliptic operators `L` and `B` the laboratory works with. Subtracting a
//! constant leaves the family; [`SymbolSpec::shift_sub`] therefore returns a
//! [`TabulatedSymbol`] sampled on a grid.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Number of log-spaced samples used for best-constant searches.
pub const BEST_CONSTANT_SAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolFactor {
    pub a: f64,
    pub e: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSymbol {
    prefactor: f64,
    #[serde(default)]
    factors: Vec<SymbolFactor>,
}

/// A positive even symbol `prefactor · ∏ (1 + a ξ²)^e`.
///
/// Constructed values are normalized: factors sharing the same `a` are merged and
/// zero exponents dropped, so e.g. `(1+ξ²)·(1+ξ²)^{-1}` becomes the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSymbol")]
pub struct SymbolSpec {
    prefactor: f64,
    factors: Vec<SymbolFactor>,
}

impl TryFrom<RawSymbol> for SymbolSpec {
    type Error = Error;

    fn try_from(raw: RawSymbol) -> Result<Self> {
        SymbolSpec::new(raw.prefactor, raw.factors)
    }
}

impl SymbolSpec {
    pub fn new(prefactor: f64, factors: Vec<SymbolFactor>) -> Result<Self> {
        if !(prefactor.is_finite() && prefactor > 0.0) {
            return Err(Error::InvalidSymbol(format!("prefactor {prefactor} must be positive")));
        }
        for f in &factors {
            if !(f.a.is_finite() && f.a > 0.0) {
                return Err(Error::InvalidSymbol(format!("factor coefficient a = {} must be positive", f.a)));
            }
            if !f.e.is_finite() {
                return Err(Error::InvalidSymbol(format!("factor exponent e = {} must be finite", f.e)));
            }
        }
        Ok(SymbolSpec { prefactor, factors }.normalized())
    }

    pub fn identity() -> Self {
        SymbolSpec { prefactor: 1.0, factors: Vec::new() }
    }

    /// `(1 + a ξ²)^e`.
    pub fn factor(a: f64, e: f64) -> Result<Self> {
        Self::new(1.0, vec![SymbolFactor { a, e }])
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn factors(&self) -> &[SymbolFactor] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.prefactor == 1.0 && self.factors.is_empty()
    }

    fn normalized(mut self) -> Self {
        let mut merged: Vec<SymbolFactor> = Vec::with_capacity(self.factors.len());
        for f in self.factors.drain(..) {
            match merged.iter_mut().find(|m| m.a == f.a) {
                Some(m) => m.e += f.e,
                None => merged.push(f),
            }
        }
        merged.retain(|f| f.e != 0.0);
        merged.sort_by(|x, y| x.a.total_cmp(&y.a));
        self.factors = merged;
        self
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let t = xi * xi;
        self.factors
            .iter()
            .fold(self.prefactor, |acc, f| acc * (1.0 + f.a * t).powf(f.e))
    }

    /// Order of the operator: `Σ 2e_j`.
    pub fn order(&self) -> f64 {
        self.factors.iter().map(|f| 2.0 * f.e).sum()
    }

    pub fn mul(&self, other: &SymbolSpec) -> SymbolSpec {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        SymbolSpec { prefactor: self.prefactor * other.prefactor, factors }.normalized()
    }

    pub fn pow(&self, q: f64) -> SymbolSpec {
        SymbolSpec {
            prefactor: self.prefactor.powf(q),
            factors: self.factors.iter().map(|f| SymbolFactor { a: f.a, e: f.e * q }).collect(),
        }
        .normalized()
    }

    pub fn recip(&self) -> SymbolSpec {
        self.pow(-1.0)
    }

    /// Values at the grid wavenumbers, in storage order.
    pub fn tabulate(&self, grid: &Grid) -> Vec<f64> {
        grid.wavenumbers().iter().map(|&k| self.eval(k)).collect()
    }

    /// Value of `symbol(ξ)·(1+ξ²)^{-order/2}` as `|ξ| → ∞`.
    fn ratio_at_infinity(&self) -> f64 {
        self.factors
            .iter()
            .fold(self.prefactor, |acc, f| acc * f.a.powf(f.e))
    }

    /// Limit of the symbol itself as `|ξ| → ∞`.
    pub fn limit_at_infinity(&self) -> f64 {
        let ord = self.order();
        if ord > 0.0 {
            f64::INFINITY
        } else if ord < 0.0 {
            0.0
        } else {
            self.ratio_at_infinity()
        }
    }

    /// Infimum of the symbol over the real line (sampled, refined, plus both limits).
    pub fn infimum(&self) -> f64 {
        let (lo, _) = sampled_extrema(|xi| self.eval(xi), self.scales());
        lo.min(self.eval(0.0)).min(self.limit_at_infinity())
    }

    fn scales(&self) -> (f64, f64) {
        let mut lo = 1.0f64;
        let mut hi = 1.0f64;
        for f in &self.factors {
            let s = 1.0 / f.a.sqrt();
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }

    /// Forms `symbol(ξ) - κ` on the grid; errors unless the result is positive everywhere.
    pub fn shift_sub(&self, kappa: f64, grid: &Grid) -> Result<TabulatedSymbol> {
        let inf = self.infimum();
        if !(kappa < inf) {
            return Err(Error::InvalidSymbol(format!(
                "shift κ = {kappa} is not below the symbol infimum {inf}"
            )));
        }
        let values: Vec<f64> = self.tabulate(grid).into_iter().map(|v| v - kappa).collect();
        TabulatedSymbol::new(grid, values)
    }
}

/// Symbol sampled at the wavenumbers of one grid (storage order), strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedSymbol {
    n: usize,
    length: f64,
    values: Vec<f64>,
}

impl TabulatedSymbol {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidSymbol(format!(
                "table has {} entries for a grid of {} points",
                values.len(),
                grid.n()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidSymbol(format!("tabulated symbol value {v} is not positive")));
        }
        Ok(TabulatedSymbol { n: grid.n(), length: grid.length(), values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise product with a symbol from the product family.
    pub fn mul_spec(&self, grid: &Grid, spec: &SymbolSpec) -> Result<TabulatedSymbol> {
        let own = self.tabulate(grid)?;
        let values = own.iter().zip(spec.tabulate(grid)).map(|(a, b)| a * b).collect();
        TabulatedSymbol::new(grid, values)
    }
}

/// Anything that can act as a Fourier multiplier on a grid.
pub trait Multiplier {
    fn tabulate_on<'a>(&'a self, grid: &Grid) -> Result<Cow<'a, [f64]>>;
}

impl Multiplier for SymbolSpec {
    fn tabulate_on<'a>(&'a self, grid: &Grid) -> Result<Cow<'a, [f64]>> {
        Ok(Cow::Owned(self.tabulate(grid)))
    }
}

impl Multiplier for TabulatedSymbol {
    fn tabulate_on<'a>(&'a self, grid: &Grid) -> Result<Cow<'a, [f64]>> {
        self.tabulate(grid).map(Cow::Borrowed)
    }
}

impl TabulatedSymbol {
    fn tabulate(&self, grid: &Grid) -> Result<&[f64]> {
        if grid.n() != self.n || grid.length() != self.length {
            return Err(Error::GridMismatch {
                expected_n: self.n,
                expected_length: self.length,
                got_n: grid.n(),
                got_length: grid.length(),
            });
        }
        Ok(&self.values)
    }
}

pub fn symbol_eval(spec: &SymbolSpec, xi: f64) -> f64 {
    spec.eval(xi)
}

pub fn symbol_mul(s1: &SymbolSpec, s2: &SymbolSpec) -> SymbolSpec {
    s1.mul(s2)
}

pub fn symbol_pow(s: &SymbolSpec, q: f64) -> SymbolSpec {
    s.pow(q)
}

pub fn symbol_shift_sub(s: &SymbolSpec, kappa: f64, grid: &Grid) -> Result<TabulatedSymbol> {
    s.shift_sub(kappa, grid)
}

/// Best constants `(c_low², c_high²)` with
/// `c_low² (1+ξ²)^{order/2} ≤ symbol(ξ) ≤ c_high² (1+ξ²)^{order/2}` on the whole line.
pub fn coercivity_constants(spec: &SymbolSpec) -> (f64, f64) {
    let half_order = 0.5 * spec.order();
    let ratio = |xi: f64| spec.eval(xi) * (1.0 + xi * xi).powf(-half_order);
    let (lo, hi) = sampled_extrema(ratio, spec.scales());
    let at_zero = spec.prefactor;
    let at_inf = spec.ratio_at_infinity();
    (lo.min(at_zero).min(at_inf), hi.max(at_zero).max(at_inf))
}

/// Min and max of `f` on a log-spaced ξ sample, each refined by golden section
/// between the neighbours of the best sample.
fn sampled_extrema(f: impl Fn(f64) -> f64, (lo_scale, hi_scale): (f64, f64)) -> (f64, f64) {
    let n = BEST_CONSTANT_SAMPLES;
    let log_lo = (lo_scale * 1e-4).ln();
    let log_hi = (hi_scale * 1e4).ln();
    let xs: Vec<f64> = (0..n)
        .map(|i| (log_lo + (log_hi - log_lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let (imin, imax) = vals.iter().enumerate().fold((0, 0), |(a, b), (i, v)| {
        (if *v < vals[a] { i } else { a }, if *v > vals[b] { i } else { b })
    });
    let bracket = |i: usize| (xs[i.saturating_sub(1)], xs[(i + 1).min(n - 1)]);
    let (a, b) = bracket(imin);
    let lo = golden(|x| f(x), a, b).min(vals[imin]);
    let (a, b) = bracket(imax);
    let hi = (-golden(|x| -f(x), a, b)).max(vals[imax]);
    (lo, hi)
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(prefactor: f64, fs: &[(f64, f64)]) -> SymbolSpec {
        SymbolSpec::new(prefactor, fs.iter().map(|&(a, e)| SymbolFactor { a, e }).collect()).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(SymbolSpec::identity().eval(3.7), 1.0);
        assert!((spec(1.0, &[(1.0, 1.0)]).eval(1.0) - 2.0).abs() < 1e-15);
        assert!((spec(1.0, &[(1.0, -1.0)]).eval(2.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn algebra_examples() {
        assert!(SymbolSpec::identity().pow(0.37).is_identity());
        let prod = spec(1.0, &[(1.0, 1.0)]).mul(&spec(1.0, &[(1.0, -1.0)]));
        assert!(prod.is_identity());
        let g = Grid::new(16, 10.0).unwrap();
        let shifted = spec(1.0, &[(1.0, 1.0)]).shift_sub(0.25, &g).unwrap();
        assert!((shifted.values()[0] - 0.75).abs() < 1e-15);
        assert!(spec(1.0, &[(1.0, 1.0)]).shift_sub(1.0, &g).is_err());
    }

    #[test]
    fn tabulated_rejects_other_grid() {
        let g = Grid::new(16, 10.0).unwrap();
        let h = Grid::new(32, 10.0).unwrap();
        let t = spec(1.0, &[(1.0, 1.0)]).shift_sub(0.5, &g).unwrap();
        assert!(t.tabulate_on(&h).is_err());
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(SymbolSpec::new(0.0, vec![]).is_err());
        assert!(SymbolSpec::new(1.0, vec![SymbolFactor { a: -1.0, e: 1.0 }]).is_err());
        assert!(SymbolSpec::new(1.0, vec![SymbolFactor { a: 1.0, e: f64::NAN }]).is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let s: SymbolSpec = serde_json::from_str(r#"{"prefactor": 1.0, "factors": [{"a": 1.0, "e": -1.0}]}"#).unwrap();
        assert_eq!(s, spec(1.0, &[(1.0, -1.0)]));
        let back: SymbolSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SymbolSpec>(r#"{"prefactor": 1.0, "bogus": 2}"#).is_err());
        assert!(serde_json::from_str::<SymbolSpec>(r#"{"prefactor": -1.0}"#).is_err());
    }

    #[test]
    fn coercivity_examples() {
        let (lo, hi) = coercivity_constants(&spec(1.0, &[(1.0, 1.0)]));
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        // double dispersion l = (1 + a2 ξ²)/(1 + a1 ξ²)
        let (lo, hi) = coercivity_constants(&spec(1.0, &[(2.0, -1.0), (1.0, 1.0)]));
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12, "{lo} {hi}");
        let (lo, hi) = coercivity_constants(&spec(1.0, &[(1.0, -1.0), (2.0, 1.0)]));
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12, "{lo} {hi}");
    }

    fn arb_spec() -> impl Strategy<Value = SymbolSpec> {
        (
            0.2f64..5.0,
            prop::collection::vec((0.05f64..20.0, prop::sample::select(vec![-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0])), 0..4),
        )
            .prop_map(|(p, fs)| SymbolSpec::new(p, fs.into_iter().map(|(a, e)| SymbolFactor { a, e }).collect()).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn positive_and_even(s in arb_spec(), xi in -1e3f64..1e3) {
            prop_assert!(s.eval(xi) > 0.0);
            prop_assert!((s.eval(xi) - s.eval(-xi)).abs() <= 1e-14 * s.eval(xi));
        }

        #[test]
        fn square_root_squares_back(s in arb_spec(), xi in -1e3f64..1e3) {
            let r = s.pow(0.5).eval(xi);
            prop_assert!((r * r - s.eval(xi)).abs() <= 1e-12 * s.eval(xi));
        }

        #[test]
        fn coercivity_sandwich(s in arb_spec(), xis in prop::collection::vec(-1e4f64..1e4, 100)) {
            let (lo, hi) = coercivity_constants(&s);
            prop_assert!(lo > 0.0);
            let half = 0.5 * s.order();
            for xi in xis {
                let w = (1.0 + xi * xi).powf(half);
                let v = s.eval(xi);
                prop_assert!(lo * w <= v * (1.0 + 1e-9), "lower bound at {}", xi);
                prop_assert!(v <= hi * w * (1.0 + 1e-9), "upper bound at {}", xi);
            }
        }
    }
}
