//! The validated model `(L, B, p, σ)`, its derived orders and constants, and the
//! two traveling-wave regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{coercivity_constants, Grid, SymbolSpec, TabulatedSymbol};

/// Guard band on velocity admissibility, keeping `c²` off the boundary `c₁²`/`c₂²`.
pub const VELOCITY_GUARD: f64 = 1e-9;

const ORDER_EPS: f64 = 1e-12;

/// Sign `σ` of the nonlinearity `g(u) = σ|u|^{p-1}u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

impl TryFrom<i32> for Sign {
    type Error = Error;

    fn try_from(v: i32) -> Result<Self> {
        match v {
            -1 => Ok(Sign::Minus),
            1 => Ok(Sign::Plus),
            other => Err(Error::InvalidParameter(format!("sigma must be +1 or -1, got {other}"))),
        }
    }
}

impl From<Sign> for i32 {
    fn from(s: Sign) -> i32 {
        match s {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }
}

/// Regime A: `ρ ≥ 0`, `σ = -1`, waves for `c² < c₁²`.
/// Regime B: `ρ ≤ 0`, `σ = +1`, waves for `c² > c₂²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegimeInfo {
    pub regime: Regime,
    /// `c₁²` for regime A (upper bound on c²), `c₂²` for regime B (lower bound).
    pub velocity_bound: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    l: SymbolSpec,
    b: SymbolSpec,
    p: f64,
    sigma: Sign,
}

/// Constants derived from the symbols at construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derived {
    pub rho: f64,
    pub r: f64,
    pub c1_sq: f64,
    pub c2_sq: f64,
    pub c3_sq: f64,
    pub c4_sq: f64,
    pub s0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct PdeModel {
    l: SymbolSpec,
    b: SymbolSpec,
    p: f64,
    sigma: Sign,
    derived: DerivedCmp,
    warnings: Vec<String>,
}

// PartialEq for f64 bundles without pulling in a float-eq crate.
#[derive(Clone, Debug, Serialize)]
struct DerivedCmp(Derived);

impl PartialEq for DerivedCmp {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (&self.0, &other.0);
        [a.rho, a.r, a.c1_sq, a.c2_sq, a.c3_sq, a.c4_sq, a.s0]
            .iter()
            .zip([b.rho, b.r, b.c1_sq, b.c2_sq, b.c3_sq, b.c4_sq, b.s0].iter())
            .all(|(x, y)| x.to_bits() == y.to_bits())
    }
}

impl<'de> Deserialize<'de> for DerivedCmp {
    fn deserialize<D: serde::Deserializer<'de>>(_: D) -> std::result::Result<Self, D::Error> {
        Err(serde::de::Error::custom("derived constants are computed, not read"))
    }
}

impl TryFrom<ModelSpec> for PdeModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        build_model(spec.l, spec.b, spec.p, spec.sigma)
    }
}

impl From<PdeModel> for ModelSpec {
    fn from(m: PdeModel) -> Self {
        ModelSpec { l: m.l, b: m.b, p: m.p, sigma: m.sigma }
    }
}

/// Validates `(L, B, p, σ)` and derives orders, best constants and `s₀`.
pub fn build_model(l: SymbolSpec, b: SymbolSpec, p: f64, sigma: Sign) -> Result<PdeModel> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Admissibility(format!("exponent p = {p} must exceed 1")));
    }
    let rho = l.order();
    let r = -b.order();
    if r < -ORDER_EPS {
        return Err(Error::Admissibility(format!("B must have nonpositive order (r = {r} < 0)")));
    }
    let case_i = rho > -2.0 + ORDER_EPS && r + 0.5 * rho >= 1.0 - ORDER_EPS;
    let case_ii = rho <= -2.0 + ORDER_EPS && r >= 2.0 - ORDER_EPS;
    if !(case_i || case_ii) {
        let why = if rho > -2.0 + ORDER_EPS {
            format!("rho = {rho} > -2 requires r + rho/2 >= 1, got {}", r + 0.5 * rho)
        } else {
            format!("rho = {rho} <= -2 requires r >= 2, got r = {r}")
        };
        return Err(Error::Admissibility(why));
    }
    match sigma {
        Sign::Minus if rho < -ORDER_EPS => {
            return Err(Error::RegimeMismatch(format!(
                "sigma = -1 needs rho >= 0 (got rho = {rho})"
            )))
        }
        Sign::Plus if rho > ORDER_EPS => {
            return Err(Error::RegimeMismatch(format!(
                "rho = {rho} > 0 demands sigma = -1"
            )))
        }
        _ => {}
    }
    let s0 = match sigma {
        Sign::Minus => 0.5 * r + 0.5 * rho,
        Sign::Plus => 0.5 * r,
    };
    if s0 < 0.5 - ORDER_EPS {
        return Err(Error::Admissibility(format!("s0 = {s0} < 1/2")));
    }
    let (c1_sq, c2_sq) = coercivity_constants(&l);
    let (c3_sq, c4_sq) = coercivity_constants(&b);

    let mut warnings = Vec::new();
    let needed = s0.floor() + 1.0;
    if p < needed {
        warnings.push(format!(
            "p = {p} < [s0] + 1 = {needed}: nonlinearity may be below the smoothness used for local well-posedness"
        ));
    }
    if rho.abs() < ORDER_EPS && (r - 1.0).abs() < ORDER_EPS {
        warnings.push("(rho, r) = (0, 1): s0 = 1/2, only a weaker form of orbital stability is expected".into());
    }

    Ok(PdeModel {
        l,
        b,
        p,
        sigma,
        derived: DerivedCmp(Derived { rho, r, c1_sq, c2_sq, c3_sq, c4_sq, s0 }),
        warnings,
    })
}

impl PdeModel {
    pub fn new(l: SymbolSpec, b: SymbolSpec, p: f64, sigma: Sign) -> Result<Self> {
        build_model(l, b, p, sigma)
    }

    /// `L = I - ∂²`, `B = I`, `σ = -1`.
    pub fn boussinesq(p: f64) -> Result<Self> {
        build_model(SymbolSpec::factor(1.0, 1.0)?, SymbolSpec::identity(), p, Sign::Minus)
    }

    /// `L = B = (I - ∂²)^{-1}`, `σ = +1`.
    pub fn improved_boussinesq(p: f64) -> Result<Self> {
        let s = SymbolSpec::factor(1.0, -1.0)?;
        build_model(s.clone(), s, p, Sign::Plus)
    }

    /// `L = (I - a₁∂²)^{-1}(I - a₂∂²)`, `B = (I - a₁∂²)^{-1}`.
    pub fn double_dispersion(a1: f64, a2: f64, p: f64, sigma: Sign) -> Result<Self> {
        let b = SymbolSpec::factor(a1, -1.0)?;
        let l = b.mul(&SymbolSpec::factor(a2, 1.0)?);
        build_model(l, b, p, sigma)
    }

    /// `L = I` with the given smoothing `B`, `σ = -1`.
    pub fn klein_gordon(b: SymbolSpec, p: f64) -> Result<Self> {
        build_model(SymbolSpec::identity(), b, p, Sign::Minus)
    }

    /// `L = I`, `B = (I - ∂²)^{-1}`, `σ = -1`.
    pub fn regularized_klein_gordon(p: f64) -> Result<Self> {
        Self::klein_gordon(SymbolSpec::factor(1.0, -1.0)?, p)
    }

    pub fn l(&self) -> &SymbolSpec {
        &self.l
    }

    pub fn b(&self) -> &SymbolSpec {
        &self.b
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma(&self) -> Sign {
        self.sigma
    }

    pub fn derived(&self) -> &Derived {
        &self.derived.0
    }

    pub fn rho(&self) -> f64 {
        self.derived.0.rho
    }

    pub fn r(&self) -> f64 {
        self.derived.0.r
    }

    pub fn s0(&self) -> f64 {
        self.derived.0.s0
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn regime(&self) -> Regime {
        match self.sigma {
            Sign::Minus => Regime::A,
            Sign::Plus => Regime::B,
        }
    }

    /// Sobolev index of the `w` component of the energy space.
    pub fn w_index(&self) -> f64 {
        self.s0() - 0.5 * self.rho()
    }

    /// `g(u) = σ|u|^{p-1}u`.
    pub fn nonlinearity(&self, u: f64) -> f64 {
        self.sigma.value() * power_term(u, self.p)
    }

    /// `B^{-1/2}`.
    pub fn b_inv_sqrt(&self) -> SymbolSpec {
        self.b.pow(-0.5)
    }

    /// `L^{1/2} B^{-1/2}`.
    pub fn l_sqrt_b_inv_sqrt(&self) -> SymbolSpec {
        self.l.pow(0.5).mul(&self.b.pow(-0.5))
    }

    /// Values of `(l(ξ) - c²)/b(ξ)` on the grid (sign unrestricted).
    pub fn dispersion_table(&self, c: f64, grid: &Grid) -> Vec<f64> {
        let c2 = c * c;
        grid.wavenumbers()
            .iter()
            .map(|&k| (self.l.eval(k) - c2) / self.b.eval(k))
            .collect()
    }

    /// The positive linear operator of the wave equation, `(l - c²)/b` in regime A
    /// and `(c² - l)/b` in regime B.
    pub fn wave_operator(&self, c: f64, grid: &Grid) -> Result<TabulatedSymbol> {
        let sign = match self.regime() {
            Regime::A => 1.0,
            Regime::B => -1.0,
        };
        let values = self.dispersion_table(c, grid).into_iter().map(|v| sign * v).collect();
        TabulatedSymbol::new(grid, values).map_err(|_| {
            Error::InadmissibleVelocity(format!(
                "c = {c}: the wave operator is not positive on this grid"
            ))
        })
    }

    pub fn check_velocity(&self, c: f64) -> Result<RegimeInfo> {
        let info = classify_regime(self, c);
        if info.admissible {
            Ok(info)
        } else {
            let rel = match info.regime {
                Regime::A => "c^2 < c1^2",
                Regime::B => "c^2 > c2^2",
            };
            Err(Error::InadmissibleVelocity(format!(
                "c = {c} (c^2 = {}) violates {rel} = {}",
                c * c,
                info.velocity_bound
            )))
        }
    }
}

/// `|u|^{p-1} u`.
pub fn power_term(u: f64, p: f64) -> f64 {
    if p == 3.0 {
        u * u * u
    } else if p == 2.0 {
        u * u.abs()
    } else {
        u.abs().powf(p - 1.0) * u
    }
}

/// Regime of the model and whether `c` admits traveling waves.
pub fn classify_regime(model: &PdeModel, c: f64) -> RegimeInfo {
    let c2 = c * c;
    let d = model.derived();
    match model.regime() {
        Regime::A => RegimeInfo {
            regime: Regime::A,
            velocity_bound: d.c1_sq,
            admissible: c.is_finite() && c2 < d.c1_sq - VELOCITY_GUARD,
        },
        Regime::B => RegimeInfo {
            regime: Regime::B,
            velocity_bound: d.c2_sq,
            admissible: c.is_finite() && c2 > d.c2_sq + VELOCITY_GUARD,
        },
    }
}
