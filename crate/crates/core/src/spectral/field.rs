use num_complex::Complex64;

use super::grid::Grid;
use super::symbol::Multiplier;
use crate::error::{Error, Result};

/// Real samples of a function on a periodic [`Grid`].
#[derive(Clone, Debug)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i} = {}", values[i])));
        }
        Ok(GridFunction { grid: grid.clone(), values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        GridFunction { grid: grid.clone(), values: vec![0.0; grid.n()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn from_spectrum(grid: &Grid, spectrum: &[Complex64]) -> Self {
        GridFunction { grid: grid.clone(), values: grid.inverse(spectrum) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    pub fn check_grid(&self, other: &GridFunction) -> Result<()> {
        self.grid.check_same(&other.grid)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> GridFunction {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &GridFunction) -> Result<GridFunction> {
        self.check_grid(other)?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.axpy(-1.0, other)
    }

    pub fn apply(&self, symbol: &impl Multiplier) -> Result<GridFunction> {
        apply_multiplier(self, symbol)
    }

    /// Spectral derivative (Nyquist mode dropped).
    pub fn derivative(&self) -> GridFunction {
        let mut spec = self.spectrum();
        for (z, d) in spec.iter_mut().zip(self.grid.derivative_factors()) {
            *z *= d;
        }
        GridFunction::from_spectrum(&self.grid, &spec)
    }

    /// Translation `x ↦ f(x - y)` by an arbitrary real shift, done spectrally.
    pub fn shifted(&self, y: f64) -> GridFunction {
        let mut spec = self.spectrum();
        shift_spectrum(&self.grid, &mut spec, y);
        GridFunction::from_spectrum(&self.grid, &spec)
    }

    /// Cyclic shift by a whole number of grid cells (exact).
    pub fn rolled(&self, cells: isize) -> GridFunction {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|j| self.values[(j - cells).rem_euclid(n) as usize])
            .collect();
        GridFunction { grid: self.grid.clone(), values }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if *v > self.values[best] { i } else { best })
    }

    pub fn argmax_abs(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > self.values[best].abs() { i } else { best })
    }

    /// Rectangle-rule inner product.
    pub fn dot(&self, other: &GridFunction) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.spacing())
    }

    pub fn l2_norm(&self) -> f64 {
        lp_norm_unchecked(self, 2.0)
    }

    /// `max |f - g|`.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Fraction of the L² mass outside the central half of the box.
    pub fn tail_mass_fraction(&self) -> f64 {
        let n = self.values.len();
        let (lo, hi) = (n / 4, 3 * n / 4);
        let total: f64 = self.values.iter().map(|v| v * v).sum();
        if total == 0.0 {
            return 0.0;
        }
        let outside: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i < lo || *i >= hi)
            .map(|(_, v)| v * v)
            .sum();
        outside / total
    }
}

pub(crate) fn shift_spectrum(grid: &Grid, spec: &mut [Complex64], y: f64) {
    let ny = grid.nyquist_index();
    for (j, (z, &k)) in spec.iter_mut().zip(grid.wavenumbers()).enumerate() {
        if j == ny {
            *z *= (k * y).cos();
        } else {
            *z *= Complex64::from_polar(1.0, -k * y);
        }
    }
}

/// Multiplies the spectrum of `f` by the symbol values, mode by mode.
pub fn apply_multiplier(f: &GridFunction, symbol: &impl Multiplier) -> Result<GridFunction> {
    let table = symbol.tabulate_on(&f.grid)?;
    let mut spec = f.spectrum();
    for (z, s) in spec.iter_mut().zip(table.iter()) {
        *z *= *s;
    }
    Ok(GridFunction::from_spectrum(&f.grid, &spec))
}

/// `(Σ (1+ξ²)^s |f̂|² · L/n²)^{1/2}`; for `s = 0` this is the rectangle-rule L² norm.
pub fn sobolev_norm(f: &GridFunction, s: f64) -> f64 {
    sobolev_norm_spectrum(&f.grid, &f.spectrum(), s)
}

pub(crate) fn sobolev_norm_spectrum(grid: &Grid, spec: &[Complex64], s: f64) -> f64 {
    let sum: f64 = spec
        .iter()
        .zip(grid.wavenumbers())
        .map(|(z, &k)| {
            let w = if s == 0.0 { 1.0 } else { (1.0 + k * k).powf(s) };
            w * z.norm_sqr()
        })
        .sum();
    (sum * grid.plancherel_weight()).sqrt()
}

/// `(Σ |f_i|^q · spacing)^{1/q}` for `q ≥ 1`.
pub fn lp_norm(f: &GridFunction, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("L^q norm needs q >= 1, got {q}")));
    }
    Ok(lp_norm_unchecked(f, q))
}

fn lp_norm_unchecked(f: &GridFunction, q: f64) -> f64 {
    let h = f.grid.spacing();
    if q == 2.0 {
        return (f.values.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
    }
    (f.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * h).powf(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::symbol::{SymbolFactor, SymbolSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn round_trip_is_exact() {
        let g = Grid::new(256, 30.0).unwrap();
        let f = GridFunction::from_fn(&g, |x| sech(x) + 0.1 * (0.3 * x).sin()).unwrap();
        let back = GridFunction::from_spectrum(&g, &f.spectrum());
        let scale = f.sup_norm();
        assert!(f.max_abs_diff(&back).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn identity_and_single_mode() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let f = GridFunction::from_fn(&g, |x| (3.0 * x).cos()).unwrap();
        let same = f.apply(&SymbolSpec::identity()).unwrap();
        assert!(f.max_abs_diff(&same).unwrap() < 1e-12);
        let s = SymbolSpec::new(2.0, vec![SymbolFactor { a: 0.5, e: 1.5 }]).unwrap();
        let out = f.apply(&s).unwrap();
        let expect = f.scaled(s.eval(3.0));
        assert!(out.max_abs_diff(&expect).unwrap() < 1e-12 * s.eval(3.0));
    }

    #[test]
    fn elliptic_symbol_matches_two_derivatives() {
        let g = Grid::new(1024, 80.0).unwrap();
        let f = GridFunction::from_fn(&g, |x| sech(x).powi(2)).unwrap();
        let by_symbol = f.apply(&SymbolSpec::factor(1.0, 1.0).unwrap()).unwrap();
        let by_derivative = f.sub(&f.derivative().derivative()).unwrap();
        let diff = by_symbol.sub(&by_derivative).unwrap();
        assert!(diff.l2_norm() <= 1e-10 * by_symbol.l2_norm());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = Grid::new(32, 10.0).unwrap();
        let h = Grid::new(32, 11.0).unwrap();
        let f = GridFunction::zeros(&g);
        let k = GridFunction::zeros(&h);
        assert!(matches!(f.add(&k), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn norms_of_simple_functions() {
        let g = Grid::new(1024, 80.0).unwrap();
        assert_eq!(sobolev_norm(&GridFunction::zeros(&g), 1.0), 0.0);
        assert_eq!(lp_norm(&GridFunction::zeros(&g), 3.0).unwrap(), 0.0);
        let one = GridFunction::from_fn(&g, |_| 1.0).unwrap();
        assert!((sobolev_norm(&one, 0.0) - 80f64.sqrt()).abs() < 1e-12);
        let c = GridFunction::from_fn(&g, |_| -2.5).unwrap();
        assert!((lp_norm(&c, 2.0).unwrap() - 2.5 * 80f64.sqrt()).abs() < 1e-12);
        assert!(lp_norm(&c, 0.5).is_err());
    }

    #[test]
    fn sech_norms_match_quadrature_oracle() {
        // Oracle: composite Simpson on [-40, 40] with 200k panels, independent of the grid code.
        let simpson = |f: &dyn Fn(f64) -> f64| {
            let (a, b, m) = (-40.0f64, 40.0f64, 200_000usize);
            let h = (b - a) / m as f64;
            let mut s = f(a) + f(b);
            for i in 1..m {
                let x = a + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            s * h / 3.0
        };
        let int2 = simpson(&|x| sech(x).powi(2));
        let int4 = simpson(&|x| sech(x).powi(4));
        assert!((int2 - 2.0).abs() < 1e-12);
        assert!((int4 - 4.0 / 3.0).abs() < 1e-12);

        let g = Grid::new(1024, 80.0).unwrap();
        let f = GridFunction::from_fn(&g, sech).unwrap();
        assert!((sobolev_norm(&f, 0.0) - int2.sqrt()).abs() < 1e-12);
        assert!((lp_norm(&f, 4.0).unwrap() - int4.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_cosine() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let f = GridFunction::from_fn(&g, |x| (5.0 * x).cos()).unwrap();
        let expect = GridFunction::from_fn(&g, |x| -5.0 * (5.0 * x).sin()).unwrap();
        assert!(f.derivative().max_abs_diff(&expect).unwrap() < 1e-11);
    }

    #[test]
    fn spectral_shift_matches_roll() {
        let g = Grid::new(128, 40.0).unwrap();
        let f = GridFunction::from_fn(&g, |x| sech(x)).unwrap();
        let a = f.shifted(3.0 * g.spacing());
        let b = f.rolled(3);
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }

    fn random_function(seed: u64) -> GridFunction {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::new(256, 40.0).unwrap();
        // smooth random: a few random bumps
        let bumps: Vec<(f64, f64, f64)> = (0..5)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-10.0..10.0), rng.gen_range(0.5..3.0)))
            .collect();
        GridFunction::from_fn(&g, |x| bumps.iter().map(|(a, c, w)| a * sech((x - c) / w)).sum()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn parseval(seed in any::<u64>()) {
            let f = random_function(seed);
            let a = sobolev_norm(&f, 0.0);
            let b = lp_norm(&f, 2.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * b.max(1e-300));
        }

        #[test]
        fn composition_and_self_adjointness(seed in any::<u64>(), a1 in 0.1f64..4.0, e1 in -1.5f64..1.5, a2 in 0.1f64..4.0, e2 in -1.5f64..1.5) {
            let f = random_function(seed);
            let g = random_function(seed.wrapping_add(1));
            let s1 = SymbolSpec::factor(a1, e1).unwrap();
            let s2 = SymbolSpec::factor(a2, e2).unwrap();
            let composed = f.apply(&s1.mul(&s2)).unwrap();
            let chained = f.apply(&s2).unwrap().apply(&s1).unwrap();
            let diff = composed.sub(&chained).unwrap().l2_norm();
            prop_assert!(diff <= 1e-10 * composed.l2_norm().max(1e-300));

            let lhs = f.apply(&s1).unwrap().dot(&g).unwrap();
            let rhs = f.dot(&g.apply(&s1).unwrap()).unwrap();
            let scale = f.apply(&s1).unwrap().l2_norm() * g.l2_norm() + f.l2_norm() * g.apply(&s1).unwrap().l2_norm();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300));
        }
    }
}
