//! Uniform periodic grid on [-l, l) and real grid functions.
//!
//! The grid carries the sample points x_j = -l + j dx and the FFT-ordered
//! frequencies xi_k = pi k / l, k = 0..n/2-1, -n/2..-1. Everything downstream
//! (multipliers, quadrature, norms) is built on these two arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid: domain [-l, l), n equispaced points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    #[serde(rename = "l")]
    half_length: f64,
    n: usize,
}

impl PeriodicGrid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half-length must be positive and finite, got {half_length}"
            )));
        }
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "grid size must be even and positive, got {n}"
            )));
        }
        Ok(PeriodicGrid { half_length, n })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Frequency of FFT bin `j`: xi = pi k / l with k = j for j < n/2 and
    /// k = j - n otherwise (the lone Nyquist mode is k = -n/2).
    pub fn freq(&self, j: usize) -> f64 {
        let k = if j < self.n / 2 {
            j as f64
        } else {
            j as f64 - self.n as f64
        };
        std::f64::consts::PI * k / self.half_length
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.freq(j)).collect()
    }

    /// Largest resolved frequency magnitude (the Nyquist frequency).
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * (self.n as f64 / 2.0) / self.half_length
    }
}

/// Real samples of a function on a periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.n()],
        }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.n()],
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.point(j))).collect();
        GridFunction { grid, values }
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function values"));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn assert_same_grid(&self, other: &GridFunction) {
        assert_eq!(
            self.grid, other.grid,
            "grid functions combine only on identical grids"
        );
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> GridFunction {
        self.map(|v| a * v)
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    /// self + a * other, elementwise.
    pub fn add_scaled(&self, a: f64, other: &GridFunction) -> GridFunction {
        self.assert_same_grid(other);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    pub fn mul_pointwise(&self, other: &GridFunction) -> GridFunction {
        self.assert_same_grid(other);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .collect();
        GridFunction {
            grid: self.grid,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Two-column CSV (x, value) at full precision (17 significant digits).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.16e},{v:.16e}\n", self.grid.point(j)));
        }
        out
    }

    /// Parse the `to_csv` format; the grid is reconstructed from the first
    /// abscissa (x0 = -l) and the row count.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for line in text.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidGrid(format!("csv row {line:?} lacks two columns")))?;
            xs.push(
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidGrid(format!("bad abscissa {x:?}: {e}")))?,
            );
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidGrid(format!("bad value {v:?}: {e}")))?,
            );
        }
        if xs.is_empty() {
            return Err(Error::InvalidGrid("empty csv".into()));
        }
        let grid = PeriodicGrid::new(-xs[0], xs.len())?;
        GridFunction::from_values(grid, values)
    }

    /// Rotate samples right by `shift` grid cells (values move to larger x).
    pub fn circular_shift(&self, shift: isize) -> GridFunction {
        let n = self.len() as isize;
        let s = shift.rem_euclid(n) as usize;
        let mut values = Vec::with_capacity(self.len());
        values.extend_from_slice(&self.values[self.len() - s..]);
        values.extend_from_slice(&self.values[..self.len() - s]);
        GridFunction {
            grid: self.grid,
            values,
        }
    }
}

/// dx * sum of samples: the rectangle rule, which is the trapezoid rule on a
/// periodic grid and spectrally accurate for smooth periodic integrands.
pub fn quadrature(f: &GridFunction) -> f64 {
    f.grid.dx() * f.values.iter().sum::<f64>()
}

/// L2-type inner product: quadrature of the pointwise product.
pub fn inner(f: &GridFunction, g: &GridFunction) -> f64 {
    f.assert_same_grid(g);
    f.grid.dx()
        * f.values
            .iter()
            .zip(&g.values)
            .map(|(x, y)| x * y)
            .sum::<f64>()
}

pub fn l2_norm(f: &GridFunction) -> f64 {
    inner(f, f).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validation() {
        assert!(PeriodicGrid::new(0.0, 16).is_err());
        assert!(PeriodicGrid::new(-1.0, 16).is_err());
        assert!(PeriodicGrid::new(1.0, 0).is_err());
        assert!(PeriodicGrid::new(1.0, 15).is_err());
        assert!(PeriodicGrid::new(f64::INFINITY, 16).is_err());
    }

    #[test]
    fn spacing_is_exact_for_power_of_two() {
        let g = PeriodicGrid::new(std::f64::consts::PI, 64).unwrap();
        assert_eq!(g.dx() * g.n() as f64, 2.0 * g.half_length());
    }

    #[test]
    fn frequency_layout() {
        let g = PeriodicGrid::new(std::f64::consts::PI, 8).unwrap();
        let f = g.freqs();
        // 0,1,2,3,-4,-3,-2,-1 times pi/l = 1
        assert_eq!(f, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        // symmetric except the lone Nyquist mode
        for j in 1..4 {
            assert_eq!(g.freq(j), -g.freq(8 - j));
        }
        assert_eq!(g.nyquist(), 4.0);
    }

    #[test]
    fn quadrature_examples() {
        let g = PeriodicGrid::new(std::f64::consts::PI, 32).unwrap();
        assert_eq!(quadrature(&GridFunction::zeros(g)), 0.0);
        let one = GridFunction::constant(g, 1.0);
        assert!((quadrature(&one) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        // cos^2(pi x / l) integrates to l exactly for n >= 4 (modes 0, +-2 only)
        let l = g.half_length();
        let c2 = GridFunction::from_fn(g, |x| (std::f64::consts::PI * x / l).cos().powi(2));
        assert!((quadrature(&c2) - l).abs() < 1e-13 * l);
    }

    #[test]
    fn from_values_validation() {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        assert!(GridFunction::from_values(g, vec![0.0; 7]).is_err());
        assert!(GridFunction::from_values(g, vec![f64::NAN; 8]).is_err());
        assert!(GridFunction::from_values(g, vec![1.0; 8]).is_ok());
    }

    #[test]
    fn circular_shift_round_trip() {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        let f = GridFunction::from_fn(g, |x| x * x + 0.5 * x);
        let s = f.circular_shift(3).circular_shift(-3);
        assert_eq!(f.values, s.values);
        let w = f.circular_shift(8);
        assert_eq!(f.values, w.values);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = PeriodicGrid::new(12.5, 32).unwrap();
        let f = GridFunction::from_fn(g, |x| (0.7 * x).sin() / (1.0 + x * x));
        let back = GridFunction::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(back.values, f.values);
        assert!(GridFunction::from_csv("x,value\n").is_err());
        assert!(GridFunction::from_csv("x,value\n1.0\n").is_err());
    }

    #[test]
    #[should_panic(expected = "identical grids")]
    fn mismatched_grids_panic() {
        let a = GridFunction::zeros(PeriodicGrid::new(1.0, 8).unwrap());
        let b = GridFunction::zeros(PeriodicGrid::new(2.0, 8).unwrap());
        let _ = inner(&a, &b);
    }
}
