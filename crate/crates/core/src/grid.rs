//! Uniform grids and sampled wave functions shared by the lattice, the
//! normalization quadratures and the experiment harness.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A uniform grid `start + i * step` for `i in 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid1D {
    /// Grid with `len` points spanning `[min, max]` inclusive.
    pub fn spanning(min: f64, max: f64, len: usize) -> Self {
        assert!(len >= 2, "a grid needs at least two points");
        assert!(max > min, "grid bounds must be increasing");
        Self {
            start: min,
            step: (max - min) / (len - 1) as f64,
            len,
        }
    }

    /// Grid centred on `center` with half-width `half_width`.
    pub fn centered(center: f64, half_width: f64, len: usize) -> Self {
        Self::spanning(center - half_width, center + half_width, len)
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }

    pub fn contains(&self, u: f64) -> bool {
        u >= self.start && u <= self.end()
    }
}

/// Trapezoid rule over samples on `grid`.
pub fn trapezoid(grid: &Grid1D, values: &[f64]) -> f64 {
    debug_assert_eq!(grid.len, values.len());
    values
        .iter()
        .enumerate()
        .map(|(i, v)| grid.weight(i) * v)
        .sum()
}

/// A wave function sampled on a time grid and, optionally, a space grid.
///
/// Two-dimensional samples are stored row-major with time as the slow index:
/// `values[i_t * n_x + i_x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWave {
    pub t_grid: Grid1D,
    pub x_grid: Option<Grid1D>,
    pub values: Vec<Complex64>,
}

impl GridWave {
    pub fn from_fn_1d(t_grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let values = t_grid.points().map(f).collect();
        Self {
            t_grid,
            x_grid: None,
            values,
        }
    }

    pub fn from_fn_2d(t_grid: Grid1D, x_grid: Grid1D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(t_grid.len * x_grid.len);
        for t in t_grid.points() {
            for x in x_grid.points() {
                values.push(f(t, x));
            }
        }
        Self {
            t_grid,
            x_grid: Some(x_grid),
            values,
        }
    }

    pub fn n_x(&self) -> usize {
        self.x_grid.map_or(1, |g| g.len)
    }

    fn cell_weight(&self, idx: usize) -> f64 {
        let n_x = self.n_x();
        let wt = self.t_grid.weight(idx / n_x);
        match self.x_grid {
            Some(g) => wt * g.weight(idx % n_x),
            None => wt,
        }
    }

    /// Trapezoid estimate of `∫|ψ|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.cell_weight(i) * v.norm_sqr())
            .sum()
    }

    /// Trapezoid inner product `∫ conj(self) other`.
    pub fn inner(&self, other: &GridWave) -> Complex64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| a.conj() * b * self.cell_weight(i))
            .sum()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// Rescale to unit norm; returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm_sqr();
        if n > 0.0 {
            self.scale(Complex64::new(1.0 / n.sqrt(), 0.0));
        }
        n
    }

    /// Density of the time coordinate, integrating over x when present.
    pub fn t_marginal(&self) -> Vec<f64> {
        let n_x = self.n_x();
        (0..self.t_grid.len)
            .map(|i| {
                let row = &self.values[i * n_x..(i + 1) * n_x];
                match self.x_grid {
                    Some(g) => row
                        .iter()
                        .enumerate()
                        .map(|(j, v)| g.weight(j) * v.norm_sqr())
                        .sum(),
                    None => row[0].norm_sqr(),
                }
            })
            .collect()
    }

    /// Density of the space coordinate, integrating over t.
    pub fn x_marginal(&self) -> Option<Vec<f64>> {
        let g = self.x_grid?;
        let mut out = vec![0.0; g.len];
        for i in 0..self.t_grid.len {
            let w = self.t_grid.weight(i);
            for (j, o) in out.iter_mut().enumerate() {
                *o += w * self.values[i * g.len + j].norm_sqr();
            }
        }
        Some(out)
    }
}

/// Relative L2 distance `‖a − b‖ / ‖b‖` on a shared grid.
pub fn relative_l2(a: &GridWave, b: &GridWave) -> f64 {
    assert_eq!(a.values.len(), b.values.len());
    let mut diff = 0.0;
    let mut base = 0.0;
    for (i, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        let w = a.cell_weight(i);
        diff += w * (x - y).norm_sqr();
        base += w * y.norm_sqr();
    }
    (diff / base).sqrt()
}

/// Relative L2 distance after removing the best global phase between `a` and `b`.
///
/// Overall constant phases of kernels are conventions; this compares the
/// physical content only.
pub fn relative_l2_modulo_phase(a: &GridWave, b: &GridWave) -> f64 {
    let overlap = a.inner(b);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut rotated = a.clone();
    rotated.scale(phase);
    relative_l2(&rotated, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_gaussian() {
        let g = Grid1D::centered(0.0, 12.0, 2001);
        let vals: Vec<f64> = g.points().map(|u| (-u * u).exp()).collect();
        let integral = trapezoid(&g, &vals);
        assert!((integral - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn phase_removal_ignores_global_phase() {
        let g = Grid1D::centered(0.0, 8.0, 401);
        let a = GridWave::from_fn_1d(g, |u| Complex64::new((-u * u).exp(), 0.3 * u));
        let mut b = a.clone();
        b.scale(Complex64::from_polar(1.0, 1.1));
        assert!(relative_l2(&a, &b) > 0.5);
        assert!(relative_l2_modulo_phase(&a, &b) < 1e-14);
    }

    #[test]
    fn marginals_of_product_wave() {
        let gt = Grid1D::centered(0.0, 7.0, 201);
        let gx = Grid1D::centered(1.0, 7.0, 181);
        let w = GridWave::from_fn_2d(gt, gx, |t, x| {
            Complex64::new((-(t * t) / 2.0 - (x - 1.0) * (x - 1.0) / 2.0).exp(), 0.0)
        });
        let tm = w.t_marginal();
        let xm = w.x_marginal().unwrap();
        let total_t = trapezoid(&gt, &tm);
        let total_x = trapezoid(&gx, &xm);
        assert!((total_t - w.norm_sqr()).abs() < 1e-12);
        assert!((total_x - w.norm_sqr()).abs() < 1e-12);
    }
}
