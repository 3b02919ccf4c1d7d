//! Uniform periodic grids, wavefunctions and spectral transforms.
//!
//! Momentum-space values are stored in FFT order and use the continuous
//! normalization `ψ̃(k) = (2π)^{-1/2} ∫ ψ(x) e^{-ikx} dx`, so that
//! `Σ|ψ|² dx = Σ|ψ̃|² dk` holds exactly on the grid.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 16")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidGrid(format!("bad extent [{x_min}, {x_max})")));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// Grid on `[-half_width, half_width)`.
    pub fn centered(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    /// Smallest power-of-two grid starting at `x_min` that reaches `x_max` with spacing at most `dx`.
    pub fn covering(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!("cannot cover [{x_min}, {x_max}) with dx = {dx}")));
        }
        let n = (((x_max - x_min) / dx).ceil() as usize).next_power_of_two().max(16);
        Self::new(x_min, x_min + n as f64 * dx, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dx())
    }

    pub fn k_max(&self) -> f64 {
        PI / self.dx()
    }

    /// Largest kinetic energy representable on the grid.
    pub fn e_max(&self, m: f64) -> f64 {
        self.k_max().powi(2) / (2.0 * m)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// Wavenumber of FFT bin `j`, covering `[-π/dx, π/dx)`.
    pub fn k(&self, j: usize) -> f64 {
        let j = j as i64;
        let n = self.n as i64;
        let s = if j < n / 2 { j } else { j - n };
        s as f64 * self.dk()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn ks(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.k(j)).collect()
    }

    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx()).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Repr {
    Position,
    Momentum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    values: Vec<Complex64>,
    repr: Repr,
}

impl WaveFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>, repr: Repr) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Mismatch(format!("{} values for {} grid points", values.len(), grid.n())));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values, repr })
    }

    pub fn zeros(grid: Grid1D, repr: Repr) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.n()], repr }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.xs().into_iter().map(f).collect(), Repr::Position)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Quadrature weight of one sample in the current representation.
    pub fn measure(&self) -> f64 {
        match self.repr {
            Repr::Position => self.grid.dx(),
            Repr::Momentum => self.grid.dk(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.measure()
    }

    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.measure())
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= c);
        self
    }

    pub fn add(&self, other: &WaveFunction) -> Result<WaveFunction> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(WaveFunction { grid: self.grid, values, repr: self.repr })
    }

    pub fn check_compatible(&self, other: &WaveFunction) -> Result<()> {
        if self.grid != other.grid || self.repr != other.repr {
            return Err(Error::Mismatch("grid or representation differs".into()));
        }
        Ok(())
    }

    pub fn to_repr(&self, target: Repr) -> WaveFunction {
        if target == self.repr {
            return self.clone();
        }
        let mut values = self.values.clone();
        match target {
            Repr::Momentum => forward_in_place(&self.grid, &mut values),
            Repr::Position => inverse_in_place(&self.grid, &mut values),
        }
        WaveFunction { grid: self.grid, values, repr: target }
    }

    pub fn to_position(&self) -> WaveFunction {
        self.to_repr(Repr::Position)
    }

    pub fn to_momentum(&self) -> WaveFunction {
        self.to_repr(Repr::Momentum)
    }

    /// Continuous Fourier amplitude at an arbitrary wavenumber, by direct summation.
    pub fn amplitude_at(&self, k: f64) -> Complex64 {
        let pos = self.to_position();
        let dx = self.grid.dx();
        let s: Complex64 = pos
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * Complex64::from_polar(1.0, -k * self.grid.x(i)))
            .sum();
        s * dx / (2.0 * PI).sqrt()
    }
}

/// Position to momentum, continuous normalization, FFT order.
pub(crate) fn forward_in_place(grid: &Grid1D, values: &mut [Complex64]) {
    let (fwd, _) = fft_pair(grid.n());
    fwd.process(values);
    let c = grid.dx() / (2.0 * PI).sqrt();
    for (j, v) in values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(c, -grid.k(j) * grid.x_min());
    }
}

pub(crate) fn inverse_in_place(grid: &Grid1D, values: &mut [Complex64]) {
    let (_, inv) = fft_pair(grid.n());
    let c = grid.dk() / (2.0 * PI).sqrt();
    for (j, v) in values.iter_mut().enumerate() {
        *v *= Complex64::from_polar(c, grid.k(j) * grid.x_min());
    }
    inv.process(values);
}

pub fn transform(psi: &WaveFunction, target: Repr) -> Result<WaveFunction> {
    if let Some(i) = psi.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite(i));
    }
    Ok(psi.to_repr(target))
}

/// Spectral first derivative in position representation.
pub fn derivative(psi: &WaveFunction) -> WaveFunction {
    let mut m = psi.to_momentum();
    let grid = m.grid;
    for (j, v) in m.values.iter_mut().enumerate() {
        let k = grid.k(j);
        // drop the unpaired Nyquist bin so real inputs stay real
        *v *= if j == grid.n() / 2 { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) };
    }
    m.to_position()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinorWave {
    pub up: WaveFunction,
    pub down: WaveFunction,
}

impl SpinorWave {
    pub fn new(up: WaveFunction, down: WaveFunction) -> Result<Self> {
        up.check_compatible(&down)?;
        Ok(Self { up, down })
    }

    /// Spin-up state carrying `psi`.
    pub fn up_only(psi: WaveFunction) -> Self {
        let down = WaveFunction::zeros(psi.grid, psi.repr);
        Self { up: psi, down }
    }

    pub fn grid(&self) -> &Grid1D {
        self.up.grid()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    pub fn to_repr(&self, target: Repr) -> SpinorWave {
        SpinorWave { up: self.up.to_repr(target), down: self.down.to_repr(target) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianSpec {
    pub x0: f64,
    pub k0: f64,
    pub sigma: f64,
    pub m: f64,
}

impl GaussianSpec {
    pub fn mean_energy(&self) -> f64 {
        (self.k0 * self.k0 + 0.25 / (self.sigma * self.sigma)) / (2.0 * self.m)
    }
}

/// Normalized packet `exp(-(x-x0)²/(4σ²) + i k0 x)`.
pub fn make_gaussian(grid: &Grid1D, spec: &GaussianSpec) -> Result<WaveFunction> {
    if !(spec.sigma > 0.0) || !(spec.m > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma = {}, m = {}", spec.sigma, spec.m)));
    }
    let guard = 6.0 * spec.sigma;
    if spec.x0 - grid.x_min() <= guard || grid.x_max() - spec.x0 <= guard {
        return Err(Error::GridTooSmall(format!(
            "packet at {} with sigma {} needs [{}, {}] inside [{}, {})",
            spec.x0,
            spec.sigma,
            spec.x0 - guard,
            spec.x0 + guard,
            grid.x_min(),
            grid.x_max()
        )));
    }
    let s = *spec;
    WaveFunction::from_fn(*grid, |x| {
        let d = x - s.x0;
        Complex64::from_polar((-d * d / (4.0 * s.sigma * s.sigma)).exp(), s.k0 * x)
    })?
    .normalized()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    X,
    K,
    KineticEnergy { m: f64 },
}

pub fn expectation(psi: &WaveFunction, obs: Observable) -> Result<f64> {
    let norm = psi.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let weighted = |w: &WaveFunction, f: &dyn Fn(usize) -> f64| -> f64 {
        w.values.iter().enumerate().map(|(i, v)| f(i) * v.norm_sqr()).sum::<f64>() * w.measure()
    };
    let g = psi.grid;
    let value = match obs {
        Observable::X => weighted(&psi.to_position(), &|i| g.x(i)),
        Observable::K => weighted(&psi.to_momentum(), &|j| g.k(j)),
        Observable::KineticEnergy { m } => weighted(&psi.to_momentum(), &|j| g.k(j).powi(2) / (2.0 * m)),
    };
    Ok(value / norm)
}
