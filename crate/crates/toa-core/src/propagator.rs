//! Strang split-step evolution of one- and two-component wavefunctions.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::Fft;

use crate::error::{Error, Result};
use crate::grid::{fft_pair, Grid1D, Repr, SpinorWave, WaveFunction};
use crate::scattering::{add, is_hermitian, scale, Mat2, PiecewiseProfile};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Fraction of the grid at each end treated as the guard band.
pub const GUARD_FRACTION: f64 = 1.0 / 16.0;
pub const WRAP_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaTerm {
    pub x: f64,
    pub matrix: Mat2,
    pub strength: f64,
}

/// Gaussian bump `matrix · exp(-(x-x0)²/(2 width²))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothTerm {
    pub x0: f64,
    pub width: f64,
    pub matrix: Mat2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub boundaries: Vec<f64>,
    pub regions: Vec<Mat2>,
    pub deltas: Vec<DeltaTerm>,
    pub smooth: Vec<SmoothTerm>,
}

pub fn projector_plus_x() -> Mat2 {
    let h = Complex64::new(0.5, 0.0);
    [[h, h], [h, h]]
}

impl PotentialSpec {
    pub fn uniform(m: Mat2) -> Self {
        Self { boundaries: vec![], regions: vec![m], deltas: vec![], smooth: vec![] }
    }

    pub fn free() -> Self {
        Self::uniform([[ZERO; 2]; 2])
    }

    /// `(α/2)(1+σ_x)δ(x - x_d)`.
    pub fn trigger(alpha: f64, x_d: f64) -> Self {
        let mut v = Self::free();
        v.deltas.push(DeltaTerm { x: x_d, matrix: projector_plus_x(), strength: alpha });
        v
    }

    pub fn piecewise(boundaries: Vec<f64>, regions: Vec<Mat2>) -> Self {
        Self { boundaries, regions, deltas: vec![], smooth: vec![] }
    }

    pub fn with_delta(mut self, d: DeltaTerm) -> Self {
        self.deltas.push(d);
        self
    }

    pub fn with_smooth(mut self, s: SmoothTerm) -> Self {
        self.smooth.push(s);
        self
    }

    /// Adds `offset` to every region.
    pub fn with_offset(&self, offset: Mat2) -> Self {
        let mut v = self.clone();
        v.regions.iter_mut().for_each(|r| *r = add(*r, offset));
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.len() != self.boundaries.len() + 1 {
            return Err(Error::InvalidParameter("need one more region than boundaries".into()));
        }
        if self.boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("region boundaries must increase strictly".into()));
        }
        let mats = self.regions.iter().chain(self.deltas.iter().map(|d| &d.matrix)).chain(self.smooth.iter().map(|s| &s.matrix));
        if mats.into_iter().any(|m| !is_hermitian(m, 1e-12)) {
            return Err(Error::InvalidParameter("potential matrices must be Hermitian".into()));
        }
        if self.deltas.iter().any(|d| !(d.strength > 0.0)) {
            return Err(Error::InvalidParameter("delta strengths must be positive".into()));
        }
        Ok(())
    }

    /// Grid indices `[lo, hi]` covered by delta `d` and the resulting square height.
    pub fn delta_cells(d: &DeltaTerm, grid: &Grid1D) -> (usize, usize, f64) {
        let dx = grid.dx();
        let w = (1.0 / d.strength).max(4.0 * dx);
        let half = ((w / dx - 1.0) / 2.0).ceil().max(2.0) as usize;
        let c = grid.nearest_index(d.x);
        let lo = c.saturating_sub(half);
        let hi = (c + half).min(grid.n() - 1);
        let height = d.strength / ((hi - lo + 1) as f64 * dx);
        (lo, hi, height)
    }

    /// Matrix potential sampled on the grid; deltas become area-preserving squares.
    pub fn sample(&self, grid: &Grid1D) -> Result<Vec<Mat2>> {
        self.validate()?;
        let mut out: Vec<Mat2> = (0..grid.n())
            .map(|i| {
                let x = grid.x(i);
                let r = self.boundaries.iter().take_while(|&&b| x >= b).count();
                let mut m = self.regions[r];
                for s in &self.smooth {
                    let g = (-(x - s.x0).powi(2) / (2.0 * s.width * s.width)).exp();
                    m = add(m, scale(s.matrix, g));
                }
                m
            })
            .collect();
        for d in &self.deltas {
            let (lo, hi, h) = Self::delta_cells(d, grid);
            for m in &mut out[lo..=hi] {
                *m = add(*m, scale(d.matrix, h));
            }
        }
        Ok(out)
    }

    /// The piecewise-constant profile the grid actually realizes, with cell edges at midpoints.
    pub fn realized_profile(&self, grid: &Grid1D) -> Result<PiecewiseProfile> {
        if !self.smooth.is_empty() {
            return Err(Error::InvalidParameter("smooth terms have no piecewise realization".into()));
        }
        let sampled = self.sample(grid)?;
        let dx = grid.dx();
        let mut boundaries = vec![];
        let mut matrices = vec![sampled[0]];
        for i in 1..sampled.len() {
            if sampled[i] != sampled[i - 1] {
                boundaries.push(grid.x(i) - 0.5 * dx);
                matrices.push(sampled[i]);
            }
        }
        if boundaries.is_empty() {
            return Err(Error::InvalidParameter("uniform potential has no scattering profile".into()));
        }
        Ok(PiecewiseProfile::new(boundaries, matrices))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionParams {
    pub dt: f64,
    pub n_steps: usize,
    pub m: f64,
}

impl EvolutionParams {
    /// Largest step allowed on `grid`, scaled by `safety` in (0, 1).
    pub fn stable(grid: &Grid1D, m: f64, t_total: f64, safety: f64) -> Self {
        let dt_max = 0.5 / grid.e_max(m) * safety;
        let n_steps = (t_total / dt_max).ceil().max(1.0) as usize;
        Self { dt: t_total / n_steps as f64, n_steps, m }
    }

    pub fn t_total(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if !(self.dt > 0.0) || !(self.m > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {}, m = {}", self.dt, self.m)));
        }
        let s = self.dt * grid.e_max(self.m);
        if !(s < 0.5) {
            return Err(Error::Stability(s));
        }
        Ok(())
    }
}

/// `exp(-i M dt)` for Hermitian `M`, row-major.
pub fn expm_hermitian(m: &Mat2, dt: f64) -> [Complex64; 4] {
    let a = 0.5 * (m[0][0].re + m[1][1].re);
    let bz = 0.5 * (m[0][0].re - m[1][1].re);
    let bx = m[0][1].re;
    let by = -m[0][1].im;
    let b = (bx * bx + by * by + bz * bz).sqrt();
    let ph = Complex64::from_polar(1.0, -a * dt);
    let (s, c) = (b * dt).sin_cos();
    let f = if b > 0.0 { s / b } else { dt };
    let mi = Complex64::new(0.0, -1.0);
    [
        ph * (Complex64::new(c, 0.0) + mi * f * bz),
        ph * (mi * f * Complex64::new(bx, -by)),
        ph * (mi * f * Complex64::new(bx, by)),
        ph * (Complex64::new(c, 0.0) - mi * f * bz),
    ]
}

enum PotFactor {
    Free,
    Scalar(Vec<Complex64>),
    Matrix(Vec<[Complex64; 4]>),
}

/// Reusable split-step kernel for a fixed grid, mass, step and potential.
pub struct SplitStepper {
    grid: Grid1D,
    half_kin: Vec<Complex64>,
    full_kin: Vec<Complex64>,
    pot: PotFactor,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SplitStepper {
    fn kinetic(grid: &Grid1D, m: f64, dt: f64) -> Vec<Complex64> {
        let norm = 1.0 / grid.n() as f64;
        (0..grid.n()).map(|j| Complex64::from_polar(norm, -grid.k(j).powi(2) / (2.0 * m) * dt)).collect()
    }

    fn build(grid: &Grid1D, params: &EvolutionParams, pot: PotFactor) -> Result<Self> {
        params.validate(grid)?;
        let (fwd, inv) = fft_pair(grid.n());
        let scratch = vec![ZERO; fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        Ok(Self {
            grid: *grid,
            half_kin: Self::kinetic(grid, params.m, 0.5 * params.dt),
            full_kin: Self::kinetic(grid, params.m, params.dt),
            pot,
            fwd,
            inv,
            scratch,
        })
    }

    pub fn spinor(grid: &Grid1D, v: &PotentialSpec, params: &EvolutionParams) -> Result<Self> {
        let sampled = v.sample(grid)?;
        let pot = PotFactor::Matrix(sampled.iter().map(|m| expm_hermitian(m, params.dt)).collect());
        Self::build(grid, params, pot)
    }

    /// Single-component stepper for a real potential.
    pub fn scalar(grid: &Grid1D, v: &[f64], params: &EvolutionParams) -> Result<Self> {
        if v.len() != grid.n() {
            return Err(Error::Mismatch("potential length".into()));
        }
        let pot = PotFactor::Scalar(v.iter().map(|&u| Complex64::from_polar(1.0, -u * params.dt)).collect());
        Self::build(grid, params, pot)
    }

    pub fn free(grid: &Grid1D, params: &EvolutionParams) -> Result<Self> {
        Self::build(grid, params, PotFactor::Free)
    }

    fn kick(&mut self, buf: &mut [Complex64], full: bool) {
        self.fwd.process_with_scratch(buf, &mut self.scratch);
        let k = if full { &self.full_kin } else { &self.half_kin };
        buf.iter_mut().zip(k).for_each(|(v, f)| *v *= f);
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }

    fn potential(&self, comps: &mut [Vec<Complex64>]) {
        match &self.pot {
            PotFactor::Free => {}
            PotFactor::Scalar(f) => comps.iter_mut().for_each(|c| c.iter_mut().zip(f).for_each(|(v, u)| *v *= u)),
            PotFactor::Matrix(u) => {
                let (a, b) = comps.split_at_mut(1);
                for ((x, y), m) in a[0].iter_mut().zip(b[0].iter_mut()).zip(u) {
                    let (p, q) = (*x, *y);
                    *x = m[0] * p + m[1] * q;
                    *y = m[2] * p + m[3] * q;
                }
            }
        }
    }

    /// Advances `comps` (position values) by `n_steps`, calling `observe(step, comps)` every `every` steps.
    pub fn run(
        &mut self,
        comps: &mut [Vec<Complex64>],
        n_steps: usize,
        every: usize,
        mut observe: impl FnMut(usize, &[Vec<Complex64>]) -> Result<()>,
    ) -> Result<()> {
        if let PotFactor::Matrix(_) = self.pot {
            if comps.len() != 2 {
                return Err(Error::Mismatch("matrix potential needs two components".into()));
            }
        }
        if n_steps == 0 {
            return Ok(());
        }
        for c in comps.iter_mut() {
            self.kick(c, false);
        }
        for s in 1..=n_steps {
            self.potential(comps);
            let sync = s == n_steps || (every > 0 && s % every == 0);
            if sync {
                for c in comps.iter_mut() {
                    self.kick(c, false);
                }
                observe(s, comps)?;
                if s < n_steps {
                    for c in comps.iter_mut() {
                        self.kick(c, false);
                    }
                }
            } else {
                for c in comps.iter_mut() {
                    self.kick(c, true);
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
}

/// Probability in the guard bands at both ends of the grid.
pub fn guard_probability(grid: &Grid1D, comps: &[Vec<Complex64>]) -> f64 {
    let g = ((grid.n() as f64 * GUARD_FRACTION) as usize).max(1);
    let n = grid.n();
    comps
        .iter()
        .map(|c| c[..g].iter().chain(&c[n - g..]).map(|v| v.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        * grid.dx()
}

fn guard_check(grid: &Grid1D, comps: &[Vec<Complex64>]) -> Result<()> {
    let g = guard_probability(grid, comps);
    if g > WRAP_TOLERANCE {
        return Err(Error::WrapAround(g));
    }
    Ok(())
}

/// Steps between guard-band checks: a signal at `k_max/m` cannot cross the guard band in between.
fn check_interval(grid: &Grid1D, params: &EvolutionParams) -> usize {
    let band = grid.length() * GUARD_FRACTION;
    let v = grid.k_max() / params.m;
    ((band / v / params.dt).floor() as usize).max(1)
}

pub fn evolve_spinor(psi: &SpinorWave, v: &PotentialSpec, params: &EvolutionParams) -> Result<SpinorWave> {
    evolve_spinor_observed(psi, v, params, 0, |_, _| Ok(()))
}

/// As [`evolve_spinor`], calling `observe(t, state)` every `every` steps.
pub fn evolve_spinor_observed(
    psi: &SpinorWave,
    v: &PotentialSpec,
    params: &EvolutionParams,
    every: usize,
    mut observe: impl FnMut(f64, &SpinorWave) -> Result<()>,
) -> Result<SpinorWave> {
    let grid = *psi.grid();
    let mut stepper = SplitStepper::spinor(&grid, v, params)?;
    let start = psi.to_repr(Repr::Position);
    let mut comps = vec![start.up.into_values(), start.down.into_values()];
    guard_check(&grid, &comps)?;
    let check = check_interval(&grid, params);
    let every_eff = if every == 0 { check } else { gcd(every, check).max(1) };
    stepper.run(&mut comps, params.n_steps, every_eff, |s, c| {
        if s % check == 0 || s == params.n_steps {
            guard_check(&grid, c)?;
        }
        if every > 0 && s % every == 0 {
            observe(s as f64 * params.dt, &as_spinor(&grid, c))?;
        }
        Ok(())
    })?;
    let [up, down]: [Vec<Complex64>; 2] = comps.try_into().unwrap();
    Ok(SpinorWave { up: WaveFunction::new(grid, up, Repr::Position)?, down: WaveFunction::new(grid, down, Repr::Position)? })
}

fn as_spinor(grid: &Grid1D, c: &[Vec<Complex64>]) -> SpinorWave {
    SpinorWave {
        up: WaveFunction::new(*grid, c[0].clone(), Repr::Position).expect("finite"),
        down: WaveFunction::new(*grid, c[1].clone(), Repr::Position).expect("finite"),
    }
}

/// Scalar evolution under a real potential sampled on the grid.
pub fn evolve_scalar(psi: &WaveFunction, v: &[f64], params: &EvolutionParams) -> Result<WaveFunction> {
    let grid = *psi.grid();
    let mut stepper = SplitStepper::scalar(&grid, v, params)?;
    let mut comps = vec![psi.to_position().into_values()];
    guard_check(&grid, &comps)?;
    let check = check_interval(&grid, params);
    stepper.run(&mut comps, params.n_steps, check, |s, c| {
        if s % check == 0 || s == params.n_steps {
            guard_check(&grid, c)?;
        }
        Ok(())
    })?;
    WaveFunction::new(grid, comps.pop().unwrap(), Repr::Position)
}

/// Exact free evolution, applied in momentum space.
pub fn free_evolve(psi: &WaveFunction, m: f64, t: f64) -> WaveFunction {
    let mut w = psi.to_momentum();
    let grid = *w.grid();
    for (j, v) in w.values_mut().iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, -grid.k(j).powi(2) / (2.0 * m) * t);
    }
    w.to_repr(psi.repr())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Probability of `psi` in `[a, b)`.
pub fn weight_in(psi: &WaveFunction, a: f64, b: f64) -> f64 {
    let p = psi.to_position();
    let g = *p.grid();
    p.values().iter().enumerate().filter(|(i, _)| (a..b).contains(&g.x(*i))).map(|(_, v)| v.norm_sqr()).sum::<f64>() * g.dx()
}

/// Windowed standing wave `cos(k(x - x_c))` under a Gaussian envelope of width `sigma`.
pub fn windowed_standing_wave(grid: &Grid1D, k: f64, x_c: f64, sigma: f64) -> Result<WaveFunction> {
    WaveFunction::from_fn(*grid, |x| {
        let d = x - x_c;
        Complex64::new((k * d).cos() * (-d * d / (4.0 * sigma * sigma)).exp(), 0.0)
    })?
    .normalized()
}
