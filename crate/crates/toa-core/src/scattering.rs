//! Plane-wave scattering for two-level detectors coupled to a particle.
//!
//! Channel 0 is spin up (trigger on), channel 1 is spin down.  Amplitudes are
//! referenced to `x = 0`: on the left `δ_{c,in} e^{ikx} + φ_L e^{-ikx}`, on
//! the right `φ_R e^{ikx}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Probability that at least one of `n_spins` independent triggers flips.
pub fn trigger_flip_probability(n_spins: u32) -> f64 {
    1.0 - 0.5f64.powi(n_spins as i32)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriggerClockParams {
    pub m: f64,
    pub alpha: f64,
    pub e_k: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelWavevectors {
    pub k_up: f64,
    pub k_down: f64,
}

impl ChannelWavevectors {
    pub fn new(m: f64, e_k: f64, p: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidParameter(format!("m = {m}")));
        }
        if !(e_k > 0.0) {
            return Err(Error::DegenerateChannel(format!("E_k = {e_k} closes the up channel")));
        }
        if !(e_k + p > 0.0) {
            return Err(Error::DegenerateChannel(format!("E_k + p = {} closes the down channel", e_k + p)));
        }
        Ok(Self { k_up: (2.0 * m * e_k).sqrt(), k_down: (2.0 * m * (e_k + p)).sqrt() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterAmplitudes {
    pub phi_r_up: Complex64,
    pub phi_r_down: Complex64,
    pub phi_l_up: Complex64,
    pub phi_l_down: Complex64,
    pub wavevectors: ChannelWavevectors,
}

impl ScatterAmplitudes {
    /// Outgoing flux normalized by the incident flux, minus one.
    pub fn flux_residual(&self) -> f64 {
        let ChannelWavevectors { k_up, k_down } = self.wavevectors;
        let out = k_up * (self.phi_l_up.norm_sqr() + self.phi_r_up.norm_sqr())
            + k_down * (self.phi_l_down.norm_sqr() + self.phi_r_down.norm_sqr());
        out / k_up - 1.0
    }
}

/// Delta coupling `(α/2)(1+σ_x)δ(x)` with clock offset `p` on the up channel.
pub fn clock_scatter(params: &TriggerClockParams) -> Result<ScatterAmplitudes> {
    let TriggerClockParams { m, alpha, e_k, p } = *params;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}")));
    }
    let wv = ChannelWavevectors::new(m, e_k, p)?;
    let r = wv.k_up / wv.k_down;
    if alpha == 0.0 {
        return Ok(ScatterAmplitudes { phi_r_up: c(1.0), phi_r_down: ZERO, phi_l_up: ZERO, phi_l_down: ZERO, wavevectors: wv });
    }
    let a = I * (2.0 * wv.k_up / (m * alpha));
    let phi_r_up = (a - r) / (a - (1.0 + r));
    let phi_r_down = r * (phi_r_up - 1.0);
    Ok(ScatterAmplitudes {
        phi_r_up,
        phi_r_down,
        phi_l_up: phi_r_up - 1.0,
        phi_l_down: phi_r_down,
        wavevectors: wv,
    })
}

/// The `α → ∞` limit of [`clock_scatter`].
pub fn clock_scatter_limit(e_k: f64, p: f64, m: f64) -> Result<ScatterAmplitudes> {
    let wv = ChannelWavevectors::new(m, e_k, p)?;
    let t = wv.k_up / (wv.k_up + wv.k_down);
    Ok(ScatterAmplitudes {
        phi_r_up: c(t),
        phi_r_down: c(-t),
        phi_l_up: c(t - 1.0),
        phi_l_down: c(-t),
        wavevectors: wv,
    })
}

/// Flux-weighted spin-flip probability.
pub fn detection_probability(amps: &ScatterAmplitudes) -> f64 {
    let ChannelWavevectors { k_up, k_down } = amps.wavevectors;
    k_down / k_up * (amps.phi_r_down.norm_sqr() + amps.phi_l_down.norm_sqr())
}

/// Closed form of [`detection_probability`] for the delta coupling; zero when the down channel is closed.
pub fn detection_closed_form(m: f64, alpha: Option<f64>, e_k: f64, p: f64) -> f64 {
    if !(e_k > 0.0) || !(e_k + p > 0.0) {
        return 0.0;
    }
    let r = (e_k / (e_k + p)).sqrt();
    let a2 = match alpha {
        Some(al) if al > 0.0 => 8.0 * e_k / (m * al * al),
        Some(_) => return 0.0,
        None => 0.0,
    };
    2.0 * r / ((1.0 + r).powi(2) + a2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoosterParams {
    pub m: f64,
    pub alpha: f64,
    pub w: f64,
    pub v1: f64,
    pub v2: f64,
    pub e: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoosterAmplitudes {
    /// Reflected up-channel amplitude on the left.
    pub r_up: Complex64,
    /// Evanescent down-channel amplitude on the left, `e^{κx}`.
    pub r_down: Complex64,
    /// Evanescent up-channel amplitude on the right, `e^{-κx}`.
    pub t_up: Complex64,
    /// Transmitted down-channel amplitude on the right.
    pub t_down: Complex64,
    pub k_in: f64,
    pub k_out: f64,
    pub kappa_up: f64,
    pub kappa_down: f64,
}

impl BoosterAmplitudes {
    pub fn reflection(&self) -> f64 {
        self.r_up.norm_sqr()
    }

    pub fn transmission(&self) -> f64 {
        self.k_out / self.k_in * self.t_down.norm_sqr()
    }
}

impl BoosterParams {
    pub fn validate(&self) -> Result<()> {
        let BoosterParams { m, alpha, w, v1, v2, e } = *self;
        for (name, v) in [("m", m), ("W", w), ("V1", v1), ("V2", v2)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha}")));
        }
        if !(e > 0.0 && e < w && e < v1) {
            return Err(Error::InvalidRegime(format!("need 0 < E < W and E < V1, got E = {e}, W = {w}, V1 = {v1}")));
        }
        Ok(())
    }

    /// Channel potentials `(left, right)` as diagonal matrices.
    pub fn channel_potentials(&self) -> (Mat2, Mat2) {
        (diag(0.0, self.v1), diag(self.w, -self.v2))
    }
}

/// Up channel: 0 left, W right.  Down channel: V1 left, −V2 right.  Coupling `α σ_x δ(x)`.
pub fn booster_scatter(params: &BoosterParams) -> Result<BoosterAmplitudes> {
    params.validate()?;
    let (left, right) = params.channel_potentials();
    let profile = PiecewiseProfile {
        boundaries: vec![0.0],
        matrices: vec![left, right],
        jumps: vec![scale(SIGMA_X, params.alpha)],
    };
    let sol = solve_piecewise(&profile, params.m, params.e, 0)?;
    let m = params.m;
    Ok(BoosterAmplitudes {
        r_up: sol.reflected[0],
        r_down: sol.reflected[1],
        t_up: sol.transmitted[0],
        t_down: sol.transmitted[1],
        k_in: (2.0 * m * params.e).sqrt(),
        k_out: (2.0 * m * (params.e + params.v2)).sqrt(),
        kappa_up: (2.0 * m * (params.w - params.e)).sqrt(),
        kappa_down: (2.0 * m * (params.v1 - params.e)).sqrt(),
    })
}

pub type Mat2 = [[Complex64; 2]; 2];

pub const SIGMA_X: Mat2 = [[ZERO, Complex64 { re: 1.0, im: 0.0 }], [Complex64 { re: 1.0, im: 0.0 }, ZERO]];

pub fn diag(a: f64, b: f64) -> Mat2 {
    [[c(a), ZERO], [ZERO, c(b)]]
}

pub fn scale(m: Mat2, s: f64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

pub fn add(a: Mat2, b: Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn is_hermitian(m: &Mat2, tol: f64) -> bool {
    m[0][0].im.abs() <= tol && m[1][1].im.abs() <= tol && (m[0][1] - m[1][0].conj()).norm() <= tol
}

/// Eigenpairs of a Hermitian 2×2 matrix, eigenvectors orthonormal.
pub fn eigh(m: &Mat2) -> [(f64, [Complex64; 2]); 2] {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let off = m[0][1];
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let rad = (half * half + off.norm_sqr()).sqrt();
    if off.norm() <= 1e-300 {
        return [(a, [c(1.0), ZERO]), (d, [ZERO, c(1.0)])];
    }
    let mut out = [(0.0, [ZERO, ZERO]); 2];
    for (slot, lam) in [mean + rad, mean - rad].into_iter().enumerate() {
        let v1 = [off, c(lam - a)];
        let v2 = [c(lam - d), off.conj()];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        let s = 1.0 / n.sqrt();
        out[slot] = (lam, [v[0] * s, v[1] * s]);
    }
    out
}

/// Piecewise-constant two-channel potential with optional delta jumps at the boundaries.
///
/// `matrices.len() == boundaries.len() + 1`; the two outer matrices must be
/// diagonal so that asymptotic channels coincide with the spin basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseProfile {
    pub boundaries: Vec<f64>,
    pub matrices: Vec<Mat2>,
    /// Delta strength matrix at each boundary: `ψ'(b+) − ψ'(b−) = 2m D ψ(b)`.
    pub jumps: Vec<Mat2>,
}

impl PiecewiseProfile {
    pub fn new(boundaries: Vec<f64>, matrices: Vec<Mat2>) -> Self {
        let jumps = vec![[[ZERO; 2]; 2]; boundaries.len()];
        Self { boundaries, matrices, jumps }
    }

    /// Square of width `w` centered at 0 carrying `inside` on top of the uniform `outside` matrix.
    pub fn centered_square(outside: Mat2, inside: Mat2, w: f64) -> Self {
        Self::new(vec![-0.5 * w, 0.5 * w], vec![outside, add(outside, inside), outside])
    }

    fn validate(&self) -> Result<()> {
        if self.matrices.len() != self.boundaries.len() + 1 || self.jumps.len() != self.boundaries.len() {
            return Err(Error::InvalidParameter("region/boundary count mismatch".into()));
        }
        if self.boundaries.is_empty() {
            return Err(Error::InvalidParameter("need at least one boundary".into()));
        }
        if self.boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("boundaries must increase strictly".into()));
        }
        if self.matrices.iter().chain(&self.jumps).any(|m| !is_hermitian(m, 1e-12)) {
            return Err(Error::InvalidParameter("matrices must be Hermitian".into()));
        }
        for m in [self.matrices.first().unwrap(), self.matrices.last().unwrap()] {
            if m[0][1].norm() > 0.0 {
                return Err(Error::InvalidParameter("outer regions must be diagonal".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSolution {
    pub reflected: [Complex64; 2],
    pub transmitted: [Complex64; 2],
    /// Channel wavenumbers on the left and right; imaginary for closed channels.
    pub q_left: [Complex64; 2],
    pub q_right: [Complex64; 2],
}

impl ChannelSolution {
    /// Outgoing propagating flux per unit incident flux, by channel: `(reflected, transmitted)`.
    pub fn fluxes(&self, incident: usize) -> ([f64; 2], [f64; 2]) {
        let k_in = self.q_left[incident].re;
        let f = |q: Complex64, a: Complex64| if q.im.abs() < 1e-14 && q.re > 0.0 { q.re * a.norm_sqr() / k_in } else { 0.0 };
        (
            [f(self.q_left[0], self.reflected[0]), f(self.q_left[1], self.reflected[1])],
            [f(self.q_right[0], self.transmitted[0]), f(self.q_right[1], self.transmitted[1])],
        )
    }
}

fn channel_q(m: f64, e: f64, v: f64) -> Complex64 {
    let arg = 2.0 * m * (e - v);
    if arg >= 0.0 {
        c(arg.sqrt())
    } else {
        Complex64::new(0.0, (-arg).sqrt())
    }
}

struct Basis {
    vec: [Complex64; 2],
    q: Complex64,
    /// +1 for `e^{iq(x-x_ref)}`, −1 for `e^{-iq(x-x_ref)}`.
    dir: f64,
    x_ref: f64,
}

impl Basis {
    fn eval(&self, x: f64) -> ([Complex64; 2], [Complex64; 2]) {
        let ph = (I * self.q * self.dir * (x - self.x_ref)).exp();
        let d = I * self.q * self.dir;
        ([self.vec[0] * ph, self.vec[1] * ph], [self.vec[0] * ph * d, self.vec[1] * ph * d])
    }
}

/// Stationary scattering at total energy `e` with unit incidence from the left in channel `incident`.
pub fn solve_piecewise(profile: &PiecewiseProfile, m: f64, e: f64, incident: usize) -> Result<ChannelSolution> {
    profile.validate()?;
    if incident > 1 {
        return Err(Error::InvalidParameter(format!("incident channel {incident}")));
    }
    let left = profile.matrices[0];
    let right = *profile.matrices.last().unwrap();
    let q_left = [channel_q(m, e, left[0][0].re), channel_q(m, e, left[1][1].re)];
    let q_right = [channel_q(m, e, right[0][0].re), channel_q(m, e, right[1][1].re)];
    if !(q_left[incident].im == 0.0 && q_left[incident].re > 0.0) {
        return Err(Error::DegenerateChannel("incident channel is closed".into()));
    }
    let unit = |ch: usize| if ch == 0 { [c(1.0), ZERO] } else { [ZERO, c(1.0)] };

    let nb = profile.boundaries.len();
    let mut regions: Vec<Vec<Basis>> = Vec::with_capacity(nb + 1);
    regions.push((0..2).map(|ch| Basis { vec: unit(ch), q: q_left[ch], dir: -1.0, x_ref: 0.0 }).collect());
    for j in 1..nb {
        let (a, b) = (profile.boundaries[j - 1], profile.boundaries[j]);
        let mut fns = Vec::with_capacity(4);
        for (lam, v) in eigh(&profile.matrices[j]) {
            let q = channel_q(m, e, lam);
            fns.push(Basis { vec: v, q, dir: 1.0, x_ref: a });
            fns.push(Basis { vec: v, q, dir: -1.0, x_ref: b });
        }
        regions.push(fns);
    }
    regions.push((0..2).map(|ch| Basis { vec: unit(ch), q: q_right[ch], dir: 1.0, x_ref: 0.0 }).collect());
    let incident_fn = Basis { vec: unit(incident), q: q_left[incident], dir: 1.0, x_ref: 0.0 };

    let offsets: Vec<usize> = regions
        .iter()
        .scan(0, |acc, r| {
            let o = *acc;
            *acc += r.len();
            Some(o)
        })
        .collect();
    let n_unknowns: usize = regions.iter().map(|r| r.len()).sum();
    let mut a = DMatrix::<Complex64>::zeros(4 * nb, n_unknowns);
    let mut rhs = DVector::<Complex64>::zeros(4 * nb);
    let two_m = 2.0 * m;

    for (bi, &xb) in profile.boundaries.iter().enumerate() {
        let jump = profile.jumps[bi];
        let row = 4 * bi;
        // left side enters with a minus sign, plus the delta term evaluated on it
        let put = |col: Option<usize>, f: &Basis, sign: f64, rhs: &mut DVector<Complex64>, a: &mut DMatrix<Complex64>| {
            let (v, d) = f.eval(xb);
            for s in 0..2 {
                let cont = v[s] * sign;
                let mut der = d[s] * sign;
                if sign < 0.0 {
                    der -= two_m * (jump[s][0] * v[0] + jump[s][1] * v[1]);
                }
                match col {
                    Some(cidx) => {
                        a[(row + s, cidx)] += cont;
                        a[(row + 2 + s, cidx)] += der;
                    }
                    None => {
                        rhs[row + s] -= cont;
                        rhs[row + 2 + s] -= der;
                    }
                }
            }
        };
        for (fi, f) in regions[bi].iter().enumerate() {
            put(Some(offsets[bi] + fi), f, -1.0, &mut rhs, &mut a);
        }
        if bi == 0 {
            put(None, &incident_fn, -1.0, &mut rhs, &mut a);
        }
        for (fi, f) in regions[bi + 1].iter().enumerate() {
            put(Some(offsets[bi + 1] + fi), f, 1.0, &mut rhs, &mut a);
        }
    }

    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateChannel("singular matching system".into()))?;
    let last = offsets[nb];
    Ok(ChannelSolution {
        reflected: [sol[0], sol[1]],
        transmitted: [sol[last], sol[last + 1]],
        q_left,
        q_right,
    })
}

/// Clock-model amplitudes for a square of width `w` and area `alpha` replacing the delta.
pub fn clock_scatter_square(params: &TriggerClockParams, w: f64) -> Result<ScatterAmplitudes> {
    let TriggerClockParams { m, alpha, e_k, p } = *params;
    let wv = ChannelWavevectors::new(m, e_k, p)?;
    let outside = diag(p, 0.0);
    let h = alpha / (2.0 * w);
    let inside = [[c(h), c(h)], [c(h), c(h)]];
    let sol = solve_piecewise(&PiecewiseProfile::centered_square(outside, inside, w), m, e_k + p, 0)?;
    Ok(ScatterAmplitudes {
        phi_r_up: sol.transmitted[0],
        phi_r_down: sol.transmitted[1],
        phi_l_up: sol.reflected[0],
        phi_l_down: sol.reflected[1],
        wavevectors: wv,
    })
}

/// Clock-model amplitudes with the delta imposed as a derivative jump.
pub fn clock_scatter_jump(params: &TriggerClockParams) -> Result<ScatterAmplitudes> {
    let TriggerClockParams { m, alpha, e_k, p } = *params;
    let wv = ChannelWavevectors::new(m, e_k, p)?;
    let h = 0.5 * alpha;
    let profile = PiecewiseProfile {
        boundaries: vec![0.0],
        matrices: vec![diag(p, 0.0), diag(p, 0.0)],
        jumps: vec![[[c(h), c(h)], [c(h), c(h)]]],
    };
    let sol = solve_piecewise(&profile, m, e_k + p, 0)?;
    Ok(ScatterAmplitudes {
        phi_r_up: sol.transmitted[0],
        phi_r_down: sol.transmitted[1],
        phi_l_up: sol.reflected[0],
        phi_l_down: sol.reflected[1],
        wavevectors: wv,
    })
}
