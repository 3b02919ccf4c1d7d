//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the scattering solver of the library under test: stationary
//! problems are solved by multiplying exact 4×4 transfer matrices region by region.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C;

pub type M2 = [[C; 2]; 2];

pub fn re(x: f64) -> C {
    C::new(x, 0.0)
}

pub fn diag2(a: f64, b: f64) -> M2 {
    [[re(a), re(0.0)], [re(0.0), re(b)]]
}

/// Eigen-decomposition of a Hermitian 2×2 matrix: `(λ, columns of U)`.
fn eig2(a: &M2) -> ([f64; 2], [[C; 2]; 2]) {
    let (p, q) = (a[0][0].re, a[1][1].re);
    let b = a[0][1];
    let mean = 0.5 * (p + q);
    let half = 0.5 * (p - q);
    let r = (half * half + b.norm_sqr()).sqrt();
    if b.norm() < 1e-300 {
        return ([p, q], [[re(1.0), re(0.0)], [re(0.0), re(1.0)]]);
    }
    let lams = [mean + r, mean - r];
    let mut u = [[re(0.0); 2]; 2];
    for (j, &l) in lams.iter().enumerate() {
        // (a − l) v = 0 with v = (b, l − p)
        let v = [b, re(l - p)];
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        u[0][j] = v[0] / n;
        u[1][j] = v[1] / n;
    }
    (lams, u)
}

/// `exp` of `[[0, 1], [A, 0]] w` for Hermitian `A`, through the eigenvalues of `A`.
fn block_exp(a: &M2, w: f64) -> Matrix4<C> {
    let (lams, u) = eig2(a);
    let mut ch = [re(0.0); 2];
    let mut sh_over = [re(0.0); 2];
    let mut sh_times = [re(0.0); 2];
    for j in 0..2 {
        let s = re(lams[j]).sqrt();
        let z = s * w;
        ch[j] = z.cosh();
        sh_over[j] = if z.norm() < 1e-12 { re(w) } else { z.sinh() / s };
        sh_times[j] = s * z.sinh();
    }
    let f = |vals: &[C; 2]| -> [[C; 2]; 2] {
        let mut out = [[re(0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = (0..2).map(|j| u[r][j] * vals[j] * u[c][j].conj()).sum();
            }
        }
        out
    };
    let (cc, so, st) = (f(&ch), f(&sh_over), f(&sh_times));
    let mut m = Matrix4::<C>::zeros();
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = cc[r][c];
            m[(r, c + 2)] = so[r][c];
            m[(r + 2, c)] = st[r][c];
            m[(r + 2, c + 2)] = cc[r][c];
        }
    }
    m
}

/// Stationary two-channel scattering through a chain of constant regions.
///
/// `regions` lists `(width, V)` for the interior; `left` and `right` are the diagonal
/// asymptotic potentials, with the interior starting at `x_start`. Amplitudes are
/// referenced to `x = 0`, open channels as `e^{±iqx}`, closed ones as decaying exponentials.
pub struct TransferResult {
    pub reflected: [C; 2],
    pub transmitted: [C; 2],
    pub q_left: [C; 2],
    pub q_right: [C; 2],
}

fn q_of(m: f64, e: f64, v: f64) -> C {
    let a = 2.0 * m * (e - v);
    if a >= 0.0 {
        re(a.sqrt())
    } else {
        C::new(0.0, (-a).sqrt())
    }
}

/// `(ψ, ψ′)` of `e^{iqx}` in channel `ch` at `x`, with `dir = ±1`.
fn wave(ch: usize, q: C, dir: f64, x: f64) -> Vector4<C> {
    let i = C::new(0.0, 1.0);
    let ph = (i * q * dir * x).exp();
    let mut v = Vector4::<C>::zeros();
    v[ch] = ph;
    v[ch + 2] = i * q * dir * ph;
    v
}

pub fn transfer_scatter(m: f64, e: f64, left: [f64; 2], right: [f64; 2], x_start: f64, regions: &[(f64, M2)], incident: usize) -> TransferResult {
    let ql = [q_of(m, e, left[0]), q_of(m, e, left[1])];
    let qr = [q_of(m, e, right[0]), q_of(m, e, right[1])];
    let mut t = Matrix4::<C>::identity();
    let mut x = x_start;
    for (w, v) in regions {
        let mut a = *v;
        for d in 0..2 {
            a[d][d] -= re(e);
        }
        for r in a.iter_mut() {
            for z in r.iter_mut() {
                *z *= 2.0 * m;
            }
        }
        t = block_exp(&a, *w) * t;
        x += w;
    }
    let x_end = x;
    // Unknowns: reflected[0..2] (leftward on the left), transmitted[0..2] (rightward on the right).
    let mut sys = Matrix4::<C>::zeros();
    for ch in 0..2 {
        let col_l = t * wave(ch, ql[ch], -1.0, x_start);
        let col_r = wave(ch, qr[ch], 1.0, x_end);
        for r in 0..4 {
            sys[(r, ch)] = col_l[r];
            sys[(r, ch + 2)] = -col_r[r];
        }
    }
    let rhs = -(t * wave(incident, ql[incident], 1.0, x_start));
    let sol = sys.lu().solve(&rhs).expect("regular transfer system");
    TransferResult { reflected: [sol[0], sol[1]], transmitted: [sol[2], sol[3]], q_left: ql, q_right: qr }
}

/// Clock model with the delta replaced by a centered square of width `w` and area `alpha`.
pub fn clock_square(m: f64, alpha: f64, e_k: f64, p: f64, w: f64) -> TransferResult {
    let h = alpha / (2.0 * w);
    let inside = [[re(p + h), re(h)], [re(h), re(h)]];
    transfer_scatter(m, e_k + p, [p, 0.0], [p, 0.0], -0.5 * w, &[(w, inside)], 0)
}

/// Second-order Richardson extrapolation of the square model to zero width.
pub fn clock_delta_limit(m: f64, alpha: f64, e_k: f64, p: f64, w: f64) -> TransferResult {
    let r = [clock_square(m, alpha, e_k, p, w), clock_square(m, alpha, e_k, p, w / 2.0), clock_square(m, alpha, e_k, p, w / 4.0)];
    let ex = |f: &dyn Fn(&TransferResult) -> C| {
        let a = [f(&r[0]), f(&r[1]), f(&r[2])];
        let r1 = [2.0 * a[1] - a[0], 2.0 * a[2] - a[1]];
        (4.0 * r1[1] - r1[0]) / 3.0
    };
    TransferResult {
        reflected: [ex(&|t| t.reflected[0]), ex(&|t| t.reflected[1])],
        transmitted: [ex(&|t| t.transmitted[0]), ex(&|t| t.transmitted[1])],
        q_left: r[0].q_left,
        q_right: r[0].q_right,
    }
}

/// Flux-weighted down-channel probability of a clock-model solution.
pub fn down_probability(t: &TransferResult) -> f64 {
    let (k_up, k_down) = (t.q_left[0].re, t.q_left[1].re);
    if t.q_left[1].im != 0.0 {
        return 0.0;
    }
    k_down / k_up * (t.reflected[1].norm_sqr() + t.transmitted[1].norm_sqr())
}

/// Normalized Gaussian packet in the continuous momentum convention.
pub fn gaussian_k(k: f64, x0: f64, k0: f64, sigma: f64) -> C {
    let d = k - k0;
    (2.0 * sigma * sigma / PI).powf(0.25) * (-d * d * sigma * sigma).exp() * C::from_polar(1.0, -d * x0)
}

/// Free Gaussian `|ψ(x,t)|²` for `m`, initial width `sigma`.
pub fn gaussian_density(x: f64, t: f64, x0: f64, k0: f64, sigma: f64, m: f64) -> f64 {
    let s2 = sigma * sigma * (1.0 + (t / (2.0 * m * sigma * sigma)).powi(2));
    let xc = x0 + k0 / m * t;
    (-(x - xc).powi(2) / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt()
}

/// Composite Simpson rule on `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
