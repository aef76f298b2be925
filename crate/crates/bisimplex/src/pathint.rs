//! Connection integrals: Bessel functions from their angular
//! representations, single-triangle amplitudes, the linearized closure
//! delta, and Monte-Carlo estimation of the degenerate 4-simplex amplitude.

use crate::action::{Gamma, Rep};
use crate::fit::{fit_exp_power, linspace};
use crate::algebra::{compose, sample_haar, ChiralRotor, ChiralVec, Chirality};
use crate::cx::{self, I, ONE, ZERO};
use crate::geometry::Bivector;
use crate::quad::{exp_sinh, gauss_legendre, tanh_sinh};
use crate::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const QUAD_TOL: f64 = 1e-12;
const QUAD_ACCEPT: f64 = 1e-10;

fn check_bessel_arg(l: C64) -> Result<()> {
    if !(l.re > 0.0) || !l.im.is_finite() {
        return Err(Error::Domain(format!("Bessel argument {l} needs Re > 0")));
    }
    Ok(())
}

fn angular(l: C64, power: i32) -> Result<C64> {
    check_bessel_arg(l)?;
    let r = tanh_sinh(
        |phi| {
            let s = phi.sin();
            (-l / s).exp() / s.powi(power)
        },
        0.0,
        FRAC_PI_2,
        QUAD_TOL,
    );
    if !r.converged && r.error > QUAD_ACCEPT * r.value.norm() {
        return Err(Error::Domain(format!("angular quadrature did not converge at l = {l}")));
    }
    Ok(r.value)
}

/// `K0(l) = int_0^{pi/2} exp(-l / sin phi) dphi / sin phi`.
pub fn bessel_k0(l: C64) -> Result<C64> {
    angular(l, 1)
}

/// `K1(l) = int_0^{pi/2} exp(-l / sin phi) dphi / sin^2 phi`.
pub fn bessel_k1(l: C64) -> Result<C64> {
    angular(l, 2)
}

/// `Ki1(l) = int_0^{pi/2} exp(-l / sin phi) dphi = int_l^inf K0`.
pub fn bessel_ki1(l: C64) -> Result<C64> {
    angular(l, 0)
}

fn k_series(z: C64) -> (C64, C64, C64) {
    let y = z * z * 0.25;
    let ln_half = cx::ln(z * 0.5);
    // I0, I1 and the digamma sums
    let mut term0 = ONE; // (y^k)/(k!)^2
    let mut i0 = ZERO;
    let mut i1 = ZERO;
    let mut s0 = ZERO;
    let mut s1 = ZERO;
    let mut harmonic = 0.0;
    let mut psi1 = -EULER_GAMMA; // psi(k+1)
    for k in 0..60 {
        let kf = k as f64;
        let term1 = term0 / (kf + 1.0); // y^k / (k! (k+1)!)
        let psi2 = psi1 + 1.0 / (kf + 1.0); // psi(k+2)
        i0 += term0;
        i1 += term1;
        s0 += term0 * harmonic;
        s1 += term1 * (psi1 + psi2);
        if term0.norm() < 1e-18 * i0.norm() && k > 2 {
            break;
        }
        harmonic += 1.0 / (kf + 1.0);
        psi1 = psi2;
        term0 = term0 * y / ((kf + 1.0) * (kf + 1.0));
    }
    let k0 = -(ln_half + EULER_GAMMA) * i0 + s0;
    // K1/z - 1/z^2
    let reg = ln_half * i1 * 0.5 - s1 * 0.25;
    (k0, ONE / z + z * reg, reg)
}

/// `K1(z)/z - 1/z^2`, free of cancellation for small `|z|`.
pub fn bessel_k1_regular(z: C64) -> C64 {
    if z.norm() <= 3.5 {
        k_series(z).2
    } else {
        let (_, k1) = bessel_k01_fast(z);
        (k1 - ONE / z) / z
    }
}

/// `K0` and `K1` by the power series for `|z| <= 3.5`, Steed's continued
/// fraction up to `|z| = 18` and the asymptotic expansion beyond.
/// Requires `Re z > 0`.
pub fn bessel_k01_fast(z: C64) -> (C64, C64) {
    let r = z.norm();
    if r > 18.0 {
        let pre = (cx::re(PI) / (z * 2.0)).sqrt() * (-z).exp();
        let inv8z = ONE / (z * 8.0);
        let (mut t0, mut t1) = (ONE, ONE);
        let (mut s0, mut s1) = (ONE, ONE);
        for k in 1..40 {
            let kf = (2 * k - 1) as f64;
            t0 = t0 * inv8z * (-(kf * kf)) / k as f64;
            t1 = t1 * inv8z * (4.0 - kf * kf) / k as f64;
            s0 += t0;
            s1 += t1;
            if t0.norm() < 1e-17 && t1.norm() < 1e-17 {
                break;
            }
        }
        return (pre * s0, pre * s1);
    }
    if r <= 3.5 {
        let (k0, k1, _) = k_series(z);
        (k0, k1)
    } else {
        let a1 = 0.25;
        let mut b = (ONE + z) * 2.0;
        let mut d = ONE / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = ZERO;
        let mut q2 = ONE;
        let mut q = cx::re(a1);
        let mut c = cx::re(a1);
        let mut a = -a1;
        let mut s = ONE + q * delh;
        for i in 1..20_000 {
            let fi = i as f64;
            a -= 2.0 * fi;
            c = -c * a / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = ONE / (b + d * a);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if dels.norm() < 1e-16 * s.norm() {
                break;
            }
        }
        let k0 = (cx::re(PI) / (z * 2.0)).sqrt() * (-z).exp() / s;
        let k1 = k0 * (z + 0.5 - h * a1) / z;
        (k0, k1)
    }
}

/// `int e^{i a sinh psi} dpsi` after the shift `psi -> psi + i pi/2`,
/// i.e. `2 int_0^inf e^{-a cosh psi} dpsi`.
pub fn model_integral(a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("model integral needs a > 0, got {a}")));
    }
    let r = exp_sinh(|psi| cx::re((-a * psi.cosh()).exp()), 0.0, QUAD_TOL);
    Ok(2.0 * r.value.re)
}

/// Direct oscillatory evaluation with Cesaro averaging of the partial
/// integrals up to `cutoff` in `x = sinh psi`:
/// `2 int_0^X (1 - x/X) cos(a x) / sqrt(1 + x^2) dx`.
/// The averaging error decays only like a power of `X`, so the relative
/// accuracy degrades quickly as `a` grows and the target `2 K0(a)` shrinks.
pub fn model_integral_cesaro(a: f64, cutoff: f64) -> Result<f64> {
    if !(a > 0.0 && cutoff > 0.0) {
        return Err(Error::Domain(format!("need a > 0 and cutoff > 0, got {a}, {cutoff}")));
    }
    let panels = ((cutoff * a / FRAC_PI_2).ceil() as usize).max(64) * 2;
    let v = gauss_legendre(
        |x| cx::re((1.0 - x / cutoff) * (a * x).cos() / (1.0 + x * x).sqrt()),
        0.0,
        cutoff,
        panels,
    );
    Ok(2.0 * v.re)
}

/// Exponent source of one chirality, `m = -(i/2)(1 +- i/g) v`, with an
/// optional scalar part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MSource {
    pub m0: C64,
    pub mvec: ChiralVec,
}

impl MSource {
    pub fn from_area(v: &ChiralVec, gamma: Gamma, ch: Chirality) -> Self {
        let f = C64::new(1.0, ch.sign() * gamma.inverse());
        MSource { m0: ZERO, mvec: *v * (-I * 0.5 * f) }
    }

    pub fn with_scalar(mut self, m0: C64) -> Self {
        self.m0 = m0;
        self
    }

    /// `2 m o m = mvec.mvec + m0^2`.
    pub fn effective_square(&self) -> C64 {
        self.mvec.square() + self.m0 * self.m0
    }

    /// `sqrt(2 m o m)` with `Re >= 0`; a purely imaginary root gives no
    /// decay and is rejected.
    pub fn rate(&self) -> Result<C64> {
        let r = cx::sqrt_snap(self.effective_square());
        if r.re <= 1e-14 * r.norm().max(1e-300) {
            return Err(Error::Branch(format!("source square {} lies on the cut", self.effective_square())));
        }
        Ok(r)
    }
}

/// `[+v.+v, -v.-v]` of a bivector.
pub fn chiral_squares(b: &Bivector) -> [C64; 2] {
    [b.plus.square(), b.minus.square()]
}

/// Sources of both chiralities for given chiral squares, realised along
/// the first axis.
pub fn sources_from_squares(v2: [C64; 2], gamma: Gamma) -> [MSource; 2] {
    let mk = |q: C64, ch| MSource::from_area(&ChiralVec::new(cx::sqrt_snap(q), ZERO, ZERO), gamma, ch);
    [mk(v2[0], Chirality::Plus), mk(v2[1], Chirality::Minus)]
}

/// `K1(rho) / (pi rho)` per chirality with `rho = sqrt(2 m o m)`.
pub fn n0_su2_from_sources(src: &[MSource; 2]) -> Result<C64> {
    let mut out = ONE;
    for s in src {
        let rho = s.rate()?;
        out *= bessel_k1(rho)? / (rho * PI);
    }
    Ok(out)
}

/// `prod_+- K1(X/2) / (pi/2 X)`, `X = sqrt((1/g -+ i)^2 (+-v)^2)`.
pub fn n0_su2_closed(v2: [C64; 2], gamma: Gamma) -> Result<C64> {
    n0_su2_from_sources(&sources_from_squares(v2, gamma))
}

/// `prod_+- Ki1(X/4) / (pi/2 X)`.
pub fn n0_so3_closed(v2: [C64; 2], gamma: Gamma) -> Result<C64> {
    let mut out = ONE;
    for s in sources_from_squares(v2, gamma) {
        let rho = s.rate()?;
        out *= bessel_ki1(rho * 0.5)? / (rho * PI);
    }
    Ok(out)
}

/// SO(3) amplitude through `Ki1(l) = int_0^inf exp(-l cosh t) / cosh t dt`,
/// an independent route to the angular form.
pub fn n0_so3_radial(v2: [C64; 2], gamma: Gamma) -> Result<C64> {
    let mut out = ONE;
    for s in sources_from_squares(v2, gamma) {
        let rho = s.rate()?;
        let l = rho * 0.5;
        let r = exp_sinh(|t| (-l * t.cosh()).exp() / t.cosh(), 0.0, QUAD_TOL);
        out *= r.value / (rho * PI);
    }
    Ok(out)
}

/// Point on the deformed contour of one chirality. With a scalar part `m0`
/// the radial variable is shifted by a phase `beta`,
/// `cos 2 beta = (M^2 u^2 - m0^2) / (M^2 u^2 + m0^2)`, `u = cosh zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    /// Radial variable, `phi/2 = pi/2 + i eta`.
    pub eta: f64,
    /// `zeta >= 0`.
    pub zeta: f64,
    /// `chi in [0, 2 pi)`.
    pub chi: f64,
}

/// Contour-deformed integral of one chirality over `(eta, cosh zeta, chi)`,
/// with `chi` done analytically:
/// `(2 pi / (4 pi^2)) int_1^inf du int e^{-rho(u) cosh eta}
///  (1 + cos 2b cosh 2 eta) / 2 d eta`,
/// `rho(u)^2 = m0^2 + M^2 u^2`, `cos 2b = (M^2 u^2 - m0^2) / rho^2`.
/// Without a vector part the `u` integral is taken against the effective
/// rate, `int e^{-rho cosh eta cosh zeta} cosh^2 eta`.
pub fn deformed_single(src: &MSource) -> Result<C64> {
    let rate = src.rate()?;
    let m2 = src.mvec.square();
    if m2.norm() <= 1e-14 * src.effective_square().norm() {
        return deformed_effective(rate);
    }
    let m02 = src.m0 * src.m0;
    let failed = std::cell::Cell::new(false);
    let outer = exp_sinh(
        |d| {
            let u = 1.0 + d;
            let rho2 = m02 + m2 * (u * u);
            let rho = cx::sqrt_snap(rho2);
            let c2b = (m2 * (u * u) - m02) / rho2;
            let inner = exp_sinh(
                |eta| (-rho * eta.cosh()).exp() * (ONE + c2b * (2.0 * eta).cosh()) * 0.5,
                0.0,
                QUAD_TOL,
            );
            if !inner.converged && inner.error > QUAD_ACCEPT * inner.value.norm() {
                failed.set(true);
            }
            inner.value * 2.0
        },
        0.0,
        QUAD_TOL,
    );
    if failed.get() || (!outer.converged && outer.error > QUAD_ACCEPT * outer.value.norm()) {
        return Err(Error::Domain("deformed quadrature did not converge".into()));
    }
    Ok(outer.value * (2.0 * PI / (4.0 * PI * PI)))
}

fn deformed_effective(rho: C64) -> Result<C64> {
    let failed = std::cell::Cell::new(false);
    let outer = exp_sinh(
        |d| {
            let u = 1.0 + d;
            let inner = exp_sinh(|eta| (-rho * (u * eta.cosh())).exp() * eta.cosh().powi(2), 0.0, QUAD_TOL);
            if !inner.converged && inner.error > QUAD_ACCEPT * inner.value.norm() {
                failed.set(true);
            }
            inner.value * 2.0
        },
        0.0,
        QUAD_TOL,
    );
    if failed.get() || (!outer.converged && outer.error > QUAD_ACCEPT * outer.value.norm()) {
        return Err(Error::Domain("deformed quadrature did not converge".into()));
    }
    Ok(outer.value * (2.0 * PI / (4.0 * PI * PI)))
}

/// SU(2) single-triangle amplitude by contour-deformed quadrature.
pub fn n0_deformed_quadrature(src: &[MSource; 2]) -> Result<C64> {
    Ok(deformed_single(&src[0])? * deformed_single(&src[1])?)
}

/// Causal character of a single-triangle area vector: spacelike triangles
/// have `+-v^2 = -|v|^2`, timelike ones `+|v|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaKind {
    Spacelike,
    Timelike,
}

impl AreaKind {
    pub fn squares(self, v: f64) -> [C64; 2] {
        let q = match self {
            AreaKind::Spacelike => -v * v,
            AreaKind::Timelike => v * v,
        };
        [cx::re(q), cx::re(q)]
    }
}

/// One point of a suppression curve: quadrature value and closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuppressionRow {
    pub v2: f64,
    pub n0: C64,
    pub closed: C64,
    pub rel_err: f64,
}

pub const SLOPE_RANGE: (f64, f64) = (5.0, 20.0);

/// Closed form of the chosen representation.
pub fn n0_closed(rep: Rep, v2: [C64; 2], gamma: Gamma) -> Result<C64> {
    match rep {
        Rep::Su2 => n0_su2_closed(v2, gamma),
        Rep::So3 => n0_so3_closed(v2, gamma),
    }
}

/// Independent quadrature route of the chosen representation.
pub fn n0_quadrature(rep: Rep, v2: [C64; 2], gamma: Gamma) -> Result<C64> {
    match rep {
        Rep::Su2 => n0_deformed_quadrature(&sources_from_squares(v2, gamma)),
        Rep::So3 => n0_so3_radial(v2, gamma),
    }
}

/// `points` rows with `|v|` evenly spaced over `range`; `v2` is `+v.+v`.
pub fn suppression_curve(
    rep: Rep,
    kind: AreaKind,
    gamma: Gamma,
    range: (f64, f64),
    points: usize,
) -> Result<Vec<SuppressionRow>> {
    if !(range.0 > 0.0 && range.1 > range.0) {
        return Err(Error::Validation(format!("invalid |v| range {range:?}")));
    }
    linspace(range.0, range.1, points)
        .into_par_iter()
        .map(|v| {
            let v2 = kind.squares(v);
            let closed = n0_closed(rep, v2, gamma)?;
            let n0 = n0_quadrature(rep, v2, gamma)?;
            Ok(SuppressionRow { v2: v2[0].re, n0, closed, rel_err: (n0 - closed).norm() / closed.norm() })
        })
        .collect()
}

/// Exponential rate of `|N0|` in `|v|` from a fit `c + s |v| + p ln |v|`
/// of `ln |N0|` over `range`.
pub fn suppression_slope(rep: Rep, kind: AreaKind, gamma: Gamma, range: (f64, f64)) -> Result<f64> {
    let x = linspace(range.0, range.1, 31);
    let y = x
        .iter()
        .map(|&v| Ok(n0_closed(rep, kind.squares(v), gamma)?.norm().ln()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(fit_exp_power(&x, &y)?.slope)
}

/// Log-slope of the model integral over `a in range`, fitted as
/// `c + s a + p ln a`.
pub fn model_integral_slope(range: (f64, f64)) -> Result<f64> {
    let x = linspace(range.0, range.1, 31);
    let y = x.iter().map(|&a| Ok(model_integral(a)?.ln())).collect::<Result<Vec<f64>>>()?;
    Ok(fit_exp_power(&x, &y)?.slope)
}

/// `(64 pi)^2 g^6 / (1 + g^2)^3`.
pub fn linearized_delta_prefactor(gamma: f64) -> Result<f64> {
    if gamma == 0.0 || gamma.is_nan() {
        return Err(Error::Validation("gamma must be nonzero".into()));
    }
    if gamma.is_infinite() {
        return Ok((64.0 * PI).powi(2));
    }
    let g2 = gamma * gamma;
    Ok((64.0 * PI).powi(2) * g2 * g2 * g2 / (1.0 + g2).powi(3))
}

/// Mollified closure delta at regulator width `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifiedDelta {
    pub eps: f64,
    /// Total mass of the three-component kernel, normalized by `(16 pi^2)^2`.
    pub mass: f64,
    pub prefactor: f64,
    /// `mass / prefactor`.
    pub ratio: f64,
    /// Root-mean-square spread of one component of the kernel in the closure
    /// argument.
    pub width: f64,
}

/// Per chirality and component, the kernel
/// `K(a, b) = 2 int e^{(i/2) Re[(1 + i/g)(a + i b)(x + i y)] - eps (x^2 + y^2)} dx dy`
/// is a Gaussian in the closure argument `a + i b`. Its mass over
/// `2 da db`, cubed and divided by `(16 pi^2)^2`, is compared with the
/// linearized prefactor.
pub fn mollified_delta(gamma: f64, eps: f64) -> Result<MollifiedDelta> {
    let prefactor = linearized_delta_prefactor(gamma)?;
    if !(eps > 0.0) {
        return Err(Error::Validation(format!("regulator width must be positive, got {eps}")));
    }
    let ig = 1.0 / gamma;
    let lx = 12.0 / eps.sqrt();
    let one_d = |k: f64| -> C64 {
        let panels = ((lx * k.abs() / PI).ceil() as usize).max(24);
        gauss_legendre(|x| C64::new(-eps * x * x, 0.5 * k * x).exp(), -lx, lx, panels)
    };
    let la = 40.0 * eps.sqrt();
    let n = 256usize;
    let h = 2.0 * la / n as f64;
    let grid: Vec<f64> = (0..n).map(|k| -la + (k as f64 + 0.5) * h).collect();
    let mut mass = ZERO;
    let mut second = 0.0;
    let mut total_abs = 0.0;
    for &a in &grid {
        for &b in &grid {
            let p = a - b * ig;
            let q = b + a * ig;
            let k = one_d(p) * one_d(-q) * 2.0;
            mass += k * 2.0 * h * h;
            second += k.norm() * (a * a + b * b) * h * h;
            total_abs += k.norm() * h * h;
        }
    }
    let mass = (mass * mass * mass / (16.0 * PI * PI).powi(2)).re;
    Ok(MollifiedDelta { eps, mass, prefactor, ratio: mass / prefactor, width: (second / total_abs).sqrt() })
}

/// Monte-Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: C64,
    /// Sample standard deviation over `sqrt(n)`.
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub warning: Option<String>,
}

/// Area vectors `v_1, v_2, v_3` and `v_4` of the degenerate configuration
/// (one triangle area zero, `v_1 = v_01 = -v_41`), plus chirality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateConfig {
    pub v: [ChiralVec; 4],
}

impl DegenerateConfig {
    /// `v_alpha = i t e_alpha`, `v_4 = v_1 + v_2 + v_3`.
    pub fn cube(t: f64) -> Self {
        let v: [ChiralVec; 3] = std::array::from_fn(|k| ChiralVec::basis(k) * C64::new(0.0, t));
        DegenerateConfig { v: [v[0], v[1], v[2], v[0] + v[1] + v[2]] }
    }

    /// `cube(t)` with `v_4` moved perpendicular to the closure sum by
    /// `fraction` of its length.
    pub fn closure_violated(t: f64, fraction: f64) -> Self {
        let mut c = Self::cube(t);
        let perp = ChiralVec::real(1.0, -1.0, 0.0) * (1.0 / 2f64.sqrt());
        c.v[3] += perp * C64::new(0.0, fraction * 3f64.sqrt() * t);
        c
    }

    /// Closure defect `|v_4 - v_1 - v_2 - v_3|`.
    pub fn closure_defect(&self) -> f64 {
        (self.v[3] - self.v[0] - self.v[1] - self.v[2]).norm()
    }
}

/// Monte-Carlo controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: u64,
    pub seed: u64,
    /// Azimuthal grid per triangle; the kernel is averaged over all grid
    /// combinations.
    pub chi_grid: usize,
    /// Relative standard error above which a warning is attached.
    pub rel_tol: Option<f64>,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { samples: 1_000_000, seed: 1, chi_grid: 4, rel_tol: Some(0.05) }
    }
}

const CHUNK: u64 = 4096;
const ETA_BINS: usize = 4096;
const ETA_NORMAL_WEIGHT: f64 = 0.5;
const ETA_NORMAL_SD: f64 = 0.7;
const U_WIDE_WEIGHT: f64 = 0.5;
const U_WIDE_BETA: f64 = 0.3;

/// Proposal for `eta` with density `e^{-a cosh eta} cosh eta / (2 K1(a))`:
/// a fine histogram of the target mixed with a normal.
struct EtaSampler {
    a: f64,
    log_norm: f64,
    lo: f64,
    width: f64,
    cdf: Vec<f64>,
    dens: Vec<f64>,
}

impl EtaSampler {
    fn new(a: f64) -> Self {
        let (_, k1) = bessel_k01_fast(cx::re(a));
        let log_norm = (2.0 * k1.re).ln();
        let l = (750.0 / a).max(2.0).acosh();
        let width = 2.0 * l / ETA_BINS as f64;
        let lo = -l;
        let mut w: Vec<f64> = (0..ETA_BINS)
            .map(|k| {
                let e: f64 = lo + (k as f64 + 0.5) * width;
                (-a * e.cosh() + e.cosh().ln() - log_norm).exp()
            })
            .collect();
        let floor = w.iter().cloned().fold(0.0, f64::max) * 1e-12;
        w.iter_mut().for_each(|x| *x = x.max(floor));
        let total: f64 = w.iter().sum();
        let mut acc = 0.0;
        let cdf = w
            .iter()
            .map(|x| {
                acc += x / total;
                acc
            })
            .collect();
        let dens = w.iter().map(|x| x / (total * width)).collect();
        EtaSampler { a, log_norm, lo, width, cdf, dens }
    }

    fn target(&self, e: f64) -> f64 {
        (-self.a * e.cosh() + e.cosh().ln() - self.log_norm).exp()
    }

    fn histogram_density(&self, e: f64) -> f64 {
        let k = ((e - self.lo) / self.width).floor();
        if k < 0.0 || k >= ETA_BINS as f64 {
            0.0
        } else {
            self.dens[k as usize]
        }
    }

    /// Sample and importance weight `target / proposal`.
    fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let e = if rng.random::<f64>() < ETA_NORMAL_WEIGHT {
            ETA_NORMAL_SD * rng.sample::<f64, _>(StandardNormal)
        } else {
            let u: f64 = rng.random();
            let k = self.cdf.partition_point(|&c| c < u).min(ETA_BINS - 1);
            self.lo + (k as f64 + rng.random::<f64>()) * self.width
        };
        let normal = (-0.5 * (e / ETA_NORMAL_SD).powi(2)).exp() / ((2.0 * PI).sqrt() * ETA_NORMAL_SD);
        let q = ETA_NORMAL_WEIGHT * normal + (1.0 - ETA_NORMAL_WEIGHT) * self.histogram_density(e);
        (e, self.target(e) / q)
    }
}

/// Per-triangle data of the degenerate sampler.
struct Leg {
    v: ChiralVec,
    rate: C64,
    n0: ChiralVec,
    e1: ChiralVec,
    e2: ChiralVec,
    v2abs: f64,
    eta: EtaSampler,
}

fn complement(n0: &ChiralVec) -> Result<(ChiralVec, ChiralVec)> {
    let k = (0..3).min_by(|&i, &j| n0.0[i].norm().total_cmp(&n0.0[j].norm())).unwrap_or(0);
    let r = ChiralVec::basis(k);
    let e1 = r - *n0 * n0.dot(&r);
    let e1 = e1.unit()?;
    Ok((e1, n0.cross(&e1)))
}

impl Leg {
    fn new(v: ChiralVec, gamma: Gamma) -> Result<Self> {
        let k = C64::new(gamma.inverse(), -1.0);
        let rate = cx::sqrt_snap(k * k * v.square()) * 0.5;
        if rate.re <= 0.0 {
            return Err(Error::Validation(format!("area vector {:?} is not spacelike", v.0)));
        }
        let f = C64::new(1.0, gamma.inverse());
        let s = cx::sqrt_snap(-(f * f) * v.square());
        let n0 = v * (-I * f / s);
        let (e1, e2) = complement(&n0)?;
        Ok(Leg { v, rate, n0, e1, e2, v2abs: v.square().norm(), eta: EtaSampler::new(rate.re) })
    }

    /// Draw `(eta, zeta)` and the weight including the phase; returns the
    /// rotor parts `w` and `u = n cosh eta` as functions of `chi` through
    /// `(w, a, b)` with `u = a + b(cos chi e1 + sin chi e2)`.
    fn draw<R: Rng>(&self, rng: &mut R) -> (C64, ChiralVec, C64, C64) {
        let a = self.rate.re;
        let (eta, w_eta) = self.eta.sample(rng);
        let ch = eta.cosh();
        let rb = a * ch;
        let rn = rb.max(U_WIDE_BETA * (1.0 + (2.0 * eta).sinh().powi(2)) * self.v2abs);
        let d: f64 = if rng.random::<f64>() < U_WIDE_WEIGHT {
            Exp::new(rn).map(|x| x.sample(rng)).unwrap_or(0.0)
        } else {
            Exp::new(rb).map(|x| x.sample(rng)).unwrap_or(0.0)
        };
        let w_u = 1.0 / (U_WIDE_WEIGHT * (rn / rb) * (-(rn - rb) * d).exp() + (1.0 - U_WIDE_WEIGHT));
        let u = 1.0 + d;
        let sz = (d * (2.0 + d)).sqrt();
        let phase = C64::new(0.0, -self.rate.im * ch * u).exp();
        let w = C64::new(0.0, -eta.sinh());
        (w, self.n0 * (u * ch), C64::new(0.0, sz * ch), phase * (w_eta * w_u))
    }

    fn rotated(&self, w: C64, base: &ChiralVec, side: C64, chi: f64) -> ChiralVec {
        let u = *base + (self.e1 * chi.cos() + self.e2 * chi.sin()) * side;
        let uv = u.cross(&self.v);
        self.v + uv * (w * 2.0) + u.cross(&uv) * 2.0
    }
}

/// Roots of `sum_k c[k] z^k` (nonzero leading coefficient) by
/// Durand-Kerner iteration.
fn poly_roots(c: &[C64]) -> Vec<C64> {
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<C64> = c.iter().map(|x| x / lead).collect();
    let eval = |z: C64| monic.iter().rev().fold(ZERO, |acc, &a| acc * z + a);
    let radius = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..500 {
        let mut change: f64 = 0.0;
        for k in 0..n {
            let mut den = ONE;
            for j in 0..n {
                if j != k {
                    den *= roots[k] - roots[j];
                }
            }
            let step = eval(roots[k]) / den;
            roots[k] -= step;
            change = change.max(step.norm() / (1.0 + roots[k].norm()));
        }
        if change < 1e-15 {
            break;
        }
    }
    roots
}

/// Mean over `chi` of `1/f(chi)` for a trigonometric polynomial of degree 2
/// given by its values at `chi_j = 2 pi j / 5`: the sum of the residues of
/// `zeta / (zeta^2 f)` inside the unit circle.
pub fn inverse_circle_mean(f: &[C64; 5]) -> C64 {
    // coefficients of zeta^(m + 2), m = -2..=2
    let q: [C64; 5] = std::array::from_fn(|k| {
        let m = k as f64 - 2.0;
        f.iter()
            .enumerate()
            .map(|(j, v)| v * C64::from_polar(1.0, -m * 2.0 * PI * j as f64 / 5.0))
            .sum::<C64>()
            / 5.0
    });
    let big = q.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let tiny = 1e-13 * big;
    let hi = (0..5).rev().find(|&k| q[k].norm() > tiny).unwrap_or(2);
    let lo = (0..5).find(|&k| q[k].norm() > tiny).unwrap_or(2);
    if hi == lo {
        // f is a single Fourier mode; only the constant one has a mean
        return if lo == 2 { ONE / q[2] } else { C64::new(f64::NAN, f64::NAN) };
    }
    // zeta / Q = zeta^(1 - lo) / P, P = sum_k q[lo + k] zeta^k
    let p = &q[lo..=hi];
    let dp = |z: C64| {
        p.iter().enumerate().skip(1).rev().fold(ZERO, |acc, (k, &a)| acc * z + a * k as f64)
    };
    let mut total = ZERO;
    for r in poly_roots(p) {
        if r.norm() < 1.0 {
            total += r.powi(1 - lo as i32) / dp(r);
        }
    }
    if lo >= 2 {
        // residue at 0: coefficient of zeta^(lo - 2) in 1/P
        let mut inv = vec![ZERO; lo - 1];
        inv[0] = ONE / p[0];
        for k in 1..lo - 1 {
            let mut acc = ZERO;
            for j in 1..=k.min(p.len() - 1) {
                acc += p[j] * inv[k - j];
            }
            inv[k] = -acc / p[0];
        }
        total += inv[lo - 2];
    }
    total
}

/// Kernel `K1(z)/(pi z)`, `z = sqrt(k2 v~^2)/2`, minus its pole
/// `4 / (pi k2 v~^2)`.
fn degenerate_kernel_regular(vt: &ChiralVec, k2: C64) -> C64 {
    let z = cx::sqrt_snap(k2 * vt.square()) * 0.5;
    bessel_k1_regular(z) / PI
}

/// Plus-chirality amplitude of the degenerate 4-simplex: importance-sampled
/// average over `(eta, zeta, chi)` of the three independent curvatures of
/// the kernel `K1(z)/(pi z)`, `z = sqrt((1/g - i)^2 v~^2)/2`,
/// `v~ = v_4 - R_1 v_1 - R_2 v_2 - R_3 v_3`, `R = -i sinh eta + Sigma.n cosh eta`.
/// The minus chirality is the complex conjugate for real geometry. The pole
/// `4 / (pi k2 v~^2)` of the kernel is averaged over the third azimuth
/// exactly; only the logarithmic remainder is sampled on the grid.
pub fn n_degenerate_mc(cfg: &DegenerateConfig, gamma: Gamma, opts: &McOptions) -> Result<MCEstimate> {
    if opts.samples < 2 {
        return Err(Error::Validation("need at least 2 samples".into()));
    }
    if opts.chi_grid == 0 {
        return Err(Error::Validation("azimuthal grid must be positive".into()));
    }
    let legs: Vec<Leg> = cfg.v[..3].iter().map(|v| Leg::new(*v, gamma)).collect::<Result<_>>()?;
    let z_norm: C64 = legs
        .iter()
        .map(|l| {
            let a = l.rate.re;
            let (_, k1) = bessel_k01_fast(cx::re(a));
            k1 / (PI * a)
        })
        .product();
    let k = C64::new(gamma.inverse(), -1.0);
    let k2 = k * k;
    let m = opts.chi_grid;
    let inv_combos = 1.0 / (m * m) as f64;
    let pole = cx::re(4.0 / PI) / k2;
    let chunks = opts.samples.div_ceil(CHUNK);
    let partial: Vec<(C64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(chunk);
            let count = CHUNK.min(opts.samples - chunk * CHUNK);
            let mut sum = ZERO;
            let mut sumsq = 0.0;
            let mut grids = vec![[ChiralVec::ZERO; 3]; m];
            let mut exact = [ChiralVec::ZERO; 5];
            for _ in 0..count {
                let mut weight = ONE;
                for (a, leg) in legs.iter().enumerate() {
                    let (w, base, side, wt) = leg.draw(&mut rng);
                    weight *= wt;
                    let off: f64 = rng.random::<f64>() * 2.0 * PI / m as f64;
                    for (j, g) in grids.iter_mut().enumerate() {
                        g[a] = leg.rotated(w, &base, side, off + 2.0 * PI * j as f64 / m as f64);
                    }
                    if a == 2 {
                        for (j, e) in exact.iter_mut().enumerate() {
                            *e = leg.rotated(w, &base, side, 2.0 * PI * j as f64 / 5.0);
                        }
                    }
                }
                let mut acc = ZERO;
                for g1 in &grids {
                    let t1 = cfg.v[3] - g1[0];
                    for g2 in &grids {
                        let t2 = t1 - g2[1];
                        let f: [C64; 5] = std::array::from_fn(|j| (t2 - exact[j]).square());
                        let mut reg = ZERO;
                        for g3 in &grids {
                            reg += degenerate_kernel_regular(&(t2 - g3[2]), k2);
                        }
                        acc += pole * inverse_circle_mean(&f) + reg / m as f64;
                    }
                }
                let x = weight * acc * inv_combos;
                sum += x;
                sumsq += x.norm_sqr();
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = partial.iter().fold((ZERO, 0.0), |(s, q), (a, b)| (s + a, q + b));
    let n = opts.samples as f64;
    let mean = sum / n;
    let var = ((sumsq / n - mean.norm_sqr()) * n / (n - 1.0)).max(0.0);
    let stderr = (var / n).sqrt() * z_norm.norm();
    let mean = mean * z_norm;
    if !mean.re.is_finite() || !mean.im.is_finite() {
        return Err(Error::Domain("Monte-Carlo mean is not finite".into()));
    }
    let warning = opts.rel_tol.and_then(|tol| {
        (stderr > tol * mean.norm())
            .then(|| format!("relative standard error {:.3} exceeds {tol}", stderr / mean.norm()))
    });
    Ok(MCEstimate { mean, stderr, n_samples: opts.samples, seed: opts.seed, warning })
}

/// Two sampling routes for a test integrand of four curvatures: independent
/// Haar connections `Omega_0..Omega_4` with `R_a = Omega_0^-1 Omega_a`, or
/// Haar curvatures drawn directly. Returns `(mean, stderr)` for each route.
pub fn haar_two_routes(samples: u64, seed: u64) -> [(f64, f64); 2] {
    let f = |r: &[ChiralRotor; 4]| {
        let w: [f64; 4] = std::array::from_fn(|k| r[k].w.re);
        (0.5 + w[0] * w[0]) * (0.5 + w[1] * w[1]) * (0.5 + w[2] * w[2]) * (0.5 + w[3] * w[3])
            + w[0] * w[1]
            + r[2].u.0[0].re * r[3].u.0[0].re
    };
    let stats = |xs: Vec<f64>| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..samples)
        .map(|_| {
            let om: [ChiralRotor; 5] = std::array::from_fn(|_| sample_haar(&mut rng));
            let inv = om[0].inverse();
            f(&std::array::from_fn(|k| compose(&inv, &om[k + 1])))
        })
        .collect();
    rng.set_stream(1);
    let b: Vec<f64> = (0..samples)
        .map(|_| f(&std::array::from_fn(|_| sample_haar(&mut rng))))
        .collect();
    [stats(a), stats(b)]
}

#[cfg(test)]
mod tests {
    use super::*;

    const K1_1: f64 = 0.601_907_230_197_234_6;
    const K0_1: f64 = 0.421_024_438_240_708_3;

    #[test]
    fn bessel_values() {
        assert!((bessel_k1(cx::re(1.0)).unwrap().re - K1_1).abs() < 1e-12);
        assert!((bessel_k0(cx::re(1.0)).unwrap().re - K0_1).abs() < 1e-12);
        let (k0, k1) = bessel_k01_fast(cx::re(1.0));
        assert!((k0.re - K0_1).abs() < 1e-14 && (k1.re - K1_1).abs() < 1e-14);
        for z in [C64::new(0.3, 0.2), C64::new(1.9, -0.5), C64::new(2.5, 1.0), C64::new(7.0, -3.0), C64::new(0.5, 3.0), C64::new(3.4, 0.5), C64::new(17.0, -3.0), C64::new(19.0, 2.0), C64::new(30.0, -10.0)] {
            let (k0, k1) = bessel_k01_fast(z);
            let q0 = bessel_k0(z).unwrap();
            let q1 = bessel_k1(z).unwrap();
            assert!((k0 - q0).norm() < 1e-10 * q0.norm(), "{z} {k0} {q0}");
            assert!((k1 - q1).norm() < 1e-10 * q1.norm(), "{z} {k1} {q1}");
        }
        let big = bessel_k1(cx::re(20.0)).unwrap().re / ((PI / 40.0).sqrt() * (-20.0f64).exp());
        assert!((big - 1.0).abs() < 0.05);
        assert!(bessel_k1(cx::re(-1.0)).is_err());
        assert!(bessel_k0(ZERO).is_err());
    }

    #[test]
    fn ki1_derivative_is_minus_k0() {
        let l = 1.3;
        let h = 1e-4;
        let d = (bessel_ki1(cx::re(l + h)).unwrap() - bessel_ki1(cx::re(l - h)).unwrap()) / (2.0 * h);
        assert!((d + bessel_k0(cx::re(l)).unwrap()).norm() < 1e-6);
    }

    #[test]
    fn model_integral_matches_k0() {
        for a in [1.0, 5.0, 10.0] {
            let m = model_integral(a).unwrap();
            assert!((m - 2.0 * bessel_k0(cx::re(a)).unwrap().re).abs() < 1e-8 * m);
        }
        assert!((model_integral(1.0).unwrap() - 2.0 * K0_1).abs() < 1e-12);
        for a in [1.0, 2.0] {
            let c = model_integral_cesaro(a, 2000.0).unwrap();
            let m = model_integral(a).unwrap();
            assert!((c - m).abs() < 0.01 * m, "{a} {c} {m}");
        }
    }

    #[test]
    fn deformed_quadrature_matches_closed_form() {
        let g = Gamma::new(1.0).unwrap();
        let v2 = [cx::re(-4.0), cx::re(-4.0)];
        let q = n0_deformed_quadrature(&sources_from_squares(v2, g)).unwrap();
        let c = n0_su2_closed(v2, g).unwrap();
        assert!((q - c).norm() < 1e-6 * c.norm(), "{q} {c}");
        let src = MSource { m0: cx::re(0.7), mvec: ChiralVec::real(1.3, 0.0, 0.0) };
        let single = deformed_single(&src).unwrap();
        assert!((single.re - 0.061_863_095_7).abs() < 1e-9, "{single}");
        let pure = MSource { m0: ONE, mvec: ChiralVec::ZERO };
        assert!((deformed_single(&pure).unwrap().re - K1_1 / PI).abs() < 1e-10);
        let with_scalar = sources_from_squares(v2, g).map(|s| s.with_scalar(C64::new(0.7, 0.0)));
        let q = n0_deformed_quadrature(&with_scalar).unwrap();
        let c = n0_su2_from_sources(&with_scalar).unwrap();
        assert!((q - c).norm() < 1e-6 * c.norm(), "{q} {c}");
    }

    #[test]
    fn so3_routes_agree() {
        let g = Gamma::new(2.0).unwrap();
        let v2 = [C64::new(9.0, 0.0), C64::new(9.0, 0.0)];
        let a = n0_so3_closed(v2, g).unwrap();
        let b = n0_so3_radial(v2, g).unwrap();
        assert!((a - b).norm() < 1e-9 * a.norm());
    }

    #[test]
    fn prefactor() {
        assert!((linearized_delta_prefactor(1.0).unwrap() - 512.0 * PI * PI).abs() < 1e-12 * 5053.0);
        assert!((linearized_delta_prefactor(f64::INFINITY).unwrap() - (64.0 * PI).powi(2)).abs() < 1e-9);
        assert!(linearized_delta_prefactor(0.0).is_err());
        let m = mollified_delta(1.0, 0.05).unwrap();
        assert!((m.mass - (32.0 * PI).powi(2) / 8.0).abs() < 1e-3 * m.mass, "{m:?}");
    }

    #[test]
    fn suppression_rates() {
        let g1 = Gamma::new(1.0).unwrap();
        let g2 = Gamma::new(2.0).unwrap();
        let s = suppression_slope(Rep::So3, AreaKind::Spacelike, g1, SLOPE_RANGE).unwrap();
        assert!((s + 0.5).abs() < 0.05, "{s}");
        let s = suppression_slope(Rep::So3, AreaKind::Timelike, g2, SLOPE_RANGE).unwrap();
        assert!((s + 0.25).abs() < 0.025, "{s}");
        let s = suppression_slope(Rep::Su2, AreaKind::Spacelike, g1, SLOPE_RANGE).unwrap();
        assert!((s + 1.0).abs() < 0.05, "{s}");
        let m = model_integral_slope(SLOPE_RANGE).unwrap();
        assert!((m + 1.0).abs() < 0.02, "{m}");
        let rows = suppression_curve(Rep::Su2, AreaKind::Spacelike, g1, SLOPE_RANGE, 5).unwrap();
        assert!(rows.iter().all(|r| r.rel_err < 1e-6), "{rows:?}");
    }

    #[test]
    fn infinite_gamma_argument() {
        let v = 3.0;
        let n = n0_su2_closed(AreaKind::Spacelike.squares(v), Gamma::infinite()).unwrap();
        let k = bessel_k1(cx::re(0.5 * v)).unwrap().re / (PI * 0.5 * v);
        assert!((n.re - k * k).abs() < 1e-12 && n.im.abs() < 1e-14);
    }

    #[test]
    fn circle_mean_matches_quadrature() {
        let f = |chi: f64| {
            let (c, s) = (chi.cos(), chi.sin());
            C64::new(2.0, 0.3) + C64::new(0.4, -0.2) * c + C64::new(-0.3, 0.5) * s + C64::new(0.6, 0.1) * c * c
                + C64::new(0.2, 0.2) * c * s
        };
        let vals: [C64; 5] = std::array::from_fn(|j| f(2.0 * PI * j as f64 / 5.0));
        let n = 4000;
        let brute = (0..n).map(|k| ONE / f(2.0 * PI * k as f64 / n as f64)).sum::<C64>() / n as f64;
        let exact = inverse_circle_mean(&vals);
        assert!((exact - brute).norm() < 1e-12, "{exact} {brute}");
        let flat = [cx::re(2.0); 5];
        assert!((inverse_circle_mean(&flat) - 0.5).norm() < 1e-15);
        let single: [C64; 5] = std::array::from_fn(|j| cx::re(3.0 + (2.0 * PI * j as f64 / 5.0).cos()));
        let want = 1.0 / (9.0f64 - 1.0).sqrt();
        assert!((inverse_circle_mean(&single).re - want).abs() < 1e-13);
    }

    #[test]
    fn regular_kernel_part() {
        for z in [C64::new(0.01, 0.02), C64::new(1.0, -0.5), C64::new(3.0, 2.0), C64::new(6.0, 1.0)] {
            let (_, k1) = bessel_k01_fast(z);
            let want = k1 / z - ONE / (z * z);
            assert!((bessel_k1_regular(z) - want).norm() < 1e-9 * (1.0 + want.norm()), "{z}");
        }
    }

    #[test]
    fn haar_routes_agree() {
        let [(ma, sa), (mb, sb)] = haar_two_routes(20_000, 5);
        assert!((ma - mb).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{ma} {mb}");
    }

    #[test]
    fn mc_is_deterministic_and_finite() {
        let opts = McOptions { samples: 3000, seed: 9, chi_grid: 2, rel_tol: None };
        let g = Gamma::new(1.0).unwrap();
        let a = n_degenerate_mc(&DegenerateConfig::cube(1.0), g, &opts).unwrap();
        let b = n_degenerate_mc(&DegenerateConfig::cube(1.0), g, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.mean.norm() > 0.0 && a.stderr.is_finite());
    }
}
