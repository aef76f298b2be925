//! Chiral rotation algebra.
//!
//! A chiral rotor is stored as `(w, u)` and stands for `w + u . Sigma`, where
//! the three generators of one chirality multiply like quaternion units.
//! Products, inverses and the complex-orthogonal adjoint action on chiral
//! 3-vectors follow from that.

use crate::cx::{self, I, ONE, ZERO};
use crate::{Error, Result, C64};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

pub type M4 = [[C64; 4]; 4];
pub type M3 = [[C64; 3]; 3];

/// Minkowski metric diagonal, signature (-,+,+,+).
pub const METRIC: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

pub fn eps3(i: usize, j: usize, k: usize) -> f64 {
    if i == j || j == k || i == k {
        return 0.0;
    }
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        _ => -1.0,
    }
}

/// Permutation sign of `(a,b,c,d)`, i.e. the upper-index symbol with
/// `eps^{0123} = 1`.
pub fn eps4(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let p = [a, b, c, d];
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] == p[j] {
                return 0.0;
            }
        }
    }
    let mut sign = 1.0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Complex 3-vector with the unconjugated bilinear product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiralVec(pub [C64; 3]);

impl ChiralVec {
    pub const ZERO: ChiralVec = ChiralVec([ZERO; 3]);

    pub fn new(x: C64, y: C64, z: C64) -> Self {
        ChiralVec([x, y, z])
    }

    pub fn real(x: f64, y: f64, z: f64) -> Self {
        ChiralVec([cx::re(x), cx::re(y), cx::re(z)])
    }

    pub fn basis(k: usize) -> Self {
        let mut v = ChiralVec::ZERO;
        v.0[k] = ONE;
        v
    }

    pub fn dot(&self, o: &ChiralVec) -> C64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    /// `v . v`, not conjugated.
    pub fn square(&self) -> C64 {
        self.dot(self)
    }

    pub fn cross(&self, o: &ChiralVec) -> ChiralVec {
        let a = &self.0;
        let b = &o.0;
        ChiralVec([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn conj(&self) -> ChiralVec {
        ChiralVec(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, s: C64) -> ChiralVec {
        ChiralVec(self.0.map(|z| z * s))
    }

    /// Hermitian length, used only for tolerances.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `v / sqrt(v.v)` with the principal root.
    pub fn unit(&self) -> Result<ChiralVec> {
        let s = cx::sqrt_snap(self.square());
        if s.norm() < 1e-300 {
            return Err(Error::Degenerate(format!("null vector {:?} has no direction", self.0)));
        }
        Ok(self.scale(ONE / s))
    }
}

impl Index<usize> for ChiralVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Add for ChiralVec {
    type Output = ChiralVec;
    fn add(self, o: ChiralVec) -> ChiralVec {
        ChiralVec([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for ChiralVec {
    fn add_assign(&mut self, o: ChiralVec) {
        *self = *self + o;
    }
}

impl Sub for ChiralVec {
    type Output = ChiralVec;
    fn sub(self, o: ChiralVec) -> ChiralVec {
        ChiralVec([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl SubAssign for ChiralVec {
    fn sub_assign(&mut self, o: ChiralVec) {
        *self = *self - o;
    }
}

impl Neg for ChiralVec {
    type Output = ChiralVec;
    fn neg(self) -> ChiralVec {
        ChiralVec(self.0.map(|z| -z))
    }
}

impl Mul<C64> for ChiralVec {
    type Output = ChiralVec;
    fn mul(self, s: C64) -> ChiralVec {
        self.scale(s)
    }
}

impl Mul<f64> for ChiralVec {
    type Output = ChiralVec;
    fn mul(self, s: f64) -> ChiralVec {
        self.scale(cx::re(s))
    }
}

/// One chirality of a Lorentz rotation, `w + u . Sigma` with `w^2 + u.u = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiralRotor {
    pub w: C64,
    pub u: ChiralVec,
}

impl ChiralRotor {
    pub const IDENTITY: ChiralRotor = ChiralRotor { w: ONE, u: ChiralVec::ZERO };

    pub fn new(w: C64, u: ChiralVec) -> Self {
        ChiralRotor { w, u }
    }

    /// `w^2 + u.u - 1`.
    pub fn norm_defect(&self) -> C64 {
        self.w * self.w + self.u.square() - ONE
    }

    pub fn inverse(&self) -> ChiralRotor {
        ChiralRotor { w: self.w, u: -self.u }
    }

    pub fn conj(&self) -> ChiralRotor {
        ChiralRotor { w: self.w.conj(), u: self.u.conj() }
    }

    pub fn neg(&self) -> ChiralRotor {
        ChiralRotor { w: -self.w, u: -self.u }
    }

    pub fn compose(&self, b: &ChiralRotor) -> ChiralRotor {
        compose(self, b)
    }

    pub fn to_adjoint(&self) -> AdjointRotor {
        to_adjoint(self)
    }

    /// Largest componentwise distance.
    pub fn distance(&self, o: &ChiralRotor) -> f64 {
        let mut d = (self.w - o.w).norm();
        for k in 0..3 {
            d = d.max((self.u[k] - o.u[k]).norm());
        }
        d
    }

    /// Components as `[w, u0, u1, u2]`.
    pub fn components(&self) -> [C64; 4] {
        [self.w, self.u[0], self.u[1], self.u[2]]
    }
}

/// `(cos(phi/2), n sin(phi/2))`; the axis must satisfy `n.n = 1`.
pub fn rotor_from_axis_angle(phi: C64, n: ChiralVec) -> Result<ChiralRotor> {
    let nn = n.square();
    if (nn - ONE).norm() > 1e-10 {
        return Err(Error::InvalidAxis(format!("{nn}")));
    }
    let h = phi * 0.5;
    Ok(ChiralRotor { w: h.cos(), u: n.scale(h.sin()) })
}

/// Rotor product, the matrix product of the two `w + u . Sigma`.
pub fn compose(a: &ChiralRotor, b: &ChiralRotor) -> ChiralRotor {
    ChiralRotor {
        w: a.w * b.w - a.u.dot(&b.u),
        u: b.u.scale(a.w) + a.u.scale(b.w) + a.u.cross(&b.u),
    }
}

/// Complex-orthogonal 3x3 matrix acting on chiral vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointRotor {
    pub m: M3,
}

impl AdjointRotor {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        AdjointRotor { m }
    }

    pub fn apply(&self, v: &ChiralVec) -> ChiralVec {
        let mut out = [ZERO; 3];
        for (a, o) in out.iter_mut().enumerate() {
            for b in 0..3 {
                *o += self.m[a][b] * v[b];
            }
        }
        ChiralVec(out)
    }

    pub fn mul(&self, o: &AdjointRotor) -> AdjointRotor {
        let mut m = [[ZERO; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    m[a][b] += self.m[a][c] * o.m[c][b];
                }
            }
        }
        AdjointRotor { m }
    }

    pub fn transpose(&self) -> AdjointRotor {
        let mut m = [[ZERO; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] = self.m[b][a];
            }
        }
        AdjointRotor { m }
    }

    pub fn det(&self) -> C64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `m^T m - 1`.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = self.transpose().mul(self);
        let mut d: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { ONE } else { ZERO };
                d = d.max((p.m[a][b] - want).norm());
            }
        }
        d
    }

    pub fn distance(&self, o: &AdjointRotor) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                d = d.max((self.m[a][b] - o.m[a][b]).norm());
            }
        }
        d
    }
}

/// Adjoint matrix `nn + (1 - nn) cos(phi) + [n]x sin(phi)`, built from
/// `(w, u)` through the double-angle relations. `[n]x v = n x v`.
pub fn to_adjoint(r: &ChiralRotor) -> AdjointRotor {
    let c = r.w * r.w - r.u.square();
    let u = &r.u;
    let mut m = [[ZERO; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let mut x = u[a] * u[b] * 2.0;
            if a == b {
                x += c;
            }
            for k in 0..3 {
                x -= r.w * u[k] * (2.0 * eps3(a, b, k));
            }
            m[a][b] = x;
        }
    }
    AdjointRotor { m }
}

/// `v . u`; for `rotor(phi, n)` this is `(v.n) sin(phi/2)`.
pub fn circ(v: &ChiralVec, r: &ChiralRotor) -> C64 {
    v.dot(&r.u)
}

/// `1/2 eps_abc v_a m_cb`; for the adjoint of `rotor(phi, n)` this is
/// `(v.n) sin(phi)`.
pub fn star(v: &ChiralVec, m: &AdjointRotor) -> C64 {
    let mut s = ZERO;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let e = eps3(a, b, c);
                if e != 0.0 {
                    s += v[a] * m.m[c][b] * e;
                }
            }
        }
    }
    s * 0.5
}

/// Chirality label, `+1` self-dual and `-1` anti-self-dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    Plus,
    Minus,
}

impl Chirality {
    pub const BOTH: [Chirality; 2] = [Chirality::Plus, Chirality::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Chirality::Plus => 1.0,
            Chirality::Minus => -1.0,
        }
    }
}

/// Lower-index generators `Sigma_{k ab} = -eps_{kab} + s i (g_{ak} g_{0b} - g_{a0} g_{kb})`
/// with spatial `k = 1..3` stored at index `k - 1`.
pub fn sigma_lower(ch: Chirality) -> [M4; 3] {
    let s = ch.sign();
    let g = |a: usize, b: usize| if a == b { METRIC[a] } else { 0.0 };
    let mut out = [[[ZERO; 4]; 4]; 3];
    for (k0, sk) in out.iter_mut().enumerate() {
        let k = k0 + 1;
        for a in 0..4 {
            for b in 0..4 {
                let e = if a > 0 && b > 0 { -eps3(k0, a - 1, b - 1) } else { 0.0 };
                let l = g(a, k) * g(0, b) - g(a, 0) * g(k, b);
                sk[a][b] = C64::new(e, s * l);
            }
        }
    }
    out
}

/// Mixed-index generators `Sigma_k^a_b`, the matrices that multiply vectors.
pub fn sigma_mixed(ch: Chirality) -> [M4; 3] {
    let mut s = sigma_lower(ch);
    for sk in s.iter_mut() {
        for (a, row) in sk.iter_mut().enumerate() {
            for x in row.iter_mut() {
                *x *= METRIC[a];
            }
        }
    }
    s
}

pub fn m4_identity() -> M4 {
    let mut m = [[ZERO; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = ONE;
    }
    m
}

pub fn m4_mul(a: &M4, b: &M4) -> M4 {
    let mut m = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

pub fn m4_max_diff(a: &M4, b: &M4) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

/// The 4x4 matrix `w + u . Sigma` of one chirality.
pub fn rotor_matrix(r: &ChiralRotor, ch: Chirality) -> M4 {
    let s = sigma_mixed(ch);
    let mut m = m4_identity();
    for row in m.iter_mut() {
        for x in row.iter_mut() {
            *x *= r.w;
        }
    }
    for (k, sk) in s.iter().enumerate() {
        for a in 0..4 {
            for b in 0..4 {
                m[a][b] += r.u[k] * sk[a][b];
            }
        }
    }
    m
}

/// Real 4x4 Lorentz matrix acting on contravariant vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzMatrix {
    pub m: [[f64; 4]; 4],
}

impl LorentzMatrix {
    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        LorentzMatrix { m }
    }

    /// Largest entry of `L^T g L - g`.
    pub fn metric_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let mut s = 0.0;
                for c in 0..4 {
                    s += self.m[c][a] * METRIC[c] * self.m[c][b];
                }
                let want = if a == b { METRIC[a] } else { 0.0 };
                d = d.max((s - want).abs());
            }
        }
        d
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        let mut det = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let e = eps4(a, b, c, d);
                        if e != 0.0 {
                            det += e * m[0][a] * m[1][b] * m[2][c] * m[3][d];
                        }
                    }
                }
            }
        }
        det
    }

    pub fn max_diff(&self, o: &LorentzMatrix) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                d = d.max((self.m[a][b] - o.m[a][b]).abs());
            }
        }
        d
    }

    /// `exp(sum_k phi_k E_k + psi_k L_k)` by scaled Taylor series, with
    /// `E_k` the rotation about axis `k` and `L_k` the boost generator
    /// `(L_k)^0_k = (L_k)^k_0 = -1`.
    pub fn exp_generator(phi: [f64; 3], psi: [f64; 3]) -> Self {
        let mut g = [[0.0; 4]; 4];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    g[i + 1][j + 1] -= eps3(k, i, j) * phi[k];
                }
            }
            g[0][k + 1] -= psi[k];
            g[k + 1][0] -= psi[k];
        }
        let norm: f64 = g.iter().flatten().map(|x| x.abs()).sum();
        let mut squarings = 0;
        let mut scale = 1.0;
        while norm * scale > 0.25 {
            scale *= 0.5;
            squarings += 1;
        }
        let mul = |a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]| {
            let mut m = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        m[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            m
        };
        let mut x = g;
        for row in x.iter_mut() {
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
        let mut term = LorentzMatrix::identity().m;
        let mut sum = term;
        for n in 1..30 {
            term = mul(&term, &x);
            for row in term.iter_mut() {
                for v in row.iter_mut() {
                    *v /= n as f64;
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            sum = mul(&sum, &sum);
        }
        LorentzMatrix { m: sum }
    }
}

/// `Lambda = (w_p + u_p . Sigma+) (w_m + u_m . Sigma-)`.
pub fn assemble(p: &ChiralRotor, m: &ChiralRotor) -> Result<LorentzMatrix> {
    let a = m4_mul(&rotor_matrix(p, Chirality::Plus), &rotor_matrix(m, Chirality::Minus));
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            if a[i][j].im.abs() > 1e-9 * (1.0 + a[i][j].re.abs()) {
                return Err(Error::Validation(format!(
                    "assembled matrix is not real (entry {i},{j} = {}); the chiralities must be conjugate",
                    a[i][j]
                )));
            }
            out[i][j] = a[i][j].re;
        }
    }
    Ok(LorentzMatrix { m: out })
}

/// Split a proper orthochronous Lorentz matrix into its two chiral rotors.
///
/// The 16 products `E_mu F_nu` of the chiral bases `{1, Sigma+_k}` and
/// `{1, Sigma-_l}` are trace-orthogonal, so the coefficients of `Lambda` in
/// that basis form the rank-one array `p_mu m_nu`.
pub fn split_lorentz(l: &LorentzMatrix) -> Result<(ChiralRotor, ChiralRotor)> {
    let defect = l.metric_defect();
    if defect > 1e-8 {
        return Err(Error::Validation(format!("not a Lorentz matrix, defect {defect:e}")));
    }
    if l.det() < 0.0 || l.m[0][0] < 1.0 - 1e-12 {
        return Err(Error::Validation("Lorentz matrix is not proper orthochronous".into()));
    }
    let mut lam = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            lam[i][j] = cx::re(l.m[i][j]);
        }
    }
    let sp = sigma_mixed(Chirality::Plus);
    let sm = sigma_mixed(Chirality::Minus);
    let basis = |s: &[M4; 3], mu: usize| -> M4 {
        if mu == 0 {
            m4_identity()
        } else {
            s[mu - 1]
        }
    };
    let mut coef = [[ZERO; 4]; 4];
    for mu in 0..4 {
        for nu in 0..4 {
            // (E_mu F_nu)^-1 = E_mu^-1 F_nu^-1 with Sigma^-1 = -Sigma
            let inv = m4_mul(&basis(&sp, mu), &basis(&sm, nu));
            let sign = if (mu > 0) ^ (nu > 0) { -1.0 } else { 1.0 };
            let prod = m4_mul(&lam, &inv);
            let tr = prod[0][0] + prod[1][1] + prod[2][2] + prod[3][3];
            coef[mu][nu] = tr * (0.25 * sign);
        }
    }
    let nu_star = (0..4)
        .max_by(|&a, &b| {
            let na: f64 = (0..4).map(|mu| coef[mu][a].norm_sqr()).sum();
            let nb: f64 = (0..4).map(|mu| coef[mu][b].norm_sqr()).sum();
            na.total_cmp(&nb)
        })
        .unwrap_or(0);
    let col = [coef[0][nu_star], coef[1][nu_star], coef[2][nu_star], coef[3][nu_star]];
    let q = col[0] * col[0] + col[1] * col[1] + col[2] * col[2] + col[3] * col[3];
    let s = cx::sqrt(q);
    let pv = col.map(|x| x / s);
    let mu_star = (0..4).max_by(|&a, &b| pv[a].norm().total_cmp(&pv[b].norm())).unwrap_or(0);
    let mv: [C64; 4] = std::array::from_fn(|nu| coef[mu_star][nu] / pv[mu_star]);
    let mut p = ChiralRotor::new(pv[0], ChiralVec([pv[1], pv[2], pv[3]]));
    let mut m = ChiralRotor::new(mv[0], ChiralVec([mv[1], mv[2], mv[3]]));
    // fix the common sign so that the minus chirality is the conjugate
    if m.distance(&p.conj()) > m.neg().distance(&p.conj()) {
        p = p.neg();
        m = m.neg();
    }
    Ok((p, m))
}

/// Normalized Haar density `sin^2(phi/2) / (4 pi^2 phi^2)` on the rotation
/// vector ball `|phi| <= 2 pi`.
pub fn haar_density(phi: &ChiralVec) -> C64 {
    let p = cx::sqrt(phi.square());
    if p.norm() < 1e-6 {
        // Taylor limit 1/(16 pi^2) (1 - p^2/12)
        return (ONE - p * p / 12.0) / (16.0 * PI * PI);
    }
    let s = (p * 0.5).sin();
    s * s / (p * p * (4.0 * PI * PI))
}

/// Total Haar mass, `int_0^{2 pi} 4 pi phi^2 rho(phi) dphi`, by quadrature.
pub fn haar_total_mass() -> f64 {
    let f = |phi: f64| {
        let d = haar_density(&ChiralVec::real(phi, 0.0, 0.0)).re;
        cx::re(4.0 * PI * phi * phi * d)
    };
    crate::quad::tanh_sinh(f, 0.0, 2.0 * PI, 1e-14).value.re
}

/// Haar-distributed rotor: a uniform point of the unit 3-sphere.
pub fn sample_haar<R: Rng + ?Sized>(rng: &mut R) -> ChiralRotor {
    loop {
        let x: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return ChiralRotor::new(
                cx::re(x[0] / n),
                ChiralVec::real(x[1] / n, x[2] / n, x[3] / n),
            );
        }
    }
}

/// Maximum deviations found by [`sigma_identities_check`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaReport {
    /// `*(Sigma+-) = -+ i Sigma+-` on upper indices.
    pub duality: f64,
    /// `Sigma_k Sigma_l = -delta_kl + eps_klm Sigma_m` for mixed indices.
    pub product: f64,
    /// `[Sigma+_k, Sigma-_l] = 0`.
    pub commutator: f64,
}

impl SigmaReport {
    pub fn max(&self) -> f64 {
        self.duality.max(self.product).max(self.commutator)
    }
}

/// Build the explicit generators and measure the three algebraic identities.
pub fn sigma_identities_check() -> SigmaReport {
    let mut duality: f64 = 0.0;
    let mut product: f64 = 0.0;
    for ch in Chirality::BOTH {
        let low = sigma_lower(ch);
        for s in &low {
            let mut up = *s;
            for a in 0..4 {
                for b in 0..4 {
                    up[a][b] *= METRIC[a] * METRIC[b];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    // (*S)^{ab} = 1/2 eps^{ab}_{cd} S^{cd}
                    let mut d = ZERO;
                    for c in 0..4 {
                        for e in 0..4 {
                            let x = eps4(a, b, c, e);
                            if x != 0.0 {
                                d += up[c][e] * (0.5 * x * METRIC[c] * METRIC[e]);
                            }
                        }
                    }
                    let want = up[a][b] * (-I * ch.sign());
                    duality = duality.max((d - want).norm());
                }
            }
        }
        let mixed = sigma_mixed(ch);
        for k in 0..3 {
            for l in 0..3 {
                let lhs = m4_mul(&mixed[k], &mixed[l]);
                let mut rhs = [[ZERO; 4]; 4];
                for a in 0..4 {
                    for b in 0..4 {
                        if k == l && a == b {
                            rhs[a][b] -= ONE;
                        }
                        for m in 0..3 {
                            rhs[a][b] += mixed[m][a][b] * eps3(k, l, m);
                        }
                    }
                }
                product = product.max(m4_max_diff(&lhs, &rhs));
            }
        }
    }
    let sp = sigma_mixed(Chirality::Plus);
    let sm = sigma_mixed(Chirality::Minus);
    let mut commutator: f64 = 0.0;
    for k in 0..3 {
        for l in 0..3 {
            let ab = m4_mul(&sp[k], &sm[l]);
            let ba = m4_mul(&sm[l], &sp[k]);
            commutator = commutator.max(m4_max_diff(&ab, &ba));
        }
    }
    SigmaReport { duality, product, commutator }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn random_rotor(rng: &mut ChaCha8Rng) -> ChiralRotor {
        let phi = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
        let n = ChiralVec::new(
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)),
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)),
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)),
        );
        rotor_from_axis_angle(phi, n.unit().unwrap()).unwrap()
    }

    #[test]
    fn axis_angle_examples() {
        let r = rotor_from_axis_angle(ONE * 0.0, ChiralVec::basis(0)).unwrap();
        assert_eq!(r, ChiralRotor::IDENTITY);
        let r = rotor_from_axis_angle(cx::re(PI), ChiralVec::basis(2)).unwrap();
        assert!(r.w.norm() < 1e-15 && close(r.u[2], ONE, 1e-15));
        let eta = 0.37;
        let n = ChiralVec::real(0.6, 0.0, 0.8);
        let r = rotor_from_axis_angle(C64::new(PI, 2.0 * eta), n).unwrap();
        assert!(close(r.w, C64::new(0.0, -eta.sinh()), 1e-14));
        assert!(close(r.u[0], cx::re(0.6 * eta.cosh()), 1e-14));
        assert!(rotor_from_axis_angle(ONE, ChiralVec::real(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn compose_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = random_rotor(&mut rng);
        assert!(compose(&r, &ChiralRotor::IDENTITY).distance(&r) < 1e-15);
        assert!(compose(&r, &r.inverse()).distance(&ChiralRotor::IDENTITY) < 1e-12);
        let q = rotor_from_axis_angle(cx::re(FRAC_PI_2), ChiralVec::basis(2)).unwrap();
        let h = rotor_from_axis_angle(cx::re(PI), ChiralVec::basis(2)).unwrap();
        assert!(compose(&q, &q).distance(&h) < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        assert!(to_adjoint(&ChiralRotor::IDENTITY).distance(&AdjointRotor::identity()) < 1e-15);
        let q = rotor_from_axis_angle(cx::re(FRAC_PI_2), ChiralVec::basis(2)).unwrap();
        let m = to_adjoint(&q);
        assert!(close(m.m[2][2], ONE, 1e-15));
        assert!(close(m.m[0][1], -m.m[1][0], 1e-15) && m.m[0][1].norm() > 0.5);
        // rotating x about z by +90 degrees gives y
        assert!(m.apply(&ChiralVec::basis(0)).distance_to(&ChiralVec::basis(1)) < 1e-15);
        let r = rotor_from_axis_angle(C64::new(PI, 0.8), ChiralVec::real(0.0, 0.6, 0.8)).unwrap();
        let a = to_adjoint(&r);
        assert!(a.orthogonality_defect() < 1e-12);
        assert!(close(a.det(), ONE, 1e-12));
        assert!(a.m.iter().flatten().any(|z| z.im.abs() > 0.1));
    }

    #[test]
    fn circ_and_star_examples() {
        let n = ChiralVec::real(0.0, 0.6, 0.8);
        let phi = cx::re(1.1);
        let r = rotor_from_axis_angle(phi, n).unwrap();
        let v = n.scale(cx::re(2.5));
        assert!(circ(&v, &ChiralRotor::IDENTITY).norm() < 1e-15);
        assert!(close(circ(&v, &r), cx::re(2.5 * (0.55f64).sin()), 1e-14));
        let perp = ChiralVec::real(1.0, 0.0, 0.0);
        assert!(circ(&perp, &r).norm() < 1e-15);
        let m = to_adjoint(&r);
        assert!(star(&v, &AdjointRotor::identity()).norm() < 1e-15);
        assert!(close(star(&v, &m), cx::re(2.5 * (1.1f64).sin()), 1e-14));
        assert!(star(&perp, &m).norm() < 1e-15);
        assert!(close(star(&v, &m), r.w * circ(&v, &r) * 2.0, 1e-14));
    }

    #[test]
    fn homomorphism_over_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let a = random_rotor(&mut rng);
            let b = random_rotor(&mut rng);
            let ab = compose(&a, &b);
            assert!(ab.norm_defect().norm() < 1e-10);
            let lhs = to_adjoint(&ab);
            let rhs = to_adjoint(&a).mul(&to_adjoint(&b));
            let scale = 1.0 + lhs.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(lhs.distance(&rhs) < 1e-10 * scale);
        }
    }

    #[test]
    fn sigma_identities_hold() {
        let r = sigma_identities_check();
        assert!(r.max() < 1e-14, "{r:?}");
    }

    #[test]
    fn split_examples() {
        let (p, m) = split_lorentz(&LorentzMatrix::identity()).unwrap();
        assert!(p.distance(&ChiralRotor::IDENTITY) < 1e-14);
        assert!(m.distance(&ChiralRotor::IDENTITY) < 1e-14);
        let psi = 0.7;
        let boost = LorentzMatrix::exp_generator([0.0; 3], [0.0, 0.0, psi]);
        let (p, m) = split_lorentz(&boost).unwrap();
        let z = ChiralVec::basis(2);
        let want_p = rotor_from_axis_angle(C64::new(0.0, -psi), z).unwrap();
        let want_m = rotor_from_axis_angle(C64::new(0.0, psi), z).unwrap();
        assert!(p.distance(&want_p) < 1e-12, "{p:?}");
        assert!(m.distance(&want_m) < 1e-12);
        let phi = 0.9;
        let rot = LorentzMatrix::exp_generator([0.0, 0.0, phi], [0.0; 3]);
        let (p, m) = split_lorentz(&rot).unwrap();
        let want = rotor_from_axis_angle(cx::re(phi), z).unwrap();
        assert!(p.distance(&want) < 1e-12 && m.distance(&want) < 1e-12);
        assert!(assemble(&p, &m).unwrap().max_diff(&rot) < 1e-12);
    }

    #[test]
    fn split_rejects_non_lorentz() {
        let mut l = LorentzMatrix::identity();
        l.m[0][1] = 0.3;
        assert!(split_lorentz(&l).is_err());
    }

    #[test]
    fn haar_examples() {
        assert!((haar_total_mass() - 1.0).abs() < 1e-10);
        let d0 = haar_density(&ChiralVec::ZERO);
        assert!((d0.re - 1.0 / (16.0 * PI * PI)).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20000;
        let mut mean = [[0.0; 3]; 3];
        for _ in 0..n {
            let a = to_adjoint(&sample_haar(&mut rng));
            for i in 0..3 {
                for j in 0..3 {
                    mean[i][j] += a.m[i][j].re / n as f64;
                }
            }
        }
        assert!(mean.iter().flatten().all(|x| x.abs() < 0.03), "{mean:?}");
    }

    trait Dist {
        fn distance_to(&self, o: &ChiralVec) -> f64;
    }
    impl Dist for ChiralVec {
        fn distance_to(&self, o: &ChiralVec) -> f64 {
            (*self - *o).norm()
        }
    }
}
