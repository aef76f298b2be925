//! Stationary connections of a bisimplex and their certification.
//!
//! On-shell every curvature `R_alpha` is the rotation by `2 pi - 2 alpha`
//! about the unit area vector of its triangle, up to an orientation sign per
//! triangle. The sign is found by exhaustive search, and the result is
//! checked against half the chiral Regge action and by finite differences.

use crate::action::{
    chiral_regge, combine_gamma, connection_action, connection_action_gradient, BisimplexConnections,
    Branches, ChiralFaces, Gamma, Rep, PRINCIPAL,
};
use crate::algebra::{compose, rotor_from_axis_angle, ChiralRotor, ChiralVec, Chirality};
use crate::cx::{self, ArcsinBranch, ZERO};
use crate::geometry::{EdgeVector, FaceOrientation, Simplex4, TRIANGLES};
use crate::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const SIGN_CHOICES: usize = 16;
pub const MAX_REFINE_MOVE: f64 = 1e-3;

fn signs_of(code: usize) -> [f64; 4] {
    std::array::from_fn(|a| if code >> a & 1 == 0 { 1.0 } else { -1.0 })
}

/// `R_alpha = rotor(2 pi - 2 alpha_{0 alpha}, s_alpha n_alpha)` for one chirality.
pub fn stationary_curvatures(
    s: &Simplex4,
    ch: Chirality,
    orient: &FaceOrientation,
    signs: &[f64; 4],
) -> Result<[ChiralRotor; 4]> {
    let f = ChiralFaces::new(s, ch, orient)?;
    let mut r = [ChiralRotor::IDENTITY; 4];
    for (a, ra) in r.iter_mut().enumerate() {
        let alpha = s.hyperdihedral_angle(0, a + 1)?.value;
        let n = f.v[a].unit()? * signs[a];
        *ra = rotor_from_axis_angle(cx::re(2.0 * PI) - alpha * 2.0, n)?;
    }
    Ok(r)
}

/// `Omega_0 = 1`, `Omega_alpha = R_alpha`.
pub fn connections_from_curvatures(plus: &[ChiralRotor; 4], minus: &[ChiralRotor; 4]) -> BisimplexConnections {
    let mut c = BisimplexConnections::identity();
    for a in 0..4 {
        c.set(a + 1, Chirality::Plus, plus[a]);
        c.set(a + 1, Chirality::Minus, minus[a]);
    }
    c
}

/// On-shell values of the arcsin in each term: `pi - alpha` for SU(2) and
/// `2 pi - 2 alpha` for SO(3).
pub fn onshell_targets(s: &Simplex4, rep: Rep) -> Result<[C64; 10]> {
    let angles = s.angles()?;
    Ok(angles.map(|a| match rep {
        Rep::Su2 => cx::re(PI) - a.value,
        Rep::So3 => cx::re(2.0 * PI) - a.value * 2.0,
    }))
}

/// Branches reproducing `targets` at the given connections, with the
/// largest mismatch.
pub fn branches_for(
    f: &ChiralFaces,
    c: &BisimplexConnections,
    rep: Rep,
    targets: &[C64; 10],
) -> (Branches, f64) {
    let mut b = PRINCIPAL;
    let mut worst: f64 = 0.0;
    for (n, &(i, k)) in TRIANGLES.iter().enumerate() {
        let r = c.curvature(i, k, f.chirality);
        let x = crate::action::term_argument(f, n, &r, rep);
        let (br, d) = ArcsinBranch::resolve(x, targets[n], None);
        b[n] = br;
        worst = worst.max(d);
    }
    (b, worst)
}

/// Certification thresholds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub gap_tol: f64,
    pub residual_tol: f64,
    pub step: f64,
    pub gamma: f64,
    /// Use these signs instead of searching.
    pub forced_signs: Option<[f64; 4]>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig { gap_tol: 1e-8, residual_tol: 1e-5, step: 1e-5, gamma: 1.0, forced_signs: None }
    }
}

/// A certified (or rejected) stationary point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub connections: BisimplexConnections,
    pub branches: [Branches; 2],
    pub signs: [[f64; 4]; 2],
    /// Face orientation per chirality.
    pub orientation: [FaceOrientation; 2],
    /// `max |S_chirality - P_chirality / 2|`.
    pub gap: f64,
    pub residual: f64,
    pub gauge_residual: f64,
    pub iterations: usize,
}

/// The JSON certification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyReport {
    pub simplex_id: String,
    pub rep: Rep,
    pub gap: f64,
    pub residual: f64,
    pub gauge_residual: f64,
    pub signs: [[f64; 4]; 2],
    pub iterations: usize,
    pub certified: bool,
}

struct Candidate {
    rotors: [ChiralRotor; 4],
    signs: [f64; 4],
    orientation: FaceOrientation,
    branches: Branches,
    gap: f64,
    flips: usize,
}

/// Per-face orientation making every term argument equal to `+sin(target)`
/// rather than `-sin(target)`, with the larger of the remaining mismatches.
pub fn face_orientation_for(
    s: &Simplex4,
    ch: Chirality,
    orient: &FaceOrientation,
    c: &BisimplexConnections,
    rep: Rep,
    targets: &[C64; 10],
) -> Result<(FaceOrientation, f64)> {
    let f = ChiralFaces::new(s, ch, orient)?;
    let mut out = *orient;
    let mut worst: f64 = 0.0;
    for (n, &(i, k)) in TRIANGLES.iter().enumerate() {
        let x = crate::action::term_argument(&f, n, &c.curvature(i, k, ch), rep);
        let t = targets[n].sin();
        let (same, flipped) = ((x - t).norm(), (x + t).norm());
        if flipped < same {
            out.0[n] = -out.0[n];
        }
        worst = worst.max(same.min(flipped));
    }
    Ok((out, worst))
}

fn best_candidate(
    s: &Simplex4,
    ch: Chirality,
    rep: Rep,
    orient: &FaceOrientation,
    targets: &[C64; 10],
    forced: Option<[f64; 4]>,
) -> Result<Candidate> {
    let half = chiral_regge(s, ch)? * 0.5;
    let codes: Vec<[f64; 4]> = match forced {
        Some(sg) => vec![sg],
        None => (0..SIGN_CHOICES).map(signs_of).collect(),
    };
    let mut best: Option<Candidate> = None;
    for signs in codes {
        let rotors = stationary_curvatures(s, ch, orient, &signs)?;
        let mut c = BisimplexConnections::identity();
        for a in 0..4 {
            c.set(a + 1, ch, rotors[a]);
        }
        let (orientation, _) = face_orientation_for(s, ch, orient, &c, rep, targets)?;
        let f = ChiralFaces::new(s, ch, &orientation)?;
        let (branches, _) = branches_for(&f, &c, rep, targets);
        let value = connection_action(&f, &c, rep, &branches)?;
        let gap = (value - half).norm();
        let flips = (0..10).filter(|&n| orientation.0[n] != orient.0[n]).count();
        let better = match &best {
            None => true,
            Some(b) if (gap - b.gap).abs() <= 1e-12 * (1.0 + half.norm()) => flips < b.flips,
            Some(b) => gap < b.gap,
        };
        if better {
            best = Some(Candidate { rotors, signs, orientation, branches, gap, flips });
        }
    }
    best.ok_or_else(|| Error::Certification("no sign choice evaluated".into()))
}

/// Combined action `(1 + i/g) S+ + (1 - i/g) S-`.
pub fn combined_action(
    faces: &[ChiralFaces; 2],
    c: &BisimplexConnections,
    rep: Rep,
    branches: &[Branches; 2],
    gamma: Gamma,
) -> Result<C64> {
    let p = connection_action(&faces[0], c, rep, &branches[0])?;
    let m = connection_action(&faces[1], c, rep, &branches[1])?;
    Ok(combine_gamma(p, m, gamma))
}

fn faces_both(s: &Simplex4, orient: &[FaceOrientation; 2]) -> Result<[ChiralFaces; 2]> {
    Ok([ChiralFaces::new(s, Chirality::Plus, &orient[0])?, ChiralFaces::new(s, Chirality::Minus, &orient[1])?])
}

/// Central difference at `h` and `h / 2`, Richardson-extrapolated.
fn richardson<F: Fn(f64) -> Result<C64>>(at: &F, h: f64) -> Result<C64> {
    let d1 = (at(h)? - at(-h)?) / (2.0 * h);
    let d2 = (at(0.5 * h)? - at(-0.5 * h)?) / h;
    Ok((d2 * 4.0 - d1) / 3.0)
}

/// Largest central difference of the combined action over the four
/// independent rotors and six real directions each (three rotations, three
/// boosts).
pub fn stationarity_residual(
    s: &Simplex4,
    c: &BisimplexConnections,
    rep: Rep,
    branches: &[Branches; 2],
    orient: &[FaceOrientation; 2],
    gamma: Gamma,
    step: f64,
) -> Result<f64> {
    if !(1e-6..=1e-3).contains(&step) {
        return Err(Error::Validation(format!("finite-difference step {step} outside [1e-6, 1e-3]")));
    }
    let faces = faces_both(s, orient)?;
    let mut worst: f64 = 0.0;
    for face in 1..5 {
        for j in 0..3 {
            for boost in [false, true] {
                let at = |t: f64| -> Result<C64> {
                    let (pa, ma) = if boost {
                        (C64::new(0.0, -t), C64::new(0.0, t))
                    } else {
                        (cx::re(t), cx::re(t))
                    };
                    let mut cc = *c;
                    let e = ChiralVec::basis(j);
                    let dp = rotor_from_axis_angle(pa, e)?;
                    let dm = rotor_from_axis_angle(ma, e)?;
                    cc.set(face, Chirality::Plus, compose(&c.omega(face, Chirality::Plus), &dp));
                    cc.set(face, Chirality::Minus, compose(&c.omega(face, Chirality::Minus), &dm));
                    combined_action(&faces, &cc, rep, branches, gamma)
                };
                worst = worst.max(richardson(&at, step)?.norm());
            }
        }
    }
    Ok(worst)
}

/// Central difference of the combined action along a simultaneous left
/// multiplication of all five rotors.
pub fn gauge_residual(
    s: &Simplex4,
    c: &BisimplexConnections,
    rep: Rep,
    branches: &[Branches; 2],
    orient: &[FaceOrientation; 2],
    gamma: Gamma,
    step: f64,
) -> Result<f64> {
    let faces = faces_both(s, orient)?;
    let mut worst: f64 = 0.0;
    for j in 0..3 {
        let at = |t: f64| -> Result<C64> {
            let g = rotor_from_axis_angle(C64::new(t, 0.5 * t), ChiralVec::basis(j))?;
            let cc = c.gauge_transform(&[g, g.conj()]);
            combined_action(&faces, &cc, rep, branches, gamma)
        };
        worst = worst.max(richardson(&at, step)?.norm());
    }
    Ok(worst)
}

/// Newton iteration on the holomorphic gradient of one chirality, with the
/// Hessian from differences of the analytic gradient. Returns the refined
/// rotors and the iteration count; fails when the point moves further than
/// `max_move` from the start.
pub fn refine(
    f: &ChiralFaces,
    start: &BisimplexConnections,
    rep: Rep,
    branches: &Branches,
    tol: f64,
    max_move: f64,
) -> Result<(BisimplexConnections, usize)> {
    let ch = f.chirality;
    let shift = |c: &BisimplexConnections, t: &[C64; 12]| -> Result<BisimplexConnections> {
        let mut out = *c;
        for face in 1..5 {
            for j in 0..3 {
                let d = rotor_from_axis_angle(t[(face - 1) * 3 + j], ChiralVec::basis(j))?;
                out.set(face, ch, compose(&out.omega(face, ch), &d));
            }
        }
        Ok(out)
    };
    let grad = |c: &BisimplexConnections| -> Result<[C64; 12]> {
        let g = connection_action_gradient(f, c, rep, branches)?;
        Ok(std::array::from_fn(|n| g[n / 3 + 1][n % 3]))
    };
    let norm = |g: &[C64; 12]| g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut c = *start;
    let mut g = grad(&c)?;
    let mut moved = 0.0;
    for it in 0..200 {
        if norm(&g) < tol {
            return Ok((c, it));
        }
        let h = 1e-6;
        let mut hess = [[ZERO; 12]; 12];
        for col in 0..12 {
            let mut t = [ZERO; 12];
            t[col] = cx::re(h);
            let gp = grad(&shift(&c, &t)?)?;
            t[col] = cx::re(-h);
            let gm = grad(&shift(&c, &t)?)?;
            for row in 0..12 {
                hess[row][col] = (gp[row] - gm[row]) / (2.0 * h);
            }
        }
        let step = solve(hess, g.map(|z| -z))
            .ok_or_else(|| Error::Certification("singular Hessian during refinement".into()))?;
        let mut scale = 1.0;
        loop {
            let t = step.map(|z| z * scale);
            let trial = shift(&c, &t)?;
            let gt = grad(&trial)?;
            if norm(&gt) < norm(&g) || scale < 1e-6 {
                moved += t.iter().map(|z| z.norm()).fold(0.0, f64::max);
                c = trial;
                g = gt;
                break;
            }
            scale *= 0.5;
        }
        if moved > max_move {
            return Err(Error::Certification(format!("refinement left the candidate by {moved:e}")));
        }
    }
    Err(Error::Certification("refinement did not converge in 200 iterations".into()))
}

/// Gaussian elimination with partial pivoting.
fn solve<const N: usize>(mut a: [[C64; N]; N], mut b: [C64; N]) -> Option<[C64; N]> {
    for col in 0..N {
        let p = (col..N).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))?;
        if a[p][col].norm() < 1e-300 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..N {
            let m = a[r][col] / a[col][col];
            for k in col..N {
                let v = a[col][k];
                a[r][k] -= m * v;
            }
            let v = b[col];
            b[r] -= m * v;
        }
    }
    let mut x = [ZERO; N];
    for r in (0..N).rev() {
        let mut s = b[r];
        for k in r + 1..N {
            s -= a[r][k] * x[k];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Build and check the stationary point of a simplex.
pub fn stationary_point(s: &Simplex4, rep: Rep, cfg: &CertifyConfig) -> Result<StationaryPoint> {
    let orient = FaceOrientation::default();
    let gamma = Gamma::new(cfg.gamma)?;
    let targets = onshell_targets(s, rep)?;
    let plus = best_candidate(s, Chirality::Plus, rep, &orient, &targets, cfg.forced_signs)?;
    let minus = best_candidate(s, Chirality::Minus, rep, &orient, &targets, cfg.forced_signs)?;
    let mut c = connections_from_curvatures(&plus.rotors, &minus.rotors);
    let branches = [plus.branches, minus.branches];
    let orient = [plus.orientation, minus.orientation];
    let mut gap = plus.gap.max(minus.gap);
    let mut iterations = 0;
    let mut residual = stationarity_residual(s, &c, rep, &branches, &orient, gamma, cfg.step)?;
    if residual >= cfg.residual_tol && gap < cfg.gap_tol {
        let faces = faces_both(s, &orient)?;
        for (k, f) in faces.iter().enumerate() {
            if let Ok((refined, it)) = refine(f, &c, rep, &branches[k], cfg.residual_tol * 1e-2, MAX_REFINE_MOVE) {
                c = refined;
                iterations += it;
            }
        }
        let half = [chiral_regge(s, Chirality::Plus)? * 0.5, chiral_regge(s, Chirality::Minus)? * 0.5];
        gap = 0.0;
        for k in 0..2 {
            gap = gap.max((connection_action(&faces[k], &c, rep, &branches[k])? - half[k]).norm());
        }
        residual = stationarity_residual(s, &c, rep, &branches, &orient, gamma, cfg.step)?;
    }
    let gauge_residual = gauge_residual(s, &c, rep, &branches, &orient, gamma, cfg.step)?;
    Ok(StationaryPoint {
        connections: c,
        branches,
        signs: [plus.signs, minus.signs],
        orientation: orient,
        gap,
        residual,
        gauge_residual,
        iterations,
    })
}

pub fn certify(id: &str, s: &Simplex4, rep: Rep, cfg: &CertifyConfig) -> Result<CertifyReport> {
    let p = stationary_point(s, rep, cfg)?;
    Ok(CertifyReport {
        simplex_id: id.to_string(),
        rep,
        gap: p.gap,
        residual: p.residual,
        gauge_residual: p.gauge_residual,
        signs: p.signs,
        iterations: p.iterations,
        certified: p.gap < cfg.gap_tol && p.residual < cfg.residual_tol,
    })
}

/// Multiply every edge component by `1 + amplitude * U(-1, 1)`.
pub fn perturbed_simplex(base: &Simplex4, amplitude: f64, seed: u64) -> Result<Simplex4> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = base.edges.map(|e| {
        EdgeVector(e.0.map(|z| z * (1.0 + amplitude * rng.random_range(-1.0..1.0))))
    });
    Simplex4::new(edges)
}

/// Default lapse of the skewed cubic background.
pub const DEFAULT_LAPSE: [f64; 4] = [0.2, 0.03, -0.02, 0.01];

/// The standard certification suite: the regular Euclidean simplex, flat
/// lattice simplices at three values of lambda and 20 perturbed ones.
pub fn builtin_suite() -> Result<Vec<(String, Simplex4)>> {
    let mut out = vec![("regular".to_string(), Simplex4::regular_euclidean())];
    for lam in [-1.0 / 3.0, 0.0, 0.2] {
        out.push((format!("flat(lambda={lam:.4})"), Simplex4::pseudo_cubic(lam, DEFAULT_LAPSE)?));
    }
    let base = Simplex4::pseudo_cubic(-1.0 / 3.0, DEFAULT_LAPSE)?;
    for k in 0..20 {
        out.push((format!("perturbed#{k}"), perturbed_simplex(&base, 0.05, 1000 + k)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_simplex_certifies() {
        let s = Simplex4::regular_euclidean();
        for rep in [Rep::Su2, Rep::So3] {
            let r = certify("regular", &s, rep, &CertifyConfig::default()).unwrap();
            assert!(r.certified, "{r:?}");
            assert!(r.gauge_residual < 1e-9);
        }
        let r = stationary_curvatures(&s, Chirality::Plus, &FaceOrientation::default(), &[1.0; 4]).unwrap();
        let phi = 2.0 * PI - 2.0 * (0.25f64).acos();
        assert!((r[0].w - (phi / 2.0).cos()).norm() < 1e-12);
    }

    #[test]
    fn flat_lattice_simplices_certify() {
        for lam in [-1.0 / 3.0, 0.0, 0.2] {
            let s = Simplex4::pseudo_cubic(lam, DEFAULT_LAPSE).unwrap();
            for rep in [Rep::Su2, Rep::So3] {
                let r = certify("flat", &s, rep, &CertifyConfig::default()).unwrap();
                assert!(r.certified, "{lam} {r:?}");
            }
        }
    }

    #[test]
    fn random_connections_are_not_stationary() {
        let s = Simplex4::pseudo_cubic(-1.0 / 3.0, DEFAULT_LAPSE).unwrap();
        let mut c = BisimplexConnections::identity();
        for a in 1..5 {
            let r = rotor_from_axis_angle(cx::re(0.3 * a as f64), ChiralVec::real(0.6, 0.0, 0.8)).unwrap();
            c.set(a, Chirality::Plus, r);
            c.set(a, Chirality::Minus, r.conj());
        }
        let g = Gamma::new(1.0).unwrap();
        let o = FaceOrientation::default();
        let res = stationarity_residual(&s, &c, Rep::Su2, &[PRINCIPAL; 2], &[o, o], g, 1e-5).unwrap();
        assert!(res > 1e-3);
        assert!(gauge_residual(&s, &c, Rep::Su2, &[PRINCIPAL; 2], &[o, o], g, 1e-5).unwrap() < 1e-9);
    }

    #[test]
    fn wrong_signs_fail() {
        let s = Simplex4::regular_euclidean();
        let cfg = CertifyConfig { forced_signs: Some([-1.0, 1.0, 1.0, 1.0]), ..Default::default() };
        let r = certify("regular", &s, Rep::Su2, &cfg).unwrap();
        assert!(!r.certified);
    }

    #[test]
    fn curvatures_round_trip() {
        let s = Simplex4::regular_euclidean();
        let o = FaceOrientation::default();
        let p = stationary_curvatures(&s, Chirality::Plus, &o, &[1.0; 4]).unwrap();
        let m = stationary_curvatures(&s, Chirality::Minus, &o, &[1.0; 4]).unwrap();
        let c = connections_from_curvatures(&p, &m);
        for a in 0..4 {
            assert!(c.r_alpha(a + 1, Chirality::Plus).distance(&p[a]) < 1e-15);
        }
        assert!(crate::action::bianchi_check(&c) < 1e-13);
    }
}
