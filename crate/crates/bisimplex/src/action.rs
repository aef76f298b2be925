//! Action functionals: the length-only Regge action of a bisimplex and of a
//! lattice, the chiral connection actions in the SU(2) and SO(3) forms, the
//! gamma combination, and the branch sectors of the skewed cubic lattice.

use crate::algebra::{compose, star, to_adjoint, ChiralRotor, ChiralVec, Chirality};
use crate::cx::{self, ArcsinBranch, CutSide, ONE, ZERO};
use crate::geometry::{Angle, FaceOrientation, Simplex4, TRIANGLES};
use crate::lattice::{Lattice, SimplexData};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Representation of the connection term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Su2,
    So3,
}

impl Rep {
    pub fn name(self) -> &'static str {
        match self {
            Rep::Su2 => "su2",
            Rep::So3 => "so3",
        }
    }
}

impl std::str::FromStr for Rep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Rep> {
        match s {
            "su2" => Ok(Rep::Su2),
            "so3" => Ok(Rep::So3),
            _ => Err(Error::Config(format!("unknown representation {s:?}, expected su2 or so3"))),
        }
    }
}

/// `sum (2 pi - 2 alpha) A` over the ten triangles.
pub fn regge_bisimplex(s: &Simplex4) -> Result<C64> {
    let angles = s.angles()?;
    let areas = s.areas()?;
    check_areas(&areas)?;
    Ok(angles.iter().zip(&areas).map(|(a, &area)| (cx::re(2.0 * PI) - a.value * 2.0) * area).sum())
}

/// `sum (2 pi - 2 alpha) sqrt(v.v)` for one chirality. For a real geometry
/// both chiralities give `i` times the Regge action of the bisimplex.
pub fn chiral_regge(s: &Simplex4, ch: Chirality) -> Result<C64> {
    let angles = s.angles()?;
    let b = s.face_bivectors(&FaceOrientation::CANONICAL)?;
    Ok(angles
        .iter()
        .zip(&b)
        .map(|(a, v)| (cx::re(2.0 * PI) - a.value * 2.0) * cx::sqrt_snap(v.chiral(ch).square()))
        .sum())
}

fn check_areas(areas: &[C64]) -> Result<()> {
    if areas.iter().any(|a| a.norm() < 1e-14) {
        return Err(Error::Degenerate("a triangle has zero area".into()));
    }
    Ok(())
}

/// `sum over triangles (2 pi - sum of angles) A`.
pub fn regge_total(lat: &Lattice) -> Result<C64> {
    let data = lat.all_simplex_data()?;
    regge_total_from(lat, &data)
}

pub fn regge_total_from(lat: &Lattice, data: &[SimplexData]) -> Result<C64> {
    let mut sums = vec![ZERO; lat.n_triangles()];
    let mut areas = vec![ZERO; lat.n_triangles()];
    for (s, d) in lat.simplices.iter().zip(data) {
        check_areas(&d.areas)?;
        for n in 0..10 {
            sums[s.triangles[n]] += d.angles[n].value;
            areas[s.triangles[n]] = d.areas[n];
        }
    }
    Ok(sums.iter().zip(&areas).map(|(&s, &a)| (cx::re(2.0 * PI) - s) * a).sum())
}

/// `sum over simplices [S/2 + sum over its triangles (2 pi / N - pi) A]`,
/// with `S` the bisimplex action of the simplex.
pub fn decompose_total(lat: &Lattice) -> Result<C64> {
    let data = lat.all_simplex_data()?;
    decompose_total_from(lat, &data)
}

pub fn decompose_total_from(lat: &Lattice, data: &[SimplexData]) -> Result<C64> {
    let mut total = ZERO;
    for (s, d) in lat.simplices.iter().zip(data) {
        check_areas(&d.areas)?;
        let mut half = ZERO;
        let mut constant = ZERO;
        for n in 0..10 {
            half += (cx::re(PI) - d.angles[n].value) * d.areas[n];
            let m = lat.multiplicity[s.triangles[n]] as f64;
            constant += cx::re(2.0 * PI / m - PI) * d.areas[n];
        }
        total += half + constant;
    }
    Ok(total)
}

/// The parameter weighting the two chiral parts; infinite is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma(f64);

impl Gamma {
    pub fn new(g: f64) -> Result<Self> {
        if g == 0.0 || g.is_nan() {
            return Err(Error::Validation(format!("gamma must be nonzero, got {g}")));
        }
        Ok(Gamma(g))
    }

    pub fn infinite() -> Self {
        Gamma(f64::INFINITY)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn inverse(self) -> f64 {
        1.0 / self.0
    }
}

/// `(1 + i/gamma) plus + (1 - i/gamma) minus`.
pub fn combine_gamma(plus: C64, minus: C64, g: Gamma) -> C64 {
    let ig = C64::new(0.0, g.inverse());
    (ONE + ig) * plus + (ONE - ig) * minus
}

/// Chiral rotors `(plus, minus)` on the five 3-faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisimplexConnections {
    pub omega: [[ChiralRotor; 2]; 5],
}

fn slot(ch: Chirality) -> usize {
    match ch {
        Chirality::Plus => 0,
        Chirality::Minus => 1,
    }
}

impl BisimplexConnections {
    pub fn identity() -> Self {
        BisimplexConnections { omega: [[ChiralRotor::IDENTITY; 2]; 5] }
    }

    pub fn omega(&self, i: usize, ch: Chirality) -> ChiralRotor {
        self.omega[i][slot(ch)]
    }

    pub fn set(&mut self, i: usize, ch: Chirality, r: ChiralRotor) {
        self.omega[i][slot(ch)] = r;
    }

    /// `R_ik = Omega_i^-1 Omega_k`.
    pub fn curvature(&self, i: usize, k: usize, ch: Chirality) -> ChiralRotor {
        compose(&self.omega(i, ch).inverse(), &self.omega(k, ch))
    }

    /// `R_alpha = R_{0 alpha}`.
    pub fn r_alpha(&self, alpha: usize, ch: Chirality) -> ChiralRotor {
        self.curvature(0, alpha, ch)
    }

    /// `Omega_i -> G Omega_i` for every face.
    pub fn gauge_transform(&self, g: &[ChiralRotor; 2]) -> Self {
        let mut c = *self;
        for i in 0..5 {
            for s in 0..2 {
                c.omega[i][s] = compose(&g[s], &self.omega[i][s]);
            }
        }
        c
    }

    /// Largest unit-norm defect over all rotors.
    pub fn norm_defect(&self) -> f64 {
        self.omega.iter().flatten().map(|r| r.norm_defect().norm()).fold(0.0, f64::max)
    }
}

/// `max |R_ik R_kl - R_il|` over a table of curvatures.
pub fn bianchi_residual(table: &[[ChiralRotor; 5]; 5]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        for k in 0..5 {
            for l in 0..5 {
                let lhs = compose(&table[i][k], &table[k][l]);
                worst = worst.max(lhs.distance(&table[i][l]));
            }
        }
    }
    worst
}

pub fn curvature_table(c: &BisimplexConnections, ch: Chirality) -> [[ChiralRotor; 5]; 5] {
    std::array::from_fn(|i| std::array::from_fn(|k| c.curvature(i, k, ch)))
}

/// Bianchi residual of the curvatures derived from `c`, both chiralities.
pub fn bianchi_check(c: &BisimplexConnections) -> f64 {
    Chirality::BOTH
        .iter()
        .map(|&ch| bianchi_residual(&curvature_table(c, ch)))
        .fold(0.0, f64::max)
}

/// Oriented chiral area vectors of one chirality with their roots.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChiralFaces {
    pub chirality: Chirality,
    pub v: [ChiralVec; 10],
    /// `sqrt(v.v)`, principal.
    pub root: [C64; 10],
}

impl ChiralFaces {
    pub fn new(s: &Simplex4, ch: Chirality, orient: &FaceOrientation) -> Result<Self> {
        let b = s.face_bivectors(orient)?;
        let v = b.map(|x| x.chiral(ch));
        let root = v.map(|x| cx::sqrt_snap(x.square()));
        if root.iter().zip(&v).any(|(r, x)| r.norm() <= 1e-12 * x.norm().max(1e-300)) {
            return Err(Error::Degenerate("a triangle has a null chiral area vector".into()));
        }
        Ok(ChiralFaces { chirality: ch, v, root })
    }
}

/// Arcsin branches, one per triangle.
pub type Branches = [ArcsinBranch; 10];

pub const PRINCIPAL: Branches = [ArcsinBranch::PRINCIPAL; 10];

/// Arcsin argument of triangle `n` for curvature `r`.
pub fn term_argument(f: &ChiralFaces, n: usize, r: &ChiralRotor, rep: Rep) -> C64 {
    match rep {
        Rep::Su2 => f.v[n].dot(&r.u) / f.root[n],
        Rep::So3 => star(&f.v[n], &to_adjoint(r)) / f.root[n],
    }
}

fn term_weight(f: &ChiralFaces, n: usize, rep: Rep) -> C64 {
    match rep {
        Rep::Su2 => f.root[n],
        Rep::So3 => f.root[n] * 0.5,
    }
}

/// Connection action of one chirality:
/// `sum sqrt(v.v) Arcsin(v o R / sqrt(v.v))` for SU(2) and
/// `sum 1/2 sqrt(v.v) Arcsin(v * R / sqrt(v.v))` for SO(3), with
/// `R = Omega_i^-1 Omega_k` on triangle `(i, k)`.
pub fn connection_action(
    f: &ChiralFaces,
    c: &BisimplexConnections,
    rep: Rep,
    branches: &Branches,
) -> Result<C64> {
    let mut total = ZERO;
    for (n, &(i, k)) in TRIANGLES.iter().enumerate() {
        let r = c.curvature(i, k, f.chirality);
        let x = term_argument(f, n, &r, rep);
        total += term_weight(f, n, rep) * branches[n].eval(x)?;
    }
    Ok(total)
}

pub fn connection_action_su2(
    s: &Simplex4,
    c: &BisimplexConnections,
    ch: Chirality,
    orient: &FaceOrientation,
    branches: &Branches,
) -> Result<C64> {
    connection_action(&ChiralFaces::new(s, ch, orient)?, c, Rep::Su2, branches)
}

pub fn connection_action_so3(
    s: &Simplex4,
    c: &BisimplexConnections,
    ch: Chirality,
    orient: &FaceOrientation,
    branches: &Branches,
) -> Result<C64> {
    connection_action(&ChiralFaces::new(s, ch, orient)?, c, Rep::So3, branches)
}

/// Derivatives of [`connection_action`] along `Omega_f -> Omega_f rotor(t, e_j)`
/// at `t = 0`, indexed `[f][j]`.
pub fn connection_action_gradient(
    f: &ChiralFaces,
    c: &BisimplexConnections,
    rep: Rep,
    branches: &Branches,
) -> Result<[[C64; 3]; 5]> {
    let mut g = [[ZERO; 3]; 5];
    for (n, &(i, k)) in TRIANGLES.iter().enumerate() {
        let r = c.curvature(i, k, f.chirality);
        let x = term_argument(f, n, &r, rep);
        let bp = branches[n].derivative(x);
        let v = &f.v[n];
        for j in 0..3 {
            let half = ChiralRotor::new(ZERO, ChiralVec::basis(j) * 0.5);
            let drs = [(k, compose(&r, &half)), (i, compose(&half.inverse(), &r))];
            for (face, dr) in drs {
                let d = match rep {
                    Rep::Su2 => bp * v.dot(&dr.u),
                    Rep::So3 => bp * (dr.w * v.dot(&r.u) + r.w * v.dot(&dr.u)),
                };
                g[face][j] += d;
            }
        }
    }
    Ok(g)
}

/// One evaluated simplex, the JSON record of the action.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionRecord {
    pub simplex_id: usize,
    pub plus: C64,
    pub minus: C64,
    pub total: C64,
    pub sector: Option<BranchSector>,
}

/// Type of a hyperdihedral angle on the skewed cubic lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AngleKind {
    /// Real, inside `(pi/4, 3 pi/4)`.
    Real,
    /// `pi/2 + i eta`.
    HalfPiPlusIEta,
    /// `i eta`.
    IEta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleSector {
    pub kind: AngleKind,
    /// `sgn Re(alpha - pi/2)` read after the time rotation.
    pub sign: f64,
    /// Side of the arcsin cut for the SU(2) argument `sin(pi - alpha)`.
    pub side: CutSide,
    pub multiplicity: usize,
    pub angle: C64,
    /// The angle rebuilt from `sin(pi - alpha)`.
    pub su2_reconstructed: C64,
    /// The angle rebuilt from `sin(2 pi - 2 alpha)`.
    pub so3_reconstructed: C64,
    /// `(2 pi / N - alpha) / 2 + 1/4 asin sin(2 pi - 2 alpha)`, with the
    /// opposite sign of the arcsin for the `i eta` type.
    pub constant: C64,
    /// `pi/N - pi/4`, or `pi/N` for the `i eta` type.
    pub expected_constant: f64,
    /// Branch giving `pi - alpha` from `sin(pi - alpha)`.
    pub su2_branch: ArcsinBranch,
    /// Branch giving `2 pi - 2 alpha` from `sin(2 pi - 2 alpha)`.
    pub so3_branch: ArcsinBranch,
}

/// Branch data of one simplex near the flat skewed cubic background.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSector {
    pub triangles: Vec<TriangleSector>,
    /// Sum of the per-triangle constants.
    pub simplex_constant: C64,
    pub expected_simplex_constant: f64,
}

impl BranchSector {
    pub fn su2_branches(&self) -> Branches {
        std::array::from_fn(|n| self.triangles[n].su2_branch)
    }

    pub fn so3_branches(&self) -> Branches {
        std::array::from_fn(|n| self.triangles[n].so3_branch)
    }

    pub fn max_reconstruction_error(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| (t.su2_reconstructed - t.angle).norm().max((t.so3_reconstructed - t.angle).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_constant_error(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| (t.constant - t.expected_constant).norm())
            .fold(0.0, f64::max)
    }
}

const KIND_TOL: f64 = 1e-7;

pub fn classify_angle(a: C64) -> Result<AngleKind> {
    if (a.re - FRAC_PI_2).abs() < KIND_TOL && a.im.abs() > KIND_TOL {
        return Ok(AngleKind::HalfPiPlusIEta);
    }
    if a.re.abs() < KIND_TOL {
        return Ok(AngleKind::IEta);
    }
    if a.im.abs() < KIND_TOL {
        if a.re > FRAC_PI_4 - 1e-12 && a.re < 3.0 * FRAC_PI_4 + 1e-12 {
            return Ok(AngleKind::Real);
        }
        return Err(Error::SectorViolation(format!(
            "real angle {} lies outside [pi/4, 3 pi/4]",
            a.re
        )));
    }
    Err(Error::SectorViolation(format!("angle {a} is of none of the lattice types")))
}

/// Sector data of one triangle, from its angle and multiplicity.
pub fn resolve_triangle(angle: &Angle, multiplicity: usize) -> Result<TriangleSector> {
    let a = angle.value;
    let kind = classify_angle(a)?;
    let sign = {
        let d = angle.perturbed.re - FRAC_PI_2;
        if d == 0.0 {
            0.0
        } else {
            d.signum()
        }
    };
    let side = CutSide::from_sign((cx::re(PI) - angle.perturbed).sin().im);
    let x1 = (cx::re(PI) - a).sin();
    let su2_rec = cx::re(FRAC_PI_2) + (cx::re(FRAC_PI_2) - cx::asin_from(x1, side)) * sign;
    let x2 = (cx::re(2.0 * PI) - a * 2.0).sin();
    let half_asin = cx::asin(x2) * 0.5;
    let so3_rec = match kind {
        AngleKind::IEta => -half_asin,
        _ => cx::re(FRAC_PI_2) + half_asin,
    };
    let n = multiplicity as f64;
    let quarter = match kind {
        AngleKind::IEta => -half_asin * 0.5,
        _ => half_asin * 0.5,
    };
    let constant = (cx::re(2.0 * PI / n) - a) * 0.5 + quarter;
    let expected_constant = match kind {
        AngleKind::IEta => PI / n,
        _ => PI / n - FRAC_PI_4,
    };
    let su2_branch = if sign < 0.0 { ArcsinBranch::new(1, Some(side)) } else { ArcsinBranch::new(0, Some(side)) };
    let so3_branch = match kind {
        AngleKind::IEta => ArcsinBranch::new(2, None),
        _ => ArcsinBranch::new(1, None),
    };
    Ok(TriangleSector {
        kind,
        sign,
        side,
        multiplicity,
        angle: a,
        su2_reconstructed: su2_rec,
        so3_reconstructed: so3_rec,
        constant,
        expected_constant,
        su2_branch,
        so3_branch,
    })
}

/// Resolve the branch sector of a simplex from its angles and the
/// multiplicities of its triangles.
pub fn resolve_branch(angles: &[Angle; 10], multiplicity: &[usize; 10]) -> Result<BranchSector> {
    let mut triangles = Vec::with_capacity(10);
    for n in 0..10 {
        triangles.push(resolve_triangle(&angles[n], multiplicity[n])?);
    }
    let simplex_constant = triangles.iter().map(|t| t.constant).sum();
    let expected_simplex_constant = triangles.iter().map(|t| t.expected_constant).sum();
    Ok(BranchSector { triangles, simplex_constant, expected_simplex_constant })
}

/// Expected sector constants of one lattice triangle, summed over the
/// simplices sharing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorSum {
    pub multiplicity: usize,
    pub real: usize,
    pub half_pi: usize,
    pub i_eta: usize,
    pub constant_sum: f64,
}

/// Per-triangle sector sums over the whole lattice.
pub fn lattice_sector_sums(lat: &Lattice) -> Result<Vec<SectorSum>> {
    let mut sums: Vec<SectorSum> = lat
        .multiplicity
        .iter()
        .map(|&m| SectorSum { multiplicity: m, real: 0, half_pi: 0, i_eta: 0, constant_sum: 0.0 })
        .collect();
    for s in &lat.simplices {
        let d = lat.simplex_data(s)?;
        let mult = s.triangles.map(|id| lat.multiplicity[id]);
        let sector = resolve_branch(&d.angles, &mult)?;
        for n in 0..10 {
            let t = &sector.triangles[n];
            let e = &mut sums[s.triangles[n]];
            e.constant_sum += t.expected_constant;
            match t.kind {
                AngleKind::Real => e.real += 1,
                AngleKind::HalfPiPlusIEta => e.half_pi += 1,
                AngleKind::IEta => e.i_eta += 1,
            }
        }
    }
    Ok(sums)
}
