//! Simplex geometry: edge vectors, bivectors, chiral area vectors and
//! hyperdihedral angles.
//!
//! Vertices of a 4-simplex are labelled 0..4 with vertex 4 as the base.
//! A 3-face carries the label of the opposite vertex, and the triangle
//! `(i, k)` is the one shared by the 3-faces `i` and `k`.

use crate::algebra::{eps3, eps4, Chirality, ChiralVec, M4, METRIC};
use crate::cx::{self, I, ZERO};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// Contravariant 4-vector, possibly complex (a Euclidean simplex is
/// embedded with an imaginary time component).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeVector(pub [C64; 4]);

impl EdgeVector {
    pub const ZERO: EdgeVector = EdgeVector([ZERO; 4]);

    pub fn minkowski(t: f64, x: f64, y: f64, z: f64) -> Self {
        EdgeVector([cx::re(t), cx::re(x), cx::re(y), cx::re(z)])
    }

    /// Euclidean vector `(x0, x1, x2, x3)` embedded with time `i x0`.
    pub fn euclidean(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        EdgeVector([C64::new(0.0, x0), cx::re(x1), cx::re(x2), cx::re(x3)])
    }

    /// Minkowski product, bilinear.
    pub fn dot(&self, o: &EdgeVector) -> C64 {
        (0..4).map(|a| self.0[a] * o.0[a] * METRIC[a]).sum()
    }

    pub fn spatial(&self) -> ChiralVec {
        ChiralVec([self.0[1], self.0[2], self.0[3]])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiply the time component by `e^{i delta}`.
    pub fn wick(&self, delta: f64) -> EdgeVector {
        let mut v = *self;
        v.0[0] *= C64::from_polar(1.0, delta);
        v
    }
}

impl Add for EdgeVector {
    type Output = EdgeVector;
    fn add(self, o: EdgeVector) -> EdgeVector {
        EdgeVector(std::array::from_fn(|a| self.0[a] + o.0[a]))
    }
}

impl Sub for EdgeVector {
    type Output = EdgeVector;
    fn sub(self, o: EdgeVector) -> EdgeVector {
        EdgeVector(std::array::from_fn(|a| self.0[a] - o.0[a]))
    }
}

impl Neg for EdgeVector {
    type Output = EdgeVector;
    fn neg(self) -> EdgeVector {
        EdgeVector(self.0.map(|z| -z))
    }
}

impl Mul<f64> for EdgeVector {
    type Output = EdgeVector;
    fn mul(self, s: f64) -> EdgeVector {
        EdgeVector(self.0.map(|z| z * s))
    }
}

/// Dual area tensor of a triangle together with its chiral vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bivector {
    /// Upper-index `v^{ab}`.
    pub tensor: M4,
    pub plus: ChiralVec,
    pub minus: ChiralVec,
}

/// `eps^{ab}_{cd}`.
fn eps_mixed(a: usize, b: usize, c: usize, d: usize) -> f64 {
    eps4(a, b, c, d) * METRIC[c] * METRIC[d]
}

/// `v^{ab} = 1/2 eps^{ab}_{cd} l1^c l2^d`.
pub fn dual_tensor(l1: &EdgeVector, l2: &EdgeVector) -> M4 {
    let mut v = [[ZERO; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let e = eps_mixed(a, b, c, d);
                    if e != 0.0 {
                        v[a][b] += l1.0[c] * l2.0[d] * (0.5 * e);
                    }
                }
            }
        }
    }
    v
}

/// `2 (+-v)_k = -eps_klm v^{lm} +- i (v_{k0} - v_{0k})`.
pub fn chiral_from_tensor(v: &M4, ch: Chirality) -> ChiralVec {
    let s = ch.sign();
    let mut out = [ZERO; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut x = ZERO;
        for l in 0..3 {
            for m in 0..3 {
                let e = eps3(k, l, m);
                if e != 0.0 {
                    x -= v[l + 1][m + 1] * e;
                }
            }
        }
        let lower_k0 = v[k + 1][0] * (METRIC[k + 1] * METRIC[0]);
        let lower_0k = v[0][k + 1] * (METRIC[0] * METRIC[k + 1]);
        x += I * s * (lower_k0 - lower_0k);
        *o = x * 0.5;
    }
    ChiralVec(out)
}

/// `2 (+-v) = +-i l1 x l2 - l1 l2^0 + l2 l1^0` on spatial parts.
pub fn chiral_from_edges(l1: &EdgeVector, l2: &EdgeVector, ch: Chirality) -> ChiralVec {
    let a = l1.spatial();
    let b = l2.spatial();
    let x = a.cross(&b).scale(I * ch.sign()) - a.scale(l2.0[0]) + b.scale(l1.0[0]);
    x.scale(cx::re(0.5))
}

impl Bivector {
    pub fn zero() -> Self {
        Bivector { tensor: [[ZERO; 4]; 4], plus: ChiralVec::ZERO, minus: ChiralVec::ZERO }
    }

    pub fn chiral(&self, ch: Chirality) -> ChiralVec {
        match ch {
            Chirality::Plus => self.plus,
            Chirality::Minus => self.minus,
        }
    }

    pub fn neg(&self) -> Bivector {
        let mut t = self.tensor;
        for row in t.iter_mut() {
            for x in row.iter_mut() {
                *x = -*x;
            }
        }
        Bivector { tensor: t, plus: -self.plus, minus: -self.minus }
    }

    pub fn scale(&self, s: f64) -> Bivector {
        let mut t = self.tensor;
        for row in t.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        Bivector { tensor: t, plus: self.plus * s, minus: self.minus * s }
    }

    pub fn add(&self, o: &Bivector) -> Bivector {
        let mut t = self.tensor;
        for a in 0..4 {
            for b in 0..4 {
                t[a][b] += o.tensor[a][b];
            }
        }
        Bivector { tensor: t, plus: self.plus + o.plus, minus: self.minus + o.minus }
    }

    /// `v o v = 1/2 v_{ab} v^{ab}`.
    pub fn circ_form(&self) -> C64 {
        let mut s = ZERO;
        for a in 0..4 {
            for b in 0..4 {
                s += self.tensor[a][b] * self.tensor[a][b] * (METRIC[a] * METRIC[b]);
            }
        }
        s * 0.5
    }

    /// `v * v = 1/2 v_{ab} (*v)^{ab}` with `(*v)^{ab} = 1/2 eps^{ab}_{cd} v^{cd}`.
    pub fn star_form(&self) -> C64 {
        let mut s = ZERO;
        for a in 0..4 {
            for b in 0..4 {
                let mut dual = ZERO;
                for c in 0..4 {
                    for d in 0..4 {
                        let e = eps_mixed(a, b, c, d);
                        if e != 0.0 {
                            dual += self.tensor[c][d] * (0.5 * e);
                        }
                    }
                }
                s += self.tensor[a][b] * dual * (METRIC[a] * METRIC[b]);
            }
        }
        s * 0.5
    }

    /// Triangle area `-i sqrt(+v.+v)`: positive for spacelike triangles,
    /// imaginary for timelike ones. Rounding-level imaginary parts of the
    /// square are dropped so that the root does not jump across its cut.
    pub fn area(&self) -> C64 {
        -I * cx::sqrt_snap(self.plus.square())
    }

    /// Largest mismatch between the stored chiral vectors and the tensor.
    pub fn consistency_defect(&self) -> f64 {
        let p = chiral_from_tensor(&self.tensor, Chirality::Plus);
        let m = chiral_from_tensor(&self.tensor, Chirality::Minus);
        (p - self.plus).norm().max((m - self.minus).norm())
    }
}

pub fn bivector_from_edges(l1: &EdgeVector, l2: &EdgeVector) -> Bivector {
    Bivector {
        tensor: dual_tensor(l1, l2),
        plus: chiral_from_edges(l1, l2, Chirality::Plus),
        minus: chiral_from_edges(l1, l2, Chirality::Minus),
    }
}

/// The ten triangles `(i, k)`, `i < k`, in canonical order.
pub const TRIANGLES: [(usize, usize); 10] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
    (3, 4),
];

pub fn triangle_index(i: usize, k: usize) -> usize {
    let (a, b) = if i < k { (i, k) } else { (k, i) };
    TRIANGLES.iter().position(|&t| t == (a, b)).expect("valid triangle labels")
}

/// Orientation flag per triangle, applied on top of the canonical
/// bivectors. The action uses all faces reversed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceOrientation(pub [f64; 10]);

impl FaceOrientation {
    pub const CANONICAL: FaceOrientation = FaceOrientation([1.0; 10]);
    pub const REVERSED: FaceOrientation = FaceOrientation([-1.0; 10]);
}

impl Default for FaceOrientation {
    fn default() -> Self {
        FaceOrientation::REVERSED
    }
}

/// Hyperdihedral angle with the information needed to pick arcsin sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    pub value: C64,
    /// The angle recomputed with time components rotated by `e^{i delta}`.
    pub perturbed: C64,
}

/// Time rotation used to pick the sheet of each angle.
pub const WICK_DELTA: f64 = 1e-6;

/// Angle at the triangle spanned by `tri` between the out-of-plane points
/// `pi` and `pk`, as the principal arccos of the normalized product of their
/// projections orthogonal to the triangle plane.
fn raw_angle(tri: [EdgeVector; 3], pi: EdgeVector, pk: EdgeVector) -> Result<C64> {
    let o = tri[0];
    let a = tri[1] - o;
    let b = tri[2] - o;
    let (gaa, gab, gbb) = (a.dot(&a), a.dot(&b), b.dot(&b));
    let det = gaa * gbb - gab * gab;
    if det.norm() < 1e-14 * (gaa.norm() * gbb.norm()).max(1e-300) {
        return Err(Error::Degenerate("triangle is degenerate or null".into()));
    }
    let proj = |x: EdgeVector| {
        let x = x - o;
        let (xa, xb) = (a.dot(&x), b.dot(&x));
        let ca = (xa * gbb - xb * gab) / det;
        let cb = (xb * gaa - xa * gab) / det;
        EdgeVector(std::array::from_fn(|m| x.0[m] - ca * a.0[m] - cb * b.0[m]))
    };
    let p1 = proj(pi);
    let p2 = proj(pk);
    let (n1, n2) = (p1.dot(&p1), p2.dot(&p2));
    let scale = p1.norm() * p2.norm();
    if n1.norm() < 1e-12 * p1.norm() * p1.norm() || n2.norm() < 1e-12 * p2.norm() * p2.norm() {
        return Err(Error::Branch("projected normal is null; the angle has no sheet".into()));
    }
    if scale == 0.0 {
        return Err(Error::Degenerate("out-of-plane vertex lies in the triangle plane".into()));
    }
    let z = p1.dot(&p2) / (cx::sqrt(n1) * cx::sqrt(n2));
    Ok(cx::acos(z))
}

/// Hyperdihedral angle at the triangle formed by `points` minus `i` and `k`.
///
/// The principal value is continued to the sheet selected by a small
/// rotation of the time axis: among `+-a + 2 pi m` and `pi +- a + 2 pi m`
/// the candidate closest to the rotated angle is returned.
pub fn hyperdihedral_from_points(points: &[EdgeVector; 5], i: usize, k: usize) -> Result<Angle> {
    let others: Vec<usize> = (0..5).filter(|&j| j != i && j != k).collect();
    let tri = |pts: &[EdgeVector; 5]| [pts[others[0]], pts[others[1]], pts[others[2]]];
    let a0 = raw_angle(tri(points), points[i], points[k])?;
    let w: [EdgeVector; 5] = std::array::from_fn(|j| points[j].wick(WICK_DELTA));
    let ad = raw_angle(tri(&w), w[i], w[k])?;
    let mut best = (a0, f64::INFINITY);
    for s in [1.0, -1.0] {
        for m in -1..=1 {
            for shift in [0.0, PI] {
                let c = a0 * s + cx::re(shift + 2.0 * PI * m as f64);
                let d = (c - ad).norm();
                if d < best.1 {
                    best = (c, d);
                }
            }
        }
    }
    if best.1 > 1e-3 {
        return Err(Error::Branch(format!("angle {a0} has no sheet near {ad}")));
    }
    Ok(Angle { value: best.0, perturbed: ad })
}

/// A 4-simplex given by the edge vectors `l40, l41, l42, l43` from vertex 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Simplex4 {
    pub edges: [EdgeVector; 4],
}

/// Canonical edge pairs spanning each triangle, in terms of `e = [l40..l43]`.
fn canonical_pair(e: &[EdgeVector; 4], i: usize, k: usize) -> Option<(EdgeVector, EdgeVector)> {
    Some(match (i, k) {
        (0, 1) => (e[2], e[3]),
        (0, 2) => (e[3], e[1]),
        (0, 3) => (e[1], e[2]),
        (1, 2) => (e[0], e[3]),
        (2, 3) => (e[0], e[1]),
        (3, 1) => (e[0], e[2]),
        (4, 1) => (e[3] - e[0], e[2] - e[0]),
        (4, 2) => (e[1] - e[0], e[3] - e[0]),
        (4, 3) => (e[2] - e[0], e[1] - e[0]),
        (0, 4) => (e[2] - e[3], e[1] - e[3]),
        _ => return None,
    })
}

fn det4(m: [[C64; 4]; 4]) -> C64 {
    let mut det = ZERO;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let e = eps4(a, b, c, d);
                    if e != 0.0 {
                        det += m[0][a] * m[1][b] * m[2][c] * m[3][d] * e;
                    }
                }
            }
        }
    }
    det
}

impl Simplex4 {
    pub fn new(edges: [EdgeVector; 4]) -> Result<Self> {
        let s = Simplex4 { edges };
        let scale: f64 = edges.iter().map(|e| e.norm()).product();
        let det = det4(edges.map(|e| e.0));
        if det.norm() <= 1e-12 * scale.max(1e-300) {
            return Err(Error::Degenerate(format!("edge vectors are linearly dependent (det {det})")));
        }
        Ok(s)
    }

    /// Regular Euclidean simplex with unit edges, Euclidean-embedded.
    pub fn regular_euclidean() -> Self {
        let mut gram = [[0.5; 4]; 4];
        for (i, row) in gram.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let c = cholesky4(&gram).expect("positive Gram matrix");
        let edges = std::array::from_fn(|i| EdgeVector::euclidean(c[i][0], c[i][1], c[i][2], c[i][3]));
        Simplex4 { edges }
    }

    /// Reference simplex of the skewed hypercubic lattice: spatial axes with
    /// pairwise products `lambda`, lapse vector `lapse`, and the path
    /// `0 -> 4 -> 1 -> 2 -> 3` through one cell.
    pub fn pseudo_cubic(lambda: f64, lapse: [f64; 4]) -> Result<Self> {
        let axes = spatial_axes(lambda)?;
        let t = EdgeVector::minkowski(lapse[0], lapse[1], lapse[2], lapse[3]);
        let e1 = axes[0];
        let e2 = axes[1];
        let e3 = axes[2];
        Simplex4::new([-t, e1, e1 + e2, e1 + e2 + e3])
    }

    pub fn scaled(&self, s: f64) -> Simplex4 {
        Simplex4 { edges: self.edges.map(|e| e * s) }
    }

    /// Simplex with prescribed squared edge lengths `s2[i][j]` between
    /// vertices `i, j` (Minkowski signature, or Euclidean when all pivots are
    /// positive).
    pub fn from_squared_lengths(s2: &[[f64; 5]; 5]) -> Result<Self> {
        let mut g = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                g[i][j] = 0.5 * (s2[4][i] + s2[4][j] - s2[i][j]);
            }
        }
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| g[a][a].total_cmp(&g[b][b]));
        let mut l = [[0.0; 4]; 4];
        let mut d = [0.0; 4];
        for r in 0..4 {
            for c in 0..=r {
                let mut x = g[order[r]][order[c]];
                for k in 0..c {
                    x -= l[r][k] * l[c][k] * d[k];
                }
                if r == c {
                    d[r] = x;
                    l[r][r] = 1.0;
                } else {
                    l[r][c] = x / d[c];
                }
            }
        }
        let negative: Vec<usize> = (0..4).filter(|&k| d[k] < 0.0).collect();
        if d.iter().any(|&x| x == 0.0) || negative.len() > 1 {
            return Err(Error::Validation(format!(
                "squared lengths do not describe a simplex of signature (-,+,+,+), pivots {d:?}"
            )));
        }
        // the negative pivot, if any, becomes the time axis
        let time = negative.first().copied().unwrap_or(0);
        let mut axis = [0usize; 4];
        let mut next = 1;
        for (k, a) in axis.iter_mut().enumerate() {
            if k == time {
                *a = 0;
            } else {
                *a = next;
                next += 1;
            }
        }
        let mut edges = [EdgeVector::ZERO; 4];
        for r in 0..4 {
            let mut v = [ZERO; 4];
            for k in 0..4 {
                let root = d[k].abs().sqrt() * l[r][k];
                v[axis[k]] = if k == time && d[k] > 0.0 { C64::new(0.0, root) } else { cx::re(root) };
            }
            edges[order[r]] = EdgeVector(v);
        }
        Simplex4::new(edges)
    }

    /// Squared edge lengths between all vertex pairs.
    pub fn squared_lengths(&self) -> [[C64; 5]; 5] {
        let p = self.vertices();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let e = p[i] - p[j];
                e.dot(&e)
            })
        })
    }

    /// Position of vertex `i` with vertex 4 at the origin.
    pub fn vertex(&self, i: usize) -> EdgeVector {
        if i == 4 {
            EdgeVector::ZERO
        } else {
            self.edges[i]
        }
    }

    pub fn vertices(&self) -> [EdgeVector; 5] {
        std::array::from_fn(|i| self.vertex(i))
    }

    /// Canonical bivector `v_ik` with `v_ki = -v_ik`; each tetrahedron closes.
    pub fn canonical_bivector(&self, i: usize, k: usize) -> Result<Bivector> {
        if i == k || i > 4 || k > 4 {
            return Err(Error::Validation(format!("no triangle ({i},{k})")));
        }
        if let Some((a, b)) = canonical_pair(&self.edges, i, k) {
            return Ok(bivector_from_edges(&a, &b));
        }
        let (a, b) = canonical_pair(&self.edges, k, i).expect("one ordering is canonical");
        Ok(bivector_from_edges(&a, &b).neg())
    }

    /// Bivector of triangle `(i, k)` with the orientation flag applied.
    pub fn bivector(&self, i: usize, k: usize, orient: &FaceOrientation) -> Result<Bivector> {
        let v = self.canonical_bivector(i, k)?;
        Ok(v.scale(orient.0[triangle_index(i, k)]))
    }

    /// All ten bivectors in [`TRIANGLES`] order.
    pub fn face_bivectors(&self, orient: &FaceOrientation) -> Result<[Bivector; 10]> {
        let mut out = [Bivector::zero(); 10];
        for (n, &(i, k)) in TRIANGLES.iter().enumerate() {
            out[n] = self.bivector(i, k, orient)?;
        }
        Ok(out)
    }

    /// Largest bivector sum over the five tetrahedra, tensor and chiral parts.
    pub fn closure_defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..5 {
            let mut sum = Bivector::zero();
            for k in (0..5).filter(|&k| k != i) {
                sum = sum.add(&self.canonical_bivector(i, k)?);
            }
            let t = sum.tensor.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
            worst = worst.max(t).max(sum.plus.norm()).max(sum.minus.norm());
        }
        Ok(worst)
    }

    pub fn hyperdihedral_angle(&self, i: usize, k: usize) -> Result<Angle> {
        hyperdihedral_from_points(&self.vertices(), i, k)
    }

    pub fn angles(&self) -> Result<[Angle; 10]> {
        let mut out = [Angle { value: ZERO, perturbed: ZERO }; 10];
        for (n, &(i, k)) in TRIANGLES.iter().enumerate() {
            out[n] = self.hyperdihedral_angle(i, k)?;
        }
        Ok(out)
    }

    /// Triangle areas in [`TRIANGLES`] order.
    pub fn areas(&self) -> Result<[C64; 10]> {
        let b = self.face_bivectors(&FaceOrientation::CANONICAL)?;
        Ok(b.map(|v| v.area()))
    }
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky4(a: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return None;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Unit spatial axes with pairwise products `lambda`.
pub fn spatial_axes(lambda: f64) -> Result<[EdgeVector; 3]> {
    if !(lambda > -0.5 && lambda < 1.0) {
        return Err(Error::Validation(format!(
            "lambda = {lambda} is outside (-1/2, 1), the Gram matrix is not positive"
        )));
    }
    let mut g = [[lambda; 4]; 4];
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    // embed the 3x3 block in a 4x4 one with a unit first entry
    for i in 0..4 {
        g[0][i] = if i == 0 { 1.0 } else { 0.0 };
        g[i][0] = g[0][i];
    }
    let c = cholesky4(&g).ok_or_else(|| Error::Validation("Gram matrix is not positive".into()))?;
    Ok(std::array::from_fn(|i| EdgeVector::minkowski(0.0, c[i + 1][1], c[i + 1][2], c[i + 1][3])))
}

/// Dihedral angle of a Euclidean tetrahedron `[p0..p3]` at edge `(b, c)`
/// between the faces through the out vertices `a` and `d`.
pub fn dihedral_3d(p: &[[f64; 3]; 4], a: usize, b: usize, c: usize, d: usize) -> f64 {
    let sub = |x: [f64; 3], y: [f64; 3]| [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let e = sub(p[c], p[b]);
    let ee = dot(e, e);
    let perp = |x: [f64; 3]| {
        let x = sub(x, p[b]);
        let t = dot(x, e) / ee;
        [x[0] - t * e[0], x[1] - t * e[1], x[2] - t * e[2]]
    };
    let u = perp(p[a]);
    let v = perp(p[d]);
    (dot(u, v) / (dot(u, u) * dot(v, v)).sqrt()).clamp(-1.0, 1.0).acos()
}

/// Dihedral angles of the spatial tetrahedron `(1234)` of the reference
/// simplex, labelled by out vertex, edge and out vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DihedralTable {
    pub lambda: f64,
    pub a2_43_1: f64,
    pub a1_42_3: f64,
    pub a4_31_2: f64,
    pub a4_23_1: f64,
    pub a4_12_3: f64,
    /// `acos sqrt((1 + 2 lambda) / (2 + 2 lambda))`.
    pub a4_23_1_closed: f64,
    pub min_angle: f64,
}

pub fn dihedral_angles_3d(lambda: f64) -> Result<DihedralTable> {
    let axes = spatial_axes(lambda)?;
    let r = |v: &EdgeVector| [v.0[1].re, v.0[2].re, v.0[3].re];
    let (e1, e2, e3) = (r(&axes[0]), r(&axes[1]), r(&axes[2]));
    let add = |x: [f64; 3], y: [f64; 3]| [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
    // index 0 = vertex 4, then vertices 1, 2, 3
    let p = [[0.0; 3], e1, add(e1, e2), add(add(e1, e2), e3)];
    let ix = |v: usize| if v == 4 { 0 } else { v };
    let ang = |a: usize, b: usize, c: usize, d: usize| dihedral_3d(&p, ix(a), ix(b), ix(c), ix(d));
    let mut min_angle = f64::INFINITY;
    for b in 0..4 {
        for c in b + 1..4 {
            let rest: Vec<usize> = (0..4).filter(|&x| x != b && x != c).collect();
            min_angle = min_angle.min(dihedral_3d(&p, rest[0], b, c, rest[1]));
        }
    }
    Ok(DihedralTable {
        lambda,
        a2_43_1: ang(2, 4, 3, 1),
        a1_42_3: ang(1, 4, 2, 3),
        a4_31_2: ang(4, 3, 1, 2),
        a4_23_1: ang(4, 2, 3, 1),
        a4_12_3: ang(4, 1, 2, 3),
        a4_23_1_closed: ((1.0 + 2.0 * lambda) / (2.0 + 2.0 * lambda)).sqrt().acos(),
        min_angle,
    })
}

impl DihedralTable {
    /// Every dihedral angle of the spatial tetrahedra lies in `[pi/4, pi/2]`,
    /// which holds for `lambda in [1 - sqrt 2, 0]`.
    pub fn validate_sector(&self) -> Result<()> {
        let a = [self.a2_43_1, self.a1_42_3, self.a4_31_2, self.a4_23_1, self.a4_12_3];
        let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = a.iter().cloned().fold(0.0, f64::max);
        if lo < std::f64::consts::FRAC_PI_4 - 1e-12 || hi > std::f64::consts::FRAC_PI_2 + 1e-12 {
            return Err(Error::Validation(format!(
                "lambda = {} gives 3-d dihedral angles in [{lo:.6}, {hi:.6}], outside [pi/4, pi/2]; valid lambda lies in [1 - sqrt 2, 0]",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Largest `|sum of dihedral angles - 2 pi|` over the edges of the periodic
/// skewed cubic 3-lattice with six tetrahedra per cube.
pub fn dihedral_flatness_3d(lambda: f64) -> Result<f64> {
    let axes = spatial_axes(lambda)?;
    let ext = [2i64; 3];
    let pos = |n: &[i64]| {
        let mut x = [0.0; 3];
        for (a, &c) in n.iter().enumerate() {
            for (j, xj) in x.iter_mut().enumerate() {
                *xj += c as f64 * axes[a].0[j + 1].re;
            }
        }
        x
    };
    let mut sums: std::collections::BTreeMap<crate::lattice::FaceKey, f64> = Default::default();
    for path in crate::lattice::kuhn_simplices(&ext) {
        let p: [[f64; 3]; 4] = std::array::from_fn(|i| pos(&path[i]));
        for b in 0..4 {
            for c in b + 1..4 {
                let rest: Vec<usize> = (0..4).filter(|&x| x != b && x != c).collect();
                let key = crate::lattice::face_key(&[path[b].clone(), path[c].clone()], &ext);
                *sums.entry(key).or_default() += dihedral_3d(&p, rest[0], b, c, rest[1]);
            }
        }
    }
    Ok(sums.values().map(|s| (s - 2.0 * PI).abs()).fold(0.0, f64::max))
}

/// `+v.+v` against `v o v + i v * v` for `n` random non-simple bivectors.
pub fn bilinear_identity_defect(n: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let edge = |rng: &mut rand_chacha::ChaCha8Rng| {
        EdgeVector::minkowski(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    };
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let a = bivector_from_edges(&edge(&mut rng), &edge(&mut rng));
        let b = bivector_from_edges(&edge(&mut rng), &edge(&mut rng));
        let v = a.add(&b);
        for ch in Chirality::BOTH {
            let lhs = v.chiral(ch).square();
            let rhs = v.circ_form() + I * ch.sign() * v.star_form();
            worst = worst.max((lhs - rhs).norm());
        }
        worst = worst.max(v.consistency_defect());
    }
    worst
}

/// Unit normal `v / sqrt(v.v)` of a chiral area vector.
pub fn unit_normal(v: &ChiralVec) -> Result<ChiralVec> {
    v.unit()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn bivector_examples() {
        let x = EdgeVector::minkowski(0.0, 1.0, 0.0, 0.0);
        let y = EdgeVector::minkowski(0.0, 0.0, 1.0, 0.0);
        let v = bivector_from_edges(&x, &y);
        assert!((v.plus[2] - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((v.plus.square() + 0.25).norm() < 1e-15);
        assert!((v.area() - 0.5).norm() < 1e-15);
        assert!(v.consistency_defect() < 1e-15);
        let w = bivector_from_edges(&y, &x);
        assert!((w.plus + v.plus).norm() < 1e-15);
        let p = bivector_from_edges(&x, &(x * 2.0));
        assert!(p.plus.norm() == 0.0 && p.circ_form().norm() == 0.0);
        let t = EdgeVector::minkowski(1.0, 0.0, 0.0, 0.0);
        let z = EdgeVector::minkowski(0.0, 0.0, 0.0, 1.0);
        let tz = bivector_from_edges(&t, &z);
        assert!((tz.plus[2] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(tz.plus.square().re > 0.0);
        assert!(tz.consistency_defect() < 1e-15);
    }

    #[test]
    fn bilinear_forms_agree_with_chiral_square() {
        assert!(bilinear_identity_defect(200, 3) < 1e-12);
    }

    #[test]
    fn closure_and_time_gauge() {
        let s = Simplex4::pseudo_cubic(0.1, [0.3, 0.05, 0.0, -0.02]).unwrap();
        assert!(s.closure_defect().unwrap() < 1e-14);
        let e = [
            EdgeVector::minkowski(0.01, 0.0, 0.0, 0.0),
            EdgeVector::minkowski(0.0, 1.0, 0.2, 0.0),
            EdgeVector::minkowski(0.0, 0.1, 1.0, 0.3),
            EdgeVector::minkowski(0.0, -0.2, 0.0, 1.0),
        ];
        let s = Simplex4::new(e).unwrap();
        let v1 = s.canonical_bivector(0, 1).unwrap().plus;
        let want = e[2].spatial().cross(&e[3].spatial()).scale(C64::new(0.0, 0.5));
        assert!((v1 - want).norm() < 1e-15);
        for a in 1..4 {
            let mut sum = s.canonical_bivector(0, a).unwrap();
            for b in (1..5).filter(|&b| b != a) {
                sum = sum.add(&s.canonical_bivector(b, a).unwrap());
            }
            assert!(sum.plus.norm() < 1e-14);
        }
        assert!(Simplex4::new([e[0], e[1], e[1], e[3]]).is_err());
    }

    #[test]
    fn regular_simplex_angles_and_areas() {
        let s = Simplex4::regular_euclidean();
        let want = (0.25f64).acos();
        for (a, area) in s.angles().unwrap().iter().zip(s.areas().unwrap()) {
            assert!((a.value - want).norm() < 1e-12, "{a:?}");
            assert!((area - 3f64.sqrt() / 4.0).norm() < 1e-12, "{area}");
        }
        assert!(s.closure_defect().unwrap() < 1e-14);
    }

    #[test]
    fn embedding_from_lengths_reproduces_angles() {
        let s = Simplex4::pseudo_cubic(-1.0 / 3.0, [0.2, 0.03, -0.02, 0.01]).unwrap();
        let s2 = s.squared_lengths().map(|r| r.map(|z| z.re));
        let t = Simplex4::from_squared_lengths(&s2).unwrap();
        let (a, b) = (s.angles().unwrap(), t.angles().unwrap());
        for n in 0..10 {
            assert!((a[n].value - b[n].value).norm() < 1e-10, "{n} {:?} {:?}", a[n], b[n]);
        }
        let r = Simplex4::regular_euclidean();
        let s2 = r.squared_lengths().map(|r| r.map(|z| z.re));
        let t = Simplex4::from_squared_lengths(&s2).unwrap();
        let want = (0.25f64).acos();
        assert!(t.angles().unwrap().iter().all(|a| (a.value - want).norm() < 1e-12));
    }

    #[test]
    fn dihedral_table() {
        let t = dihedral_angles_3d(0.0).unwrap();
        assert!((t.a4_23_1 - FRAC_PI_4).abs() < 1e-12);
        assert!((t.a4_12_3 - PI / 2.0).abs() < 1e-12);
        let t = dihedral_angles_3d(-1.0 / 3.0).unwrap();
        assert!((t.min_angle - PI / 3.0).abs() < 1e-12);
        for lam in [-0.4, -1.0 / 3.0, 0.0, 0.2, 0.7] {
            let t = dihedral_angles_3d(lam).unwrap();
            assert!((t.a2_43_1 - PI / 3.0).abs() < 1e-12);
            assert!((t.a1_42_3 - PI / 2.0).abs() < 1e-12);
            assert!((t.a4_31_2 - PI / 2.0).abs() < 1e-12);
            assert!((t.a4_23_1 - t.a4_23_1_closed).abs() < 1e-12);
            assert!((t.a4_12_3 - (PI - 2.0 * t.a4_23_1)).abs() < 1e-12);
            assert!(dihedral_flatness_3d(lam).unwrap() < 1e-12);
        }
        assert!(dihedral_angles_3d(0.99).is_ok());
        assert!(dihedral_angles_3d(1.0).is_err());
        assert!(dihedral_angles_3d(-0.6).is_err());
    }
}
