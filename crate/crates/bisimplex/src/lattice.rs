//! Periodic hypercubic triangulation with skewed spatial axes.
//!
//! Each 4-cube is cut into 24 simplices, one per ordering of the four axes
//! (a monotone lattice path from a corner to the opposite corner). Axis 0 is
//! the lapse direction, axes 1..3 are the spatial unit vectors with pairwise
//! products `lambda`.

use crate::geometry::{
    bivector_from_edges, hyperdihedral_from_points, spatial_axes, Angle, EdgeVector, Simplex4,
    TRIANGLES,
};
use crate::{Error, Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Lattice configuration, also the on-disk JSON format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub lambda: f64,
    pub lapse: [f64; 4],
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_extents")]
    pub extents: [i64; 4],
}

fn default_scale() -> f64 {
    1.0
}

fn default_extents() -> [i64; 4] {
    [2, 2, 2, 2]
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            lambda: -1.0 / 3.0,
            lapse: [0.2, 0.03, -0.02, 0.01],
            scale: 1.0,
            extents: default_extents(),
        }
    }
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.extents.iter().any(|&e| e <= 0) {
            return Err(Error::Validation(format!("extents must be positive, got {:?}", self.extents)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Validation(format!("scale must be positive, got {}", self.scale)));
        }
        spatial_axes(self.lambda)?;
        let t = self.lapse;
        if -t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + t[3] * t[3] >= 0.0 {
            return Err(Error::Validation(format!("lapse {t:?} is not timelike")));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: LatticeConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("lattice config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Identifies a face of the periodic complex: the wrapped lexicographically
/// smallest vertex and the offsets of the other vertices from it.
pub type FaceKey = (Vec<i64>, Vec<Vec<i64>>);

pub fn face_key(vertices: &[Vec<i64>], extents: &[i64]) -> FaceKey {
    let mut vs: Vec<Vec<i64>> = vertices.to_vec();
    vs.sort();
    let base = vs[0].clone();
    let wrapped = base.iter().zip(extents).map(|(&x, &e)| x.rem_euclid(e)).collect();
    let offsets = vs[1..]
        .iter()
        .map(|v| v.iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect();
    (wrapped, offsets)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Vertex paths of all simplices of the periodic cubic complex with the
/// given extents, in a fixed order (cells lexicographically, then axis
/// orderings lexicographically).
pub fn kuhn_simplices(extents: &[i64]) -> Vec<Vec<Vec<i64>>> {
    let d = extents.len();
    let perms = permutations(d);
    let mut cells: Vec<Vec<i64>> = vec![vec![]];
    for &e in extents {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                (0..e).map(move |x| {
                    let mut c = c.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(cells.len() * perms.len());
    for cell in &cells {
        for p in &perms {
            let mut path = vec![cell.clone()];
            for &a in p {
                let mut v = path.last().expect("path starts with the cell corner").clone();
                v[a] += 1;
                path.push(v);
            }
            out.push(path);
        }
    }
    out
}

/// Path position of each simplex vertex label `0..4`: the path
/// `p0 -> p1 -> ... -> p4` carries labels `0, 4, 1, 2, 3`.
pub const LABEL_TO_PATH: [usize; 5] = [0, 2, 3, 4, 1];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSimplex {
    /// Unwrapped integer coordinates along the path.
    pub path: Vec<Vec<i64>>,
    /// Global triangle ids in [`TRIANGLES`] order.
    pub triangles: [usize; 10],
}

#[derive(Debug, Clone)]
pub struct Lattice {
    pub config: LatticeConfig,
    pub axes: [EdgeVector; 4],
    pub simplices: Vec<LatticeSimplex>,
    /// Number of simplices sharing each triangle.
    pub multiplicity: Vec<usize>,
    pub triangle_keys: Vec<FaceKey>,
    displacement: HashMap<Vec<i64>, EdgeVector>,
    length_factor: HashMap<FaceKey, f64>,
}

/// Per-simplex sums used by the action functionals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimplexData {
    pub angles: [Angle; 10],
    pub areas: [C64; 10],
}

impl Lattice {
    pub fn build(config: &LatticeConfig) -> Result<Self> {
        config.validate()?;
        let sp = spatial_axes(config.lambda)?;
        let t = config.lapse;
        let axes = [
            EdgeVector::minkowski(t[0], t[1], t[2], t[3]) * config.scale,
            sp[0] * config.scale,
            sp[1] * config.scale,
            sp[2] * config.scale,
        ];
        let ext = config.extents.to_vec();
        let mut index: BTreeMap<FaceKey, usize> = BTreeMap::new();
        let mut keys = Vec::new();
        let mut multiplicity = Vec::new();
        let mut simplices = Vec::new();
        for path in kuhn_simplices(&ext) {
            let mut tri = [0usize; 10];
            for (n, &(i, k)) in TRIANGLES.iter().enumerate() {
                let verts: Vec<Vec<i64>> = (0..5)
                    .filter(|&l| l != i && l != k)
                    .map(|l| path[LABEL_TO_PATH[l]].clone())
                    .collect();
                let key = face_key(&verts, &ext);
                let id = *index.entry(key.clone()).or_insert_with(|| {
                    keys.push(key);
                    multiplicity.push(0);
                    keys.len() - 1
                });
                multiplicity[id] += 1;
                tri[n] = id;
            }
            simplices.push(LatticeSimplex { path, triangles: tri });
        }
        Ok(Lattice {
            config: config.clone(),
            axes,
            simplices,
            multiplicity,
            triangle_keys: keys,
            displacement: HashMap::new(),
            length_factor: HashMap::new(),
        })
    }

    pub fn n_triangles(&self) -> usize {
        self.multiplicity.len()
    }

    /// Histogram of triangle multiplicities.
    pub fn multiplicity_table(&self) -> BTreeMap<usize, usize> {
        let mut t = BTreeMap::new();
        for &m in &self.multiplicity {
            *t.entry(m).or_insert(0) += 1;
        }
        t
    }

    fn wrap(&self, n: &[i64]) -> Vec<i64> {
        n.iter().zip(&self.config.extents).map(|(&x, &e)| x.rem_euclid(e)).collect()
    }

    pub fn position(&self, n: &[i64]) -> EdgeVector {
        let mut p = EdgeVector::ZERO;
        for (a, &c) in n.iter().enumerate() {
            p = p + self.axes[a] * c as f64;
        }
        match self.displacement.get(&self.wrap(n)) {
            Some(d) => p + *d,
            None => p,
        }
    }

    /// Displace one periodic vertex.
    pub fn displace(&mut self, vertex: &[i64], d: EdgeVector) {
        let key = self.wrap(vertex);
        let cur = self.displacement.get(&key).copied().unwrap_or(EdgeVector::ZERO);
        self.displacement.insert(key, cur + d);
    }

    /// Displace every vertex by independent uniform offsets of relative size
    /// `amplitude` (in units of the spatial scale).
    pub fn perturb(&mut self, amplitude: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ext = self.config.extents;
        let s = self.config.scale;
        let lapse = self.config.lapse[0].abs() * s;
        for x0 in 0..ext[0] {
            for x1 in 0..ext[1] {
                for x2 in 0..ext[2] {
                    for x3 in 0..ext[3] {
                        let mut r = || rng.random_range(-1.0..1.0) * amplitude;
                        let d = EdgeVector::minkowski(r() * lapse, r() * s, r() * s, r() * s);
                        self.displace(&[x0, x1, x2, x3], d);
                    }
                }
            }
        }
    }

    /// Scale every squared edge length by an independent factor
    /// `1 + amplitude * U(-1, 1)`. Unlike vertex displacements this makes the
    /// geometry curved.
    pub fn perturb_lengths(&mut self, amplitude: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ext = self.config.extents.to_vec();
        for s in &self.simplices {
            for i in 0..5 {
                for j in i + 1..5 {
                    let key = face_key(&[s.path[i].clone(), s.path[j].clone()], &ext);
                    self.length_factor
                        .entry(key)
                        .or_insert_with(|| 1.0 + amplitude * rng.random_range(-1.0..1.0));
                }
            }
        }
    }

    /// Vertex positions in label order `0..4`, before length perturbations.
    pub fn simplex_points(&self, s: &LatticeSimplex) -> [EdgeVector; 5] {
        std::array::from_fn(|l| self.position(&s.path[LABEL_TO_PATH[l]]))
    }

    /// The simplex as edge vectors from its vertex 4.
    pub fn simplex4(&self, s: &LatticeSimplex) -> Result<Simplex4> {
        let p = self.simplex_points(s);
        let flat = Simplex4::new(std::array::from_fn(|i| p[i] - p[4]))?;
        if self.length_factor.is_empty() {
            return Ok(flat);
        }
        let ext = self.config.extents.to_vec();
        let base = flat.squared_lengths();
        let mut s2 = [[0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    let a = s.path[LABEL_TO_PATH[i]].clone();
                    let b = s.path[LABEL_TO_PATH[j]].clone();
                    let f = self.length_factor.get(&face_key(&[a, b], &ext)).copied().unwrap_or(1.0);
                    s2[i][j] = base[i][j].re * f;
                }
            }
        }
        Simplex4::from_squared_lengths(&s2)
    }

    pub fn simplex_data(&self, s: &LatticeSimplex) -> Result<SimplexData> {
        let p = self.simplex4(s)?.vertices();
        let mut angles = [Angle { value: C64::new(0.0, 0.0), perturbed: C64::new(0.0, 0.0) }; 10];
        let mut areas = [C64::new(0.0, 0.0); 10];
        for (n, &(i, k)) in TRIANGLES.iter().enumerate() {
            angles[n] = hyperdihedral_from_points(&p, i, k)?;
            let t: Vec<usize> = (0..5).filter(|&l| l != i && l != k).collect();
            areas[n] = bivector_from_edges(&(p[t[1]] - p[t[0]]), &(p[t[2]] - p[t[0]])).area();
        }
        Ok(SimplexData { angles, areas })
    }

    pub fn all_simplex_data(&self) -> Result<Vec<SimplexData>> {
        self.simplices.iter().map(|s| self.simplex_data(s)).collect()
    }

    /// Sum of hyperdihedral angles around each triangle.
    pub fn angle_sums(&self) -> Result<Vec<C64>> {
        let mut sums = vec![C64::new(0.0, 0.0); self.n_triangles()];
        for s in &self.simplices {
            let d = self.simplex_data(s)?;
            for n in 0..10 {
                sums[s.triangles[n]] += d.angles[n].value;
            }
        }
        Ok(sums)
    }

    /// Largest bivector closure defect over all tetrahedra.
    pub fn closure_defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in &self.simplices {
            worst = worst.max(self.simplex4(s)?.closure_defect()?);
        }
        Ok(worst)
    }

    /// The simplex along the path `0 -> 4 -> 1 -> 2 -> 3` from the origin.
    pub fn reference_simplex(&self) -> &LatticeSimplex {
        &self.simplices[0]
    }

    /// Multiplicities of the reference simplex triangles in [`TRIANGLES`] order.
    pub fn reference_multiplicities(&self) -> [usize; 10] {
        self.reference_simplex().triangles.map(|id| self.multiplicity[id])
    }
}
