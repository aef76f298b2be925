//! Acceptance report: one PASS/FAIL line per criterion.

use bisimplex::action::{decompose_total, regge_total, resolve_branch, Gamma, Rep};
use bisimplex::algebra::{haar_total_mass, sigma_identities_check};
use bisimplex::cx;
use bisimplex::geometry::{bilinear_identity_defect, dihedral_angles_3d, Simplex4};
use bisimplex::lattice::{Lattice, LatticeConfig};
use bisimplex::onshell::{builtin_suite, certify, perturbed_simplex, CertifyConfig, DEFAULT_LAPSE};
use bisimplex::pathint::{
    linearized_delta_prefactor, model_integral, model_integral_slope, mollified_delta, n0_deformed_quadrature,
    n0_su2_closed, n_degenerate_mc, sources_from_squares, suppression_slope, AreaKind, DegenerateConfig,
    MCEstimate, McOptions, SLOPE_RANGE,
};
use bisimplex::Result;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};
use std::time::{Duration, Instant};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn c1() -> Result<Outcome> {
    let s = sigma_identities_check();
    let b = bilinear_identity_defect(1000, 2024);
    outcome(
        s.max() < 1e-10 && b < 1e-10,
        format!("duality {:.1e}, product {:.1e}, bilinear over 1000 cases {b:.1e}", s.duality, s.product),
    )
}

fn c2() -> Result<Outcome> {
    let d = (haar_total_mass() - 1.0).abs();
    outcome(d < 1e-10, format!("|int DR - 1| = {d:.1e}"))
}

fn c3() -> Result<Outcome> {
    let lat = Lattice::build(&LatticeConfig::default())?;
    let d = lat.closure_defect()?;
    outcome(
        d < 1e-12 && lat.simplices.len() == 384,
        format!("{} simplices, worst tetrahedron bivector sum {d:.1e}", lat.simplices.len()),
    )
}

fn c4() -> Result<Outcome> {
    let mut lat = Lattice::build(&LatticeConfig::default())?;
    let flat = regge_total(&lat)?.norm();
    lat.perturb_lengths(0.03, 17);
    let a = regge_total(&lat)?;
    let diff = (a - decompose_total(&lat)?).norm();
    outcome(
        flat < 1e-8 && diff < 1e-10,
        format!("flat action {flat:.1e}, perturbed action {:.4e}, |regge - decomposed| {diff:.1e}", a.norm()),
    )
}

fn c5() -> Result<Outcome> {
    let t = dihedral_angles_3d(-1.0 / 3.0)?;
    let z = dihedral_angles_3d(0.0)?;
    let e1 = (t.min_angle - FRAC_PI_3).abs();
    let e2 = (z.a4_23_1 - FRAC_PI_4).abs();
    outcome(e1 < 1e-12 && e2 < 1e-12, format!("|min - pi/3| = {e1:.1e}, |alpha(lambda=0) - pi/4| = {e2:.1e}"))
}

fn c6() -> Result<Outcome> {
    let suite = builtin_suite()?;
    let cfg = CertifyConfig::default();
    let (mut gap, mut res, mut ok, mut n) = (0.0f64, 0.0f64, true, 0);
    for rep in [Rep::Su2, Rep::So3] {
        for (id, s) in &suite {
            let r = certify(id, s, rep, &cfg)?;
            gap = gap.max(r.gap);
            res = res.max(r.residual);
            ok &= r.gap < 1e-8 && r.residual < 1e-5;
            n += 1;
        }
    }
    outcome(ok, format!("{n} certifications, worst gap {gap:.1e}, worst residual {res:.1e}"))
}

fn c7() -> Result<Outcome> {
    let lat = Lattice::build(&LatticeConfig::default())?;
    let mult = lat.reference_multiplicities();
    let d = lat.simplex_data(lat.reference_simplex())?;
    let background = resolve_branch(&d.angles, &mult)?;
    let constants = background.max_constant_error();
    let mut ns: Vec<usize> = background.triangles.iter().map(|t| t.multiplicity).collect();
    ns.sort_unstable();
    ns.dedup();
    let base = Simplex4::pseudo_cubic(-1.0 / 3.0, DEFAULT_LAPSE)?;
    let mut worst: f64 = background.max_reconstruction_error();
    for seed in 0..100 {
        let s = perturbed_simplex(&base, 0.02, 5000 + seed)?;
        let sector = resolve_branch(&s.angles()?, &mult)?;
        worst = worst.max(sector.max_reconstruction_error());
    }
    outcome(
        worst < 1e-8 && constants < 1e-12 && ns == vec![4, 6],
        format!("worst reconstruction error {worst:.1e} over 100 perturbed simplices, sector constants error {constants:.1e} for N in {ns:?}"),
    )
}

fn c8() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for a in [1.0, 5.0, 10.0] {
        let k0 = bisimplex::pathint::bessel_k0(cx::re(a))?.re;
        worst = worst.max((model_integral(a)? - 2.0 * k0).abs() / (2.0 * k0));
    }
    let slope = model_integral_slope(SLOPE_RANGE)?;
    outcome(
        worst < 1e-8 && (slope + 1.0).abs() < 0.02,
        format!("relative deviation from 2 K0 {worst:.1e}, fitted log-slope {slope:.4}"),
    )
}

fn c9() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for g in [0.5, 1.0, 2.0] {
        for v2 in [-4.0, -1.0, 4.0] {
            let gamma = Gamma::new(g)?;
            let sq = [cx::re(v2), cx::re(v2)];
            let q = n0_deformed_quadrature(&sources_from_squares(sq, gamma))?;
            let c = n0_su2_closed(sq, gamma)?;
            worst = worst.max((q - c).norm() / c.norm());
        }
    }
    outcome(worst < 1e-6, format!("worst relative error {worst:.1e} over gamma x v^2 = {{0.5,1,2}} x {{-4,-1,4}}"))
}

fn c10() -> Result<Outcome> {
    let g1 = Gamma::new(1.0)?;
    let g2 = Gamma::new(2.0)?;
    let space = suppression_slope(Rep::So3, AreaKind::Spacelike, g1, SLOPE_RANGE)?;
    let time = suppression_slope(Rep::So3, AreaKind::Timelike, g2, SLOPE_RANGE)?;
    let su2_space = suppression_slope(Rep::Su2, AreaKind::Spacelike, g1, SLOPE_RANGE)?;
    let su2_time = suppression_slope(Rep::Su2, AreaKind::Timelike, g2, SLOPE_RANGE)?;
    outcome(
        (space + 0.5).abs() < 0.05 && (time + 0.25).abs() < 0.025,
        format!(
            "so3 closed form: spacelike {space:.4} (target -0.5), timelike gamma=2 {time:.4} (target -0.25); su2 closed form: {su2_space:.4}, {su2_time:.4}"
        ),
    )
}

fn mc(cfg: &DegenerateConfig, samples: u64, seed: u64) -> Result<MCEstimate> {
    let opts = McOptions { samples, seed, chi_grid: 4, rel_tol: Some(0.05) };
    n_degenerate_mc(cfg, Gamma::new(1.0)?, &opts)
}

fn sigmas(a: &MCEstimate, b: &MCEstimate) -> f64 {
    (a.mean.norm() - b.mean.norm()) / (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

fn c11() -> Result<Outcome> {
    let t1 = mc(&DegenerateConfig::cube(1.0), 1_000_000, 11)?;
    let t2 = mc(&DegenerateConfig::cube(2.0), 200_000, 12)?;
    let t4 = mc(&DegenerateConfig::cube(4.0), 200_000, 13)?;
    let broken = mc(&DegenerateConfig::closure_violated(2.0, 0.5), 200_000, 14)?;
    let rel = t1.stderr / t1.mean.norm();
    let (s12, s24, sc) = (sigmas(&t1, &t2), sigmas(&t2, &t4), sigmas(&t2, &broken));
    outcome(
        rel < 0.05 && s12 >= 3.0 && s24 >= 3.0 && sc >= 3.0,
        format!(
            "|N|(t=1,2,4) = {:.3e}, {:.3e}, {:.3e}; rel. stderr at 1e6 {rel:.3}; separations {s12:.1}, {s24:.1} sigma; closed vs violated {:.3e} vs {:.3e} ({sc:.1} sigma)",
            t1.mean.norm(),
            t2.mean.norm(),
            t4.mean.norm(),
            t2.mean.norm(),
            broken.mean.norm()
        ),
    )
}

fn c12() -> Result<Outcome> {
    let p = linearized_delta_prefactor(1.0)?;
    let exact = (p - 512.0 * PI * PI).abs() / p;
    let masses = [0.1, 0.05, 0.025].map(|e| mollified_delta(1.0, e));
    let masses: Vec<_> = masses.into_iter().collect::<Result<_>>()?;
    let m0 = masses[0].mass;
    let spread = masses.iter().map(|m| (m.mass - m0).abs() / m0).fold(0.0, f64::max);
    let ratio = masses[2].ratio;
    outcome(
        exact < 1e-12 && spread < 0.01 && (ratio - 1.0).abs() < 0.01,
        format!(
            "prefactor(1) = {p:.6} (rel. dev. from 512 pi^2 {exact:.1e}); mollified mass {:.4} constant to {spread:.1e} over eps in {{0.1,0.05,0.025}}; mass / prefactor = {ratio:.4}",
            masses[2].mass
        ),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Result<Outcome>);

const CRITERIA: [Criterion; 12] = [
    (1, "algebra identities", Duration::from_secs(1), c1),
    (2, "Haar normalization", Duration::from_secs(1), c2),
    (3, "closure on the lattice", Duration::from_secs(5), c3),
    (4, "flatness and decomposition", Duration::from_secs(10), c4),
    (5, "lattice angles", Duration::from_secs(1), c5),
    (6, "on-shell equivalence", Duration::from_secs(60), c6),
    (7, "branch identities", Duration::from_secs(10), c7),
    (8, "model integral", Duration::from_secs(5), c8),
    (9, "closed form vs deformed quadrature", Duration::from_secs(30), c9),
    (10, "suppression slopes", Duration::from_secs(30), c10),
    (11, "degenerate amplitude", Duration::from_secs(600), c11),
    (12, "linearized delta prefactor", Duration::from_secs(30), c12),
];

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut passed = 0;
    let mut ran = 0;
    for (id, name, limit, f) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let r = f();
        let dt = t.elapsed();
        let (ok, detail) = match r {
            Ok(o) => (o.passed && dt <= limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as u32;
        let status = if ok { "PASS" } else { "FAIL" };
        println!("criterion {id:2} {status} {name}: {detail} [{:.2} s, limit {} s]", dt.as_secs_f64(), limit.as_secs());
    }
    println!("acceptance: {passed}/{ran} criteria passed");
}
