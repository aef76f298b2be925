//! Named invariant checks with default tolerances.

use crate::action::{bianchi_check, decompose_total, regge_total, BisimplexConnections};
use crate::algebra::{haar_total_mass, sample_haar, sigma_identities_check, Chirality};
use crate::cx;
use crate::geometry::bilinear_identity_defect;
use crate::lattice::{Lattice, LatticeConfig};
use crate::pathint::{bessel_k0, bessel_k01_fast, bessel_k1, bessel_ki1, model_integral};
use crate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Outcome of one check: `passed` iff `value <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub error: Option<String>,
}

type Check = (&'static str, f64, fn() -> Result<f64>);

fn sigma() -> Result<f64> {
    Ok(sigma_identities_check().max())
}

fn bilinear() -> Result<f64> {
    Ok(bilinear_identity_defect(1000, 7))
}

fn haar() -> Result<f64> {
    Ok((haar_total_mass() - 1.0).abs())
}

fn closure() -> Result<f64> {
    Lattice::build(&LatticeConfig::default())?.closure_defect()
}

fn bianchi() -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut c = BisimplexConnections::identity();
    for i in 0..5 {
        for ch in Chirality::BOTH {
            c.set(i, ch, sample_haar(&mut rng));
        }
    }
    Ok(bianchi_check(&c))
}

fn flat_action() -> Result<f64> {
    Ok(regge_total(&Lattice::build(&LatticeConfig::default())?)?.norm())
}

fn decomposition() -> Result<f64> {
    let mut lat = Lattice::build(&LatticeConfig::default())?;
    lat.perturb_lengths(0.02, 3);
    Ok((regge_total(&lat)? - decompose_total(&lat)?).norm())
}

fn bessel_routes() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for z in [cx::c(0.5, 0.3), cx::re(1.0), cx::c(3.0, -1.0), cx::re(8.0)] {
        let (k0, k1) = bessel_k01_fast(z);
        worst = worst.max((k0 - bessel_k0(z)?).norm() / k0.norm());
        worst = worst.max((k1 - bessel_k1(z)?).norm() / k1.norm());
    }
    Ok(worst)
}

fn ki1_derivative() -> Result<f64> {
    let (l, h) = (1.3, 1e-4);
    let d = (bessel_ki1(cx::re(l + h))? - bessel_ki1(cx::re(l - h))?) / (2.0 * h);
    Ok((d + bessel_k0(cx::re(l))?).norm())
}

fn model() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in [1.0, 5.0, 10.0] {
        let m = model_integral(a)?;
        worst = worst.max((m - 2.0 * bessel_k0(cx::re(a))?.re).abs() / m);
    }
    Ok(worst)
}

pub const CHECKS: [Check; 10] = [
    ("algebra.sigma_identities", 1e-12, sigma),
    ("algebra.bilinear_identity", 1e-10, bilinear),
    ("algebra.haar_normalization", 1e-10, haar),
    ("lattice.closure", 1e-12, closure),
    ("action.bianchi", 1e-10, bianchi),
    ("action.flat_lattice_zero", 1e-8, flat_action),
    ("action.decomposition_identity", 1e-10, decomposition),
    ("pathint.bessel_routes", 1e-10, bessel_routes),
    ("pathint.ki1_derivative", 1e-6, ki1_derivative),
    ("pathint.model_integral", 1e-8, model),
];

/// Run every check; `tolerance` replaces all default tolerances.
pub fn run_selftest(tolerance: Option<f64>) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, default, f)| {
            let tol = tolerance.unwrap_or(*default);
            match f() {
                Ok(v) => CheckResult {
                    name: name.to_string(),
                    value: v,
                    tolerance: tol,
                    passed: v <= tol,
                    error: None,
                },
                Err(e) => CheckResult {
                    name: name.to_string(),
                    value: f64::NAN,
                    tolerance: tol,
                    passed: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
