//! Complex elementary functions with explicit branch handling.
//!
//! All functions use the principal branch with the cut of `sqrt` on the
//! negative real axis and `Re sqrt(z) >= 0`. Signed zeros are normalized so
//! that a value lying exactly on a cut is read from above.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Replace `-0.0` components by `+0.0`.
pub fn clean(z: C64) -> C64 {
    C64::new(z.re + 0.0, z.im + 0.0)
}

/// Principal square root, `Re >= 0`, negative reals map to `+i sqrt|x|`.
pub fn sqrt(z: C64) -> C64 {
    clean(z).sqrt()
}

/// Principal square root after dropping a rounding-level imaginary part,
/// so that values on the negative axis do not jump across the cut.
pub fn sqrt_snap(z: C64) -> C64 {
    let mut q = z;
    if q.im.abs() <= 1e-12 * q.norm() {
        q.im = 0.0;
    }
    sqrt(q)
}

/// Principal logarithm.
pub fn ln(z: C64) -> C64 {
    clean(z).ln()
}

/// Which side of a branch cut a value on the cut belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutSide {
    Above,
    Below,
}

impl CutSide {
    pub fn sign(self) -> f64 {
        match self {
            CutSide::Above => 1.0,
            CutSide::Below => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            CutSide::Below
        } else {
            CutSide::Above
        }
    }
}

/// True when `z` lies exactly on a cut of `asin`.
pub fn on_asin_cut(z: C64) -> bool {
    z.im == 0.0 && z.re.abs() > 1.0
}

/// Principal arcsine, values on the cut read from above.
pub fn asin(z: C64) -> C64 {
    if on_asin_cut(z) {
        return asin_limit(z.re, CutSide::Above);
    }
    let z = clean(z);
    -I * ln(I * z + sqrt(ONE - z * z))
}

/// Principal arccosine.
pub fn acos(z: C64) -> C64 {
    re(FRAC_PI_2) - asin(z)
}

/// `asin(x +- i0)` for real `|x| > 1`.
pub fn asin_limit(x: f64, side: CutSide) -> C64 {
    C64::new(x.signum() * FRAC_PI_2, side.sign() * x.abs().acosh())
}

/// Arcsine continued analytically across the real cuts from `side`.
///
/// Agrees with the principal branch on `side` of the cut and on `|Re z| <= 1`;
/// on the opposite side it returns the continuation, so the function is
/// holomorphic in a neighbourhood of every point of the cut.
pub fn asin_from(z: C64, side: CutSide) -> C64 {
    if z.re.abs() <= 1.0 {
        return asin(z);
    }
    if z.im == 0.0 {
        return asin_limit(z.re, side);
    }
    let p = asin(z);
    let crossed = (z.im > 0.0) != (side == CutSide::Above);
    if !crossed {
        p
    } else if z.re > 0.0 {
        re(PI) - p
    } else {
        re(-PI) - p
    }
}

/// Branch-resolved arcsine `k pi + (-1)^k asin(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcsinBranch {
    pub k: i32,
    pub side: Option<CutSide>,
}

impl ArcsinBranch {
    pub const PRINCIPAL: ArcsinBranch = ArcsinBranch { k: 0, side: None };

    pub fn new(k: i32, side: Option<CutSide>) -> Self {
        ArcsinBranch { k, side }
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let a = match self.side {
            Some(s) => asin_from(z, s),
            None => {
                if on_asin_cut(z) {
                    return Err(Error::Branch(format!(
                        "arcsin argument {z} lies on the cut and no side is given"
                    )));
                }
                asin(z)
            }
        };
        let sign = if self.k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Ok(re(self.k as f64 * PI) + a * sign)
    }

    /// Derivative of `eval` with respect to `z`.
    pub fn derivative(&self, z: C64) -> C64 {
        let sign = if self.k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let mut d = ONE / sqrt(ONE - z * z);
        // the continuation across a cut flips the sign of the principal root
        if let Some(s) = self.side {
            if z.re.abs() > 1.0 && z.im != 0.0 && ((z.im > 0.0) != (s == CutSide::Above)) {
                d = -d;
            }
            if z.re.abs() > 1.0 && z.im == 0.0 {
                d = C64::new(0.0, s.sign() * z.re.signum()) / (z.re * z.re - 1.0).sqrt();
            }
        }
        d * sign
    }

    /// Find the branch reproducing `target` at `z`, searching `k` in -2..=3
    /// and both cut sides. Returns the best branch and its mismatch.
    pub fn resolve(z: C64, target: C64, side_hint: Option<CutSide>) -> (ArcsinBranch, f64) {
        let sides: Vec<Option<CutSide>> = match side_hint {
            Some(s) => vec![Some(s)],
            None => vec![Some(CutSide::Above), Some(CutSide::Below)],
        };
        let mut best = (ArcsinBranch::PRINCIPAL, f64::INFINITY);
        for k in -2..=3 {
            for s in &sides {
                let b = ArcsinBranch::new(k, *s);
                if let Ok(v) = b.eval(z) {
                    let d = (v - target).norm();
                    if d < best.1 {
                        best = (b, d);
                    }
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_on_negative_axis_reads_from_above() {
        let r = sqrt(C64::new(-4.0, -0.0));
        assert!((r - C64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn asin_matches_reference_values() {
        let a = asin(re(0.5));
        assert!((a.re - PI / 6.0).abs() < 1e-15 && a.im.abs() < 1e-15);
        let b = asin(re(2.0));
        assert!((b - C64::new(FRAC_PI_2, 1.3169578969248166)).norm() < 1e-14);
        let z = C64::new(0.3, -0.7);
        assert!((asin(z).sin() - z).norm() < 1e-14);
    }

    #[test]
    fn continuation_is_continuous_across_cut() {
        let above = asin_from(C64::new(1.7, 1e-12), CutSide::Above);
        let below = asin_from(C64::new(1.7, -1e-12), CutSide::Above);
        assert!((above - below).norm() < 1e-10);
        let above = asin_from(C64::new(-1.7, 1e-12), CutSide::Below);
        let below = asin_from(C64::new(-1.7, -1e-12), CutSide::Below);
        assert!((above - below).norm() < 1e-10);
    }

    #[test]
    fn branch_derivative_matches_difference() {
        for (z, b) in [
            (C64::new(0.2, 0.1), ArcsinBranch::new(1, None)),
            (C64::new(1.5, 0.0), ArcsinBranch::new(0, Some(CutSide::Below))),
            (C64::new(-2.5, 1e-3), ArcsinBranch::new(2, Some(CutSide::Below))),
        ] {
            let h = 1e-6;
            let fd = (b.eval(z + h).unwrap() - b.eval(z - h).unwrap()) / (2.0 * h);
            assert!((fd - b.derivative(z)).norm() < 1e-6, "{z} {fd} {}", b.derivative(z));
        }
    }

    #[test]
    fn unresolved_cut_is_an_error() {
        assert!(ArcsinBranch::PRINCIPAL.eval(re(3.0)).is_err());
    }
}
