//! Directed-rounding building blocks: enclosures of real constants and
//! functions, high-precision coefficient vectors for series evaluation, tail
//! majorants, and certified evaluation of a series at a complex point.
//!
//! Every enclosure here is a pair lo <= hi of MPFR floats such that the exact
//! mathematical value lies in [lo, hi]. MPFR operations are correctly rounded
//! in a chosen direction, so pushing lower bounds down and upper bounds up at
//! every step preserves containment. Incomplete-operation values are always
//! assigned with an explicit direction in one step; completing to nearest and
//! re-rounding would be double rounding and could cross the exact value.

use rug::float::{Constant, Round};
use rug::ops::{AssignRound, Pow};
use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::rat::{int_to_rug, rat_to_rug, Rat};
use crate::sequences::GrowthCertificate;
use crate::series::TruncatedSeries;

/// Safety factor for Horner rounding-error radii. One fused step of a
/// complex Horner evaluation performs eight roundings, each bounded by an
/// ulp of a quantity no larger than the positive-coefficient majorant
/// sum a_n r^n; sixteen doubles that to also cover coefficient conversion.
const HORNER_SAFETY: u64 = 16;

/// One correctly rounded operation: evaluates the source (a constant, an
/// exact value, or an unevaluated expression) into a fresh float.
fn round_to<T>(prec: u32, src: T, rnd: Round) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = std::cmp::Ordering>,
{
    Float::with_val_round(prec, src, rnd).0
}

/// A certified real interval: the exact value lies in [lo, hi].
#[derive(Debug, Clone)]
pub struct Enclosure {
    pub lo: Float,
    pub hi: Float,
}

impl Enclosure {
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "enclosure ends out of order: {lo} > {hi}");
        Enclosure { lo, hi }
    }

    /// Singleton enclosure of a value that is exact at its precision.
    pub fn point(x: Float) -> Self {
        Enclosure {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn from_rat(prec: u32, r: &Rat) -> Self {
        let q = rat_to_rug(r);
        Enclosure::new(
            round_to(prec, &q, Round::Down),
            round_to(prec, &q, Round::Up),
        )
    }

    pub fn from_int(prec: u32, i: &Integer) -> Self {
        Enclosure::new(
            round_to(prec, i, Round::Down),
            round_to(prec, i, Round::Up),
        )
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn width(&self) -> Float {
        let prec = self.prec();
        round_to(prec, &self.hi - &self.lo, Round::Up)
    }

    pub fn contains_rat(&self, r: &Rat) -> bool {
        let q = rat_to_rug(r);
        self.lo <= q && q <= self.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        (self.lo.to_f64() + self.hi.to_f64()) / 2.0
    }

    pub fn neg(&self) -> Self {
        Enclosure {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec().max(other.prec());
        Enclosure::new(
            round_to(prec, &self.lo + &other.lo, Round::Down),
            round_to(prec, &self.hi + &other.hi, Round::Up),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        let prec = self.prec().max(other.prec());
        Enclosure::new(
            round_to(prec, &self.lo - &other.hi, Round::Down),
            round_to(prec, &self.hi - &other.lo, Round::Up),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec().max(other.prec());
        let pairs = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let down = round_to(prec, a * b, Round::Down);
            let up = round_to(prec, a * b, Round::Up);
            lo = Some(match lo {
                None => down,
                Some(cur) => cur.min(&down),
            });
            hi = Some(match hi {
                None => up,
                Some(cur) => cur.max(&up),
            });
        }
        Enclosure::new(lo.unwrap(), hi.unwrap())
    }

    /// Reciprocal of an enclosure that does not contain zero.
    pub fn recip(&self) -> Self {
        assert!(
            self.lo.is_sign_positive() && !self.lo.is_zero()
                || self.hi.is_sign_negative() && !self.hi.is_zero(),
            "reciprocal of an enclosure containing zero"
        );
        let prec = self.prec();
        Enclosure::new(
            round_to(prec, self.hi.recip_ref(), Round::Down),
            round_to(prec, self.lo.recip_ref(), Round::Up),
        )
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.recip())
    }

    /// Square root; the lower end must be non-negative.
    pub fn sqrt(&self) -> Self {
        assert!(!self.lo.is_sign_negative(), "sqrt of a negative enclosure");
        let prec = self.prec();
        Enclosure::new(
            round_to(prec, self.lo.sqrt_ref(), Round::Down),
            round_to(prec, self.hi.sqrt_ref(), Round::Up),
        )
    }

    /// Natural logarithm; the lower end must be positive.
    pub fn ln(&self) -> Self {
        assert!(
            self.lo.is_sign_positive() && !self.lo.is_zero(),
            "ln of an enclosure reaching zero"
        );
        let prec = self.prec();
        Enclosure::new(
            round_to(prec, self.lo.ln_ref(), Round::Down),
            round_to(prec, self.hi.ln_ref(), Round::Up),
        )
    }

    pub fn exp(&self) -> Self {
        let prec = self.prec();
        Enclosure::new(
            round_to(prec, self.lo.exp_ref(), Round::Down),
            round_to(prec, self.hi.exp_ref(), Round::Up),
        )
    }

    /// x^e for a positive base and exact rational exponent, via exp(e ln x).
    /// Composing monotone enclosures avoids sign case analysis.
    pub fn pow_rat(&self, e: &Rat) -> Self {
        let prec = self.prec();
        self.ln().mul(&Enclosure::from_rat(prec, e)).exp()
    }
}

/// Enclosure of pi.
pub fn pi(prec: u32) -> Enclosure {
    Enclosure::new(
        round_to(prec, Constant::Pi, Round::Down),
        round_to(prec, Constant::Pi, Round::Up),
    )
}

/// Enclosure of pi^2.
pub fn pi_squared(prec: u32) -> Enclosure {
    let p = pi(prec);
    p.mul(&p)
}

/// Enclosure of sqrt(pi^2 / (pi^2 - 6)), the limiting growth base of the
/// divisor-sum family as its certificate tightens.
pub fn eta0(prec: u32) -> Enclosure {
    let p2 = pi_squared(prec);
    let six = Enclosure::from_rat(prec, &crate::rat::rat_int(6));
    p2.div(&p2.sub(&six)).sqrt()
}

/// Complex midpoint value with components rounded to nearest.
#[derive(Debug, Clone)]
pub struct HiComplex {
    pub re: Float,
    pub im: Float,
}

impl HiComplex {
    pub fn zero(prec: u32) -> Self {
        HiComplex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    /// self * z + a with a real, the fused Horner step, each operation
    /// rounded to nearest.
    pub fn mul_add_real(&self, z: &HiComplex, a: &Float) -> Self {
        let prec = self.prec().max(z.prec()).max(a.prec());
        let t1 = round_to(prec, &self.re * &z.re, Round::Nearest);
        let t2 = round_to(prec, &self.im * &z.im, Round::Nearest);
        let t3 = round_to(prec, &self.re * &z.im, Round::Nearest);
        let t4 = round_to(prec, &self.im * &z.re, Round::Nearest);
        let re = round_to(prec, &t1 - &t2, Round::Nearest);
        let im = round_to(prec, &t3 + &t4, Round::Nearest);
        HiComplex {
            re: round_to(prec, &re + a, Round::Nearest),
            im,
        }
    }

    /// Certified upper bound of the modulus.
    pub fn abs_upper(&self) -> Float {
        let prec = self.prec();
        let rr = round_to(prec, &self.re * &self.re, Round::Up);
        let ii = round_to(prec, &self.im * &self.im, Round::Up);
        let sum = round_to(prec, &rr + &ii, Round::Up);
        round_to(prec, sum.sqrt_ref(), Round::Up)
    }

    /// Certified lower bound of the modulus (zero when rounding reaches it).
    pub fn abs_lower(&self) -> Float {
        let prec = self.prec();
        let rr = round_to(prec, &self.re * &self.re, Round::Down);
        let ii = round_to(prec, &self.im * &self.im, Round::Down);
        let sum = round_to(prec, &rr + &ii, Round::Down);
        let r = round_to(prec, sum.sqrt_ref(), Round::Down);
        if r.is_sign_negative() {
            Float::new(prec)
        } else {
            r
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

/// A series value with a certified error disc: the exact value of the full
/// (untruncated) series lies within `error_radius` of `value`.
#[derive(Debug, Clone)]
pub struct CertifiedComplexValue {
    pub value: HiComplex,
    pub error_radius: Float,
}

/// Coefficient vectors prepared for directed evaluation: `lo`/`hi` are the
/// exact coefficients rounded down/up, `f64s` are nearest doubles for
/// scouting passes. Slicing a prefix evaluates a shorter truncation of the
/// same series.
pub struct HpSeries {
    pub prec: u32,
    pub lo: Vec<Float>,
    pub hi: Vec<Float>,
    pub f64s: Vec<f64>,
}

impl HpSeries {
    pub fn from_rats(prec: u32, coeffs: &[Rat]) -> Self {
        let mut lo = Vec::with_capacity(coeffs.len());
        let mut hi = Vec::with_capacity(coeffs.len());
        let mut f64s = Vec::with_capacity(coeffs.len());
        for c in coeffs {
            let q = rat_to_rug(c);
            let down = round_to(prec, &q, Round::Down);
            f64s.push(down.to_f64());
            lo.push(down);
            hi.push(round_to(prec, &q, Round::Up));
        }
        HpSeries { prec, lo, hi, f64s }
    }

    pub fn from_series(prec: u32, f: &TruncatedSeries) -> Self {
        Self::from_rats(prec, f.coeffs())
    }

    pub fn order(&self) -> usize {
        self.lo.len() - 1
    }
}

/// Horner sweep with one rounding direction. With non-negative coefficients
/// and r >= 0 every intermediate is non-negative, so rounding every
/// operation down (up) yields a certified lower (upper) bound of the
/// truncated sum.
pub fn horner_directed(coeffs: &[Float], r: &Float, prec: u32, rnd: Round) -> Float {
    let mut acc = Float::new(prec);
    for c in coeffs.iter().rev() {
        acc = round_to(prec, &acc * r, rnd);
        acc = round_to(prec, &acc + c, rnd);
    }
    acc
}

/// Enclosure of the truncated sum through index `upto` at exact dyadic
/// r in [0, 1).
pub fn eval_truncated(hp: &HpSeries, upto: usize, r: &Float) -> Enclosure {
    Enclosure::new(
        horner_directed(&hp.lo[..=upto], r, hp.prec, Round::Down),
        horner_directed(&hp.hi[..=upto], r, hp.prec, Round::Up),
    )
}

/// Plain f64 Horner for scouting.
pub fn horner_f64(coeffs: &[f64], r: f64) -> f64 {
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * r + c;
    }
    acc
}

/// Upper bound, rounded up, of the j-th derivative of r^p/(1-r) at
/// r = r_up < 1. By the Leibniz rule this is the positive sum over s of
/// C(j,s) * p!/(p-s)! * r^(p-s) * (j-s)! / (1-r)^(j-s+1), so rounding every
/// factor up bounds the true value.
fn geom_tail_deriv_up(prec: u32, r_up: &Float, p: u64, j: u32) -> Float {
    let one_minus_r_down = round_to(prec, 1u32 - r_up, Round::Down);
    assert!(
        one_minus_r_down.is_sign_positive() && !one_minus_r_down.is_zero(),
        "tail majorant needs r < 1"
    );
    let mut total = Float::new(prec);
    for s in 0..=j.min(p as u32) {
        let mut scale = crate::rat::binomial(j as u64, s as u64);
        for t in 0..s as u64 {
            scale *= crate::rat::Int::from(p - t);
        }
        scale *= crate::rat::factorial((j - s) as u64);
        let r_pow = round_to(prec, r_up.pow((p - s as u64) as u32), Round::Up);
        let denom_down = round_to(prec, (&one_minus_r_down).pow(j - s + 1), Round::Down);
        let inv_up = round_to(prec, denom_down.recip_ref(), Round::Up);
        let term = round_to(prec, &r_pow * &inv_up, Round::Up);
        let scaled = round_to(prec, &term * &round_to(prec, &int_to_rug(&scale), Round::Up), Round::Up);
        total = round_to(prec, &total + &scaled, Round::Up);
    }
    total
}

/// Upper bound on the tail of the i-th derivative of f past truncation N at
/// 0 <= r < 1: sum over t > N of a_t * t!/(t-i)! * r^(t-i).
///
/// The growth certificate gives a_t <= C + D (t+1)^alpha <= C + D (t+1).
/// Using it for the whole tail assumes the bound persists beyond
/// `verified_up_to`; that holds for the built-in families and is the
/// caller's responsibility for custom input.
pub fn tail_majorant_up(
    prec: u32,
    cert: &GrowthCertificate,
    n_trunc: usize,
    r_up: &Float,
    i: u32,
) -> Float {
    let c_up = round_to(prec, &rat_to_rug(&cert.c), Round::Up);
    let d_up = round_to(prec, &rat_to_rug(&cert.d), Round::Up);
    let h = geom_tail_deriv_up(prec, r_up, n_trunc as u64 + 1, i);
    let mut total = round_to(prec, &c_up * &h, Round::Up);
    if !d_up.is_zero() {
        let g = geom_tail_deriv_up(prec, r_up, n_trunc as u64 + 2, i + 1);
        let dg = round_to(prec, &d_up * &g, Round::Up);
        total = round_to(prec, &total + &dg, Round::Up);
    }
    total
}

/// f64 scouting version of the tail majorant (same closed form).
pub fn tail_majorant_f64(c: f64, d: f64, n_trunc: usize, r: f64, i: u32) -> f64 {
    let h = geom_tail_deriv_f64(r, n_trunc as u64 + 1, i);
    if d == 0.0 {
        c * h
    } else {
        c * h + d * geom_tail_deriv_f64(r, n_trunc as u64 + 2, i + 1)
    }
}

fn geom_tail_deriv_f64(r: f64, p: u64, j: u32) -> f64 {
    let mut total = 0.0f64;
    for s in 0..=j.min(p as u32) {
        let mut scale = 1.0f64;
        for b in 0..s {
            scale *= (j - b) as f64 / (b as f64 + 1.0);
        }
        for t in 0..s as u64 {
            scale *= (p - t) as f64;
        }
        for t in 1..=(j - s) as u64 {
            scale *= t as f64;
        }
        // r^(p-s) through logarithms so huge p cannot underflow to zero
        // prematurely inside the product.
        let ln_term = (p - s as u64) as f64 * r.ln() - (j - s + 1) as f64 * (1.0 - r).ln();
        total += scale * ln_term.exp();
    }
    total
}

/// Smallest truncation order (searched by doubling) whose tail majorant at
/// radius r falls below `target`, or None if 2^26 terms do not suffice.
pub fn choose_truncation(c: f64, d: f64, r: f64, i: u32, target: f64) -> Option<usize> {
    let mut n = 64usize;
    while n <= (1 << 26) {
        if tail_majorant_f64(c, d, n, r, i) < target {
            return Some(n);
        }
        n *= 2;
    }
    None
}

/// Certified evaluation of the full series at a complex rational point
/// inside the unit disc: returns a midpoint value and a radius covering both
/// the truncation tail (from the growth certificate) and all rounding error.
///
/// With `abs_tol` set, fails early when the certified radius cannot meet it,
/// estimating the truncation order that would.
pub fn eval_complex(
    f: &TruncatedSeries,
    z_re: &Rat,
    z_im: &Rat,
    cert: &GrowthCertificate,
    bits: u32,
    abs_tol: Option<f64>,
) -> Result<CertifiedComplexValue> {
    let prec = bits.max(32);
    let n = f.truncation_order();

    // |z| as an exact rational square, then an upper float bound.
    let norm2 = z_re * z_re + z_im * z_im;
    let mut r_up = round_to(prec, &rat_to_rug(&norm2), Round::Up);
    r_up.sqrt_round(Round::Up);
    if r_up >= 1u32 {
        return Err(Error::Domain(format!(
            "evaluation point has |z| >= 1 (|z|^2 = {norm2}); the series tail does not converge there"
        )));
    }

    let tail = tail_majorant_up(prec, cert, n, &r_up, 0);
    if let Some(tol) = abs_tol {
        if tail.to_f64() > tol / 2.0 {
            let required =
                choose_truncation(cert.c_f64(), cert.d_f64(), r_up.to_f64(), 0, tol / 2.0)
                    .unwrap_or(0);
            return Err(Error::Precision {
                what: format!(
                    "truncation tail {:.3e} exceeds half of tolerance {tol:.3e} at |z| <= {:.6}",
                    tail.to_f64(),
                    r_up.to_f64()
                ),
                required_n: required,
            });
        }
    }

    // Nearest-rounded Horner at the midpoint.
    let z = HiComplex {
        re: round_to(prec, &rat_to_rug(z_re), Round::Nearest),
        im: round_to(prec, &rat_to_rug(z_im), Round::Nearest),
    };
    let mut acc = HiComplex::zero(prec);
    for c in f.coeffs().iter().rev() {
        let coeff = round_to(prec, &rat_to_rug(c), Round::Nearest);
        acc = acc.mul_add_real(&z, &coeff);
    }

    // Rounding radius: HORNER_SAFETY * (N+1) ulps of the positive majorant
    // sum a_n r^n (coefficients rounded up, radius rounded up).
    let hi_coeffs: Vec<Float> = f
        .coeffs()
        .iter()
        .map(|c| round_to(prec, &rat_to_rug(c), Round::Up))
        .collect();
    let s_up = horner_directed(&hi_coeffs, &r_up, prec, Round::Up);
    let ulp_scale = Float::with_val(prec, HORNER_SAFETY * (n as u64 + 1)) >> prec;
    let rounding = round_to(prec, &ulp_scale * &s_up, Round::Up);
    let radius = round_to(prec, &tail + &rounding, Round::Up);

    if let Some(tol) = abs_tol {
        if radius.to_f64() > tol {
            return Err(Error::Precision {
                what: format!(
                    "certified radius {:.3e} exceeds tolerance {tol:.3e}; rounding dominates, raise the precision",
                    radius.to_f64()
                ),
                required_n: n,
            });
        }
    }

    Ok(CertifiedComplexValue {
        value: acc,
        error_radius: radius,
    })
}
