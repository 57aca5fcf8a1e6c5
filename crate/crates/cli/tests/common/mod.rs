//! Exact-arithmetic reference for the log-Christoffel function, used only by
//! tests. Doubles are dyadic rationals, so the monic recurrence
//! `P_{l+1} = (x - b_l) P_l - a_l^2 P_{l-1}` stays exact over big-integer
//! dyadics; the kernel sum is assembled over the common denominator
//! `prod a_m`, and only the final logarithm rounds.

use num::bigint::BigInt;
use num::{ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mantissa: BigInt::zero(), exponent: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mantissa: BigInt::from(1), exponent: 0 }
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exponent) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Dyadic { mantissa: BigInt::from(sign) * BigInt::from(mantissa), exponent }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Dyadic {
            mantissa: &self.mantissa * &other.mantissa,
            exponent: self.exponent + other.exponent,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        if self.is_zero() {
            return Dyadic { mantissa: -other.mantissa.clone(), exponent: other.exponent };
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << usize::try_from(self.exponent - e).unwrap();
        let b = &other.mantissa << usize::try_from(other.exponent - e).unwrap();
        Dyadic { mantissa: a - b, exponent: e }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.sub(&Dyadic { mantissa: -other.mantissa.clone(), exponent: other.exponent })
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    /// Natural log of the absolute value; the mantissa's top 64 bits carry the
    /// fractional part, everything else is an exact multiple of log 2.
    pub fn ln_abs(&self) -> f64 {
        assert!(!self.is_zero(), "log of zero");
        let m = self.mantissa.magnitude();
        let bits = m.bits();
        let (top, shift) = if bits > 64 {
            ((m >> (bits - 64)).to_u64().unwrap(), bits - 64)
        } else {
            (m.to_u64().unwrap(), 0)
        };
        (top as f64).ln() + (shift as f64 + self.exponent as f64) * std::f64::consts::LN_2
    }
}

/// `log lambda_j(x)` by exact dyadic evaluation of the kernel sum.
pub fn oracle_log_christoffel(jac: &mink_core::jacobi::JacobiMatrix, x: f64, j: usize) -> f64 {
    assert!(j >= 1 && j <= jac.size());
    let xd = Dyadic::from_f64(x);
    // suffix[l] = prod_{m=l+1}^{j-1} a_m
    let mut suffix = vec![Dyadic::one(); j];
    for l in (0..j - 1).rev() {
        suffix[l] = suffix[l + 1].mul(&Dyadic::from_f64(jac.a(l + 1)));
    }
    let denom = suffix[0].clone(); // prod_{m=1}^{j-1} a_m
    let mut p_prev = Dyadic::zero();
    let mut p = Dyadic::one();
    let mut kernel = suffix[0].square(); // (P_0 d_0)^2
    for l in 0..j - 1 {
        let b = Dyadic::from_f64(jac.b(l));
        let a_sq = if l >= 1 {
            Dyadic::from_f64(jac.a(l)).square()
        } else {
            Dyadic::zero()
        };
        let next = xd.sub(&b).mul(&p).sub(&a_sq.mul(&p_prev));
        p_prev = p;
        p = next;
        kernel = kernel.add(&p.mul(&suffix[l + 1]).square());
    }
    2.0 * denom.ln_abs() - kernel.ln_abs()
}

#[allow(dead_code)]
pub fn assert_close_rel(got: f64, want: f64, rel: f64, what: &str) {
    let scale = want.abs().max(1e-300);
    assert!(
        (got - want).abs() <= rel * scale,
        "{what}: got {got}, want {want} (rel {})",
        (got - want).abs() / scale
    );
}
