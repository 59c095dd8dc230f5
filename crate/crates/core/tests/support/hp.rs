//! Double-double arithmetic (~32 significant digits) for reference values.
//!
//! Kept free of any library code so it can check `adta_factor` and the
//! multiplicative threshold rules independently.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact-to-double-double quotient of two integers.
    pub fn ratio(num: i64, den: i64) -> Self {
        let n = num as f64;
        let d = den as f64;
        let q = n / d;
        let r = (-q).mul_add(d, n);
        let (hi, lo) = quick_two_sum(q, r / d);
        Dd { hi, lo }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let p = q1 * d;
        let pe = q1.mul_add(d, -p);
        let r = (self.hi - p - pe + self.lo) / d;
        let (hi, lo) = quick_two_sum(q1, r);
        Dd { hi, lo }
    }

    /// Scales by a power of two, which is exact.
    pub fn scale(self, factor: f64) -> Dd {
        Dd {
            hi: self.hi * factor,
            lo: self.lo * factor,
        }
    }

    /// exp via argument halving, a Taylor series and repeated squaring.
    pub fn exp(self) -> Dd {
        const HALVINGS: i32 = 12;
        let y = self.scale(0.5f64.powi(HALVINGS));
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for k in 1..=24 {
            term = term.mul(y).div_f64(k as f64);
            sum = sum.add(term);
        }
        for _ in 0..HALVINGS {
            sum = sum.mul(sum);
        }
        sum
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `lambda_a * exp(gamma * (n_act - rho) / n_total)` with the sign switch on `gamma`.
pub fn literal_factor(
    n_act: usize,
    n_total: usize,
    rho: usize,
    gamma_plus: f64,
    gamma_minus: f64,
    lambda_a: f64,
) -> Dd {
    let diff = Dd::ratio(n_act as i64 - rho as i64, n_total as i64);
    let gamma = if n_act >= rho {
        gamma_plus
    } else {
        gamma_minus
    };
    Dd::from_f64(lambda_a).mul(Dd::from_f64(gamma).mul(diff).exp())
}

pub fn relative_error(got: f64, reference: Dd) -> f64 {
    let diff = Dd::from_f64(got).add(Dd {
        hi: -reference.hi,
        lo: -reference.lo,
    });
    (diff.to_f64() / reference.to_f64()).abs()
}
