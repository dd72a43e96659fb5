//! Error-free transformations and compensated accumulation for the level sums.
//!
//! Each pole term `c / (ω_i ∓ ω)` is formed as an unevaluated pair `hi + lo`
//! whose rounding error is O(ε²), and the pairs are accumulated with
//! Neumaier's variant of Kahan summation. Sums that nearly cancel (close to a
//! zero of the amplitude) therefore keep full relative accuracy.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2` (approximately).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct TwoFloat {
    pub hi: f64,
    pub lo: f64,
}

impl TwoFloat {
    pub fn exact_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        TwoFloat { hi, lo }
    }

    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let (hi, lo) = fast_two_sum(s, e + self.lo);
        TwoFloat { hi, lo }
    }

    pub fn add(self, other: TwoFloat) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (hi, lo) = fast_two_sum(s, e + self.lo + other.lo);
        TwoFloat { hi, lo }
    }

}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

// Veltkamp splitting; avoids depending on a hardware fma.
#[inline]
fn split(a: f64) -> (f64, f64) {
    const FACTOR: f64 = 134_217_729.0; // 2^27 + 1
    let c = FACTOR * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

/// `num / den` to roughly double-double accuracy.
#[inline]
pub(crate) fn quotient(num: f64, den: TwoFloat) -> TwoFloat {
    let q = num / den.hi;
    let (p, e) = two_product(q, den.hi);
    // num - q*den.hi, exact up to O(ε²) since p ≈ num.
    let r = (num - p) - e;
    let lo = (r - q * den.lo) / den.hi;
    TwoFloat { hi: q, lo }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn add_pair(&mut self, x: TwoFloat) {
        self.add(x.hi);
        self.add(x.lo);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
