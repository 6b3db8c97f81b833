//! Correctly rounded floating-point summation (Shewchuk's partials, with the
//! half-even fix-up of the final rounding).
//!
//! The result is the exact sum of the inputs rounded once, so it does not
//! depend on the order terms were added in.

#[derive(Clone, Debug, Default)]
pub(crate) struct ExactSum {
    /// Non-overlapping, increasing magnitude.
    partials: Vec<f64>,
    /// Fallback when a non-finite term shows up.
    naive: f64,
    finite: bool,
}

impl ExactSum {
    pub(crate) fn new() -> Self {
        Self {
            partials: Vec::with_capacity(8),
            naive: 0.0,
            finite: true,
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, mut x: f64) {
        self.naive += x;
        if !x.is_finite() {
            self.finite = false;
        }
        if !self.finite {
            return;
        }
        let mut i = 0;
        for k in 0..self.partials.len() {
            let mut y = self.partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub(crate) fn value(&self) -> f64 {
        if !self.finite || !self.naive.is_finite() {
            return self.naive;
        }
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}
