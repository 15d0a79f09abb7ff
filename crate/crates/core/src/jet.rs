//! Second-order forward-mode jets `(f, f', f'')` for closed-form radial profiles.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet { v, d1, d2 }
    }

    pub fn constant(v: f64) -> Self {
        Jet { v, d1: 0.0, d2: 0.0 }
    }

    pub fn var(x: f64) -> Self {
        Jet { v: x, d1: 1.0, d2: 0.0 }
    }

    pub fn zero() -> Self {
        Jet::constant(0.0)
    }

    /// Chain rule for `g ∘ self` given `(g, g', g'')` at `self.v`.
    pub fn compose(self, g: f64, dg: f64, ddg: f64) -> Jet {
        Jet { v: g, d1: dg * self.d1, d2: ddg * self.d1 * self.d1 + dg * self.d2 }
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn powf(self, p: f64) -> Jet {
        let x = self.v;
        self.compose(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    pub fn powi(self, n: i32) -> Jet {
        let x = self.v;
        let nf = n as f64;
        let d1 = if n == 0 { 0.0 } else { nf * x.powi(n - 1) };
        let d2 = if n < 2 && n >= 0 { 0.0 } else { nf * (nf - 1.0) * x.powi(n - 2) };
        self.compose(x.powi(n), d1, d2)
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn scale(self, a: f64) -> Jet {
        Jet { v: a * self.v, d1: a * self.d1, d2: a * self.d2 }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = o.compose(1.0 / o.v, -1.0 / (o.v * o.v), 2.0 / (o.v * o.v * o.v));
        self * inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_matches_closed_form() {
        let x = 0.7;
        let r = Jet::var(x);
        let f = r.powf(-0.5) * r.scale(3.0).cos();
        let fd = |y: f64| y.powf(-0.5) * (3.0 * y).cos();
        let h = 1e-4;
        assert!((f.v - fd(x)).abs() < 1e-15);
        assert!((f.d1 - (fd(x + h) - fd(x - h)) / (2.0 * h)).abs() < 1e-6);
        assert!((f.d2 - (fd(x + h) - 2.0 * fd(x) + fd(x - h)) / (h * h)).abs() < 1e-4);
    }
}
