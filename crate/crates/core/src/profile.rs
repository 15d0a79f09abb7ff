//! Closed-form scalar radial profiles with analytic first and second derivatives.

use crate::bessel::{entire_jet, gamma_half};
use crate::halfint::HalfInt;
use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    /// `c r^p`
    Power { c: f64, p: f64 },
    /// `c r^p e^{-a r}`
    PowerExp { c: f64, p: f64, a: f64 },
    /// `c E_ν(w, r)`, see [`crate::bessel::entire`].
    Entire { c: f64, nu: HalfInt, w: f64 },
    /// Smooth step equal to 1 on `[0, a]` and 0 on `[b, ∞)`.
    Cutoff { a: f64, b: f64 },
    /// `c exp(1 - 1/(1 - s²))` with `s = (r - center)/width`, supported in `|s| < 1`.
    Bump { c: f64, center: f64, width: f64 },
    /// `Σ_j c_j r^j`
    Polynomial(Vec<f64>),
    Sum(Vec<Profile>),
    Product(Box<Profile>, Box<Profile>),
}

/// Leading behaviour `coeff · r^exponent` as `r → 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leading {
    pub exponent: f64,
    pub coeff: f64,
}

fn smooth_psi(t: Jet) -> Jet {
    if t.v <= 0.0 {
        Jet::zero()
    } else {
        let inv = Jet::constant(1.0) / t;
        (-inv).exp()
    }
}

impl Profile {
    /// The cutoff used by the extension map: 1 on `[0, 1/4]`, 0 from `1/2`.
    pub fn ext_cutoff() -> Profile {
        Profile::Cutoff { a: 0.25, b: 0.5 }
    }

    pub fn times(self, other: Profile) -> Profile {
        Profile::Product(Box::new(self), Box::new(other))
    }

    pub fn scaled(self, s: f64) -> Profile {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Power { c, p } => Profile::Power { c: c * s, p },
            Profile::PowerExp { c, p, a } => Profile::PowerExp { c: c * s, p, a },
            Profile::Entire { c, nu, w } => Profile::Entire { c: c * s, nu, w },
            Profile::Bump { c, center, width } => Profile::Bump { c: c * s, center, width },
            Profile::Polynomial(cs) => Profile::Polynomial(cs.into_iter().map(|x| x * s).collect()),
            other => Profile::Product(Box::new(Profile::Power { c: s, p: 0.0 }), Box::new(other)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Power { c, .. } | Profile::PowerExp { c, .. } | Profile::Entire { c, .. } => *c == 0.0,
            Profile::Bump { c, .. } => *c == 0.0,
            Profile::Polynomial(cs) => cs.iter().all(|&x| x == 0.0),
            Profile::Sum(ps) => ps.iter().all(|p| p.is_zero()),
            Profile::Product(a, b) => a.is_zero() || b.is_zero(),
            Profile::Cutoff { .. } => false,
        }
    }

    /// Value and two derivatives at `r > 0`.
    pub fn jet(&self, r: f64) -> Jet {
        let x = Jet::var(r);
        match self {
            Profile::Zero => Jet::zero(),
            Profile::Power { c, p } => {
                if *p == 0.0 {
                    Jet::constant(*c)
                } else {
                    x.powf(*p).scale(*c)
                }
            }
            Profile::PowerExp { c, p, a } => (x.powf(*p) * x.scale(-a).exp()).scale(*c),
            Profile::Entire { c, nu, w } => {
                let (v, d1, d2) = entire_jet(*nu, *w, r);
                Jet::new(c * v, c * d1, c * d2)
            }
            Profile::Cutoff { a, b } => {
                let t = (Jet::constant(*b) - x).scale(1.0 / (b - a));
                if t.v >= 1.0 {
                    Jet::constant(1.0)
                } else if t.v <= 0.0 {
                    Jet::zero()
                } else {
                    let p = smooth_psi(t);
                    let q = smooth_psi(Jet::constant(1.0) - t);
                    p / (p + q)
                }
            }
            Profile::Bump { c, center, width } => {
                let s = (x - Jet::constant(*center)).scale(1.0 / width);
                if s.v.abs() >= 1.0 {
                    Jet::zero()
                } else {
                    let den = Jet::constant(1.0) - s * s;
                    (Jet::constant(1.0) - Jet::constant(1.0) / den).exp().scale(*c)
                }
            }
            Profile::Polynomial(cs) => {
                // Horner on jets
                let mut acc = Jet::zero();
                for &cj in cs.iter().rev() {
                    acc = acc * x + Jet::constant(cj);
                }
                acc
            }
            Profile::Sum(ps) => ps.iter().fold(Jet::zero(), |acc, p| acc + p.jet(r)),
            Profile::Product(a, b) => a.jet(r) * b.jet(r),
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).v
    }

    /// Leading power at the origin; `None` when the profile vanishes near 0.
    pub fn leading(&self) -> Option<Leading> {
        match self {
            Profile::Zero => None,
            Profile::Power { c, p } | Profile::PowerExp { c, p, .. } => {
                (*c != 0.0).then_some(Leading { exponent: *p, coeff: *c })
            }
            Profile::Entire { c, nu, .. } => (*c != 0.0).then(|| Leading {
                exponent: nu.value(),
                coeff: c / (2f64.powf(nu.value()) * gamma_half(nu.twice() + 2)),
            }),
            Profile::Cutoff { .. } => Some(Leading { exponent: 0.0, coeff: 1.0 }),
            Profile::Bump { c, center, width } => {
                (*c != 0.0 && center - width <= 0.0).then_some(Leading { exponent: 0.0, coeff: self.value(1e-300) })
            }
            Profile::Polynomial(cs) => cs
                .iter()
                .enumerate()
                .find(|(_, &c)| c != 0.0)
                .map(|(j, &c)| Leading { exponent: j as f64, coeff: c }),
            Profile::Sum(ps) => {
                let leads: Vec<Leading> = ps.iter().filter_map(|p| p.leading()).collect();
                let e = leads.iter().map(|l| l.exponent).fold(f64::INFINITY, f64::min);
                if !e.is_finite() {
                    return None;
                }
                let coeff: f64 = leads.iter().filter(|l| (l.exponent - e).abs() < 1e-12).map(|l| l.coeff).sum();
                Some(Leading { exponent: e, coeff })
            }
            Profile::Product(a, b) => {
                let (la, lb) = (a.leading()?, b.leading()?);
                Some(Leading { exponent: la.exponent + lb.exponent, coeff: la.coeff * lb.coeff })
            }
        }
    }

    /// Coefficient of `r^{-1/2}` at the origin; `None` if the profile is more
    /// singular than `r^{-1/2}`.
    pub fn half_residue(&self) -> Option<f64> {
        match self.leading() {
            None => Some(0.0),
            Some(l) if (l.exponent + 0.5).abs() < 1e-12 => Some(l.coeff),
            Some(l) if l.exponent > -0.5 => Some(0.0),
            Some(l) if l.coeff == 0.0 => Some(0.0),
            Some(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_shape() {
        let chi = Profile::ext_cutoff();
        assert_eq!(chi.value(0.1), 1.0);
        assert_eq!(chi.value(0.25), 1.0);
        assert_eq!(chi.value(0.6), 0.0);
        let mid = chi.value(0.375);
        assert!((mid - 0.5).abs() < 1e-14);
        // derivative by central differences
        let h = 1e-6;
        let fd = (chi.value(0.3 + h) - chi.value(0.3 - h)) / (2.0 * h);
        assert!((chi.jet(0.3).d1 - fd).abs() < 1e-6);
    }

    #[test]
    fn entire_leading_term() {
        let p = Profile::Entire { c: 1.0, nu: HalfInt::MINUS_HALF, w: 4.0 };
        let l = p.leading().unwrap();
        let r: f64 = 1e-10;
        assert!((p.value(r) - l.coeff * r.powf(l.exponent)).abs() < 1e-9 * p.value(r).abs());
        assert!((l.coeff - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn half_residue_of_products() {
        let p = Profile::PowerExp { c: 2.0, p: -0.5, a: 3.0 }.times(Profile::ext_cutoff());
        assert_eq!(p.half_residue(), Some(2.0));
        let q = Profile::Power { c: 1.0, p: -1.5 };
        assert_eq!(q.half_residue(), None);
        assert_eq!(Profile::Power { c: 1.0, p: 0.5 }.half_residue(), Some(0.0));
    }
}
