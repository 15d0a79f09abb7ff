use proptest::prelude::*;
use ramified_dirac::bessel::{entire, spherical_bessel, Kind};
use ramified_dirac::HalfInt;

// Reference values computed with mpmath at 40 significant digits.
const ORACLE: &[(Kind, i64, f64, f64)] = &[
    (Kind::J, 1, 0.3, 0.430493517328124565),
    (Kind::J, 1, 7.5, 0.273282774005506015),
    (Kind::J, 5, 2.25, 0.276904265727935458),
    (Kind::J, 21, 3.0, 4.87285486442081132e-6),
    (Kind::J, 41, 12.0, 0.000141331611631545787),
    (Kind::J, 41, 150.0, 0.0372663480971561991),
    (Kind::J, -1, 4.0, -0.260766076677178815),
    (Kind::J, -7, 0.8, -27.905223342136528),
    (Kind::J, -41, 30.0, 0.157667995983017188),
    (Kind::J, 3, 1.0e-6, 2.65961520267595189e-10),
    (Kind::J, 9, 900.0, 0.0265558297600818383),
    (Kind::Y, 1, 2.0, 0.234785710406248469),
    (Kind::Y, -3, 5.5, 0.284746335719308996),
    (Kind::Y, 7, 0.5, -138.864008672424884),
    (Kind::Y, 41, 25.0, 0.175662207758980044),
    (Kind::I, 1, 0.01, 0.0797897858945369275),
    (Kind::I, 3, 40.0, 14476512910296415.3),
    (Kind::I, 11, 3.5, 0.11915607816210579),
    (Kind::I, 41, 10.0, 0.0000598371872716290222),
    (Kind::I, -5, 2.0, 0.645180040677282534),
    (Kind::I, -1, 1.0e-7, 2523.13252202017266),
    (Kind::I, 7, 600.0, 6.08382936436216501e+258),
    (Kind::K, 1, 1.0, 0.461068504447894558),
    (Kind::K, 5, 0.2, 208.798529921661213),
    (Kind::K, 41, 30.0, 1.68138914976234312e-11),
    (Kind::K, -9, 4.0, 0.0959906024160853219),
    (Kind::K, 3, 100.0, 4.70904805076101834e-45),
];

#[test]
fn matches_high_precision_reference() {
    for &(kind, t, x, want) in ORACLE {
        let got = spherical_bessel(kind, HalfInt::from_twice(t).unwrap(), x).unwrap();
        let rel = ((got - want) / want).abs();
        assert!(rel < 1e-12, "{kind:?} order {t}/2 at {x}: got {got:e}, want {want:e}, rel {rel:e}");
    }
}

#[test]
fn negative_argument_is_rejected() {
    assert!(spherical_bessel(Kind::I, HalfInt::HALF, -1.0).is_err());
}

proptest! {
    #[test]
    fn three_term_recurrence(x in 0.05f64..200.0, n in 1i64..18) {
        let nu = n as f64 + 0.5;
        let j = |t: i64| spherical_bessel(Kind::J, HalfInt::from_twice(t).unwrap(), x).unwrap();
        let (a, b, c) = (j(2 * n - 1), j(2 * n + 1), j(2 * n + 3));
        let scale = a.abs().max(b.abs()).max(c.abs());
        prop_assert!((a + c - 2.0 * nu / x * b).abs() <= 1e-10 * scale);
    }

    #[test]
    fn entire_ladder_identity(w in -400.0f64..400.0, r in 0.01f64..1.0, n in 0i64..6) {
        // (∂ - ν/r) E_ν = -w E_{ν+1}, checked by central differences
        let nu = HalfInt::from_twice(2 * n - 1).unwrap();
        let h = 1e-5 * r;
        let d = (entire(nu, w, r + h) - entire(nu, w, r - h)) / (2.0 * h);
        let lhs = d - nu.value() / r * entire(nu, w, r);
        let rhs = -w * entire(nu.shift(1), w, r);
        let scale = entire(nu, w, r).abs() / r + rhs.abs() + 1e-300;
        prop_assert!((lhs - rhs).abs() <= 1e-6 * scale, "{} vs {}", lhs, rhs);
    }
}
