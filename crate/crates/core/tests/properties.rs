use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use symreeb::linalg::{rotation, LineFrame};
use symreeb::maslov::{cz_index, rs_index};
use symreeb::paths::{LagrangianPath, SymplecticPath};
use symreeb::reeb::{rho, Surface};
use symreeb::spectral::{boundary_spectrum, periodic_spectrum, Problem, SymmetricLoop};
use symreeb::HalfInt;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn half_int_serde_round_trip(twice in -10_000i64..10_000) {
        let h = HalfInt::from_twice(twice);
        let text = serde_json::to_string(&h).unwrap();
        let back: HalfInt = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(h, back);
        prop_assert!(h.den() == 1 || h.den() == 2);
    }

    #[test]
    fn half_int_arithmetic(a in -500i64..500, b in -500i64..500) {
        let (x, y) = (HalfInt::from_twice(a), HalfInt::from_twice(b));
        prop_assert_eq!((x + y).twice(), a + b);
        prop_assert_eq!((x - y) + y, x);
        prop_assert_eq!((x * 2).twice(), 2 * a);
    }

    #[test]
    fn rotation_cz_formula(k in 0i64..4, frac in 0.02f64..0.98) {
        let c = 2.0 * PI * (k as f64 + frac);
        let (mu, _) = cz_index(&SymplecticPath::rotation(c, 1.0)).unwrap();
        prop_assert_eq!(mu, HalfInt::from_int(2 * k + 1));
    }

    #[test]
    fn reversal_negates(a in 0.1f64..3.0, len in 0.2f64..2.5) {
        let col = *LineFrame::real().columns();
        let path = LagrangianPath::new(len, move |t| rotation(a + t) * col);
        if let (Ok((fwd, _)), Ok((back, _))) = (rs_index(&path, &LineFrame::real()), rs_index(&path.reversed(), &LineFrame::real())) {
            prop_assert_eq!(fwd, -back);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn windings_are_monotone(seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let s = SymmetricLoop::random_symmetric(&mut rng, 3, 2.0, 1.0);
        let p = periodic_spectrum(&s, (-12.0, 12.0)).unwrap();
        prop_assert!(p.windings_monotone());
        prop_assert!(p.entries.windows(2).all(|w| w[0].lambda < w[1].lambda));
        for bc in [Problem::BcI, Problem::BcMinusI] {
            let b = boundary_spectrum(&s.half(), bc, (-12.0, 12.0)).unwrap();
            prop_assert!(b.windings_monotone());
            prop_assert!(b.entries.iter().all(|e| e.multiplicity == 1));
        }
    }

    #[test]
    fn flow_stays_on_surface_and_is_reversible(x in prop::array::uniform4(-1.0f64..1.0), t in -3.0f64..3.0) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 0.01);
        let s = Surface::perturbed_ellipsoid(1.0, 1.3, 0.05).unwrap();
        let p = s.project(&nalgebra::Vector4::from(x)).unwrap();
        let q = s.flow(&p, t).unwrap();
        prop_assert!((s.f(&q) - 1.0).abs() < 1e-9);
        let back = s.flow(&rho(&q), t).unwrap();
        prop_assert!((back - rho(&p)).norm() < 1e-7);
    }
}
