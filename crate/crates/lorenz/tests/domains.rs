use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lorenz::domains::{
    compose_t_sequence, default_sigma, dt_boundary, dt_diameter, dt_margin, f_map, in_dt, modulus_lower_bound,
    phi_alpha, product_lower_bound, root_inclusion_check, sigma_max, t_parameter, tilde_t, Flower, InnerSet, Region,
};
use lorenz::{Error, Interval};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn membership_in_hyperbolic_neighborhoods() {
    let j = Interval::new(0.0, 1.0);
    assert!(in_dt(&j, 1.0, c(0.5, 0.49)));
    assert!(!in_dt(&j, 1.0, c(0.5, 0.51)));
    assert!(in_dt(&j, 1.0, c(0.5, 0.0)));
    assert!(!in_dt(&j, 1.0, c(1.5, 0.0)));
    // Smaller t gives a larger neighborhood.
    assert!(in_dt(&j, 0.25, c(0.5, 1.9)) && !in_dt(&j, 0.25, c(0.5, 2.1)));
    assert!(in_dt(&j, 4.0, c(0.5, 0.1)) && !in_dt(&j, 4.0, c(0.5, 0.2)));
    assert_eq!(dt_diameter(&j, 0.25), 4.0);
    assert_eq!(dt_diameter(&j, 4.0), 1.0);
}

#[test]
fn boundary_samples_lie_on_the_boundary() {
    let j = Interval::new(-0.3, 1.2);
    for t in [0.2, 1.0, 3.0] {
        for z in dt_boundary(&j, t, 129) {
            if z.im != 0.0 {
                assert!(dt_margin(&j, t, z).abs() < 1e-12);
                assert!((t_parameter(&j, z) - t).abs() < 1e-10 * t.max(1.0));
            }
        }
    }
    assert!(t_parameter(&j, c(0.5, 0.0)).is_infinite());
}

#[test]
fn tilde_t_closed_form_and_limits() {
    assert!((tilde_t(0.5, 0.25).unwrap() - 0.352_941_176_470_588_2).abs() < 1e-15);
    assert!((tilde_t(0.5, 1e-8).unwrap() - 0.5).abs() < 1e-12);
    assert!(tilde_t(0.5, 0.5 - 1e-10).unwrap() < 1e-9);
    assert!(tilde_t(0.5, 0.0).is_err());
    assert!(tilde_t(2.0, 1.0).is_err());
}

#[test]
fn pullback_map_values() {
    for a in [0.1, 0.5, 0.9] {
        assert!((f_map(a, c(a, 0.0)).unwrap() - c(a, 0.0)).norm() < 1e-15);
        assert!((f_map(a, c(-a, 0.0)).unwrap() - c(-a, 0.0)).norm() < 1e-15);
        let t = 0.95;
        let w = f_map(a, c(0.0, a / t)).unwrap();
        assert!(w.re.abs() < 1e-15 && w.im > 0.0);
        let z = c(0.3, 0.4);
        assert!((f_map(a, z.conj()).unwrap() - f_map(a, z).unwrap().conj()).norm() < 1e-15);
    }
    assert!(matches!(f_map(0.5, c(0.0, 1.0)), Err(Error::Domain(_))));
    assert!(matches!(f_map(0.5, c(0.0, -1.0)), Err(Error::Domain(_))));
}

#[test]
fn composed_sequences() {
    let ts = compose_t_sequence(0.5, &[0.5]).unwrap();
    assert_eq!(ts.len(), 2);
    assert!((ts[1] - tilde_t(0.5, 0.25).unwrap()).abs() < 1e-15);
    assert_eq!(compose_t_sequence(0.4, &[0.0, 0.0]).unwrap(), vec![0.4, 0.4, 0.4]);
    assert_eq!(compose_t_sequence(0.4, &[]).unwrap(), vec![0.4]);
    assert!(matches!(compose_t_sequence(0.4, &[-0.1]), Err(Error::Domain(_))));
    assert!(compose_t_sequence(1.5, &[0.1]).is_err());
    assert!(matches!(compose_t_sequence(0.1, &[0.3]), Err(Error::Recursion { index: 0, .. })));
}

/// With `t1 >= 0.2`, lengths below `d = 0.0018` and total length at most 3,
/// each step keeps `t_{k+1} >= t_k (1 - (l/2)^{3/2})`, so the product bound
/// holds for every family.
#[test]
fn product_bound_holds_for_small_lengths() {
    let d = 0.0018;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let count = rng.gen_range(1..=4000);
        let mut lengths = Vec::with_capacity(count);
        let mut total = 0.0;
        for _ in 0..count {
            let l = rng.gen_range(0.0..d);
            if total + l > 3.0 {
                break;
            }
            total += l;
            lengths.push(l);
        }
        let t1 = rng.gen_range(0.2..1.0);
        let ts = compose_t_sequence(t1, &lengths).unwrap();
        let bound = product_lower_bound(t1, &lengths, 0.5);
        assert!(*ts.last().unwrap() >= bound - 1e-12, "t1={t1} n={}", lengths.len());
    }
}

#[test]
fn disk_automorphisms_preserve_neighborhoods() {
    let j = Interval::new(-1.0, 1.0);
    for t in [0.3, 1.0, 2.5] {
        let pts = dt_boundary(&j, t, 257);
        for s in [-0.6, 0.2, 0.9] {
            for z in pts.iter().filter(|z| z.im != 0.0) {
                let w = (z + s) / (1.0 + s * z);
                assert!(dt_margin(&j, t, w).abs() < 1e-9, "t={t} s={s} z={z}");
            }
        }
        // A contraction into J maps D_t(J) into itself.
        for z in &pts {
            assert!(dt_margin(&j, t, z / 2.0) > -1e-12);
        }
    }
}

#[test]
fn sigma_limits() {
    assert!((sigma_max(2.0) - 1.0).abs() < 1e-15);
    assert!((sigma_max(3.0) - 3f64.sqrt()).abs() < 1e-14);
    assert!((default_sigma(2.0) - 0.9).abs() < 1e-15);
}

#[test]
fn root_inclusion_examples() {
    let sigma = default_sigma(2.0);
    let rep = root_inclusion_check(0.5, 0.5, 0.25, sigma, |z| Ok(phi_alpha(2.0, z)), 1024).unwrap();
    assert!(rep.holds && rep.t_tilde > 0.0 && rep.t_tilde <= sigma && rep.margin > 0.0);
    let rep = root_inclusion_check(0.5, 0.5, 0.0, sigma, |z| Ok(phi_alpha(2.0, z)), 1024).unwrap();
    assert!(rep.holds);
    let shifted = root_inclusion_check(0.5, 0.5, 0.25, sigma, |z| Ok(phi_alpha(2.0, z) + c(5.0, 0.0)), 256).unwrap();
    assert!(!shifted.holds);
    assert!(root_inclusion_check(0.5, 0.5, 1.0, sigma, Ok, 64).is_err());
}

#[test]
fn flower_membership_and_bounds() {
    let i = Interval::new(0.0, 1.0);
    let f = Flower::symmetric(&i, 0.2, 0.5, 0.9).unwrap();
    assert!((f.k_bound() - 0.2).abs() < 1e-15);
    assert!(f.is_k_bounded(0.2) && !f.is_k_bounded(0.21));
    assert!(f.is_k1k2_bounded(1.0, 0.2, 0.2));
    assert!(f.critical_bounds(0.5).is_none());
    assert!(f.contains(c(0.5, 0.5)));
    assert!(f.contains(c(0.1, 0.05)));
    assert!(!f.contains(c(0.5, 10.0)));
    assert!(Flower::new(0.0, 0.6, 0.4, 1.0, 0.5, 0.5).is_err());
    let j = Interval::new(0.3, 0.7);
    let (t_hat, b) = f.diameter_bound(&j, 257);
    assert!(t_hat > 0.0 && b >= j.len() / i.len());
    for z in f.boundary(129).into_iter().filter(|z| z.im != 0.0) {
        let m = f.petals().iter().map(|(j, t)| dt_margin(j, *t, z)).fold(f64::NEG_INFINITY, f64::max);
        assert!(m.abs() < 1e-12, "{z} {m}");
    }
}

#[test]
fn round_annulus_moduli() {
    let unit = InnerSet::Disk { center: c(0.0, 0.0), radius: 1.0 };
    let big = Region::Disk { center: c(0.0, 0.0), radius: (2.0 * PI).exp() };
    assert!(modulus_lower_bound(&unit, &big).unwrap().bound >= 1.0 - 1e-9);
    let touching = Region::Disk { center: c(0.5, 0.0), radius: 1.5 };
    assert_eq!(modulus_lower_bound(&unit, &touching).unwrap().bound, 0.0);
    let segment = InnerSet::Points((0..=64).map(|k| c(-1.0 + k as f64 / 32.0, 0.0)).collect());
    let four = Region::Disk { center: c(0.0, 0.0), radius: 4.0 };
    assert!(modulus_lower_bound(&segment, &four).unwrap().bound >= 4f64.ln() / (2.0 * PI) - 1e-9);
    let far = InnerSet::Disk { center: c(10.0, 0.0), radius: 1.0 };
    assert!(modulus_lower_bound(&far, &four).is_err());
    // The same segment inside a polygonal neighborhood.
    let region = Region::from_dt(&Interval::new(-2.0, 2.0), 0.5, 257);
    assert!(modulus_lower_bound(&segment, &region).unwrap().bound > 0.0);
}

proptest! {
    #[test]
    fn tilde_t_is_monotone(t in 0.05f64..0.99, f1 in 0.01f64..0.98, f2 in 0.01f64..0.98, dt in 0.0f64..0.5) {
        let (a1, a2) = (t * f1.min(f2), t * f1.max(f2));
        prop_assert!(tilde_t(t, a1).unwrap() >= tilde_t(t, a2).unwrap());
        let t2 = (t + dt).min(0.999);
        prop_assert!(tilde_t(t2, a1).unwrap() >= tilde_t(t, a1).unwrap());
        prop_assert!(tilde_t(t, a1).unwrap() < t);
    }
}
