mod common;

use common::*;
use fbcmc::energy::{first_variation, penalized_dirichlet, swept_volume_step, HomotopyPath};
use fbcmc::solver::init::{contraction_path, perturbed, random_field};
use fbcmc::surface::tangent_frame;
use fbcmc::{EnergyParams, ImplicitSurface, Vec3};
use proptest::prelude::*;

fn ellipsoid() -> ImplicitSurface {
    ImplicitSurface::ellipsoid(Vec3::new(0.2, -0.1, 0.05), Vec3::new(1.3, 0.9, 1.1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn closest_point_lands_on_surface_and_is_idempotent(
        x in -3.0..3.0f64, y in -3.0..3.0f64, z in -3.0..3.0f64,
    ) {
        let s = ellipsoid();
        let p = Vec3::new(x, y, z);
        prop_assume!(s.to_unit(&p).norm() > 0.3);
        let q = s.closest_point(&p).unwrap();
        prop_assert!(s.level(&q).abs() < 1e-10);
        prop_assert!((s.closest_point(&q).unwrap() - q).norm() < 1e-10);
        let n = s.outward_normal(&q);
        let d = p - q;
        prop_assert!((d - n * n.dot(&d)).norm() < 1e-8 * (1.0 + d.norm()));
    }

    #[test]
    fn tangent_frames_are_orthonormal(th in 0.0..std::f64::consts::PI, ph in 0.0..std::f64::consts::TAU) {
        let n = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
        let (a, b) = tangent_frame(&n, Some(&Vec3::new(1.0, 0.2, -0.3)));
        prop_assert!((a.norm() - 1.0).abs() < 1e-12 && (b.norm() - 1.0).abs() < 1e-12);
        prop_assert!(a.dot(&b).abs() < 1e-12 && a.dot(&n).abs() < 1e-12 && b.dot(&n).abs() < 1e-12);
        prop_assert!((a.cross(&b) - n).norm() < 1e-12);
    }

    #[test]
    fn penalized_energy_is_monotone_in_eps(seed in 0u64..1000, e1 in 0.0..1.0f64, e2 in 0.0..1.0f64) {
        let u = random_map(1, seed);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(penalized_dirichlet(&u, lo, 2.2) <= penalized_dirichlet(&u, hi, 2.2));
    }

    #[test]
    fn first_variation_is_linear(seed in 0u64..1000, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let params = EnergyParams::unit_ball(0.8).with_eps(0.2);
        let u = random_map(1, seed);
        let psi = random_field(&u, &params.surface, seed + 1);
        let phi = random_field(&u, &params.surface, seed + 2);
        let mix: Vec<Vec3> = psi.iter().zip(&phi).map(|(p, q)| p * a + q * b).collect();
        let lhs = first_variation(&u, &params, &mix).unwrap();
        let rhs = a * first_variation(&u, &params, &psi).unwrap() + b * first_variation(&u, &params, &phi).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn swept_volume_is_antisymmetric_and_additive(seed in 0u64..1000) {
        let params = prescribed(1.0, 0.0);
        let u = random_map(2, seed);
        let v = perturbed(&u, &params.surface, 0.03, seed + 1).unwrap();
        let w = perturbed(&v, &params.surface, 0.03, seed + 2).unwrap();
        let uv = swept_volume_step(&u, &v, &params).unwrap();
        let vu = swept_volume_step(&v, &u, &params).unwrap();
        prop_assert!((uv + vu).abs() < 1e-12);
        let uw = swept_volume_step(&u, &w, &params).unwrap();
        let vw = swept_volume_step(&v, &w, &params).unwrap();
        prop_assert!((uw - uv - vw).abs() < 1e-11, "{} vs {}", uw, uv + vw);
    }

    /// Two homotopies from the same constant to `u` that stay close to each
    /// other enclose the same volume: the value depends on the endpoint only.
    #[test]
    fn volume_is_well_defined_for_nearby_paths(seed in 0u64..1000) {
        let params = EnergyParams::unit_ball(1.0);
        let u = random_map(2, seed);
        let q = Vec3::new(0.0, 0.0, 1.0);
        let p1 = contraction_path(&u, &params, &q, 0.1).unwrap();
        let mut beads = p1.beads.clone();
        let n = beads.len();
        for (k, b) in beads.iter_mut().enumerate().skip(1).take(n - 2) {
            *b = perturbed(b, &params.surface, 0.01, seed * 1000 + k as u64).unwrap();
        }
        let p2 = HomotopyPath::new(beads, &params, 0.2).unwrap();
        let (v1, v2) = (p1.swept_volume(&params).unwrap(), p2.swept_volume(&params).unwrap());
        prop_assert!((v1 - v2).abs() < 1e-10, "{} vs {}", v1, v2);
    }
}

#[test]
fn quantization_holds_on_random_path_pairs() {
    let params = EnergyParams::unit_ball(1.0);
    for seed in 0..3 {
        let u = random_map(2, seed);
        let r = fbcmc::solver::quantization_check(&u, &params, 6, seed).unwrap();
        assert!(r.pass, "{r:?}");
        for (ratio, (w1, w2)) in r.ratios.iter().zip(&r.windings) {
            assert_eq!(ratio.round() as i32, w1 - w2);
        }
    }
}
