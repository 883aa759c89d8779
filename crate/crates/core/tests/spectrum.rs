mod common;

use std::f64::consts::PI;

use common::*;
use fbcmc::energy::{dirichlet, SurfaceMap};
use fbcmc::linalg::Csr;
use fbcmc::solver::{init, solve_critical_point, SolveConfig};
use fbcmc::spectrum::*;
use fbcmc::{EnergyParams, Error, Forcing, Vec3};

fn solved(params: &EnergyParams, u0: &SurfaceMap) -> SurfaceMap {
    solve_critical_point(u0, params, &SolveConfig::default()).unwrap().0
}

fn flat(level: u32) -> (SurfaceMap, EnergyParams) {
    let p = EnergyParams::unit_ball(0.0);
    (init::flat(mesh(level), &p.surface), p)
}

fn cap(level: u32, h: f64) -> (SurfaceMap, EnergyParams) {
    let p = EnergyParams::unit_ball(h);
    let u0 = init::cap(mesh(level), &p.surface, h, &Vec3::z()).unwrap();
    (solved(&p, &u0), p)
}

fn diag(m: &[f64], s: f64) -> Csr {
    Csr::from_triplets(m.len(), m.iter().enumerate().map(|(i, &x)| (i, i, s * x)).collect())
}

#[test]
fn identity_pencil_has_unit_spectrum() {
    let (u, p) = flat(1);
    let sys = assemble_second_variation(&u, &p).unwrap();
    let id = HessianSystem { a: diag(&sys.mass, 1.0), ..sys.clone() };
    let r = morse_index(&id, 8, 1e-8).unwrap();
    assert!(r.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-12));
    assert_eq!(r.index, 0);
    let neg = HessianSystem { a: diag(&sys.mass, -1.0), ..sys };
    assert_eq!(morse_index(&neg, 8, 1e-8).unwrap().index, 8);
}

#[test]
fn constant_map_gives_scaled_laplacian_blocks() {
    let eps = 0.3;
    let p = EnergyParams::unit_ball(0.0).with_eps(eps);
    let q = Vec3::new(0.0, 0.6, 0.8);
    let u = init::constant(mesh(1), &p.surface, &q).unwrap();
    let sys = assemble_second_variation(&u, &p).unwrap();
    let k = u.mesh().stiffness();
    let c = 1.0 + eps.powf(0.2);
    for i in 0..u.len() {
        for (j, kij) in k.row(i) {
            for (a, ea) in sys.dofs.basis(i).iter().enumerate() {
                for (b, eb) in sys.dofs.basis(j).iter().enumerate() {
                    let want = c * kij * ea.dot(eb);
                    let got = sys.a.get(sys.dofs.offset(i) + a, sys.dofs.offset(j) + b);
                    assert!((got - want).abs() < 1e-12, "({i},{j}) {got} vs {want}");
                }
            }
        }
    }
    let r = morse_index(&sys, 10, default_index_tol(&sys)).unwrap();
    assert_eq!(r.index, 0);
    // constant fields tangent to Σ at q
    assert_eq!(r.nullity, 2);
}

#[test]
fn eigenpairs_are_consistent_and_tangent() {
    let (u, p) = cap(2, 1.0);
    let sys = assemble_second_variation(&u, &p).unwrap();
    let r = morse_index(&sys, DEFAULT_K, default_index_tol(&sys)).unwrap();
    assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    assert!(r.index + r.nullity <= DEFAULT_K);
    for (l, x) in r.eigenvalues.iter().zip(&r.eigenvectors) {
        assert!((sys.rayleigh(x) - l).abs() <= 1e-8);
        let psi = sys.dofs.embed(x);
        for &b in &u.mesh().boundary {
            let n = p.surface.outward_normal(&u.positions[b]);
            assert!(psi[b].dot(&n).abs() <= 1e-10);
        }
    }
}

#[test]
fn lanczos_and_dense_agree_on_the_cap() {
    let (u, p) = cap(3, 1.0);
    let sys = assemble_second_variation(&u, &p).unwrap();
    let tol = default_index_tol(&sys);
    let dense = morse_index_with(&sys, 8, tol, usize::MAX).unwrap();
    let sparse = morse_index_with(&sys, 8, tol, 0).unwrap();
    assert_eq!(dense.method, "dense");
    assert_eq!(sparse.method, "shift-invert-lanczos");
    for (a, b) in dense.eigenvalues.iter().zip(&sparse.eigenvalues) {
        assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
    }
}

/// At fixed `u` with `H = 0` the ε-terms only add positive semidefinite parts.
#[test]
fn index_does_not_grow_with_eps() {
    let (u, p) = flat(3);
    let mut last = usize::MAX;
    for eps in [0.0, 0.1, 0.3, 0.6] {
        let sys = assemble_second_variation(&u, &p.with_eps(eps)).unwrap();
        let r = morse_index(&sys, DEFAULT_K, default_index_tol(&sys)).unwrap();
        assert!(r.index <= last, "eps {eps}: {} > {last}", r.index);
        last = r.index;
    }
}

/// On the flat disk the only negative direction is the normal translation
/// `e₃` (Rayleigh quotient `-2π/π`), and rotations about horizontal axes
/// span the null space.
#[test]
fn flat_disk_spectrum_structure() {
    let (u, p) = flat(3);
    let sys = assemble_second_variation(&u, &p).unwrap();
    let r = morse_index(&sys, DEFAULT_K, default_index_tol(&sys)).unwrap();
    assert!(r.nullity >= 2);
    let e3: Vec<Vec3> = vec![Vec3::z(); u.len()];
    assert!((sys.rayleigh(&sys.dofs.restrict(&e3)) + 2.0).abs() < 1e-2);
    for axis in [Vec3::x(), Vec3::y()] {
        let rot: Vec<Vec3> = u.positions.iter().map(|y| axis.cross(y)).collect();
        let x = sys.dofs.restrict(&rot);
        assert!(sys.rayleigh(&x).abs() < 1e-10);
    }
}

#[test]
fn area_form_on_flat_disk_is_the_boundary_length() {
    let (u, p) = flat(4);
    let sb = area_index_form(&u, &p).unwrap();
    let one = vec![1.0; u.len()];
    let v = area_form_value(&sb, &one);
    assert!((v + 2.0 * PI).abs() < 1e-3 * 2.0 * PI, "{v}");
    let two = vec![2.0; u.len()];
    assert!((area_form_value(&sb, &two) - 4.0 * v).abs() < 1e-12);
}

#[test]
fn area_form_on_cap_is_negative_on_constants() {
    let (u, p) = cap(3, 1.0);
    let sb = area_index_form(&u, &p).unwrap();
    let v = area_form_value(&sb, &vec![1.0; u.len()]);
    assert!(v < -dirichlet(&u) * 0.5);
    let r = morse_index(&sb, DEFAULT_K, default_index_tol(&sb)).unwrap();
    assert!(r.index >= 1);
}

#[test]
fn normal_fields() {
    let (u, _) = flat(2);
    let nf = normal_field(&u, DEFAULT_BRANCH_TOL).unwrap();
    assert!(nf.branch_mask.iter().all(|&m| !m));
    assert!(nf.normals.iter().all(|n| (n - Vec3::z()).norm() < 1e-14));

    let (u, _) = cap(3, 1.0);
    let nf = normal_field(&u, DEFAULT_BRANCH_TOL).unwrap();
    let centre = Vec3::new(0.0, 0.0, -(5f64).sqrt());
    let h = u.mesh().h();
    for (t, n) in nf.normals.iter().enumerate() {
        assert!((n.norm() - 1.0).abs() < 1e-12);
        let (ux, uy) = u.partials(t);
        assert!(n.dot(&ux).abs() < 1e-10 * ux.norm() && n.dot(&uy).abs() < 1e-10 * uy.norm());
        let tri = u.mesh().triangles[t];
        let c = (u.positions[tri[0]] + u.positions[tri[1]] + u.positions[tri[2]]) / 3.0;
        assert!((n - (centre - c).normalize()).norm() < h);
    }

    let k = init::constant(mesh(1), &fbcmc::ImplicitSurface::unit_sphere(), &Vec3::x()).unwrap();
    assert!(normal_field(&k, DEFAULT_BRANCH_TOL).is_err());
}

#[test]
fn index_comparison_on_cap() {
    let (u, p) = cap(3, 1.0);
    let c = index_comparison_check(&u, &p).unwrap();
    assert!(c.pass && c.index_b >= 1, "{c:?}");
}

/// The flat disk has `Ind_H = index(B_H) = 1` (see `flat_disk_spectrum_structure`).
#[test]
fn index_comparison_on_flat_disk() {
    let (u, p) = flat(3);
    let c = index_comparison_check(&u, &p).unwrap();
    assert!(c.pass, "{c:?}");
    assert_eq!(c.index_b, c.index_e);
}

#[test]
fn mis_signed_boundary_term_breaks_the_comparison() {
    let (u, p) = cap(3, 1.0);
    let opts = HessianOptions { boundary_sign: -1.0, ..Default::default() };
    let c = index_comparison_with(&u, &p, opts).unwrap();
    assert!(!c.pass, "{c:?}");
}

#[test]
fn hersch_bound() {
    let (u, p) = cap(3, 1.0);
    let r = hersch_bound_check(&u, &p, 1e-2).unwrap();
    assert!(r.pass && r.dirichlet <= 16.0 * PI);
    assert!(r.sharper_bound <= r.bound);

    let (u, p) = cap(3, 2.0);
    let r = hersch_bound_check(&u, &p, 1e-2).unwrap();
    assert!((r.bound - 4.0 * PI).abs() < 1e-12);
    assert!(r.pass);

    // confined but wildly oscillating: D far above 16π
    let p = EnergyParams::unit_ball(1.0);
    let mut wild = SurfaceMap::from_fn(mesh(3), |[x, y]| {
        let r = (x * x + y * y).sqrt();
        let a = 40.0 * (x + 2.0 * y);
        if r > 0.999 {
            Vec3::new(x, y, 0.0)
        } else {
            Vec3::new(0.9 * a.cos(), 0.9 * a.sin(), 0.3 * (30.0 * y).sin())
        }
    });
    wild.project_boundary(&p.surface).unwrap();
    let r = hersch_bound_check(&wild, &p, 1e-2).unwrap();
    assert!(!r.pass && r.dirichlet > 16.0 * PI);

    assert!(matches!(
        hersch_bound_check(&wild, &EnergyParams { forcing: Forcing::Constant(0.0), ..p }, 1e-2),
        Err(Error::InvalidParameter(_))
    ));
}
