//! Operator and field-storage checks against independently constructed
//! oracles.

use hlab_core::grid::io::{read_field, write_field, write_field_csv, write_field_with};
use hlab_core::grid::{apply_helmholtz_operator, build_grid, magnetic_gradient, Grid, WaveField};
use hlab_core::model::{parse_scenario, Scenario};
use hlab_core::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn test_scenario(d: usize) -> Scenario {
    let b_line = if d == 2 {
        "b = \"-0.2*x2/(1+r^2)\", \"0.2*x1/(1+r^2)\"\n"
    } else {
        "b = \"-0.2*x2/(1+r^2)\", \"0.2*x1/(1+r^2)\", \"0.1/(1+r^2)\"\n"
    };
    parse_scenario(&format!(
        "[scenario]\n\
         dimension = {d}\n\
         lambda = 1.5\n\
         epsilon = 0.2\n\
         [fields]\n\
         p_tilde = \"0.3/(1+r^2)\"\n\
         q = \"0.4/(1+r^2)\"\n\
         {b_line}\
         [solver]\n\
         collar_strength = 0.9\n"
    ))
    .unwrap()
}

fn random_field(grid: Grid, seed: u64, zero_ring: bool) -> WaveField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = WaveField::zeros(grid);
    for m in 0..grid.node_count() {
        if zero_ring && grid.is_boundary(m) {
            continue;
        }
        u.values[m] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    u
}

/// The operator's matrix entries, written down independently from the
/// definition: Peierls link phases sampled at edge midpoints around the
/// pointwise diagonal −2d/h² + λ(1+p̃) + Q + iε(x).
fn oracle_row_apply(grid: Grid, sc: &Scenario, u: &[C64], m: usize) -> C64 {
    let d = grid.dimension;
    if grid.is_boundary(m) {
        return C64::new(0.0, 0.0);
    }
    let h = grid.h;
    let xb = grid.point(m);
    let x = &xb[..d];
    let diag = C64::new(
        -2.0 * d as f64 / (h * h) + sc.n_at(x).unwrap() + sc.q_at(x).unwrap(),
        sc.epsilon_at(x, grid.half_width),
    );
    let mut acc = diag * u[m];
    for a in 0..d {
        let s = grid.stride(a);
        let mut xp = xb;
        xp[a] += 0.5 * h;
        let mut xm = xb;
        xm[a] -= 0.5 * h;
        let tp = h * sc.b_at(a, &xp[..d]).unwrap();
        let tm = h * sc.b_at(a, &xm[..d]).unwrap();
        acc += (C64::new(tp.cos(), tp.sin()) * u[m + s]
            + C64::new(tm.cos(), -tm.sin()) * u[m - s])
            / (h * h);
    }
    acc
}

#[test]
fn operator_matches_dense_oracle_in_2d_and_3d() {
    for d in [2usize, 3] {
        let sc = test_scenario(d);
        let grid = build_grid(d, 4.0, 17).unwrap();
        let u = random_field(grid, 7 + d as u64, false);
        let applied = apply_helmholtz_operator(grid, &sc, &u).unwrap();
        let mut worst = 0.0f64;
        let scale = 2.0 * d as f64 / (grid.h * grid.h);
        for m in 0..grid.node_count() {
            let oracle = oracle_row_apply(grid, &sc, &u.values, m);
            worst = worst.max((applied.values[m] - oracle).norm() / scale);
        }
        assert!(worst < 1e-13, "d={d}: operator deviates from oracle by {worst:.3e}");
    }
}

#[test]
fn operator_is_hermitian_apart_from_its_dissipation() {
    // A = H + i·diag(ε(x)) with H Hermitian on ring-zero fields:
    // ⟨Au, v⟩ − ⟨u, Av⟩ = 2i Σ ε(x) u v̄ exactly
    let sc = test_scenario(2);
    let grid = build_grid(2, 4.0, 33).unwrap();
    let u = random_field(grid, 11, true);
    let v = random_field(grid, 13, true);
    let au = apply_helmholtz_operator(grid, &sc, &u).unwrap();
    let av = apply_helmholtz_operator(grid, &sc, &v).unwrap();
    let dot = |a: &WaveField, b: &WaveField| -> C64 {
        a.values.iter().zip(&b.values).map(|(p, q)| p * q.conj()).sum()
    };
    let mut dissipation = C64::new(0.0, 0.0);
    for m in 0..grid.node_count() {
        if grid.is_boundary(m) {
            continue;
        }
        let x = grid.point(m);
        dissipation += C64::new(0.0, 2.0 * sc.epsilon_at(&x[..2], grid.half_width))
            * u.values[m]
            * v.values[m].conj();
    }
    let defect = dot(&au, &v) - dot(&u, &av) - dissipation;
    let scale = au.norm_l2() * v.norm_l2();
    assert!(defect.norm() < 1e-12 * scale, "Hermiticity defect {:.3e}", defect.norm());
}

#[test]
fn plane_wave_truncation_error_is_second_order() {
    // constant coefficients, no magnetic field: A e^{ik·x} has symbol
    // λ + iε − Σ (2 − 2cos(k_a h))/h², off the continuum one by O(h²)
    let sc = parse_scenario(
        "[scenario]\ndimension = 2\nlambda = 1.5\nepsilon = 0.01\n",
    )
    .unwrap();
    let k = [0.9, 0.7];
    let target = C64::new(1.5 - (k[0] * k[0] + k[1] * k[1]), 0.01);
    let sup_error = |n: usize| -> f64 {
        let grid = build_grid(2, 8.0, n).unwrap();
        let u = WaveField::sample(grid, |x| {
            let phase = k[0] * x[0] + k[1] * x[1];
            Ok(C64::new(phase.cos(), phase.sin()))
        })
        .unwrap();
        let au = apply_helmholtz_operator(grid, &sc, &u).unwrap();
        let mut worst = 0.0f64;
        for m in 0..grid.node_count() {
            if grid.is_boundary(m) {
                continue;
            }
            worst = worst.max((au.values[m] - target * u.values[m]).norm());
        }
        worst
    };
    let coarse = sup_error(65);
    let fine = sup_error(129);
    let ratio = coarse / fine;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "plane-wave error ratio {ratio:.3} (coarse {coarse:.3e}, fine {fine:.3e})"
    );
}

#[test]
fn peierls_coupling_is_gauge_covariant() {
    // b ↦ b + ∇χ with linear χ = c·x₁ and u ↦ e^{−iχ}u leaves Au
    // covariant exactly ((∇+ib')e^{−iχ}u = e^{−iχ}(∇+ib)u): midpoint
    // sampling integrates a constant gradient without error
    let c = 0.3;
    let base = test_scenario(2);
    let gauged = parse_scenario(&format!(
        "[scenario]\n\
         dimension = 2\n\
         lambda = 1.5\n\
         epsilon = 0.2\n\
         [fields]\n\
         p_tilde = \"0.3/(1+r^2)\"\n\
         q = \"0.4/(1+r^2)\"\n\
         b = \"-0.2*x2/(1+r^2) + {c}\", \"0.2*x1/(1+r^2)\"\n\
         [solver]\n\
         collar_strength = 0.9\n"
    ))
    .unwrap();
    let grid = build_grid(2, 4.0, 33).unwrap();
    let u = random_field(grid, 17, true);
    let mut u_gauged = u.clone();
    for m in 0..grid.node_count() {
        let x = grid.point(m);
        u_gauged.values[m] *= C64::new(0.0, -c * x[0]).exp();
    }
    let au = apply_helmholtz_operator(grid, &base, &u).unwrap();
    let agu = apply_helmholtz_operator(grid, &gauged, &u_gauged).unwrap();
    let mut worst = 0.0f64;
    for m in 0..grid.node_count() {
        let x = grid.point(m);
        let expected = C64::new(0.0, -c * x[0]).exp() * au.values[m];
        worst = worst.max((agu.values[m] - expected).norm());
    }
    let scale = au.norm_l2();
    assert!(worst < 1e-12 * scale, "gauge covariance defect {worst:.3e}");
}

#[test]
fn magnetic_gradient_reduces_to_centered_differences_without_b() {
    let sc = parse_scenario("[scenario]\ndimension = 2\nlambda = 1\nepsilon = 0.1\n").unwrap();
    let grid = build_grid(2, 4.0, 33).unwrap();
    let u = WaveField::sample(grid, |x| Ok(C64::new((0.7 * x[0]).sin(), 0.3 * x[1]))).unwrap();
    let g = magnetic_gradient(grid, &sc, &u).unwrap();
    let m = grid.encode([16, 16, 0]);
    let s = grid.stride(0);
    let expected = (u.values[m + s] - u.values[m - s]) / (2.0 * grid.h);
    assert!((g.components[0][m] - expected).norm() < 1e-14);
}

#[test]
fn field_io_round_trips() {
    let dir = std::env::temp_dir().join(format!("hlab-grid-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let grid = build_grid(2, 4.0, 17).unwrap();
    let u = random_field(grid, 23, false);

    let exact = dir.join("field.dat");
    write_field(&u, &exact).unwrap();
    let back = read_field(&exact).unwrap();
    assert_eq!(back.grid, grid);
    assert_eq!(back.values, u.values, "f64 round trip must be bit-exact");

    let narrow = dir.join("field32.dat");
    write_field_with(&u, &narrow, true).unwrap();
    let back32 = read_field(&narrow).unwrap();
    let worst = u
        .values
        .iter()
        .zip(&back32.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-6, "single-precision round trip off by {worst:.3e}");

    let csv = dir.join("field.csv");
    write_field_csv(&u, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("re") && header.contains("im"), "header: {header}");
    assert_eq!(lines.count(), grid.node_count());

    std::fs::remove_dir_all(&dir).ok();
}

proptest! {
    /// encode/decode are inverse bijections on the index box.
    #[test]
    fn encode_decode_round_trip(m in 0usize..33 * 33) {
        let grid = build_grid(2, 4.0, 33).unwrap();
        let idx = grid.decode(m);
        prop_assert_eq!(grid.encode(idx), m);
        prop_assert!(idx[0] < 33 && idx[1] < 33 && idx[2] == 0);
    }

    /// radius(m) agrees with the Euclidean norm of point(m), and no
    /// node sits closer to the origin than h/2.
    #[test]
    fn radius_matches_point_and_avoids_origin(m in 0usize..33 * 33) {
        let grid = build_grid(2, 4.0, 33).unwrap();
        let x = grid.point(m);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        prop_assert!((grid.radius(m) - r).abs() < 1e-12);
        let min_axis = x[0].abs().min(x[1].abs());
        prop_assert!(min_axis >= grid.h / 2.0 - 1e-12);
    }
}

#[test]
fn grid_validation_rejects_bad_shapes() {
    assert!(build_grid(1, 4.0, 33).is_err(), "dimension 1");
    assert!(build_grid(4, 4.0, 33).is_err(), "dimension 4");
    assert!(build_grid(2, 4.0, 32).is_err(), "even point count");
    assert!(build_grid(2, 4.0, 15).is_err(), "too few points");
    assert!(build_grid(2, -4.0, 33).is_err(), "negative half width");
}
