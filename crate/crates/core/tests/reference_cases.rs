//! Worked reference cases with closed-form or hand-derived answers: Euclidean
//! distances, the Grushin plane, the Heisenberg group, the Martinet
//! distribution and the three-dimensional field pair with a characteristic
//! plane at `x1 = 0`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use mintime::analysis::{
    cc_ball, holder_fit, lipschitz_field, point_target_field, refinement_study, HolderOptions, RefinementOptions,
    DEFAULT_GAMMA,
};
use mintime::eikonal::{
    reachable_mask, solve_min_time, solve_min_time_on, solve_semilagrangian, SolveOptions, ValueField,
};
use mintime::extremals::{
    conservation_residual, integrate_normal_extremal, integrate_singular_extremal, integrate_trajectory,
    shoot_cc_distance, ShootOptions,
};
use mintime::geometry::{
    detect_characteristic_points, extract_boundary, limiting_normal_fan, petrov_margin, proximal_normal_fan,
    reachable_fans, FanOptions, Region, DEFAULT_EPS_CHAR_H,
};
use mintime::linalg::{dist, dot, norm};
use mintime::systems::{acs3, euclidean2, grushin, heisenberg, martinet};
use mintime::{ControlSystem, CotangentPoint, GridSet, TargetSet, UniformGrid};

fn boxed(lo: &[f64], hi: &[f64], h: f64) -> UniformGrid {
    UniformGrid::from_box(lo, hi, h).unwrap()
}

fn square(half: f64, h: f64) -> UniformGrid {
    boxed(&[-half; 2], &[half; 2], h)
}

fn solve(system: &ControlSystem, target: &TargetSet, grid: &UniformGrid) -> ValueField {
    let opts = SolveOptions {
        require_convergence: true,
        ..SolveOptions::default()
    };
    solve_min_time(system, target, grid, &opts).unwrap()
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos()
}

fn acs3_target() -> TargetSet {
    TargetSet::ComplementOfBall {
        center: vec![0.0; 3],
        radius: 0.8,
    }
}

/// The complement-of-ball problem for `acs3` on `[−1, 1]³` at 21³, 41³, 81³.
fn acs3_fields() -> &'static [ValueField; 3] {
    static FIELDS: OnceLock<[ValueField; 3]> = OnceLock::new();
    FIELDS.get_or_init(|| {
        let g = UniformGrid::cube(3, -1.0, 1.0, 21).unwrap();
        let grids = [g.clone(), g.refined(), g.refined().refined()];
        grids.map(|g| solve(&acs3(), &acs3_target(), &g))
    })
}

/// `sup |T_h − T_{h/2}|` and `sup |T_{h/2} − T_{h/4}|` over the base nodes.
fn successive_differences(fields: &[ValueField; 3]) -> (f64, f64) {
    let base = &fields[0].grid;
    let r: Vec<Vec<f64>> = fields.iter().map(|f| f.restrict_to(base).unwrap()).collect();
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    (sup(&r[0], &r[1]), sup(&r[1], &r[2]))
}

fn refine_and_solve(system: &ControlSystem, target: &TargetSet, base: &UniformGrid) -> [ValueField; 3] {
    [base.clone(), base.refined(), base.refined().refined()].map(|g| solve(system, target, &g))
}

fn assert_converges(name: &str, fields: &[ValueField; 3]) {
    let (d1, d2) = successive_differences(fields);
    assert!(d2 > 0.0, "{name}: identical fine solutions");
    assert!(
        d1 / d2 >= 1.3,
        "{name}: sup-norm differences {d1:.4} → {d2:.4}, ratio {:.3}",
        d1 / d2
    );
}

// ---------------------------------------------------------------------------
// Value functions

#[test]
fn euclidean_distance_to_a_disc() {
    let grid = square(1.0, 0.01);
    let target = TargetSet::ball(&[0.0, 0.0], 0.2);
    let lf = solve(&euclidean2(), &target, &grid);
    let t = lf.value_at(&[0.7, 0.0]);
    assert!((t - 0.5).abs() <= 0.03, "T(0.7, 0) = {t}");

    let sl = solve_semilagrangian(&euclidean2(), &target, &grid, &SolveOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let x = grid.point(i);
        if grid.cells_from_boundary(&grid.coords(i)) < 3 {
            continue;
        }
        let exact = (norm(&x) - 0.2).max(0.0);
        worst = worst.max((sl.values[i] - exact).abs());
    }
    assert!(worst <= 2.0 * grid.h, "semi-Lagrangian error {worst}");

    for vf in [&lf, &sl] {
        for i in (0..grid.len()).filter(|&i| vf.target[i]) {
            assert_eq!(vf.values[i], 0.0);
        }
    }
}

#[test]
fn grushin_time_along_the_singular_line() {
    // Moving along x1 uses the unit field ∂1 only, so T(0.5, 0) = 0.5 − 0.05.
    let grid = square(1.0, 0.01);
    let vf = solve(&grushin(), &TargetSet::ball(&[0.0, 0.0], 0.05), &grid);
    let t = vf.value_at(&[0.5, 0.0]);
    assert!((t - 0.45).abs() <= 3.0 * grid.h, "T(0.5, 0) = {t}");
}

#[test]
fn heisenberg_time_to_a_small_ball() {
    let grid = UniformGrid::cube(3, -0.6, 0.6, 61).unwrap();
    let target = TargetSet::ball(&[0.0; 3], 0.05);
    let x = [0.3, 0.4, 0.0];
    let lf = solve(&heisenberg(), &target, &grid).value_at(&x);
    let sl = solve_semilagrangian(&heisenberg(), &target, &grid, &SolveOptions::default())
        .unwrap()
        .value_at(&x);
    assert!((lf - 0.45).abs() <= 0.05, "Lax–Friedrichs T = {lf}");
    assert!((sl - 0.45).abs() <= 0.05, "semi-Lagrangian T = {sl}");
}

#[test]
fn euclidean_reachable_set_is_a_larger_disc() {
    let grid = square(1.0, 0.01);
    let target = TargetSet::ball(&[0.0, 0.0], 0.2);
    let vf = solve(&euclidean2(), &target, &grid);
    let mask = reachable_mask(&vf, 0.5).unwrap();
    for i in 0..grid.len() {
        let r = norm(&grid.point(i));
        if r <= 0.7 - 2.0 * grid.h {
            assert!(mask[i], "|x| = {r} missing from R(0.5)");
        }
        if r >= 0.7 + 2.0 * grid.h {
            assert!(!mask[i], "|x| = {r} wrongly in R(0.5)");
        }
    }
    assert_eq!(reachable_mask(&vf, 0.0).unwrap(), target.realize(&grid).unwrap().inside);
}

#[test]
fn value_splits_at_intermediate_reachable_sets() {
    // T_K(y) = τ + T_{R(τ)}(y) for y outside R(τ).
    let grid = square(1.5, 0.02);
    let k = solve(&grushin(), &TargetSet::ball(&[0.5, 0.0], 0.2), &grid);
    let tau = 0.3;
    let opts = SolveOptions {
        require_convergence: true,
        ..SolveOptions::default()
    };
    let r = solve_min_time_on(&grushin(), &k.sublevel(tau), &opts).unwrap();
    let h = grid.h;
    let mut checked = 0;
    for i in 0..grid.len() {
        let t = k.values[i];
        if grid.cells_from_boundary(&grid.coords(i)) < 10 || t < tau + 3.0 * h || t > 1.0 {
            continue;
        }
        let gap = (t - tau - r.values[i]).abs();
        assert!(
            gap <= 4.0 * h,
            "at {:?}: T_K = {t}, T_R = {}",
            grid.point(i),
            r.values[i]
        );
        checked += 1;
    }
    assert!(checked > 500, "only {checked} nodes checked");
}

#[test]
fn grushin_values_converge_under_refinement() {
    let fields = refine_and_solve(&grushin(), &TargetSet::ball(&[0.5, 0.0], 0.2), &square(1.5, 0.1));
    assert_converges("grushin", &fields);
}

#[test]
fn euclidean_values_converge_under_refinement() {
    let fields = refine_and_solve(&euclidean2(), &TargetSet::ball(&[0.0, 0.0], 0.2), &square(1.0, 0.1));
    assert_converges("euclidean2", &fields);
}

#[test]
fn heisenberg_values_converge_under_refinement() {
    let base = UniformGrid::cube(3, -1.0, 1.0, 21).unwrap();
    let fields = refine_and_solve(&heisenberg(), &TargetSet::ball(&[0.0; 3], 0.2), &base);
    assert_converges("heisenberg", &fields);
}

#[test]
fn acs3_values_converge_under_refinement() {
    assert_converges("acs3", acs3_fields());
}

// ---------------------------------------------------------------------------
// Boundaries and normal fans

#[test]
fn disc_boundary_has_the_expected_cell_count() {
    let h = 0.01;
    let set = TargetSet::ball(&[0.0, 0.0], 0.7).realize(&square(1.0, h)).unwrap();
    let count = extract_boundary(&set).unwrap().len() as f64;
    let expected = 2.0 * PI * 0.7 / h;
    assert!(
        (count / expected - 1.0).abs() <= 0.2,
        "{count} boundary cells, expected ≈ {expected:.0}"
    );
}

#[test]
fn half_plane_boundary_is_a_single_column_with_normal_e1() {
    let grid = square(1.0, 0.05);
    let set = TargetSet::Box {
        lo: vec![-5.0, -5.0],
        hi: vec![0.0, 5.0],
    }
    .realize(&grid)
    .unwrap();
    let boundary = extract_boundary(&set).unwrap();
    assert_eq!(boundary.len(), grid.cells[1]);
    assert!(boundary.iter().all(|&i| grid.point(i)[0].abs() < 1e-12));

    let fans = proximal_normal_fan(&set, 6.0 * grid.h, 5.0).unwrap();
    assert_eq!(fans.len(), boundary.len());
    for f in &fans {
        assert!(!f.is_empty(), "empty fan at {:?}", f.point);
        for n in &f.normals {
            assert!(
                angle(n, &[1.0, 0.0]) <= 5f64.to_radians(),
                "normal {n:?} at {:?}",
                f.point
            );
        }
    }
}

#[test]
fn disc_normals_are_radial() {
    let grid = square(1.0, 0.01);
    let set = TargetSet::ball(&[0.0, 0.0], 0.7).realize(&grid).unwrap();
    let fans = proximal_normal_fan(&set, 6.0 * grid.h, 5.0).unwrap();
    let at = grid.nearest(&[0.7, 0.0]);
    let fan = fans.iter().find(|f| f.cell == at).expect("(0.7, 0) is a boundary cell");
    assert!(!fan.is_empty());
    for n in &fan.normals {
        assert!(dist(n, &[1.0, 0.0]) <= 0.05, "normal {n:?}");
    }
}

#[test]
fn square_corner_fan_fills_a_quarter_circle() {
    let grid = square(1.0, 0.02);
    let set = TargetSet::Box {
        lo: vec![-0.5, -0.5],
        hi: vec![0.5, 0.5],
    }
    .realize(&grid)
    .unwrap();
    let fans = proximal_normal_fan(&set, 6.0 * grid.h, 5.0).unwrap();
    let corner = grid.nearest(&[0.5, 0.5]);
    let fan = fans
        .iter()
        .find(|f| f.cell == corner)
        .expect("corner is a boundary cell");
    let mut angles: Vec<f64> = fan.normals.iter().map(|n| n[1].atan2(n[0])).collect();
    angles.sort_by(f64::total_cmp);
    let tol = 5f64.to_radians();
    assert!(angles.iter().all(|a| *a >= -tol && *a <= FRAC_PI_2 + tol), "{angles:?}");
    assert!(
        angles[0] <= tol && angles[angles.len() - 1] >= FRAC_PI_2 - tol,
        "{angles:?}"
    );
    // Exterior lattice points within the 6h band resolve directions to about
    // 1/6 rad, and merging within 5° can widen a gap by that much again.
    let max_gap = 1.0 / 6.0 + tol;
    assert!(angles.windows(2).all(|w| w[1] - w[0] <= max_gap), "gaps in {angles:?}");
}

#[test]
fn reentrant_corner_limiting_fan_holds_both_face_normals() {
    let grid = square(1.0, 0.02);
    let set = TargetSet::Union(vec![
        TargetSet::Box {
            lo: vec![-0.5, -0.5],
            hi: vec![0.5, 0.0],
        },
        TargetSet::Box {
            lo: vec![-0.5, -0.5],
            hi: vec![0.0, 0.5],
        },
    ])
    .realize(&grid)
    .unwrap();
    let prox = proximal_normal_fan(&set, 6.0 * grid.h, 5.0).unwrap();
    let lim = limiting_normal_fan(&grid, &prox, 3.0 * grid.h, 5.0).unwrap();
    let fan = lim
        .iter()
        .min_by(|a, b| norm(&a.point).total_cmp(&norm(&b.point)))
        .unwrap();
    assert!(
        norm(&fan.point) <= 1.5 * grid.h,
        "nearest boundary cell {:?}",
        fan.point
    );
    let tol = 5f64.to_radians();
    for e in [[1.0, 0.0], [0.0, 1.0]] {
        assert!(
            fan.normals.iter().any(|n| angle(n, &e) <= tol),
            "{e:?} missing from {:?}",
            fan.normals
        );
    }
}

#[test]
fn euclidean_reachable_sets_have_no_characteristic_points() {
    let grid = square(1.0, 0.02);
    let vf = solve(&euclidean2(), &TargetSet::ball(&[0.0, 0.0], 0.2), &grid);
    for tau in [0.2, 0.5] {
        let recs = detect_characteristic_points(
            &euclidean2(),
            &vf,
            tau,
            DEFAULT_EPS_CHAR_H * grid.h,
            &FanOptions::default(),
        )
        .unwrap();
        assert!(recs.is_empty(), "τ = {tau}: {} records", recs.len());
    }
}

#[test]
fn heisenberg_ball_keeps_a_positive_petrov_margin() {
    let grid = UniformGrid::cube(3, -1.0, 1.0, 41).unwrap();
    let vf = solve(&heisenberg(), &TargetSet::ball(&[0.0; 3], 0.2), &grid);
    let rep = petrov_margin(&heisenberg(), &vf, 0.3, &Region::All, &FanOptions::default()).unwrap();
    assert!(rep.cells > 0);
    assert!(rep.mu > 0.0, "μ = {} at {:?}", rep.mu, rep.argmin_x);
}

#[test]
fn acs3_detections_persist_under_refinement() {
    // Every coarse detection has a fine detection within four coarse cells.
    let [_, coarse, fine] = acs3_fields();
    let tau = 0.3;
    let opts = FanOptions::default();
    let detect = |vf: &ValueField| {
        detect_characteristic_points(&acs3(), vf, tau, DEFAULT_EPS_CHAR_H * vf.grid.h, &opts).unwrap()
    };
    let (rc, rf) = (detect(coarse), detect(fine));
    for r in &rc {
        let d = rf.iter().map(|s| dist(&r.x, &s.x)).fold(f64::INFINITY, f64::min);
        assert!(
            d <= 4.0 * coarse.grid.h,
            "coarse record at {:?} is {d} from the fine set",
            r.x
        );
    }
}

#[test]
fn singular_arcs_into_the_target_start_at_detected_points() {
    // A boundary point of R(τ) on the plane x1 = 0 whose singular arc with
    // covector ±e3 reaches K at time τ, and whose limiting fan contains that
    // covector, must be a detected characteristic point.
    let vf = &acs3_fields()[2];
    let (h, tau) = (vf.grid.h, 0.3);
    let opts = FanOptions::default();
    let records = detect_characteristic_points(&acs3(), vf, tau, DEFAULT_EPS_CHAR_H * h, &opts).unwrap();
    let fans = reachable_fans(vf, tau, &opts).unwrap();
    let level = acs3_target().level_function(3).unwrap();
    let tol = opts.dedup_deg.to_radians();
    let (mut on_plane, mut matching) = (0, 0);
    for fan in fans.iter().filter(|f| f.point[0].abs() <= 0.5 * h) {
        on_plane += 1;
        for sign in [1.0, -1.0] {
            let eta = [0.0, 0.0, sign];
            if !fan.normals.iter().any(|n| angle(n, &eta) <= tol) {
                continue;
            }
            let rho = CotangentPoint::new(fan.point.clone(), eta.to_vec());
            let ext = integrate_singular_extremal(&acs3(), &rho, tau, 1e-3).unwrap();
            let end = ext.last().unwrap();
            if !ext.is_completed() || level.level(&end.y) > h {
                continue;
            }
            matching += 1;
            let d = records
                .iter()
                .map(|r| dist(&r.x, &fan.point))
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 4.0 * h, "singular start {:?} is {d} from E(τ)", fan.point);
        }
    }
    assert!(on_plane > 0, "no boundary cells on x1 = 0");
    eprintln!(
        "{on_plane} boundary cells on x1 = 0, {matching} matching singular arcs, {} records",
        records.len()
    );
}

// ---------------------------------------------------------------------------
// Extremals

#[test]
fn euclidean_extremals_are_straight_lines() {
    let ext = integrate_normal_extremal(&euclidean2(), &[0.1, -0.2], &[0.6, 0.8], 0.5, 1e-2).unwrap();
    assert!(ext.is_completed());
    for s in &ext.samples {
        let expected = [0.1 + 0.6 * s.t, -0.2 + 0.8 * s.t];
        assert!(dist(&s.y, &expected) < 1e-12, "y({}) = {:?}", s.t, s.y);
        assert!(dist(&s.p, &[0.6, 0.8]) < 1e-12);
    }
    assert!(conservation_residual(&ext).unwrap() < 1e-12);
}

#[test]
fn heisenberg_horizontal_extremal_through_the_origin() {
    let ext = integrate_normal_extremal(&heisenberg(), &[0.0; 3], &[1.0, 0.0, 0.0], 1.0, 1e-3).unwrap();
    assert!(ext.is_completed());
    for s in &ext.samples {
        assert!(dist(&s.y, &[s.t, 0.0, 0.0]) < 1e-10, "y({}) = {:?}", s.t, s.y);
    }
}

#[test]
fn heisenberg_extremal_conserves_the_hamiltonian() {
    let ext = integrate_normal_extremal(&heisenberg(), &[0.0; 3], &[1.0, 0.0, 1.0], 1.0, 1e-3).unwrap();
    assert!(ext.is_completed());
    assert!(ext.max_h_drift < 1e-6, "drift {}", ext.max_h_drift);
}

#[test]
fn martinet_singular_arc_follows_the_x2_axis() {
    let rho = CotangentPoint::new(vec![0.0; 3], vec![0.0, 0.0, 1.0]);
    let ext = integrate_singular_extremal(&martinet(), &rho, 1.0, 1e-3).unwrap();
    assert!(ext.is_completed(), "{:?}", ext.abort_reason());
    let mut max_h: f64 = 0.0;
    for s in &ext.samples {
        let y = [0.0, s.t * s.u[1].signum(), 0.0];
        assert!(dist(&s.y, &y) < 1e-6, "y({}) = {:?}", s.t, s.y);
        max_h = max_h.max(s.h.abs());
    }
    assert!(max_h < 1e-8, "max |H| = {max_h}");
}

#[test]
fn shooting_recovers_the_euclidean_distance() {
    let res = shoot_cc_distance(&euclidean2(), &[0.0, 0.0], &[0.3, 0.4], &ShootOptions::default()).unwrap();
    assert!(res.success, "gap {}", res.endpoint_gap);
    assert!((res.time - 0.5).abs() <= 1e-4, "time {}", res.time);
}

#[test]
fn grushin_vertical_field_vanishes_at_the_origin() {
    let traj = integrate_trajectory(&grushin(), &[0.0, 0.0], |_| vec![0.0, 1.0], 1.0, 1e-2, None).unwrap();
    assert!(traj.states.iter().all(|y| norm(y) == 0.0));
}

#[test]
fn shooting_times_bound_the_grid_value_from_above() {
    let (start, goal) = ([1.0, 0.0], [-1.0, 0.0]);
    let grid = boxed(&[-1.5, -1.0], &[1.5, 1.0], 0.01);
    let vf = point_target_field(&grushin(), &grid, &goal, &SolveOptions::default()).unwrap();
    let res = shoot_cc_distance(&grushin(), &start, &goal, &ShootOptions::default()).unwrap();
    assert!(res.success, "gap {}", res.endpoint_gap);
    let t = vf.value_at(&start);
    assert!(res.time >= t - 4.0 * grid.h, "shooting {} vs grid {t}", res.time);
    assert!((res.time - 2.0).abs() <= 1e-3, "shooting {}", res.time);
}

// ---------------------------------------------------------------------------
// Regularity

#[test]
fn euclidean_distance_is_one_lipschitz() {
    let grid = square(1.0, 0.01);
    let vf = solve(&euclidean2(), &TargetSet::ball(&[0.0, 0.0], 0.2), &grid);
    let lip = lipschitz_field(&vf, 2.0 * grid.h).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..grid.len() {
        let x = grid.point(i);
        if norm(&x) < 0.2 + 3.0 * grid.h || grid.cells_from_boundary(&grid.coords(i)) < 3 {
            continue;
        }
        let q = lip.quotients[i].unwrap();
        lo = lo.min(q);
        hi = hi.max(q);
    }
    assert!(lo >= 0.9 && hi <= 1.1, "quotients in [{lo}, {hi}]");
}

#[test]
fn grushin_lipschitz_bound_is_stable_under_refinement() {
    let target = TargetSet::ball(&[0.5, 0.0], 0.2);
    let region = Region::Box {
        lo: vec![-1.2, -1.2],
        hi: vec![1.2, 1.2],
    };
    let maxima: Vec<f64> = [0.05, 0.025, 0.0125]
        .iter()
        .map(|&h| {
            let vf = solve(&grushin(), &target, &square(1.5, h));
            lipschitz_field(&vf, 2.0 * h).unwrap().max_in(&region)
        })
        .collect();
    assert!(maxima.iter().all(|m| m.is_finite()));
    for w in maxima.windows(2) {
        assert!(w[1] / w[0] < DEFAULT_GAMMA, "maxima {maxima:?}");
    }
}

#[test]
fn acs3_quotients_grow_only_near_the_characteristic_plane() {
    let near = Region::Slab {
        axis: 0,
        center: 0.0,
        half_width: 0.1,
    };
    let away = Region::Box {
        lo: vec![0.3, -0.9, -0.9],
        hi: vec![0.9, 0.9, 0.9],
    };
    let maxima = |region: &Region| -> Vec<f64> {
        acs3_fields()
            .iter()
            .map(|vf| lipschitz_field(vf, 2.0 * vf.grid.h).unwrap().max_in(region))
            .collect()
    };
    let (mn, ma) = (maxima(&near), maxima(&away));
    for w in mn.windows(2) {
        assert!(w[1] / w[0] >= DEFAULT_GAMMA, "near x1 = 0: {mn:?}");
    }
    for w in ma.windows(2) {
        assert!(w[1] / w[0] < DEFAULT_GAMMA, "away from x1 = 0: {ma:?}");
    }
}

#[test]
fn euclidean_refinement_flags_nothing() {
    let opts = RefinementOptions {
        gamma: 1.3,
        ..RefinementOptions::default()
    };
    let rep = refinement_study(
        &euclidean2(),
        &TargetSet::ball(&[0.0, 0.0], 0.2),
        &square(1.0, 0.05),
        &SolveOptions::default(),
        &opts,
    )
    .unwrap();
    assert!(rep.eligible_count > 0);
    assert_eq!(rep.flagged_count, 0, "flagged {:?}", rep.flagged_points());
}

// ---------------------------------------------------------------------------
// Hölder exponents of point distances

fn fit(system: &ControlSystem, grid: &UniformGrid, directions: &[&[f64]]) -> Vec<(f64, f64)> {
    let center = vec![0.0; grid.dim()];
    let vf = point_target_field(system, grid, &center, &SolveOptions::default()).unwrap();
    let opts = HolderOptions {
        directions: directions.iter().map(|d| d.to_vec()).collect(),
        trust_radius: 0.5,
        ..HolderOptions::default()
    };
    let f = holder_fit(&vf, &center, &opts).unwrap();
    f.directions.iter().map(|d| (d.alpha, f.c1)).collect()
}

#[test]
fn euclidean_distance_is_linear_in_every_direction() {
    for (alpha, c1) in fit(&euclidean2(), &square(1.0, 0.01), &[&[1.0, 0.0], &[0.6, 0.8]]) {
        assert!((alpha - 1.0).abs() <= 0.05, "α = {alpha}");
        assert!(c1 > 0.0);
    }
}

#[test]
fn grushin_distance_is_square_root_across_the_singular_line() {
    let fits = fit(&grushin(), &square(1.0, 0.01), &[&[0.0, 1.0], &[1.0, 0.0]]);
    let (vertical, c1) = fits[0];
    assert!((vertical - 0.5).abs() <= 0.1, "α along x2 = {vertical}");
    assert!(c1 > 0.0);
    let horizontal = fits[1].0;
    assert!((0.9..=1.1).contains(&horizontal), "α along x1 = {horizontal}");
}

#[test]
fn martinet_distance_is_cube_root_along_x3() {
    // Reaching height z costs |x1| ≈ (2z)^{1/3}, so the domain must be wide.
    let grid = UniformGrid::cube(3, -1.5, 1.5, 61).unwrap();
    let fits = fit(&martinet(), &grid, &[&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]);
    let (vertical, c1) = fits[0];
    assert!((vertical - 1.0 / 3.0).abs() <= 0.1, "α along x3 = {vertical}");
    assert!(c1 > 0.0);
    let horizontal = fits[1].0;
    assert!((0.9..=1.1).contains(&horizontal), "α along x2 = {horizontal}");
}

#[test]
fn grushin_cc_ball_is_bounded_with_interior() {
    let grid = square(1.5, 0.01);
    let vf = point_target_field(&grushin(), &grid, &[0.0, 0.0], &SolveOptions::default()).unwrap();
    let ball = cc_ball(&vf, 0.3);
    assert!(ball.bounded);
    assert!(ball.interior_cells > 0, "{} cells, none interior", ball.cells);
    // The ball is wider along x1 (speed one) than along x2 (speed x1).
    let inside = GridSet::from_mask(grid.clone(), vf.values.iter().map(|v| *v <= 0.3).collect());
    let extent = |axis: usize| {
        (0..grid.len())
            .filter(|&i| inside.inside[i])
            .map(|i| grid.point(i)[axis].abs())
            .fold(0.0, f64::max)
    };
    assert!(
        extent(0) > extent(1),
        "x1 extent {} vs x2 extent {}",
        extent(0),
        extent(1)
    );
}
