use std::f64::consts::PI;

use sharp_hilbert::circle::CircleGrid;
use sharp_hilbert::extremal::{
    build_at_radius, build_p1, build_p2, conjugacy_residual, convergence_table, exact_arc_measure,
    norm_estimate, sampled_measure, ConvergenceRow, ExtremalKind, RadialLimit, DEFAULT_DELTA,
    DEFAULT_EVAL_RADIUS, SINGULAR_EXCLUSION_NODES,
};
use sharp_hilbert::special::{e_closed, p_closed};
use sharp_hilbert::verify::inverse_bound_p1;

#[test]
fn pairs_are_discrete_conjugates_away_from_singularities() {
    let grid = CircleGrid::new(1 << 16).unwrap();
    for kind in [ExtremalKind::P1Slit, ExtremalKind::P2Strip] {
        for c in [0.3, 0.5, 0.7] {
            for radial in [RadialLimit::Direct, RadialLimit::Richardson] {
                let pair = build_at_radius(kind, c, grid, 1.0 - 1e-3, radial).unwrap();
                let (max, _) = conjugacy_residual(&pair, SINGULAR_EXCLUSION_NODES);
                assert!(max < 1e-3, "{kind:?} c = {c} {radial:?}: residual {max}");
            }
        }
    }
}

#[test]
fn arc_measures_match_predictions() {
    for c in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let p1 = exact_arc_measure(ExtremalKind::P1Slit, c).unwrap();
        assert!((p1 - p_closed(c).unwrap()).abs() < 1e-12);
        let p2 = exact_arc_measure(ExtremalKind::P2Strip, c).unwrap();
        assert!((p2 - (1.0 - c)).abs() < 1e-12);
    }
}

#[test]
fn inverse_bound_is_attained_in_closed_form() {
    for k in 1..100 {
        let c = k as f64 / 100.0;
        let x = inverse_bound_p1(p_closed(c).unwrap()).unwrap();
        assert!((x - e_closed(c).unwrap()).abs() < 1e-10, "c = {c}");
    }
}

#[test]
fn inverse_bound_is_attained_by_the_sampled_pair() {
    let pair = build_p1(0.5, CircleGrid::new(1 << 16).unwrap(), DEFAULT_EVAL_RADIUS).unwrap();
    let m = sampled_measure(&pair, DEFAULT_DELTA);
    let norm = norm_estimate(&pair).unwrap();
    assert!((inverse_bound_p1(m).unwrap() - norm.refined).abs() < 1e-2);
}

#[test]
fn strip_pair_matches_predictions_at_several_c() {
    let grid = CircleGrid::new(1 << 15).unwrap();
    for c in [0.3, 0.5, 0.7] {
        let pair = build_p2(c, grid, DEFAULT_EVAL_RADIUS).unwrap();
        assert!((sampled_measure(&pair, DEFAULT_DELTA) - (1.0 - c)).abs() < 2e-3);
        let norm = norm_estimate(&pair).unwrap().refined;
        assert!((norm * norm - (1.0 - c) / c).abs() < 1e-2, "c = {c}: {norm}");
    }
}

fn rows_for(rows: &[ConvergenceRow], radial: RadialLimit) -> Vec<&ConvergenceRow> {
    rows.iter().filter(|r| r.radial_limit == radial).collect()
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
}

#[test]
fn convergence_in_grid_size() {
    let sizes = [1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16];
    for kind in [ExtremalKind::P1Slit, ExtremalKind::P2Strip] {
        let rows = convergence_table(kind, 0.5, &sizes, &[1.0 - 1e-6], DEFAULT_DELTA).unwrap();
        let rows = rows_for(&rows, RadialLimit::Richardson);
        let measure: Vec<f64> = rows.iter().map(|r| r.measure_error.abs()).collect();
        assert!(nonincreasing(&measure), "{kind:?} measure errors {measure:?}");
        let norm: Vec<f64> = rows.iter().map(|r| r.norm_error.abs()).collect();
        match kind {
            ExtremalKind::P1Slit => assert!(nonincreasing(&norm), "norm errors {norm:?}"),
            // already at the level of the singular-node fit from n = 2^12 on
            ExtremalKind::P2Strip => assert!(norm.iter().all(|&e| e < 2e-5), "norm errors {norm:?}"),
        }
    }
}

#[test]
fn convergence_in_radius() {
    let radii = [1.0 - 1e-3, 1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6];
    for kind in [ExtremalKind::P1Slit, ExtremalKind::P2Strip] {
        let rows = convergence_table(kind, 0.5, &[1 << 16], &radii, DEFAULT_DELTA).unwrap();
        for radial in [RadialLimit::Direct, RadialLimit::Richardson] {
            let rows = rows_for(&rows, radial);
            let measure: Vec<f64> = rows.iter().map(|r| r.measure_error.abs()).collect();
            assert!(nonincreasing(&measure), "{kind:?} {radial:?} measure errors {measure:?}");
        }
        let final_row = rows.last().unwrap();
        assert!(final_row.norm_error.abs() < 1e-4);
    }
}

#[test]
fn equality_chain_for_the_slit_pair() {
    for k in 1..100 {
        let c = k as f64 / 100.0;
        let lhs = 4.0 / PI * (0.5 * PI * e_closed(c).unwrap()).exp().atan() - 1.0;
        assert!((lhs - p_closed(c).unwrap()).abs() < 1e-10);
    }
    // c = 1/2: e^{πE/2} = 2 + √3 and arctan(2 + √3) = 5π/12
    let e = e_closed(0.5).unwrap();
    assert!(((0.5 * PI * e).exp() - (2.0 + 3f64.sqrt())).abs() < 1e-12);
    assert!(((2.0 + 3f64.sqrt()).atan() - 5.0 * PI / 12.0).abs() < 1e-15);
}
