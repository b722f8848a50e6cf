use std::sync::Arc;

use rand::Rng;

use penlab::grid::SpaceGrid;
use penlab::parallel::reduce_moments;
use penlab::ray_knight::{sample_y_a, sample_y_minus, sample_y_plus};
use penlab::field::FieldView;
use penlab::rng::{stream, Domain};

const L_MAX: f64 = 40.0;
const N: u64 = 200_000;

/// `∫_0^{L_MAX} dl E[g_j(Y_{l,+}^{y_j})]` by uniform sampling of `l`.
fn level_integral(points: &[f64], seed: u64, gs: &[(f64, &(dyn Fn(f64) -> f64 + Sync))]) -> Vec<(f64, f64)> {
    let grid = Arc::new(SpaceGrid::from_points(points).unwrap());
    let m = reduce_moments(N, gs.len(), |i, out| {
        let mut rng = stream(seed, Domain::Auxiliary, &[i]);
        let l = L_MAX * rng.gen::<f64>();
        let y = sample_y_plus(l, &grid, &mut rng).unwrap();
        for (o, (at, g)) in out.iter_mut().zip(gs) {
            *o = L_MAX * g(y.value_at(*at));
        }
    });
    (0..gs.len()).map(|j| (m.mean(j), m.estimate(j).std_error)).collect()
}

#[test]
fn lebesgue_measure_is_invariant_on_the_two_dimensional_side() {
    let exp = |v: f64| (-v).exp();
    let bump = |v: f64| if (1.0..3.0).contains(&v) { 1.0 } else { 0.0 };
    let mut gs: Vec<(f64, &(dyn Fn(f64) -> f64 + Sync))> = Vec::new();
    for y in [0.5, 1.0, 2.0] {
        gs.push((y, &exp));
        gs.push((y, &bump));
    }
    let got = level_integral(&[0.0, 0.5, 1.0, 2.0], 1, &gs);
    for (j, (v, se)) in got.iter().enumerate() {
        let want = if j % 2 == 0 { 1.0 } else { 2.0 };
        assert!((v - want).abs() <= 3.0 * se, "statistic {j}: {v} ± {se} vs {want}");
    }
}

#[test]
fn zero_dimensional_side_maps_lebesgue_to_atom_plus_lebesgue() {
    let eps = 0.25;
    let exp = |v: f64| (-v).exp();
    let low = move |v: f64| if v <= eps { 1.0 } else { 0.0 };
    let mut gs: Vec<(f64, &(dyn Fn(f64) -> f64 + Sync))> = Vec::new();
    for x in [0.5, 1.0] {
        gs.push((-x, &exp));
        gs.push((-x, &low));
    }
    let got = level_integral(&[-1.0, -0.5, 0.0], 2, &gs);
    for (j, (v, se)) in got.iter().enumerate() {
        let x = [0.5, 1.0][j / 2];
        let want = if j % 2 == 0 { 2.0 * x + 1.0 } else { 2.0 * x + eps };
        assert!((v - want).abs() <= 3.0 * se, "statistic {j}: {v} ± {se} vs {want}");
    }
}

#[test]
fn mirror_symmetry_is_pathwise() {
    let grid = Arc::new(SpaceGrid::uniform(-2.0, 2.0, 0.125).unwrap());
    let mirrored = Arc::new(grid.mirrored());
    for i in 0..200 {
        let l = 0.05 * i as f64;
        let plus = sample_y_plus(l, &mirrored, &mut stream(3, Domain::Auxiliary, &[i])).unwrap();
        let minus = sample_y_minus(l, &grid, &mut stream(3, Domain::Auxiliary, &[i])).unwrap();
        for &y in grid.points() {
            assert_eq!(minus.value_at(y), plus.value_at(-y), "l={l} y={y}");
        }
    }
}

#[test]
fn split_beyond_window_reproduces_plus_branch() {
    let grid = Arc::new(SpaceGrid::uniform(-1.0, 1.0, 0.0625).unwrap());
    for i in 0..200 {
        let l = 0.1 * i as f64;
        let a = sample_y_a(l, 3.0, &grid, &mut stream(4, Domain::Auxiliary, &[i])).unwrap();
        let p = sample_y_plus(l, &grid, &mut stream(4, Domain::Auxiliary, &[i])).unwrap();
        for &y in grid.points() {
            assert_eq!(a.value_at(y), p.value_at(y));
        }
    }
}
