use std::sync::Arc;

use super::*;
use crate::cutoff::{default_cutoff, make_standard_cutoff};
use crate::kernel::SingularKernel;

fn const_kernel(n: usize, gamma: f64) -> SingularKernel<f64> {
    SingularKernel::r_independent(n, gamma, "const", Arc::new(|_: &[f64]| 1.0)).unwrap()
}

fn quick_params(dim: usize) -> SynthesisParams<f64> {
    let mut p = SynthesisParams::default_for_dim(dim);
    p.ladder = vec![0.0625, 0.03125, 0.015625, 0.0078125];
    p.tol = 0.1;
    p
}

#[test]
fn default_stencil_examples() {
    let s = Stencil::default_stencil(0, 2);
    assert_eq!(s.points(), &[vec![0, 0]]);

    let s = Stencil::default_stencil(2, 2);
    assert_eq!(
        s.points(),
        &[
            vec![0, 0],
            vec![0, 1],
            vec![1, 0],
            vec![0, 2],
            vec![1, 1],
            vec![2, 0]
        ]
    );
    assert_eq!(s.len(), 6);

    let s = Stencil::default_stencil(2, 1);
    assert_eq!(s.points(), &[vec![0], vec![1], vec![2]]);
}

#[test]
fn stencil_validation() {
    assert!(Stencil::new(2, 1, vec![vec![0, 0], vec![1, 0]]).is_err()); // wrong count
    assert!(Stencil::new(2, 1, vec![vec![1, 0], vec![0, 1], vec![1, 1]]).is_err()); // no origin
    assert!(Stencil::new(2, 1, vec![vec![0, 0], vec![0, 0], vec![1, 0]]).is_err()); // duplicate
    assert!(Stencil::new(2, 1, vec![vec![0, 0], vec![-1, 0], vec![1, 0]]).is_ok());
}

#[test]
fn k_matrix_order_zero_is_identity() {
    let s = Stencil::default_stencil(0, 2);
    let idx = enumerate_multi_indices(0, 2);
    let k = assemble_k(&s, &[0.3f64, -0.1], &idx).unwrap();
    assert_eq!(k, vec![1.0]);
}

#[test]
fn k_matrix_is_transposed_vandermonde_in_1d() {
    let s = Stencil::default_stencil(2, 1);
    let idx = enumerate_multi_indices(2, 1);
    let k = assemble_k(&s, &[0.0f64], &idx).unwrap();
    // rows: powers 0,1,2 of nodes 0,1,2
    assert_eq!(k, vec![1.0, 1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 1.0, 4.0]);
}

#[test]
fn collinear_stencil_is_singular() {
    let s = Stencil::new(2, 1, vec![vec![-1, 0], vec![0, 0], vec![1, 0]]).unwrap();
    let idx = enumerate_multi_indices(1, 2);
    let k = assemble_k(&s, &[0.2f64, 0.1], &idx).unwrap();
    // Exactly singular up to roundoff: an enormous (or infinite) condition
    // estimate, depending on how the elimination rounds.
    assert!(condition_estimate(&k, 3) > 1e14);

    let good = Stencil::default_stencil(1, 2);
    let k = assemble_k(&good, &[0.2f64, 0.1], &idx).unwrap();
    let cond = condition_estimate(&k, 3);
    assert!(cond.is_finite() && cond < 1e3, "condition {cond}");
}

#[test]
fn collinear_stencil_reports_degenerate() {
    let s = Stencil::new(2, 1, vec![vec![-1, 0], vec![0, 0], vec![1, 0]]).unwrap();
    let kernel = const_kernel(2, -1.0);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(2);
    let template = synthesis_template(2, &s, &params).unwrap();
    let err = solve_weights(&kernel, &s, &[0.2, 0.1], &template, &cutoff, &params);
    assert!(
        matches!(err, Err(Error::StencilDegenerate { .. })),
        "{err:?}"
    );
}

#[test]
fn r0_tends_to_one_for_smooth_kernel_in_1d() {
    // gamma = 0 makes the integrand smooth, so the punctured-rule error is
    // h * psi(0) plus spectrally small terms: R_0(h) -> 1.
    let kernel = const_kernel(1, 0.0);
    let cutoff = default_cutoff::<f64>();
    let angular = angular_rule::<f64>(1, 1).unwrap();
    let template = GridContext::new(1, 0.05f64, vec![0.0], vec![0], 0.8, 2.0, 4.0).unwrap();
    let beta = MultiIndex::zero(1);
    let mut gaps = Vec::new();
    for k in 4..=8 {
        let h = 0.5f64.powi(k);
        let grid = template.with_spacing(h).unwrap();
        let r0 = compute_r_beta(&kernel, &beta, &grid, &cutoff, &angular, 40).unwrap();
        gaps.push((r0 - 1.0).abs());
    }
    for w in gaps.windows(2) {
        assert!(
            w[1] < w[0] || w[1] < 1e-13,
            "|R_0(h) - 1| must decay: {gaps:?}"
        );
    }
    assert!(*gaps.last().unwrap() < 1e-10, "{gaps:?}");
}

#[test]
fn r0_vanishes_for_odd_kernels() {
    let kernel = SingularKernel::r_independent(
        2,
        -0.5,
        "odd",
        Arc::new(|u: &[f64]| u[0] / (u[0] * u[0] + u[1] * u[1]).sqrt()),
    )
    .unwrap();
    let cutoff = default_cutoff::<f64>();
    let angular = angular_rule::<f64>(2, 64).unwrap();
    let grid = GridContext::new(2, 0.0625f64, vec![0.0; 2], vec![0; 2], 0.8, 2.0, 6.0).unwrap();
    let r0 = compute_r_beta(&kernel, &MultiIndex::zero(2), &grid, &cutoff, &angular, 40).unwrap();
    assert!(r0.abs() < 1e-12, "odd kernel must give R_0 = 0, got {r0}");
}

#[test]
fn r0_levels_agree_to_first_order_in_2d() {
    let kernel = const_kernel(2, -1.0);
    let cutoff = default_cutoff::<f64>();
    let angular = angular_rule::<f64>(2, 64).unwrap();
    let template = GridContext::new(2, 0.05f64, vec![0.0; 2], vec![0; 2], 0.8, 2.0, 6.0).unwrap();
    let beta = MultiIndex::zero(2);
    let a = compute_r_beta(
        &kernel,
        &beta,
        &template.with_spacing(0.5f64.powi(4)).unwrap(),
        &cutoff,
        &angular,
        40,
    )
    .unwrap();
    let b = compute_r_beta(
        &kernel,
        &beta,
        &template.with_spacing(0.5f64.powi(5)).unwrap(),
        &cutoff,
        &angular,
        40,
    )
    .unwrap();
    assert!(
        (a - b).abs() < 0.5f64.powi(4),
        "levels differ by more than O(h): {a} vs {b}"
    );
}

#[test]
fn single_node_system_reproduces_r0() {
    // With stencil {0} the system is 1x1 and omega(h) = R_0(h) exactly.
    let kernel = const_kernel(1, -0.5);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(1);
    let stencil = Stencil::default_stencil(0, 1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    let ws = solve_weights(&kernel, &stencil, &[0.0], &template, &cutoff, &params).unwrap();
    let angular = angular_rule::<f64>(1, 1).unwrap();
    for entry in &ws.ladder {
        let grid = GridContext::new(
            1,
            entry.h,
            vec![0.0],
            vec![0],
            template.h0(),
            template.window_radius(),
            template.kernel_radius(),
        )
        .unwrap();
        let r0 =
            compute_r_beta(&kernel, &MultiIndex::zero(1), &grid, &cutoff, &angular, 40).unwrap();
        assert_eq!(entry.omega[0], r0);
    }
}

#[test]
fn weight_is_one_for_smooth_1d_kernel() {
    let kernel = const_kernel(1, 0.0);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(1);
    let stencil = Stencil::default_stencil(0, 1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    let ws = solve_weights(&kernel, &stencil, &[0.0], &template, &cutoff, &params).unwrap();
    assert!((ws.omega[0] - 1.0).abs() < 1e-6, "omega = {:?}", ws.omega);
    assert!(ws.condition_number.is_finite());
    assert_eq!(ws.provenance, Provenance::Synthesized);
}

#[test]
fn ladder_rejects_bad_spacing_sequences() {
    let kernel = const_kernel(1, 0.0);
    let cutoff = default_cutoff::<f64>();
    let stencil = Stencil::default_stencil(0, 1);
    let mut params = quick_params(1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    params.ladder = vec![0.0625, 0.0625];
    assert!(solve_weights(&kernel, &stencil, &[0.0], &template, &cutoff, &params).is_err());
    params.ladder = vec![0.0625];
    assert!(solve_weights(&kernel, &stencil, &[0.0], &template, &cutoff, &params).is_err());
}

#[test]
fn extrapolation_removes_first_order_error() {
    // omega(h) = 3 - 2h extrapolates to 3 exactly.
    let linear: Vec<LadderEntry<f64>> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| LadderEntry {
            h,
            omega: vec![3.0 - 2.0 * h],
            residual: None,
            rhs_norm: None,
        })
        .collect();
    let (omega, delta) = extrapolate_ladder(&linear);
    assert!((omega[0] - 3.0).abs() < 1e-14);
    assert!(delta.unwrap() < 1e-14);

    // With a quadratic term the extrapolant still beats the finest raw level.
    let curved: Vec<LadderEntry<f64>> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| LadderEntry {
            h,
            omega: vec![3.0 - 2.0 * h + 5.0 * h * h],
            residual: None,
            rhs_norm: None,
        })
        .collect();
    let (omega, _) = extrapolate_ladder(&curved);
    let raw_error: f64 = (curved[2].omega[0] - 3.0).abs();
    assert!((omega[0] - 3.0).abs() < raw_error);
}

#[test]
fn exactness_residual_is_tiny_on_every_level() {
    let kernel = const_kernel(2, -1.0);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(2);
    let stencil = Stencil::default_stencil(1, 2);
    let template = synthesis_template(2, &stencil, &params).unwrap();
    let ws = solve_weights(
        &kernel,
        &stencil,
        &[0.25, -0.125],
        &template,
        &cutoff,
        &params,
    )
    .unwrap();
    for entry in &ws.ladder {
        let rel = entry.residual.unwrap() / entry.rhs_norm.unwrap().max(f64::MIN_POSITIVE);
        assert!(rel < 1e-12, "residual {rel:.3e} at h = {}", entry.h);
    }
}

#[test]
fn cutoff_profile_does_not_move_the_limit() {
    let kernel = const_kernel(1, -0.5);
    let params = quick_params(1);
    let stencil = Stencil::default_stencil(1, 1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    let narrow = make_standard_cutoff(0.5f64, 1.0).unwrap();
    let wide = default_cutoff::<f64>();
    let a = solve_weights(&kernel, &stencil, &[0.2], &template, &wide, &params).unwrap();
    let b = solve_weights(&kernel, &stencil, &[0.2], &template, &narrow, &params).unwrap();
    for (x, y) in a.omega.iter().zip(&b.omega) {
        assert!((x - y).abs() < 1e-5, "{:?} vs {:?}", a.omega, b.omega);
    }
}

#[test]
fn tabulate_grid_shape_and_bitwise_center_entry() {
    let kernel = const_kernel(1, -0.5);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(1);
    let stencil = Stencil::default_stencil(0, 1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    let table = tabulate_weights(&kernel, 0, 2, &template, &cutoff, &params).unwrap();
    assert_eq!(table.entries.len(), 3);
    assert_eq!(table.entries[0].alpha, vec![-0.5]);
    assert_eq!(table.entries[1].alpha, vec![0.0]);
    assert_eq!(table.entries[2].alpha, vec![0.5]);

    let direct = solve_weights(&kernel, &stencil, &[0.0], &template, &cutoff, &params).unwrap();
    let stored = table.entries[1].weights.as_ref().unwrap();
    assert_eq!(stored.omega, direct.omega);
}

#[test]
fn interpolation_reproduces_grid_nodes_and_constants() {
    let kernel = const_kernel(1, -0.5);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(1);
    let stencil = Stencil::default_stencil(0, 1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    let table = tabulate_weights(&kernel, 0, 4, &template, &cutoff, &params).unwrap();

    // Node query reproduces the stored entry exactly.
    let at_node = interpolate_weights(&table, &[-0.25]).unwrap();
    let stored = table.entries[1].weights.as_ref().unwrap();
    assert_eq!(at_node.omega, stored.omega);
    assert_eq!(at_node.provenance, Provenance::Interpolated);

    // Out of range is rejected.
    assert!(matches!(
        interpolate_weights(&table, &[0.6]),
        Err(Error::OutOfRange { .. })
    ));

    // A failed tabulation entry inside the interpolation window surfaces
    // as an error instead of silently contributing garbage.
    let mut broken = table.clone();
    broken.entries[2].weights = None;
    broken.entries[2].error = Some("synthetic failure".into());
    let err = interpolate_weights(&broken, &[-0.2]);
    assert!(matches!(err, Err(Error::InvalidParameters(_))), "{err:?}");
}

#[test]
fn constant_weight_component_interpolates_exactly() {
    // gamma = 0, n = 1, p = 0: the integrand does not depend on alpha, so
    // the tabulated weight is constant (= 1) and the cubic reproduces it.
    let kernel = const_kernel(1, 0.0);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(1);
    let stencil = Stencil::default_stencil(0, 1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    let table = tabulate_weights(&kernel, 0, 4, &template, &cutoff, &params).unwrap();
    let spread = table
        .entries
        .iter()
        .map(|e| (e.weights.as_ref().unwrap().omega[0] - 1.0).abs())
        .fold(0.0f64, f64::max);
    let interp = interpolate_weights(&table, &[0.1234]).unwrap();
    // Lagrange weights sum to 1 up to roundoff, so the interpolant cannot
    // leave the nodes' range by more than a few ulps.
    assert!(
        (interp.omega[0] - 1.0).abs() <= 4.0 * spread + 1e-12,
        "{:?}",
        interp.omega
    );
}

#[test]
fn interpolation_tracks_direct_solves_off_grid() {
    let kernel = const_kernel(2, -1.0);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(2);
    let stencil = Stencil::default_stencil(1, 2);
    let template = synthesis_template(2, &stencil, &params).unwrap();
    let table = tabulate_weights(&kernel, 1, 8, &template, &cutoff, &params).unwrap();

    let alpha = [0.1371, -0.2882];
    let interp = interpolate_weights(&table, &alpha).unwrap();
    let direct = solve_weights(&kernel, &stencil, &alpha, &template, &cutoff, &params).unwrap();
    // Interpolation error is quartic in the grid step: measured 1.2e-3 at
    // resolution 8 and 7.8e-5 at resolution 16 for this kernel.
    for (a, b) in interp.omega.iter().zip(&direct.omega) {
        assert!((a - b).abs() < 5e-3, "interpolated {a} vs direct {b}");
    }
    assert!(!interp.near_tie);
    let near = interpolate_weights(&table, &[0.49, 0.0]).unwrap();
    assert!(near.near_tie);
}

#[test]
fn weight_file_roundtrip() {
    let kernel = const_kernel(1, -0.5);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(1);
    let stencil = Stencil::default_stencil(1, 1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    let ws = solve_weights(&kernel, &stencil, &[0.25], &template, &cutoff, &params).unwrap();

    let json = weight_set_to_json(&ws).unwrap();
    let back: WeightSet<f64> = super::file::weight_set_from_json(&json).unwrap();
    assert_eq!(back.omega, ws.omega);
    assert_eq!(back.alpha, ws.alpha);
    assert_eq!(back.gamma, ws.gamma);
    assert_eq!(back.kernel_id, ws.kernel_id);
    assert_eq!(back.stencil, ws.stencil);
    assert_eq!(back.ladder.len(), ws.ladder.len());
    assert_eq!(back.ladder[1].omega, ws.ladder[1].omega);
    assert_eq!(back.residual_norm, ws.residual_norm);
    assert_eq!(back.condition_number, ws.condition_number);
    assert_eq!(back.provenance, Provenance::File);

    // Reals carry 17 significant digits.
    assert!(json.contains("\"gamma\":-5.0000000000000000e-1"));
}

#[test]
fn table_file_roundtrip() {
    let kernel = const_kernel(1, -0.5);
    let cutoff = default_cutoff::<f64>();
    let params = quick_params(1);
    let stencil = Stencil::default_stencil(0, 1);
    let template = synthesis_template(1, &stencil, &params).unwrap();
    let table = tabulate_weights(&kernel, 0, 2, &template, &cutoff, &params).unwrap();

    let dir = std::env::temp_dir().join("singquad-test-table");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table.json");
    write_weight_table(&table, &path).unwrap();
    let back: WeightTable<f64> = read_weight_table(&path).unwrap();
    assert_eq!(back.resolution(), table.resolution());
    assert_eq!(back.entries.len(), table.entries.len());
    let a = back.entries[1].weights.as_ref().unwrap();
    let b = table.entries[1].weights.as_ref().unwrap();
    assert_eq!(a.omega, b.omega);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn pi_count_matches_weight_set_sizes() {
    let cutoff = default_cutoff::<f64>();
    for (n, p) in [(1usize, 2u32), (2, 1), (2, 2)] {
        let kernel = const_kernel(n, -0.5);
        let params = quick_params(n);
        let stencil = Stencil::default_stencil(p, n);
        let template = synthesis_template(n, &stencil, &params).unwrap();
        let ws = solve_weights(
            &kernel,
            &stencil,
            &vec![0.0; n],
            &template,
            &cutoff,
            &params,
        )
        .unwrap();
        assert_eq!(ws.omega.len(), pi_count(p, n));
    }
}
