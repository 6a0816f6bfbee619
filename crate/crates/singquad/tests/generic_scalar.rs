//! The numerics compile and behave sanely at f32 too; double precision is
//! what the accuracy targets assume.

use std::sync::Arc;

use singquad::lattice::trapezoid;
use singquad::*;

#[test]
fn single_precision_instantiation_tracks_f64() {
    let c32 = default_cutoff::<f32>();
    let c64 = default_cutoff::<f64>();
    assert!((c32.eval_radial(0.875f32) as f64 - c64.eval_radial(0.875)).abs() < 1e-6);

    let grid32 =
        GridContext::<f32>::new(2, 1.0 / 64.0, vec![0.0; 2], vec![0; 2], 0.5, 2.0, 6.0).unwrap();
    let grid64 =
        GridContext64::new(2, 1.0 / 64.0, vec![0.0; 2], vec![0; 2], 0.5, 2.0, 6.0).unwrap();
    let s32 = {
        let c = c32.clone();
        trapezoid(move |x: &[f32]| c.eval_window(1.0, x), 1.0, &grid32).unwrap()
    };
    let s64 = {
        let c = c64.clone();
        trapezoid(move |x: &[f64]| c.eval_window(1.0, x), 1.0, &grid64).unwrap()
    };
    assert!(
        (f64::from(s32) - s64).abs() < 1e-4 * s64.abs(),
        "{s32} vs {s64}"
    );

    let kernel32 =
        SingularKernel::<f32>::r_independent(2, -1.0, "const", Arc::new(|_: &[f32]| 1.0f32))
            .unwrap();
    let angular32 = angular_rule::<f32>(2, 32).unwrap();
    let m32 = moment_integral(&kernel32, &MultiIndex::zero(2), &c32, 1.5, &angular32, 40).unwrap();
    let kernel64 =
        SingularKernel64::r_independent(2, -1.0, "const", Arc::new(|_: &[f64]| 1.0)).unwrap();
    let angular64 = angular_rule::<f64>(2, 32).unwrap();
    let m64 = moment_integral(&kernel64, &MultiIndex::zero(2), &c64, 1.5, &angular64, 40).unwrap();
    assert!(
        (f64::from(m32) - m64).abs() < 1e-4 * m64.abs(),
        "{m32} vs {m64}"
    );
}

/// The README's library example, kept compiling.
#[test]
fn readme_example() -> Result<()> {
    let kernel = SingularKernel64::r_independent(2, -1.0, "const", Arc::new(|_: &[f64]| 1.0))?;
    let stencil = Stencil::default_stencil(1, 2);
    let params = SynthesisParams64::default_for_dim(2);
    let template = synthesis_template(2, &stencil, &params)?;
    let cutoff = default_cutoff::<f64>();
    let alpha = [0.25, -0.125];
    let weights = solve_weights(&kernel, &stencil, &alpha, &template, &cutoff, &params)?;

    let v = SmoothFactor64::new(2, 1.0, "window", {
        let c = cutoff.clone();
        Arc::new(move |x: &[f64]| c.eval_window(1.0, x))
    })?;
    let h = 1.0 / 64.0;
    let grid = GridContext64::new(2, h, alpha.to_vec(), vec![0, 0], 0.1, 2.0, 4.0)?;
    let value = corrected_rule(&kernel, &v, &grid, &weights)?;
    assert!(value.is_finite());
    Ok(())
}
