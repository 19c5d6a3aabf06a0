use lenia_evo_wasm_demo::{growth_curve_values, kernel_profile_values, ring_vs_cast_values, Demo};

const K: usize = 15;

// Layer of gene p (0..9 as r1 w1 b1 r2 w2 b2 m s h) for kernel k.
fn genes_with(k: usize, values: [(usize, f32); 3]) -> Vec<f32> {
    let mut g = vec![0.5f32; 9 * K];
    for (p, v) in values {
        g[p * K + k] = v;
    }
    g
}

#[test]
fn growth_curve_matches_a_direct_evaluation() {
    let (gm, gs, gh) = (0.3f32, 0.4f32, 0.7f32);
    let g = genes_with(4, [(6, gm), (7, gs), (8, gh)]);
    let m = 0.05 + 0.45 * gm as f64;
    let s = 0.001 + 0.199 * gs as f64;
    let h = gh as f64;
    let curve = growth_curve_values(&g, 4, 11).unwrap();
    assert_eq!(curve.len(), 11);
    for (i, got) in curve.iter().enumerate() {
        let u = i as f64 / 10.0;
        let want = h * (2.0 * (-(u - m).powi(2) / (2.0 * s * s)).exp() - 1.0);
        assert!((got - want).abs() < 1e-4, "u={u}: {got} vs {want}");
    }
}

#[test]
fn zero_height_growth_is_flat() {
    let g = genes_with(0, [(6, 0.5), (7, 0.5), (8, 0.0)]);
    assert!(growth_curve_values(&g, 0, 21).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn single_bump_profile_peaks_at_its_center() {
    // r1 = 0.5, b1 = 1, second bump off.
    let mut g = genes_with(2, [(0, 0.5), (2, 1.0), (5, 0.0)]);
    g[K + 2] = 0.2;
    let p = kernel_profile_values(&g, 2, 101).unwrap();
    let peak = p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(peak, 50);
    assert!((p[50] - 1.0).abs() < 1e-12);
}

#[test]
fn ring_vs_cast_has_two_rows_and_an_error() {
    let g = vec![0.5f32; 9 * K];
    let out = ring_vs_cast_values(&g, 0, 12, 24).unwrap();
    assert_eq!(out.len(), 2 * 25 + 1);
    let err = *out.last().unwrap();
    assert!(err.is_finite() && err >= 0.0 && err < 0.2, "{err}");
}

#[test]
fn bad_inputs_are_rejected() {
    let g = vec![0.5f32; 9 * K];
    assert!(growth_curve_values(&g[..10], 0, 5).is_err());
    assert!(kernel_profile_values(&g, K, 5).is_err());
    let mut out_of_range = g.clone();
    out_of_range[0] = 1.5;
    assert!(growth_curve_values(&out_of_range, 0, 5).is_err());
}

#[test]
fn restart_with_a_seed_is_repeatable() {
    let mut demo = Demo::create(64, 64, 1).unwrap();
    let frame = |d: &mut Demo| {
        d.restart(42);
        for _ in 0..3 {
            d.step_world().unwrap();
        }
        d.rgba()
    };
    let a = frame(&mut demo);
    let b = frame(&mut demo);
    assert_eq!(a.len(), 64 * 64 * 4);
    assert!(a == b);
    assert!(a.chunks_exact(4).any(|px| px[..3] != [0, 0, 0]));
}
