use lenia_evo::dynamics::{growth_update, potential_fields, recombine, ring_convolutions};
use lenia_evo::engine::snapshot::{read_snapshot, to_bytes};
use lenia_evo::engine::{PatternFile, SimConfig, WorldState};
use lenia_evo::evolution::{
    alpha_mask, apply_alpha, apply_mutation, apply_penalty_draw, diffuse, draw_mutation, draw_penalty, AlphaMode,
    MutationParams,
};
use lenia_evo::field::{convolve_periodic, disk_kernel, threshold_masks, Dims, Fft2D, Field2D, Mask2D, StackedField};
use lenia_evo::genome::{
    build_ring_bank, cast_kernel, growth_value, shell_weights, GeneSchema, Genotype, GrowthForm, GrowthGenes,
    KernelGenes, KernelWiring, RingAssignment, N_CHANNELS, N_GENES, N_KERNELS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stack(seed: u64, dims: Dims, layers: usize, hi: f32) -> StackedField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StackedField::from_vec(
        dims,
        layers,
        (0..dims.len() * layers).map(|_| rng.gen_range(0.0..hi)).collect(),
    )
    .unwrap()
}

/// Zeroes roughly `holes` of the entries, so layers have ragged support.
fn with_holes(mut s: StackedField, seed: u64, holes: f64) -> StackedField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for v in s.as_mut_slice() {
        if rng.gen_bool(holes) {
            *v = 0.0;
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn convolution_is_translation_equivariant(w in 1usize..=16, h in 1usize..=16, dx in -20isize..20, dy in -20isize..20, seed: u64) {
        let dims = Dims::new(w, h);
        let plan = Fft2D::new(dims);
        let f = stack(seed, dims, 1, 1.0).layer_field(0);
        let k = stack(seed.wrapping_add(1), dims, 1, 1.0).layer_field(0);
        let total = k.sum();
        let k = Field2D::from_fn(dims, |x, y| (k.get(x, y) as f64 / total) as f32);
        let spec = plan.spectrum(&k).unwrap();
        let shifted_out = convolve_periodic(&plan, &f.shifted(dx, dy), &spec).unwrap();
        let out_shifted = convolve_periodic(&plan, &f, &spec).unwrap().shifted(dx, dy);
        prop_assert!(shifted_out.max_abs_diff(&out_shifted) <= 1e-6);
    }

    #[test]
    fn masks_are_monotone_in_epsilon(seed: u64, e1 in 0.0f32..1.0, e2 in 0.0f32..1.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let s = stack(seed, Dims::new(9, 7), 4, 1.0);
        let (a, b) = (threshold_masks(&s, lo), threshold_masks(&s, hi));
        let implies = |m: &Mask2D, n: &Mask2D| n.as_slice().iter().zip(m.as_slice()).all(|(&x, &y)| !x || y);
        prop_assert!(implies(&a.all, &b.all));
        prop_assert!(implies(&a.sum, &b.sum));
        for (m, n) in a.same.iter().zip(&b.same) {
            prop_assert!(implies(m, n));
        }
    }

    #[test]
    fn shell_weights_are_continuous(seed: u64, which in 0usize..6, sign in prop::bool::ANY) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schema = GeneSchema::default();
        let g = KernelGenes::random(&mut rng, &schema);
        let mut p = g;
        let e = if sign { 1e-6 } else { -1e-6 };
        match which {
            0 => p.r1 += e,
            1 => p.w1 = (p.w1 + e).max(0.01),
            2 => p.b1 += e,
            3 => p.r2 += e,
            4 => p.w2 = (p.w2 + e).max(0.01),
            _ => p.b2 += e,
        }
        for (a, b) in shell_weights(&g, 24).iter().zip(shell_weights(&p, 24)) {
            prop_assert!((a - b).abs() <= 1e-3);
        }
    }

    #[test]
    fn bipolar_is_twice_unipolar_minus_h(u in 0.0f64..1.0, m in 0.05f64..0.5, s in 0.001f64..0.2, h in 0.0f64..1.0) {
        let g = GrowthGenes { m, s, h };
        let lit = growth_value(u, &g, GrowthForm::Unipolar);
        prop_assert_eq!(growth_value(u, &g, GrowthForm::Bipolar), 2.0 * lit - h);
    }

    #[test]
    fn cast_kernels_have_unit_mass(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = KernelGenes::random(&mut rng, &GeneSchema::default());
        prop_assume!(!g.is_degenerate());
        if let Ok(k) = cast_kernel(&g, 12, Dims::new(32, 30)) {
            prop_assert!((k.sum() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn growth_update_stays_in_unit_range(seed: u64, dt in 0.0f64..2.0) {
        let dims = Dims::new(8, 8);
        let a = stack(seed, dims, N_CHANNELS, 1.0);
        let mut g = stack(seed.wrapping_add(3), dims, N_KERNELS, 2.0);
        for v in g.as_mut_slice() {
            *v -= 1.0;
        }
        prop_assert!(growth_update(&a, &g, &KernelWiring::default(), dt).all_within(0.0, 1.0));
    }

    #[test]
    fn alpha_masking_is_idempotent(seed: u64) {
        let dims = Dims::new(10, 10);
        let u = with_holes(stack(seed, dims, N_KERNELS, 1.0), seed, 0.05);
        let mut p = with_holes(stack(seed.wrapping_add(1), dims, N_GENES, 1.0), seed, 0.01);
        for mode in [AlphaMode::All, AlphaMode::Sum] {
            let alpha = alpha_mask(&u, &p, 0.01, mode);
            apply_alpha(&mut p, &alpha);
            let once = p.clone();
            apply_alpha(&mut p, &alpha);
            prop_assert_eq!(&p, &once);
        }
    }

    #[test]
    fn diffusion_stays_within_dilated_support(seed: u64, holes in 0.5f64..0.99) {
        let dims = Dims::new(20, 16);
        let plan = Fft2D::new(dims);
        let disk = disk_kernel(&plan, 2).unwrap();
        let p = with_holes(stack(seed, dims, N_GENES, 1.0), seed, holes);
        let out = diffuse(&p, &disk, 0.01);
        prop_assert!(out.all_within(0.0, 1.0));
        for l in 0..N_GENES {
            let support = p.layer(l);
            for x in 0..20isize {
                for y in 0..16isize {
                    let near = (-2..=2isize).any(|dx| (-2..=2isize).any(|dy| {
                        dx * dx + dy * dy <= 4 && support[dims.wrapped_index(x + dx, y + dy)] > 0.01
                    }));
                    if !near {
                        prop_assert_eq!(out.get(l, x as usize, y as usize), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn operator_sequences_keep_genes_in_unit_range(seed: u64, ops in prop::collection::vec(0u8..4, 1..12)) {
        let dims = Dims::new(16, 16);
        let plan = Fft2D::new(dims);
        let disk = disk_kernel(&plan, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = stack(seed, dims, N_GENES, 1.0);
        let full = Mask2D::full(dims);
        let params = MutationParams { gamma: 50.0, half_size: 5, delta_max: 0.05 };
        for op in ops {
            match op {
                0 => p = diffuse(&p, &disk, 0.01),
                1 => {
                    let d = draw_mutation(&mut rng, dims, 0.05);
                    apply_mutation(&mut p, &full, &d, params, 0);
                }
                2 => {
                    let d = draw_penalty(&mut rng, 0.05);
                    apply_penalty_draw(&mut p, &full, &full, &d, 40.0, 0);
                }
                _ => {
                    let u = stack(rng.gen(), dims, N_KERNELS, 1.0);
                    let alpha = alpha_mask(&u, &p, 0.01, AlphaMode::All);
                    apply_alpha(&mut p, &alpha);
                }
            }
            prop_assert!(p.all_within(0.0, 1.0));
        }
    }

    #[test]
    fn snapshots_round_trip_bitwise(seed: u64, w in 26usize..40, h in 26usize..40, step in 0u64..1_000_000) {
        let dims = Dims::new(w, h);
        let mut state = WorldState::new(stack(seed, dims, N_CHANNELS, 1.0), stack(seed ^ 1, dims, N_GENES, 1.0), seed).unwrap();
        state.step = step;
        for _ in 0..(seed % 7) {
            state.rng.gen::<u64>();
        }
        let config = SimConfig { seed, ..SimConfig::with_size(w, h) };
        let bytes = to_bytes(&state, &config);
        let (back, cfg) = read_snapshot(&bytes[..]).unwrap();
        prop_assert_eq!(&back, &state);
        prop_assert_eq!(&cfg, &config);
        prop_assert_eq!(to_bytes(&back, &cfg), bytes);
    }
}

#[test]
fn disk_area_matches_lattice_count() {
    let plan = Fft2D::new(Dims::new(40, 40));
    for r in 0..=15usize {
        let ri = r as isize;
        let count = (-ri..=ri)
            .flat_map(|x| (-ri..=ri).map(move |y| (x, y)))
            .filter(|(x, y)| x * x + y * y <= ri * ri)
            .count();
        let disk = disk_kernel(&plan, r).unwrap();
        assert_eq!(disk.area(), count as f64, "r = {r}");
        assert_eq!(disk.field().sum(), count as f64);
    }
}

#[test]
fn rings_partition_the_open_disk() {
    for radius in 1..=16usize {
        let dims = Dims::new(2 * radius + 2, 2 * radius + 2);
        let plan = Fft2D::new(dims);
        for n_ring in [1, 3, radius, 24] {
            for assignment in [RingAssignment::Floor, RingAssignment::Linear] {
                let bank = build_ring_bank(&plan, radius, n_ring, assignment).unwrap();
                for x in 0..dims.width {
                    for y in 0..dims.height {
                        let (dx, dy) = (x.min(dims.width - x) as f64, y.min(dims.height - y) as f64);
                        let inside = dx.hypot(dy) < radius as f64;
                        let shares: Vec<f32> = bank.rings().iter().map(|r| r.field.get(x, y)).collect();
                        let total: f32 = shares.iter().sum();
                        let expect = if inside { 1.0 } else { 0.0 };
                        assert!(
                            (total - expect).abs() <= 1e-6,
                            "R={radius} n={n_ring} {assignment:?} ({x},{y})"
                        );
                        if assignment == RingAssignment::Floor {
                            assert_eq!(shares.iter().filter(|&&s| s != 0.0).count(), usize::from(inside));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn potentials_are_linear_in_the_phenospace() {
    let dims = Dims::new(32, 28);
    let plan = Fft2D::new(dims);
    let bank = build_ring_bank(&plan, 8, 16, RingAssignment::Linear).unwrap();
    let schema = GeneSchema::default();
    let wiring = KernelWiring::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let p = {
            let mut p = StackedField::zeros(dims, N_GENES);
            let g = Genotype::random(&mut rng);
            for (l, &v) in g.as_slice().iter().enumerate() {
                p.layer_mut(l).fill(v);
            }
            p
        };
        let a = stack(rng.gen(), dims, N_CHANNELS, 0.5);
        let b = stack(rng.gen(), dims, N_CHANNELS, 0.5);
        let mut ab = a.clone();
        for (v, w) in ab.as_mut_slice().iter_mut().zip(b.as_slice()) {
            *v += w;
        }
        let pa = potential_fields(&plan, &a, &p, &bank, &wiring, &schema).unwrap();
        let pb = potential_fields(&plan, &b, &p, &bank, &wiring, &schema).unwrap();
        let pab = potential_fields(&plan, &ab, &p, &bank, &wiring, &schema).unwrap();
        for ((x, y), z) in pa.as_slice().iter().zip(pb.as_slice()).zip(pab.as_slice()) {
            assert!((x + y - z).abs() <= 1e-5, "{x} + {y} vs {z}");
        }
    }
}

#[test]
fn shared_ring_convolutions_match_per_kernel_recomputation() {
    let dims = Dims::new(30, 26);
    let plan = Fft2D::new(dims);
    let bank = build_ring_bank(&plan, 8, 16, RingAssignment::Linear).unwrap();
    let schema = GeneSchema::default();
    let wiring = KernelWiring::default();
    let a = stack(4, dims, N_CHANNELS, 1.0);
    let p = stack(5, dims, N_GENES, 1.0);
    let shared = recombine(
        &ring_convolutions(&plan, &bank, &a).unwrap(),
        &p,
        &bank,
        &wiring,
        &schema,
    )
    .unwrap();
    for k in 0..N_KERNELS {
        let convs = ring_convolutions(&plan, &bank, &a).unwrap();
        let alone = recombine(&convs, &p, &bank, &wiring, &schema).unwrap();
        assert_eq!(
            shared.layer(k).iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            alone.layer(k).iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn pattern_files_round_trip() {
    let dims = Dims::new(7, 5);
    let phen = stack(1, dims, N_CHANNELS, 1.0);
    let g = Genotype::random(&mut ChaCha8Rng::seed_from_u64(2));
    let file = PatternFile::with_genotype(&phen, &g, &GeneSchema::default());
    let back = PatternFile::from_json(&file.to_json()).unwrap();
    assert_eq!(back.phenotype().unwrap(), phen);
    assert_eq!(back.averaged().unwrap(), Some(g));
}

#[test]
fn config_json_round_trips_and_rejects_unknown_fields() {
    let c = SimConfig {
        gamma_mut: 1.25,
        seed: 42,
        ..SimConfig::with_size(64, 48)
    };
    assert_eq!(SimConfig::from_json(&c.to_json()).unwrap(), c);
    assert!(SimConfig::from_json(r#"{"width": 64, "bogus": 1}"#).is_err());
}
