use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spacetime_stats::evaluation::evaluate_field;
use spacetime_stats::horn_schunck::{horn_schunck, HsParams};
use spacetime_stats::norm::{divisive_normalize, unit_variance, GaussianWindow, NormKind};
use spacetime_stats::regularity::{
    displacement_range, estimate_patch_motion, four_step_trajectory_search, regularity_map,
    MapConfig, SearchConfig,
};
use spacetime_stats::stats::{gaussian_reference, histogram, kld, Binning};
use spacetime_stats::synthetic::{constant_flows, translating_sequence, TextureSpec};
use spacetime_stats::trajectories::{
    collect_volume, displaced_frame_difference, make_trajectory, Displacement, Origin, Patch,
    TrajectorySource,
};
use spacetime_stats::video_io::{read_flo, write_flo, FlowField};

#[test]
fn difference_along_true_motion_vanishes() {
    let seq = translating_sequence(&TextureSpec::default(), 64, 64, 5, (2, -1), 0.0, 3).unwrap();
    let patch = Patch::square(16, 16, 24);
    for t in 1..5 {
        let d = displaced_frame_difference(
            &seq,
            0,
            Displacement::new(2 * t as i32, -(t as i32), t),
            patch,
        )
        .unwrap();
        assert!(d.as_slice().iter().all(|&v| v == 0.0), "t = {t}");
    }
    let off = displaced_frame_difference(&seq, 0, Displacement::new(0, 0, 1), patch).unwrap();
    assert!(off.as_slice().iter().any(|&v| v != 0.0));
}

#[test]
fn motion_trajectory_beats_static_one() {
    let seq = translating_sequence(&TextureSpec::default(), 96, 96, 9, (1, 1), 2.0, 11).unwrap();
    let flows = constant_flows(96, 96, 8, (1, 1));
    let origin = Origin::new(40, 40, 0);
    let window = GaussianWindow::spatio_temporal(5, 5, 3).unwrap();
    let reference = gaussian_reference(Binning::default()).unwrap();
    let score = |source| {
        let traj = make_trajectory(source, origin, 8).unwrap();
        let vol = collect_volume(&seq, &traj, 41).unwrap();
        let coeffs =
            unit_variance(&divisive_normalize(&vol.diffs, NormKind::Stdn, &window, 0.5).unwrap())
                .unwrap();
        kld(
            &histogram(coeffs.as_slice(), Binning::default()).unwrap(),
            &reference,
        )
        .unwrap()
    };
    let motion = score(TrajectorySource::Motion(&flows));
    let still = score(TrajectorySource::NonDisplaced);
    assert!(motion < still, "motion {motion} static {still}");
}

#[test]
fn gaussian_samples_score_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..200_000).map(|_| normal.sample(&mut rng)).collect();
    let b = Binning::default();
    let d = kld(&histogram(&xs, b).unwrap(), &gaussian_reference(b).unwrap()).unwrap();
    assert!(d < 2e-3, "{d}");
}

#[test]
fn regularity_map_finds_integer_motion() {
    let seq = translating_sequence(&TextureSpec::default(), 96, 96, 2, (-3, 2), 0.0, 8).unwrap();
    let n = 51;
    let radius = displacement_range(n).unwrap();
    assert_eq!(radius, 8);
    let map = regularity_map(
        &seq,
        Patch::square(22, 22, n),
        0,
        radius,
        &MapConfig::default(),
    )
    .unwrap();
    assert_eq!(map.argmin(), Some((-3, 2)));
    assert_eq!(map.get(-3, 2), 0.0);
    // Noise-free: the exact match alone is averaged.
    let est = estimate_patch_motion(&map).unwrap();
    assert_eq!((est.u, est.v, est.set_size), (-3.0, 2.0, 1));

    let noisy = translating_sequence(&TextureSpec::default(), 96, 96, 2, (-3, 2), 2.0, 8).unwrap();
    let map = regularity_map(
        &noisy,
        Patch::square(22, 22, n),
        0,
        radius,
        &MapConfig::default(),
    )
    .unwrap();
    // 5% of the 17 x 17 map, rounded up.
    assert_eq!(estimate_patch_motion(&map).unwrap().set_size, 15);
}

#[test]
fn trajectory_search_recovers_path_on_smooth_texture() {
    let spec = TextureSpec {
        disc_contrast: 0.2,
        blur: 6,
        grain: 0.0,
        min_radius: 4.0,
        max_radius: 80.0,
        ..TextureSpec::default()
    };
    let seq = translating_sequence(&spec, 220, 220, 11, (-2, 1), 2.0, 0).unwrap();
    let config = SearchConfig::new(NormKind::Tdn).unwrap();
    let r = four_step_trajectory_search(&seq, Origin::new(110, 110, 0), &config).unwrap();
    assert_eq!(r.endpoint, (-20, 10));
    assert_eq!(r.per_frame_motion(), (-2.0, 1.0));
    for w in r.steps.windows(2) {
        assert!(w[1].incumbent_kld <= w[0].incumbent_kld);
    }
}

#[test]
fn horn_schunck_unit_shift() {
    let seq = translating_sequence(&TextureSpec::default(), 96, 96, 2, (1, 0), 0.0, 4).unwrap();
    let r = horn_schunck(seq.frame(0), seq.frame(1), &HsParams::default()).unwrap();
    let mut est = r.flow.clone();
    let gt = FlowField::constant(96, 96, 1.0, 0.0);
    for y in 0..96 {
        for x in 0..96 {
            if !(16..80).contains(&x) || !(16..80).contains(&y) {
                est.invalidate(x, y);
            }
        }
    }
    let report = evaluate_field(&est, &gt).unwrap();
    assert!(report.mean_ee < 0.05, "{report:?}");
    assert!(r.residuals.last().unwrap() <= r.residuals.first().unwrap());
}

#[test]
fn flo_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.flo");
    let mut f = FlowField::constant(7, 5, 0.25, -1.5);
    f.invalidate(3, 2);
    write_flo(&f, &path).unwrap();
    let g = read_flo(&path).unwrap();
    assert_eq!(f, g);
    assert_eq!(g.valid_count(), 34);
    assert_abs_diff_eq!(g.get(0, 0).unwrap().1, -1.5);
}

#[test]
fn horn_schunck_mirror_equivariance() {
    let seq = translating_sequence(&TextureSpec::default(), 80, 64, 2, (1, -1), 2.0, 6).unwrap();
    let mirror = |p: &spacetime_stats::Plane| {
        spacetime_stats::Plane::from_fn(p.width(), p.height(), |x, y| p.get(p.width() - 1 - x, y))
    };
    let params = HsParams {
        iterations: 50,
        ..HsParams::default()
    };
    let a = horn_schunck(seq.frame(0), seq.frame(1), &params)
        .unwrap()
        .flow;
    let b = horn_schunck(&mirror(seq.frame(0)), &mirror(seq.frame(1)), &params)
        .unwrap()
        .flow;
    // The derivative stencils sit half a pixel right of their pixel, so
    // mirrored pixel x lines up with pixel w - 2 - x. The clamped border
    // columns do not line up and smoothing carries that inward, hence the
    // wide margin.
    let mut worst = 0.0f32;
    for y in 20..44 {
        for x in 20..60 {
            let (u, v) = a.get(80 - 2 - x, y).unwrap();
            let (um, vm) = b.get(x, y).unwrap();
            worst = worst.max((um + u).abs()).max((vm - v).abs());
        }
    }
    assert!(worst < 1e-5, "{worst}");
}

#[test]
fn tiling_leaves_partial_margins_invalid() {
    let seq = translating_sequence(&TextureSpec::default(), 256, 256, 2, (0, 0), 0.0, 1).unwrap();
    let field =
        spacetime_stats::regularity::estimate_flow_field(&seq, 0, 81, &MapConfig::default())
            .unwrap();
    // 3 x 81 = 243, leaving 13-pixel margins on the right and bottom.
    assert_eq!(field.valid_count(), 243 * 243);
    assert!(field.is_valid(242, 242) && !field.is_valid(243, 0) && !field.is_valid(0, 243));
    // Static and noise-free: every tile matches exactly at zero.
    assert_eq!(field.get(100, 100), Some((0.0, 0.0)));
    assert_eq!(field.get(10, 10), Some((0.0, 0.0)));
}
