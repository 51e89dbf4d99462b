use t4dt_core::decompose::{tt_svd, TruncationSpec};
use t4dt_core::geometry::synth::{sphere_tsdf, MovingSphere};
use t4dt_core::geometry::SceneBounds;
use t4dt_core::pipeline::{
    compress_scene, query_gradient, query_point, CompressOptions, CompressedScene, MergeStrategy, Sampling,
    ScalarWidth, SceneFormat, ScenePayload, SceneLayout,
};
use t4dt_core::quantics::QMode;
use t4dt_core::tensor::{DenseVolume, MemoryBudget};
use t4dt_core::T4dtError;

const TAU: f64 = 0.05;

fn lossless(format: SceneFormat) -> CompressOptions {
    CompressOptions::new(format, TAU, SceneBounds::unit()).scalar_width(ScalarWidth::F64)
}

fn compress(frames: &[DenseVolume], opts: &CompressOptions) -> CompressedScene {
    compress_scene(frames.iter().cloned().map(Ok), opts).unwrap().0
}

fn rel_err(a: &DenseVolume, b: &DenseVolume) -> f64 {
    a.distance(b).unwrap() / b.frobenius_norm().max(1e-300)
}

fn budget() -> MemoryBudget {
    MemoryBudget::unlimited()
}

#[test]
fn single_frame_scene_is_the_frame() {
    let f = MovingSphere::standard(12, 1, TAU).frame(0).unwrap();
    for format in SceneFormat::ALL {
        let s = compress(std::slice::from_ref(&f), &lossless(format));
        assert_eq!(s.true_frame_count(), 1);
        assert_eq!(s.padded_frame_count(), 1);
        let back = s.frame_dense(0, &budget()).unwrap();
        assert!(rel_err(&back, &f) < 1e-10, "{format}");
        if let ScenePayload::Tt(t) = s.payload() {
            // unit time mode after the stored frame
            assert_eq!(t.shape(), vec![12, 12, 12, 1]);
            assert_eq!(*t.ranks().last().unwrap(), 1);
        }
    }
}

#[test]
fn identical_frames_collapse_in_time() {
    let f = MovingSphere::standard(16, 1, TAU).frame(0).unwrap();
    let frames = vec![f.clone(); 4];
    let single = tt_svd(&f, &TruncationSpec::rank(6)).unwrap().to_dense(&budget()).unwrap();
    for format in [SceneFormat::Tt, SceneFormat::TtTucker] {
        let opts = lossless(format).ranks(Some(6), Some(6));
        let s = compress(&frames, &opts);
        for i in 0..4 {
            let got = s.frame_dense(i, &budget()).unwrap();
            assert!(got.distance(&single).unwrap() < 1e-10 * single.frobenius_norm(), "{format} frame {i}");
        }
        let ranks = s.payload().ranks();
        assert_eq!(ranks[3], 1, "{format} time rank {ranks:?}");
    }
    for format in [SceneFormat::Qtt, SceneFormat::Oqtt] {
        let s = compress(&frames, &lossless(format));
        for i in 0..4 {
            let got = s.frame_dense(i, &budget()).unwrap();
            assert!(rel_err(&got, &f) < 1e-10, "{format} frame {i}");
        }
        // bonds next to a time digit carry no extra rank
        let SceneLayout::Quantized(l) = s.layout() else { panic!() };
        let ranks = s.payload().ranks();
        for (d, m) in l.schedule().iter().enumerate() {
            if let QMode::T(_) = m {
                assert_eq!(ranks[d], ranks[d + 1], "{format} ranks {ranks:?}");
            }
        }
    }
}

#[test]
fn lossless_moving_sphere_matches_per_frame_oracle() {
    let src = MovingSphere::standard(32, 8, TAU);
    let frames: Vec<DenseVolume> = src.stream().map(Result::unwrap).collect();
    let oracle: Vec<DenseVolume> = frames
        .iter()
        .map(|f| tt_svd(f, &TruncationSpec::lossless()).unwrap().to_dense(&budget()).unwrap())
        .collect();
    for format in SceneFormat::ALL {
        let s = compress(&frames, &lossless(format));
        for i in 0..8 {
            let got = s.frame_dense(i, &budget()).unwrap();
            assert!(rel_err(&got, &oracle[i]) < 1e-9, "{format} frame {i}: {}", rel_err(&got, &oracle[i]));
            assert!(rel_err(&got, &frames[i]) < 1e-10, "{format} frame {i}");
        }
    }
}

#[test]
fn frame_index_past_true_count_is_a_range_error() {
    let frames: Vec<DenseVolume> = MovingSphere::standard(8, 5, TAU).stream().map(Result::unwrap).collect();
    for format in SceneFormat::ALL {
        let s = compress(&frames, &lossless(format));
        assert!(s.extract_frame(4).is_ok());
        assert!(matches!(s.extract_frame(5), Err(T4dtError::Range(_))), "{format}");
        assert!(query_point(&s, [0.5; 3], 5, Sampling::Nearest).is_err());
        if format.quant_kind().is_some() {
            assert_eq!(s.padded_frame_count(), 8);
        }
    }
}

#[test]
fn padded_frames_repeat_the_last_frame() {
    let frames: Vec<DenseVolume> = MovingSphere::standard(8, 3, TAU).stream().map(Result::unwrap).collect();
    let s = compress(&frames, &lossless(SceneFormat::Qtt));
    assert_eq!(s.padded_frame_count(), 4);
    for (x, y, z) in [(0, 0, 0), (3, 4, 5), (7, 7, 7)] {
        let want = frames[2].get(&[x, y, z]).unwrap();
        let SceneLayout::Quantized(l) = s.layout() else { panic!() };
        let idx = l.voxel_to_qindex(x, y, z, 3).unwrap();
        let ScenePayload::Quantized(tt) = s.payload() else { panic!() };
        assert!((tt.element(&idx).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn tree_and_fold_agree_at_full_rank() {
    let frames: Vec<DenseVolume> = MovingSphere::standard(12, 7, TAU).stream().map(Result::unwrap).collect();
    for format in [SceneFormat::Tt, SceneFormat::TtTucker] {
        let tree = compress(&frames, &lossless(format));
        let mut opts = lossless(format);
        opts.merge = MergeStrategy::Fold;
        let fold = compress(&frames, &opts);
        for i in 0..frames.len() {
            let a = tree.frame_dense(i, &budget()).unwrap();
            let b = fold.frame_dense(i, &budget()).unwrap();
            assert!(rel_err(&a, &b) < 1e-10, "{format} frame {i}");
        }
    }
    let mut opts = lossless(SceneFormat::Oqtt);
    opts.merge = MergeStrategy::Fold;
    assert!(compress_scene(frames.iter().cloned().map(Ok), &opts).is_err());
}

#[test]
fn rank_caps_are_respected() {
    let frames: Vec<DenseVolume> = MovingSphere::standard(16, 6, TAU).stream().map(Result::unwrap).collect();
    let (rs, rt) = (5, 3);
    for format in [SceneFormat::Tt, SceneFormat::TtTucker, SceneFormat::Qtt, SceneFormat::Oqtt] {
        let s = compress(&frames, &lossless(format).ranks(Some(rs), Some(rt)));
        let ranks = s.payload().ranks();
        match s.layout() {
            SceneLayout::Grid { .. } => {
                assert!(ranks[1] <= rs && ranks[2] <= rs, "{format} {ranks:?}");
                assert!(ranks[3] <= rt, "{format} {ranks:?}");
            }
            SceneLayout::Quantized(l) => {
                let sched = l.schedule();
                for b in 1..sched.len() {
                    let cap = if sched[b - 1].is_time() || sched[b].is_time() { rt } else { rs.max(rt) };
                    assert!(ranks[b] <= cap, "{format} bond {b}: {ranks:?}");
                }
            }
        }
    }
    let s = compress(&frames, &lossless(SceneFormat::Tucker).ranks(Some(rs), Some(rt)));
    let r = s.payload().ranks();
    assert!(r[..3].iter().all(|&x| x <= rs) && r[3] <= rt, "{r:?}");
}

#[test]
fn streaming_holds_at_most_two_dense_frames() {
    let src = MovingSphere::standard(16, 9, TAU);
    for format in [SceneFormat::Tt, SceneFormat::TtTucker, SceneFormat::Qtt, SceneFormat::Oqtt] {
        let (_, stats) = compress_scene(src.stream(), &lossless(format)).unwrap();
        assert!(stats.peak_dense_frames <= 2, "{format}: {}", stats.peak_dense_frames);
        assert_eq!(stats.frames, 9);
    }
}

#[test]
fn invalid_sequences_are_rejected() {
    let opts = lossless(SceneFormat::Tt);
    assert!(compress_scene(std::iter::empty(), &opts).is_err());
    let a = DenseVolume::zeros(vec![4, 4, 4]).unwrap();
    let b = DenseVolume::zeros(vec![4, 4, 5]).unwrap();
    let err = compress_scene(vec![Ok(a.clone()), Ok(b)], &opts).unwrap_err();
    assert!(matches!(err, T4dtError::ShapeMismatch(_)));
    let flat = DenseVolume::zeros(vec![4, 4]).unwrap();
    assert!(compress_scene(vec![Ok(flat)], &opts).is_err());
    let mut bad = lossless(SceneFormat::Tt);
    bad.tau = 0.0;
    assert!(compress_scene(vec![Ok(a)], &bad).is_err());
}

#[test]
fn f32_width_rounds_the_payload_once() {
    let frames: Vec<DenseVolume> = MovingSphere::standard(8, 2, TAU).stream().map(Result::unwrap).collect();
    let s = compress(&frames, &lossless(SceneFormat::Tt).scalar_width(ScalarWidth::F32));
    let ScenePayload::Tt(t) = s.payload() else { panic!() };
    for c in t.cores() {
        assert!(c.data().iter().all(|&v| v as f32 as f64 == v));
    }
    let back = s.frame_dense(1, &budget()).unwrap();
    assert!(rel_err(&back, &frames[1]) < 1e-5);
}

fn sphere_scene(format: SceneFormat, res: usize) -> (CompressedScene, MovingSphere) {
    let src = MovingSphere::standard(res, 2, TAU);
    let (s, _) = compress_scene(src.stream(), &lossless(format)).unwrap();
    (s, src)
}

#[test]
fn point_queries_match_the_grid() {
    let (s, src) = sphere_scene(SceneFormat::Oqtt, 16);
    let dense = s.frame_dense(1, &budget()).unwrap();
    let res = [16; 3];
    for idx in [[0, 0, 0], [5, 9, 2], [15, 15, 15], [8, 8, 8]] {
        let p = src.bounds.voxel_center(res, idx);
        let v = query_point(&s, p, 1, Sampling::Nearest).unwrap();
        assert!((v - dense.get(&idx).unwrap()).abs() < 1e-12);
        let tri = query_point(&s, p, 1, Sampling::Trilinear).unwrap();
        assert!((tri - v).abs() < 1e-12);
    }
    // deep inside the solid and far outside are clamped
    let c = src.center(0);
    assert!((query_point(&s, c, 0, Sampling::Nearest).unwrap() - TAU).abs() < 1e-12);
    assert!((query_point(&s, [0.02, 0.02, 0.02], 0, Sampling::Nearest).unwrap() + TAU).abs() < 1e-12);
    assert!(matches!(query_point(&s, [1.5, 0.5, 0.5], 0, Sampling::Nearest), Err(T4dtError::Range(_))));
}

#[test]
fn zero_level_set_queries_are_small() {
    let (s, src) = sphere_scene(SceneFormat::Tt, 32);
    let diag = 3f64.sqrt() / 32.0;
    let c = src.center(1);
    for dir in [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.6, 0.0, 0.8], [-0.48, 0.6, 0.64]] {
        let p = [0, 1, 2].map(|a| c[a] + src.radius * dir[a]);
        assert!(query_point(&s, p, 1, Sampling::Nearest).unwrap().abs() <= diag);
    }
}

#[test]
fn gradients() {
    // linear field, unclamped everywhere
    let a = 0.3;
    let res = [16, 16, 16];
    let bounds = SceneBounds::unit();
    let f = DenseVolume::from_fn(res.to_vec(), |i| a * bounds.voxel_center(res, [i[0], i[1], i[2]])[0]).unwrap();
    let opts = CompressOptions::new(SceneFormat::Tt, 1.0, bounds).scalar_width(ScalarWidth::F64);
    let (s, _) = compress_scene(vec![Ok(f)], &opts).unwrap();
    let g = query_gradient(&s, bounds.voxel_center(res, [7, 7, 7]), 0, Sampling::Nearest).unwrap();
    assert!((g[0] - a).abs() < 1e-6 && g[1].abs() < 1e-6 && g[2].abs() < 1e-6, "{g:?}");
    assert!(query_gradient(&s, [0.01, 0.5, 0.5], 0, Sampling::Nearest).is_err());

    // sphere at 64³: unit radial away from the clamp band, pointing inward (positive inside)
    let src = MovingSphere { tau: 0.2, ..MovingSphere::standard(64, 1, 0.2) };
    let (s, _) = compress_scene(src.stream(), &lossless(SceneFormat::Tt).ranks(None, None)).unwrap();
    let c = src.center(0);
    for dir in [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.6, 0.8, 0.0]] {
        let p = [0, 1, 2].map(|k| c[k] + 0.2 * dir[k]);
        let g = query_gradient(&s, p, 0, Sampling::Nearest).unwrap();
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        assert!((n - 1.0).abs() <= 0.1, "{g:?}");
        let radial = -(g[0] * dir[0] + g[1] * dir[1] + g[2] * dir[2]) / n;
        assert!(radial > 0.95, "{g:?}");
    }
    // clamped region
    let far = [0.05, 0.05, 0.05];
    assert_eq!(sphere_tsdf(far, c, src.radius, 0.2), -0.2);
    let g = query_gradient(&s, far, 0, Sampling::Nearest).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-9), "{g:?}");
}

#[test]
fn storage_report_counts_both_denominators() {
    let frames: Vec<DenseVolume> = MovingSphere::standard(8, 5, TAU).stream().map(Result::unwrap).collect();
    let s = compress(&frames, &lossless(SceneFormat::Qtt));
    let st = s.storage();
    assert_eq!(st.true_frames.parameter_count as usize, s.parameter_count());
    assert_eq!(st.true_frames.uncompressed_count, 8 * 8 * 8 * 5);
    assert_eq!(st.padded.uncompressed_count, 8 * 8 * 8 * 8);
    assert_eq!(st.payload_bytes, (s.parameter_count() * 8) as u64);
}
