use std::path::Path;

use t4dt_cli::commands::main_with_args;
use t4dt_cli::container;
use t4dt_core::geometry::io::read_mesh;
use t4dt_core::geometry::marching_cubes;
use t4dt_core::pipeline::{compress_scene, CompressOptions, ScalarWidth, SceneFormat};
use t4dt_core::tensor::MemoryBudget;
use t4dt_core::T4dtError;

use t4dt_cli::source::SceneInput;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("t4dt").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn schema_errors(schema_file: &str, doc: &serde_json::Value) -> Vec<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(schema_file);
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    v.iter_errors(doc).map(|e| e.to_string()).collect()
}

#[test]
fn container_round_trips_every_format_and_width() {
    let input = SceneInput::synthetic(12, 5, 0.1).unwrap();
    let budget = MemoryBudget::default();
    for format in SceneFormat::ALL {
        for width in [ScalarWidth::F32, ScalarWidth::F64] {
            let opts = CompressOptions::new(format, input.tau, input.bounds).ranks(Some(6), Some(6)).scalar_width(width);
            let (scene, _) = compress_scene(input.frames(), &opts).unwrap();
            let bytes = container::to_bytes(&scene);
            let back = container::from_bytes(&bytes).unwrap();
            assert_eq!(container::to_bytes(&back), bytes, "{format} {width:?}");
            assert_eq!(back.format(), format);
            assert_eq!(back.true_frame_count(), 5);
            assert_eq!(back.parameter_count(), scene.parameter_count());
            let (h, _) = container::read_header(&bytes).unwrap();
            assert_eq!(h.payload_len, (scene.parameter_count() * width.bytes()) as u64);
            for t in [0, 4] {
                let a = scene.frame_dense(t, &budget).unwrap();
                let b = back.frame_dense(t, &budget).unwrap();
                // stored values are already rounded to the width, so decoding is exact
                assert_eq!(a, b, "{format} {width:?} frame {t}");
            }
        }
    }
}

#[test]
fn corrupted_or_truncated_containers_are_rejected() {
    let input = SceneInput::synthetic(8, 3, 0.1).unwrap();
    let opts = CompressOptions::new(SceneFormat::Oqtt, input.tau, input.bounds);
    let (scene, _) = compress_scene(input.frames(), &opts).unwrap();
    let bytes = container::to_bytes(&scene);

    let mut flipped = bytes.clone();
    let n = flipped.len();
    flipped[n - 10] ^= 0x40;
    assert!(matches!(container::from_bytes(&flipped), Err(T4dtError::Format(_))));

    for cut in [3, 20, n / 2, n - 1] {
        assert!(matches!(container::from_bytes(&bytes[..cut]), Err(T4dtError::Format(_))), "cut at {cut}");
    }
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(container::from_bytes(&longer).is_err());

    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(container::from_bytes(&bad_magic).is_err());
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.t4dt");
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["compress", "--bogus"]).0, 1);
    assert_eq!(run(&["compress", "--synthetic", "--scalar-width", "5", "-o", p(&scene)]).0, 1);
    assert_eq!(run(&["compress", "--synthetic", "--tau", "-1", "-o", p(&scene)]).0, 1);
    assert_eq!(run(&["compress", "--input", p(&dir.path().join("missing")), "-o", p(&scene)]).0, 3);

    let (code, out, _) = run(&["compress", "--synthetic", "--resolution", "16", "--frames", "4", "-o", p(&scene)]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("compression ratio"), "{out}");
    assert!(out.contains("timing"), "{out}");

    let (code, _, err) = run(&["extract", p(&scene), "--frame", "4", "--mesh", p(&dir.path().join("m.obj"))]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(run(&["query", p(&scene), "0.5", "0.5", "0.5", "9"]).0, 2);
    assert_eq!(run(&["query", p(&scene), "2.0", "0.5", "0.5", "0"]).0, 2);

    std::fs::write(dir.path().join("junk.t4dt"), b"not a scene").unwrap();
    assert_eq!(run(&["extract", p(&dir.path().join("junk.t4dt")), "--frame", "0", "--volume", p(&dir.path().join("v.npy"))]).0, 3);
}

#[test]
fn memory_budget_comes_from_the_environment() {
    // the only test that touches this variable
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.t4dt");
    assert_eq!(run(&["compress", "--synthetic", "--resolution", "16", "--frames", "2", "-o", p(&scene)]).0, 0);
    std::env::set_var("T4DT_MEM_BUDGET", "1024");
    let (code, _, err) = run(&["extract", p(&scene), "--frame", "0", "--volume", p(&dir.path().join("v.npy"))]);
    std::env::remove_var("T4DT_MEM_BUDGET");
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("budget"), "{err}");
}

#[test]
fn extracted_mesh_is_the_marching_cubes_surface() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.t4dt");
    let obj = dir.path().join("f.obj");
    let npy = dir.path().join("f.npy");
    let args = ["compress", "--synthetic", "--resolution", "20", "--frames", "3", "--scalar-width", "8", "-o", p(&scene)];
    assert_eq!(run(&args).0, 0);
    let (code, _, err) = run(&["extract", p(&scene), "--frame", "1", "--mesh", p(&obj), "--volume", p(&npy)]);
    assert_eq!(code, 0, "{err}");

    let s = container::read_scene(&scene).unwrap();
    let expected = marching_cubes(&s.frame_dense(1, &MemoryBudget::default()).unwrap(), 0.0, s.bounds()).unwrap();
    let (mesh, dropped) = read_mesh(&obj).unwrap();
    assert_eq!(dropped, 0);
    assert_eq!(mesh.triangles(), expected.triangles());
    assert_eq!(mesh.vertices().len(), expected.vertices().len());
    for (a, b) in mesh.vertices().iter().zip(expected.vertices()) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() <= 1e-12 * b[k].abs().max(1.0));
        }
    }
    let vol = t4dt_cli::npy::read(&npy).unwrap();
    assert_eq!(vol, s.frame_dense(1, &MemoryBudget::default()).unwrap());
}

#[test]
fn query_reports_value_gradient_and_interpolation() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.t4dt");
    assert_eq!(run(&["compress", "--synthetic", "--resolution", "16", "--frames", "2", "--scalar-width", "8", "-o", p(&scene)]).0, 0);
    let parse = |args: &[&str]| -> serde_json::Value {
        let (code, out, err) = run(args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str(&out).unwrap()
    };
    let near = parse(&["query", p(&scene), "0.31", "0.47", "0.52", "1"]);
    let tri = parse(&["query", p(&scene), "0.31", "0.47", "0.52", "1", "--trilinear", "--gradient"]);
    assert!(near.get("gradient").is_none());
    assert_eq!(tri["gradient"].as_array().unwrap().len(), 3);
    assert_ne!(near["value"], tri["value"]);
    let timed = parse(&["query", p(&scene), "0.5", "0.5", "0.5", "0", "--latency", "50"]);
    assert_eq!(timed["latency"]["queries"], 50);
    assert!(timed["latency"]["min_ns"].as_u64().unwrap() <= timed["latency"]["max_ns"].as_u64().unwrap());
}

#[test]
fn self_comparison_is_perfect_and_matches_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.t4dt");
    let frames = dir.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    assert_eq!(run(&["compress", "--synthetic", "--resolution", "24", "--frames", "5", "--max-rank", "8", "-o", p(&scene)]).0, 0);
    for t in 0..5 {
        let f = frames.join(format!("f{t}.npy"));
        assert_eq!(run(&["extract", p(&scene), "--frame", &t.to_string(), "--volume", p(&f)]).0, 0);
    }
    let json = dir.path().join("m.json");
    let csv = dir.path().join("m.csv");
    let (code, out, err) =
        run(&["metrics", p(&scene), "--reference", p(&frames), "--samples", "500", "--json", p(&json), "--csv", p(&csv)]);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report, serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(&json).unwrap()).unwrap());
    assert!(schema_errors("metric_report.schema.json", &report).is_empty(), "{:?}", schema_errors("metric_report.schema.json", &report));
    assert_eq!(report["frames_evaluated"], serde_json::json!([0, 2, 4]));
    assert_eq!(report["l2"], 0.0);
    assert_eq!(report["iou"], 1.0);
    assert_eq!(report["hausdorff"], 0.0);
    assert_eq!(report["chamfer"], 0.0);
    let csv = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("frame,l2,iou,hausdorff,chamfer\n"));

    // the synthetic reference against a lossy scene
    let (code, out, _) = run(&["metrics", p(&scene), "--synthetic", "--frames", "1,3", "--samples", "300"]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(schema_errors("metric_report.schema.json", &report).is_empty());
    assert_eq!(report["frames_evaluated"], serde_json::json!([1, 3]));
    assert!(report["l2"].as_f64().unwrap() > 0.0);
    assert_eq!(run(&["metrics", p(&scene), "--synthetic", "--frames", "5"]).0, 2);
}

#[test]
fn compress_json_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("s.t4dt");
    for format in ["tt", "tucker", "tt-tucker", "qtt", "oqtt"] {
        let (code, out, err) =
            run(&["compress", "--synthetic", "--resolution", "10", "--frames", "3", "--format", format, "-o", p(&scene), "--json"]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let errors = schema_errors("compress_report.schema.json", &v);
        assert!(errors.is_empty(), "{format}: {errors:?}");
        assert_eq!(v["format"], format);
        assert_eq!(v["file_bytes"], std::fs::metadata(&scene).unwrap().len());
        let params = v["storage"]["true_frames"]["parameter_count"].as_u64().unwrap();
        assert_eq!(v["storage"]["payload_bytes"].as_u64().unwrap(), params * 4);
    }
}

#[test]
fn bench_sweeps_formats_times_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let (code, _, err) = run(&[
        "bench", "--synthetic", "--resolution", "16", "--frames", "4", "--formats", "tt,tucker,tt-tucker,qtt,oqtt", "--ranks",
        "2,4,8,full", "--samples", "200", "-o", p(&csv),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 5 * 4);
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for chunk in rows.chunks(4) {
        let errs: Vec<f64> = chunk.iter().map(|r| r[col("frame_stage_error")].parse().unwrap()).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{}: {errs:?}", chunk[0][0]);
        }
        assert!(errs[3] < 1e-12, "{}: full-rank error {}", chunk[0][0], errs[3]);
        assert_eq!(chunk[3][col("rank_spatial")], "full");
        for r in chunk {
            let params: u64 = r[col("parameters")].parse().unwrap();
            assert_eq!(r[col("payload_bytes")].parse::<u64>().unwrap(), params * 4);
        }
    }
    assert_eq!(run(&["bench", "--synthetic", "--ranks", "zero"]).0, 1);
}

#[test]
fn synth_writes_readable_frame_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let vols = dir.path().join("v");
    let meshes = dir.path().join("m");
    assert_eq!(run(&["synth", "-o", p(&vols), "--resolution", "12", "--frames", "3"]).0, 0);
    assert_eq!(run(&["synth", "-o", p(&meshes), "--kind", "mesh", "--frames", "3", "--subdivisions", "2"]).0, 0);
    let scene = dir.path().join("s.t4dt");
    for input in [&vols, &meshes] {
        let (code, _, err) = run(&["compress", "--input", p(input), "--resolution", "12", "--format", "tt", "-o", p(&scene)]);
        assert_eq!(code, 0, "{err}");
        let s = container::read_scene(&scene).unwrap();
        assert_eq!(s.true_frame_count(), 3);
        assert_eq!(s.resolution(), [12; 3]);
    }
}
