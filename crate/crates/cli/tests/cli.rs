use std::path::Path;
use std::process::Command;

use tempfile::TempDir;
use voxskel_cli::bench::{write_records, BenchRecord};
use voxskel_cli::commands::{
    audit_artifacts, cmd_build, cmd_export, cmd_plan, cmd_world, load_artifacts, ExportKind, PlanArgs, ESDF_FILE, GRAPH_FILE,
    SKELETON_FILE, TIMINGS_FILE,
};
use voxskel_cli::config::{PipelineConfig, WorldSource};

fn voxskel() -> Command {
    Command::new(env!("CARGO_BIN_EXE_voxskel"))
}

fn scanned_config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig { output_dir: out.to_path_buf(), ..PipelineConfig::default() };
    c.map.voxel_size = 0.25;
    c.map.pose_count = 20;
    c.map.noise_sigma = 0.05;
    c
}

fn ground_truth_config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig { output_dir: out.to_path_buf(), ..PipelineConfig::default() };
    c.map.voxel_size = 0.2;
    c.map.ground_truth = true;
    c
}

#[test]
fn world_files_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    for kind in ["fixture", "maze"] {
        let (a, b) = (dir.path().join(format!("{kind}_a.json")), dir.path().join(format!("{kind}_b.json")));
        for p in [&a, &b] {
            let st = voxskel().args(["world", "--kind", kind, "--out"]).arg(p).status().unwrap();
            assert!(st.success());
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
    let w = cmd_world(&WorldSource::Fixture, &dir.path().join("lib.json")).unwrap();
    assert_eq!(std::fs::read(dir.path().join("lib.json")).unwrap(), std::fs::read(dir.path().join("fixture_a.json")).unwrap());
    assert!(!w.primitives.is_empty());
}

#[test]
fn builds_are_reproducible_and_audited() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let out = cmd_build(&scanned_config(a.path()), None).unwrap();
    cmd_build(&scanned_config(b.path()), None).unwrap();
    for f in [ESDF_FILE, SKELETON_FILE, GRAPH_FILE] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let art = load_artifacts(a.path()).unwrap();
    audit_artifacts(&art).unwrap();
    assert_eq!(art.graph, out.graph);
    assert!(art.esdf == out.esdf);

    let csv = std::fs::read_to_string(a.path().join(TIMINGS_FILE)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("stage,seconds"));
    let stages: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    let expected = ["render", "tsdf", "esdf", "gvd", "edges_classify", "thinning", "vertices", "edges", "splitting", "repair"];
    assert_eq!(stages, expected);
}

#[test]
fn build_from_esdf_dump_matches() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    cmd_build(&ground_truth_config(a.path()), None).unwrap();
    let out = cmd_build(&ground_truth_config(b.path()), Some(&a.path().join(ESDF_FILE))).unwrap();
    assert_eq!(out.timings.stages[0].0, "load");
    assert_eq!(std::fs::read(a.path().join(GRAPH_FILE)).unwrap(), std::fs::read(b.path().join(GRAPH_FILE)).unwrap());
}

#[test]
fn audit_catches_tampered_artifacts() {
    let dir = TempDir::new().unwrap();
    cmd_build(&ground_truth_config(dir.path()), None).unwrap();
    let mut art = load_artifacts(dir.path()).unwrap();
    art.graph.vertices[0].subgraph += 1000;
    assert!(audit_artifacts(&art).is_err());
}

fn plan_args(dir: &Path, planner: &str, start: [f64; 3], goal: [f64; 3]) -> PlanArgs {
    PlanArgs {
        dir: dir.to_path_buf(),
        planner: planner.into(),
        start,
        goal,
        seed: 0,
        robot_radius: None,
        time_limit: Some(2.0),
        out: None,
        ply: None,
    }
}

#[test]
fn planning_on_built_artifacts() {
    let dir = TempDir::new().unwrap();
    cmd_build(&ground_truth_config(dir.path()), None).unwrap();
    let p = [1.0, 1.0, 1.5];
    for planner in ["sparse_graph", "astar_diagram", "rrt_connect", "rrt_star", "astar_esdf"] {
        let res = cmd_plan(&plan_args(dir.path(), planner, p, p)).unwrap();
        assert!(res.success, "{planner}");
        assert_eq!(res.path_length, 0.0, "{planner}");
        assert_eq!(res.waypoints.first(), Some(&p));
    }

    let json = dir.path().join("plan.json");
    let ply = dir.path().join("plan.ply");
    let args = PlanArgs { out: Some(json.clone()), ply: Some(ply.clone()), ..plan_args(dir.path(), "astar_esdf", p, [9.0, 7.0, 1.5]) };
    let res = cmd_plan(&args).unwrap();
    assert!(res.success);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    for key in ["planner", "success", "waypoints", "path_length", "solve_time", "solution_vertices", "expansions"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["planner"], "astar_esdf");
    assert_eq!(v["waypoints"].as_array().unwrap().len(), res.waypoints.len());
    let text = std::fs::read_to_string(&ply).unwrap();
    assert!(text.starts_with("ply\n"));
    assert!(text.contains(&format!("element vertex {}\n", res.waypoints.len())));

    assert!(cmd_plan(&plan_args(dir.path(), "dijkstra", p, p)).is_err());
}

#[test]
fn unknown_planner_is_a_usage_error() {
    let out = voxskel()
        .args(["plan", "--dir", ".", "--planner", "dijkstra", "--start", "0,0,0", "--goal", "1,1,1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dijkstra"));
    let out = voxskel().args(["plan", "--dir", ".", "--planner", "rrt_star", "--start", "0,0", "--goal", "1,1,1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cli_build_plan_and_export() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("art");
    let st = voxskel()
        .args(["build", "--fixture", "--ground-truth", "--voxel-size", "0.25", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let res = voxskel()
        .args(["plan", "--planner", "sparse_graph", "--start", "1,1,1.5", "--goal", "9,7,1.5", "--dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["success"], true);

    for (what, kind) in [("esdf", ExportKind::Esdf), ("medial", ExportKind::Medial), ("diagram", ExportKind::Diagram), ("graph", ExportKind::Graph)] {
        let ply = dir.path().join(format!("{what}.ply"));
        let st = voxskel().args(["export", "--what", what, "--dir"]).arg(&out).arg("--out").arg(&ply).status().unwrap();
        assert!(st.success(), "{what}");
        let text = std::fs::read_to_string(&ply).unwrap();
        assert!(text.starts_with("ply\nformat ascii 1.0\n"), "{what}");
        let header_vertices: usize = text
            .lines()
            .find_map(|l| l.strip_prefix("element vertex "))
            .and_then(|n| n.parse().ok())
            .unwrap();
        assert!(header_vertices > 0, "{what}");
        let lib = dir.path().join(format!("{what}_lib.ply"));
        cmd_export(&out, kind, &lib).unwrap();
        assert_eq!(std::fs::read(&lib).unwrap(), std::fs::read(&ply).unwrap());
    }
}

#[test]
fn bench_csv_header() {
    let rec = BenchRecord {
        planner: "rrt_star".into(),
        time_s: 0.5,
        path_length_m: 12.25,
        solution_vertices: 40,
        success: true,
        seed: 3,
        map_id: "maze".into(),
        query: 1,
    };
    let mut buf = Vec::new();
    write_records(&[rec], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("planner,time_s,path_length_m,solution_vertices,success,seed,map_id,query"));
    assert_eq!(lines.next(), Some("rrt_star,0.5,12.25,40,true,3,maze,1"));
}
