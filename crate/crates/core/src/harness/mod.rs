//! Synthetic scenes, scoring, and the verification and timing suites behind
//! the command-line tool.

mod bench;
mod eval;
mod scene;
mod verify;

pub use bench::{bench, bench_inputs, timed_inference, BenchReport, BenchRun, StageTime};
pub use eval::{evaluate, place_target, run_scene, EvalResult, PoseError};
pub use scene::{
    closed_set, gen_scene, template, GroundTruth, PoseTarget, Scene, SceneMeta, SceneOptions, ShapeId, CELL_2D,
    CELL_3D, GRID_2D, GRID_3D,
};
pub use verify::{
    equivariance_pipeline, pick_checks, pick_equivariance, place_checks, place_equivariance, place_pairs, rotate_cell,
    square_canvas, steerability_trend, turned_kernel, verify, verify_equivariance, verify_oracle, verify_steerability,
    Baseline, Check, VerifyMode, VerifyReport, DISTRIBUTION_TOL, EXACT_TOL, MIN_MARGIN, PICK_COSETS_3D, PLACE_PAIRS_3D,
    STEER_SEEDS, STEER_SIZES,
};
