use frenet_wrap::scene::{load_scene, save_scene, validate_scene, Frame, Scene, FUTURE_STEPS, HISTORY_STEPS};
use frenet_wrap::Error;

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/straight_1.json");

#[test]
fn fixture_loads_with_expected_shape() {
    let scene = load_scene(FIXTURE).unwrap();
    assert_eq!(scene.scene_id, "straight_1");
    assert_eq!(scene.frame, Frame::Cartesian);
    assert_eq!(scene.lanes.len(), 1);
    assert_eq!(scene.agents.len(), 2);
    assert_eq!(scene.tv().states.len(), HISTORY_STEPS + 1);
    assert_eq!(scene.tv().current().t, 0.0);
    assert_eq!(scene.gt_future.as_ref().unwrap().len(), FUTURE_STEPS);
    assert!(validate_scene(&scene).is_empty());
}

#[test]
fn save_then_load_is_identity() {
    let scene = load_scene(FIXTURE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.json");
    save_scene(&scene, &path).unwrap();
    assert_eq!(load_scene(&path).unwrap(), scene);
}

fn edited(f: impl FnOnce(&mut serde_json::Value)) -> frenet_wrap::Result<Scene> {
    let text = std::fs::read_to_string(FIXTURE).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    f(&mut v);
    Scene::from_json_str(&v.to_string())
}

#[test]
fn dangling_tv_id_is_a_validation_error() {
    let err = edited(|v| v["tv_id"] = "nobody".into()).unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");
}

#[test]
fn duplicate_lane_ids_are_rejected() {
    let err = edited(|v| {
        let lane = v["lanes"][0].clone();
        v["lanes"].as_array_mut().unwrap().push(lane);
    })
    .unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");
}

#[test]
fn short_ground_truth_is_rejected() {
    let err = edited(|v| {
        v["gt_future"].as_array_mut().unwrap().pop();
    })
    .unwrap_err();
    assert!(matches!(err, Error::Validation(_)), "{err}");
}

#[test]
fn malformed_json_is_a_parse_error() {
    assert!(matches!(Scene::from_json_str("{\"scene_id\": "), Err(Error::Parse(_))));
}
