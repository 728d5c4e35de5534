use std::io::Cursor;
use std::time::Duration;

use frenet_wrap::predictors::{
    predict_ca, predict_cartesian, serve_loopback, wrap_frenet, CaPredictor, ExternalPredictor, LoopbackFault,
    Predictor, CA_K,
};
use frenet_wrap::scene::{load_scene, Scene};
use frenet_wrap::Error;

const EXE: &str = env!("CARGO_BIN_EXE_frenet-wrap");

fn fixture() -> Scene {
    load_scene(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/straight_1.json")).unwrap()
}

fn loopback(fault: Option<&str>) -> String {
    match fault {
        Some(f) => format!("'{EXE}' loopback-predictor --fault {f}"),
        None => format!("'{EXE}' loopback-predictor"),
    }
}

fn wrap_with(command: &str, timeout: Duration) -> frenet_wrap::Result<()> {
    let mut child = ExternalPredictor::spawn(command, timeout)?;
    wrap_frenet(&fixture(), &mut child, CA_K).map(|_| ())
}

#[test]
fn child_matches_in_process_model() {
    let scene = fixture();
    let mut child = ExternalPredictor::spawn(&loopback(None), Duration::from_secs(30)).unwrap();
    for _ in 0..3 {
        let ext = wrap_frenet(&scene, &mut child, CA_K).unwrap();
        let local = wrap_frenet(&scene, &mut CaPredictor, CA_K).unwrap();
        assert_eq!(ext.candidates, local.candidates);
    }
    let via = predict_cartesian(&scene, &mut child, CA_K).unwrap();
    let direct = predict_ca(&scene, CA_K).unwrap();
    for (c, t) in via.iter().zip(&direct.trajectories) {
        assert_eq!(&c.waypoints, t);
    }
}

#[test]
fn in_process_server_greets_then_answers() {
    let scene = fixture();
    let request = serde_json::json!({
        "type": "predict",
        "scene_id": scene.scene_id,
        "frames": [{"frame_index": 0, "k": CA_K, "scene": scene.to_json_value()}],
    });
    let mut out = Vec::new();
    serve_loopback(Cursor::new(format!("{request}\n\n")), &mut out, None).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], serde_json::json!({"type": "ready", "protocol": 1}));
    assert_eq!(lines[1]["type"], "prediction");
    assert_eq!(lines[1]["frames"][0]["trajectories"].as_array().unwrap().len(), CA_K);
}

#[test]
fn faults_map_to_distinct_errors() {
    let t = Duration::from_millis(1500);
    let err = wrap_with(&loopback(Some("drop-trajectory")), t).unwrap_err();
    assert!(matches!(err, Error::Shape(_)), "{err}");
    let err = wrap_with(&loopback(Some("bad-probs")), t).unwrap_err();
    assert!(matches!(err, Error::Normalization { frame_index: 0, .. }), "{err}");
    let err = wrap_with(&loopback(Some("garbage")), t).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
    let err = wrap_with(&loopback(Some("silent")), Duration::from_millis(300)).unwrap_err();
    assert!(matches!(err, Error::Timeout(_)), "{err}");
}

#[test]
fn missing_handshake_reports_child_stderr() {
    let err = ExternalPredictor::spawn(&loopback(Some("no-handshake")), Duration::from_secs(10)).err().unwrap();
    match err {
        Error::Protocol(m) => assert!(m.contains("refusing to shake hands"), "{m}"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn wrong_protocol_version_is_rejected() {
    let cmd = r#"echo '{"type":"ready","protocol":2}'; cat >/dev/null"#;
    let err = ExternalPredictor::spawn(cmd, Duration::from_secs(5)).err().unwrap();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
}

#[test]
fn child_exit_mid_session_is_fatal() {
    let cmd = r#"echo '{"type":"ready","protocol":1}'; read line; echo dying >&2; exit 3"#;
    let mut child = ExternalPredictor::spawn(cmd, Duration::from_secs(5)).unwrap();
    let err = wrap_frenet(&fixture(), &mut child, CA_K).unwrap_err();
    match &err {
        Error::ChildExit(m) => assert!(m.contains("dying"), "{m}"),
        other => panic!("unexpected {other}"),
    }
    // A failed child is not reused.
    let again = child.predict("x", &[]).unwrap_err();
    assert!(matches!(again, Error::ChildExit(_)), "{again}");
}

#[test]
fn unknown_fault_names_are_rejected() {
    assert!("drop-trajectory".parse::<LoopbackFault>().is_ok());
    assert!("explode".parse::<LoopbackFault>().is_err());
}
