use dualplan_web::{corridors, fly, plan_path};
use serde_json::Value;

const ROOM: &str = "
..........
..........
....#.....
....#.....
....#.....
....#.....
..........
..........
";

fn parse(s: &str) -> Value {
    serde_json::from_str(s).expect("valid JSON")
}

#[test]
fn path_goes_around_the_wall() {
    let v = parse(&plan_path(ROOM, 1.5, 4.5, 8.5, 4.5, true));
    assert!(v.get("error").is_none(), "{v}");
    let path = v["path"].as_array().unwrap();
    assert!(path.len() >= 3, "must bend around the wall: {v}");
    let straight = 7.0;
    assert!(v["length_cells"].as_f64().unwrap() > straight);
    let first = &path[0];
    assert!((first[0].as_f64().unwrap() - 1.5).abs() < 1e-9);
}

#[test]
fn bad_maps_report_errors() {
    assert!(parse(&plan_path("..\n...\n", 0.5, 0.5, 1.5, 0.5, false))["error"].as_str().unwrap().contains("row 2"));
    assert!(parse(&plan_path("..x\n", 0.5, 0.5, 1.5, 0.5, false))["error"].is_string());
    // goal inside the wall
    assert!(parse(&plan_path(ROOM, 1.5, 4.5, 4.5, 4.5, false))["error"].is_string());
}

#[test]
fn safe_corridor_avoids_unknown_cells() {
    let map = "
..........
..........
..........
.....?????
.....?????
..........
";
    let v = parse(&corridors(map, 0.5, 3.5, 9.5, 3.5));
    assert!(v.get("error").is_none(), "{v}");
    let whole = v["whole"]["polygons"].as_array().unwrap();
    let safe = v["safe"]["polygons"].as_array().unwrap();
    assert!(!whole.is_empty());
    assert_eq!(whole.len(), safe.len());
    // no safe-corridor vertex lies strictly inside the unknown block (x > 5, 1 < y < 3)
    for poly in safe {
        for p in poly.as_array().unwrap() {
            let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
            assert!(!(x > 5.5 && y > 1.5 && y < 2.5), "vertex ({x}, {y}) in unknown space");
        }
    }
}

#[test]
fn flight_returns_track_and_metrics() {
    let v = parse(&fly("corner", 1, 4.0, true));
    assert!(v.get("error").is_none(), "{v}");
    assert!(v["track"].as_array().unwrap().len() > 10);
    assert_eq!(v["metrics"]["collisions"].as_u64(), Some(0));
    assert!(parse(&fly("moon", 1, 4.0, true))["error"].is_string());
}
