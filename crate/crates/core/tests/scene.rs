use proptest::prelude::*;
use setprog::dsl::Literal;
use setprog::scene::{
    evaluate_relation, load_kb, load_scenes, read_scenes, resolve_attribute, save_kb, save_scenes, write_scenes,
    KnowledgeBase, Relation, Scene, SceneError, SceneObject,
};

fn fixtures() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures").to_string()
}

#[test]
fn shelf_fixture_loads() {
    let scenes = load_scenes(format!("{}/shelf.jsonl", fixtures())).unwrap();
    assert_eq!(scenes.len(), 1);
    let names: Vec<_> = scenes[0].objects.iter().filter_map(|o| o.attributes.get("name")).collect();
    assert!(names.contains(&&Literal::text("Spring Water")));
}

#[test]
fn empty_scene_line() {
    let scenes = read_scenes(r#"{"scene_id": "empty", "objects": [], "relations": []}"#.as_bytes()).unwrap();
    assert_eq!(scenes[0].objects.len(), 0);
}

#[test]
fn dangling_relation_is_a_schema_error() {
    let text = r#"{"scene_id":"a","objects":[{"object_id":"x","class":"can"}],"relations":[["x","left_of","ghost"]]}"#;
    match read_scenes(text.as_bytes()) {
        Err(e @ SceneError::Schema { line: 1, .. }) => assert_eq!(e.name(), "SchemaError"),
        other => panic!("{other:?}"),
    }
    let dup = r#"{"scene_id":"a","objects":[{"object_id":"x","class":"can"},{"object_id":"x","class":"jar"}]}"#;
    assert!(matches!(read_scenes(dup.as_bytes()), Err(SceneError::DuplicateObjectId { .. })));
    assert!(matches!(load_scenes("/nonexistent/scenes.jsonl"), Err(SceneError::Io { .. })));
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = load_scenes(format!("{}/shelf.jsonl", fixtures())).unwrap();
    let first = dir.path().join("a.jsonl");
    let second = dir.path().join("b.jsonl");
    save_scenes(&first, &scenes).unwrap();
    let reloaded = load_scenes(&first).unwrap();
    assert_eq!(reloaded, scenes);
    save_scenes(&second, &reloaded).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());

    let kb = load_kb(format!("{}/kb.json", fixtures())).unwrap();
    let kb_path = dir.path().join("kb.json");
    save_kb(&kb_path, &kb).unwrap();
    assert_eq!(load_kb(&kb_path).unwrap(), kb);
}

#[test]
fn attribute_resolution_prefers_the_object() {
    let kb = load_kb(format!("{}/kb.json", fixtures())).unwrap();
    let noodle = SceneObject::new("n", "noodle");
    assert_eq!(resolve_attribute(&noodle, "calories", &kb), Some(&Literal::Number(350.0)));
    let light = SceneObject::new("n2", "noodle").with_attr("calories", 200.0);
    assert_eq!(resolve_attribute(&light, "calories", &kb), Some(&Literal::Number(200.0)));
    let soda = SceneObject::new("s", "soda").with_attr("sugar", 39.0);
    assert_eq!(resolve_attribute(&soda, "sugar", &kb), Some(&Literal::Number(39.0)));
    assert_eq!(resolve_attribute(&soda, "calories", &kb), None);
    assert_eq!(resolve_attribute(&soda, "sugar", &KnowledgeBase::new()), resolve_attribute(&soda, "sugar", &kb));
}

#[test]
fn tags_and_triples() {
    let mut scene = Scene::new(
        "t",
        vec![
            SceneObject::new("a", "drink").with_tag("on_top_shelf"),
            SceneObject::new("b", "drink"),
        ],
    );
    let (a, b) = (scene.objects[0].clone(), scene.objects[1].clone());
    assert_eq!(evaluate_relation(&scene, &a, "on_top_shelf", None), Ok(true));
    assert_eq!(evaluate_relation(&scene, &b, "on_top_shelf", None), Ok(false));
    let none = Default::default();
    assert_eq!(evaluate_relation(&scene, &a, "left_of", Some(&none)), Ok(false));
    assert!(evaluate_relation(&scene, &a, "behind", Some(&["b".to_string()].into())).is_err());
    scene.relations.push(Relation("a".into(), "behind".into(), "b".into()));
    assert_eq!(evaluate_relation(&scene, &a, "behind", Some(&["b".to_string()].into())), Ok(true));
    assert_eq!(evaluate_relation(&scene, &b, "behind", Some(&["a".to_string()].into())), Ok(false));
}

fn row(centers: &[f64]) -> Scene {
    let objects = centers
        .iter()
        .enumerate()
        .map(|(i, cx)| SceneObject::new(format!("o{i}"), "can").with_bbox(cx - 0.05, 0.4, 0.1, 0.2))
        .collect();
    Scene::new("row", objects)
}

#[test]
fn left_of_example() {
    let scene = row(&[0.2, 0.6, 0.8]);
    let refs = ["o1".to_string(), "o2".to_string()].into();
    assert_eq!(evaluate_relation(&scene, &scene.objects[0], "left_of", Some(&refs)), Ok(true));
    assert_eq!(evaluate_relation(&scene, &scene.objects[1], "left_of", Some(&refs)), Ok(false));
}

proptest! {
    #[test]
    fn geometric_relations_match_centers(xs in prop::collection::vec(1u8..19, 2..7)) {
        let centers: Vec<f64> = xs.iter().map(|x| *x as f64 / 20.0).collect();
        let scene = row(&centers);
        for (i, s) in scene.objects.iter().enumerate() {
            for (j, r) in scene.objects.iter().enumerate() {
                let refs = [r.object_id.clone()].into();
                let left = evaluate_relation(&scene, s, "left_of", Some(&refs)).unwrap();
                let right = evaluate_relation(&scene, s, "right_of", Some(&refs)).unwrap();
                prop_assert_eq!(left, centers[i] < centers[j]);
                prop_assert_eq!(right, centers[i] > centers[j]);
                let back = evaluate_relation(&scene, r, "left_of", Some(&[s.object_id.clone()].into())).unwrap();
                if (centers[i] - centers[j]).abs() > 1e-9 {
                    prop_assert!(left != back);
                    prop_assert_eq!(left, !right);
                }
            }
            let all: std::collections::BTreeSet<String> =
                scene.objects.iter().filter(|o| o.object_id != s.object_id).map(|o| o.object_id.clone()).collect();
            let expected = (0..centers.len()).filter(|j| *j != i).all(|j| centers[i] < centers[j]);
            prop_assert_eq!(evaluate_relation(&scene, s, "left_of", Some(&all)).unwrap(), expected && !all.is_empty());
        }
    }
}

#[test]
fn writer_emits_one_line_per_scene() {
    let mut buf = Vec::new();
    write_scenes(&mut buf, &[Scene::new("a", Vec::new()), Scene::new("b", Vec::new())]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(read_scenes(text.as_bytes()).unwrap().len(), 2);
}
