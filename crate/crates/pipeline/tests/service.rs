mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use chromafold::server::{router, AppState, Session, CHECKPOINT_FILE};
use chromafold::stages::{load_meshes, wrapped_meshes};
use chromafold_core::geom::P2;
use chromafold_core::image::{decode_id_map_png, CompositeImage};
use chromafold_core::papercraft::FlattenSelection;
use chromafold_core::render::render_id_map;
use common::{Demo, SMALL};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    demo: Demo,
    state: Arc<AppState>,
}

fn fixture(name: &str) -> Fixture {
    let demo = Demo::new();
    let cfg = demo.config(&demo.variant(name, "small", SMALL));
    let checkpoint = demo.dir.path().join(CHECKPOINT_FILE);
    let state = AppState::new(Session::open(cfg, Some(checkpoint)).unwrap());
    Fixture { demo, state }
}

async fn call(state: &Arc<AppState>, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

async fn get(state: &Arc<AppState>, uri: &str) -> (StatusCode, Vec<u8>) {
    call(state, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(state: &Arc<AppState>, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, bytes) = call(state, req).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn state_json(state: &Arc<AppState>) -> Value {
    let (s, body) = get(state, "/api/state").await;
    assert_eq!(s, StatusCode::OK);
    serde_json::from_slice(&body).unwrap()
}

async fn png(state: &Arc<AppState>, uri: &str) -> CompositeImage {
    let (s, body) = get(state, uri).await;
    assert_eq!(s, StatusCode::OK, "{uri}");
    CompositeImage::from_png_bytes(&body).unwrap()
}

#[tokio::test]
async fn state_echoes_config_and_artifact_urls() {
    let f = fixture("torso");
    let st = state_json(&f.state).await;
    assert_eq!(st["revision"], 0);
    assert_eq!(st["paper_triangles"], 48);
    assert_eq!(st["config"]["render"]["width"], 128);
    assert_eq!(st["config"]["structures"][1]["hue"], "magenta");
    let url = st["artifacts"]["composite_red"].as_str().unwrap();
    assert_eq!(url, "/api/preview?view=composite&filter=red&revision=0");
    png(&f.state, url).await;
    assert_eq!(st["artifacts"]["idmap"], "/api/idmap?revision=0");
}

#[tokio::test]
async fn camera_post_bumps_revision_and_changes_preview() {
    let f = fixture("torso");
    let before = png(&f.state, "/api/preview").await;
    let (s, body) = post(
        &f.state,
        "/api/camera",
        json!({"position": [4.0, 1.0, 4.0], "look_at": [0.0, 0.0, 0.0], "up": [0.0, 1.0, 0.0], "vfov": 40.0}),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body, json!({"revision": 1}));
    let after = png(&f.state, "/api/preview?revision=1").await;
    assert_ne!(before, after);
    // stale revision tags are refused
    let (s, _) = get(&f.state, "/api/preview?revision=0").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    // invalid cameras are rejected without a new revision
    let (s, body) = post(
        &f.state,
        "/api/camera",
        json!({"position": [0.0, 0.0, 5.0], "look_at": [0.0, 0.0, 0.0], "vfov": 200.0}),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("camera.vfov"));
    assert_eq!(state_json(&f.state).await["revision"], 1);
}

#[tokio::test]
async fn filters_swap_to_matching_previews() {
    let f = fixture("torso");
    for view in ["composite", "atlas", "folded"] {
        let none = png(&f.state, &format!("/api/preview?view={view}&filter=none")).await;
        for (filter, kind) in [
            ("red", chromafold_core::color::FilterKind::Red),
            ("green", chromafold_core::color::FilterKind::Green),
            ("blue", chromafold_core::color::FilterKind::Blue),
        ] {
            let got = png(&f.state, &format!("/api/preview?view={view}&filter={filter}")).await;
            let expect = chromafold_core::image::filter_image(&none, kind);
            assert!(got
                .pixels
                .iter()
                .zip(&expect.pixels)
                .all(|(a, b)| a.max_abs_diff(b) <= 1.0 / 255.0 + 1e-9));
        }
    }
    let (s, _) = get(&f.state, "/api/preview?filter=purple").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn palette_changes_hue_and_rejects_duplicates() {
    let f = fixture("torso");
    let before = png(&f.state, "/api/preview?view=atlas").await;
    let (s, _) = post(
        &f.state,
        "/api/palette",
        json!({"structure_index": 0, "hue": "magenta"}),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, body) = post(
        &f.state,
        "/api/palette",
        json!({"structure_index": 1, "hue": "magenta", "opacity": 0.5}),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["revision"], 1);
    let st = state_json(&f.state).await;
    assert_eq!(st["config"]["structures"][1]["opacity"], 0.5);
    assert_ne!(before, png(&f.state, "/api/preview?view=atlas").await);
    let (s, _) = post(
        &f.state,
        "/api/palette",
        json!({"structure_index": 7, "hue": "cyan"}),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn idmap_encodes_paper_triangles() {
    let f = fixture("pelvis");
    let (s, body) = get(&f.state, "/api/idmap").await;
    assert_eq!(s, StatusCode::OK);
    let (w, h, ids) = decode_id_map_png(&body).unwrap();
    assert_eq!((w, h), (128, 128));
    let snap = f.state.current();
    let cam = snap.config.camera().unwrap();
    let expect = render_id_map(
        &snap.stage().paper.mesh,
        &cam,
        &chromafold::stages::render_options(&snap.config),
    );
    assert_eq!(ids, expect);
    assert!(ids.iter().all(|&i| i as usize <= 48));
    assert!(ids.iter().filter(|&&i| i > 0).count() > 1000);
}

fn texel_square_meets(uv: &[P2; 3], x: usize, y: usize, res: f64) -> bool {
    // triangle dilated by one texel against the texel square, via bounding
    // test plus edge half-planes
    let t = uv.map(|p| P2::new(p.x * res, p.y * res));
    let orient = (t[1] - t[0]).perp(&(t[2] - t[0])).signum();
    let corners = [
        P2::new(x as f64, y as f64),
        P2::new(x as f64 + 1.0, y as f64),
        P2::new(x as f64 + 1.0, y as f64 + 1.0),
        P2::new(x as f64, y as f64 + 1.0),
    ];
    (0..3).all(|i| {
        let (a, b) = (t[i], t[(i + 1) % 3]);
        let len = (b - a).norm();
        corners
            .iter()
            .any(|q| (b - a).perp(&(q - a)) * orient / len >= -1.0)
    })
}

#[tokio::test]
async fn flatten_changes_only_reprojected_texels() {
    let f = fixture("pelvis");
    let before_snap = f.state.current();
    let before = png(&f.state, "/api/preview?view=atlas").await;
    let (s, body) = post(&f.state, "/api/flatten", json!({"triangles": [7, 12]})).await;
    assert_eq!(s, StatusCode::OK, "{body}");
    assert_eq!(body["revision"], 1);
    let after = png(&f.state, "/api/preview?view=atlas&revision=1").await;
    assert_ne!(before, after);

    // triangles whose projection geometry moved in any wrapped copy
    let cfg = &before_snap.config;
    let meshes = load_meshes(cfg).unwrap();
    let stage = before_snap.stage();
    let old = wrapped_meshes(cfg, &meshes, stage, &[]).unwrap();
    let new = wrapped_meshes(cfg, &meshes, stage, &[FlattenSelection::new([7, 12])]).unwrap();
    let mut affected = BTreeSet::new();
    for (o, n) in old.iter().zip(&new) {
        for (t, tri) in o.mesh.triangles.iter().enumerate() {
            if tri.iter().any(|&v| o.mesh.vertices[v] != n.mesh.vertices[v]) {
                affected.insert(t);
            }
        }
    }
    assert!(affected.contains(&7) && affected.contains(&12));
    assert!(affected.len() < 48);

    let mapping = &before_snap.atlas().mapping;
    let res = before_snap.atlas().resolution;
    let mut changed = 0;
    for y in 0..res {
        for x in 0..res {
            let p = y * res + x;
            if before.pixels[p] != after.pixels[p] {
                changed += 1;
                assert!(
                    affected
                        .iter()
                        .any(|&t| texel_square_meets(&mapping[t], x, y, res as f64)),
                    "texel ({x}, {y}) changed outside the re-projected triangles"
                );
            }
        }
    }
    assert!(changed > 0);

    // undo restores the previous atlas exactly
    let (s, body) = post(&f.state, "/api/undo", json!({})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["revision"], 2);
    assert_eq!(png(&f.state, "/api/preview?view=atlas").await, before);
    let (s, _) = post(&f.state, "/api/undo", json!({})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = post(&f.state, "/api/flatten", json!({"triangles": [48]})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post(&f.state, "/api/flatten", json!({"triangles": []})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(state_json(&f.state).await["revision"], 2);
}

#[tokio::test]
async fn export_matches_run_3d_of_the_current_revision() {
    let f = fixture("torso");
    let (s, zip_bytes) = get(&f.state, "/api/export").await;
    assert_eq!(s, StatusCode::OK);
    let cfg = f.demo.config(&f.demo.dir.path().join("torso_small.toml"));
    let out = tempfile::tempdir().unwrap();
    chromafold::run_3d(&cfg, out.path()).unwrap();
    let mut zip = zip::ZipArchive::new(std::io::Cursor::new(zip_bytes)).unwrap();
    for name in ["papercraft.svg", "atlas.png", "preview_folded.png", "assembly.txt"] {
        let mut got = Vec::new();
        std::io::Read::read_to_end(&mut zip.by_name(name).unwrap(), &mut got).unwrap();
        assert_eq!(got, std::fs::read(out.path().join(name)).unwrap(), "{name}");
    }
}

#[tokio::test]
async fn checkpoint_resumes_the_session() {
    let f = fixture("pelvis");
    post(&f.state, "/api/flatten", json!({"triangles": [3]})).await;
    post(
        &f.state,
        "/api/palette",
        json!({"structure_index": 2, "hue": "yellow", "opacity": 0.7}),
    )
    .await;
    let cp = f.demo.dir.path().join(CHECKPOINT_FILE);
    assert!(cp.exists());
    let cfg = f.demo.config(&f.demo.dir.path().join("pelvis_small.toml"));
    let resumed = Session::open(cfg.clone(), Some(cp.clone())).unwrap().snapshot();
    assert_eq!(resumed.revision, 2);
    assert_eq!(resumed.history, vec![FlattenSelection::new([3])]);
    assert_eq!(resumed.config.structures[2].opacity, 0.7);
    assert_eq!(resumed.atlas(), f.state.current().atlas());

    // a checkpoint for another config is ignored
    let mut other = cfg;
    other.seed += 1;
    let fresh = Session::open(other, Some(cp)).unwrap().snapshot();
    assert_eq!(fresh.revision, 0);
    assert!(fresh.history.is_empty());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn readers_never_see_a_torn_revision() {
    let f = fixture("concentric_spheres");
    let state = f.state.clone();
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let state = state.clone();
            tokio::spawn(async move {
                let mut seen = Vec::new();
                for _ in 0..20 {
                    let resp = router(state.clone())
                        .oneshot(Request::get("/api/preview?view=composite").body(Body::empty()).unwrap())
                        .await
                        .unwrap();
                    let rev: u64 = resp.headers()["x-revision"].to_str().unwrap().parse().unwrap();
                    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
                    seen.push((rev, body));
                }
                seen
            })
        })
        .collect();
    for i in 0..3 {
        let z = 4.5 + i as f64;
        let (s, _) = post(
            &state,
            "/api/camera",
            json!({"position": [0.0, 0.0, z], "look_at": [0.0, 0.0, 0.0], "vfov": 35.0}),
        )
        .await;
        assert_eq!(s, StatusCode::OK);
    }
    let mut by_rev: std::collections::HashMap<u64, Vec<u8>> = Default::default();
    for r in readers {
        for (rev, body) in r.await.unwrap() {
            let prev = by_rev.entry(rev).or_insert_with(|| body.clone());
            assert_eq!(*prev, body, "revision {rev} served two different images");
        }
    }
    let (_, last) = get(&state, "/api/preview?view=composite&revision=3").await;
    if let Some(b) = by_rev.get(&3) {
        assert_eq!(*b, last);
    }
}

#[tokio::test]
async fn busy_port_fails_at_startup() {
    let demo = Demo::new();
    let cfg = demo.config(&demo.variant("torso", "small", SMALL));
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port();
    let out = tempfile::tempdir().unwrap();
    let err = chromafold::server::serve(cfg, port, out.path()).await.unwrap_err();
    assert!(err.to_string().contains("cannot listen"), "{err}");
}
