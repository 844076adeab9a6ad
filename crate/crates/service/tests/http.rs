use anet::{router, Store};
use anet_core::{fixtures, Scenario};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client {
    app: Router,
}

impl Client {
    fn new() -> Client {
        Client {
            app: router(Store::default()),
        }
    }

    async fn send(&self, method: Method, uri: &str, body: impl Into<String>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.into()))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        (status, value)
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.send(Method::GET, uri, "").await
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.send(Method::POST, uri, body.to_string()).await
    }

    async fn put(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.send(Method::PUT, uri, body.to_string()).await
    }

    async fn upload(&self, text: &str) -> String {
        let (status, body) = self.send(Method::POST, "/networks", text).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["id"].as_str().unwrap().to_string()
    }

    async fn session(&self, network: &str, horizon: u32) -> String {
        let (status, body) = self
            .post("/sessions", json!({ "network": network, "horizon": horizon }))
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["id"].as_str().unwrap().to_string()
    }

    async fn ysp_session(&self) -> String {
        let net = self.upload(fixtures::YSP).await;
        let sid = self.session(&net, 2).await;
        let (status, body) = self
            .put(
                &format!("/sessions/{sid}/assertions"),
                json!({ "observations": [
                    { "t": 0, "var": "alive", "value": "true" },
                    { "t": 0, "var": "loaded_gun", "value": "true" }
                ] }),
            )
            .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        sid
    }

    async fn belief(&self, sid: &str, node: &str) -> Value {
        let (status, body) = self.get(&format!("/sessions/{sid}/beliefs?vars={node}")).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let beliefs = body["beliefs"].as_array().unwrap();
        assert_eq!(beliefs.len(), 1);
        beliefs[0].clone()
    }
}

fn ranks(belief: &Value) -> Vec<(String, Value)> {
    belief["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| (v["value"].as_str().unwrap().to_string(), v["rank"].clone()))
        .collect()
}

fn pairs(items: &[(&str, Value)]) -> Vec<(String, Value)> {
    items.iter().map(|(v, r)| (v.to_string(), r.clone())).collect()
}

#[tokio::test]
async fn shooting_makes_death_believed() {
    let c = Client::new();
    let sid = c.ysp_session().await;
    let (status, _) = c
        .put(
            &format!("/sessions/{sid}/assertions"),
            json!({ "actions": [{ "t": 2, "var": "fired_gun", "value": "true" }] }),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let b = c.belief(&sid, "alive@2").await;
    assert_eq!(b["believed"], "false");
    assert_eq!(b["degree"], 1);
    assert_eq!(b["var"], "alive");
    assert_eq!(b["role"], "state");
    assert_eq!(b["t"], 2);
    assert_eq!(ranks(&b), pairs(&[("false", json!(0)), ("true", json!(1))]));
    assert_eq!(b["values"][1]["hint"], "surprising");

    let act = c.belief(&sid, "do_fired_gun@2").await;
    assert_eq!(act["role"], "action");
    assert_eq!(act["asserted"], "true");
    assert_eq!(
        ranks(&act),
        pairs(&[("false", json!("inf")), ("true", json!(0)), ("idle", json!("inf"))])
    );
}

#[tokio::test]
async fn survival_implies_unloading() {
    let c = Client::new();
    let sid = c.ysp_session().await;
    let (status, _) = c
        .put(
            &format!("/sessions/{sid}/assertions"),
            json!({
                "actions": [{ "t": 2, "var": "fired_gun", "value": "true" }],
                "observations": [{ "t": 2, "var": "alive", "value": "true" }]
            }),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let b = c.belief(&sid, "loaded_gun@2").await;
    assert_eq!(b["believed"], "false");
}

#[tokio::test]
async fn beliefs_cover_every_slice_by_default() {
    let c = Client::new();
    let net = c.upload(fixtures::ENGINE).await;
    let sid = c.session(&net, 3).await;
    c.put(
        &format!("/sessions/{sid}/assertions"),
        json!({ "observations": [{ "t": 0, "var": "turn_key", "value": "true" }] }),
    )
    .await;
    let (status, body) = c.get(&format!("/sessions/{sid}/beliefs")).await;
    assert_eq!(status, StatusCode::OK);
    let beliefs = body["beliefs"].as_array().unwrap();
    assert_eq!(beliefs.len(), 8);
    let running: Vec<&Value> = beliefs.iter().filter(|b| b["var"] == "engine_running").collect();
    assert_eq!(running.len(), 4);
    assert!(running.iter().all(|b| b["believed"] == "true"));

    let (_, body) = c
        .get(&format!("/sessions/{sid}/beliefs?vars=S(engine_running)@1,turn_key@0"))
        .await;
    let nodes: Vec<&str> = body["beliefs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["node"].as_str().unwrap())
        .collect();
    assert_eq!(nodes, ["S(engine_running)@1", "turn_key@0"]);
}

#[tokio::test]
async fn inconsistent_batch_is_rejected_with_its_conflict() {
    let c = Client::new();
    let sid = c.ysp_session().await;
    let (_, before) = c.get(&format!("/sessions/{sid}/scenario")).await;
    let (status, body) = c
        .put(
            &format!("/sessions/{sid}/assertions"),
            json!({
                "observations": [
                    { "t": 1, "var": "holding_gun", "value": "true" },
                    { "t": 1, "var": "loaded_gun", "value": "true" },
                    { "t": 2, "var": "bang_noise", "value": "false" }
                ],
                "actions": [{ "t": 1, "var": "loaded_gun", "value": "false" }]
            }),
        )
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(
        body["conflict"],
        json!([
            { "kind": "observation", "t": 1, "var": "holding_gun", "value": "true" },
            { "kind": "observation", "t": 1, "var": "loaded_gun", "value": "true" },
            { "kind": "action", "t": 1, "var": "loaded_gun", "value": "false" }
        ])
    );
    let (_, after) = c.get(&format!("/sessions/{sid}/scenario")).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn retraction_restores_the_prior_state() {
    let c = Client::new();
    let sid = c.ysp_session().await;
    let uri = format!("/sessions/{sid}/assertions");
    let initial = c.belief(&sid, "alive@2").await;
    c.put(&uri, json!({ "actions": [{ "t": 2, "var": "fired_gun", "value": "true" }] }))
        .await;
    assert_ne!(c.belief(&sid, "alive@2").await, initial);
    let (status, body) = c
        .put(&uri, json!({ "retract_actions": [{ "t": 2, "var": "fired_gun" }] }))
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["actions"], json!([]));
    assert_eq!(c.belief(&sid, "alive@2").await, initial);
}

#[tokio::test]
async fn whatif_leaves_the_session_alone() {
    let c = Client::new();
    let sid = c.ysp_session().await;
    let (_, before) = c.get(&format!("/sessions/{sid}/scenario")).await;
    let (status, body) = c
        .post(
            &format!("/sessions/{sid}/whatif"),
            json!({
                "actions": [{ "t": 2, "var": "fired_gun", "value": "true" }],
                "vars": ["alive@2"]
            }),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["base"]["beliefs"][0]["believed"], "true");
    assert_eq!(body["hypothetical"]["beliefs"][0]["believed"], "false");
    assert_eq!(
        body["diffs"],
        json!([{ "node": "alive@2", "shifts": [
            { "value": "false", "shift": -1 },
            { "value": "true", "shift": 1 }
        ] }])
    );
    let (_, after) = c.get(&format!("/sessions/{sid}/scenario")).await;
    assert_eq!(before, after);
    assert_eq!(c.belief(&sid, "alive@2").await["believed"], "true");
}

#[tokio::test]
async fn whatif_reports_an_impossible_branch() {
    let c = Client::new();
    let sid = c.ysp_session().await;
    let (status, body) = c
        .post(
            &format!("/sessions/{sid}/whatif"),
            json!({
                "observations": [{ "t": 1, "var": "holding_gun", "value": "true" }, { "t": 1, "var": "loaded_gun", "value": "true" }],
                "actions": [{ "t": 1, "var": "loaded_gun", "value": "false" }],
                "vars": ["alive"]
            }),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["base"]["beliefs"].as_array().unwrap().len(), 3);
    assert!(body["hypothetical"]["error"].as_str().unwrap().contains("impossible"));
    assert_eq!(body["diffs"], json!([]));
}

#[tokio::test]
async fn sessions_are_isolated() {
    let c = Client::new();
    let a = c.ysp_session().await;
    let b = c.ysp_session().await;
    c.put(
        &format!("/sessions/{a}/assertions"),
        json!({ "actions": [{ "t": 2, "var": "fired_gun", "value": "true" }] }),
    )
    .await;
    assert_eq!(c.belief(&a, "alive@2").await["believed"], "false");
    assert_eq!(c.belief(&b, "alive@2").await["believed"], "true");

    // interleave many writes to one session with reads of the other
    let expected = c.belief(&b, "holding_gun@1").await;
    let mut handles = Vec::new();
    for i in 0..8u32 {
        let app = c.app.clone();
        let (a, b) = (a.clone(), b.clone());
        handles.push(tokio::spawn(async move {
            let c = Client { app };
            let value = if i % 2 == 0 { "true" } else { "false" };
            c.put(
                &format!("/sessions/{a}/assertions"),
                json!({ "observations": [{ "t": 1, "var": "holding_gun", "value": value }] }),
            )
            .await;
            c.belief(&b, "holding_gun@1").await
        }));
    }
    for h in handles {
        let seen = h.await.unwrap();
        assert_eq!(seen, expected);
        assert_eq!(seen["asserted"], Value::Null);
    }
}

#[tokio::test]
async fn delete_then_not_found() {
    let c = Client::new();
    let sid = c.ysp_session().await;
    let (status, _) = c.send(Method::DELETE, &format!("/sessions/{sid}"), "").await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    for uri in [
        format!("/sessions/{sid}"),
        format!("/sessions/{sid}/beliefs"),
        format!("/sessions/{sid}/scenario"),
    ] {
        assert_eq!(c.get(&uri).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    let (status, _) = c.send(Method::DELETE, &format!("/sessions/{sid}"), "").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let c = Client::new();
    let ghost = "00000000-0000-0000-0000-000000000000";
    let (status, _) = c.post("/sessions", json!({ "network": ghost, "horizon": 2 })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(c.get("/sessions/nonsense/beliefs").await.0, StatusCode::NOT_FOUND);
    assert_eq!(c.get(&format!("/networks/{ghost}")).await.0, StatusCode::NOT_FOUND);
    let (status, _) = c.put(&format!("/sessions/{ghost}/assertions"), json!({})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_payloads_are_unprocessable() {
    let c = Client::new();
    let (status, body) = c.send(Method::POST, "/networks", "{ \"variables\": ").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["diagnostics"][0]["location"].as_str().unwrap().starts_with("line "));

    let net = c.upload(fixtures::YSP).await;
    let (status, _) = c.post("/sessions", json!({ "network": net })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = c.post("/sessions", json!({ "network": net, "horizon": 0 })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let sid = c.session(&net, 2).await;
    let uri = format!("/sessions/{sid}/assertions");
    let cases = [
        json!({ "observations": [{ "t": 5, "var": "alive", "value": "true" }] }),
        json!({ "observations": [{ "t": 0, "var": "alive", "value": "maybe" }] }),
        json!({ "observations": [{ "t": 0, "var": "ghost", "value": "true" }] }),
        json!({ "actions": [{ "t": 1, "var": "alive", "value": "true" }] }),
        json!({ "observations": [{ "t": 0, "var": "alive" }] }),
        json!({ "bogus": [] }),
    ];
    for case in cases {
        let (status, body) = c.put(&uri, case.clone()).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{case} -> {body}");
        assert!(!body["diagnostics"].as_array().unwrap().is_empty());
    }
    let (status, _) = c.send(Method::PUT, &uri, "not json").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(c.get(&format!("/sessions/{sid}/beliefs?vars=ghost")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(c.get(&format!("/sessions/{sid}/beliefs?vars=alive@7")).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = c
        .post(&format!("/sessions/{sid}/whatif"), json!({ "actions": [{ "t": 2, "var": "alive", "value": "true" }] }))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn snapshots_resume_and_horizons_change() {
    let c = Client::new();
    let sid = c.ysp_session().await;
    let uri = format!("/sessions/{sid}/assertions");
    let (status, body) = c
        .put(&uri, json!({ "horizon": 4, "actions": [{ "t": 4, "var": "fired_gun", "value": "true" }] }))
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["horizon"], 4);
    assert_eq!(c.belief(&sid, "alive@4").await["believed"], "false");

    // shrinking below an assertion is refused and changes nothing
    let (status, _) = c.put(&uri, json!({ "horizon": 3 })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, info) = c.get(&format!("/sessions/{sid}")).await;
    assert_eq!(info["horizon"], 4);

    let (_, snapshot) = c.get(&format!("/sessions/{sid}/scenario")).await;
    let sc: Scenario = serde_json::from_value(snapshot.clone()).unwrap();
    assert_eq!(sc.actions.len(), 1);
    let (status, body) = c
        .post("/sessions", json!({ "network": info["network"], "scenario": snapshot }))
        .await;
    assert_eq!(status, StatusCode::CREATED);
    let resumed = body["id"].as_str().unwrap();
    assert_eq!(c.belief(resumed, "alive@4").await, c.belief(&sid, "alive@4").await);
}

#[tokio::test]
async fn network_listing() {
    let c = Client::new();
    let net = c.upload(fixtures::YSP).await;
    let (status, body) = c.get(&format!("/networks/{net}")).await;
    assert_eq!(status, StatusCode::OK);
    let vars = body["variables"].as_array().unwrap();
    assert_eq!(vars.len(), 5);
    let loaded = vars.iter().find(|v| v["name"] == "loaded_gun").unwrap();
    assert_eq!(loaded["controllable"], true);
    assert_eq!(loaded["persistence"], true);
}

#[tokio::test]
async fn matches_the_library_on_the_stalled_engine() {
    let c = Client::new();
    let net = c.upload(fixtures::ENGINE).await;
    let sc = fixtures::scenario(fixtures::ENGINE_STALLED);
    let sid = c.session(&net, sc.horizon).await;
    let (status, _) = c
        .put(
            &format!("/sessions/{sid}/assertions"),
            json!({ "observations": sc.observations, "actions": sc.actions }),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let report = sc.run(&fixtures::engine()).unwrap();
    for p in &report.posteriors {
        let b = c.belief(&sid, &p.node).await;
        let expected: Vec<(String, Value)> = p
            .ranks
            .iter()
            .map(|(v, r)| (v.clone(), serde_json::to_value(r).unwrap()))
            .collect();
        assert_eq!(ranks(&b), expected, "{}", p.node);
    }
    let b = c.belief(&sid, "engine_running@3").await;
    assert_eq!(b["believed"], "false");
    assert_eq!(b["degree"], 1);
}
