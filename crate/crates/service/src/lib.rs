//! HTTP game service: hosts games between human, remote and builtin players
//! and exposes a metered, stateless defender API.
//!
//! Endpoints:
//!
//! * `POST /games` creates a game and returns the per-seat tokens.
//! * `GET /games/{id}?token=..&since=..` returns the caller's view, or 304
//!   when nothing changed since `since`.
//! * `POST /games/{id}/act` submits an utterance, guess or pass. Builtin
//!   replies are computed before the response is sent.
//! * `POST /defender/respond` answers one post with a builtin responder.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use taboo_core::agents::chat::{DefenderApi, DEFAULT_API_BUDGET};
use taboo_core::agents::Agent;
use taboo_core::game::{GameConfig, GameState, Role, Utterance};
use taboo_core::tournament::{
    pending_role, read_word_list, splitmix64, step, AgentKind, AgentSpec, Calibration, DataSection, GameSection,
    JudgeSection, Resources,
};
use taboo_core::transcript::{StartRecord, Transcript};
use taboo_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// `serve` configuration. Every field can also be set from the command line.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default)]
    pub bind: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub words: Vec<String>,
    #[serde(default)]
    pub words_file: Option<PathBuf>,
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub judge: JudgeSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub calibration: Calibration,
    /// Defender API calls allowed per key.
    #[serde(default)]
    pub api_budget: Option<usize>,
    /// Finished games are written here as `<id>.jsonl`.
    #[serde(default)]
    pub transcripts: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: ServiceConfig = toml::from_str(&text).map_err(|e| ServiceError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data.resolve(base);
        for p in [&mut cfg.words_file, &mut cfg.transcripts].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Shared server state.
pub struct AppState {
    res: Arc<Resources>,
    words: Vec<String>,
    seed: u64,
    game: GameSection,
    api_budget: usize,
    transcripts: Option<PathBuf>,
    counter: AtomicU64,
    games: RwLock<HashMap<String, Arc<Mutex<Game>>>>,
    usage: Mutex<HashMap<String, usize>>,
}

impl AppState {
    /// Loads resources. The attacker may not say the target unless the
    /// config turns `forbid_attacker_target` off explicitly.
    pub fn from_config(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let mut judge = cfg.judge.clone();
        judge.forbid_attacker_target.get_or_insert(true);
        let res = Resources::load(&cfg.data, &judge, &cfg.calibration, cfg.seed)?;
        let words = read_word_list(&cfg.words, cfg.words_file.as_deref())?;
        Ok(Self::new(Arc::new(res), words, cfg))
    }

    pub fn new(res: Arc<Resources>, words: Vec<String>, cfg: &ServiceConfig) -> Self {
        AppState {
            res,
            words,
            seed: cfg.seed,
            game: cfg.game.clone(),
            api_budget: cfg.api_budget.unwrap_or(DEFAULT_API_BUDGET),
            transcripts: cfg.transcripts.clone(),
            counter: AtomicU64::new(0),
            games: RwLock::new(HashMap::new()),
            usage: Mutex::new(HashMap::new()),
        }
    }

    fn game(&self, id: &str) -> Result<Arc<Mutex<Game>>, ApiError> {
        self.games
            .read()
            .expect("game table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no game {id}")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/games", post(create_game))
        .route("/games/{id}", get(get_game))
        .route("/games/{id}/act", post(act))
        .route("/defender/respond", post(defender_respond))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Error body: `{"code": .., "message": ..}` plus optional details.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    extra: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            extra: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn body(&self) -> Value {
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(Value::Object(extra)) = &self.extra {
            body.as_object_mut().expect("object").extend(extra.clone());
        }
        body
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let (status, code) = match &e {
            CoreError::OutOfTurn(_) => (StatusCode::CONFLICT, "out_of_turn"),
            CoreError::GameFinished => (StatusCode::CONFLICT, "game_finished"),
            CoreError::HorizonReached => (StatusCode::CONFLICT, "guess_required"),
            CoreError::GuessUsed | CoreError::GuessOutsideWindow | CoreError::HorizonNotReached => {
                (StatusCode::CONFLICT, "guess_unavailable")
            }
            CoreError::EmptyText | CoreError::EmptyTarget => (StatusCode::BAD_REQUEST, "bad_request"),
            CoreError::BudgetExhausted => (StatusCode::TOO_MANY_REQUESTS, "rate_limited"),
            CoreError::NoSentence(_) | CoreError::NoQualifyingPost(_) | CoreError::PoolExhausted => {
                (StatusCode::UNPROCESSABLE_ENTITY, "no_material")
            }
            CoreError::Config(_) => (StatusCode::BAD_REQUEST, "invalid_binding"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}

enum Seat {
    Player { token: String, label: &'static str },
    Builtin(Box<dyn Agent>),
}

impl Seat {
    fn label(&self) -> String {
        match self {
            Seat::Player { label, .. } => label.to_string(),
            Seat::Builtin(a) => a.name(),
        }
    }
}

struct Game {
    id: String,
    state: GameState,
    seats: [Seat; 2],
    version: u64,
    start: StartRecord,
    replies: HashMap<(usize, String), (StatusCode, Value)>,
}

fn idx(role: Role) -> usize {
    match role {
        Role::Attacker => 0,
        Role::Defender => 1,
    }
}

impl Game {
    fn role_of(&self, token: Option<&str>) -> Result<Role, ApiError> {
        let token = token.unwrap_or_default();
        for role in [Role::Attacker, Role::Defender] {
            if let Seat::Player { token: t, .. } = &self.seats[idx(role)] {
                if !token.is_empty() && constant_time_eq(t.as_bytes(), token.as_bytes()) {
                    return Ok(role);
                }
            }
        }
        Err(ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "unknown token"))
    }

    /// Plays builtin seats until a player is due or the game ends.
    fn advance(&mut self, res: &Resources) -> Result<(), ApiError> {
        while let Some(role) = pending_role(&self.state) {
            let Seat::Builtin(agent) = &mut self.seats[idx(role)] else {
                break;
            };
            step(&mut self.state, &res.judge, role, agent.as_mut())?;
            self.version += 1;
        }
        Ok(())
    }

    fn body(&self, role: Role) -> Value {
        json!({ "id": self.id, "version": self.version, "view": self.state.view(role) })
    }

    fn save(&self, dir: Option<&Path>) -> Result<(), ApiError> {
        let (Some(dir), true) = (dir, self.state.is_finished()) else {
            return Ok(());
        };
        std::fs::create_dir_all(dir).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
        Transcript::from_game(self.start.clone(), &self.state)?.write(&dir.join(format!("{}.jsonl", self.id)))?;
        Ok(())
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// 128 random bits, hex encoded.
fn new_token() -> String {
    let mut bytes = [0u8; 16];
    rand::rngs::OsRng.fill_bytes(&mut bytes);
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

enum Binding {
    Player(&'static str),
    Builtin(AgentSpec),
}

/// `"human"`, `"remote"`, a builtin kind name, or a full agent spec object.
fn parse_binding(v: &Value) -> Result<Binding, ApiError> {
    let unknown = |what: &str| ApiError::new(StatusCode::BAD_REQUEST, "unknown_strategy", format!("unknown strategy {what}"));
    match v {
        Value::String(s) if s == "human" => Ok(Binding::Player("human")),
        Value::String(s) if s == "remote" => Ok(Binding::Player("remote")),
        Value::String(s) => serde_json::from_value::<AgentKind>(v.clone())
            .map(|k| Binding::Builtin(AgentSpec::new(k)))
            .map_err(|_| unknown(s)),
        Value::Object(_) => serde_json::from_value::<AgentSpec>(v.clone())
            .map(Binding::Builtin)
            .map_err(|e| unknown(&e.to_string())),
        other => Err(unknown(&other.to_string())),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateGame {
    pub attacker: Value,
    pub defender: Value,
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_turns: Option<u32>,
}

#[derive(Debug, Serialize)]
struct Created {
    id: String,
    version: u64,
    seed: u64,
    tokens: HashMap<&'static str, String>,
}

async fn create_game(State(app): State<Arc<AppState>>, body: Result<Json<CreateGame>, axum::extract::rejection::JsonRejection>) -> Response {
    let req = match body {
        Ok(Json(r)) => r,
        Err(e) => return ApiError::bad_request(e.body_text()).into_response(),
    };
    let app2 = app.clone();
    match tokio::task::spawn_blocking(move || create_blocking(&app2, req)).await {
        Ok(Ok(c)) => (StatusCode::CREATED, Json(c)).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()).into_response(),
    }
}

fn create_blocking(app: &AppState, req: CreateGame) -> Result<Created, ApiError> {
    let n = app.counter.fetch_add(1, Ordering::SeqCst);
    let seed = req.seed.unwrap_or_else(|| splitmix64(app.seed ^ n));
    let bindings = [parse_binding(&req.attacker)?, parse_binding(&req.defender)?];
    let (target, word_index) = match req.target {
        Some(t) => {
            let t = t.trim().to_lowercase();
            let i = app.words.iter().position(|w| *w == t).unwrap_or(0);
            (t, i)
        }
        None => {
            let i = (splitmix64(seed) % app.words.len() as u64) as usize;
            (app.words[i].clone(), i)
        }
    };
    let spec_of = |b: &Binding| match b {
        Binding::Builtin(s) => Some(s.clone()),
        Binding::Player(_) => None,
    };
    let specs = [spec_of(&bindings[0]), spec_of(&bindings[1])];
    let mut tokens = HashMap::new();
    let mut seats = Vec::with_capacity(2);
    for (i, (binding, role)) in bindings.into_iter().zip([Role::Attacker, Role::Defender]).enumerate() {
        seats.push(match binding {
            Binding::Player(label) => {
                let token = new_token();
                tokens.insert(if i == 0 { "attacker" } else { "defender" }, token.clone());
                Seat::Player { token, label }
            }
            Binding::Builtin(spec) => {
                let mut agent = app
                    .res
                    .build_agent(&spec, role, specs[1 - i].as_ref(), splitmix64(seed ^ (i as u64 + 1)))?;
                agent.prepare((role == Role::Attacker).then_some(target.as_str()))?;
                Seat::Builtin(agent)
            }
        });
    }
    let cfg = GameConfig {
        max_turns: req.max_turns.unwrap_or(app.game.max_turns),
        judge: app.res.judge_config().clone(),
        abort_policy: app.game.abort_policy,
    };
    if cfg.max_turns == 0 {
        return Err(ApiError::bad_request("max_turns must be at least 1"));
    }
    let state = GameState::new(cfg.clone(), &target)?;
    let defender = seats.pop().expect("two seats");
    let attacker = seats.pop().expect("two seats");
    let id = format!("g{n:06}-{}", &new_token()[..8]);
    let start = StartRecord {
        target,
        max_turns: cfg.max_turns,
        seed,
        abort_policy: cfg.abort_policy,
        judge: cfg.judge,
        attacker: attacker.label(),
        defender: defender.label(),
        word_index,
        round: 0,
    };
    let mut game = Game {
        id: id.clone(),
        state,
        seats: [attacker, defender],
        version: 0,
        start,
        replies: HashMap::new(),
    };
    game.advance(&app.res)?;
    game.save(app.transcripts.as_deref())?;
    let version = game.version;
    app.games
        .write()
        .expect("game table lock")
        .insert(id.clone(), Arc::new(Mutex::new(game)));
    tracing::info!(game = %id, "created");
    Ok(Created { id, version, seed, tokens })
}

#[derive(Debug, Deserialize)]
pub struct ViewQuery {
    pub token: Option<String>,
    pub since: Option<u64>,
}

async fn get_game(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, Query(q): Query<ViewQuery>) -> Response {
    let result = (|| {
        let game = app.game(&id)?;
        let game = game.lock().expect("game lock");
        let role = game.role_of(q.token.as_deref())?;
        if q.since.is_some_and(|v| v >= game.version) {
            return Ok(StatusCode::NOT_MODIFIED.into_response());
        }
        Ok::<_, ApiError>(Json(game.body(role)).into_response())
    })();
    result.unwrap_or_else(IntoResponse::into_response)
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Utterance { text: String },
    Guess { word: String },
    /// Declines the forced guess at the turn limit.
    Pass,
}

#[derive(Debug, Deserialize)]
pub struct ActRequest {
    pub token: Option<String>,
    pub idempotency_key: Option<String>,
    pub action: Action,
}

async fn act(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<ActRequest>, axum::extract::rejection::JsonRejection>,
) -> Response {
    let req = match body {
        Ok(Json(r)) => r,
        Err(e) => return ApiError::bad_request(e.body_text()).into_response(),
    };
    let result = tokio::task::spawn_blocking(move || act_blocking(&app, &id, req)).await;
    match result {
        Ok(Ok((status, body))) => (status, Json(body)).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()).into_response(),
    }
}

fn act_blocking(app: &AppState, id: &str, req: ActRequest) -> Result<(StatusCode, Value), ApiError> {
    let game = app.game(id)?;
    let mut game = game.lock().expect("game lock");
    let role = game.role_of(req.token.as_deref())?;
    let key = req
        .idempotency_key
        .filter(|k| !k.is_empty())
        .ok_or_else(|| ApiError::bad_request("idempotency_key is required"))?;
    let cache_key = (idx(role), key);
    if let Some(hit) = game.replies.get(&cache_key) {
        return Ok(hit.clone());
    }
    let (status, body) = match apply(app, &mut game, role, req.action) {
        Ok(r) => r,
        Err(e) => (e.status, e.body()),
    };
    game.replies.insert(cache_key, (status, body.clone()));
    Ok((status, body))
}

fn apply(app: &AppState, game: &mut Game, role: Role, action: Action) -> Result<(StatusCode, Value), ApiError> {
    if game.state.is_finished() {
        return Err(CoreError::GameFinished.into());
    }
    if pending_role(&game.state) != Some(role) {
        return Err(CoreError::OutOfTurn(role).into());
    }
    let mut rejected = None;
    match action {
        Action::Utterance { text } => {
            let report = game.state.submit_utterance(&*app.res.judge, role, &text)?;
            if !report.accepted {
                rejected = Some(json!({ "verdict": report.verdict, "retries_left": report.retries_left }));
            }
        }
        Action::Guess { word } if game.state.awaiting_forced_guess() => {
            game.state.finalize_at_horizon(Some(&word))?;
        }
        Action::Guess { word } => {
            if role != Role::Defender {
                return Err(CoreError::GuessOutsideWindow.into());
            }
            game.state.submit_guess(&word)?;
        }
        Action::Pass if game.state.awaiting_forced_guess() => {
            game.state.finalize_at_horizon(None)?;
        }
        Action::Pass => return Err(CoreError::HorizonNotReached.into()),
    }
    game.version += 1;
    let before = game.state.history().len();
    game.advance(&app.res)?;
    game.save(app.transcripts.as_deref())?;
    let replies: Vec<&Utterance> = game.state.history()[before..].iter().filter(|u| u.role != role).collect();
    let mut body = game.body(role);
    body["replies"] = json!(replies);
    if let Some(extra) = rejected {
        let mut e = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "judge_rejected", "the judge rejected the utterance");
        body.as_object_mut().expect("object").extend(extra.as_object().expect("object").clone());
        e.extra = Some(body);
        return Ok((e.status, e.body()));
    }
    Ok((StatusCode::OK, body))
}

#[derive(Debug, Deserialize)]
pub struct RespondRequest {
    pub api_key: Option<String>,
    pub post: String,
    #[serde(default)]
    pub defender: Option<Value>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct RespondReply {
    pub response: String,
    pub calls: usize,
    pub remaining: usize,
}

async fn defender_respond(
    State(app): State<Arc<AppState>>,
    body: Result<Json<RespondRequest>, axum::extract::rejection::JsonRejection>,
) -> Response {
    let req = match body {
        Ok(Json(r)) => r,
        Err(e) => return ApiError::bad_request(e.body_text()).into_response(),
    };
    let result = tokio::task::spawn_blocking(move || respond_blocking(&app, req)).await;
    match result {
        Ok(Ok(r)) => Json(r).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()).into_response(),
    }
}

fn respond_blocking(app: &AppState, req: RespondRequest) -> Result<RespondReply, ApiError> {
    let key = req
        .api_key
        .filter(|k| !k.is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "api_key is required"))?;
    let kind = match req.defender.as_ref().map(parse_binding).transpose()? {
        None => AgentKind::ChatRetrieval,
        Some(Binding::Builtin(spec)) => spec.kind,
        Some(Binding::Player(p)) => return Err(ApiError::bad_request(format!("{p} cannot back the defender api"))),
    };
    let responder = app.res.responder(kind)?;
    let calls = {
        let mut usage = app.usage.lock().expect("usage lock");
        let used = usage.entry(key).or_insert(0);
        if *used >= app.api_budget {
            return Err(ApiError::new(StatusCode::TOO_MANY_REQUESTS, "rate_limited", "query budget exhausted"));
        }
        *used += 1;
        *used
    };
    Ok(RespondReply {
        response: responder.respond(&req.post),
        calls,
        remaining: app.api_budget - calls,
    })
}

/// Defender API client for a remote `/defender/respond` endpoint.
pub struct HttpDefenderApi {
    url: String,
    api_key: String,
    defender: AgentKind,
    calls: usize,
}

impl HttpDefenderApi {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: &str, api_key: &str, defender: AgentKind) -> Self {
        HttpDefenderApi {
            url: format!("{}/defender/respond", base.trim_end_matches('/')),
            api_key: api_key.to_string(),
            defender,
            calls: 0,
        }
    }
}

impl DefenderApi for HttpDefenderApi {
    fn respond(&mut self, post: &str) -> taboo_core::Result<String> {
        let body = json!({ "api_key": self.api_key, "post": post, "defender": self.defender.as_str() });
        match ureq::post(&self.url).send_json(&body) {
            Ok(mut resp) => {
                let reply: RespondReply = resp.body_mut().read_json().map_err(|e| CoreError::Api(e.to_string()))?;
                self.calls += 1;
                Ok(reply.response)
            }
            Err(ureq::Error::StatusCode(429)) => Err(CoreError::BudgetExhausted),
            Err(e) => Err(CoreError::Api(e.to_string())),
        }
    }

    fn calls(&self) -> usize {
        self.calls
    }
}
