//! Scenario files and the runner that diagnoses them against a simulated world.
//!
//! A scenario has up to five sections, each introduced by a `%%` line:
//!
//! ```text
//! %% system          causal laws and declarations
//! %% history         obs/hpd facts up to the end of the recorded history
//! %% observations    later obs/hpd facts
//! %% world           actual_init(l). actual_occurs(a,t). observed_exo(a,t).
//! %% config          horizon(n). module(d1). window(2). max_actions(2).
//!                    selection(minimal). post_repair_observe(f).
//!                    awareness(off). max_rounds(8).
//! ```

mod trace;

use std::collections::BTreeSet;
use std::fmt;

use crate::action::{ActionDescription, ActionError, FluentLiteral, Occurrence, RecordedHistory, Records};
use crate::diagnosis::{CandidateDiagnosis, Configuration, DiagnosisError, DiagnosisOptions, Diagnoser, Event, Selection};
use crate::logic::{parse_program, Engine, LogicError, Term};
use crate::translate::Module;
use crate::world::{World, WorldError};

pub use trace::{TraceWriter, TRACE_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{section} section, line {line}: {message}")]
    Section {
        section: &'static str,
        line: usize,
        message: String,
    },
    #[error("unknown section %% {0}")]
    UnknownSection(String),
    #[error("missing %% system section")]
    MissingSystem,
    #[error("config: {0}")]
    Config(String),
    #[error("world: {0}")]
    World(#[from] WorldError),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
}

const SECTIONS: [&str; 5] = ["system", "history", "observations", "world", "config"];

/// The world section: the actual initial state and exogenous events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldSpec {
    /// Defaults to the observations at 0 when empty.
    pub initial: BTreeSet<FluentLiteral>,
    pub occurs: BTreeSet<Occurrence>,
    /// Occurrences the agent sees; they are recorded as `hpd` facts.
    pub observed: BTreeSet<Occurrence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// End of the recorded history; defaults to the extent of the history section.
    pub horizon: Option<usize>,
    pub module: Module,
    pub max_actions: Option<usize>,
    pub selection: Selection,
    pub post_repair: Option<Vec<Term>>,
    pub awareness: bool,
    pub max_rounds: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let d = DiagnosisOptions::default();
        ScenarioConfig {
            horizon: None,
            module: d.module,
            max_actions: d.max_actions,
            selection: d.selection,
            post_repair: d.post_repair,
            awareness: d.awareness,
            max_rounds: d.max_rounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: ActionDescription,
    pub history: Records,
    pub observations: Records,
    pub world: WorldSpec,
    pub config: ScenarioConfig,
}

fn located(section: &'static str, offset: usize, e: ActionError) -> ScenarioError {
    let (line, message) = match &e {
        ActionError::Logic(LogicError::Parse(p)) => (p.line + offset, format!("{}: {}", p.column, p.message)),
        _ => (offset + 1, e.to_string()),
    };
    ScenarioError::Section { section, line, message }
}

fn time_of(t: &Term) -> Result<usize, String> {
    t.as_int()
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| format!("{t} is not a time point"))
}

impl Scenario {
    pub fn parse(src: &str) -> Result<Scenario, ScenarioError> {
        let mut chunks: Vec<(&'static str, usize, String)> = Vec::new();
        for (i, line) in src.lines().enumerate() {
            if let Some(rest) = line.trim_start().strip_prefix("%%") {
                let name = rest.trim();
                let section = SECTIONS
                    .iter()
                    .find(|s| **s == name)
                    .ok_or_else(|| ScenarioError::UnknownSection(name.to_string()))?;
                chunks.push((section, i + 1, String::new()));
            } else if let Some((_, _, body)) = chunks.last_mut() {
                body.push_str(line);
                body.push('\n');
            }
        }
        let get = |name: &str| chunks.iter().find(|(s, _, _)| *s == name);
        let (_, offset, text) = get("system").ok_or(ScenarioError::MissingSystem)?;
        let system = ActionDescription::parse(text).map_err(|e| located("system", *offset, e))?;
        let records = |name: &'static str| -> Result<Records, ScenarioError> {
            match get(name) {
                Some((_, offset, text)) => Records::parse(text).map_err(|e| located(name, *offset, e)),
                None => Ok(Records::new()),
            }
        };
        let history = records("history")?;
        let observations = records("observations")?;
        let world = match get("world") {
            Some((_, offset, text)) => parse_world(text).map_err(|e| located("world", *offset, e))?,
            None => WorldSpec::default(),
        };
        let config = match get("config") {
            Some((_, offset, text)) => parse_config(text).map_err(|e| located("config", *offset, e))?,
            None => ScenarioConfig::default(),
        };
        Ok(Scenario {
            system,
            history,
            observations,
            world,
            config,
        })
    }

    /// The recorded history, including observed exogenous events before its end.
    pub fn recorded_history(&self) -> Result<RecordedHistory, ScenarioError> {
        let extent = self.history.extent();
        let n = self.config.horizon.unwrap_or(extent);
        if n < extent {
            return Err(ScenarioError::Config(format!("horizon {n} is before the end of the history ({extent})")));
        }
        let mut records = self.history.clone();
        records.occurrences.extend(self.world.observed.iter().filter(|o| o.time < n).cloned());
        RecordedHistory::new(n, records).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    /// `⟨Γn, O⟩`
    pub fn configuration(&self) -> Result<Configuration, ScenarioError> {
        let history = self.recorded_history()?;
        let n = history.horizon;
        let mut later = self.observations.clone();
        later.occurrences.extend(self.world.observed.iter().filter(|o| o.time >= n).cloned());
        Ok(Configuration::new(history, later)?)
    }

    /// The simulated device, advanced to the current time of the configuration.
    pub fn build_world(&self) -> Result<World, ScenarioError> {
        let c = self.configuration()?;
        let initial = if self.world.initial.is_empty() {
            c.records()
                .observations
                .iter()
                .filter(|o| o.time == 0)
                .map(|o| o.literal.clone())
                .collect()
        } else {
            self.world.initial.clone()
        };
        let script = self.world.occurs.iter().chain(&self.world.observed).cloned();
        let mut world = World::new(&self.system, initial, script)?;
        let records = c.records();
        for t in 0..c.current_time() {
            world.step(&records.actions_at(t))?;
        }
        Ok(world)
    }

    pub fn options(&self, engine: Engine) -> DiagnosisOptions {
        DiagnosisOptions {
            module: self.config.module,
            max_actions: self.config.max_actions,
            engine,
            awareness: self.config.awareness,
            selection: self.config.selection.clone(),
            post_repair: self.config.post_repair.clone(),
            max_rounds: self.config.max_rounds,
        }
    }

    /// Canonical text; [`Scenario::parse`] reads it back.
    pub fn to_text(&self) -> String {
        let mut out = String::from("%% system\n");
        out.push_str(&self.system.to_text());
        out.push_str("%% history\n");
        out.push_str(&self.history.to_text());
        out.push_str("%% observations\n");
        out.push_str(&self.observations.to_text());
        out.push_str("%% world\n");
        for l in &self.world.initial {
            out.push_str(&format!("actual_init({}).\n", l.to_term()));
        }
        for o in &self.world.occurs {
            out.push_str(&format!("actual_occurs({},{}).\n", o.action, o.time));
        }
        for o in &self.world.observed {
            out.push_str(&format!("observed_exo({},{}).\n", o.action, o.time));
        }
        out.push_str("%% config\n");
        out.push_str(&config_text(&self.config));
        out
    }
}

fn parse_world(text: &str) -> Result<WorldSpec, ActionError> {
    let program = parse_program(text)?;
    let mut spec = WorldSpec::default();
    for rule in &program.rules {
        let bad = || ActionError::History(format!("unexpected statement {rule}"));
        let l = rule.head_literal().filter(|_| rule.pos.is_empty() && rule.naf.is_empty()).ok_or_else(bad)?;
        let args = l.args();
        match (l.predicate(), args.len()) {
            ("actual_init", 1) => {
                spec.initial.insert(FluentLiteral::from_term(&args[0]));
            }
            ("actual_occurs", 2) => {
                spec.occurs.insert(Occurrence::new(args[0].clone(), time_of(&args[1]).map_err(ActionError::History)?));
            }
            ("observed_exo", 2) => {
                spec.observed.insert(Occurrence::new(args[0].clone(), time_of(&args[1]).map_err(ActionError::History)?));
            }
            _ => return Err(bad()),
        }
    }
    Ok(spec)
}

fn parse_config(text: &str) -> Result<ScenarioConfig, ActionError> {
    let program = parse_program(text)?;
    let mut config = ScenarioConfig::default();
    let mut window = None;
    for rule in &program.rules {
        let bad = |m: String| ActionError::History(format!("{rule} {m}"));
        let l = rule
            .head_literal()
            .filter(|l| rule.pos.is_empty() && rule.naf.is_empty() && l.args().len() == 1)
            .ok_or_else(|| bad("is not a setting".into()))?;
        let v = &l.args()[0];
        let num = || time_of(v).map_err(|m| bad(m.clone()));
        match l.predicate() {
            "horizon" => config.horizon = Some(num()?),
            "module" => config.module = v.to_string().parse().map_err(|e: crate::translate::TranslateError| bad(e.to_string()))?,
            "window" => window = Some(num()?),
            "max_actions" => config.max_actions = Some(num()?),
            "max_rounds" => config.max_rounds = num()?,
            "awareness" => {
                config.awareness = match v.to_string().as_str() {
                    "on" => true,
                    "off" => false,
                    _ => return Err(bad("expects on or off".into())),
                }
            }
            "selection" => {
                config.selection = match (v.functor(), v.args()) {
                    (Some("seeded"), [seed]) => Selection::Seeded(time_of(seed).map_err(bad)? as u64),
                    _ => v.to_string().parse().map_err(bad)?,
                };
            }
            "post_repair_observe" => config.post_repair.get_or_insert_with(Vec::new).push(v.clone()),
            _ => return Err(bad("is not a setting".into())),
        }
    }
    if let Some(w) = window {
        match config.module {
            Module::D2 { .. } => config.module = Module::D2 { window: w },
            _ => return Err(ActionError::History("window applies to module d2 only".into())),
        }
    }
    Ok(config)
}

fn config_text(c: &ScenarioConfig) -> String {
    let mut out = String::new();
    if let Some(h) = c.horizon {
        out.push_str(&format!("horizon({h}).\n"));
    }
    out.push_str(&format!("module({}).\n", c.module));
    if let Module::D2 { window } = c.module {
        out.push_str(&format!("window({window}).\n"));
    }
    if let Some(k) = c.max_actions {
        out.push_str(&format!("max_actions({k}).\n"));
    }
    let selection = match &c.selection {
        Selection::Seeded(seed) => format!("seeded({seed})"),
        s => s.to_string(),
    };
    out.push_str(&format!("selection({selection}).\n"));
    for f in c.post_repair.iter().flatten() {
        out.push_str(&format!("post_repair_observe({f}).\n"));
    }
    out.push_str(&format!("awareness({}).\n", if c.awareness { "on" } else { "off" }));
    out.push_str(&format!("max_rounds({}).\n", c.max_rounds));
    out
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// The records were consistent; nothing to diagnose.
    NoSymptom,
    /// Diagnosed and repaired.
    Resolved,
    /// No candidate survived testing; the model is likely wrong.
    NoDiagnosis,
    /// The recorded history alone has no model.
    InconsistentHistory,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::NoSymptom | RunStatus::Resolved => 0,
            RunStatus::NoDiagnosis | RunStatus::InconsistentHistory => 2,
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::NoSymptom => "no_symptom",
            RunStatus::Resolved => "resolved",
            RunStatus::NoDiagnosis => "no_diagnosis",
            RunStatus::InconsistentHistory => "inconsistent_history",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub engine: Engine,
    /// List every candidate of the initial configuration.
    pub all_candidates: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: RunStatus,
    pub candidates: Option<Vec<CandidateDiagnosis>>,
    pub diagnoses: Vec<CandidateDiagnosis>,
    pub repairs: usize,
    pub final_configuration: Configuration,
    pub world: World,
    pub trace: Vec<String>,
}

/// Checks for a symptom and, if there is one, diagnoses and repairs it.
pub fn run(name: &str, scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, ScenarioError> {
    let sd = scenario.system.with_repair_actions();
    let options = scenario.options(opts.engine);
    let mut c = scenario.configuration()?;
    let mut world = scenario.build_world()?;
    let mut trace = TraceWriter::new();
    trace.header(name, &c, &options);
    let dx = Diagnoser::new(&sd, options);
    let mut candidates = None;
    let mut diagnoses = Vec::new();
    let status = match dx.is_symptom(&c) {
        Err(DiagnosisError::HistoryInconsistent) => RunStatus::InconsistentHistory,
        Err(e) => return Err(e.into()),
        Ok(false) => RunStatus::NoSymptom,
        Ok(true) => {
            if opts.all_candidates {
                let all = dx.candidates(&c)?;
                trace.candidates(&all);
                candidates = Some(all);
            }
            let mut log = |e: &Event| trace.event(e);
            let outcome = dx.diagnose(&mut c, &mut world, &mut log)?;
            diagnoses = outcome.diagnoses;
            if outcome.resolved {
                RunStatus::Resolved
            } else {
                RunStatus::NoDiagnosis
            }
        }
    };
    let repairs = diagnoses.iter().map(|d| d.suspects.len()).sum();
    trace.summary(status, &diagnoses, repairs, &c, &world);
    Ok(RunReport {
        status,
        candidates,
        diagnoses,
        repairs,
        final_configuration: c,
        world,
        trace: trace.finish(),
    })
}
