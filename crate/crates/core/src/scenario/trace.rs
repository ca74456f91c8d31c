use std::fmt::Display;

use crate::diagnosis::{CandidateDiagnosis, Configuration, DiagnosisOptions, Event};
use crate::world::World;

use super::RunStatus;

pub const TRACE_VERSION: u32 = 1;

fn set<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    let v: Vec<String> = items.into_iter().map(|t| t.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn candidate(d: &CandidateDiagnosis) -> String {
    format!(
        "explanation={} suspects={}",
        set(d.explanation.iter().map(|o| format!("{}@{}", o.action, o.time))),
        set(&d.suspects)
    )
}

/// Line-oriented `key=value` log of a run.
#[derive(Debug, Default)]
pub struct TraceWriter {
    lines: Vec<String>,
}

impl TraceWriter {
    pub fn new() -> Self {
        TraceWriter {
            lines: vec![format!("aldiag-trace version={TRACE_VERSION}")],
        }
    }

    fn push(&mut self, line: String) {
        self.lines.push(line);
    }

    pub fn header(&mut self, name: &str, c: &Configuration, o: &DiagnosisOptions) {
        let k = o.max_actions.map_or("none".to_string(), |k| k.to_string());
        self.push(format!(
            "scenario name={name} history_end={} current={} module={} max_actions={k} selection={} engine={}",
            c.history_end(),
            c.current_time(),
            o.module,
            o.selection,
            o.engine,
        ));
    }

    pub fn candidates(&mut self, all: &[CandidateDiagnosis]) {
        self.push(format!("candidates count={}", all.len()));
        for d in all {
            self.push(format!("candidate {}", candidate(d)));
        }
    }

    pub fn event(&mut self, e: &Event) {
        let line = match e {
            Event::Symptom { history_end, current } => format!("symptom history_end={history_end} current={current}"),
            Event::Candidate { round, candidate: d } => format!("select round={round} {}", candidate(d)),
            Event::Test { component, time, faulty } => {
                let result = if *faulty { "faulty" } else { "ok" };
                format!("test component={component} time={time} result={result}")
            }
            Event::Found(d) => format!("found {}", candidate(d)),
            Event::NotFound => "not_found hint=modeling_error_suspected".to_string(),
            Event::Repair { components, time } => format!("repair components={} time={time}", set(components)),
            Event::Observed(o) => format!("observe literal={} time={}", o.literal, o.time),
            Event::Resolved => "resolved".to_string(),
        };
        self.push(line);
    }

    pub fn summary(&mut self, status: RunStatus, diagnoses: &[CandidateDiagnosis], repairs: usize, c: &Configuration, w: &World) {
        let last = diagnoses.last().map_or("none".to_string(), |d| format!("<{}>", candidate(d)));
        let observations = c.records().observations.len();
        if !w.branching_steps().is_empty() {
            self.push(format!("world nondeterministic_steps={}", set(w.branching_steps())));
        }
        self.push(format!(
            "summary status={status} exit={} diagnoses={} repairs={repairs} observations={observations} final={last}",
            status.exit_code(),
            diagnoses.len(),
        ));
    }

    pub fn finish(self) -> Vec<String> {
        self.lines
    }
}
