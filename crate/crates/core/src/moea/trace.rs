//! Run traces and their JSON-lines encoding.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::model::ObjectiveVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveEvent {
    pub budget: u64,
    pub point: ObjectiveVector,
}

/// Archive contents at the end of a generation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub budget: u64,
    pub generation: u64,
    pub evaluations: u64,
    pub archive: Vec<ObjectiveVector>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub point: ObjectiveVector,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// `pareto` or `single`.
    pub engine: String,
    pub task: String,
    pub seed: u64,
    pub config_digest: String,
    /// Weight of the makespan objective for single-objective runs.
    pub alpha: Option<f64>,
    /// Every insertion of a feasible point into the non-dominated archive.
    pub archive_events: Vec<ArchiveEvent>,
    /// One per generation, budgets strictly increasing.
    pub snapshots: Vec<Snapshot>,
    pub final_population: Vec<Member>,
    pub budget_used: u64,
    pub evaluations: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header {
        engine: String,
        task: String,
        seed: u64,
        config_digest: String,
        alpha: Option<f64>,
    },
    ArchiveAdd {
        budget: u64,
        point: ObjectiveVector,
    },
    Generation {
        budget: u64,
        generation: u64,
        evaluations: u64,
        archive: Vec<ObjectiveVector>,
    },
    FinalPopulation {
        budget: u64,
        evaluations: u64,
        members: Vec<Member>,
    },
}

impl RunTrace {
    /// Archive (non-dominated feasible points) after `budget` units.
    pub fn archive_at(&self, budget: u64) -> Vec<ObjectiveVector> {
        let pts: Vec<ObjectiveVector> = self
            .archive_events
            .iter()
            .take_while(|e| e.budget <= budget)
            .map(|e| e.point)
            .collect();
        crate::assess::nondominated(&pts)
    }

    pub fn final_archive(&self) -> Vec<ObjectiveVector> {
        self.archive_at(u64::MAX)
    }

    /// Feasible objective vectors of the final population.
    pub fn final_points(&self) -> Vec<ObjectiveVector> {
        self.final_population.iter().filter(|m| m.feasible).map(|m| m.point).collect()
    }

    /// Events in chronological order: header, archive insertions interleaved
    /// with generation ends, final population.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut emit = |line: &Line| -> std::io::Result<()> {
            serde_json::to_writer(&mut w, line)?;
            w.write_all(b"\n")
        };
        emit(&Line::Header {
            engine: self.engine.clone(),
            task: self.task.clone(),
            seed: self.seed,
            config_digest: self.config_digest.clone(),
            alpha: self.alpha,
        })?;
        let mut events = self.archive_events.iter().peekable();
        for s in &self.snapshots {
            while let Some(e) = events.next_if(|e| e.budget <= s.budget) {
                emit(&Line::ArchiveAdd {
                    budget: e.budget,
                    point: e.point,
                })?;
            }
            emit(&Line::Generation {
                budget: s.budget,
                generation: s.generation,
                evaluations: s.evaluations,
                archive: s.archive.clone(),
            })?;
        }
        for e in events {
            emit(&Line::ArchiveAdd {
                budget: e.budget,
                point: e.point,
            })?;
        }
        emit(&Line::FinalPopulation {
            budget: self.budget_used,
            evaluations: self.evaluations,
            members: self.final_population.clone(),
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut trace: Option<RunTrace> = None;
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| TraceError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line).map_err(|e| TraceError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            match (parsed, trace.as_mut()) {
                (
                    Line::Header {
                        engine,
                        task,
                        seed,
                        config_digest,
                        alpha,
                    },
                    None,
                ) => {
                    trace = Some(RunTrace {
                        engine,
                        task,
                        seed,
                        config_digest,
                        alpha,
                        archive_events: Vec::new(),
                        snapshots: Vec::new(),
                        final_population: Vec::new(),
                        budget_used: 0,
                        evaluations: 0,
                    })
                }
                (Line::Header { .. }, Some(_)) => {
                    return Err(TraceError::Parse {
                        line: i + 1,
                        msg: "second header".into(),
                    })
                }
                (_, None) => {
                    return Err(TraceError::Parse {
                        line: i + 1,
                        msg: "event before header".into(),
                    })
                }
                (Line::ArchiveAdd { budget, point }, Some(t)) => t.archive_events.push(ArchiveEvent { budget, point }),
                (
                    Line::Generation {
                        budget,
                        generation,
                        evaluations,
                        archive,
                    },
                    Some(t),
                ) => t.snapshots.push(Snapshot {
                    budget,
                    generation,
                    evaluations,
                    archive,
                }),
                (
                    Line::FinalPopulation {
                        budget,
                        evaluations,
                        members,
                    },
                    Some(t),
                ) => {
                    t.budget_used = budget;
                    t.evaluations = evaluations;
                    t.final_population = members;
                }
            }
        }
        trace.ok_or(TraceError::Parse {
            line: 0,
            msg: "empty trace".into(),
        })
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(String),
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let p = |m, s| ObjectiveVector::new(m, s);
        let t = RunTrace {
            engine: "pareto".into(),
            task: "t".into(),
            seed: 3,
            config_digest: "abc".into(),
            alpha: None,
            archive_events: vec![
                ArchiveEvent { budget: 5, point: p(10, 3) },
                ArchiveEvent { budget: 9, point: p(8, 4) },
            ],
            snapshots: vec![Snapshot {
                budget: 7,
                generation: 0,
                evaluations: 4,
                archive: vec![p(10, 3)],
            }],
            final_population: vec![Member {
                point: p(8, 4),
                feasible: true,
            }],
            budget_used: 12,
            evaluations: 6,
        };
        let text = t.to_jsonl();
        assert!(text.lines().nth(1).unwrap().contains(r#""kind":"archive_add""#));
        assert!(text.lines().nth(1).unwrap().contains(r#""point":[10,3]"#));
        let back = RunTrace::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.archive_at(6), vec![p(10, 3)]);
        assert_eq!(back.final_archive(), vec![p(8, 4), p(10, 3)]);
    }
}
