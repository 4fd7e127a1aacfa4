//! CSV schemas for the warm-start set and the interaction log.
//!
//! Files start with `#` comment lines naming the manifest and seed, then a
//! header row with the fixed column order, then one row per record. Floats
//! use 17 significant digits so every value reads back bit-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};
use tutor_core::cohortsim::InteractionRecord;
use tutor_core::datagen::{PerformanceOutcomes, WarmStartRecord};
use tutor_core::domain::{validate_outcomes, Action, LearnerStateRaw, OutcomeVector, QuestionType};

use crate::error::{CliError, CliResult};
use crate::float::g17;

pub const WARM_START_COLUMNS: [&str; 15] = [
    "pk",
    "pe",
    "m",
    "difficulty",
    "response_time",
    "attempts",
    "hint",
    "turn",
    "question_type",
    "correctness",
    "quiz_score",
    "completion",
    "improvement",
    "p_correct",
    "label",
];

pub const INTERACTION_COLUMNS: [&str; 20] = [
    "student_id",
    "turn",
    "question_type",
    "difficulty",
    "pk",
    "pe",
    "m",
    "response_time",
    "attempts",
    "hint",
    "action",
    "correctness",
    "quiz_score",
    "completion",
    "improvement",
    "usefulness",
    "satisfaction",
    "trust",
    "reward",
    "response_text",
];

/// Leading comment lines: `# key=value`.
pub type Preamble = Vec<(String, String)>;

/// Writes a comment preamble, a header and rows of pre-formatted cells.
pub fn write_table(
    path: &Path,
    preamble: &Preamble,
    header: &[&str],
    rows: &[Vec<String>],
) -> CliResult<()> {
    let io = |e| CliError::io(path, e);
    let mut file = BufWriter::new(File::create(path).map_err(io)?);
    for (k, v) in preamble {
        writeln!(file, "# {k}={v}").map_err(io)?;
    }
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(file);
    let csv_err = |e: csv::Error| CliError::io(path, std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn bit(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

pub fn write_warm_start(
    path: &Path,
    preamble: &Preamble,
    records: &[WarmStartRecord],
) -> CliResult<()> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                g17(r.raw.prior_knowledge),
                g17(r.raw.programming_experience),
                g17(r.raw.motivation),
                g17(r.raw.difficulty),
                g17(r.raw.response_time),
                r.raw.attempts.to_string(),
                bit(r.raw.hint_requested),
                r.raw.turn.to_string(),
                r.raw.question_type.name().to_string(),
                bit(r.outcomes.correct),
                g17(r.outcomes.quiz_score),
                g17(r.outcomes.completion),
                g17(r.outcomes.improvement),
                g17(r.p_correct),
                r.label.name().to_string(),
            ]
        })
        .collect();
    write_table(path, preamble, &WARM_START_COLUMNS, &rows)
}

pub fn write_interactions(
    path: &Path,
    preamble: &Preamble,
    records: &[InteractionRecord],
) -> CliResult<()> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let o = &r.outcomes;
            vec![
                r.student_id.to_string(),
                r.turn.to_string(),
                r.raw.question_type.name().to_string(),
                g17(r.raw.difficulty),
                g17(r.raw.prior_knowledge),
                g17(r.raw.programming_experience),
                g17(r.raw.motivation),
                g17(r.raw.response_time),
                r.raw.attempts.to_string(),
                bit(r.raw.hint_requested),
                r.action.name().to_string(),
                g17(o.correctness),
                g17(o.quiz_score),
                g17(o.completion),
                g17(o.improvement),
                g17(o.usefulness),
                g17(o.satisfaction),
                g17(o.trust),
                g17(r.reward),
                r.response_text.clone(),
            ]
        })
        .collect();
    write_table(path, preamble, &INTERACTION_COLUMNS, &rows)
}

/// One data row with its 1-based line number, for error messages.
struct Row<'a> {
    path: &'a Path,
    rec: &'a StringRecord,
    line: u64,
    columns: &'a [&'a str],
}

impl Row<'_> {
    fn err(&self, col: usize, msg: impl std::fmt::Display) -> CliError {
        CliError::schema(
            self.path,
            format!("line {}, column '{}': {msg}", self.line, self.columns[col]),
        )
    }

    fn parse<T: FromStr>(&self, col: usize) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        let s = self
            .rec
            .get(col)
            .ok_or_else(|| self.err(col, "missing value"))?;
        s.parse()
            .map_err(|e| self.err(col, format!("cannot parse '{s}': {e}")))
    }

    fn finite(&self, col: usize) -> CliResult<f64> {
        let v: f64 = self.parse(col)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(col, format!("non-finite value {v}")))
        }
    }

    fn flag(&self, col: usize) -> CliResult<bool> {
        match self.rec.get(col) {
            Some("0") => Ok(false),
            Some("1") => Ok(true),
            other => Err(self.err(col, format!("expected 0 or 1, got {other:?}"))),
        }
    }

    fn text(&self, col: usize) -> CliResult<&str> {
        self.rec
            .get(col)
            .ok_or_else(|| self.err(col, "missing value"))
    }

    fn whole(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::schema(self.path, format!("line {}: {msg}", self.line))
    }
}

fn read_rows<T>(
    path: &Path,
    columns: &[&str],
    mut f: impl FnMut(&Row) -> CliResult<T>,
) -> CliResult<Vec<T>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CliError::schema(path, format!("unreadable header: {e}")))?
        .clone();
    for (i, expected) in columns.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == *expected => {}
            Some(h) => {
                return Err(CliError::schema(
                    path,
                    format!("column {}: expected '{expected}', found '{h}'", i + 1),
                ));
            }
            None => {
                return Err(CliError::schema(
                    path,
                    format!("missing column '{expected}'"),
                ))
            }
        }
    }
    if header.len() > columns.len() {
        return Err(CliError::schema(
            path,
            format!("unexpected extra column '{}'", &header[columns.len()]),
        ));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::schema(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(f(&Row {
            path,
            rec: &rec,
            line,
            columns,
        })?);
    }
    Ok(out)
}

pub fn read_warm_start(path: &Path) -> CliResult<Vec<WarmStartRecord>> {
    read_rows(path, &WARM_START_COLUMNS, |row| {
        let qt: QuestionType = row.parse(8)?;
        let raw = LearnerStateRaw::new(
            row.finite(0)?,
            row.finite(1)?,
            row.finite(2)?,
            row.finite(3)?,
            row.finite(4)?,
            row.parse(5)?,
            row.flag(6)?,
            row.parse(7)?,
            qt,
        )
        .map_err(|e| row.whole(e))?;
        Ok(WarmStartRecord {
            raw,
            outcomes: PerformanceOutcomes {
                correct: row.flag(9)?,
                quiz_score: row.finite(10)?,
                completion: row.finite(11)?,
                improvement: row.finite(12)?,
            },
            p_correct: row.finite(13)?,
            label: row.parse::<Action>(14)?,
        })
    })
}

pub fn read_interactions(path: &Path) -> CliResult<Vec<InteractionRecord>> {
    let records = read_rows(path, &INTERACTION_COLUMNS, |row| {
        let raw = LearnerStateRaw::new(
            row.finite(4)?,
            row.finite(5)?,
            row.finite(6)?,
            row.finite(3)?,
            row.finite(7)?,
            row.parse(8)?,
            row.flag(9)?,
            row.parse(1)?,
            row.parse(2)?,
        )
        .map_err(|e| row.whole(e))?;
        let outcomes = OutcomeVector {
            correctness: row.finite(11)?,
            quiz_score: row.finite(12)?,
            completion: row.finite(13)?,
            improvement: row.finite(14)?,
            usefulness: row.finite(15)?,
            satisfaction: row.finite(16)?,
            trust: row.finite(17)?,
        };
        if let Err(v) = validate_outcomes(&outcomes) {
            let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            return Err(row.whole(list.join("; ")));
        }
        Ok(InteractionRecord {
            student_id: row.parse(0)?,
            turn: row.parse(1)?,
            raw,
            action: row.parse(10)?,
            outcomes,
            reward: row.finite(18)?,
            response_text: row.text(19)?.to_string(),
        })
    })?;
    let mut seen = std::collections::BTreeSet::new();
    for r in &records {
        if !seen.insert((r.student_id, r.turn)) {
            return Err(CliError::Data(format!(
                "{}: student {} has more than one record for turn {}",
                path.display(),
                r.student_id,
                r.turn
            )));
        }
    }
    Ok(records)
}
