//! Deterministic command reports: stable field order, byte-identical for
//! identical inputs and seeds. Timing is only populated under `--timing`.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub verdicts: Vec<(String, String)>,
    pub witnesses: Vec<String>,
    pub timing_ms: Option<u128>,
    /// Converted artifacts in the input language, when a command emits one.
    pub payload: Option<String>,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Report {
            command: command.into(),
            seed,
            verdicts: Vec::new(),
            witnesses: Vec::new(),
            timing_ms: None,
            payload: None,
        }
    }

    pub fn verdict(&mut self, name: impl Into<String>, value: impl ToString) {
        self.verdicts.push((name.into(), value.to_string()));
    }

    pub fn witness(&mut self, w: impl Into<String>) {
        self.witnesses.push(w.into());
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Text => {
                let mut out = String::new();
                out.push_str(&format!("command: {}\n", self.command));
                out.push_str(&format!("seed: {}\n", self.seed));
                for (k, v) in &self.verdicts {
                    out.push_str(&format!("verdict {k}: {v}\n"));
                }
                for w in &self.witnesses {
                    out.push_str(&format!("witness: {w}\n"));
                }
                match self.timing_ms {
                    Some(ms) => out.push_str(&format!("timing: {ms}ms\n")),
                    None => out.push_str("timing: -\n"),
                }
                if let Some(p) = &self.payload {
                    out.push_str("payload:\n");
                    out.push_str(p);
                    if !p.ends_with('\n') {
                        out.push('\n');
                    }
                }
                out
            }
        }
    }
}
