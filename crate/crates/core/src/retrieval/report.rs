use std::fmt::Write as _;

use crate::retrieval::{MapReport, PRPoint};

pub const PR_HEADER: &str = "task,code_length,radius,precision,recall,f_measure";
pub const MAP_HEADER: &str = "task,code_length,map,queries_evaluated,queries_skipped,top_k";

/// Retrieval direction, named query modality first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    ImageToText,
    TextToImage,
}

impl Task {
    pub fn label(self) -> &'static str {
        match self {
            Task::ImageToText => "Image → Text",
            Task::TextToImage => "Text → Image",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

pub fn write_pr_csv(task: Task, code_length: usize, curve: &[PRPoint]) -> String {
    let mut out = format!("{PR_HEADER}\n");
    for p in curve {
        writeln!(
            out,
            "{},{code_length},{},{},{},{}",
            task.label(),
            p.radius,
            p.precision,
            p.recall,
            p.f_measure
        )
        .expect("writing to a String");
    }
    out
}

/// One-row MAP summary; `top_k` is written as 0 for a full ranking.
pub fn write_map_csv(task: Task, code_length: usize, report: &MapReport, top_k: Option<usize>) -> String {
    format!(
        "{MAP_HEADER}\n{},{code_length},{},{},{},{}\n",
        task.label(),
        report.map,
        report.evaluated,
        report.skipped,
        top_k.unwrap_or(0)
    )
}
