use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;

use super::eval::{AGGREGATE, CSV_HEADER};
use crate::plot::{bar_chart, line_chart};
use crate::{invalid, CmdResult, Classify};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `LABEL=eval.csv`; repeat for every run.
    #[arg(long = "run", required = true)]
    pub runs: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Treat labels as numbers along this axis (e.g. demos, meshes) and draw
    /// a curve per task.
    #[arg(long)]
    pub axis: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub task: String,
    pub controller: String,
    pub mean: f64,
    pub std: f64,
}

/// The aggregate row of an evaluation CSV.
pub fn read_eval_csv(label: &str, path: &Path) -> CmdResult<RunSummary> {
    let mut r = csv::Reader::from_path(path).invalid(format!("opening {}", path.display()))?;
    let header = r.headers().invalid(format!("reading {}", path.display()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(invalid(format!("{}: unexpected columns {:?}", path.display(), header)));
    }
    for rec in r.records() {
        let rec = rec.invalid(format!("reading {}", path.display()))?;
        if &rec[2] == AGGREGATE {
            let num = |i: usize| rec[i].parse::<f64>().invalid(format!("{}: bad number {:?}", path.display(), &rec[i]));
            return Ok(RunSummary {
                label: label.to_string(),
                task: rec[0].to_string(),
                controller: rec[1].to_string(),
                mean: num(4)?,
                std: num(5)?,
            });
        }
    }
    Err(invalid(format!("{}: no aggregate row", path.display())))
}

pub fn run(args: ReportArgs) -> CmdResult {
    let mut runs = Vec::new();
    for r in &args.runs {
        let (label, path) = r.split_once('=').ok_or_else(|| invalid(format!("--run {r:?} is not LABEL=PATH")))?;
        runs.push(read_eval_csv(label, Path::new(path))?);
    }
    std::fs::create_dir_all(&args.out).runtime(format!("creating {}", args.out.display()))?;

    let mut w = csv::Writer::from_path(args.out.join("summary.csv")).runtime("creating summary.csv")?;
    w.write_record(["label", "task", "controller", "mean", "std"]).runtime("writing summary.csv")?;
    for s in &runs {
        w.write_record([&s.label, &s.task, &s.controller, &s.mean.to_string(), &s.std.to_string()])
            .runtime("writing summary.csv")?;
    }
    w.flush().runtime("writing summary.csv")?;
    let bars: Vec<_> = runs.iter().map(|s| (s.label.clone(), s.mean, s.std)).collect();
    std::fs::write(args.out.join("summary.svg"), bar_chart("Success rate (mean ± std over seeds)", &bars))
        .runtime("writing summary.svg")?;

    if let Some(axis) = &args.axis {
        let mut series: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for s in &runs {
            let x: f64 = s
                .label
                .parse()
                .invalid(format!("label {:?} is not a number along {axis}", s.label))?;
            series.entry(s.task.clone()).or_default().push((x, s.mean, s.std));
        }
        let mut w = csv::Writer::from_path(args.out.join("ablation.csv")).runtime("creating ablation.csv")?;
        w.write_record(["task", axis.as_str(), "mean", "std"]).runtime("writing ablation.csv")?;
        for (task, points) in series.iter_mut() {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (x, m, s) in points.iter() {
                w.write_record([task.clone(), x.to_string(), m.to_string(), s.to_string()])
                    .runtime("writing ablation.csv")?;
            }
        }
        w.flush().runtime("writing ablation.csv")?;
        let series: Vec<_> = series.into_iter().collect();
        std::fs::write(
            args.out.join("ablation.svg"),
            line_chart(&format!("Success rate vs. {axis}"), axis, &series),
        )
        .runtime("writing ablation.svg")?;
    }
    println!("{} runs summarized in {}", runs.len(), args.out.display());
    Ok(())
}
