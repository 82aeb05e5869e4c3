use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use hraid_core::analytic::{
    compare_apportionments, conditional_sixth_failure, d_max, d_min, exact_mds_reliability,
    exact_mds_unreliability, hraid_reliability, hraid_unreliability, leading_term,
    published_leading_coefficient, raid_series_approx, rational_to_f64, DiskReliability,
};
use hraid_core::layout::{self, Cell, LayoutDocument, Recovery, StripeContent};
use hraid_core::oracle::{self, exact_reliability_enum, markov_mttdl};
use hraid_core::simulator::{self, estimate_mttdl, sweep, sweep_csv, SweepCell, SweepTable};
use hraid_core::{HraidConfig, MAX_TOLERANCE};

use crate::args::{AnalyticTopic, Command, OracleTopic, OutputFormat, RunConfig};
use crate::error::CliError;
use crate::output;

pub fn execute(command: &Command, rc: &RunConfig) -> Result<String, CliError> {
    match command {
        Command::Simulate {
            trace,
            trace_trials,
        } => simulate(rc, trace.as_deref(), *trace_trials),
        Command::Sweep => run_sweep(rc),
        Command::Analytic { topic, eps } => analytic(rc, *topic, *eps),
        Command::Oracle { topic } => run_oracle(rc, *topic),
        Command::Layout { verify } => match verify {
            Some(path) => verify_layout_file(path),
            None => emit_layout(rc),
        },
        Command::CodecDemo {
            dir,
            strip_size,
            erase_node,
            erase_disk,
        } => codec_demo(rc, dir, *strip_size, erase_node, erase_disk),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn thousands(hours: f64) -> String {
    format!("{:.1}", hours / 1e3)
}

/// 15 significant digits.
fn sig15(v: f64) -> String {
    format!("{v:.14e}")
}

fn simulate(rc: &RunConfig, trace: Option<&Path>, trace_trials: u64) -> Result<String, CliError> {
    let config = rc.hraid()?;
    let rates = rc.rates()?;
    let estimate = estimate_mttdl(&config, &rates, rc.trials()?, rc.seed)?;
    if let Some(path) = trace {
        let mut lines = String::new();
        for event in simulator::trace_trials(&config, &rates, rc.seed, trace_trials) {
            lines.push_str(&serde_json::to_string(&event).map_err(|e| CliError::Internal(e.to_string()))?);
            lines.push('\n');
        }
        output::emit(&lines, Some(path))?;
    }
    let cell = SweepCell {
        config,
        rates,
        estimate,
    };
    match rc.output_format {
        OutputFormat::Csv => Ok(sweep_csv([&cell])),
        OutputFormat::Json => to_json(&cell),
        OutputFormat::Table => {
            let e = &cell.estimate;
            let exact = markov_mttdl(&config, &rates);
            let mut out = String::new();
            writeln!(out, "{config}  delta={:e}/h  gamma={:e}/h", rates.disk_rate(), rates.controller_rate()).unwrap();
            writeln!(out, "trials      {}", e.trials).unwrap();
            writeln!(out, "seed        {}", e.seed).unwrap();
            writeln!(out, "mttdl       {:.1} h ({} thousand h)", e.mean_hours, thousands(e.mean_hours)).unwrap();
            writeln!(out, "std dev     {:.1} h", e.std_dev_hours).unwrap();
            writeln!(out, "ci95        [{:.1}, {:.1}] h", e.ci95_low, e.ci95_high).unwrap();
            writeln!(out, "exact chain {:.1} h ({} thousand h){}", exact, thousands(exact), if e.contains(exact) { "" } else { "  outside ci95" }).unwrap();
            writeln!(out, "disk failures at loss  {}..={}", e.min_disk_failures, e.max_disk_failures).unwrap();
            Ok(out)
        }
    }
}

fn sweep_table(table: &SweepTable) -> String {
    let mut out = String::new();
    let r = &table.rates;
    writeln!(
        out,
        "HRAID k/l MTTDL in thousands of hours: N={} M={} delta={:e}/h gamma={:e}/h trials={} seed={}",
        table.n,
        table.m,
        r.disk_rate(),
        r.controller_rate(),
        table.trials,
        table.seed
    )
    .unwrap();
    let grid = |out: &mut String, title: &str, value: &dyn Fn(&SweepCell) -> String| {
        writeln!(out, "\n{title}").unwrap();
        write!(out, "{:<6}", "").unwrap();
        for k in 0..=MAX_TOLERANCE {
            write!(out, "{:>9}", format!("k={k}")).unwrap();
        }
        out.push('\n');
        for l in 0..=MAX_TOLERANCE {
            write!(out, "{:<6}", format!("l={l}")).unwrap();
            for k in 0..=MAX_TOLERANCE {
                let text = table.cell(k, l).map_or_else(|| "-".to_string(), value);
                write!(out, "{text:>9}").unwrap();
            }
            out.push('\n');
        }
    };
    grid(&mut out, "simulated (* = ci95 excludes the exact chain value)", &|c| {
        let exact = markov_mttdl(&c.config, &c.rates);
        let flag = if c.estimate.contains(exact) { " " } else { "*" };
        format!("{}{flag}", thousands(c.estimate.mean_hours))
    });
    grid(&mut out, "exact chain", &|c| format!("{} ", thousands(markov_mttdl(&c.config, &c.rates))));
    out
}

fn run_sweep(rc: &RunConfig) -> Result<String, CliError> {
    let table = sweep(rc.n, rc.m, &rc.rates()?, rc.trials()?, rc.seed)?;
    match rc.output_format {
        OutputFormat::Csv => Ok(sweep_csv(&table.cells)),
        OutputFormat::Json => to_json(&table),
        OutputFormat::Table => Ok(sweep_table(&table)),
    }
}

/// An ordered list of named quantities, rendered in any output format.
#[derive(Default)]
struct Quantities(Vec<(String, Value)>);

impl Quantities {
    fn push(&mut self, name: &str, value: impl Into<Value>) {
        self.0.push((name.to_string(), value.into()));
    }

    fn render(&self, format: OutputFormat) -> Result<String, CliError> {
        let plain = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        Ok(match format {
            OutputFormat::Json => {
                let map: Map<String, Value> = self.0.iter().cloned().collect();
                to_json(&map)?
            }
            OutputFormat::Csv => {
                let mut out = String::from("quantity,value\n");
                for (k, v) in &self.0 {
                    writeln!(out, "{k},{}", plain(v)).unwrap();
                }
                out
            }
            OutputFormat::Table => {
                let width = self.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                let mut out = String::new();
                for (k, v) in &self.0 {
                    writeln!(out, "{k:<width$}  {}", plain(v)).unwrap();
                }
                out
            }
        })
    }
}

fn analytic(rc: &RunConfig, topic: AnalyticTopic, eps: f64) -> Result<String, CliError> {
    let config = rc.hraid()?;
    let (n, m, k, l) = (config.n(), config.m(), config.k(), config.l());
    let all = topic == AnalyticTopic::All;
    let mut q = Quantities::default();
    q.push("config", config.to_string());

    if all || topic == AnalyticTopic::Bounds {
        q.push("d_max", d_max(&config));
        q.push("d_min", d_min(&config));
    }
    if all || topic == AnalyticTopic::Reliability {
        let e = DiskReliability::new(eps)?;
        q.push("eps", sig15(eps));
        q.push("node_reliability", sig15(exact_mds_reliability(m, l, e)?));
        q.push("node_unreliability", sig15(exact_mds_unreliability(m, l, e)?));
        q.push("node_unreliability_series", sig15(raid_series_approx(m, l, e)));
        q.push("array_reliability", sig15(hraid_reliability(&config, e)));
        q.push("array_unreliability", sig15(hraid_unreliability(&config, e)));
    }
    if all || topic == AnalyticTopic::LeadingTerm {
        let lt = leading_term(&config);
        q.push("leading_power", lt.power);
        q.push("leading_coefficient", lt.coefficient.to_string());
        if let Some(p) = published_leading_coefficient(n, m, k, l) {
            q.push("leading_coefficient_published_form", p.to_string());
        }
    }
    if all || topic == AnalyticTopic::Compare {
        match compare_apportionments(n, m) {
            Ok(c) => {
                q.push("ordering", c.ordering.to_string());
                q.push("coefficient_1_2", c.coefficient_12.to_string());
                q.push("coefficient_2_1", c.coefficient_21.to_string());
                q.push("threshold_n", c.threshold_n.to_string());
                q.push("threshold_n_decimal", sig15(rational_to_f64(&c.threshold_n)));
                q.push("counted_threshold_n", c.counted_threshold_n.to_string());
                q.push("counted_threshold_n_decimal", sig15(rational_to_f64(&c.counted_threshold_n)));
            }
            Err(e) if !all => return Err(e.into()),
            Err(_) => {}
        }
    }
    if all || topic == AnalyticTopic::SixthFailure {
        match conditional_sixth_failure(n, m) {
            Ok(s) => {
                q.push("d_s", s.d_s);
                q.push("p_1_2", s.p_12.to_string());
                q.push("p_1_2_decimal", sig15(rational_to_f64(&s.p_12)));
                q.push("p_2_1", s.p_21.to_string());
                q.push("p_2_1_decimal", sig15(rational_to_f64(&s.p_21)));
            }
            Err(e) if !all => return Err(e.into()),
            Err(_) => {}
        }
    }
    q.render(rc.output_format)
}

fn run_oracle(rc: &RunConfig, topic: OracleTopic) -> Result<String, CliError> {
    let config = rc.hraid()?;
    match topic {
        OracleTopic::Poly => {
            let poly = exact_reliability_enum(&config)?;
            match rc.output_format {
                OutputFormat::Csv => Ok(poly.to_csv()),
                OutputFormat::Json => to_json(&json!({
                    "config": config,
                    "total_disks": poly.total_disks(),
                    "min_fatal_size": poly.min_fatal_size(),
                    "fatal_counts": poly.fatal_counts().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                })),
                OutputFormat::Table => {
                    let mut out = format!("{config}: fatal disk subsets by size\n");
                    writeln!(out, "{:>4} {:>24} {:>24}", "d", "total_subsets", "fatal_count").unwrap();
                    for (d, c) in poly.fatal_counts().iter().enumerate() {
                        writeln!(out, "{d:>4} {:>24} {c:>24}", poly.total_subsets(d)).unwrap();
                    }
                    Ok(out)
                }
            }
        }
        OracleTopic::Mttdl => {
            let rates = rc.rates()?;
            let hours = markov_mttdl(&config, &rates);
            let states = oracle::markov_state_count(&config, &rates);
            let mut q = Quantities::default();
            q.push("config", config.to_string());
            q.push("delta_per_hour", rates.disk_rate());
            q.push("gamma_per_hour", rates.controller_rate());
            q.push("transient_states", states);
            q.push("mttdl_hours", sig15(hours));
            q.push("mttdl_thousand_hours", sig15(hours / 1e3));
            q.render(rc.output_format)
        }
    }
}

fn emit_layout(rc: &RunConfig) -> Result<String, CliError> {
    let config = rc.hraid()?;
    let grid = layout::generate_layout(&config)?;
    match rc.output_format {
        OutputFormat::Table => Ok(grid.to_text(&config)),
        OutputFormat::Json => to_json(&grid.to_document(&config)),
        OutputFormat::Csv => {
            let mut out = String::from("row,node,pos,role\n");
            for (c, role) in grid.cells() {
                writeln!(out, "{},{},{},{}", c.row, c.node, c.pos, role.letter(config.l())).unwrap();
            }
            Ok(out)
        }
    }
}

fn verify_layout_file(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let doc: LayoutDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let (config, grid) = doc.to_grid()?;
    let report = layout::verify_layout(&grid, &config)?;
    if report.is_valid() {
        return Ok(format!("{config}: valid layout\n"));
    }
    let mut msg = format!("{config}: {} layout violations", report.violations.len());
    for v in &report.violations {
        write!(msg, "\n  {v}").unwrap();
    }
    Err(CliError::Validation(msg))
}

fn parse_disk(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--erase-disk expects NODE:POS, got `{spec}`"));
    let (a, b) = spec.split_once(':').ok_or_else(bad)?;
    Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
}

fn check_index(what: &'static str, v: usize, max: usize) -> Result<(), CliError> {
    if v == 0 || v > max {
        return Err(CliError::Validation(format!("violated bound `1 <= {what} <= {max}`: {v}")));
    }
    Ok(())
}

fn codec_demo(
    rc: &RunConfig,
    dir: &Path,
    strip_size: usize,
    erase_node: &[usize],
    erase_disk: &[String],
) -> Result<String, CliError> {
    let config = HraidConfig::with_layout(rc.n, rc.m, rc.k, rc.ell)?;
    if strip_size == 0 {
        return Err(CliError::Validation("violated bound `strip size >= 1`: 0".into()));
    }
    let grid = layout::generate_layout(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rc.seed);
    let data: Vec<Vec<u8>> = grid
        .cells()
        .filter(|(_, r)| r.is_data())
        .map(|_| (0..strip_size).map(|_| rng.gen()).collect())
        .collect();
    let original = layout::encode_stripes(&config, &data)?;
    original.write_to_dir(dir)?;

    let mut erased: Vec<Cell> = Vec::new();
    let nodes = if erase_node.is_empty() && erase_disk.is_empty() {
        vec![1]
    } else {
        erase_node.to_vec()
    };
    for &node in &nodes {
        check_index("node", node, config.n())?;
        erased.extend(original.node_cells(node));
    }
    for spec in erase_disk {
        let (node, pos) = parse_disk(spec)?;
        check_index("node", node, config.n())?;
        check_index("pos", pos, config.m())?;
        erased.extend(original.disk_cells(node, pos));
    }
    for &cell in &erased {
        match std::fs::remove_file(dir.join(StripeContent::strip_path(cell))) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
    }

    let (damaged, missing) = StripeContent::read_from_dir(dir, &config, strip_size)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut out = String::new();
    writeln!(out, "{config}: wrote {} strips of {strip_size} bytes to {} (seed {})", grid.cells().count(), dir.display(), rc.seed).unwrap();
    writeln!(out, "erased {} strips", missing.len()).unwrap();
    match layout::recover(&damaged, &missing)? {
        Recovery::Recovered(rebuilt) => {
            rebuilt.write_to_dir(dir)?;
            let exact = rebuilt == original;
            writeln!(out, "recovered all strips: {}", if exact { "bit-exact" } else { "MISMATCH" }).unwrap();
            if !exact {
                return Err(CliError::Internal(out));
            }
        }
        Recovery::DataLoss { lost } => {
            writeln!(out, "data loss: {} data strips cannot be rebuilt", lost.len()).unwrap();
        }
    }
    Ok(out)
}
