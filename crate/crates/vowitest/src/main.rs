use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vowitest::oracle::{run_campaign, seed_from_env, summarize, summary_markdown, CampaignOptions};
use vowitest::testcase::{emit_log_record, parse_testcase, validate_corpus, LogRecord, TestCase};
use vowitest::testgen::{encode_corpus, parse_properties, FlowGraph};
use vowitest::transform::{generate_corpus, CorpusManifest, MutationConfig};
use vowitest::ue::UeProfile;

#[derive(Parser)]
#[command(name = "vowitest", about = "Adversarial testing harness for the VoWiFi registration stack", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode an annotated property corpus into primary testcases.
    Encode {
        #[arg(long)]
        properties: PathBuf,
        #[arg(long)]
        flow: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand primary testcases into the adversarial corpus.
    Mutate {
        #[arg(long)]
        ptcs: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a testcase directory against the flow vocabulary.
    Validate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        flow: PathBuf,
    },
    /// Run a testcase directory against one UE profile, three repetitions
    /// each, with both oracles; writes logs and the summary.
    Run {
        #[arg(long)]
        atcs: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        flow: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Exit nonzero if any alert is raised (for profiles expected clean).
        #[arg(long, default_value_t = false)]
        expect_clean: bool,
    },
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_corpus(dir: &Path) -> Result<(Vec<TestCase>, Option<CorpusManifest>), String> {
    let mut tcs = Vec::new();
    let mut manifest = None;
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    entries.sort();
    for path in entries {
        let text = read(&path)?;
        if path.file_name().map(|n| n == "manifest.json").unwrap_or(false) {
            manifest =
                Some(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?);
            continue;
        }
        let tc = parse_testcase(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        tcs.push(tc);
    }
    tcs.sort_by(|a, b| a.tc_id.cmp(&b.tc_id));
    Ok((tcs, manifest))
}

fn file_stem_for(tc_id: &str) -> String {
    tc_id
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_tc(dir: &Path, tc: &TestCase) -> Result<(), String> {
    let path = dir.join(format!("{}.json", file_stem_for(&tc.tc_id)));
    let text = serde_json::to_string_pretty(tc).expect("testcases serialize");
    fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_encode(properties: &Path, flow: &Path, out: &Path) -> Result<(), String> {
    let props = parse_properties(&read(properties)?).map_err(|e| e.to_string())?;
    let graph = FlowGraph::parse(&read(flow)?).map_err(|e| e.to_string())?;
    let (ptcs, issues) = encode_corpus(&props, &graph);
    fs::create_dir_all(out).map_err(|e| e.to_string())?;
    for tc in &ptcs {
        write_tc(out, tc)?;
    }
    for issue in &issues {
        eprintln!("encode: {}: {}", issue.prop_id, issue.error);
    }
    println!("encoded {} properties -> {} PTCs ({} errors)", props.len(), ptcs.len(), issues.len());
    if issues.is_empty() {
        Ok(())
    } else {
        Err("some properties failed to encode".into())
    }
}

fn cmd_mutate(ptcs_dir: &Path, config: &Path, out: &Path) -> Result<(), String> {
    let (ptcs, _) = load_corpus(ptcs_dir)?;
    let config = MutationConfig::parse(&read(config)?).map_err(|e| e.to_string())?;
    let (atcs, manifest) = generate_corpus(&ptcs, &config).map_err(|e| e.to_string())?;
    fs::create_dir_all(out).map_err(|e| e.to_string())?;
    for tc in &atcs {
        write_tc(out, tc)?;
    }
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(out.join("manifest.json"), manifest_text).map_err(|e| e.to_string())?;
    println!(
        "generated {} ATCs from {} PTCs (corpus hash {})",
        manifest.atc_count,
        ptcs.len(),
        &manifest.corpus_hash[..16]
    );
    Ok(())
}

fn cmd_validate(corpus: &Path, flow: &Path) -> Result<bool, String> {
    let (tcs, _) = load_corpus(corpus)?;
    let graph = FlowGraph::parse(&read(flow)?).map_err(|e| e.to_string())?;
    let violations = validate_corpus(&tcs, &graph.vocab());
    for v in &violations {
        eprintln!("violation: {} (index {}): {}", v.tc_id, v.tc_index, v.detail);
    }
    println!("{} testcases, {} violations", tcs.len(), violations.len());
    Ok(violations.is_empty())
}

fn cmd_run(
    atcs_dir: &Path,
    profile: &Path,
    flow: &Path,
    out: &Path,
    expect_clean: bool,
) -> Result<bool, String> {
    let (atcs, manifest) = load_corpus(atcs_dir)?;
    let profile = UeProfile::load(profile).map_err(|e| e.to_string())?;
    let graph = FlowGraph::parse(&read(flow)?).map_err(|e| e.to_string())?;
    fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let log_dir = out.join("logs");
    fs::create_dir_all(&log_dir).map_err(|e| e.to_string())?;

    // one log file per (tc_id, repetition); the adversarial run and the
    // follow-up registration append to the same file
    let mut write_error = None;
    let mut sink = |tc_id: &str, rep: usize, phase: &str, records: &[LogRecord]| {
        let path = log_dir.join(format!("{}_rep{}.jsonl", file_stem_for(tc_id), rep));
        let mut text = String::new();
        for r in records {
            text.push_str(&emit_log_record(r));
            text.push('\n');
        }
        let result = if phase == "atc" {
            fs::write(&path, text)
        } else {
            use std::io::Write;
            fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .and_then(|mut f| f.write_all(text.as_bytes()))
        };
        if let Err(e) = result {
            write_error = Some(format!("{}: {e}", path.display()));
        }
    };
    let options =
        CampaignOptions { master_seed: seed_from_env(), sink: Some(&mut sink), ..Default::default() };
    let result =
        run_campaign(&atcs, manifest.as_ref(), &profile, &graph, options).map_err(|e| e.to_string())?;
    if let Some(e) = write_error {
        return Err(e);
    }

    let summary = summarize(&result);
    let results_json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(out.join("results.json"), results_json).map_err(|e| e.to_string())?;
    fs::write(out.join("results.md"), summary_markdown(&summary)).map_err(|e| e.to_string())?;

    let alerted: BTreeSet<&str> = result.alerted_ids().into_iter().collect();
    println!(
        "profile {}: {} testcases, {} alerts ({} function, {} liveness); results in {}",
        summary.profile,
        summary.atc_count,
        alerted.len(),
        summary.function_alerts,
        summary.liveness_alerts,
        out.display()
    );
    Ok(!(expect_clean && !alerted.is_empty()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Cmd::Encode { properties, flow, out } => cmd_encode(properties, flow, out).map(|_| true),
        Cmd::Mutate { ptcs, config, out } => cmd_mutate(ptcs, config, out).map(|_| true),
        Cmd::Validate { corpus, flow } => cmd_validate(corpus, flow),
        Cmd::Run { atcs, profile, flow, out, expect_clean } => {
            cmd_run(atcs, profile, flow, out, *expect_clean)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
