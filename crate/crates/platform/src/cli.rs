//! The `cq` command line. Exit codes: 0 success, 1 domain error, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use cq_game::{export_gradebook, greedy_script, run_script, Action, Simulation};
use cq_problems::{grade, Answer, GradeResult, ProblemInstance};
use serde::{Deserialize, Serialize};

use crate::api::{system_clock, AppState};
use crate::auth::Role;
use crate::catalog::Catalog;
use crate::config::Config;
use crate::error::{PlatformError, Result};
use crate::storage::load_store;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cq", version, about = "Circuit quest games: generation, grading and the game server")]
pub struct Cli {
    /// Data directory with taxonomy.json, catalogs.json, templates/ and
    /// campaigns/. Defaults to the compiled-in data.
    #[arg(long, global = true, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Instantiate templates; one JSON instance per line.
    Gen {
        /// Template id; omit with --all.
        #[arg(long, required_unless_present = "all", conflicts_with = "all")]
        template: Option<String>,
        /// Every template in the catalog.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Consecutive seeds per template starting at --seed.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        /// Print the student view (expected answers withheld).
        #[arg(long)]
        view: bool,
    },
    /// Grade an answers file against an instance file and print the result.
    Grade {
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
        /// JSON array with one answer per question.
        #[arg(long, value_name = "FILE")]
        answers: PathBuf,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
    },
    /// Export the gradebook of one campaign as CSV.
    Gradebook {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long)]
        campaign: String,
        /// Date the calendar is judged at; today when omitted.
        #[arg(long)]
        today: Option<NaiveDate>,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Play a campaign with a scripted player and print the run.
    Simulate {
        #[arg(long)]
        campaign: String,
        #[arg(long, default_value = "simulated")]
        player: String,
        /// Seed for the greedy player.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON array of actions to run instead of the greedy player.
        #[arg(long, value_name = "FILE")]
        script: Option<PathBuf>,
    },
    /// Check templates, tables, taxonomy and campaigns against each other.
    Validate,
    /// Enroll a class roster (CSV with `player,campaign`) and print tokens.
    Roster {
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(value_name = "ROSTER")]
        file: PathBuf,
        /// Also issue an instructor token for this name.
        #[arg(long, value_name = "NAME")]
        instructor: Option<String>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run(args: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.kind());
            EXIT_DOMAIN
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| PlatformError::io("stdout", e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| PlatformError::io(path.display(), e))?;
    serde_json::from_str(&text).map_err(|e| PlatformError::io(path.display(), e))
}

fn config_with_data(path: Option<&Path>, data: Option<PathBuf>) -> Result<Config> {
    let mut config = Config::load(path)?;
    if data.is_some() {
        config.data_dir = data;
    }
    Ok(config)
}

#[derive(Debug, Serialize)]
struct SimulationReport<'a> {
    player: &'a str,
    campaign: &'a str,
    level: u8,
    completed: bool,
    xp: u64,
    coins: u64,
    reputation: u64,
    events: usize,
    steps: &'a [cq_game::simulate::Step],
}

fn report(sim: &Simulation) -> SimulationReport<'_> {
    let s = &sim.state;
    SimulationReport {
        player: &s.player_id,
        campaign: &s.campaign,
        level: s.level,
        completed: s.completed,
        xp: s.xp,
        coins: s.coins,
        reputation: s.reputation,
        events: s.history.len(),
        steps: &sim.steps,
    }
}

#[derive(Debug, Deserialize)]
struct RosterRow {
    player: String,
    campaign: String,
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Gen { template, all, seed, count, view } => {
            let catalog = Catalog::from_option(cli.data.as_deref())?;
            let ids: Vec<String> = if all {
                catalog.library.templates().iter().map(|t| t.id.clone()).collect()
            } else {
                vec![template.expect("clap requires --template without --all")]
            };
            let mut text = String::new();
            for id in &ids {
                for k in 0..count {
                    let instance = catalog.instantiate(id, seed.wrapping_add(k))?;
                    let line = if view { serde_json::to_string(&instance.view()) } else { serde_json::to_string(&instance) };
                    text.push_str(&line.expect("instances serialise"));
                    text.push('\n');
                }
            }
            write_out(out, &text)
        }
        Command::Grade { instance, answers } => {
            let instance: ProblemInstance = read_json(&instance)?;
            let answers: Vec<Answer> = read_json(&answers)?;
            let result: GradeResult = grade(&instance, &answers)?;
            write_out(out, &format!("{}\n", serde_json::to_string_pretty(&result).expect("grades serialise")))
        }
        Command::Serve { config } => {
            let config = config_with_data(config.as_deref(), cli.data)?;
            let _ = tracing_subscriber::fmt()
                .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
                .with_writer(std::io::stderr)
                .try_init();
            let runtime = tokio::runtime::Runtime::new().map_err(|e| PlatformError::io("tokio runtime", e))?;
            runtime.block_on(crate::server::serve(config))
        }
        Command::Gradebook { config, campaign, today, output } => {
            let config = config_with_data(config.as_deref(), cli.data)?;
            let catalog = Catalog::from_option(config.data_dir.as_deref())?;
            let campaign = catalog.campaign(&campaign)?;
            let store = load_store(&config.storage)?;
            let players: Vec<_> = store.players.values().filter(|p| p.state.campaign == campaign.id).map(|p| p.state.clone()).collect();
            let today = today.unwrap_or_else(|| chrono::Utc::now().date_naive());
            let csv = export_gradebook(&players, campaign, &catalog.taxonomy, today)?;
            match output {
                Some(path) => std::fs::write(&path, csv).map_err(|e| PlatformError::io(path.display(), e)),
                None => write_out(out, &csv),
            }
        }
        Command::Simulate { campaign, player, seed, script } => {
            let catalog = Catalog::from_option(cli.data.as_deref())?;
            let campaign = catalog.campaign(&campaign)?;
            let sim = match script {
                Some(path) => {
                    let actions: Vec<Action> = read_json(&path)?;
                    run_script(campaign, &catalog.library, &player, &actions)?
                }
                None => greedy_script(campaign, &catalog.library, &player, seed)?,
            };
            write_out(out, &format!("{}\n", serde_json::to_string_pretty(&report(&sim)).expect("reports serialise")))
        }
        Command::Validate => {
            let catalog = Catalog::from_option(cli.data.as_deref())?;
            let topics = catalog
                .taxonomy
                .topics
                .iter()
                .filter(|t| catalog.library.templates().iter().any(|tpl| tpl.outcomes.iter().any(|o| o.topic == t.id)))
                .count();
            write_out(
                out,
                &format!(
                    "ok: {} campaigns, {} templates, {}/{} topics covered\n",
                    catalog.campaigns.len(),
                    catalog.library.templates().len(),
                    topics,
                    catalog.taxonomy.topics.len()
                ),
            )
        }
        Command::Roster { config, file, instructor } => {
            let config = config_with_data(config.as_deref(), cli.data)?;
            let mut reader = csv::Reader::from_path(&file).map_err(|e| PlatformError::io(file.display(), e))?;
            let rows: Vec<RosterRow> = reader
                .deserialize()
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| PlatformError::io(file.display(), e))?;
            let state = AppState::open(&config, system_clock())?;
            let mut writer = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| PlatformError::io("roster output", e);
            writer.write_record(["player", "campaign", "role", "expires", "token"]).map_err(csv_err)?;
            for row in &rows {
                state.enroll(row.player.trim(), row.campaign.trim())?;
                let t = state.issue_token(row.player.trim(), Role::Student)?;
                writer.write_record([&t.player, row.campaign.trim(), "student", &t.expires.to_rfc3339(), &t.token]).map_err(csv_err)?;
            }
            if let Some(name) = instructor {
                let t = state.issue_token(&name, Role::Instructor)?;
                writer.write_record([&t.player, "", "instructor", &t.expires.to_rfc3339(), &t.token]).map_err(csv_err)?;
            }
            state.flush()?;
            let bytes = writer.into_inner().map_err(|e| PlatformError::io("roster output", e))?;
            write_out(out, &String::from_utf8(bytes).expect("csv of strings is utf-8"))
        }
    }
}
