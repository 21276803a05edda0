use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;

use ntulp::cuts::write_cut_log;
use ntulp::game::{parse_rational, to_f64};
use ntulp::instances::{
    gen_3dm_gadget, gen_cyclic, gen_empty_core_example, gen_grid_city, gen_random_game, gen_transit_game, load_game,
    motivating_scenario, random_3dm_instance, save_game, write_scenario, GridCitySpec, RandomGameSpec,
};
use ntulp::membership::{least_objection, write_records, Budget, CoalitionPool, ObjectionKind, ObjectionMode};
use ntulp::optimizer::{solve_over_core, Objective, RunConfig, RunStatus, SolutionJson, Trajectory};
use ntulp::oracle::{is_blocked_exact, write_verdicts, VerdictRecord};
use ntulp::Game;

use crate::args::*;
use crate::charts::{line_chart, quantile_curve, Series};
use crate::error::{CliError, CliResult, EXIT_FAILURE, EXIT_NUMERICAL};
use crate::manifest::{Manifest, MANIFEST};

/// What a command produced, relative to its output directory.
#[derive(Default)]
pub struct Outcome {
    pub outputs: Vec<String>,
    pub iteration_seconds: Vec<f64>,
    pub code: u8,
}

/// A subcommand whose runs are recorded in a manifest and can be repeated.
pub trait Task: Layered + Serialize + DeserializeOwned {
    const NAME: &'static str;
    fn defaults() -> Self;
    fn out_dir(&self) -> Option<&Path>;
    fn set_out_dir(&mut self, dir: PathBuf);
    /// Makes input paths absolute so that the manifest works from anywhere.
    fn absolutize(&mut self) -> CliResult<()>;
    fn seed(&self) -> Option<u64> {
        None
    }
    fn run(&self) -> CliResult<Outcome>;
}

pub fn execute(command: Command) -> CliResult<u8> {
    match command {
        Command::Gen(a) => perform(with_config(a)?),
        Command::Solve(a) => perform(with_config(a)?),
        Command::Membership(a) => perform(with_config(a)?),
        Command::Oracle(a) => perform(with_config(a)?),
        Command::Report(a) => perform(with_config(a)?),
        Command::Rerun(a) => rerun(&a),
    }
}

fn with_config<S: Args + Layered + DeserializeOwned>(a: WithConfig<S>) -> CliResult<S> {
    let Some(path) = a.config else { return Ok(a.settings) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let base: S = serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(a.settings.over(base))
}

fn perform<T: Task>(settings: T) -> CliResult<u8> {
    let mut s = settings.over(T::defaults());
    s.absolutize()?;
    let started = Instant::now();
    let outcome = s.run()?;
    if let Some(dir) = s.out_dir() {
        Manifest {
            command: T::NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            library_version: ntulp::VERSION.into(),
            seed: s.seed(),
            settings: serde_json::to_value(&s)?,
            wall_time_s: started.elapsed().as_secs_f64(),
            iteration_seconds: outcome.iteration_seconds,
            outputs: outcome.outputs,
        }
        .write(dir)?;
    }
    Ok(outcome.code)
}

fn get<T: Clone>(value: &Option<T>, flag: &str) -> CliResult<T> {
    value.clone().ok_or_else(|| CliError::usage(format!("missing required setting --{flag}")))
}

fn absolute(path: &mut Option<PathBuf>) -> CliResult<()> {
    if let Some(p) = path {
        *p = fs::canonicalize(&*p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn prepare_out_dir(dir: &Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = get(dir, "out-dir")?;
    fs::create_dir_all(&dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn read_game(path: &Option<PathBuf>) -> CliResult<Game> {
    let path = get(path, "game")?;
    load_game(&path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<ntulp::Rational>> {
    text.split(',')
        .map(|t| parse_rational(t).map_err(|e| CliError::usage(format!("--{what}: {e}"))))
        .collect()
}

fn parse_utilities(text: &Option<String>, game: &Game) -> CliResult<Vec<f64>> {
    let u: Vec<f64> = parse_list(&get(text, "u")?, "u")?.iter().map(to_f64).collect();
    if u.len() != game.num_players() {
        return Err(CliError::usage(format!("--u has {} entries but the game has {} players", u.len(), game.num_players())));
    }
    Ok(u)
}

fn objection_mode(mode: Option<ModeArg>, floor: Option<f64>) -> CliResult<ObjectionMode> {
    let floor = get(&floor, "floor")?;
    if !(floor >= 0.0 && floor.is_finite()) {
        return Err(CliError::usage(format!("--floor must be a nonnegative number, got {floor}")));
    }
    let kind = match get(&mode, "mode")? {
        ModeArg::Additive => ObjectionKind::Additive,
        ModeArg::Multiplicative => ObjectionKind::Multiplicative,
    };
    Ok(ObjectionMode { kind, floor })
}

fn budget(node_limit: Option<u64>, time_limit: Option<f64>) -> CliResult<Budget> {
    let secs = get(&time_limit, "time-limit")?;
    if !(secs > 0.0 && secs.is_finite()) {
        return Err(CliError::usage(format!("--time-limit must be positive, got {secs}")));
    }
    Ok(Budget { time: Duration::from_secs_f64(secs), node_limit })
}

impl Task for GenSettings {
    const NAME: &'static str = "gen";

    fn defaults() -> Self {
        GenSettings::defaults()
    }

    fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = Some(dir);
    }

    fn absolutize(&mut self) -> CliResult<()> {
        Ok(())
    }

    fn seed(&self) -> Option<u64> {
        match self.family {
            Some(Family::ThreeDm | Family::GridCity | Family::Random) => self.seed,
            _ => None,
        }
    }

    fn run(&self) -> CliResult<Outcome> {
        let family = get(&self.family, "family")?;
        let out = prepare_out_dir(&self.out_dir)?;
        let seed = get(&self.seed, "seed")?;
        let mut outputs = Vec::new();
        let game = match family {
            Family::EmptyCore => gen_empty_core_example(),
            Family::Cyclic => gen_cyclic(get(&self.players, "players")?, &parse_list(&get(&self.moments, "moments")?, "moments")?)?,
            Family::ThreeDm => {
                let n = get(&self.n, "n")?;
                if n < 2 {
                    return Err(CliError::usage("--n must be at least 2"));
                }
                let instance = random_3dm_instance(n, get(&self.extra, "extra")?, !get(&self.unmatched, "unmatched")?, seed);
                let gadget = gen_3dm_gadget(&instance)?;
                // Triples after duplication, indexed like the edge players.
                fs::write(out.join("instance.json"), serde_json::to_string_pretty(&gadget.instance)? + "\n")?;
                outputs.push("instance.json".into());
                gadget.game
            }
            Family::TransitMotivating | Family::GridCity => {
                let scenario = if family == Family::GridCity {
                    gen_grid_city(GridCitySpec {
                        seed,
                        width: get(&self.width, "width")?,
                        height: get(&self.height, "height")?,
                        lines: get(&self.lines, "lines")?,
                        riders: get(&self.riders, "riders")?,
                    })?
                } else {
                    motivating_scenario()
                };
                write_scenario(&scenario, &out)?;
                outputs.extend(["nodes.csv", "lines.csv", "riders.csv"].map(String::from));
                gen_transit_game(&scenario)?
            }
            Family::Random => {
                let spec = RandomGameSpec {
                    players: get(&self.players, "players")?,
                    goods: get(&self.goods, "goods")?,
                    resources: get(&self.resources, "resources")?,
                    nonnegative_valuations: !get(&self.signed, "signed")?,
                };
                gen_random_game(spec, seed)?
            }
        };
        save_game(&game, out.join("game.json"))?;
        outputs.push("game.json".into());
        println!(
            "{} players, {} goods, {} resources -> {}",
            game.num_players(),
            game.num_goods(),
            game.num_resources(),
            out.join("game.json").display()
        );
        Ok(Outcome { outputs, ..Outcome::default() })
    }
}

impl Task for SolveSettings {
    const NAME: &'static str = "solve";

    fn defaults() -> Self {
        SolveSettings::defaults()
    }

    fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = Some(dir);
    }

    fn absolutize(&mut self) -> CliResult<()> {
        absolute(&mut self.game)
    }

    fn run(&self) -> CliResult<Outcome> {
        let game = read_game(&self.game)?;
        let out = prepare_out_dir(&self.out_dir)?;
        let delta = get(&self.delta, "delta")?;
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(CliError::usage(format!("--delta must be nonnegative, got {delta}")));
        }
        let iters = get(&self.iters, "iters")?;
        if iters == 0 {
            return Err(CliError::usage("--iters must be positive"));
        }
        let config = RunConfig {
            objective: match get(&self.objective, "objective")? {
                ObjectiveArg::Utilitarian => Objective::Utilitarian,
                ObjectiveArg::Maximin => Objective::maximin(),
            },
            delta,
            max_iterations: iters,
            membership_budget: budget(self.node_limit, self.time_limit)?,
            mode: objection_mode(self.mode, self.floor)?,
            individual_rationality: !get(&self.no_ir, "no-ir")?,
        };
        let outcome = solve_over_core(&game, &config)?;
        outcome.trajectory.write_csv(&out.join("trajectory.csv"))?;
        write_cut_log(&out.join("cuts.csv"), &outcome.cut_log)?;
        let solution = outcome.to_json(&config);
        fs::write(out.join("solution.json"), serde_json::to_string_pretty(&solution)? + "\n")?;
        let truncated = outcome.trajectory.records.iter().filter(|r| r.timed_out).count();
        println!(
            "{:?} after {} iterations: epsilon {:.6}, utilitarian {:.6}, maximin {:.6}, {} cuts{}",
            outcome.status,
            solution.iterations,
            solution.epsilon,
            solution.utilitarian,
            solution.maximin,
            outcome.cuts.len(),
            if truncated > 0 { format!(", {truncated} truncated membership searches") } else { String::new() }
        );
        Ok(Outcome {
            outputs: ["trajectory.csv", "cuts.csv", "solution.json"].map(String::from).to_vec(),
            iteration_seconds: outcome.trajectory.wall_times.clone(),
            code: if outcome.status == RunStatus::NumericalBreakdown { EXIT_NUMERICAL } else { 0 },
        })
    }
}

impl Task for MembershipSettings {
    const NAME: &'static str = "membership";

    fn defaults() -> Self {
        MembershipSettings::defaults()
    }

    fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = Some(dir);
    }

    fn absolutize(&mut self) -> CliResult<()> {
        absolute(&mut self.game)
    }

    fn run(&self) -> CliResult<Outcome> {
        let game = read_game(&self.game)?;
        let u = parse_utilities(&self.u, &game)?;
        let mode = objection_mode(self.mode, self.floor)?;
        let result = least_objection(&game, &u, mode, &CoalitionPool::new(), budget(self.node_limit, self.time_limit)?)?;
        let verdict = if result.in_core() {
            "in the core".to_string()
        } else {
            format!("blocked by {}", result.objection.coalition)
        };
        println!(
            "{verdict}: epsilon {:.6} ({} objection, coalition {}), {} nodes{}",
            result.epsilon(),
            mode.kind.name(),
            result.objection.coalition,
            result.nodes,
            if result.timed_out { ", budget exhausted" } else { "" }
        );
        let mut outputs = Vec::new();
        if let Some(dir) = &self.out_dir {
            let dir = prepare_out_dir(&Some(dir.clone()))?;
            write_records(&dir.join("membership.csv"), &[result.record()])?;
            outputs.push("membership.csv".into());
        }
        Ok(Outcome { outputs, ..Outcome::default() })
    }
}

impl Task for OracleSettings {
    const NAME: &'static str = "oracle";

    fn defaults() -> Self {
        OracleSettings::default()
    }

    fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = Some(dir);
    }

    fn absolutize(&mut self) -> CliResult<()> {
        absolute(&mut self.game)
    }

    fn run(&self) -> CliResult<Outcome> {
        let game = read_game(&self.game)?;
        let u = parse_utilities(&self.u, &game)?;
        let verdict = is_blocked_exact(&game, &u)?;
        match (&verdict.best, verdict.blocked) {
            (Some(best), true) => println!(
                "blocked by {} (epsilon {:.6}, {} coalitions checked)",
                best.coalition, best.epsilon, verdict.coalitions_checked
            ),
            _ => println!("not blocked ({} coalitions checked)", verdict.coalitions_checked),
        }
        let mut outputs = Vec::new();
        if let Some(dir) = &self.out_dir {
            let dir = prepare_out_dir(&Some(dir.clone()))?;
            write_verdicts(&dir.join("verdict.csv"), &[VerdictRecord::from(&verdict)])?;
            outputs.push("verdict.csv".into());
        }
        Ok(Outcome { outputs, ..Outcome::default() })
    }
}

/// Series name for an input file: its stem, or its directory's name when
/// the stem is one of the standard output names.
fn series_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if matches!(stem.as_str(), "trajectory" | "solution") {
        if let Some(dir) = path.parent().and_then(|p| p.file_name()) {
            return dir.to_string_lossy().into_owned();
        }
    }
    stem
}

impl Task for ReportSettings {
    const NAME: &'static str = "report";

    fn defaults() -> Self {
        ReportSettings::default()
    }

    fn out_dir(&self) -> Option<&Path> {
        self.out_dir.as_deref()
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        self.out_dir = Some(dir);
    }

    fn absolutize(&mut self) -> CliResult<()> {
        for list in [&mut self.trajectory, &mut self.solution].into_iter().flatten() {
            for p in list.iter_mut() {
                let mut one = Some(p.clone());
                absolute(&mut one)?;
                *p = one.unwrap();
            }
        }
        Ok(())
    }

    fn run(&self) -> CliResult<Outcome> {
        let trajectories = get(&self.trajectory, "trajectory")?;
        if trajectories.is_empty() {
            return Err(CliError::usage("--trajectory needs at least one file"));
        }
        let out = prepare_out_dir(&self.out_dir)?;
        let mut runs = Vec::new();
        for path in &trajectories {
            let records = Trajectory::read_csv(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            runs.push((series_name(path), records));
        }
        let mut outputs = Vec::new();
        let charts: [(&str, &str, &str, fn(&ntulp::optimizer::IterationRecord) -> f64); 3] = [
            ("utilitarian.svg", "Utilitarian welfare of the master solution", "utilitarian welfare", |r| r.utilitarian),
            ("maximin.svg", "Maximin welfare of the master solution", "maximin welfare", |r| r.maximin),
            ("epsilon.svg", "Least objection per iteration", "epsilon", |r| r.epsilon),
        ];
        for (file, title, y_label, field) in charts {
            let series: Vec<Series> = runs
                .iter()
                .map(|(name, records)| Series {
                    name: name.clone(),
                    points: records.iter().map(|r| (r.iteration as f64, field(r))).collect(),
                })
                .collect();
            fs::write(out.join(file), line_chart(title, "iteration", y_label, &series))?;
            outputs.push(file.to_string());
        }
        if let Some(solutions) = &self.solution {
            let mut series = Vec::new();
            for path in solutions {
                let text = fs::read_to_string(path)?;
                let solution: SolutionJson =
                    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                series.push(Series { name: series_name(path), points: quantile_curve(&solution.utilities) });
            }
            fs::write(out.join("utilities.svg"), line_chart("Distribution of player utilities", "quantile", "utility", &series))?;
            outputs.push("utilities.svg".into());
        }
        println!("wrote {} to {}", outputs.join(", "), out.display());
        Ok(Outcome { outputs, ..Outcome::default() })
    }
}

fn replay<T: Task>(manifest: &Manifest, out_dir: &Path) -> CliResult<u8> {
    let mut settings: T = serde_json::from_value(manifest.settings.clone())
        .map_err(|e| CliError::usage(format!("manifest settings: {e}")))?;
    settings.set_out_dir(out_dir.to_path_buf());
    perform(settings)
}

fn rerun(args: &RerunArgs) -> CliResult<u8> {
    let manifest = Manifest::read(&args.manifest)?;
    let source = args.manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    fs::create_dir_all(&args.out_dir)?;
    let same = |a: &Path, b: &Path| fs::canonicalize(a).ok().zip(fs::canonicalize(b).ok()).is_some_and(|(a, b)| a == b);
    if same(&source, &args.out_dir) {
        return Err(CliError::usage("--out-dir must differ from the manifest's directory"));
    }
    let code = match manifest.command.as_str() {
        "gen" => replay::<GenSettings>(&manifest, &args.out_dir)?,
        "solve" => replay::<SolveSettings>(&manifest, &args.out_dir)?,
        "membership" => replay::<MembershipSettings>(&manifest, &args.out_dir)?,
        "oracle" => replay::<OracleSettings>(&manifest, &args.out_dir)?,
        "report" => replay::<ReportSettings>(&manifest, &args.out_dir)?,
        other => return Err(CliError::usage(format!("unknown command {other:?} in manifest"))),
    };
    let differing: Vec<&str> = manifest
        .outputs
        .iter()
        .filter(|name| name.as_str() != MANIFEST)
        .filter(|name| match (fs::read(source.join(name)), fs::read(args.out_dir.join(name))) {
            (Ok(a), Ok(b)) => a != b,
            _ => true,
        })
        .map(String::as_str)
        .collect();
    if differing.is_empty() {
        println!("reproduced {} outputs byte for byte", manifest.outputs.len());
        Ok(code)
    } else {
        Err(CliError { code: EXIT_FAILURE, message: format!("outputs differ from the original run: {}", differing.join(", ")) })
    }
}
