use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "ntulp", version, about = "Core membership and welfare optimization for NTU linear production games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a game instance.
    Gen(WithConfig<GenSettings>),
    /// Optimize a welfare objective over the core.
    Solve(WithConfig<SolveSettings>),
    /// Least objection to a utility vector, by branch and bound.
    Membership(WithConfig<MembershipSettings>),
    /// Exhaustive blocking check for small games.
    Oracle(WithConfig<OracleSettings>),
    /// Plot trajectories and utility distributions as SVG.
    Report(WithConfig<ReportSettings>),
    /// Repeat a recorded run and compare its outputs.
    Rerun(RerunArgs),
}

/// Settings of one subcommand plus an optional JSON file with the same
/// keys. Flags given on the command line win.
#[derive(Debug, Args)]
pub struct WithConfig<S: Args> {
    #[command(flatten)]
    pub settings: S,
    /// JSON file with default settings for this command.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Field-wise fallback: keep our value where set, otherwise take `base`'s.
pub trait Layered: Sized {
    fn over(self, base: Self) -> Self;
}

macro_rules! layered {
    ($t:ident { $($f:ident),* $(,)? }) => {
        impl Layered for $t {
            fn over(self, base: Self) -> Self {
                Self { $($f: self.$f.or(base.$f)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    EmptyCore,
    Cyclic,
    #[value(name = "3dm")]
    #[serde(rename = "3dm")]
    ThreeDm,
    TransitMotivating,
    GridCity,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveArg {
    Utilitarian,
    Maximin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSettings {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Players (random, cyclic).
    #[arg(long)]
    pub players: Option<usize>,
    /// Goods (random).
    #[arg(long)]
    pub goods: Option<usize>,
    /// Resources (random).
    #[arg(long)]
    pub resources: Option<usize>,
    /// Allow negative valuations (random).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub signed: Option<bool>,
    /// Comma-separated moment parameters, increasing and above one (cyclic).
    #[arg(long)]
    pub moments: Option<String>,
    /// Nodes per part (3dm).
    #[arg(long)]
    pub n: Option<usize>,
    /// Random triples beyond the planted ones (3dm).
    #[arg(long)]
    pub extra: Option<usize>,
    /// Leave one node uncovered so no perfect matching exists (3dm).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unmatched: Option<bool>,
    /// Street nodes along x (grid-city).
    #[arg(long)]
    pub width: Option<usize>,
    /// Street nodes along y (grid-city).
    #[arg(long)]
    pub height: Option<usize>,
    /// Bus lines (grid-city).
    #[arg(long)]
    pub lines: Option<usize>,
    /// Riders (grid-city).
    #[arg(long)]
    pub riders: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

layered!(GenSettings {
    family, seed, players, goods, resources, signed, moments, n, extra, unmatched, width, height, lines, riders,
    out_dir,
});

impl GenSettings {
    pub fn defaults() -> Self {
        Self {
            family: None,
            seed: Some(0),
            players: Some(4),
            goods: Some(3),
            resources: Some(2),
            signed: Some(false),
            moments: Some("2,3,4,5".into()),
            n: Some(2),
            extra: Some(2),
            unmatched: Some(false),
            width: Some(12),
            height: Some(12),
            lines: Some(12),
            riders: Some(60),
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSettings {
    /// Game JSON file.
    #[arg(long)]
    pub game: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    /// Stop once no coalition objects by more than this.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Smallest gain that counts as an objection.
    #[arg(long)]
    pub floor: Option<f64>,
    /// Drop the individual rationality bounds.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_ir: Option<bool>,
    /// Branch-and-bound nodes per membership search.
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Seconds per membership search.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

layered!(SolveSettings { game, objective, delta, iters, mode, floor, no_ir, node_limit, time_limit, out_dir });

impl SolveSettings {
    pub fn defaults() -> Self {
        Self {
            game: None,
            objective: Some(ObjectiveArg::Utilitarian),
            delta: Some(1e-3),
            iters: Some(100),
            mode: Some(ModeArg::Additive),
            floor: Some(1e-3),
            no_ir: Some(false),
            node_limit: None,
            time_limit: Some(300.0),
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembershipSettings {
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Comma-separated utilities, decimals or fractions.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub node_limit: Option<u64>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Also write membership.csv and a manifest here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

layered!(MembershipSettings { game, u, mode, floor, node_limit, time_limit, out_dir });

impl MembershipSettings {
    pub fn defaults() -> Self {
        Self {
            game: None,
            u: None,
            mode: Some(ModeArg::Additive),
            floor: Some(1e-3),
            node_limit: None,
            time_limit: Some(300.0),
            out_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    #[arg(long)]
    pub game: Option<PathBuf>,
    /// Comma-separated utilities, decimals or fractions.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Also write verdict.csv and a manifest here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

layered!(OracleSettings { game, u, out_dir });

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSettings {
    /// Trajectory CSV files, one series each.
    #[arg(long, num_args = 1..)]
    pub trajectory: Option<Vec<PathBuf>>,
    /// Solution JSON files for the utility distribution plot.
    #[arg(long, num_args = 1..)]
    pub solution: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

layered!(ReportSettings { trajectory, solution, out_dir });
