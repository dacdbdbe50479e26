use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pmugame::equilibrium::{
    exp3_selfplay, solve_minimax, trace_csv, EquilibriumResult, MixedStrategy, SelfPlayConfig,
    SelfPlayResult, StrategyDocument,
};
use pmugame::error::ScenarioError;
use pmugame::evaluation::{build_report, DetectionReport};
use pmugame::game::{AttackModel, Bias, Norm, PayoffMatrix};
use pmugame::observability::{observability, optimal_placement, PlacementDocument};
use pmugame::scenario::{DefenseSource, Scenario, ScenarioConfig};
use pmugame::Grid;

#[derive(Parser)]
#[command(
    name = "pmugame",
    version,
    about = "PMU placement and FDIA deployment game"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum-cost PMU placement with full observability.
    Place(Common),
    /// Export the attacker payoff matrix.
    Game(Common),
    /// Solve the game and report detection rates.
    Solve(SolveArgs),
    /// Detection rates of given strategies (LP equilibrium by default).
    Evaluate(EvaluateArgs),
    /// Tables for both the plain and the ZIB scenario.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Grid description (JSON).
    #[arg(long)]
    grid: PathBuf,
    /// Use zero-injection buses when placing PMUs.
    #[arg(long)]
    zib: bool,
    #[command(flatten)]
    model: ModelArgs,
    /// Output directory.
    #[arg(long, env = "PMUGAME_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = BiasArg::Relative)]
    bias: BiasArg,
    #[arg(long, default_value_t = AttackModel::default().epsilon_theta)]
    eps_theta: f64,
    #[arg(long, default_value_t = AttackModel::default().epsilon_flow)]
    eps_flow: f64,
    #[arg(long, value_enum, default_value_t = NormArg::L2)]
    norm: NormArg,
    /// Placement the defense candidates are derived from.
    #[arg(long, value_enum, default_value_t = SourceArg::Adjacency)]
    defense_source: SourceArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum BiasArg {
    Additive,
    Relative,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    L2,
    Linf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Adjacency,
    Scenario,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Lp,
    Exp3,
    Both,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Solver::Both)]
    solver: Solver,
    /// EXP3 rounds.
    #[arg(long, default_value_t = 200_000, value_parser = clap::value_parser!(u64).range(1..))]
    iters: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fail with exit code 4 when EXP3 exploitability exceeds the bound.
    #[arg(long)]
    strict: bool,
    /// Bound on EXP3 exploitability as a fraction of the game value.
    #[arg(long, default_value_t = 0.10)]
    max_exploitability: f64,
}

#[derive(Args, Clone)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// Attacker strategy document.
    #[arg(long, requires = "defender")]
    attacker: Option<PathBuf>,
    /// Defender strategy document.
    #[arg(long, requires = "attacker")]
    defender: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ReportArgs {
    #[arg(long)]
    grid: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, env = "PMUGAME_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

enum Failure {
    Input(String),
    Solver(String),
    Strict(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Strict(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Solver(m) | Failure::Strict(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Equilibrium(_) => Failure::Solver(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn solver<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Solver(e.to_string())
}

impl ModelArgs {
    fn model(&self) -> Result<AttackModel, Failure> {
        let model = AttackModel {
            bias: match self.bias {
                BiasArg::Additive => Bias::Additive,
                BiasArg::Relative => Bias::Relative,
            },
            epsilon_theta: self.eps_theta,
            epsilon_flow: self.eps_flow,
            norm: match self.norm {
                NormArg::L1 => Norm::L1,
                NormArg::L2 => Norm::L2,
                NormArg::Linf => Norm::Linf,
            },
        };
        model.validate().map_err(input)?;
        Ok(model)
    }

    fn config(&self, use_zib: bool) -> Result<ScenarioConfig, Failure> {
        Ok(ScenarioConfig {
            use_zib,
            model: self.model()?,
            defense_source: match self.defense_source {
                SourceArg::Adjacency => DefenseSource::Adjacency,
                SourceArg::Scenario => DefenseSource::Scenario,
            },
        })
    }
}

impl Common {
    fn grid(&self) -> Result<Grid, Failure> {
        Grid::load(&self.grid).map_err(input)
    }

    fn scenario(&self) -> Result<Scenario, Failure> {
        let config = self.model.config(self.zib)?;
        Ok(Scenario::build(self.grid()?, config)?)
    }
}

/// Files are collected first and written only after every step succeeded.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: &Path) -> Outputs {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("serializable document");
        text.push('\n');
        self.add(name, text);
    }

    fn write(self) -> Result<(), Failure> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| Failure::Input(format!("{}: {e}", self.dir.display())))?;
        for (name, contents) in self.files {
            let path = self.dir.join(&name);
            fs::write(&path, contents)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Place(args) => place(&args),
        Command::Game(args) => game(&args),
        Command::Solve(args) => solve(&args),
        Command::Evaluate(args) => evaluate(&args),
        Command::Report(args) => report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn place(args: &Common) -> Result<(), Failure> {
    let grid = args.grid()?;
    let placement = optimal_placement(&grid, args.zib).map_err(input)?;
    let obs = observability(&grid, &placement, args.zib);
    let doc = PlacementDocument::new(&grid, &placement, args.zib);
    println!("PMU buses: {:?}", doc.pmu_buses);
    println!("cost: {}", doc.cost);
    println!(
        "observable buses: {}/{} ({})",
        obs.observed_count(),
        obs.len(),
        if obs.is_full() { "full" } else { "partial" }
    );
    let mut out = Outputs::new(&args.out_dir);
    out.add_json("placement.json", &doc);
    out.write()
}

fn game(args: &Common) -> Result<(), Failure> {
    let s = args.scenario()?;
    let m = &s.matrix;
    println!(
        "{} attacks x {} defenses, scenario {}",
        m.rows(),
        m.cols(),
        s.label()
    );
    let mut out = Outputs::new(&args.out_dir);
    out.add_json(
        "placement.json",
        &PlacementDocument::new(&s.grid, &s.placement, args.zib),
    );
    out.add("payoff.csv", m.to_csv());
    out.write()
}

fn attack_labels(m: &PayoffMatrix) -> Vec<String> {
    m.attacks().iter().map(|a| a.to_string()).collect()
}

fn defense_labels(m: &PayoffMatrix) -> Vec<String> {
    m.defenses().iter().map(|d| d.to_string()).collect()
}

struct Solution {
    name: &'static str,
    attacker: MixedStrategy,
    defender: MixedStrategy,
    value: f64,
    exploitability: f64,
    iterations: Option<u64>,
    seed: Option<u64>,
}

impl Solution {
    fn from_lp(r: &EquilibriumResult) -> Solution {
        Solution {
            name: "lp",
            attacker: r.attacker.clone(),
            defender: r.defender.clone(),
            value: r.value,
            exploitability: r.gap,
            iterations: None,
            seed: None,
        }
    }

    fn from_exp3(r: &SelfPlayResult) -> Solution {
        Solution {
            name: "exp3",
            attacker: r.attacker.clone(),
            defender: r.defender.clone(),
            value: r.value,
            exploitability: r.exploitability,
            iterations: Some(r.iterations),
            seed: Some(r.seed),
        }
    }

    fn documents(&self, m: &PayoffMatrix) -> (StrategyDocument, StrategyDocument) {
        let doc = |actions: Vec<String>, s: &MixedStrategy| StrategyDocument {
            actions,
            probabilities: s.probabilities().to_vec(),
            value: self.value,
            exploitability: self.exploitability,
            iterations: self.iterations,
            seed: self.seed,
        };
        (
            doc(attack_labels(m), &self.attacker),
            doc(defense_labels(m), &self.defender),
        )
    }
}

fn side_by_side(m: &PayoffMatrix, solutions: &[Solution]) -> String {
    let mut out = String::new();
    let header: String = solutions
        .iter()
        .map(|s| format!("{:>10}", s.name.to_uppercase()))
        .collect();
    let _ = writeln!(out, "{:<28}{header}", "Attacker action");
    for (i, label) in attack_labels(m).iter().enumerate() {
        if solutions.iter().all(|s| s.attacker.get(i) < 5e-4) {
            continue;
        }
        let cells: String = solutions
            .iter()
            .map(|s| format!("{:>10.4}", s.attacker.get(i)))
            .collect();
        let _ = writeln!(out, "{label:<28}{cells}");
    }
    let _ = writeln!(out, "{:<28}{header}", "Defender action");
    for (j, d) in m.defenses().iter().enumerate() {
        let cells: String = solutions
            .iter()
            .map(|s| format!("{:>10.4}", s.defender.get(j)))
            .collect();
        let _ = writeln!(out, "{:<28}{cells}", format!("Bus {d}"));
    }
    out
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    if !(args.max_exploitability.is_finite() && args.max_exploitability >= 0.0) {
        return Err(Failure::Input(format!(
            "invalid --max-exploitability {}",
            args.max_exploitability
        )));
    }
    let s = args.common.scenario()?;
    let m = &s.matrix;
    let lp = solve_minimax(m.values()).map_err(solver)?;
    let mut out = Outputs::new(&args.common.out_dir);
    let mut solutions = Vec::new();
    if args.solver != Solver::Exp3 {
        solutions.push(Solution::from_lp(&lp));
    }
    let mut exp3_ratio = None;
    if args.solver != Solver::Lp {
        let r = exp3_selfplay(m.values(), &SelfPlayConfig::new(args.iters, args.seed))
            .map_err(solver)?;
        out.add("exp3_trace.csv", trace_csv(&r.trace));
        exp3_ratio = Some(r.exploitability / lp.value.abs().max(f64::MIN_POSITIVE));
        solutions.push(Solution::from_exp3(&r));
    }

    let mut reports = Vec::new();
    for sol in &solutions {
        let (a, d) = sol.documents(m);
        out.add_json(&format!("{}_attacker.json", sol.name), &a);
        out.add_json(&format!("{}_defender.json", sol.name), &d);
        reports.push(
            build_report(
                s.label(),
                sol.name,
                &s.placement,
                m,
                &sol.attacker,
                &sol.defender,
            )
            .map_err(input)?,
        );
    }

    print!("{}", side_by_side(m, &solutions));
    println!("LP game value: {:.6} (gap {:.2e})", lp.value, lp.gap);
    if let Some(ratio) = exp3_ratio {
        println!(
            "EXP3 exploitability: {:.4}% of the game value",
            ratio * 100.0
        );
    }
    let primary = &reports[0];
    println!(
        "detection rate: {:.2}% (naive {:.2}%, no defense {:.2}%)",
        primary.detection_rate * 100.0,
        primary.naive_rate * 100.0,
        primary.no_defense_rate * 100.0
    );
    add_reports(&mut out, &reports);
    out.write()?;

    if args.strict {
        if let Some(ratio) = exp3_ratio {
            if ratio > args.max_exploitability {
                return Err(Failure::Strict(format!(
                    "EXP3 exploitability {:.4} of the game value exceeds {}",
                    ratio, args.max_exploitability
                )));
            }
        }
    }
    Ok(())
}

fn add_reports(out: &mut Outputs, reports: &[DetectionReport]) {
    out.add_json("report.json", &reports);
    out.add(
        "report.txt",
        reports
            .iter()
            .map(|r| r.render())
            .collect::<Vec<_>>()
            .join("\n"),
    );
    out.add("rates.csv", reports[0].rates_csv());
}

fn read_strategy(path: &Path, expected: &[String]) -> Result<MixedStrategy, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let doc: StrategyDocument = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    if doc.actions != expected {
        return Err(Failure::Input(format!(
            "{}: actions do not match the game",
            path.display()
        )));
    }
    doc.to_strategy().map_err(input)
}

fn evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let s = args.common.scenario()?;
    let m = &s.matrix;
    let (name, attacker, defender) = match (&args.attacker, &args.defender) {
        (Some(a), Some(d)) => (
            "given",
            read_strategy(a, &attack_labels(m))?,
            read_strategy(d, &defense_labels(m))?,
        ),
        _ => {
            let lp = solve_minimax(m.values()).map_err(solver)?;
            ("lp", lp.attacker, lp.defender)
        }
    };
    let r = build_report(s.label(), name, &s.placement, m, &attacker, &defender).map_err(input)?;
    print!("{}", r.render());
    let mut out = Outputs::new(&args.common.out_dir);
    add_reports(&mut out, std::slice::from_ref(&r));
    out.write()
}

fn report(args: &ReportArgs) -> Result<(), Failure> {
    let grid = Grid::load(&args.grid).map_err(input)?;
    let mut reports = Vec::new();
    for zib in [false, true] {
        let s = Scenario::build(grid.clone(), args.model.config(zib)?)?;
        let lp = solve_minimax(s.matrix.values()).map_err(solver)?;
        reports.push(
            build_report(
                s.label(),
                "lp",
                &s.placement,
                &s.matrix,
                &lp.attacker,
                &lp.defender,
            )
            .map_err(input)?,
        );
    }
    for r in &reports {
        println!("{}", r.render());
    }
    let mut out = Outputs::new(&args.out_dir);
    add_reports(&mut out, &reports);
    out.write()
}
