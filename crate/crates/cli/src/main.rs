//! `formflow`: command-line front end.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 parse or usage
//! error (including unknown presets and invalid configs), 3 evaluation
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use formflow_core::characteristics::CharacteristicError;
use formflow_core::classification::{classify, enumerate_cycle, ClassificationEntry};
use formflow_core::dsl::{parse_single, DslError, Item, RelationSpec};
use formflow_core::forms::{is_closed, Connection, DifferentialForm, FormError};
use formflow_core::grid::{Axis, GridSpec};
use formflow_core::pipeline::run_characteristics;
use formflow_core::relations::{analyze_relation, commutator_csv, FunctionalRelation, SYMBOLIC_TOL};
use formflow_core::report::to_canonical_json;
use formflow_core::scenarios::em::{em_csv, em_points, run_em, EmScenario};
use formflow_core::scenarios::gas::{classify_instability, gas_csv, gas_point_terms, GasScenario};
use formflow_core::scenarios::thermo::{run_thermo, ThermoScenario};
use formflow_core::scenarios::ScenarioError;
use serde::Serialize;

const THREADS_VAR: &str = "FORMFLOW_THREADS";

#[derive(Parser)]
#[command(name = "formflow", version, about = "Exterior forms, functional relations and characteristics")]
struct Cli {
    /// Sample grid, e.g. `x=-1:1:21,y=0:2:11`.
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Tolerance for identity and closure decisions.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioKind {
    Thermo,
    Gas,
    Em,
}

#[derive(Subcommand)]
enum Command {
    /// Test a `relation` block for identity, or a `form` block for closure.
    Analyze { input: PathBuf },
    /// Integrate a `pde` or `hj` block and check closure on its bundle.
    Characteristics {
        input: PathBuf,
        /// Also write the trajectory CSV here.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run a worked scenario from a preset or a JSON config.
    Scenario {
        #[arg(long, value_enum)]
        scenario: ScenarioKind,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Look up the (p, k, n) table.
    Classify {
        #[arg(long, allow_negative_numbers = true)]
        p: Option<i64>,
        #[arg(long, allow_negative_numbers = true)]
        k: Option<i64>,
        #[arg(long, allow_negative_numbers = true)]
        n: Option<i64>,
        #[arg(long, conflicts_with_all = ["p", "k", "n"])]
        all: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Output(String),
    Usage(String),
    Eval(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Output(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Eval(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Output(m) | Failure::Usage(m) | Failure::Eval(m) => m,
        }
    }
}

impl From<FormError> for Failure {
    fn from(e: FormError) -> Self {
        match e {
            FormError::Eval(_) | FormError::EmptySample(_) => Failure::Eval(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Eval(_) | ScenarioError::Form(_) => Failure::Eval(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<CharacteristicError> for Failure {
    fn from(e: CharacteristicError) -> Self {
        match e {
            CharacteristicError::Eval(_) | CharacteristicError::Form(_) => Failure::Eval(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = thread_pool().and_then(|pool| pool.install(|| run(&cli)));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_VAR) {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{THREADS_VAR} must be a non-negative integer, got `{raw}`")))?;
        // 0 means serial
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(tol) = cli.tol {
        if !(tol > 0.0) {
            return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
        }
    }
    let grid = cli
        .grid
        .as_deref()
        .map(GridSpec::parse)
        .transpose()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let output = match &cli.command {
        Command::Analyze { input } => analyze(cli, input, grid)?,
        Command::Characteristics { input, trajectory } => characteristics(cli, input, trajectory.as_deref())?,
        Command::Scenario { scenario, preset, config } => {
            scenario_cmd(cli, *scenario, preset.as_deref(), config.as_deref(), grid)?
        }
        Command::Classify { p, k, n, all } => classify_cmd(cli, *p, *k, *n, *all)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, output).map_err(|e| Failure::Output(format!("{}: {e}", path.display()))),
        None => {
            print!("{output}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    to_canonical_json(value).map_err(|e| Failure::Eval(e.to_string()))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_input(path: &Path) -> Result<Item, Failure> {
    let text = read(path)?;
    parse_single(&text).map_err(|e: DslError| {
        let (line, col) = e.location(&text);
        Failure::Usage(format!("{}:{line}:{col}: {e}", path.display()))
    })
}

fn check_grid(grid: &GridSpec, coords: &[String]) -> Result<(), Failure> {
    for c in coords {
        match grid.axis(c) {
            None => return Err(Failure::Usage(format!("grid has no axis for `{c}`"))),
            Some(a) if a.count < 2 => return Err(Failure::Usage(format!("grid axis `{c}` needs at least 2 points"))),
            Some(_) => {}
        }
    }
    Ok(())
}

fn default_grid(coords: &[String]) -> GridSpec {
    GridSpec { axes: coords.iter().map(|c| Axis::new(c.clone(), -1.0, 1.0, 11)).collect() }
}

fn analyze(cli: &Cli, input: &Path, grid: Option<GridSpec>) -> Result<String, Failure> {
    match parse_input(input)? {
        Item::Relation(spec) => analyze_relation_block(cli, spec, grid),
        Item::Form(form) => {
            if cli.format == Format::Csv {
                return Err(Failure::Usage("csv output is available for relation blocks".into()));
            }
            let grid = grid.unwrap_or_else(|| default_grid(form.coords()));
            check_grid(&grid, form.coords())?;
            let report = is_closed(&form, &Connection::flat(form.dim()), &grid.points(), cli.tol.unwrap_or(SYMBOLIC_TOL))?;
            json(&report)
        }
        Item::Characteristics(_) => Err(Failure::Usage("pde and hj blocks go to `characteristics`".into())),
    }
}

fn analyze_relation_block(cli: &Cli, spec: RelationSpec, grid: Option<GridSpec>) -> Result<String, Failure> {
    let grid = grid.or(spec.grid.clone()).unwrap_or_else(|| default_grid(&spec.coords));
    check_grid(&grid, &spec.coords)?;
    let tol = cli.tol.or(spec.tol).unwrap_or(SYMBOLIC_TOL);
    let omega: DifferentialForm = spec.omega;
    let mut rel = FunctionalRelation::new(spec.label, omega).with_connection(spec.connection)?;
    if let Some(psi) = spec.psi {
        rel = rel.with_psi(psi);
    }
    let points = grid.points();
    match cli.format {
        Format::Json => json(&analyze_relation(&rel, &points, tol)?),
        Format::Csv => Ok(commutator_csv(&rel, &points)?),
    }
}

fn characteristics(cli: &Cli, input: &Path, trajectory: Option<&Path>) -> Result<String, Failure> {
    let Item::Characteristics(spec) = parse_input(input)? else {
        return Err(Failure::Usage("expected a pde or hj block".into()));
    };
    let run = run_characteristics(&spec)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = trajectory {
        std::fs::write(path, run.to_csv()).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))?;
    }
    match cli.format {
        Format::Json => json(&run),
        Format::Csv => Ok(run.to_csv()),
    }
}

fn config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn scenario_cmd(
    cli: &Cli,
    kind: ScenarioKind,
    preset: Option<&str>,
    config_path: Option<&Path>,
    grid: Option<GridSpec>,
) -> Result<String, Failure> {
    if preset.is_none() && config_path.is_none() {
        return Err(Failure::Usage("give --preset or --config".into()));
    }
    let grid_text = cli.grid.clone();
    match kind {
        ScenarioKind::Thermo => {
            let sc = match config_path {
                Some(p) => config::<ThermoScenario>(p)?,
                None => ThermoScenario::preset(preset.unwrap_or_default())?,
            };
            let grid = match grid {
                Some(g) => g,
                None => sc.grid()?,
            };
            check_grid(&grid, &["T".to_string(), "V".to_string()])?;
            let tol = cli.tol.unwrap_or(1e-10);
            match cli.format {
                Format::Json => json(&run_thermo(&sc, &grid, tol)?),
                Format::Csv => {
                    let rel = FunctionalRelation::new("dE + p dV", sc.first_law_form());
                    Ok(commutator_csv(&rel, &grid.points())?)
                }
            }
        }
        ScenarioKind::Gas => {
            let mut sc = match config_path {
                Some(p) => config::<GasScenario>(p)?,
                None => GasScenario::preset(preset.unwrap_or_default())?,
            };
            if let Some(g) = grid_text {
                sc.grid = g;
            }
            let tol = cli.tol.unwrap_or(1e-9);
            match cli.format {
                Format::Json => json(&classify_instability(&sc, tol)?),
                Format::Csv => {
                    let (points, rows) = gas_point_terms(&sc, tol)?;
                    Ok(gas_csv(&points, &rows))
                }
            }
        }
        ScenarioKind::Em => {
            let mut sc = match config_path {
                Some(p) => config::<EmScenario>(p)?,
                None => EmScenario::preset(preset.unwrap_or_default())?,
            };
            if let Some(g) = grid_text {
                sc.grid = g;
            }
            let tol = cli.tol.unwrap_or(1e-9);
            match cli.format {
                Format::Json => json(&run_em(&sc, tol)?),
                Format::Csv => {
                    let (points, rows) = em_points(&sc, tol)?;
                    Ok(em_csv(&points, &rows))
                }
            }
        }
    }
}

fn entry_csv(entries: &[ClassificationEntry]) -> String {
    let mut out = String::from("p,k,n,interaction,particleLabel,pseudostructureDim,materialParticle,metricStructure,uncertain,sources\n");
    for e in entries {
        let interaction = serde_json::to_value(e.interaction).ok().and_then(|v| v.as_str().map(String::from));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            e.p,
            e.k,
            e.n,
            interaction.unwrap_or_default(),
            e.particle_label,
            e.pseudostructure_dim,
            e.material_particle,
            e.metric_structure,
            e.uncertain,
            e.sources.join(";"),
        ));
    }
    out
}

fn classify_cmd(cli: &Cli, p: Option<i64>, k: Option<i64>, n: Option<i64>, all: bool) -> Result<String, Failure> {
    if all {
        let entries = enumerate_cycle();
        return match cli.format {
            Format::Json => json(&entries),
            Format::Csv => Ok(entry_csv(&entries)),
        };
    }
    let (Some(p), Some(k)) = (p, k) else {
        return Err(Failure::Usage("classify needs --p and --k, or --all".into()));
    };
    let result = classify(p, k, n);
    match cli.format {
        Format::Json => json(&result),
        Format::Csv => Ok(entry_csv(result.entry().map(std::slice::from_ref).unwrap_or_default())),
    }
}
