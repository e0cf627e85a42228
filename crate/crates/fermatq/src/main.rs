//! Command-line front end: level predictions, irreducibility bounds, and
//! the full elimination pipeline over the bundled or user-supplied
//! eigenvalue data.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fermatq::elimination::{
    irreducibility_threshold, run_pipeline, EliminationReport, FormOutcome, PipelineConfig,
};
use fermatq::forms::parse_newform_file;
use fermatq::frey::predicted_levels;
use fermatq::quadint::make_field;

const DATA_D1: &str = include_str!("../data/newforms_d-1.txt");
const DATA_D2: &str = include_str!("../data/newforms_d-2.txt");
const DATA_D7: &str = include_str!("../data/newforms_d-7.txt");

#[derive(Parser)]
#[command(
    name = "fermatq",
    about = "Newform elimination for the Fermat equation over Q(i), Q(\u{221a}-2), Q(\u{221a}-7)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    /// Field selector: -1, -2 or -7
    #[arg(long, allow_hyphen_values = true)]
    field: i64,
    /// Output format
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Include derivations and case tables in the output
    #[arg(long)]
    explain: bool,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Predicted Serre levels of the Frey representation at the primes over 2
    Levels(CommonArgs),
    /// Irreducibility threshold and its case table
    Bound(CommonArgs),
    /// Full elimination pipeline over a newform dataset
    Pipeline {
        #[command(flatten)]
        common: CommonArgs,
        /// Newform data file; the bundled snapshot is used when omitted
        #[arg(long)]
        data: Option<PathBuf>,
        /// Norm bound for auxiliary elimination primes
        #[arg(long, default_value_t = 50)]
        aux_bound: u64,
    },
}

fn emit(common: &CommonArgs, text: String) -> ExitCode {
    match &common.out {
        None => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Some(path) => match std::fs::write(path, text + "\n") {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                ExitCode::from(2)
            }
        },
    }
}

fn cmd_levels(common: &CommonArgs) -> ExitCode {
    let field = match make_field(common.field) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let prediction = match predicted_levels(&field) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if common.format == Format::Json {
        let levels: Vec<serde_json::Value> = prediction
            .levels
            .iter()
            .map(|l| {
                serde_json::json!({
                    "factors": l.factors.iter().map(|(p, e)| {
                        serde_json::json!({
                            "prime": field.display(&p.generator),
                            "norm": p.norm,
                            "exponent": e,
                        })
                    }).collect::<Vec<_>>(),
                    "norm": l.norm(),
                    "generator": field.display(&l.generator(&field)),
                })
            })
            .collect();
        let doc = serde_json::json!({ "field_d": common.field, "levels": levels });
        return emit(common, serde_json::to_string_pretty(&doc).unwrap());
    }
    let mut out = String::new();
    for level in &prediction.levels {
        let desc: Vec<String> = level
            .factors
            .iter()
            .map(|(p, e)| format!("v(N) = {e} at ({})", field.display(&p.generator)))
            .collect();
        out.push_str(&desc.join(", "));
        out.push_str(&format!("   [level norm {}]\n", level.norm()));
    }
    if common.explain {
        for audit in &prediction.audit {
            out.push_str(&format!(
                "audit at ({}): unit/square cokernel order {}, max character conductor exponent {}\n",
                field.display(&audit.prime.generator),
                audit.cokernel.cokernel_order(),
                audit.max_conductor_exponent
            ));
        }
    }
    emit(common, out.trim_end().to_string())
}

fn cmd_bound(common: &CommonArgs) -> ExitCode {
    let field = match make_field(common.field) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (threshold, cases) = match irreducibility_threshold(&field) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if common.format == Format::Json {
        let doc = serde_json::json!({
            "field_d": common.field,
            "threshold": threshold,
            "cases": cases,
        });
        return emit(common, serde_json::to_string_pretty(&doc).unwrap());
    }
    let mut out = format!("irreducible for all p >= {threshold}");
    if common.explain {
        for c in &cases {
            out.push_str(&format!("\ncase: {} -> bound {} ({})", c.id, c.bound, c.citation));
        }
    }
    emit(common, out)
}

fn bundled_data(d: i64) -> Option<&'static str> {
    match d {
        -1 => Some(DATA_D1),
        -2 => Some(DATA_D2),
        -7 => Some(DATA_D7),
        _ => None,
    }
}

fn render_report(report: &EliminationReport, explain: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!("field: d = {}\n", report.field_d));
    for l in &report.predicted_levels {
        out.push_str(&format!(
            "predicted level: generator ({}, {}) of norm {}\n",
            l.generator.0, l.generator.1, l.norm
        ));
    }
    out.push_str(&format!(
        "irreducibility threshold: {}\n",
        report.irreducibility_threshold
    ));
    if explain {
        for c in &report.irreducibility_cases {
            out.push_str(&format!("  case: {} -> bound {} ({})\n", c.id, c.bound, c.citation));
        }
    }
    for f in &report.forms {
        match &f.outcome {
            FormOutcome::EliminatedByCm { reason } => {
                out.push_str(&format!(
                    "form {} (level norm {}): eliminated by CM ({reason})\n",
                    f.label, f.level_norm
                ));
            }
            FormOutcome::Eliminated {
                survivors,
                auxiliary_norms,
            } => {
                out.push_str(&format!(
                    "form {} (level norm {}): eliminated, survivors {:?} via auxiliary norms {:?}\n",
                    f.label, f.level_norm, survivors, auxiliary_norms
                ));
            }
            FormOutcome::NoInformation => {
                out.push_str(&format!(
                    "form {} (level norm {}): NO INFORMATION\n",
                    f.label, f.level_norm
                ));
            }
        }
    }
    if explain {
        for l in &report.small_prime_ledger {
            out.push_str(&format!("  exponent {}: {}\n", l.exponent, l.citation));
        }
    }
    out.push_str(&format!("p0 = {}\n", report.p0));
    out.push_str(&format!("conclusion: {}\n", report.conditionality));
    out.trim_end().to_string()
}

fn cmd_pipeline(common: &CommonArgs, data: &Option<PathBuf>, aux_bound: u64) -> ExitCode {
    let field = match make_field(common.field) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = match data {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => match bundled_data(common.field) {
            Some(t) => t.to_string(),
            None => {
                eprintln!("error: no bundled data for d = {}", common.field);
                return ExitCode::from(2);
            }
        },
    };
    let dataset = match parse_newform_file(&text) {
        Ok(ds) => ds,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let config = PipelineConfig {
        aux_norm_bound: aux_bound,
    };
    let report = match run_pipeline(&field, &dataset, &config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let rendered = match common.format {
        Format::Json => serde_json::to_string_pretty(&report).unwrap(),
        Format::Text => render_report(&report, common.explain),
    };
    let wrote = emit(common, rendered);
    if wrote != ExitCode::SUCCESS {
        return wrote;
    }
    if report.complete && report.p0 == report.irreducibility_threshold {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Levels(common) => cmd_levels(common),
        Command::Bound(common) => cmd_bound(common),
        Command::Pipeline {
            common,
            data,
            aux_bound,
        } => cmd_pipeline(common, data, *aux_bound),
    }
}
