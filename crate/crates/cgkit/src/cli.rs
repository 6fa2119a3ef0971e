//! Command-line front end: template validation, PST-only composition, JSON
//! dumps, recipe graph checks, full graph-driven builds, and reduction stats.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::driver;
use crate::metrics::{count_generated_lines, count_template_lines, format_table, ReductionReport};
use crate::pst::{self, Finding, Pst, PstError, RenderOptions, Severity};
use crate::recipe::{self, comment_style_from_name, Recipe, RecipeError};
use crate::template::{parse_template, CommentStyle, Template, TemplateError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;

#[derive(Parser)]
#[command(name = "cgkit", version, about = "Template composition and graph-driven code generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Emit trace-comment tags around connectors and links
    #[arg(long, global = true)]
    verbose_trace: bool,

    /// Comment style: `c`, `fortran`, or a literal token (default: by file extension)
    #[arg(long, global = true)]
    comment_style: Option<String>,

    /// Spaces per indentation level
    #[arg(long, global = true, default_value_t = 2)]
    indent_width: usize,

    /// Treat warnings (e.g. empty links) as errors
    #[arg(long, global = true)]
    strict: bool,

    /// Prepend a generated-file banner to rendered output
    #[arg(long, global = true)]
    banner: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse templates and report diagnostics
    Validate {
        /// Template files
        #[arg(required = true)]
        templates: Vec<PathBuf>,
    },
    /// Compose templates into a tree and render source
    Compose {
        /// Root template file
        root: PathBuf,
        /// Connector section of the root template to start from
        connector: String,
        /// Further templates, attached in order
        templates: Vec<PathBuf>,
        /// Output file (default: standard output)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compose templates and write the tree's canonical JSON
    Dump {
        root: PathBuf,
        connector: String,
        templates: Vec<PathBuf>,
        /// Emit canonical JSON (the only supported format)
        #[arg(long, default_value_t = true)]
        json: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a tree from its canonical JSON document
    Render {
        /// Tree JSON file
        tree: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Load a recipe manifest and check its graph
    Graph {
        manifest: PathBuf,
        /// Validate only (the default behavior)
        #[arg(long)]
        check: bool,
        /// Print the graph as text (nodes and edges)
        #[arg(long)]
        export: bool,
    },
    /// Run the full chain: manifest -> graph -> tree -> source
    Build {
        manifest: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reduction table: template input lines vs generated output lines
    Stats {
        /// Manifest (.toml) or template files to count as input
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Generated output files
        #[arg(short, long, required = true)]
        outputs: Vec<PathBuf>,
    },
}

enum CliError {
    Findings,
    Io(PathBuf, std::io::Error),
    Schema(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Findings => EXIT_FINDINGS,
            CliError::Io(..) => EXIT_IO,
            CliError::Schema(_) => EXIT_SCHEMA,
        }
    }
}

fn classify_recipe_error(e: RecipeError) -> CliError {
    match e {
        RecipeError::Io { path, source } => CliError::Io(path, source),
        RecipeError::Template(t) => {
            eprintln!("{t}");
            CliError::Findings
        }
        other => CliError::Schema(other.to_string()),
    }
}

fn classify_pst_error(e: &PstError) -> CliError {
    match e {
        PstError::Schema { .. } => CliError::Schema(e.to_string()),
        _ => CliError::Findings,
    }
}

struct Settings {
    verbose: bool,
    comment_style: Option<String>,
    indent_width: usize,
    strict: bool,
    banner: bool,
}

impl Settings {
    fn styles_for(&self, path: &Path) -> Vec<CommentStyle> {
        match &self.comment_style {
            Some(name) => vec![comment_style_from_name(name)],
            None => CommentStyle::for_path(path),
        }
    }

    fn render_style_for(&self, path: &Path) -> CommentStyle {
        self.styles_for(path).into_iter().next().expect("at least one style")
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn load_template(path: &Path, settings: &Settings) -> Result<Template, CliError> {
    let text = read_file(path)?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("template")
        .to_string();
    parse_template(&text, &name, &settings.styles_for(path)).map_err(|e: TemplateError| {
        eprintln!("{e}");
        CliError::Findings
    })
}

/// Writes via a temporary file in the same directory, then renames.
fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp{}",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
            std::process::id()
        )),
        None => PathBuf::from(format!(".cgkit.tmp{}", std::process::id())),
    };
    let io = |e| CliError::Io(path.to_path_buf(), e);
    std::fs::write(&tmp, content).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn emit(output: Option<&Path>, content: &str) -> Result<(), CliError> {
    match output {
        Some(path) => write_output(path, content),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
        }
    }
}

/// Reports findings to stderr; errors (and warnings under --strict) fail.
fn report_findings(findings: &[Finding], strict: bool) -> Result<(), CliError> {
    let mut failed = false;
    for finding in findings {
        eprintln!("{finding}");
        if finding.severity() == Severity::Error || strict {
            failed = true;
        }
    }
    if failed {
        Err(CliError::Findings)
    } else {
        Ok(())
    }
}

fn compose_tree(
    root: &Path,
    connector: &str,
    templates: &[PathBuf],
    settings: &Settings,
) -> Result<Pst, CliError> {
    let root_tpl = load_template(root, settings)?;
    let mut tree = pst::new_tree(&root_tpl, connector, settings.indent_width).map_err(|e| {
        eprintln!("{e}");
        classify_pst_error(&e)
    })?;
    for path in templates {
        let tpl = load_template(path, settings)?;
        pst::attach(&mut tree, &tpl).map_err(|e| {
            eprintln!("{e}");
            classify_pst_error(&e)
        })?;
    }
    Ok(tree)
}

fn rendered_output(
    tree: &Pst,
    opts: &RenderOptions,
    banner: bool,
) -> Result<String, CliError> {
    let body = pst::render(tree, opts).map_err(|e| {
        eprintln!("{e}");
        classify_pst_error(&e)
    })?;
    if banner {
        let tok = &opts.comment_style.line_token;
        Ok(format!("{tok} generated by cgkit; do not edit\n{body}"))
    } else {
        Ok(body)
    }
}

fn load_recipe(path: &Path, settings: &Settings) -> Result<Recipe, CliError> {
    let mut recipe = recipe::load_manifest_file(path).map_err(classify_recipe_error)?;
    if let Some(name) = &settings.comment_style {
        recipe.render.comment_style = comment_style_from_name(name);
    }
    if settings.verbose {
        recipe.render.verbose = true;
    }
    Ok(recipe)
}

fn run_command(cli: &Cli, settings: &Settings) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { templates } => {
            let mut clean = true;
            for path in templates {
                match load_template(path, settings) {
                    Ok(_) => {}
                    Err(io @ CliError::Io(..)) => return Err(io),
                    Err(_) => clean = false,
                }
            }
            if clean {
                Ok(())
            } else {
                Err(CliError::Findings)
            }
        }
        Command::Compose {
            root,
            connector,
            templates,
            output,
        } => {
            let tree = compose_tree(root, connector, templates, settings)?;
            report_findings(&pst::verify(&tree), settings.strict)?;
            let opts = RenderOptions {
                verbose: settings.verbose,
                comment_style: settings.render_style_for(root),
                indent_width: settings.indent_width,
            };
            let text = rendered_output(&tree, &opts, settings.banner)?;
            emit(output.as_deref(), &text)
        }
        Command::Dump {
            root,
            connector,
            templates,
            json: _,
            output,
        } => {
            let tree = compose_tree(root, connector, templates, settings)?;
            emit(output.as_deref(), &pst::to_json_string(&tree))
        }
        Command::Render { tree, output } => {
            let text = read_file(tree)?;
            let doc: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Schema(format!("{}: {e}", tree.display())))?;
            let tree = pst::from_json(&doc, settings.indent_width).map_err(|e| {
                eprintln!("{e}");
                classify_pst_error(&e)
            })?;
            let opts = RenderOptions {
                verbose: settings.verbose,
                comment_style: settings
                    .comment_style
                    .as_deref()
                    .map(comment_style_from_name)
                    .unwrap_or_else(CommentStyle::c),
                indent_width: settings.indent_width,
            };
            let text = rendered_output(&tree, &opts, settings.banner)?;
            emit(output.as_deref(), &text)
        }
        Command::Graph {
            manifest,
            check: _,
            export,
        } => {
            let mut recipe = load_recipe(manifest, settings)?;
            let result = recipe.graph.validate();
            if *export {
                print!("{}", recipe.graph.export_text());
            }
            match result {
                Ok(()) => Ok(()),
                Err(violations) => {
                    for v in violations {
                        eprintln!("{}: {v}", manifest.display());
                    }
                    Err(CliError::Findings)
                }
            }
        }
        Command::Build { manifest, output } => {
            let mut recipe = load_recipe(manifest, settings)?;
            recipe.seal().map_err(classify_recipe_error)?;
            let outcome = driver::build(&recipe).map_err(|failure| {
                eprintln!("{failure}");
                match &failure.error {
                    driver::DriverError::Recipe(RecipeError::Schema(s)) => {
                        CliError::Schema(s.clone())
                    }
                    driver::DriverError::Pst(e) => classify_pst_error(e),
                    _ => CliError::Findings,
                }
            })?;
            report_findings(&pst::verify(&outcome.tree), settings.strict)?;
            let opts = RenderOptions {
                verbose: recipe.render.verbose,
                comment_style: recipe.render.comment_style.clone(),
                indent_width: recipe.render.indent_width,
            };
            let text = rendered_output(&outcome.tree, &opts, settings.banner)?;
            emit(output.as_deref(), &text)
        }
        Command::Stats { inputs, outputs } => {
            let mut input_lines = 0usize;
            for path in inputs {
                if path.extension().is_some_and(|e| e == "toml") {
                    let recipe = load_recipe(path, settings)?;
                    input_lines += count_template_lines(recipe.templates());
                } else {
                    let tpl = load_template(path, settings)?;
                    input_lines += count_template_lines([&tpl]);
                }
            }
            let mut rows = Vec::new();
            let mut generated_total = 0usize;
            for path in outputs {
                let text = read_file(path)?;
                generated_total += count_generated_lines(&text);
            }
            for path in outputs {
                let text = read_file(path)?;
                let generated = count_generated_lines(&text);
                let label = path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .unwrap_or("output");
                rows.push(
                    ReductionReport::new(label, input_lines, generated)
                        .map_err(|e| CliError::Schema(e.to_string()))?,
                );
            }
            if outputs.len() > 1 {
                rows.push(
                    ReductionReport::new("total", input_lines, generated_total)
                        .map_err(|e| CliError::Schema(e.to_string()))?,
                );
            }
            print!("{}", format_table(&rows));
            Ok(())
        }
    }
}

/// Parses `argv` and runs one subcommand. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout with success status
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    let settings = Settings {
        verbose: cli.verbose_trace,
        comment_style: cli.comment_style.clone(),
        indent_width: cli.indent_width,
        strict: cli.strict,
        banner: cli.banner,
    };
    match run_command(&cli, &settings) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if let CliError::Io(path, err) = &e {
                eprintln!("{}: {err}", path.display());
            } else if let CliError::Schema(msg) = &e {
                eprintln!("{msg}");
            }
            e.code()
        }
    }
}
