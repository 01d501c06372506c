//! `subsearch` command line: single searches and method comparisons.
//!
//! Failures are reported on stderr as `{"error": {"kind", "message"}}` with
//! exit status 2 for usage errors and 1 for everything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use subsearch::bench::{compare_methods, format_table, generate, MethodConfig, SyntheticSpec};
use subsearch::patches::DEFAULT_LINK_FACTOR;
use subsearch::{
    execute, load_image, save_image, to_gray, AptsParams, Error, Image, Method, PreparedImage, RunOptions, RunReport,
    SearchParams,
};

#[derive(Debug, Parser)]
#[command(
    name = "subsearch",
    version,
    about = "Find every occurrence of a reference patch in an image"
)]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search one image and write a JSON report and an annotated image.
    Search(SearchArgs),
    /// Compare all methods on a synthetic scene or a given image.
    Bench(BenchArgs),
}

/// Rectangle `x,y,h,w`: top-left row and column, height and width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
struct Rect {
    x: usize,
    y: usize,
    h: usize,
    w: usize,
}

impl FromStr for Rect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("expected x,y,h,w: {e}"))?;
        match parts[..] {
            [x, y, h, w] => Ok(Rect { x, y, h, w }),
            _ => Err(format!("expected 4 comma-separated values, got {}", parts.len())),
        }
    }
}

#[derive(Debug, Args)]
struct Hyper {
    /// Candidates kept before overlap filtering.
    #[arg(long, default_value_t = 10)]
    top_m: usize,
    /// Most segmentation instants per axis.
    #[arg(long, default_value_t = 20)]
    k_max: usize,
    /// Margin divisor; the margin is max(ref_rows, ref_cols) / p.
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    stride_x: usize,
    #[arg(long, default_value_t = 1)]
    stride_y: usize,
    /// Score profile candidates with per-channel window totals.
    #[arg(long)]
    scalar_profile: bool,
    /// Cluster accepted windows into patches and outline them.
    #[arg(long)]
    patches: bool,
    /// Patch linkage distance in units of the larger reference side.
    #[arg(long, requires = "patches")]
    link_factor: Option<f64>,
}

impl Hyper {
    fn params(&self) -> SearchParams {
        SearchParams {
            top_m: self.top_m,
            p: self.p,
            stride_x: self.stride_x,
            stride_y: self.stride_y,
            apts: AptsParams::default().with_k_max(self.k_max),
            scalar_profile: self.scalar_profile,
        }
    }

    fn link_factor(&self) -> Option<f64> {
        self.patches.then(|| self.link_factor.unwrap_or(DEFAULT_LINK_FACTOR))
    }
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, default_value = "apts-v2", value_parser = parse_method)]
    method: Method,
    /// PNG image to search.
    #[arg(long)]
    image: PathBuf,
    /// Reference PNG.
    #[arg(long = "ref", conflicts_with = "ref_rect", required_unless_present = "ref_rect")]
    reference: Option<PathBuf>,
    /// Reference cut from the image as x,y,h,w.
    #[arg(long)]
    ref_rect: Option<Rect>,
    /// Search the grayscale conversion of both images.
    #[arg(long)]
    gray: bool,
    #[command(flatten)]
    hyper: Hyper,
    /// Annotated copy of the image.
    #[arg(long)]
    out_image: Option<PathBuf>,
    /// JSON report (default: stdout).
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Image to benchmark on instead of the synthetic scene.
    #[arg(long, requires = "ref_rect")]
    image: Option<PathBuf>,
    /// Reference rectangle x,y,h,w (default: the first planted disk).
    #[arg(long)]
    ref_rect: Option<Rect>,
    /// Noise seed of the synthetic scene.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Uniform noise amplitude of the synthetic scene.
    #[arg(long, default_value_t = 0)]
    noise: u8,
    #[arg(long)]
    gray: bool,
    #[command(flatten)]
    hyper: Hyper,
    /// JSON reports, one per method.
    #[arg(long)]
    out_json: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::NotFound { .. } => "not_found",
            Error::Io { .. } | Error::Encode { .. } => "io",
            Error::Decode(_) => "undecodable_image",
            Error::EmptyImage { .. } => "empty_image",
            Error::WindowOutOfBounds { .. } => "invalid_rectangle",
            Error::ReferenceTooLarge { .. } => "reference_too_large",
            _ => "invalid_parameters",
        };
        Self::new(kind, e.to_string())
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new("io", format!("failed to write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum ReferenceSource {
    File(PathBuf),
    Rect(Rect),
}

#[derive(Debug, Serialize)]
struct SearchDocument {
    image_path: PathBuf,
    reference_source: ReferenceSource,
    #[serde(flatten)]
    report: RunReport,
}

fn prepare(image: &Image, gray: bool) -> PreparedImage {
    PreparedImage::new(if gray { to_gray(image) } else { image.clone() })
}

fn run_search(args: &SearchArgs) -> Result<(), Failure> {
    let image = load_image(&args.image)?;
    let prepared = prepare(&image, args.gray);
    let (reference, source) = match (&args.reference, args.ref_rect) {
        (Some(path), _) => (load_image(path)?, ReferenceSource::File(path.clone())),
        (None, Some(r)) => (prepared.image().crop(r.x, r.y, r.h, r.w)?, ReferenceSource::Rect(r)),
        (None, None) => unreachable!("clap requires one reference source"),
    };
    let options = RunOptions {
        method: args.method,
        params: args.hyper.params(),
        grayscale: args.gray,
        link_factor: args.hyper.link_factor(),
    };
    let (report, _) = execute(&prepared, &reference, &options)?;
    log::info!(
        "{}: {} candidates, {} cost evaluations, {:.3} s",
        report.method,
        report.candidates.len(),
        report.cost_evals,
        report.solve_time_s
    );
    if let Some(path) = &args.out_image {
        save_image(&image, path, &report.annotations())?;
    }
    let document = SearchDocument {
        image_path: args.image.clone(),
        reference_source: source,
        report,
    };
    match &args.out_json {
        Some(path) => write_output(path, &to_json(&document)),
        None => {
            print!("{}", to_json(&document));
            Ok(())
        }
    }
}

fn run_bench(args: &BenchArgs) -> Result<(), Failure> {
    let (image, rect) = match &args.image {
        Some(path) => (
            load_image(path)?,
            args.ref_rect.expect("clap requires a rectangle with --image"),
        ),
        None => {
            let spec = SyntheticSpec {
                noise: args.noise,
                seed: args.seed,
                ..SyntheticSpec::planted_disks()
            };
            let scene = generate(&spec)?;
            let first = scene.truth[0];
            let rect = args.ref_rect.unwrap_or(Rect {
                x: first.x,
                y: first.y,
                h: first.h,
                w: first.w,
            });
            (scene.image, rect)
        }
    };
    let prepared = prepare(&image, args.gray);
    let reference = prepared.image().crop(rect.x, rect.y, rect.h, rect.w)?;
    let configs: Vec<MethodConfig> = Method::ALL
        .iter()
        .map(|&method| MethodConfig {
            method,
            params: args.hyper.params(),
            link_factor: args.hyper.link_factor(),
        })
        .collect();
    let reports = compare_methods(&prepared, &reference, &configs);
    print!("{}", format_table(&reports));
    if let Some(path) = &args.out_json {
        write_output(path, &to_json(&reports))?;
    }
    match reports.iter().find_map(|r| r.error.as_ref()) {
        Some(err) => Err(Failure::new("invalid_parameters", err.clone())),
        None => Ok(()),
    }
}

fn report_failure(failure: &Failure) {
    let body = serde_json::json!({ "error": { "kind": failure.kind, "message": failure.message } });
    eprintln!("{body}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_failure(&Failure::new("usage", e.render().to_string().trim_end()));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            report_failure(&Failure::new("internal", e.to_string()));
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Search(args) => run_search(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            report_failure(&failure);
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_parsing() {
        assert_eq!("1,2,3,4".parse::<Rect>(), Ok(Rect { x: 1, y: 2, h: 3, w: 4 }));
        assert_eq!(" 5, 6 ,7,8".parse::<Rect>().unwrap().x, 5);
        assert!("1,2,3".parse::<Rect>().is_err());
        assert!("1,2,3,-4".parse::<Rect>().is_err());
    }

    #[test]
    fn argument_definitions_are_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn link_factor_defaults_when_patches_requested() {
        let cli = Cli::try_parse_from([
            "subsearch",
            "search",
            "--image",
            "a.png",
            "--ref-rect",
            "0,0,2,2",
            "--patches",
        ])
        .unwrap();
        let Command::Search(args) = cli.command else {
            panic!("search expected")
        };
        assert_eq!(args.hyper.link_factor(), Some(DEFAULT_LINK_FACTOR));
        assert_eq!(args.method, Method::AptsV2);
    }

    #[test]
    fn reference_sources_are_exclusive() {
        let both = [
            "subsearch",
            "search",
            "--image",
            "a.png",
            "--ref",
            "b.png",
            "--ref-rect",
            "0,0,2,2",
        ];
        assert!(Cli::try_parse_from(both).is_err());
        assert!(Cli::try_parse_from(["subsearch", "search", "--image", "a.png"]).is_err());
    }
}
