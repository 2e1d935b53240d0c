//! `dsm`: build semantic maps from RGB-D sequences, ground queries over them,
//! and evaluate both on synthetic scenes.

mod export;
mod settings;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dsm_core::config::{Backend, PipelineConfig};
use dsm_core::evalgen::{
    class_list, eval_grounding, generate_queries, gt_labeled_cloud, labeled_cloud, map_labels, seg_metrics, suites,
    synth_scene, GeneratedQuery, LabelAssignment, QueryKind, SceneSpec, SegReport,
};
use dsm_core::grounding::{ground, GroundingResult, MockReasoner, Reasoner, RemoteReasoner};
use dsm_core::perception::{ChatClient, ChatConfig, HashTextEncoder, HistogramImageEncoder, RemoteCaptioner};
use dsm_core::pipeline::{build_from_manifest, Backends, BuildReport};
use dsm_core::scene::{load_map, save_map};
use serde::Serialize;

use settings::ConfigArgs;

#[derive(Parser)]
#[command(name = "dsm", version, about = "Semantic mapping and 3D visual grounding")]
struct Cli {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a map from a sequence manifest.
    BuildMap {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Build report path; printed to stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Ground one referring query.
    Ground {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Save the rendered views as PNG files here.
        #[arg(long)]
        dump_views: Option<PathBuf>,
    },
    /// Generate referring queries from a (ground-truth) map.
    GenQueries {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score grounding of generated queries against ground truth.
    EvalGrounding {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score point labels of a built map against ground truth.
    EvalSeg {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render a synthetic scene: frames, manifest and ground-truth map.
    SynthScene {
        /// Scene description in JSON.
        #[arg(long, conflicts_with = "suite", required_unless_present = "suite")]
        spec: Option<PathBuf>,
        /// Built-in scene: single-object, two-objects, grounding or ablation.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-object point clouds and a scene summary.
    Export {
        #[arg(long)]
        map: PathBuf,
        /// ply or xyz.
        #[arg(long, default_value = "ply")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn chat_client() -> Result<ChatClient> {
    let cfg = ChatConfig::from_env().context("remote backend")?;
    Ok(ChatClient::new(cfg))
}

fn backends(cfg: &PipelineConfig) -> Result<Backends> {
    Ok(match cfg.backend {
        Backend::Mock => Backends::mock(),
        Backend::Remote => Backends {
            captioner: Box::new(RemoteCaptioner::new(chat_client()?)),
            text: Box::new(HashTextEncoder::default()),
            image: Box::new(HistogramImageEncoder),
        },
    })
}

fn reasoner(cfg: &PipelineConfig) -> Result<Box<dyn Reasoner>> {
    Ok(match cfg.backend {
        Backend::Mock => Box::new(MockReasoner),
        Backend::Remote => Box::new(RemoteReasoner::new(chat_client()?)),
    })
}

fn builtin_suite(name: &str) -> Result<SceneSpec> {
    Ok(match name {
        "single-object" => suites::single_object(10),
        "two-objects" => suites::two_objects(10),
        "grounding" => suites::grounding_suite(),
        "ablation" => suites::ablation_suite(),
        _ => bail!("unknown suite '{name}' (available: single-object, two-objects, grounding, ablation)"),
    })
}

#[derive(Serialize)]
struct BuildOutput<'a> {
    config: &'a PipelineConfig,
    build: BuildReport,
}

#[derive(Serialize)]
struct GroundOutput<'a> {
    config: &'a PipelineConfig,
    result: GroundingResult,
}

#[derive(Serialize)]
struct QueriesOutput<'a> {
    config: &'a PipelineConfig,
    unique: usize,
    multiple: usize,
    out: &'a Path,
}

#[derive(Serialize)]
struct EvalGroundingOutput<'a> {
    config: &'a PipelineConfig,
    #[serde(flatten)]
    report: dsm_core::evalgen::GroundReport,
}

#[derive(Serialize)]
struct EvalSegOutput<'a> {
    config: &'a PipelineConfig,
    #[serde(flatten)]
    report: SegReport,
    labels: Vec<LabelAssignment>,
}

#[derive(Serialize)]
struct SynthOutput<'a> {
    config: &'a PipelineConfig,
    scene: &'a str,
    frames: usize,
    objects: usize,
    out: &'a Path,
}

#[derive(Serialize)]
struct ExportOutput<'a> {
    config: &'a PipelineConfig,
    files: Vec<PathBuf>,
}

fn read_queries(path: &Path) -> Result<Vec<GeneratedQuery>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.cfg.resolve()?;
    match cli.cmd {
        Command::BuildMap { manifest, out, report } => {
            let (map, build) = build_from_manifest(&manifest, cfg.clone(), backends(&cfg)?)?;
            save_map(&map, &out)?;
            log::info!("wrote {} objects to {}", map.len(), out.display());
            write_json(report.as_deref(), &BuildOutput { config: &cfg, build })
        }
        Command::Ground {
            map,
            query,
            out,
            dump_views,
        } => {
            let map = load_map(&map)?;
            let outcome = ground(&map, &query, &cfg.grounding, &cfg.render, reasoner(&cfg)?.as_ref())?;
            if let Some(dir) = dump_views {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for v in &outcome.views {
                    let level = serde_json::to_value(v.spec.level)?;
                    let name = format!("{}.png", level.as_str().unwrap_or("view"));
                    v.image.save(&dir.join(name))?;
                }
            }
            write_json(
                out.as_deref(),
                &GroundOutput {
                    config: &cfg,
                    result: outcome.result,
                },
            )
        }
        Command::GenQueries { map, out } => {
            let map = load_map(&map)?;
            let queries = generate_queries(&map, &cfg.querygen)?;
            let mut text = String::new();
            for q in &queries {
                text.push_str(&serde_json::to_string(q)?);
                text.push('\n');
            }
            std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            let count = |k| queries.iter().filter(|q| q.kind == k).count();
            write_json(
                None,
                &QueriesOutput {
                    config: &cfg,
                    unique: count(QueryKind::Unique),
                    multiple: count(QueryKind::Multiple),
                    out: &out,
                },
            )
        }
        Command::EvalGrounding {
            map,
            queries,
            gt,
            report,
        } => {
            let (map, gt) = (load_map(&map)?, load_map(&gt)?);
            let queries = read_queries(&queries)?;
            let r = eval_grounding(&map, &gt, &queries, &cfg.grounding, &cfg.render, reasoner(&cfg)?.as_ref())?;
            write_json(report.as_deref(), &EvalGroundingOutput { config: &cfg, report: r })
        }
        Command::EvalSeg { pred, gt, report } => {
            let (pred, gt) = (load_map(&pred)?, load_map(&gt)?);
            let classes = class_list(&gt);
            let captions: Vec<_> = pred.objects.values().map(|o| o.caption.clone()).collect();
            let labels = map_labels(&captions, &classes, reasoner(&cfg)?.as_ref())?;
            let idx: Vec<u32> = labels.iter().map(|l| l.class_index).collect();
            let r = seg_metrics(&labeled_cloud(&pred, &idx), &gt_labeled_cloud(&gt, &classes), &classes)?;
            write_json(
                report.as_deref(),
                &EvalSegOutput {
                    config: &cfg,
                    report: r,
                    labels,
                },
            )
        }
        Command::SynthScene { spec, suite, out } => {
            let spec = match (spec, suite) {
                (Some(p), _) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                (None, Some(name)) => builtin_suite(&name)?,
                (None, None) => bail!("either --spec or --suite is required"),
            };
            let scene = synth_scene(&spec, cfg.seed)?;
            scene.write(&out)?;
            write_json(
                None,
                &SynthOutput {
                    config: &cfg,
                    scene: &spec.name,
                    frames: scene.frames.len(),
                    objects: scene.gt.len(),
                    out: &out,
                },
            )
        }
        Command::Export { map, format, out } => {
            let format = export::Format::parse(&format)?;
            let map = load_map(&map)?;
            let files = export::export_map(&map, format, &out)?;
            write_json(None, &ExportOutput { config: &cfg, files })
        }
    }
}

/// The error chain on one line. Library errors often repeat their source in
/// their own message, so causes already present are skipped.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let s = cause.to_string();
        if msg.contains(&s) {
            continue;
        }
        if !msg.is_empty() {
            msg.push_str(": ");
        }
        msg.push_str(&s);
    }
    msg.replace('\n', " ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}
