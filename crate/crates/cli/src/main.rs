use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use topokg_core::analytics::{
    default_classes, element_heights, export_periodic_table, write_periodic_table,
};
use topokg_core::eval::{default_suites, load_cases, run_suite, DEFAULT_TRIALS};
use topokg_core::fission::{run_fission, DocumentText, FissionConfig};
use topokg_core::graph::{
    build_graph, load_materials, load_snapshot, parse_materials, save_snapshot,
};
use topokg_core::literature::{
    load_index, load_pairs, parse_pairs, save_index, save_pairs, HashingEmbedder,
};
use topokg_core::llm::{ChatBackend, ChatMessage, CompletionParams, LlmConfig};
use topokg_core::pipeline::{ChatRequest, Pipeline};
use topokg_core::{cypher, fixtures, Coupling, PropertyGraph, VectorIndex};
use topokg_server::{AppState, ServerConfig};

#[derive(Parser)]
#[command(
    name = "topokg",
    version,
    about = "Topological-materials knowledge graph and question answering"
)]
struct Cli {
    /// TOML file declaring LLM backends.
    #[arg(long, global = true, env = "TOPOKG_LLM_CONFIG")]
    llm_config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph snapshot from materials JSONL.
    Ingest {
        #[arg(long)]
        materials: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a Cypher statement against a snapshot.
    Query {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        cypher: String,
        #[arg(long, default_value_t = 20)]
        max_rows: usize,
    },
    /// Embed a QA-pairs file into an index snapshot.
    BuildIndex {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nearest literature pairs for a query.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        q: String,
        #[arg(short, default_value_t = 3)]
        k: usize,
    },
    /// Generate QA pairs from a document.
    Fission {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        backend: String,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        pairs_per_round: Option<usize>,
    },
    /// Send one prompt to a backend and print the reply.
    LlmProbe {
        #[arg(long)]
        backend: String,
        #[arg(long)]
        prompt: String,
        #[arg(long, default_value_t = 0.2)]
        temperature: f64,
    },
    /// Answer a question through the full pipeline.
    Ask {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "golden")]
        backend: String,
        /// Also print the pipeline trace as JSON.
        #[arg(long)]
        trace: bool,
        question: String,
    },
    /// Export element heights as periodic-table JSON.
    Analyze {
        #[arg(long)]
        graph: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CouplingArg::Soc)]
        coupling: CouplingArg,
    },
    /// Score a backend on categorized test cases.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "golden")]
        backend: String,
        /// Case file; the bundled suite when omitted.
        #[arg(long)]
        cases: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Write the full report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Graph snapshot; the bundled fixture when omitted.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Index snapshot; the bundled fixture literature when omitted.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Fixture::Demo)]
    fixture: Fixture,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Demo,
    Replay,
}

#[derive(Clone, Copy, ValueEnum)]
enum CouplingArg {
    Soc,
    Nsoc,
}

impl From<CouplingArg> for Coupling {
    fn from(c: CouplingArg) -> Self {
        match c {
            CouplingArg::Soc => Coupling::Soc,
            CouplingArg::Nsoc => Coupling::Nsoc,
        }
    }
}

impl DataArgs {
    fn graph(&self) -> anyhow::Result<PropertyGraph> {
        if let Some(p) = &self.graph {
            return read_graph(p);
        }
        let text = match self.fixture {
            Fixture::Demo => fixtures::DEMO_MATERIALS,
            Fixture::Replay => fixtures::REPLAY_MATERIALS,
        };
        Ok(build_graph(&parse_materials(text).records)?)
    }

    fn index(&self) -> anyhow::Result<VectorIndex> {
        if let Some(p) = &self.index {
            return load_index(p).with_context(|| format!("loading index {}", p.display()));
        }
        let text = match self.fixture {
            Fixture::Demo => fixtures::DEMO_LITERATURE,
            Fixture::Replay => fixtures::REPLAY_LITERATURE,
        };
        Ok(VectorIndex::from_pairs(
            Arc::new(HashingEmbedder::default()),
            parse_pairs(text)?,
        )?)
    }

    fn pipeline(&self, backend: Arc<dyn ChatBackend>) -> anyhow::Result<Pipeline> {
        Ok(Pipeline::new(
            Arc::new(self.graph()?),
            Arc::new(self.index()?),
            backend,
        ))
    }
}

fn read_graph(path: &Path) -> anyhow::Result<PropertyGraph> {
    load_snapshot(path).with_context(|| format!("loading graph {}", path.display()))
}

fn backend(cli_cfg: &Option<PathBuf>, name: &str) -> anyhow::Result<Arc<dyn ChatBackend>> {
    let cfg = match cli_cfg {
        Some(p) => LlmConfig::load(p)?,
        None => LlmConfig::default(),
    };
    Ok(cfg.backend(name)?)
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match cli.cmd {
        Command::Ingest { materials, out } => {
            let report = load_materials(&materials)?;
            for bad in &report.rejected {
                eprintln!("line {}: {}", bad.line, bad.reason);
            }
            let g = build_graph(&report.records)?;
            save_snapshot(&g, &out)?;
            println!(
                "{} materials, {} rejected; {} nodes, {} edges -> {}",
                report.records.len(),
                report.rejected.len(),
                g.node_count(),
                g.edge_count(),
                out.display()
            );
        }
        Command::Query {
            graph,
            cypher: text,
            max_rows,
        } => {
            let g = read_graph(&graph)?;
            let table = cypher::query(&g, &text)?;
            println!("{}", cypher::format_results(&table, max_rows));
        }
        Command::BuildIndex { pairs, out } => {
            let pairs = load_pairs(&pairs)?;
            let ix = VectorIndex::from_pairs(Arc::new(HashingEmbedder::default()), pairs)?;
            save_index(&ix, &out)?;
            println!("{} pairs -> {}", ix.len(), out.display());
        }
        Command::Search { index, q, k } => {
            let ix = load_index(&index)?;
            for (rank, h) in ix.search(&q, k)?.iter().enumerate() {
                println!(
                    "{}\t{}\t{:.6}\t{}\t{}",
                    rank + 1,
                    h.pair.id,
                    h.distance,
                    h.pair.doi,
                    h.pair.question
                );
            }
        }
        Command::Fission {
            doc,
            out,
            backend: name,
            seeds,
            rounds,
            pairs_per_round,
        } => {
            let mut cfg = FissionConfig::default();
            if let Some(n) = seeds {
                cfg.seeds_per_doc = n;
            }
            if let Some(n) = rounds {
                cfg.rounds = n;
            }
            if let Some(n) = pairs_per_round {
                cfg.pairs_per_round = n;
            }
            let llm = backend(&cli.llm_config, &name)?;
            let doc = DocumentText::load(&doc)?;
            match run_fission(&doc, llm.as_ref(), &cfg) {
                Ok(pairs) => {
                    save_pairs(&pairs, &out)?;
                    println!("{} pairs -> {}", pairs.len(), out.display());
                }
                Err(e) => {
                    if !e.partial().is_empty() {
                        save_pairs(e.partial(), &out)?;
                        eprintln!("kept {} pairs in {}", e.partial().len(), out.display());
                    }
                    return Err(e.into());
                }
            }
        }
        Command::LlmProbe {
            backend: name,
            prompt,
            temperature,
        } => {
            let llm = backend(&cli.llm_config, &name)?;
            let reply = llm.complete(
                &[ChatMessage::user(prompt)],
                &CompletionParams { temperature },
            )?;
            println!("{reply}");
        }
        Command::Ask {
            data,
            backend: name,
            trace,
            question,
        } => {
            let p = data.pipeline(backend(&cli.llm_config, &name)?)?;
            let ans = p.answer(&ChatRequest::new(question))?;
            println!("{}", ans.text);
            if trace {
                println!("{}", serde_json::to_string_pretty(&ans.trace)?);
            }
        }
        Command::Analyze {
            graph,
            out,
            coupling,
        } => {
            let g = read_graph(&graph)?;
            let heights = element_heights(&g, &default_classes(), coupling.into())?;
            let entries = export_periodic_table(&heights)?;
            match out {
                Some(path) => {
                    write_periodic_table(&entries, &path)?;
                    println!("{} elements -> {}", entries.len(), path.display());
                }
                None => println!("{}", topokg_core::analytics::periodic_table_json(&entries)),
            }
        }
        Command::Eval {
            data,
            backend: name,
            cases,
            trials,
            report,
        } => {
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            let cases = match cases {
                Some(p) => load_cases(&p)?,
                None => default_suites(),
            };
            let p = data.pipeline(backend(&cli.llm_config, &name)?)?;
            let r = run_suite(&cases, &p, trials);
            print!("{}", r.table());
            if let Some(path) = report {
                std::fs::write(&path, serde_json::to_string_pretty(&r)?)?;
            }
        }
        Command::Serve { config } => {
            let mut cfg = match config {
                Some(p) => ServerConfig::load(p)?,
                None => ServerConfig::default(),
            };
            if cfg.llm_config.is_none() {
                cfg.llm_config = cli.llm_config.clone();
            }
            cfg.apply_env(|k| std::env::var(k).ok())?;
            let state = Arc::new(AppState::from_config(&cfg)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&cfg.listen)
                    .await
                    .with_context(|| format!("binding {}", cfg.listen))?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                topokg_server::serve(state, listener, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
            })?;
        }
    }
    Ok(())
}
