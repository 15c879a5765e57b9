//! Run configuration: a TOML file overlaid with command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use genomagent_core::{Pricing, Usd};
use genomagent_llm::LiveConfig;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Agent,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Mock,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FixtureKind {
    Record,
    Replay,
    Passthrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyleArg {
    Full,
    Slim,
}

/// The file form. Every field is optional; relative paths are resolved
/// against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub engine: Option<EngineKind>,
    pub backend: Option<BackendKind>,
    pub mock_script: Option<PathBuf>,
    pub cassette_dir: Option<PathBuf>,
    pub fixtures: Option<FixtureKind>,
    pub fixture_dir: Option<PathBuf>,
    pub workflows: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub prompt_style: Option<PromptStyleArg>,
    pub species: Option<PathBuf>,
    pub pricing: Option<Pricing>,
    pub pricing_file: Option<PathBuf>,
    pub budget_usd: Option<String>,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
    pub live: Option<LiveConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut file: ConfigFile = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut file.mock_script,
            &mut file.cassette_dir,
            &mut file.fixture_dir,
            &mut file.workflows,
            &mut file.prompts,
            &mut file.species,
            &mut file.pricing_file,
            &mut file.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }
}

/// Flags shared by the commands that run an engine.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunFlags {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Script for the mock backend.
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
    /// Cassette directory for the replay backend.
    #[arg(long)]
    pub cassette_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub fixtures: Option<FixtureKind>,
    #[arg(long)]
    pub fixture_dir: Option<PathBuf>,
    /// Directory of workflow TOML files (defaults to the built-in set).
    #[arg(long)]
    pub workflows: Option<PathBuf>,
    /// Baseline prompt directory (defaults to the built-in prompts).
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub prompt_style: Option<PromptStyleArg>,
    /// Extra Latin-to-common species names, as a JSON object.
    #[arg(long)]
    pub species: Option<PathBuf>,
    /// TOML pricing file with model_label and per-million token rates.
    #[arg(long)]
    pub pricing: Option<PathBuf>,
    /// Spending cap per question, in USD.
    #[arg(long)]
    pub budget: Option<String>,
    /// Questions answered at once in bench mode.
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub backend: BackendKind,
    pub mock_script: Option<PathBuf>,
    pub cassette_dir: Option<PathBuf>,
    pub fixtures: FixtureKind,
    pub fixture_dir: Option<PathBuf>,
    pub workflows: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub prompt_style: PromptStyleArg,
    pub species: Option<PathBuf>,
    pub pricing: Pricing,
    pub budget: Usd,
    pub parallelism: usize,
    pub out: PathBuf,
    pub live: LiveConfig,
}

fn load_pricing(path: &Path) -> Result<Pricing> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading pricing {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing pricing {}", path.display()))
}

impl RunConfig {
    pub fn resolve(flags: &RunFlags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let live = file.live.unwrap_or_default();
        let pricing = match (&flags.pricing, file.pricing, &file.pricing_file) {
            (Some(path), _, _) => load_pricing(path)?,
            (None, Some(p), _) => p,
            (None, None, Some(path)) => load_pricing(path)?,
            (None, None, None) => Pricing::free(live.model.clone()),
        };
        let budget_text = flags.budget.clone().or(file.budget_usd).unwrap_or_else(|| "0.05".into());
        let budget = Usd::from_str(&budget_text).with_context(|| format!("budget {budget_text:?}"))?;
        if budget < Usd::ZERO {
            bail!("budget must not be negative");
        }
        let config = Self {
            engine: flags.engine.or(file.engine).unwrap_or(EngineKind::Agent),
            backend: flags.backend.or(file.backend).unwrap_or(BackendKind::Live),
            mock_script: flags.mock_script.clone().or(file.mock_script),
            cassette_dir: flags.cassette_dir.clone().or(file.cassette_dir),
            fixtures: flags.fixtures.or(file.fixtures).unwrap_or(FixtureKind::Passthrough),
            fixture_dir: flags.fixture_dir.clone().or(file.fixture_dir),
            workflows: flags.workflows.clone().or(file.workflows),
            prompts: flags.prompts.clone().or(file.prompts),
            prompt_style: flags.prompt_style.or(file.prompt_style).unwrap_or(PromptStyleArg::Full),
            species: flags.species.clone().or(file.species),
            pricing,
            budget,
            parallelism: flags.parallelism.or(file.parallelism).unwrap_or(1).max(1),
            out: flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            live,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match self.backend {
            BackendKind::Mock if self.mock_script.is_none() => bail!("--backend mock needs --mock-script"),
            BackendKind::Replay => match &self.cassette_dir {
                None => bail!("--backend replay needs --cassette-dir"),
                Some(dir) if !dir.is_dir() => bail!("cassette directory {} does not exist", dir.display()),
                Some(_) => {}
            },
            _ => {}
        }
        if matches!(self.fixtures, FixtureKind::Record | FixtureKind::Replay) && self.fixture_dir.is_none() {
            bail!("--fixtures record/replay needs --fixture-dir");
        }
        if self.fixtures == FixtureKind::Replay {
            let dir = self.fixture_dir.as_ref().expect("checked above");
            if !dir.is_dir() {
                bail!("fixture directory {} does not exist", dir.display());
            }
        }
        Ok(())
    }

    /// True when neither the model nor the databases are contacted.
    pub fn is_offline(&self) -> bool {
        self.backend != BackendKind::Live && self.fixtures == FixtureKind::Replay
    }
}
