use std::fmt::Write as _;
use std::path::PathBuf;

/// Everything needed to repeat a run: the subcommand, its resolved options, the
/// files touched and the seed. Written as `#`-comments followed by any config
/// lines, so a `simulate` manifest doubles as a config file.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub subcommand: String,
    pub options: Vec<(String, String)>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub config: Option<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self { subcommand: subcommand.into(), ..Self::default() }
    }

    pub fn option(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.options.push((key.into(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# subcommand = {}", self.subcommand);
        let _ = writeln!(s, "# version = {}", env!("CARGO_PKG_VERSION"));
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "# seed = {seed}");
        }
        for (k, v) in &self.options {
            let _ = writeln!(s, "# option.{k} = {v}");
        }
        for p in &self.inputs {
            let _ = writeln!(s, "# input = {}", p.display());
        }
        for p in &self.outputs {
            let _ = writeln!(s, "# output = {}", p.display());
        }
        if let Some(c) = &self.config {
            s.push_str(c);
        }
        s
    }
}
