//! Run configuration.
//!
//! A config file is UTF-8 text with one `section.key = value` assignment
//! per line. Blank lines and lines starting with `#` are ignored; a later
//! assignment to the same key overrides an earlier one. Relative paths in
//! values are resolved against the directory containing the config file,
//! so a run directory can be moved around as a unit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use smileybench_core::emoji::EmojiTaxonomy;
use smileybench_core::numerics::{mix, tag64};
use smileybench_core::{Error, Result};

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        let base_dir = match path.parent() {
            Some(p) if p.as_os_str().is_empty() => PathBuf::from("."),
            Some(p) => p.to_path_buf(),
            None => PathBuf::from("."),
        };
        Config::parse(&text, base_dir)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Config> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "config line {}: expected `key = value`, got {line:?}",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Parse(format!(
                    "config line {}: bad key {key:?}",
                    lineno + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Config { values, base_dir })
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("config: missing key `{key}`")))
    }

    fn parsed<T, F>(&self, key: &str, what: &str, parse: F) -> Result<Option<T>>
    where
        F: FnOnce(&str) -> Option<T>,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => parse(raw).map(Some).ok_or_else(|| {
                Error::Parse(format!("config: `{key} = {raw}` is not a valid {what}"))
            }),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.parsed(key, "integer", |s| s.parse().ok())
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>> {
        self.parsed(key, "integer", |s| s.parse().ok())
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.parsed(key, "integer", |s| s.parse().ok())
    }

    pub fn get_f32(&self, key: &str) -> Result<Option<f32>> {
        self.parsed(key, "number", |s| s.parse().ok())
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        self.parsed(key, "boolean (true/false)", |s| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
    }

    pub fn get_date(&self, key: &str) -> Result<Option<chrono::NaiveDate>> {
        self.parsed(key, "date (YYYY-MM-DD)", |s| {
            chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
        })
    }

    /// Comma-separated list of integers; an empty value is an empty list.
    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.parsed(key, "comma-separated integer list", |s| {
            if s.is_empty() {
                return Some(Vec::new());
            }
            s.split(',').map(|p| p.trim().parse().ok()).collect()
        })
    }

    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.resolve(v))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        Ok(self.resolve(self.require(key)?))
    }

    fn resolve(&self, value: &str) -> PathBuf {
        let p = Path::new(value);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Everything a subcommand needs: the parsed config plus the resolved
/// seed and output directory (flags override config keys).
pub struct Ctx {
    pub cfg: Config,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Ctx {
    pub fn new(cfg: Config, seed_flag: Option<u64>, out_flag: Option<PathBuf>) -> Result<Ctx> {
        let seed = match seed_flag {
            Some(s) => s,
            None => cfg.get_u64("seed")?.unwrap_or(42),
        };
        let out_dir = out_flag
            .or_else(|| cfg.get_path("paths.out_dir"))
            .unwrap_or_else(|| cfg.base_dir().join("out"));
        Ok(Ctx { cfg, seed, out_dir })
    }

    pub fn taxonomy(&self) -> Result<EmojiTaxonomy> {
        match self.cfg.get_path("paths.taxonomy") {
            Some(p) => EmojiTaxonomy::load(&p),
            None => Ok(EmojiTaxonomy::builtin()),
        }
    }

    /// Stage-scoped seed so reordering pipeline stages never aliases
    /// their random streams.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        mix(self.seed, &[tag64(stage)])
    }

    /// Input artifact path: an explicit config key wins, otherwise the
    /// standard file name inside the output directory.
    pub fn input_path(&self, key: &str, default_name: &str) -> PathBuf {
        self.cfg
            .get_path(key)
            .unwrap_or_else(|| self.out_dir.join(default_name))
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn images_dir(&self) -> PathBuf {
        self.cfg
            .get_path("paths.images")
            .unwrap_or_else(|| self.cfg.base_dir().to_path_buf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Config {
        Config::parse(text, PathBuf::from("/base")).unwrap()
    }

    #[test]
    fn parses_keys_comments_and_blanks() {
        let c = cfg("# comment\n\npaths.corpus = corpus.jsonl\nseed = 7\n  train.hflip = true  \n");
        assert_eq!(c.get("paths.corpus"), Some("corpus.jsonl"));
        assert_eq!(c.get_u64("seed").unwrap(), Some(7));
        assert_eq!(c.get_bool("train.hflip").unwrap(), Some(true));
        assert_eq!(c.get("missing"), None);
    }

    #[test]
    fn later_assignment_wins() {
        let c = cfg("seed = 1\nseed = 2\n");
        assert_eq!(c.get_u64("seed").unwrap(), Some(2));
    }

    #[test]
    fn value_may_contain_equals() {
        let c = cfg("report.title = a = b\n");
        assert_eq!(c.get("report.title"), Some("a = b"));
    }

    #[test]
    fn rejects_bad_lines_and_values() {
        assert!(Config::parse("just words\n", PathBuf::new()).is_err());
        assert!(Config::parse("bad key = 1\n", PathBuf::new()).is_err());
        let c = cfg("seed = seven\n");
        assert!(matches!(c.get_u64("seed"), Err(Error::Parse(_))));
        assert!(matches!(c.get_date("seed"), Err(Error::Parse(_))));
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let c = cfg("paths.corpus = data/corpus.jsonl\npaths.abs = /tmp/x\n");
        assert_eq!(
            c.get_path("paths.corpus").unwrap(),
            PathBuf::from("/base/data/corpus.jsonl")
        );
        assert_eq!(c.get_path("paths.abs").unwrap(), PathBuf::from("/tmp/x"));
    }

    #[test]
    fn usize_list_handles_empty_and_spaces() {
        let c = cfg("model.hidden = 64, 32\nmodel.none =\n");
        assert_eq!(c.get_usize_list("model.hidden").unwrap(), Some(vec![64, 32]));
        assert_eq!(c.get_usize_list("model.none").unwrap(), Some(vec![]));
        assert!(c.get_usize_list("model.bad").unwrap().is_none());
    }

    #[test]
    fn ctx_flag_overrides_and_defaults() {
        let c = cfg("seed = 9\npaths.out_dir = run1\n");
        let ctx = Ctx::new(c.clone(), None, None).unwrap();
        assert_eq!(ctx.seed, 9);
        assert_eq!(ctx.out_dir, PathBuf::from("/base/run1"));

        let ctx = Ctx::new(c, Some(4), Some(PathBuf::from("/elsewhere"))).unwrap();
        assert_eq!(ctx.seed, 4);
        assert_eq!(ctx.out_dir, PathBuf::from("/elsewhere"));

        let bare = Ctx::new(cfg(""), None, None).unwrap();
        assert_eq!(bare.seed, 42);
        assert_eq!(bare.out_dir, PathBuf::from("/base/out"));
    }

    #[test]
    fn stage_seeds_differ_by_stage() {
        let ctx = Ctx::new(cfg("seed = 5"), None, None).unwrap();
        assert_ne!(ctx.stage_seed("sample"), ctx.stage_seed("split"));
        assert_eq!(ctx.stage_seed("sample"), ctx.stage_seed("sample"));
    }
}
