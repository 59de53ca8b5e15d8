//! Experiment configuration files.
//!
//! ```toml
//! recipe = "stable_clock"
//! seed = 20240611
//!
//! [run]                      # optional
//! workers = 8                # default: available parallelism
//! out = "results/stable"     # default: results/<recipe>
//! overwrite = false
//! calibration_cache = "cache" # default: <out>/calibration-cache
//!
//! [experiment]               # recipe parameters; omitted keys take defaults
//! scales = [1000, 10000, 100000]
//! replicas = 2000
//! [experiment.trap]
//! kind = "pareto"
//! alpha = 0.5
//! ```
//!
//! `rtrw list-recipes` prints every recipe's `[experiment]` table with all
//! defaults. Unknown keys anywhere are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use rtrw_core::verify::{RecipeConfig, RECIPE_NAMES};
use serde::de::{self, DeserializeSeed, Deserializer, IgnoredAny, MapAccess, Visitor};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub overwrite: bool,
    pub calibration_cache: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub run: RunSection,
    pub experiment: RecipeConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}:\n{message}")]
    Schema { path: PathBuf, message: String },
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| ConfigError::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Parses a config document; errors carry the line and the offending key.
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::Deserializer::new(text).deserialize_map(FileVisitor)
    }
}

struct ExperimentSeed<'a>(&'a str);

impl<'de> DeserializeSeed<'de> for ExperimentSeed<'_> {
    type Value = RecipeConfig;

    fn deserialize<D: Deserializer<'de>>(self, deserializer: D) -> Result<RecipeConfig, D::Error> {
        RecipeConfig::deserialize_named(self.0, deserializer)
    }
}

struct FileVisitor;

const TOP_LEVEL: &[&str] = &["recipe", "seed", "run", "experiment"];

impl<'de> Visitor<'de> for FileVisitor {
    type Value = ConfigFile;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an experiment config with `recipe`, `seed`, [run] and [experiment]")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<ConfigFile, A::Error> {
        let mut recipe: Option<String> = None;
        let mut seed = None;
        let mut run = None;
        let mut experiment = None;
        // TOML places top-level keys before any table, so `recipe` is known
        // by the time [experiment] arrives unless it is written inline.
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "recipe" => {
                    let name: String = map.next_value()?;
                    if !RECIPE_NAMES.contains(&name.as_str()) {
                        return Err(de::Error::custom(format!(
                            "unknown recipe `{name}`; expected one of {}",
                            RECIPE_NAMES.join(", ")
                        )));
                    }
                    recipe = Some(name);
                }
                "seed" => seed = Some(map.next_value::<u64>()?),
                "run" => run = Some(map.next_value::<RunSection>()?),
                "experiment" => match &recipe {
                    Some(name) => experiment = Some(map.next_value_seed(ExperimentSeed(name))?),
                    None => {
                        map.next_value::<IgnoredAny>()?;
                        return Err(de::Error::custom("`recipe` must be set before [experiment]"));
                    }
                },
                other => return Err(de::Error::unknown_field(other, TOP_LEVEL)),
            }
        }
        let recipe = recipe.ok_or_else(|| de::Error::missing_field("recipe"))?;
        let experiment = match experiment {
            Some(e) => e,
            None => RecipeConfig::default_for(&recipe).expect("validated name"),
        };
        Ok(ConfigFile {
            seed,
            run: run.unwrap_or_default(),
            experiment,
        })
    }
}

/// A ready-to-edit config for `recipe` with every parameter at its default.
pub fn template(recipe: &RecipeConfig) -> String {
    #[derive(Serialize)]
    struct Template<'a> {
        recipe: &'a str,
        experiment: &'a RecipeConfig,
    }
    toml::to_string(&Template {
        recipe: recipe.name(),
        experiment: recipe,
    })
    .expect("recipe configs serialize to TOML")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rtrw_core::environment::TrapLaw;
    use rtrw_core::verify::LinearLimitConfig;

    #[test]
    fn minimal_file_takes_recipe_defaults() {
        let cfg = ConfigFile::parse("recipe = \"linear_limit\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.run, RunSection::default());
        assert_eq!(cfg.experiment, RecipeConfig::default_for("linear_limit").unwrap());
    }

    #[test]
    fn experiment_overrides_merge_with_defaults() {
        let text = r#"
recipe = "linear_limit"
seed = 1

[run]
workers = 2
out = "x"

[experiment]
scales = [10, 100]
[experiment.trap]
kind = "dirac"
value = 1.0
"#;
        let cfg = ConfigFile::parse(text).unwrap();
        assert_eq!(cfg.run.workers, Some(2));
        assert_eq!(
            cfg.experiment,
            RecipeConfig::LinearLimit(LinearLimitConfig {
                scales: vec![10, 100],
                trap: TrapLaw::Dirac { value: 1.0 },
                ..Default::default()
            })
        );
    }

    #[test]
    fn unknown_keys_report_line_and_name() {
        let text = "recipe = \"linear_limit\"\nseed = 1\n\n[experiment]\nscales = [10]\nreplica = 5\n";
        let msg = ConfigFile::parse(text).unwrap_err().to_string();
        assert!(msg.contains("replica"), "{msg}");
        assert!(msg.contains("line 6"), "{msg}");

        let msg = ConfigFile::parse("recipe = \"linear_limit\"\nsed = 1\n").unwrap_err().to_string();
        assert!(msg.contains("sed"), "{msg}");
        let msg = ConfigFile::parse("recipe = \"linear_limit\"\n[run]\nworker = 1\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("worker"), "{msg}");
    }

    #[test]
    fn unknown_recipe_and_missing_recipe_are_rejected() {
        let msg = ConfigFile::parse("recipe = \"nope\"\n").unwrap_err().to_string();
        assert!(msg.contains("stable_clock"), "{msg}");
        let msg = ConfigFile::parse("seed = 1\n").unwrap_err().to_string();
        assert!(msg.contains("recipe"), "{msg}");
    }

    #[test]
    fn templates_parse_back_to_the_defaults() {
        for name in RECIPE_NAMES {
            let defaults = RecipeConfig::default_for(name).unwrap();
            let text = template(&defaults);
            let cfg = ConfigFile::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
            assert_eq!(cfg.experiment, defaults);
        }
    }
}
