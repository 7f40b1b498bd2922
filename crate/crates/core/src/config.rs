//! Pipeline configuration.
//!
//! The text format is one `key = value` per line with `#` comments; keys
//! left out keep their defaults. `data/default.conf` lists every key with
//! its default value.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::{self, DEFAULT_MIN_CLUSTER_SIZE};
use crate::corpus::DEFAULT_MIN_NAME_COUNT;
use crate::error::{Error, Result};
use crate::generate::GenerationParams;
use crate::lattice::SlottingParams;
use crate::matching::MatchParams;
use crate::msa::ScoringParams;
use crate::scalar::Scalar;

/// The default configuration file shipped with the crate.
pub const DEFAULT_CONFIG_TEXT: &str = include_str!("../data/default.conf");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub ngram_orders: Vec<usize>,
    pub join_threshold: f64,
    pub min_cluster_size: usize,
    pub match_score: f64,
    pub gap_score: f64,
    pub mismatch_score: f64,
    pub backbone_fraction: f64,
    pub synonymy_threshold: f64,
    pub match_threshold: f64,
    pub min_support: usize,
    pub insert_score: f64,
    pub node_match_score: f64,
    pub accept_threshold: f64,
    pub max_outputs: usize,
    pub min_name_count: usize,
}

impl Default for Config {
    fn default() -> Self {
        let sim = cluster::SimilarityParams::<f64>::default();
        let scoring = ScoringParams::<f64>::default();
        let slotting = SlottingParams::<f64>::default();
        let matching = MatchParams::<f64>::default();
        let generation = GenerationParams::<f64>::default();
        Config {
            ngram_orders: sim.orders,
            join_threshold: sim.join_threshold,
            min_cluster_size: DEFAULT_MIN_CLUSTER_SIZE,
            match_score: scoring.match_score,
            gap_score: scoring.gap,
            mismatch_score: scoring.mismatch,
            backbone_fraction: slotting.backbone_fraction,
            synonymy_threshold: slotting.synonymy_threshold,
            match_threshold: matching.match_threshold,
            min_support: matching.min_support,
            insert_score: generation.insert_score,
            node_match_score: generation.node_match_score,
            accept_threshold: generation.accept_threshold,
            max_outputs: generation.max_outputs,
            min_name_count: DEFAULT_MIN_NAME_COUNT,
        }
    }
}

fn parse_value<T: std::str::FromStr>(source: &str, line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(source, line, format!("invalid value `{value}` for `{key}`")))
}

impl Config {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(source_name, line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let f = |v: &str| parse_value::<f64>(source_name, line, key, v);
            let u = |v: &str| parse_value::<usize>(source_name, line, key, v);
            match key {
                "ngram_orders" => {
                    c.ngram_orders = value
                        .split(',')
                        .map(|v| u(v.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "join_threshold" => c.join_threshold = f(value)?,
                "min_cluster_size" => c.min_cluster_size = u(value)?,
                "match_score" => c.match_score = f(value)?,
                "gap_score" => c.gap_score = f(value)?,
                "mismatch_score" => c.mismatch_score = f(value)?,
                "backbone_fraction" => c.backbone_fraction = f(value)?,
                "synonymy_threshold" => c.synonymy_threshold = f(value)?,
                "match_threshold" => c.match_threshold = f(value)?,
                "min_support" => c.min_support = u(value)?,
                "insert_score" => c.insert_score = f(value)?,
                "node_match_score" => c.node_match_score = f(value)?,
                "accept_threshold" => c.accept_threshold = f(value)?,
                "max_outputs" => c.max_outputs = u(value)?,
                "min_name_count" => c.min_name_count = u(value)?,
                other => return Err(Error::parse(source_name, line, format!("unknown key `{other}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The configuration in `data/default.conf`.
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_CONFIG_TEXT, "default.conf").expect("shipped config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            self.similarity::<f64>().validate(),
            self.slotting::<f64>().validate(),
            self.generation::<f64>().validate(),
        ];
        for c in checks {
            c.map_err(Error::Config)?;
        }
        if self.min_cluster_size < 2 {
            return Err(Error::Config("min_cluster_size must be at least 2".into()));
        }
        if self.min_support == 0 {
            return Err(Error::Config("min_support must be at least 1".into()));
        }
        Ok(())
    }

    /// Non-fatal remarks about unusual settings.
    pub fn warnings(&self) -> Vec<String> {
        self.scoring::<f64>().warnings()
    }

    pub fn similarity<S: Scalar>(&self) -> cluster::SimilarityParams<S> {
        cluster::SimilarityParams {
            orders: self.ngram_orders.clone(),
            join_threshold: S::from_config(self.join_threshold),
        }
    }

    pub fn scoring<S: Scalar>(&self) -> ScoringParams<S> {
        ScoringParams {
            match_score: S::from_config(self.match_score),
            gap: S::from_config(self.gap_score),
            mismatch: S::from_config(self.mismatch_score),
        }
    }

    pub fn slotting<S: Scalar>(&self) -> SlottingParams<S> {
        SlottingParams {
            backbone_fraction: S::from_config(self.backbone_fraction),
            synonymy_threshold: S::from_config(self.synonymy_threshold),
        }
    }

    pub fn matching<S: Scalar>(&self) -> MatchParams<S> {
        MatchParams {
            match_threshold: S::from_config(self.match_threshold),
            min_support: self.min_support,
        }
    }

    pub fn generation<S: Scalar>(&self) -> GenerationParams<S> {
        GenerationParams {
            insert_score: S::from_config(self.insert_score),
            node_match_score: S::from_config(self.node_match_score),
            accept_threshold: S::from_config(self.accept_threshold),
            max_outputs: self.max_outputs,
        }
    }

    /// Renders the configuration in the file format.
    pub fn to_text(&self) -> String {
        let orders: Vec<String> = self.ngram_orders.iter().map(|o| o.to_string()).collect();
        let mut out = String::new();
        let _ = writeln!(out, "ngram_orders = {}", orders.join(","));
        let fields: [(&str, String); 14] = [
            ("join_threshold", self.join_threshold.to_string()),
            ("min_cluster_size", self.min_cluster_size.to_string()),
            ("match_score", self.match_score.to_string()),
            ("gap_score", self.gap_score.to_string()),
            ("mismatch_score", self.mismatch_score.to_string()),
            ("backbone_fraction", self.backbone_fraction.to_string()),
            ("synonymy_threshold", self.synonymy_threshold.to_string()),
            ("match_threshold", self.match_threshold.to_string()),
            ("min_support", self.min_support.to_string()),
            ("insert_score", self.insert_score.to_string()),
            ("node_match_score", self.node_match_score.to_string()),
            ("accept_threshold", self.accept_threshold.to_string()),
            ("max_outputs", self.max_outputs.to_string()),
            ("min_name_count", self.min_name_count.to_string()),
        ];
        for (k, v) in fields {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
