//! Named hyperparameter presets, one per benchmark dataset.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::extraction::TemplateLanguage;
use crate::generation::AnswerStyle;
use crate::retrieval::{RetrievalParams, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    HotpotQa,
    Musique,
    #[serde(rename = "2wiki")]
    TwoWiki,
    Crud1,
    Crud2,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::HotpotQa,
        Preset::Musique,
        Preset::TwoWiki,
        Preset::Crud1,
        Preset::Crud2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::HotpotQa => "hotpotqa",
            Preset::Musique => "musique",
            Preset::TwoWiki => "2wiki",
            Preset::Crud1 => "crud1",
            Preset::Crud2 => "crud2",
        }
    }

    pub fn profile(self) -> Profile {
        let (k, n, t, lambda) = match self {
            Preset::HotpotQa => (2, 3, 20, 0.1),
            Preset::Musique => (3, 3, 30, 0.1),
            Preset::TwoWiki => (3, 3, 30, 0.1),
            Preset::Crud1 => (1, 3, 10, 0.4),
            Preset::Crud2 => (2, 3, 15, 0.3),
        };
        let chinese = matches!(self, Preset::Crud1 | Preset::Crud2);
        Profile {
            k,
            n,
            t,
            lambda,
            strategy: Strategy::OneHop,
            language: if chinese {
                TemplateLanguage::Chinese
            } else {
                TemplateLanguage::English
            },
            style: if chinese {
                AnswerStyle::LongForm
            } else {
                AnswerStyle::ShortForm
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPreset(pub String);

impl fmt::Display for UnknownPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        write!(f, "unknown preset {:?} (expected one of {})", self.0, names.join(", "))
    }
}

impl std::error::Error for UnknownPreset {}

impl FromStr for Preset {
    type Err = UnknownPreset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == lower)
            .ok_or_else(|| UnknownPreset(s.to_string()))
    }
}

/// Everything a preset pins down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub k: usize,
    pub n: usize,
    pub t: usize,
    pub lambda: f64,
    pub strategy: Strategy,
    pub language: TemplateLanguage,
    pub style: AnswerStyle,
}

impl Default for Profile {
    /// Same values as the `hotpotqa` preset.
    fn default() -> Self {
        Preset::HotpotQa.profile()
    }
}

impl Profile {
    pub fn retrieval(&self) -> RetrievalParams {
        RetrievalParams {
            n: self.n,
            t: self.t,
            lambda: self.lambda,
            strategy: self.strategy,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_values() {
        let rows: Vec<(&str, usize, usize, usize, f64)> = Preset::ALL
            .iter()
            .map(|p| {
                let q = p.profile();
                (p.name(), q.k, q.n, q.t, q.lambda)
            })
            .collect();
        assert_eq!(
            rows,
            vec![
                ("hotpotqa", 2, 3, 20, 0.1),
                ("musique", 3, 3, 30, 0.1),
                ("2wiki", 3, 3, 30, 0.1),
                ("crud1", 1, 3, 10, 0.4),
                ("crud2", 2, 3, 15, 0.3),
            ]
        );
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            assert_eq!(serde_json::to_string(&p).unwrap(), format!("\"{}\"", p.name()));
        }
        assert_eq!("HotpotQA".parse::<Preset>().unwrap(), Preset::HotpotQa);
        assert!("squad".parse::<Preset>().is_err());
    }

    #[test]
    fn default_is_hotpotqa() {
        let d = Profile::default();
        assert_eq!((d.k, d.n, d.t, d.lambda), (2, 3, 20, 0.1));
        assert_eq!(d.strategy, Strategy::OneHop);
        assert_eq!(Preset::Crud1.profile().language, TemplateLanguage::Chinese);
    }
}
