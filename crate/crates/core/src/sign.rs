use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Identity of a static marshalling sign.
///
/// The three built-in signs cover the negotiation vocabulary; `Other` lets a
/// database carry additional signs by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignId {
    AttentionGained,
    Yes,
    No,
    Other(String),
}

impl SignId {
    pub const BUILTIN: [SignId; 3] = [SignId::AttentionGained, SignId::Yes, SignId::No];

    pub fn name(&self) -> &str {
        match self {
            SignId::AttentionGained => "AttentionGained",
            SignId::Yes => "Yes",
            SignId::No => "No",
            SignId::Other(name) => name,
        }
    }

    /// Lowercase form used in corpus file names.
    pub fn slug(&self) -> String {
        self.name().to_ascii_lowercase()
    }
}

impl fmt::Display for SignId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SignId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == ',') {
            return Err(Error::invalid(format!("bad sign name {s:?}")));
        }
        Ok(match s.to_ascii_lowercase().as_str() {
            "attentiongained" | "attention_gained" | "attention" => SignId::AttentionGained,
            "yes" => SignId::Yes,
            "no" => SignId::No,
            _ => SignId::Other(s.to_string()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_builtin_case_insensitive() {
        assert_eq!("YES".parse::<SignId>().unwrap(), SignId::Yes);
        assert_eq!("no".parse::<SignId>().unwrap(), SignId::No);
        assert_eq!(
            "attention".parse::<SignId>().unwrap(),
            SignId::AttentionGained
        );
        assert_eq!(
            "Wave".parse::<SignId>().unwrap(),
            SignId::Other("Wave".into())
        );
    }

    #[test]
    fn names_round_trip() {
        for s in SignId::BUILTIN {
            assert_eq!(s.name().parse::<SignId>().unwrap(), s);
        }
        assert!("two words".parse::<SignId>().is_err());
        assert!("".parse::<SignId>().is_err());
    }
}
