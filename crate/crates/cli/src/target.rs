use std::path::Path;

use anyhow::{bail, Context, Result};
use cardshuffle::graphs::{Graph, GraphFile, UndirectedGraph};

/// What a command operates on: a graph file or a built-in cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    File(String),
    Cycle(usize),
    Dihedral(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProtocolKind {
    /// General graph shuffle protocol (any graph).
    General,
    /// 3n-card protocol for the directed cycle (`cycle N` targets).
    Cycle,
    /// 3n-card protocol for the undirected cycle (`dihedral N` targets).
    Dihedral,
}

impl Target {
    /// `["cycle", "N"]`, `["dihedral", "N"]` or `[path]`.
    pub fn parse(words: &[String]) -> Result<Self> {
        let size = |w: &str, min: usize| -> Result<usize> {
            let n: usize = w.parse().with_context(|| format!("invalid cycle size {w:?}"))?;
            if n < min {
                bail!("cycle size must be at least {min}");
            }
            Ok(n)
        };
        match words {
            [kind, n] if kind == "cycle" => Ok(Target::Cycle(size(n, 1)?)),
            [kind, n] if kind == "dihedral" => Ok(Target::Dihedral(size(n, 3)?)),
            [path] => Ok(Target::File(path.clone())),
            _ => bail!("expected a graph file, `cycle N` or `dihedral N`"),
        }
    }

    pub fn graph(&self) -> Result<Graph> {
        match self {
            Target::File(path) => {
                let text = std::fs::read_to_string(Path::new(path)).with_context(|| format!("cannot read {path}"))?;
                let file: GraphFile = text.parse().with_context(|| format!("in {path}"))?;
                Ok(file.to_graph()?)
            }
            Target::Cycle(n) => Ok(Graph::directed_cycle(*n)?),
            Target::Dihedral(n) => Ok(UndirectedGraph::cycle(*n)?.doubled()),
        }
    }

    pub fn default_protocol(&self) -> ProtocolKind {
        match self {
            Target::File(_) => ProtocolKind::General,
            Target::Cycle(_) => ProtocolKind::Cycle,
            Target::Dihedral(_) => ProtocolKind::Dihedral,
        }
    }

    /// Checks that `kind` applies to this target.
    pub fn check_protocol(&self, kind: ProtocolKind) -> Result<()> {
        match (kind, self) {
            (ProtocolKind::General, _) | (ProtocolKind::Cycle, Target::Cycle(_)) | (ProtocolKind::Dihedral, Target::Dihedral(_)) => Ok(()),
            (ProtocolKind::Cycle, _) => bail!("the cycle protocol needs a `cycle N` target"),
            (ProtocolKind::Dihedral, _) => bail!("the dihedral protocol needs a `dihedral N` target"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn parses_targets() {
        assert_eq!(Target::parse(&words("cycle 4")).unwrap(), Target::Cycle(4));
        assert_eq!(Target::parse(&words("dihedral 5")).unwrap(), Target::Dihedral(5));
        assert_eq!(Target::parse(&words("g.graph")).unwrap(), Target::File("g.graph".into()));
        assert!(Target::parse(&words("dihedral 2")).is_err());
        assert!(Target::parse(&words("cycle x")).is_err());
        assert!(Target::parse(&words("a b c")).is_err());
    }

    #[test]
    fn protocol_applicability() {
        assert!(Target::Cycle(3).check_protocol(ProtocolKind::General).is_ok());
        assert!(Target::Cycle(3).check_protocol(ProtocolKind::Dihedral).is_err());
        assert!(Target::File("g".into()).check_protocol(ProtocolKind::Cycle).is_err());
    }
}
