//! `--graph` grammar: `cycle:<n>`, `complete:<n>` or `file:<path>`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use falqon::{Error, Graph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Cycle(usize),
    Complete(usize),
    File(PathBuf),
}

impl GraphSpec {
    pub fn load(&self) -> Result<Graph, Error> {
        match self {
            GraphSpec::Cycle(n) => Graph::cycle(*n),
            GraphSpec::Complete(n) => Graph::complete(*n),
            GraphSpec::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Graph::parse_edge_list(&text)
            }
        }
    }
}

impl FromStr for GraphSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| format!("expected cycle:<n>, complete:<n> or file:<path>, got {s:?}"))?;
        let size = || arg.parse::<usize>().map_err(|_| format!("bad vertex count {arg:?}"));
        match kind {
            "cycle" => Ok(GraphSpec::Cycle(size()?)),
            "complete" => Ok(GraphSpec::Complete(size()?)),
            "file" if !arg.is_empty() => Ok(GraphSpec::File(PathBuf::from(arg))),
            "file" => Err("file: needs a path".into()),
            _ => Err(format!("unknown graph kind {kind:?}")),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Cycle(n) => write!(f, "cycle:{n}"),
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand() {
        assert_eq!("cycle:4".parse::<GraphSpec>().unwrap(), GraphSpec::Cycle(4));
        assert_eq!("complete:6".parse::<GraphSpec>().unwrap(), GraphSpec::Complete(6));
        assert_eq!(
            "file:g.txt".parse::<GraphSpec>().unwrap(),
            GraphSpec::File("g.txt".into())
        );
        for bad in ["cycle", "cycle:x", "ring:4", "file:", "complete:-1"] {
            assert!(bad.parse::<GraphSpec>().is_err(), "{bad}");
        }
        assert_eq!(GraphSpec::Complete(6).to_string(), "complete:6");
    }

    #[test]
    fn load_validates_size() {
        assert!(GraphSpec::Cycle(2).load().is_err());
        assert_eq!(GraphSpec::Cycle(4).load().unwrap().num_edges(), 4);
    }
}
