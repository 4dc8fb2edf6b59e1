//! Reader for the NODES, LINKS and DEMANDS sections of the SNDlib native
//! text format.
//!
//! ```text
//! NODES (
//!   <node_id> ( <longitude> <latitude> )
//! )
//! LINKS (
//!   <link_id> ( <source> <target> ) <pre_cap> <pre_cap_cost> <routing_cost> <setup_cost> ( {<capacity> <cost>}* )
//! )
//! DEMANDS (
//!   <demand_id> ( <source> <target> ) <routing_unit> <value> <max_path_length>
//! )
//! ```
//!
//! Every other section is skipped with a warning.

use super::{build_scenarios, Demand, Edge, Module, NetworkInstance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Word(&'a str),
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    for line in text.lines() {
        let line = line.trim_start();
        if line.starts_with('?') {
            continue;
        }
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        let mut start = None;
        for (i, c) in line.char_indices() {
            match c {
                '(' | ')' => {
                    if let Some(s) = start.take() {
                        tokens.push(Token::Word(&line[s..i]));
                    }
                    tokens.push(if c == '(' { Token::Open } else { Token::Close });
                }
                c if c.is_whitespace() => {
                    if let Some(s) = start.take() {
                        tokens.push(Token::Word(&line[s..i]));
                    }
                }
                _ => {
                    if start.is_none() {
                        start = Some(i);
                    }
                }
            }
        }
        if let Some(s) = start {
            tokens.push(Token::Word(&line[s..]));
        }
    }
    tokens
}

struct Cursor<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn word(&mut self, what: &str) -> Result<&'a str> {
        match self.next() {
            Some(Token::Word(w)) => Ok(w),
            other => Err(Error::Schema(format!("expected {what}, found {other:?}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64> {
        let w = self.word(what)?;
        w.parse()
            .map_err(|_| Error::Schema(format!("expected number for {what}, found {w:?}")))
    }

    fn expect(&mut self, tok: Token<'static>) -> Result<()> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(Error::Schema(format!("expected {tok:?}, found {other:?}"))),
        }
    }

    fn skip_block(&mut self) -> Result<()> {
        self.expect(Token::Open)?;
        let mut depth = 1;
        while depth > 0 {
            match self.next() {
                Some(Token::Open) => depth += 1,
                Some(Token::Close) => depth -= 1,
                Some(_) => {}
                None => return Err(Error::Schema("unbalanced parentheses".into())),
            }
        }
        Ok(())
    }
}

struct RawLink {
    id: String,
    source: String,
    target: String,
    preinstalled: f64,
    modules: Vec<Module>,
}

struct RawDemand {
    id: String,
    source: String,
    target: String,
    value: f64,
}

/// Parses an SNDlib document, logging any warnings.
pub fn parse_sndlib(text: &str) -> Result<NetworkInstance> {
    let (inst, warnings) = parse_sndlib_with_warnings(text)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(inst)
}

pub fn parse_sndlib_with_warnings(text: &str) -> Result<(NetworkInstance, Vec<String>)> {
    let name = text
        .lines()
        .find_map(|l| l.trim().strip_prefix("# network").map(|s| s.trim().to_string()))
        .filter(|s| !s.is_empty())
        .unwrap_or_default();

    let mut cur = Cursor {
        tokens: tokenize(text),
        pos: 0,
    };
    let mut warnings = Vec::new();
    let mut nodes: Option<Vec<String>> = None;
    let mut links: Option<Vec<RawLink>> = None;
    let mut demands: Option<Vec<RawDemand>> = None;

    while let Some(tok) = cur.next() {
        let section = match tok {
            Token::Word(w) => w,
            other => return Err(Error::Schema(format!("expected section name, found {other:?}"))),
        };
        match section {
            "NODES" => {
                cur.expect(Token::Open)?;
                let mut list = Vec::new();
                while let Some(Token::Word(_)) = cur.peek() {
                    list.push(cur.word("node id")?.to_string());
                    if let Some(Token::Open) = cur.peek() {
                        cur.skip_block()?;
                    }
                }
                cur.expect(Token::Close)?;
                nodes = Some(list);
            }
            "LINKS" => {
                cur.expect(Token::Open)?;
                let mut list = Vec::new();
                while let Some(Token::Word(_)) = cur.peek() {
                    let id = cur.word("link id")?.to_string();
                    cur.expect(Token::Open)?;
                    let source = cur.word("link source")?.to_string();
                    let target = cur.word("link target")?.to_string();
                    cur.expect(Token::Close)?;
                    let preinstalled = cur.number("preinstalled capacity")?;
                    let _pre_cost = cur.number("preinstalled capacity cost")?;
                    let _routing = cur.number("routing cost")?;
                    let _setup = cur.number("setup cost")?;
                    cur.expect(Token::Open)?;
                    let mut modules = Vec::new();
                    while let Some(Token::Word(_)) = cur.peek() {
                        let capacity = cur.number("module capacity")?;
                        let cost = cur.number("module cost")?;
                        modules.push(Module { capacity, cost });
                    }
                    cur.expect(Token::Close)?;
                    list.push(RawLink {
                        id,
                        source,
                        target,
                        preinstalled,
                        modules,
                    });
                }
                cur.expect(Token::Close)?;
                links = Some(list);
            }
            "DEMANDS" => {
                cur.expect(Token::Open)?;
                let mut list = Vec::new();
                while let Some(Token::Word(_)) = cur.peek() {
                    let id = cur.word("demand id")?.to_string();
                    cur.expect(Token::Open)?;
                    let source = cur.word("demand source")?.to_string();
                    let target = cur.word("demand target")?.to_string();
                    cur.expect(Token::Close)?;
                    let _unit = cur.word("routing unit")?;
                    let value = cur.number("demand value")?;
                    let _max_len = cur.word("max path length")?;
                    list.push(RawDemand {
                        id,
                        source,
                        target,
                        value,
                    });
                }
                cur.expect(Token::Close)?;
                demands = Some(list);
            }
            other => {
                warnings.push(format!("skipping unsupported section {other}"));
                cur.skip_block()?;
            }
        }
    }

    let nodes = nodes.ok_or_else(|| Error::Schema("missing NODES section".into()))?;
    let links = links.ok_or_else(|| Error::Schema("missing LINKS section".into()))?;
    let raw_demands = demands.ok_or_else(|| Error::Schema("missing DEMANDS section".into()))?;

    let node_of = |id: &str, entity: String| {
        nodes
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| Error::validation(entity, format!("unknown node {id}")))
    };
    let mut edges = Vec::with_capacity(links.len());
    for l in links {
        let entity = format!("edge {}", l.id);
        edges.push(Edge {
            u: node_of(&l.source, entity.clone())?,
            v: node_of(&l.target, entity)?,
            id: l.id,
            preinstalled: l.preinstalled,
            modules: l.modules,
        });
    }
    let mut demand_list = Vec::with_capacity(raw_demands.len());
    for d in raw_demands {
        if d.value <= 0.0 {
            warnings.push(format!("demand {} has value {} and was skipped", d.id, d.value));
            continue;
        }
        let entity = format!("demand {}", d.id);
        demand_list.push(Demand {
            source: node_of(&d.source, entity.clone())?,
            target: node_of(&d.target, entity)?,
            value: d.value,
        });
    }

    let mut inst = NetworkInstance {
        name,
        nodes,
        edges,
        demands: demand_list,
        scenarios: Vec::new(),
    };
    inst.validate()?;
    let dropped = build_scenarios(&mut inst);
    if dropped > 0 {
        warnings.push(format!(
            "{}: {dropped} N-1 scenarios disconnect a demand and were removed",
            inst.name
        ));
    }
    Ok((inst, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "?SNDlib native format; type: network; version: 1.0
# network mini

META (
  granularity = 1year
)

NODES (
  A ( 0.0 0.0 )
  B ( 1.0 0.0 )
  C ( 0.5 1.0 )
)

# <link_id> ( <source> <target> ) <pre_installed_capacity> ...
LINKS (
  L1 ( A B ) 0.00 0.00 0.00 0.00 ( 10.00 5.00 40.00 15.00 )
  L2 ( B C ) 2.50 0.00 0.00 0.00 ( 10.00 6.00 )
  L3 ( A C ) 0.00 0.00 0.00 0.00 ( 10.00 7.00 )
)

DEMANDS (
  D1 ( A B ) 1 3.00 UNLIMITED
  D2 ( B C ) 1 0.00 UNLIMITED
)

ADMISSIBLE_PATHS (
  D1 ( P1 ( L1 ) )
)
";

    #[test]
    fn minimal_document() {
        let (inst, warnings) = parse_sndlib_with_warnings(MINIMAL).unwrap();
        assert_eq!(inst.name, "mini");
        assert_eq!(inst.nodes, ["A", "B", "C"]);
        assert_eq!(inst.edges.len(), 3);
        assert_eq!(
            inst.edges[0].modules,
            vec![
                Module { capacity: 10.0, cost: 5.0 },
                Module { capacity: 40.0, cost: 15.0 }
            ]
        );
        assert_eq!(inst.edges[1].preinstalled, 2.5);
        assert_eq!(inst.edges[2].modules, vec![Module { capacity: 10.0, cost: 7.0 }]);
        assert_eq!(inst.demands.len(), 1);
        assert_eq!(inst.scenarios.len(), 3);
        assert!(warnings.iter().any(|w| w.contains("ADMISSIBLE_PATHS")));
        assert!(warnings.iter().any(|w| w.contains("D2")));
    }

    #[test]
    fn missing_demands_is_schema_error() {
        let text = MINIMAL.split("DEMANDS").next().unwrap();
        assert!(matches!(parse_sndlib(text), Err(Error::Schema(_))));
    }

    #[test]
    fn truncated_link_is_schema_error() {
        let text = "NODES ( A ( 0 0 ) B ( 0 0 ) ) LINKS ( L1 ( A B ) 0 0 ) DEMANDS ( )";
        assert!(matches!(parse_sndlib(text), Err(Error::Schema(_))));
    }
}
