//! Parser for the BIF subset used by the discrete-network fixtures.
//!
//! Supported grammar:
//!
//! ```text
//! file        := network (variable | probability)*
//! network     := "network" IDENT "{" property* "}"
//! variable    := "variable" IDENT "{"
//!                  "type" "discrete" "[" INT "]" "{" IDENT ("," IDENT)* "}" ";"
//!                  property*
//!                "}"
//! probability := "probability" "(" IDENT ("|" IDENT ("," IDENT)*)? ")" "{"
//!                  ( "table" NUM ("," NUM)* ";" )
//!                | ( "(" IDENT ("," IDENT)* ")" NUM ("," NUM)* ";" )+
//!                "}"
//! property    := "property" ... ";"
//! ```
//!
//! `table` rows with parents enumerate parent configurations row-major with
//! the last listed parent varying fastest. Every probability row must sum to
//! one within 1e-6; rows are renormalized exactly after the check.

use std::collections::HashMap;

use thiserror::Error;

use crate::bayesnet::{Cpt, DiscreteBayesNet, NetError};
use crate::graph::{Dag, GraphError};

const BIF_ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BifError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: unknown variable `{name}`")]
    UnknownVariable {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: unknown state `{state}` for variable `{variable}`")]
    UnknownState {
        line: usize,
        col: usize,
        variable: String,
        state: String,
    },
    #[error("{line}:{col}: probability row for `{variable}` sums to {sum}, expected 1")]
    RowNotNormalized {
        line: usize,
        col: usize,
        variable: String,
        sum: f64,
    },
    #[error("{line}:{col}: duplicate declaration of `{name}`")]
    Duplicate {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("missing probability block for `{0}`")]
    MissingProbability(String),
    #[error("probability block for `{variable}` is missing parent configuration {config:?}")]
    MissingConfiguration {
        variable: String,
        config: Vec<String>,
    },
    #[error("network structure invalid: {0}")]
    Graph(#[from] GraphError),
    #[error("network tables invalid: {0}")]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, BifError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' {
                    word.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(word),
                line: start_line,
                col: start_col,
            });
        } else if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' {
            let mut num = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() || "+-.eE".contains(c) {
                    num.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let value = num.parse::<f64>().map_err(|_| BifError::Syntax {
                line: start_line,
                col: start_col,
                message: format!("malformed number `{num}`"),
            })?;
            out.push(Token {
                tok: Tok::Number(value),
                line: start_line,
                col: start_col,
            });
        } else if "{}()[],;|".contains(c) {
            chars.next();
            col += 1;
            out.push(Token {
                tok: Tok::Punct(c),
                line: start_line,
                col: start_col,
            });
        } else {
            return Err(BifError::Syntax {
                line,
                col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek()
            .map(|t| (t.line, t.col))
            .or_else(|| self.tokens.last().map(|t| (t.line, t.col)))
            .unwrap_or((1, 1))
    }

    fn err(&self, message: impl Into<String>) -> BifError {
        let (line, col) = self.here();
        BifError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn next(&mut self) -> Result<Token, BifError> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_punct(&mut self, c: char) -> Result<Token, BifError> {
        let t = self.next()?;
        if t.tok == Tok::Punct(c) {
            Ok(t)
        } else {
            Err(BifError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected `{c}`, found {}", describe(&t.tok)),
            })
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Token), BifError> {
        let t = self.next()?;
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(BifError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected identifier, found {}", describe(other)),
            }),
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<(), BifError> {
        let (got, t) = self.expect_ident()?;
        if got == word {
            Ok(())
        } else {
            Err(BifError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected `{word}`, found `{got}`"),
            })
        }
    }

    fn expect_number(&mut self) -> Result<(f64, Token), BifError> {
        let t = self.next()?;
        match t.tok {
            Tok::Number(v) => Ok((v, t)),
            ref other => Err(BifError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected number, found {}", describe(other)),
            }),
        }
    }

    fn at_punct(&self, c: char) -> bool {
        matches!(self.peek(), Some(t) if t.tok == Tok::Punct(c))
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Some(t) if matches!(&t.tok, Tok::Ident(s) if s == word))
    }

    /// Skips a `property ... ;` statement.
    fn skip_property(&mut self) -> Result<(), BifError> {
        self.expect_keyword("property")?;
        loop {
            let t = self.next()?;
            if t.tok == Tok::Punct(';') {
                return Ok(());
            }
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(v) => format!("number {v}"),
        Tok::Punct(c) => format!("`{c}`"),
    }
}

struct VariableDecl {
    name: String,
    states: Vec<String>,
}

struct ProbabilityDecl {
    child: usize,
    parents: Vec<usize>,
    /// Row per parent configuration in header order (last parent fastest).
    rows: Vec<Vec<f64>>,
}

/// Parses BIF text into a discrete network.
pub fn parse_bif(text: &str) -> Result<DiscreteBayesNet, BifError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };

    p.expect_keyword("network")?;
    let _ = p.expect_ident()?;
    p.expect_punct('{')?;
    while !p.at_punct('}') {
        if p.at_ident("property") {
            p.skip_property()?;
        } else {
            return Err(p.err("expected `property` or `}` in network block"));
        }
    }
    p.expect_punct('}')?;

    let mut variables: Vec<VariableDecl> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut blocks: Vec<Option<ProbabilityDecl>> = Vec::new();

    while p.peek().is_some() {
        if p.at_ident("variable") {
            let decl = parse_variable(&mut p)?;
            if index.contains_key(&decl.name) {
                let (line, col) = p.here();
                return Err(BifError::Duplicate {
                    line,
                    col,
                    name: decl.name,
                });
            }
            index.insert(decl.name.clone(), variables.len());
            variables.push(decl);
            blocks.push(None);
        } else if p.at_ident("probability") {
            let start = p.here();
            let decl = parse_probability(&mut p, &variables, &index)?;
            let slot = &mut blocks[decl.child];
            if slot.is_some() {
                return Err(BifError::Duplicate {
                    line: start.0,
                    col: start.1,
                    name: variables[decl.child].name.clone(),
                });
            }
            *slot = Some(decl);
        } else {
            return Err(p.err("expected `variable` or `probability`"));
        }
    }

    build_net(variables, blocks)
}

fn parse_variable(p: &mut Parser) -> Result<VariableDecl, BifError> {
    p.expect_keyword("variable")?;
    let (name, _) = p.expect_ident()?;
    p.expect_punct('{')?;
    p.expect_keyword("type")?;
    p.expect_keyword("discrete")?;
    p.expect_punct('[')?;
    let (count, count_tok) = p.expect_number()?;
    p.expect_punct(']')?;
    p.expect_punct('{')?;
    let mut states = Vec::new();
    loop {
        let (state, _) = p.expect_ident()?;
        states.push(state);
        if p.at_punct(',') {
            p.expect_punct(',')?;
        } else {
            break;
        }
    }
    p.expect_punct('}')?;
    p.expect_punct(';')?;
    while p.at_ident("property") {
        p.skip_property()?;
    }
    p.expect_punct('}')?;
    if states.len() != count as usize {
        return Err(BifError::Syntax {
            line: count_tok.line,
            col: count_tok.col,
            message: format!(
                "variable `{name}` declares {count} states but lists {}",
                states.len()
            ),
        });
    }
    Ok(VariableDecl { name, states })
}

fn resolve(
    name: &str,
    tok: &Token,
    index: &HashMap<String, usize>,
) -> Result<usize, BifError> {
    index
        .get(name)
        .copied()
        .ok_or_else(|| BifError::UnknownVariable {
            line: tok.line,
            col: tok.col,
            name: name.to_string(),
        })
}

fn parse_probability(
    p: &mut Parser,
    variables: &[VariableDecl],
    index: &HashMap<String, usize>,
) -> Result<ProbabilityDecl, BifError> {
    p.expect_keyword("probability")?;
    p.expect_punct('(')?;
    let (child_name, child_tok) = p.expect_ident()?;
    let child = resolve(&child_name, &child_tok, index)?;
    let mut parents = Vec::new();
    if p.at_punct('|') {
        p.expect_punct('|')?;
        loop {
            let (name, tok) = p.expect_ident()?;
            parents.push(resolve(&name, &tok, index)?);
            if p.at_punct(',') {
                p.expect_punct(',')?;
            } else {
                break;
            }
        }
    }
    p.expect_punct(')')?;
    p.expect_punct('{')?;

    let child_card = variables[child].states.len();
    let parent_cards: Vec<usize> = parents.iter().map(|&q| variables[q].states.len()).collect();
    let row_count: usize = parent_cards.iter().product();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; row_count];

    if p.at_ident("table") {
        p.expect_keyword("table")?;
        let start = p.here();
        let mut values = Vec::new();
        loop {
            let (v, _) = p.expect_number()?;
            values.push(v);
            if p.at_punct(',') {
                p.expect_punct(',')?;
            } else {
                break;
            }
        }
        p.expect_punct(';')?;
        if values.len() != row_count * child_card {
            return Err(BifError::Syntax {
                line: start.0,
                col: start.1,
                message: format!(
                    "table for `{child_name}` has {} values, expected {}",
                    values.len(),
                    row_count * child_card
                ),
            });
        }
        for (r, slot) in rows.iter_mut().enumerate() {
            *slot = Some(values[r * child_card..(r + 1) * child_card].to_vec());
        }
    } else {
        while p.at_punct('(') {
            p.expect_punct('(')?;
            let mut config_idx = 0usize;
            for (k, &q) in parents.iter().enumerate() {
                let (state, tok) = p.expect_ident()?;
                let s = variables[q]
                    .states
                    .iter()
                    .position(|x| *x == state)
                    .ok_or_else(|| BifError::UnknownState {
                        line: tok.line,
                        col: tok.col,
                        variable: variables[q].name.clone(),
                        state,
                    })?;
                config_idx = config_idx * parent_cards[k] + s;
                if k + 1 < parents.len() {
                    p.expect_punct(',')?;
                }
            }
            let close = p.expect_punct(')')?;
            let mut values = Vec::with_capacity(child_card);
            loop {
                let (v, _) = p.expect_number()?;
                values.push(v);
                if p.at_punct(',') {
                    p.expect_punct(',')?;
                } else {
                    break;
                }
            }
            p.expect_punct(';')?;
            if values.len() != child_card {
                return Err(BifError::Syntax {
                    line: close.line,
                    col: close.col,
                    message: format!(
                        "row for `{child_name}` has {} values, expected {child_card}",
                        values.len()
                    ),
                });
            }
            if rows[config_idx].replace(values).is_some() {
                return Err(BifError::Duplicate {
                    line: close.line,
                    col: close.col,
                    name: format!("{child_name} configuration"),
                });
            }
        }
    }
    let end = p.expect_punct('}')?;

    let mut complete = Vec::with_capacity(row_count);
    for (r, slot) in rows.into_iter().enumerate() {
        match slot {
            Some(mut row) => {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > BIF_ROW_SUM_TOL {
                    return Err(BifError::RowNotNormalized {
                        line: end.line,
                        col: end.col,
                        variable: child_name.clone(),
                        sum,
                    });
                }
                for v in &mut row {
                    *v /= sum;
                }
                complete.push(row);
            }
            None => {
                let config = decode_parent_config(r, &parent_cards)
                    .into_iter()
                    .enumerate()
                    .map(|(k, s)| variables[parents[k]].states[s].clone())
                    .collect();
                return Err(BifError::MissingConfiguration {
                    variable: child_name,
                    config,
                });
            }
        }
    }

    Ok(ProbabilityDecl {
        child,
        parents,
        rows: complete,
    })
}

fn decode_parent_config(mut idx: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize; cards.len()];
    for k in (0..cards.len()).rev() {
        out[k] = idx % cards[k];
        idx /= cards[k];
    }
    out
}

fn build_net(
    variables: Vec<VariableDecl>,
    blocks: Vec<Option<ProbabilityDecl>>,
) -> Result<DiscreteBayesNet, BifError> {
    let mut edges = Vec::new();
    for (v, block) in blocks.iter().enumerate() {
        let block = block
            .as_ref()
            .ok_or_else(|| BifError::MissingProbability(variables[v].name.clone()))?;
        for &q in &block.parents {
            edges.push((q, v));
        }
    }
    let names: Vec<String> = variables.iter().map(|d| d.name.clone()).collect();
    let dag = Dag::new(names, &edges)?;

    // CPT parents are kept sorted by vertex index internally; permute each
    // declaration's rows from header order into that layout.
    let cards: Vec<usize> = variables.iter().map(|d| d.states.len()).collect();
    let mut cpts = Vec::with_capacity(variables.len());
    for block in blocks.iter().flatten() {
        let v = block.child;
        let sorted_parents = dag.parents_of(v).to_vec();
        let header = &block.parents;
        let header_cards: Vec<usize> = header.iter().map(|&q| cards[q]).collect();
        let sorted_cards: Vec<usize> = sorted_parents.iter().map(|&q| cards[q]).collect();
        let positions: Vec<usize> = sorted_parents
            .iter()
            .map(|q| header.iter().position(|h| h == q).expect("same set"))
            .collect();

        let rows: usize = sorted_cards.iter().product();
        let mut table = Vec::with_capacity(rows * cards[v]);
        for r in 0..rows {
            let sorted_config = decode_parent_config(r, &sorted_cards);
            let mut header_idx = 0usize;
            for (k, &card) in header_cards.iter().enumerate() {
                let pos = positions.iter().position(|&p| p == k).expect("bijection");
                header_idx = header_idx * card + sorted_config[pos];
            }
            table.extend_from_slice(&block.rows[header_idx]);
        }
        cpts.push(Cpt::new(
            v,
            sorted_parents,
            cards[v],
            sorted_cards,
            table,
            dag.name_of(v),
        )?);
    }
    let states = variables.into_iter().map(|d| d.states).collect();
    Ok(DiscreteBayesNet::with_states(dag, cpts, states)?)
}
