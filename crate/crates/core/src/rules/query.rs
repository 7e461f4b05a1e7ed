//! Surface query language.
//!
//! ```text
//! query    := "FIND" "FRAMES" "WHERE" clause { "AND" clause }
//! clause   := classref REL classref
//! classref := IDENT [":" IDENT] | QUOTED [":" IDENT]
//! REL      := LEFT_OF | RIGHT_OF | ABOVE | BELOW | INSIDE | CONTAINS | INTERSECTS | ON | WITH
//! ```
//!
//! Keywords are case-insensitive; class names are matched against detector
//! labels exactly. Multi-word labels are quoted: `vase ON "dining table"`.

use std::fmt;

use thiserror::Error;

use super::RelKind;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassRef {
    pub class: String,
    pub alias: Option<String>,
}

impl ClassRef {
    pub fn new(class: &str) -> Self {
        ClassRef { class: class.to_string(), alias: None }
    }

    pub fn aliased(class: &str, alias: &str) -> Self {
        ClassRef { class: class.to_string(), alias: Some(alias.to_string()) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QueryClause {
    pub left: ClassRef,
    pub rel: RelKind,
    pub right: ClassRef,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QueryAst {
    pub clauses: Vec<QueryClause>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at column {column}: {msg}")]
    Syntax { column: usize, msg: String },
    #[error("unknown relation {word:?} at column {column}")]
    UnknownRelation { column: usize, word: String },
    #[error("alias {alias:?} used for both {first:?} and {second:?}")]
    AliasClassMismatch { alias: String, first: String, second: String },
    #[error("alias {0:?} is reserved")]
    ReservedAlias(String),
    #[error("query has no clauses")]
    EmptyQuery,
}

#[derive(Debug, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Colon,
}

struct Token {
    tok: Tok,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn tokenize(text: &str) -> Result<Vec<Token>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c == ':' {
            out.push(Token { tok: Tok::Colon, column });
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(QueryError::Syntax { column, msg: "unterminated string".into() }),
                    Some('"') => break,
                    Some('\\') => {
                        let esc = chars
                            .get(i + 1)
                            .ok_or(QueryError::Syntax { column: i + 1, msg: "dangling escape".into() })?;
                        s.push(*esc);
                        i += 2;
                    }
                    Some(ch) => {
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            if s.is_empty() {
                return Err(QueryError::Syntax { column, msg: "empty class name".into() });
            }
            out.push(Token { tok: Tok::Quoted(s), column });
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push(Token { tok: Tok::Word(chars[start..i].iter().collect()), column });
        } else {
            return Err(QueryError::Syntax { column, msg: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end_column: usize,
}

impl Parser {
    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_column, |t| t.column)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, QueryError> {
        Err(QueryError::Syntax { column: self.column(), msg: msg.into() })
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Word(w), .. }) if w.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected {kw}")),
        }
    }

    fn class_ref(&mut self) -> Result<ClassRef, QueryError> {
        let class = match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Word(w), .. }) | Some(Token { tok: Tok::Quoted(w), .. }) => w.clone(),
            _ => return self.err("expected a class name"),
        };
        self.pos += 1;
        let alias = if matches!(self.toks.get(self.pos), Some(Token { tok: Tok::Colon, .. })) {
            self.pos += 1;
            match self.toks.get(self.pos) {
                Some(Token { tok: Tok::Word(w), .. }) => {
                    let w = w.clone();
                    self.pos += 1;
                    Some(w)
                }
                _ => return self.err("expected an alias after ':'"),
            }
        } else {
            None
        };
        Ok(ClassRef { class, alias })
    }

    fn relation(&mut self) -> Result<RelKind, QueryError> {
        match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Word(w), column }) => {
                let rel = w
                    .parse::<RelKind>()
                    .map_err(|_| QueryError::UnknownRelation { column: *column, word: w.clone() })?;
                self.pos += 1;
                Ok(rel)
            }
            _ => self.err("expected a relation"),
        }
    }

    fn clause(&mut self) -> Result<QueryClause, QueryError> {
        let left = self.class_ref()?;
        let rel = self.relation()?;
        let right = self.class_ref()?;
        Ok(QueryClause { left, rel, right })
    }
}

pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end_column: text.chars().count() + 1 };
    p.keyword("FIND")?;
    p.keyword("FRAMES")?;
    p.keyword("WHERE")?;
    let mut clauses = vec![p.clause()?];
    while p.pos < p.toks.len() {
        p.keyword("AND")?;
        clauses.push(p.clause()?);
    }
    Ok(QueryAst { clauses })
}

fn write_class(f: &mut fmt::Formatter<'_>, c: &ClassRef) -> fmt::Result {
    let plain = c.class.chars().next().is_some_and(is_ident_start) && c.class.chars().all(is_ident_char);
    if plain {
        f.write_str(&c.class)?;
    } else {
        f.write_str("\"")?;
        for ch in c.class.chars() {
            if ch == '"' || ch == '\\' {
                f.write_str("\\")?;
            }
            write!(f, "{ch}")?;
        }
        f.write_str("\"")?;
    }
    if let Some(a) = &c.alias {
        write!(f, ":{a}")?;
    }
    Ok(())
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FIND FRAMES WHERE")?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND")?;
            }
            f.write_str(" ")?;
            write_class(f, &c.left)?;
            write!(f, " {} ", c.rel)?;
            write_class(f, &c.right)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_clause() {
        let q = parse_query("FIND FRAMES WHERE person LEFT_OF car").unwrap();
        assert_eq!(
            q.clauses,
            vec![QueryClause { left: ClassRef::new("person"), rel: RelKind::LeftOf, right: ClassRef::new("car") }]
        );
    }

    #[test]
    fn keywords_are_case_insensitive_classes_are_not() {
        let q = parse_query("find frames where Person inside car and person with tie").unwrap();
        assert_eq!(q.clauses.len(), 2);
        assert_eq!(q.clauses[0].left.class, "Person");
        assert_eq!(q.clauses[0].rel, RelKind::Inside);
        assert_eq!(q.clauses[1].rel, RelKind::With);
    }

    #[test]
    fn quoted_and_aliased() {
        let q = parse_query(r#"FIND FRAMES WHERE vase ON "dining table""#).unwrap();
        assert_eq!(q.clauses[0].right, ClassRef::new("dining table"));
        let q = parse_query("FIND FRAMES WHERE person:p WITH tie AND person:p LEFT_OF car").unwrap();
        assert_eq!(q.clauses[0].left, ClassRef::aliased("person", "p"));
        assert_eq!(q.clauses[1].left, ClassRef::aliased("person", "p"));
        let q = parse_query(r#"FIND FRAMES WHERE "traffic light":t ABOVE car"#).unwrap();
        assert_eq!(q.clauses[0].left, ClassRef::aliased("traffic light", "t"));
    }

    #[test]
    fn syntax_errors_report_columns() {
        let text = "FIND FRAMES WHERE person ON car AND";
        assert_eq!(
            parse_query(text),
            Err(QueryError::Syntax { column: text.len() + 1, msg: "expected a class name".into() })
        );
        assert!(matches!(parse_query("FIND FRAMES person ON car"), Err(QueryError::Syntax { column: 13, .. })));
        assert!(matches!(parse_query("FIND FRAMES WHERE person ON"), Err(QueryError::Syntax { .. })));
        assert!(matches!(parse_query("FIND FRAMES WHERE person ON car car"), Err(QueryError::Syntax { column: 33, .. })));
        assert!(matches!(parse_query("FIND FRAMES WHERE \"person ON car"), Err(QueryError::Syntax { column: 19, .. })));
        assert!(matches!(parse_query("FIND FRAMES WHERE person:\"p\" ON car"), Err(QueryError::Syntax { column: 26, .. })));
        // `ON` is taken as the alias, so `car` sits in relation position.
        assert!(matches!(parse_query("FIND FRAMES WHERE person: ON car"), Err(QueryError::UnknownRelation { column: 30, .. })));
        assert!(matches!(parse_query("FIND FRAMES WHERE person ON 'car'"), Err(QueryError::Syntax { column: 29, .. })));
        assert!(matches!(parse_query(""), Err(QueryError::Syntax { column: 1, .. })));
    }

    #[test]
    fn unknown_relation() {
        assert_eq!(
            parse_query("FIND FRAMES WHERE person NEAR car"),
            Err(QueryError::UnknownRelation { column: 26, word: "NEAR".into() })
        );
    }

    fn arb_class() -> impl Strategy<Value = ClassRef> {
        (
            prop_oneof!["[a-z][a-z_]{0,6}", "[a-z]{1,5} [a-z]{1,5}", "[ -~]{1,6}"],
            proptest::option::of("[a-z][a-z0-9]{0,3}"),
        )
            .prop_map(|(class, alias)| ClassRef { class, alias })
    }

    proptest! {
        #[test]
        fn display_parses_back(
            clauses in prop::collection::vec((arb_class(), 0usize..9, arb_class()), 1..4)
        ) {
            let ast = QueryAst {
                clauses: clauses
                    .into_iter()
                    .map(|(left, r, right)| QueryClause { left, rel: RelKind::ALL[r], right })
                    .collect(),
            };
            prop_assert_eq!(parse_query(&ast.to_string()).unwrap(), ast);
        }
    }
}
