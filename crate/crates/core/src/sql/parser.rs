//! Recursive-descent parser for the supported SQL subset:
//!
//! ```text
//! SELECT (COUNT(*) | SUM(...) | column)[, ...]
//! FROM table[, ...]
//! [WHERE conjunction of comparisons and parenthesized OR groups]
//! [GROUP BY columns] [ORDER BY key [ASC|DESC], ...] [LIMIT n]
//! ```
//!
//! Parsing binds names against the catalog: columns resolve to their owning
//! scan, literals are normalized to the column type, and string literals are
//! mapped to dictionary codes (an unknown string makes the comparison
//! constant false rather than an error).

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::sql::ast::*;
use crate::sql::lexer::{syntax_error, tokenize, Tok, Token};
use crate::storage::{ColumnData, Table};
use std::sync::Arc;

struct UCol {
    table: Option<String>,
    name: String,
    line: usize,
    col: usize,
}

enum ULit {
    Int(i64),
    Float(f64),
    Str(String),
    Date(i64),
}

enum URhs {
    Lit(ULit),
    Col(UCol),
}

struct UCompare {
    left: UCol,
    op: CmpOp,
    right: URhs,
}

enum UPred {
    Compare(UCompare),
    And(Vec<UPred>),
    Or(Vec<UPred>),
}

enum USelect {
    Column(UCol),
    Count { alias: Option<String> },
    Sum { expr: USum, alias: Option<String> },
}

enum USum {
    Column(UCol),
    Sub(UCol, UCol),
    MulOneMinus(UCol, UCol),
}

struct UOrder {
    name: String,
    desc: bool,
    line: usize,
    col: usize,
}

pub struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    catalog: &'a Catalog,
}

/// Parses and binds a query against the registered tables.
pub fn parse(sql: &str, catalog: &Catalog) -> Result<RawPlan> {
    Parser {
        tokens: tokenize(sql)?,
        pos: 0,
        catalog,
    }
    .run()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let (line, col) = self.here();
        syntax_error(line, col, message)
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s.eq_ignore_ascii_case(kw) {
                self.pos += 1;
                return true;
            }
        }
        false
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.keyword(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected {kw}")))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize)> {
        let (line, col) = self.here();
        match self.next() {
            Some(Token {
                tok: Tok::Ident(s), ..
            }) => Ok((s, line, col)),
            _ => Err(syntax_error(line, col, format!("expected {what}"))),
        }
    }

    fn run(mut self) -> Result<RawPlan> {
        self.expect_keyword("SELECT")?;
        let select = self.select_list()?;
        self.expect_keyword("FROM")?;
        let scans = self.table_list()?;
        let filter = if self.keyword("WHERE") {
            Some(self.or_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.keyword("GROUP") {
            self.expect_keyword("BY")?;
            loop {
                group_by.push(self.column_ref()?);
                if !matches!(self.peek(), Some(Tok::Comma)) {
                    break;
                }
                self.pos += 1;
            }
        }
        let mut order_by = Vec::new();
        if self.keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                let (name, line, col) = self.ident("order key")?;
                // Qualified keys reduce to the bare column name.
                let name = if matches!(self.peek(), Some(Tok::Dot)) {
                    self.pos += 1;
                    self.ident("column name")?.0
                } else {
                    name
                };
                let desc = if self.keyword("DESC") {
                    true
                } else {
                    self.keyword("ASC");
                    false
                };
                order_by.push(UOrder {
                    name,
                    desc,
                    line,
                    col,
                });
                if !matches!(self.peek(), Some(Tok::Comma)) {
                    break;
                }
                self.pos += 1;
            }
        }
        let limit = if self.keyword("LIMIT") {
            match self.next() {
                Some(Token {
                    tok: Tok::Int(n), ..
                }) if n >= 0 => Some(n as u64),
                _ => return Err(self.err("expected row count after LIMIT")),
            }
        } else {
            None
        };
        if matches!(self.peek(), Some(Tok::Semi)) {
            self.pos += 1;
        }
        if let Some(t) = self.tokens.get(self.pos) {
            return Err(syntax_error(t.line, t.col, "unexpected trailing input"));
        }
        self.bind(select, scans, filter, group_by, order_by, limit)
    }

    fn select_list(&mut self) -> Result<Vec<USelect>> {
        let mut items = Vec::new();
        loop {
            items.push(self.select_item()?);
            if matches!(self.peek(), Some(Tok::Comma)) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(items)
    }

    fn alias(&mut self) -> Result<Option<String>> {
        if self.keyword("AS") {
            Ok(Some(self.ident("alias")?.0))
        } else {
            Ok(None)
        }
    }

    fn select_item(&mut self) -> Result<USelect> {
        if self.peek_keyword("COUNT") {
            self.pos += 1;
            self.expect(Tok::LParen, "(")?;
            self.expect(Tok::Star, "*")?;
            self.expect(Tok::RParen, ")")?;
            return Ok(USelect::Count {
                alias: self.alias()?,
            });
        }
        if self.peek_keyword("SUM") {
            self.pos += 1;
            self.expect(Tok::LParen, "(")?;
            let first = self.column_ref()?;
            let expr = match self.peek() {
                Some(Tok::Minus) => {
                    self.pos += 1;
                    USum::Sub(first, self.column_ref()?)
                }
                Some(Tok::Star) => {
                    self.pos += 1;
                    self.expect(Tok::LParen, "(")?;
                    match self.next() {
                        Some(Token {
                            tok: Tok::Int(1), ..
                        }) => {}
                        _ => return Err(self.err("expected 1 in SUM(col * (1 - col))")),
                    }
                    self.expect(Tok::Minus, "-")?;
                    let second = self.column_ref()?;
                    self.expect(Tok::RParen, ")")?;
                    USum::MulOneMinus(first, second)
                }
                _ => USum::Column(first),
            };
            self.expect(Tok::RParen, ")")?;
            return Ok(USelect::Sum {
                expr,
                alias: self.alias()?,
            });
        }
        Ok(USelect::Column(self.column_ref()?))
    }

    fn table_list(&mut self) -> Result<Vec<String>> {
        let mut tables = Vec::new();
        loop {
            let (name, line, col) = self.ident("table name")?;
            if tables.contains(&name) {
                return Err(syntax_error(
                    line,
                    col,
                    format!("table '{name}' listed twice"),
                ));
            }
            tables.push(name);
            if matches!(self.peek(), Some(Tok::Comma)) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(tables)
    }

    fn column_ref(&mut self) -> Result<UCol> {
        let (first, line, col) = self.ident("column name")?;
        if matches!(self.peek(), Some(Tok::Dot)) {
            self.pos += 1;
            let (name, ..) = self.ident("column name")?;
            Ok(UCol {
                table: Some(first),
                name,
                line,
                col,
            })
        } else {
            Ok(UCol {
                table: None,
                name: first,
                line,
                col,
            })
        }
    }

    fn or_expr(&mut self) -> Result<UPred> {
        let mut parts = vec![self.and_expr()?];
        while self.keyword("OR") {
            parts.push(self.and_expr()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one element")
        } else {
            UPred::Or(parts)
        })
    }

    fn and_expr(&mut self) -> Result<UPred> {
        let mut parts = vec![self.primary()?];
        while self.keyword("AND") {
            parts.push(self.primary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().expect("one element")
        } else {
            UPred::And(parts)
        })
    }

    fn primary(&mut self) -> Result<UPred> {
        if matches!(self.peek(), Some(Tok::LParen)) {
            self.pos += 1;
            let inner = self.or_expr()?;
            self.expect(Tok::RParen, ")")?;
            return Ok(inner);
        }
        let (line, col) = self.here();
        let left = self.column_ref()?;
        let op = match self.next() {
            Some(Token { tok: Tok::Eq, .. }) => CmpOp::Eq,
            Some(Token { tok: Tok::Lt, .. }) => CmpOp::Lt,
            Some(Token { tok: Tok::Gt, .. }) => CmpOp::Gt,
            Some(Token { tok: Tok::Le, .. }) => CmpOp::Le,
            Some(Token { tok: Tok::Ge, .. }) => CmpOp::Ge,
            _ => return Err(syntax_error(line, col, "expected comparison operator")),
        };
        let right = self.rhs()?;
        Ok(UPred::Compare(UCompare { left, op, right }))
    }

    fn rhs(&mut self) -> Result<URhs> {
        if self.peek_keyword("DATE") {
            self.pos += 1;
            let (line, col) = self.here();
            match self.next() {
                Some(Token {
                    tok: Tok::Str(s), ..
                }) => {
                    let days = crate::storage::date_to_days(&s)
                        .map_err(|e| syntax_error(line, col, e.to_string()))?;
                    return Ok(URhs::Lit(ULit::Date(days)));
                }
                _ => return Err(syntax_error(line, col, "expected date string")),
            }
        }
        let negative = if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(URhs::Lit(ULit::Int(if negative { -v } else { v })))
            }
            Some(Tok::Float(v)) => {
                self.pos += 1;
                Ok(URhs::Lit(ULit::Float(if negative { -v } else { v })))
            }
            Some(Tok::Str(s)) if !negative => {
                self.pos += 1;
                Ok(URhs::Lit(ULit::Str(s)))
            }
            Some(Tok::Ident(_)) if !negative => Ok(URhs::Col(self.column_ref()?)),
            _ => Err(self.err("expected literal or column")),
        }
    }

    // Binding.

    fn bind(
        &self,
        select: Vec<USelect>,
        scans: Vec<String>,
        filter: Option<UPred>,
        group_by: Vec<UCol>,
        order_by: Vec<UOrder>,
        limit: Option<u64>,
    ) -> Result<RawPlan> {
        let tables: Vec<Arc<Table>> = scans
            .iter()
            .map(|name| self.catalog.table(name))
            .collect::<Result<_>>()?;

        let resolve = |c: &UCol| -> Result<ColumnRef> {
            if let Some(t) = &c.table {
                if !scans.contains(t) {
                    return Err(Error::UnknownTable(t.clone()));
                }
                let table = tables
                    .iter()
                    .find(|tab| tab.name() == t)
                    .expect("scan resolved");
                table.column(&c.name)?;
                return Ok(ColumnRef {
                    table: t.clone(),
                    column: c.name.clone(),
                });
            }
            let owners: Vec<&Arc<Table>> = tables
                .iter()
                .filter(|t| t.has_column(&c.name))
                .collect();
            match owners.len() {
                0 => Err(Error::UnknownColumn(c.name.clone())),
                1 => Ok(ColumnRef {
                    table: owners[0].name().to_string(),
                    column: c.name.clone(),
                }),
                _ => Err(Error::UnsupportedQuery(format!(
                    "ambiguous column '{}' at {}:{}",
                    c.name, c.line, c.col
                ))),
            }
        };

        let column_data = |r: &ColumnRef| -> Result<ColumnData> {
            let table = tables
                .iter()
                .find(|t| t.name() == r.table)
                .expect("resolved table");
            Ok(table.column(&r.column)?.data.clone())
        };

        // Select list.
        let mut bound_select = Vec::new();
        let mut used_names: Vec<String> = Vec::new();
        for (i, item) in select.iter().enumerate() {
            let bound = match item {
                USelect::Column(c) => SelectItem::Column(resolve(c)?),
                USelect::Count { alias } => SelectItem::Agg(AggExpr::CountStar {
                    alias: unique_alias(alias.as_deref().unwrap_or("count"), i, &used_names),
                }),
                USelect::Sum { expr, alias } => {
                    let bind_numeric = |c: &UCol| -> Result<String> {
                        let r = resolve(c)?;
                        match column_data(&r)? {
                            ColumnData::Int64(_) | ColumnData::Float64(_) => Ok(r.column),
                            other => Err(Error::TypeMismatch(format!(
                                "SUM argument '{}' must be numeric, found {}",
                                r.column,
                                other.column_type()
                            ))),
                        }
                    };
                    let expr = match expr {
                        USum::Column(c) => SumExpr::Column(bind_numeric(c)?),
                        USum::Sub(a, b) => SumExpr::Sub(bind_numeric(a)?, bind_numeric(b)?),
                        USum::MulOneMinus(a, b) => {
                            SumExpr::MulOneMinus(bind_numeric(a)?, bind_numeric(b)?)
                        }
                    };
                    SelectItem::Agg(AggExpr::Sum {
                        expr,
                        alias: unique_alias(alias.as_deref().unwrap_or("sum"), i, &used_names),
                    })
                }
            };
            used_names.push(match &bound {
                SelectItem::Column(c) => c.column.clone(),
                SelectItem::Agg(a) => a.alias().to_string(),
            });
            bound_select.push(bound);
        }
        if bound_select.is_empty() {
            return Err(self.err("empty select list"));
        }

        let group_by: Vec<ColumnRef> = group_by.iter().map(&resolve).collect::<Result<_>>()?;

        // Aggregate queries project only grouped columns and aggregates.
        let has_agg = bound_select
            .iter()
            .any(|s| matches!(s, SelectItem::Agg(_)));
        if has_agg || !group_by.is_empty() {
            for item in &bound_select {
                if let SelectItem::Column(c) = item {
                    if !group_by.contains(c) {
                        return Err(Error::UnsupportedQuery(format!(
                            "column '{}' must appear in GROUP BY",
                            c.column
                        )));
                    }
                }
            }
        }

        let filter = match filter {
            Some(f) => Some(self.bind_pred(f, &resolve, &column_data)?),
            None => None,
        };

        let output = bound_select
            .iter()
            .map(|s| match s {
                SelectItem::Column(c) => c.column.clone(),
                SelectItem::Agg(a) => a.alias().to_string(),
            })
            .collect::<Vec<_>>();
        let order_by = order_by
            .into_iter()
            .map(|k| {
                if output.iter().any(|o| o == &k.name) {
                    Ok(SortKey {
                        column: k.name,
                        desc: k.desc,
                    })
                } else {
                    Err(syntax_error(
                        k.line,
                        k.col,
                        format!("ORDER BY key '{}' is not an output column", k.name),
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(RawPlan {
            scans,
            top_filter: filter,
            select: bound_select,
            group_by,
            order_by,
            limit,
        })
    }

    fn bind_pred(
        &self,
        pred: UPred,
        resolve: &dyn Fn(&UCol) -> Result<ColumnRef>,
        column_data: &dyn Fn(&ColumnRef) -> Result<ColumnData>,
    ) -> Result<PredicateExpr> {
        match pred {
            UPred::And(children) => {
                // Nested ANDs flatten so the top filter is one conjunction.
                let mut parts = Vec::new();
                for c in children {
                    match self.bind_pred(c, resolve, column_data)? {
                        PredicateExpr::And(inner) => parts.extend(inner),
                        other => parts.push(other),
                    }
                }
                Ok(PredicateExpr::And(parts))
            }
            UPred::Or(children) => Ok(PredicateExpr::Or(
                children
                    .into_iter()
                    .map(|c| self.bind_pred(c, resolve, column_data))
                    .collect::<Result<_>>()?,
            )),
            UPred::Compare(c) => self.bind_compare(c, resolve, column_data),
        }
    }

    fn bind_compare(
        &self,
        c: UCompare,
        resolve: &dyn Fn(&UCol) -> Result<ColumnRef>,
        column_data: &dyn Fn(&ColumnRef) -> Result<ColumnData>,
    ) -> Result<PredicateExpr> {
        let left = resolve(&c.left)?;
        match c.right {
            URhs::Col(rc) => {
                let right = resolve(&rc)?;
                if c.op != CmpOp::Eq {
                    return Err(Error::UnsupportedPredicate(format!(
                        "only equality is supported between columns, found '{} {} {}'",
                        left.column, c.op, right.column
                    )));
                }
                let (lt, rt) = (
                    column_data(&left)?.column_type(),
                    column_data(&right)?.column_type(),
                );
                if lt != rt {
                    return Err(Error::TypeMismatch(format!(
                        "cannot compare {} column '{}' with {} column '{}'",
                        lt, left.column, rt, right.column
                    )));
                }
                Ok(PredicateExpr::ColumnEq { left, right })
            }
            URhs::Lit(lit) => {
                let data = column_data(&left)?;
                let literal = bind_literal(&left, &data, lit, c.op)?;
                Ok(PredicateExpr::Compare {
                    column: left,
                    op: c.op,
                    literal,
                })
            }
        }
    }
}

fn unique_alias(base: &str, index: usize, used: &[String]) -> String {
    if used.iter().any(|u| u == base) {
        format!("{base}_{index}")
    } else {
        base.to_string()
    }
}

fn bind_literal(col: &ColumnRef, data: &ColumnData, lit: ULit, op: CmpOp) -> Result<Literal> {
    let mismatch = |found: &str| {
        Err(Error::TypeMismatch(format!(
            "cannot compare {} column '{}' with {} literal",
            data.column_type(),
            col.column,
            found
        )))
    };
    match data {
        ColumnData::Int64(_) => match lit {
            ULit::Int(v) => Ok(Literal::Int(v)),
            ULit::Float(_) => mismatch("float"),
            ULit::Str(_) => mismatch("string"),
            ULit::Date(_) => mismatch("date"),
        },
        ColumnData::Float64(_) => match lit {
            ULit::Int(v) => Ok(Literal::Float(v as f64)),
            ULit::Float(v) => Ok(Literal::Float(v)),
            ULit::Str(_) => mismatch("string"),
            ULit::Date(_) => mismatch("date"),
        },
        ColumnData::Date(_) => match lit {
            ULit::Date(d) => Ok(Literal::Date(d)),
            ULit::Int(v) => Ok(Literal::Date(v)),
            ULit::Float(_) => mismatch("float"),
            ULit::Str(_) => mismatch("string"),
        },
        ColumnData::Text { dict, .. } => match lit {
            ULit::Str(s) => {
                if op != CmpOp::Eq {
                    return Err(Error::TypeMismatch(format!(
                        "text column '{}' supports equality comparisons only",
                        col.column
                    )));
                }
                let code = dict.lookup(&s);
                Ok(Literal::Text { raw: s, code })
            }
            ULit::Int(_) | ULit::Float(_) => mismatch("number"),
            ULit::Date(_) => mismatch("date"),
        },
    }
}
