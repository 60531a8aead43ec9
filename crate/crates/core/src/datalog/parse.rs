//! Problem directory format.
//!
//! ```text
//! relations.txt      input|output <name> <arity>
//! <relation>.facts   tab-separated constants, input relations only
//! labels.pos         <relation>\t<c1>\t...\t<ck>
//! labels.neg         same as labels.pos
//! rules.dl           [id:] head(x, y) :- a(x, z), b(z, y).
//! ```
//!
//! In `rules.dl`, argument tokens that start with a lowercase letter or `_`
//! are variables; quoted strings, capitalized identifiers and integers are
//! constants. `#` starts a comment everywhere. Rules without an explicit id
//! are named `r<line>`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::model::*;
use crate::error::{Error, Result};

pub const RELATIONS_FILE: &str = "relations.txt";
pub const RULES_FILE: &str = "rules.dl";
pub const POSITIVE_FILE: &str = "labels.pos";
pub const NEGATIVE_FILE: &str = "labels.neg";

pub fn parse_problem(dir: &Path) -> Result<Problem> {
    parse_problem_with_rules(dir, None)
}

/// Parses a problem directory, optionally reading candidate rules from
/// `rules` instead of `<dir>/rules.dl`.
pub fn parse_problem_with_rules(dir: &Path, rules: Option<&Path>) -> Result<Problem> {
    let rel_path = dir.join(RELATIONS_FILE);
    let schema = parse_relations(&read(&rel_path)?, &display(&rel_path))?;
    let mut symbols = SymbolTable::new();

    let mut input = Database::new();
    for (rel, decl) in schema.iter() {
        if decl.kind != RelationKind::Input {
            continue;
        }
        let path = dir.join(format!("{}.facts", decl.name));
        if let Some(text) = read_optional(&path)? {
            parse_facts(&text, &display(&path), rel, &schema, &mut symbols, &mut input)?;
        }
    }

    let mut label_file = |name: &str| -> Result<BTreeSet<Tuple>> {
        let path = dir.join(name);
        match read_optional(&path)? {
            Some(text) => parse_labels(&text, &display(&path), &schema, &mut symbols),
            None => Ok(BTreeSet::new()),
        }
    };
    let positive = label_file(POSITIVE_FILE)?;
    let negative = label_file(NEGATIVE_FILE)?;
    if let Some(t) = positive.intersection(&negative).next() {
        return Err(Error::Semantic {
            file: display(&dir.join(NEGATIVE_FILE)),
            line: 0,
            message: format!(
                "{} is labeled both positive and negative",
                render_tuple(&schema, &symbols, t)
            ),
        });
    }
    let labels = LabelSet { positive, negative };

    let rules_path = rules.map_or_else(|| dir.join(RULES_FILE), Path::to_path_buf);
    let rules = match read_optional(&rules_path)? {
        Some(text) => parse_rules(&text, &display(&rules_path), &schema, &mut symbols)?,
        None if rules.is_some() => {
            return Err(Error::io(
                rules_path,
                std::io::Error::from(std::io::ErrorKind::NotFound),
            ))
        }
        None => RuleSet::new(),
    };

    Ok(Problem {
        schema,
        symbols,
        input,
        labels,
        rules,
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_optional(path: &Path) -> Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn semantic(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Semantic {
        file: file.to_owned(),
        line,
        message: message.into(),
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Builds a problem from in-memory file contents. `facts` pairs relation
/// names with their `.facts` text.
pub fn parse_problem_text(
    relations: &str,
    facts: &[(&str, &str)],
    positive: &str,
    negative: &str,
    rules: &str,
) -> Result<Problem> {
    let schema = parse_relations(relations, RELATIONS_FILE)?;
    let mut symbols = SymbolTable::new();
    let mut input = Database::new();
    for (name, text) in facts {
        let rel = schema
            .lookup(name)
            .filter(|&r| schema.decl(r).kind == RelationKind::Input)
            .ok_or_else(|| Error::Config(format!("`{name}` is not an input relation")))?;
        parse_facts(text, &format!("{name}.facts"), rel, &schema, &mut symbols, &mut input)?;
    }
    let positive = parse_labels(positive, POSITIVE_FILE, &schema, &mut symbols)?;
    let negative = parse_labels(negative, NEGATIVE_FILE, &schema, &mut symbols)?;
    let labels = LabelSet::new(positive, negative)?;
    let rules = parse_rules(rules, RULES_FILE, &schema, &mut symbols)?;
    Ok(Problem {
        schema,
        symbols,
        input,
        labels,
        rules,
    })
}

pub fn parse_relations(text: &str, file: &str) -> Result<Schema> {
    let mut schema = Schema::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [kind, name, arity] = fields[..] else {
            return Err(semantic(file, line_no, "expected `input|output <name> <arity>`"));
        };
        let kind = match kind {
            "input" => RelationKind::Input,
            "output" => RelationKind::Output,
            other => {
                return Err(semantic(
                    file,
                    line_no,
                    format!("unknown relation kind `{other}`"),
                ))
            }
        };
        if !is_ident(name) {
            return Err(semantic(file, line_no, format!("invalid relation name `{name}`")));
        }
        let arity: usize = arity
            .parse()
            .map_err(|_| semantic(file, line_no, format!("invalid arity `{arity}`")))?;
        schema
            .declare(name, arity, kind)
            .map_err(|e| semantic(file, line_no, e.to_string()))?;
    }
    Ok(schema)
}

/// Reads one relation's facts into `db`. Duplicate rows are merged.
pub fn parse_facts(
    text: &str,
    file: &str,
    rel: RelId,
    schema: &Schema,
    symbols: &mut SymbolTable,
    db: &mut Database,
) -> Result<()> {
    let arity = schema.decl(rel).arity;
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != arity {
            return Err(semantic(
                file,
                i + 1,
                format!(
                    "arity mismatch: `{}` has arity {arity} but the row has {} fields",
                    schema.decl(rel).name,
                    fields.len()
                ),
            ));
        }
        let args: Vec<Constant> = fields.iter().map(|f| symbols.intern(f)).collect();
        db.insert(Tuple::new(rel, args));
    }
    Ok(())
}

pub fn parse_labels(
    text: &str,
    file: &str,
    schema: &Schema,
    symbols: &mut SymbolTable,
) -> Result<BTreeSet<Tuple>> {
    let mut out = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let mut fields = raw.split('\t');
        let name = fields.next().unwrap_or_default();
        let rel = schema
            .lookup(name)
            .ok_or_else(|| semantic(file, line_no, format!("undeclared relation `{name}`")))?;
        let decl = schema.decl(rel);
        if decl.kind != RelationKind::Output {
            return Err(semantic(
                file,
                line_no,
                format!("labels must name output relations, `{name}` is an input"),
            ));
        }
        let args: Vec<&str> = fields.collect();
        if args.len() != decl.arity {
            return Err(semantic(
                file,
                line_no,
                format!(
                    "arity mismatch: `{name}` has arity {} but the label has {} constants",
                    decl.arity,
                    args.len()
                ),
            ));
        }
        let args: Vec<Constant> = args.iter().map(|a| symbols.intern(a)).collect();
        out.insert(Tuple::new(rel, args));
    }
    Ok(out)
}

pub fn parse_rules(
    text: &str,
    file: &str,
    schema: &Schema,
    symbols: &mut SymbolTable,
) -> Result<RuleSet> {
    let mut set = RuleSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let Some(rule) = parse_rule_line(raw, file, line_no, schema, symbols)? else {
            continue;
        };
        if set.index_of(&rule.id).is_some() {
            return Err(semantic(file, line_no, format!("duplicate rule id `{}`", rule.id)));
        }
        set.push(rule)?;
    }
    Ok(set)
}

/// Parses one `rules.dl` line; `None` for blank and comment-only lines.
pub fn parse_rule_line(
    line: &str,
    file: &str,
    line_no: usize,
    schema: &Schema,
    symbols: &mut SymbolTable,
) -> Result<Option<Rule>> {
    let mut p = RuleParser {
        chars: line.chars().collect(),
        pos: 0,
        file,
        line: line_no,
    };
    p.skip_ws();
    if p.at_end() {
        return Ok(None);
    }

    let first = p.ident()?;
    p.skip_ws();
    let (id, head_name) = if p.peek() == Some(':') && p.peek_at(1) != Some('-') {
        p.bump();
        p.skip_ws();
        (first, p.ident()?)
    } else {
        (format!("r{line_no}"), first)
    };

    let mut vars = HashMap::new();
    let mut var_names = Vec::new();
    let head = p.atom_after_name(head_name, schema, symbols, &mut vars, &mut var_names)?;
    p.skip_ws();
    p.expect(':')?;
    p.expect('-')?;
    let mut body = Vec::new();
    loop {
        p.skip_ws();
        let name = p.ident()?;
        body.push(p.atom_after_name(name, schema, symbols, &mut vars, &mut var_names)?);
        p.skip_ws();
        match p.peek() {
            Some(',') => {
                p.bump();
            }
            Some('.') => {
                p.bump();
                break;
            }
            _ => return Err(p.syntax("expected `,` or `.`")),
        }
    }
    p.skip_ws();
    if !p.at_end() {
        return Err(p.syntax("unexpected input after `.`"));
    }

    if !schema.is_output(head.rel) {
        return Err(semantic(
            file,
            line_no,
            format!(
                "head relation `{}` is not an output relation",
                schema.decl(head.rel).name
            ),
        ));
    }
    let rule = Rule {
        id,
        head,
        body,
        var_names,
    };
    if !rule.is_range_restricted() {
        let unbound: Vec<&str> = rule
            .head
            .vars()
            .filter(|v| !rule.body.iter().any(|a| a.vars().any(|w| w == *v)))
            .map(|v| rule.var_names[v as usize].as_str())
            .collect();
        return Err(semantic(
            file,
            line_no,
            format!("unbound head variable `{}`", unbound.join("`, `")),
        ));
    }
    Ok(Some(rule))
}

struct RuleParser<'a> {
    chars: Vec<char>,
    pos: usize,
    file: &'a str,
    line: usize,
}

impl RuleParser<'_> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            file: self.file.to_owned(),
            line: self.line,
            column: self.pos + 1,
            message: message.to_owned(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.peek_at(0)
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        match self.chars.get(self.pos + k) {
            Some('#') => None,
            c => c.copied(),
        }
    }

    fn at_end(&self) -> bool {
        self.peek().is_none()
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.bump(),
            _ => return Err(self.syntax("expected an identifier")),
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn atom_after_name(
        &mut self,
        name: String,
        schema: &Schema,
        symbols: &mut SymbolTable,
        vars: &mut HashMap<String, u32>,
        var_names: &mut Vec<String>,
    ) -> Result<Atom> {
        let name_col = self.pos + 1 - name.chars().count();
        let rel = schema.lookup(&name).ok_or_else(|| {
            semantic(
                self.file,
                self.line,
                format!("undeclared relation `{name}` at column {name_col}"),
            )
        })?;
        self.skip_ws();
        self.expect('(')?;
        let mut terms = Vec::new();
        loop {
            self.skip_ws();
            terms.push(self.term(symbols, vars, var_names)?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.bump(),
                Some(')') => {
                    self.bump();
                    break;
                }
                _ => return Err(self.syntax("expected `,` or `)`")),
            }
        }
        let arity = schema.decl(rel).arity;
        if terms.len() != arity {
            return Err(semantic(
                self.file,
                self.line,
                format!(
                    "arity mismatch: `{name}` has arity {arity} but is used with {} arguments",
                    terms.len()
                ),
            ));
        }
        Ok(Atom::new(rel, terms))
    }

    fn term(
        &mut self,
        symbols: &mut SymbolTable,
        vars: &mut HashMap<String, u32>,
        var_names: &mut Vec<String>,
    ) -> Result<Term> {
        match self.peek() {
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.chars.get(self.pos).copied() {
                        None => return Err(self.syntax("unterminated string")),
                        Some('"') => {
                            self.bump();
                            break;
                        }
                        Some('\\') => {
                            self.bump();
                            match self.chars.get(self.pos).copied() {
                                Some(c) => {
                                    s.push(c);
                                    self.bump();
                                }
                                None => return Err(self.syntax("unterminated string")),
                            }
                        }
                        Some(c) => {
                            s.push(c);
                            self.bump();
                        }
                    }
                }
                Ok(Term::Const(symbols.intern(&s)))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
                let s: String = self.chars[start..self.pos].iter().collect();
                Ok(Term::Const(symbols.intern(&s)))
            }
            Some(c) if c.is_ascii_uppercase() => {
                let s = self.ident()?;
                Ok(Term::Const(symbols.intern(&s)))
            }
            Some(c) if c.is_ascii_lowercase() || c == '_' => {
                let s = self.ident()?;
                let next = var_names.len() as u32;
                let v = *vars.entry(s.clone()).or_insert_with(|| {
                    var_names.push(s);
                    next
                });
                Ok(Term::Var(v))
            }
            _ => Err(self.syntax("expected a variable or constant")),
        }
    }
}

/// Writes `rules.dl` text: one `id: rule.` line per rule after a header comment.
pub fn format_rules(schema: &Schema, symbols: &SymbolTable, rules: &[&Rule], header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for r in rules {
        out.push_str(&r.id);
        out.push_str(": ");
        out.push_str(&render_rule(schema, symbols, r));
        out.push('\n');
    }
    out
}

pub fn write_rules(
    path: &Path,
    schema: &Schema,
    symbols: &SymbolTable,
    rules: &[&Rule],
    header: &str,
) -> Result<()> {
    fs::write(path, format_rules(schema, symbols, rules, header)).map_err(|e| Error::io(path, e))
}

/// Writes a complete problem directory, creating it if needed.
pub fn write_problem(dir: &Path, problem: &Problem) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let schema = &problem.schema;
    let symbols = &problem.symbols;

    let mut rel_text = String::new();
    for (_, d) in schema.iter() {
        rel_text.push_str(&format!("{} {} {}\n", d.kind, d.name, d.arity));
    }
    write_file(&dir.join(RELATIONS_FILE), &rel_text)?;

    let row = |t: &Tuple| -> String {
        t.args
            .iter()
            .map(|&c| symbols.name(c))
            .collect::<Vec<_>>()
            .join("\t")
    };
    for (rel, d) in schema.iter() {
        if d.kind != RelationKind::Input {
            continue;
        }
        let mut text = String::new();
        for args in problem.input.relation(rel) {
            text.push_str(&row(&Tuple::new(rel, args.clone())));
            text.push('\n');
        }
        write_file(&dir.join(format!("{}.facts", d.name)), &text)?;
    }

    let labels = |set: &BTreeSet<Tuple>| -> String {
        set.iter()
            .map(|t| format!("{}\t{}\n", schema.decl(t.rel).name, row(t)))
            .collect()
    };
    write_file(&dir.join(POSITIVE_FILE), &labels(&problem.labels.positive))?;
    write_file(&dir.join(NEGATIVE_FILE), &labels(&problem.labels.negative))?;

    let rules: Vec<&Rule> = problem.rules.iter().collect();
    write_rules(&dir.join(RULES_FILE), schema, symbols, &rules, "candidate rules")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Structural rule equality ignoring ids and variable spelling.
pub fn same_rules(a: &[&Rule], b: &[&Rule]) -> bool {
    let key = |r: &&Rule| (r.head.clone(), r.body.clone());
    let a: HashSet<_> = a.iter().map(key).collect();
    let b: HashSet<_> = b.iter().map(key).collect();
    a == b
}
