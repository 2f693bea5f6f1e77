//! The V5 command language: parser, command formatting and the session that
//! executes commands against an engine.

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::core::{eval_contextual, eval_isa_all, format_point, format_ref, PointId, PointRef, Variant};
use crate::engine::links::resolve_surrogate;
use crate::engine::ltt::thought_tree;
use crate::engine::{Engine, Op, Reg};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Label(String),
    Hex { number: u32, surrogate: bool },
    Time(u64),
}

/// A point reference as written in a command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefExpr {
    pub atom: Atom,
    pub variant: Variant,
    pub quoted: bool,
    pub remove: bool,
}

impl RefExpr {
    pub fn label(l: &str) -> Self {
        RefExpr { atom: Atom::Label(l.to_string()), variant: Variant::Base, quoted: false, remove: false }
    }
}

impl fmt::Display for RefExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.remove {
            f.write_str("-")?;
        }
        if self.quoted {
            f.write_str("@")?;
        }
        match &self.atom {
            Atom::Label(l) => f.write_str(l)?,
            Atom::Hex { number, surrogate } => write!(f, "#{number:x}{}", if *surrogate { "?" } else { "" })?,
            Atom::Time(t) => write!(f, "m({t})")?,
        }
        match self.variant {
            Variant::Base => Ok(()),
            Variant::Isa => f.write_str(".i"),
            Variant::Value => f.write_str(".v"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TwineItem {
    /// `parents<children|ctx`: [child.i ctx] = parent for every pair.
    Isa { parents: Vec<RefExpr>, children: Vec<RefExpr>, ctx: Vec<RefExpr> },
    /// `point>values|ctx`: [point.v ctx] = values.
    Value { point: RefExpr, values: Vec<RefExpr>, ctx: Vec<RefExpr> },
    /// `a:b|ctx`: [a.v ctx] = b and [b.i ctx] = a.
    Double { a: RefExpr, b: RefExpr, ctx: Vec<RefExpr> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalTarget {
    Key(Vec<RefExpr>),
    Ref(RefExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetOption {
    Autodef(bool),
    NewThought,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Empty,
    Def(Vec<RefExpr>),
    Bind { bonus: u32, key: Vec<RefExpr>, ordered: bool, equals: bool, values: Vec<RefExpr> },
    Twine(Vec<TwineItem>),
    Eval(EvalTarget),
    Ps(Vec<RefExpr>),
    Run(Option<RefExpr>),
    Set(SetOption),
    Show(String),
    Trace(Vec<String>),
}

fn join(refs: &[RefExpr], sep: &str) -> String {
    refs.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

fn ctx_suffix(ctx: &[RefExpr]) -> String {
    if ctx.is_empty() {
        String::new()
    } else {
        format!("|{}", join(ctx, ","))
    }
}

impl fmt::Display for TwineItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwineItem::Isa { parents, children, ctx } => write!(f, "{}<{}{}", join(parents, ","), join(children, ","), ctx_suffix(ctx)),
            TwineItem::Value { point, values, ctx } => write!(f, "{point}>{}{}", join(values, ","), ctx_suffix(ctx)),
            TwineItem::Double { a, b, ctx } => write!(f, "{a}:{b}{}", ctx_suffix(ctx)),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Empty => Ok(()),
            Command::Def(r) => write!(f, "def {}", join(r, ",")),
            Command::Bind { bonus, key, ordered, equals, values } => {
                f.write_str("bind ")?;
                if *bonus > 0 {
                    write!(f, "+{bonus} ")?;
                }
                write!(f, "[{}]", join(key, if *ordered { "/" } else { " " }))?;
                f.write_str(if *equals { " = " } else { " " })?;
                f.write_str(&join(values, ","))
            }
            Command::Twine(items) => {
                write!(f, "twine {}", items.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ; "))
            }
            Command::Eval(EvalTarget::Key(k)) => write!(f, "eval [{}]", join(k, " ")),
            Command::Eval(EvalTarget::Ref(r)) => write!(f, "eval {r}"),
            Command::Ps(r) => write!(f, "ps {}", join(r, ",")),
            Command::Run(None) => f.write_str("run"),
            Command::Run(Some(op)) => write!(f, "run {op}"),
            Command::Set(SetOption::Autodef(on)) => write!(f, "set autodef {}", if *on { "on" } else { "off" }),
            Command::Set(SetOption::NewThought) => f.write_str("set newthought"),
            Command::Show(what) => write!(f, "show {what}"),
            Command::Trace(args) => write!(f, "trace {}", args.join(" ")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at column {col}: {msg}")]
    Syntax { col: usize, msg: String },
}

fn syntax(col: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { col, msg: msg.into() }
}

fn is_label_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Parses one reference; `col` is the column of `s` in the line.
pub fn parse_ref(s: &str, col: usize) -> Result<RefExpr, ParseError> {
    let mut rest = s.trim();
    let col = col + (s.len() - s.trim_start().len());
    let (mut remove, mut quoted) = (false, false);
    loop {
        if let Some(r) = rest.strip_prefix('-') {
            remove = true;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('@') {
            quoted = true;
            rest = r;
        } else {
            break;
        }
    }
    let (body, variant) = if let Some(b) = rest.strip_suffix(".v") {
        (b, Variant::Value)
    } else if let Some(b) = rest.strip_suffix(".i") {
        (b, Variant::Isa)
    } else {
        (rest, Variant::Base)
    };
    if body.is_empty() {
        return Err(syntax(col, "expected a point"));
    }
    let atom = if let Some(h) = body.strip_prefix('#') {
        let (digits, surrogate) = match h.strip_suffix('?') {
            Some(d) => (d, true),
            None => (h, false),
        };
        let number = u32::from_str_radix(digits, 16).map_err(|_| syntax(col, format!("bad point number `{body}`")))?;
        Atom::Hex { number, surrogate }
    } else if body.starts_with('"') {
        if body.len() < 2 || !body.ends_with('"') || body[1..body.len() - 1].contains('"') {
            return Err(syntax(col, format!("bad quoted label `{body}`")));
        }
        Atom::Label(body.to_string())
    } else if let Some(n) = body.strip_prefix("m(").and_then(|b| b.strip_suffix(')')) {
        Atom::Time(n.trim().parse().map_err(|_| syntax(col, format!("bad time point `{body}`")))?)
    } else if body.chars().all(is_label_char) {
        Atom::Label(body.to_string())
    } else {
        return Err(syntax(col, format!("bad label `{body}`")));
    };
    Ok(RefExpr { atom, variant, quoted, remove })
}

/// Splits on `sep` outside double quotes, returning pieces with their offsets.
fn split_top(s: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut in_quote = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        if c == '"' {
            in_quote = !in_quote;
        } else if c == sep && !in_quote {
            out.push((start, &s[start..i]));
            start = i + c.len_utf8();
        }
    }
    out.push((start, &s[start..]));
    out
}

fn find_top(s: &str, pred: impl Fn(char) -> bool) -> Option<(usize, char)> {
    let mut in_quote = false;
    for (i, c) in s.char_indices() {
        if c == '"' {
            in_quote = !in_quote;
        } else if !in_quote && pred(c) {
            return Some((i, c));
        }
    }
    None
}

fn parse_list(s: &str, col: usize) -> Result<Vec<RefExpr>, ParseError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top(s, ',').into_iter().map(|(off, part)| parse_ref(part, col + off)).collect()
}

fn parse_twine_item(s: &str, col: usize) -> Result<Option<TwineItem>, ParseError> {
    let mut body = s.trim();
    let mut col = col + (s.len() - s.trim_start().len());
    if body.is_empty() {
        return Ok(None);
    }
    if let Some(r) = body.strip_prefix("twine ").or_else(|| body.strip_prefix("Twine ")) {
        col += body.len() - r.len();
        body = r;
    }
    let (main, ctx) = match find_top(body, |c| c == '|') {
        Some((i, _)) => (&body[..i], parse_list(&body[i + 1..], col + i + 1)?),
        None => (body, Vec::new()),
    };
    let Some((i, op)) = find_top(main, |c| c == '<' || c == '>' || c == ':') else {
        return Err(syntax(col, format!("expected `<`, `>` or `:` in `{body}`")));
    };
    let (lhs, rhs) = (&main[..i], &main[i + 1..]);
    let rcol = col + i + 1;
    Ok(Some(match op {
        '<' => TwineItem::Isa { parents: parse_list(lhs, col)?, children: parse_list(rhs, rcol)?, ctx },
        '>' => TwineItem::Value { point: parse_ref(lhs, col)?, values: parse_list(rhs, rcol)?, ctx },
        _ => TwineItem::Double { a: parse_ref(lhs, col)?, b: parse_ref(rhs, rcol)?, ctx },
    }))
}

fn parse_key(s: &str, col: usize) -> Result<(Vec<RefExpr>, bool), ParseError> {
    let ordered = s.contains('/');
    let mut key = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices().chain(std::iter::once((s.len(), ' '))) {
        let sep = c.is_whitespace() || c == '/';
        match (start, sep) {
            (None, false) => start = Some(i),
            (Some(b), true) => {
                key.push(parse_ref(&s[b..i], col + b)?);
                start = None;
            }
            _ => {}
        }
    }
    Ok((key, ordered))
}

/// Splits `[ ... ]` off the front of `s`, returning the inside and the rest.
fn bracketed(s: &str, col: usize) -> Result<(&str, &str), ParseError> {
    let s = s.trim_start();
    let Some(inner) = s.strip_prefix('[') else {
        return Err(syntax(col, "expected `[`"));
    };
    let Some(end) = inner.find(']') else {
        return Err(syntax(col, "missing `]`"));
    };
    Ok((&inner[..end], &inner[end + 1..]))
}

/// Parses one logical command line (comments already removed).
pub fn parse_command(line: &str) -> Result<Command, ParseError> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(Command::Empty);
    }
    let (word, rest) = match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], &line[i..]),
        None => (line, ""),
    };
    let col = word.len() + 1;
    let arg = rest.trim();
    match word.to_ascii_lowercase().as_str() {
        "def" => Ok(Command::Def(parse_list(arg, col)?)),
        "bind" => {
            let mut rest = arg;
            let mut bonus = 0;
            if let Some(r) = rest.strip_prefix('+') {
                let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
                bonus = r[..end].parse().map_err(|_| syntax(col, "bad bonus"))?;
                rest = &r[end..];
            }
            let (inner, after) = bracketed(rest, col)?;
            let (key, ordered) = parse_key(inner, col + 1)?;
            if key.is_empty() {
                return Err(syntax(col, "empty key set"));
            }
            let mut after = after.trim();
            let equals = after.starts_with('=');
            if equals {
                after = after[1..].trim();
            }
            let values = parse_list(after, col)?;
            if values.is_empty() {
                return Err(syntax(col, "missing value"));
            }
            Ok(Command::Bind { bonus, key, ordered, equals, values })
        }
        "twine" => {
            let mut items = Vec::new();
            for (off, part) in split_top(arg, ';') {
                if let Some(item) = parse_twine_item(part, col + off)? {
                    items.push(item);
                }
            }
            if items.is_empty() {
                return Err(syntax(col, "no twines"));
            }
            Ok(Command::Twine(items))
        }
        "eval" => {
            if arg.starts_with('[') {
                let (inner, after) = bracketed(arg, col)?;
                if !after.trim().is_empty() {
                    return Err(syntax(col, "unexpected text after key set"));
                }
                Ok(Command::Eval(EvalTarget::Key(parse_key(inner, col + 1)?.0)))
            } else {
                Ok(Command::Eval(EvalTarget::Ref(parse_ref(arg, col)?)))
            }
        }
        "ps" => Ok(Command::Ps(parse_list(arg, col)?)),
        "run" => Ok(Command::Run(if arg.is_empty() { None } else { Some(parse_ref(arg, col)?) })),
        "set" => {
            let parts: Vec<&str> = arg.split_whitespace().collect();
            match parts.as_slice() {
                ["autodef", "on"] => Ok(Command::Set(SetOption::Autodef(true))),
                ["autodef", "off"] => Ok(Command::Set(SetOption::Autodef(false))),
                ["newthought"] => Ok(Command::Set(SetOption::NewThought)),
                _ => Err(syntax(col, format!("unknown setting `{arg}`"))),
            }
        }
        "show" if !arg.is_empty() => Ok(Command::Show(arg.to_string())),
        "trace" if !arg.is_empty() => Ok(Command::Trace(arg.split_whitespace().map(str::to_string).collect())),
        _ => Err(syntax(1, format!("unknown command `{word}`"))),
    }
}

/// Removes `/* ... */` comments and joins indented continuation lines.
pub fn logical_lines(text: &str) -> Vec<String> {
    let mut stripped = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find("/*") {
        stripped.push_str(&rest[..i]);
        match rest[i + 2..].find("*/") {
            Some(j) => {
                let comment = &rest[i + 2..i + 2 + j];
                stripped.extend(comment.chars().filter(|&c| c == '\n'));
                rest = &rest[i + 2 + j + 2..];
            }
            None => {
                rest = "";
            }
        }
    }
    stripped.push_str(rest);
    let mut out: Vec<String> = Vec::new();
    for line in stripped.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with([' ', '\t']) {
            if let Some(prev) = out.last_mut() {
                prev.push(' ');
                prev.push_str(line.trim());
                continue;
            }
        }
        out.push(line.trim().to_string());
    }
    out
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
}

/// Command interpreter state around one engine.
#[derive(Clone, Debug)]
pub struct Session {
    pub engine: Engine,
    pub autodef: bool,
    pub trace_autodef: bool,
    pub strict: bool,
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}

struct Unknown(String);

impl Session {
    pub fn new() -> Self {
        Session { engine: Engine::new(), autodef: false, trace_autodef: false, strict: false }
    }

    fn atom_point(&mut self, atom: &Atom, created: &mut Vec<String>) -> Result<PointId, Unknown> {
        match atom {
            Atom::Label(l) => match self.engine.store.lookup(l) {
                Some(p) => Ok(p),
                None if self.autodef => {
                    created.push(l.clone());
                    Ok(self.engine.store.define(l))
                }
                None => Err(Unknown(l.clone())),
            },
            Atom::Hex { number, .. } => {
                let id = number / 4;
                if number % 4 == 0 && (id as usize) < self.engine.store.points().len() {
                    Ok(id)
                } else {
                    Err(Unknown(format!("#{number:x}")))
                }
            }
            Atom::Time(t) => Ok(self.engine.store.time_point(*t)),
        }
    }

    /// Resolves refs to point refs. With `registers` set, base register refs
    /// are replaced by their current contents.
    fn resolve(&mut self, refs: &[RefExpr], registers: bool, created: &mut Vec<String>) -> Result<Vec<PointRef>, String> {
        let mut out = Vec::new();
        for r in refs {
            let p = self.atom_point(&r.atom, created).map_err(|Unknown(l)| format!("? Undefined point: {l}"))?;
            let mut pr = PointRef { point: p, variant: r.variant, quoted: r.quoted, remove: r.remove };
            if registers && pr.is_base() {
                if let Some(reg) = self.engine.reg_of(p) {
                    match self.engine.register(reg) {
                        Some(v) => pr = PointRef { remove: r.remove, quoted: r.quoted, ..v },
                        None => return Err(format!("? Internal register (op={}) has no value", reg.number())),
                    }
                }
            }
            out.push(pr);
        }
        Ok(out)
    }

    /// Resolves every ref of a command up front so that an unknown label
    /// leaves the session untouched.
    fn check_labels(&self, cmd: &Command) -> Result<(), String> {
        if self.autodef {
            return Ok(());
        }
        let mut refs: Vec<&RefExpr> = Vec::new();
        match cmd {
            Command::Bind { key, values, .. } => refs.extend(key.iter().chain(values)),
            Command::Twine(items) => {
                for it in items {
                    match it {
                        TwineItem::Isa { parents, children, ctx } => refs.extend(parents.iter().chain(children).chain(ctx)),
                        TwineItem::Value { point, values, ctx } => {
                            refs.push(point);
                            refs.extend(values.iter().chain(ctx));
                        }
                        TwineItem::Double { a, b, ctx } => {
                            refs.extend([a, b]);
                            refs.extend(ctx);
                        }
                    }
                }
            }
            Command::Eval(EvalTarget::Key(k)) | Command::Ps(k) => refs.extend(k),
            Command::Eval(EvalTarget::Ref(r)) | Command::Run(Some(r)) => refs.push(r),
            _ => {}
        }
        for r in refs {
            if let Atom::Label(l) = &r.atom {
                if self.engine.store.lookup(l).is_none() {
                    return Err(format!("? Undefined point: {l}"));
                }
            }
        }
        Ok(())
    }

    pub fn execute(&mut self, cmd: &Command) -> Vec<String> {
        if let Err(e) = self.check_labels(cmd) {
            return vec![e];
        }
        let mut created = Vec::new();
        let mut out = match self.dispatch(cmd, &mut created) {
            Ok(lines) => lines,
            Err(e) => {
                let mut lines = self.engine.take_output();
                lines.push(e);
                lines
            }
        };
        if self.trace_autodef && !created.is_empty() {
            let mut lines: Vec<String> = created.iter().map(|l| format!("autodef: {l}")).collect();
            lines.append(&mut out);
            out = lines;
        }
        out
    }

    /// Parses and executes one logical line.
    pub fn execute_line(&mut self, line: &str) -> Result<Vec<String>, ParseError> {
        let cmd = parse_command(line)?;
        Ok(self.execute(&cmd))
    }

    fn dispatch(&mut self, cmd: &Command, created: &mut Vec<String>) -> Result<Vec<String>, String> {
        match cmd {
            Command::Empty => {}
            Command::Def(labels) => {
                for r in labels {
                    match &r.atom {
                        Atom::Label(l) => {
                            self.engine.store.define(l);
                        }
                        _ => return Err(format!("? Cannot define {r}")),
                    }
                }
            }
            Command::Bind { bonus, key, ordered, values, .. } => {
                let key = self.resolve(key, true, created)?;
                let values = self.resolve(values, false, created)?;
                self.engine.bind(key, values, *bonus, *ordered);
            }
            Command::Twine(items) => {
                for it in items {
                    self.twine(it, created)?;
                }
            }
            Command::Eval(target) => return self.eval(target, created),
            Command::Ps(refs) => {
                let refs = self.resolve(refs, false, created)?;
                self.engine.set_ps(&refs);
            }
            Command::Run(op) => {
                self.engine.clock += 1;
                let result = match op {
                    None => self.engine.run().map(|_| ()),
                    Some(r) => {
                        let p = self.resolve(std::slice::from_ref(r), false, created)?[0];
                        match self.engine.op_of(p.point) {
                            Some((op, traced)) => self.engine.exec(op, traced),
                            None => return Err(format!("? {r} is not an opcode")),
                        }
                    }
                };
                if let Err(e) = result {
                    let mut lines = self.engine.take_output();
                    lines.push(format!("? {e}"));
                    return Ok(lines);
                }
            }
            Command::Set(SetOption::Autodef(on)) => self.autodef = *on,
            Command::Set(SetOption::NewThought) => {
                self.engine.new_thought();
            }
            Command::Show(what) => return self.show(what),
            Command::Trace(args) => self.trace(args)?,
        }
        Ok(self.engine.take_output())
    }

    fn twine(&mut self, item: &TwineItem, created: &mut Vec<String>) -> Result<(), String> {
        match item {
            TwineItem::Isa { parents, children, ctx } => {
                let ctx = self.resolve(ctx, true, created)?;
                let parents = self.resolve(parents, false, created)?;
                let children = self.resolve(children, false, created)?;
                for c in &children {
                    for p in &parents {
                        let mut key = vec![PointRef::isa(c.point)];
                        key.extend(&ctx);
                        self.engine.bind(key, vec![*p], 0, false);
                    }
                }
            }
            TwineItem::Value { point, values, ctx } => {
                let ctx = self.resolve(ctx, true, created)?;
                let p = self.resolve(std::slice::from_ref(point), false, created)?[0];
                let values = self.resolve(values, false, created)?;
                let mut key = vec![PointRef::value(p.point)];
                key.extend(&ctx);
                self.engine.bind(key, values, 0, false);
            }
            TwineItem::Double { a, b, ctx } => {
                let ctx = self.resolve(ctx, true, created)?;
                let ab = self.resolve(&[a.clone(), b.clone()], false, created)?;
                let mut k1 = vec![PointRef::value(ab[0].point)];
                k1.extend(&ctx);
                self.engine.bind(k1, vec![PointRef::base(ab[1].point)], 0, false);
                let mut k2 = vec![PointRef::isa(ab[1].point)];
                k2.extend(&ctx);
                self.engine.bind(k2, vec![PointRef::base(ab[0].point)], 0, false);
            }
        }
        Ok(())
    }

    fn result_line(&self, values: &[PointRef]) -> String {
        format!("    result = {}", self.engine.fmt_refs(values, ", "))
    }

    fn eval(&mut self, target: &EvalTarget, created: &mut Vec<String>) -> Result<Vec<String>, String> {
        let mut out = Vec::new();
        match target {
            EvalTarget::Key(k) => {
                let key = self.resolve(k, true, created)?;
                let ctx = self.engine.context();
                let result = if key.len() == 1 && key[0].variant == Variant::Value {
                    self.engine.eval_value_variant(&ctx, key[0].point)
                } else {
                    eval_contextual(&self.engine.store, &ctx, &key).map(|o| o.values)
                };
                match result {
                    Ok(v) => out.push(self.result_line(&v)),
                    Err(_) => out.push("? No result found".into()),
                }
            }
            EvalTarget::Ref(r) => {
                let p = self.resolve(std::slice::from_ref(r), false, created)?[0];
                let ctx = self.engine.context();
                match p.variant {
                    Variant::Value => match self.engine.eval_value_variant(&ctx, p.point) {
                        Ok(v) => out.push(self.result_line(&v)),
                        Err(_) => out.push("? No result found".into()),
                    },
                    Variant::Isa => {
                        let isa: Vec<PointRef> = eval_isa_all(&self.engine.store, &ctx, p.point).into_iter().map(PointRef::base).collect();
                        if isa.is_empty() {
                            out.push("? No result found".into());
                        } else {
                            out.push(self.result_line(&isa));
                        }
                    }
                    Variant::Base => {
                        if let Some((op, traced)) = self.engine.op_of(p.point) {
                            if let Err(e) = self.engine.exec(op, traced) {
                                out.extend(self.engine.take_output());
                                out.push(format!("? {e}"));
                                return Ok(out);
                            }
                        } else if let Some(reg) = self.engine.reg_of(p.point) {
                            match self.engine.register(reg) {
                                Some(v) => out.push(format!("  Register {} = {}", reg.name(), format_ref(&self.engine.store, &v))),
                                None => out.push(format!("? Internal register (op={}) has no value", reg.number())),
                            }
                        } else if self.engine.store.point(p.point).is_surrogate() {
                            match resolve_surrogate(&self.engine, p.point) {
                                Some(x) => out.push(self.result_line(&[PointRef::base(x)])),
                                None => out.push("? Surrogate not resolved".into()),
                            }
                        } else {
                            match eval_contextual(&self.engine.store, &ctx, &[p]) {
                                Ok(o) => out.push(self.result_line(&o.values)),
                                Err(_) => out.push("? No result found".into()),
                            }
                        }
                    }
                }
            }
        }
        let mut lines = self.engine.take_output();
        lines.append(&mut out);
        Ok(lines)
    }

    fn show(&mut self, what: &str) -> Result<Vec<String>, String> {
        let e = &self.engine;
        let line = match what.to_ascii_lowercase().as_str() {
            "ps" => format!("ps: {}", e.fmt_ps()),
            "aggset" | "as" => {
                if e.aggset.is_empty() {
                    "aggset: *empty*".into()
                } else {
                    format!("aggset: {}", e.fmt_points(&e.aggset))
                }
            }
            "tcs" => {
                if e.tc.is_empty() {
                    "tcs: *empty*".into()
                } else {
                    format!("tcs: {}", e.fmt_points(&e.tc))
                }
            }
            "pq" => format!("pq: {}", if e.pq.is_empty() { "*empty*".into() } else { e.fmt_refs(&e.pq, " ") }),
            "opcodes" => {
                let mut counts: Vec<(Op, u64)> = e.op_counts.iter().map(|(&o, &n)| (o, n)).collect();
                counts.sort();
                if counts.is_empty() {
                    return Ok(vec!["opcodes: *none*".into()]);
                }
                return Ok(counts.into_iter().map(|(o, n)| format!("{}: {n}", o.name())).collect());
            }
            "thought" => {
                let t = e.thought();
                return Ok(thought_tree(e, t).render(e));
            }
            _ => return Err(format!("? Unknown show target: {what}")),
        };
        Ok(vec![line])
    }

    fn trace(&mut self, args: &[String]) -> Result<(), String> {
        let t = &mut self.engine.trace;
        match args.first().map(String::as_str) {
            Some("off") => {
                *t = Default::default();
                self.trace_autodef = false;
            }
            Some("bind" | "binding") => t.bind = true,
            Some("twine") => t.twine = true,
            Some("eval") => t.eval = true,
            Some("reduce") => t.reduce = true,
            Some("autodef") => self.trace_autodef = true,
            Some("sequence") => match args.get(1) {
                Some(p) => t.sequence = Some(p.clone()),
                None => return Err("? trace sequence needs a label prefix".into()),
            },
            Some(op) => match Op::parse(op) {
                Some((op, _)) => {
                    t.ops.insert(op);
                }
                None => return Err(format!("? Unknown trace option: {op}")),
            },
            None => return Err("? trace needs an option".into()),
        }
        Ok(())
    }

    /// Runs script text, echoing each logical command followed by its output.
    pub fn run_text(&mut self, text: &str) -> Result<Vec<String>, ScriptError> {
        let mut transcript = Vec::new();
        for (n, line) in logical_lines(text).into_iter().enumerate() {
            transcript.push(line.clone());
            match parse_command(&line) {
                Ok(cmd) => transcript.extend(self.execute(&cmd)),
                Err(e) if self.strict => return Err(ScriptError::Parse { line: n + 1, source: e }),
                Err(e) => transcript.push(format!("? {e}")),
            }
        }
        Ok(transcript)
    }

    pub fn run_script(&mut self, path: &Path) -> Result<Vec<String>, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io { path: path.display().to_string(), source })?;
        self.run_text(&text)
    }

    pub fn point_label(&self, p: PointId) -> String {
        format_point(&self.engine.store, p)
    }
}

/// Convenience: runs `text` in a fresh lenient session.
pub fn run_script_text(text: &str) -> Vec<String> {
    Session::new().run_text(text).expect("lenient sessions never fail")
}

impl Reg {
    pub fn from_label(l: &str) -> Option<Reg> {
        Reg::ALL.into_iter().find(|r| r.name() == l)
    }
}
