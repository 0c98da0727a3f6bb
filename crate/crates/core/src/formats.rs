//! Text serializations of nets and traces.
//!
//! ANDL-style text:
//!
//! ```text
//! spn [sir]
//! {
//! places:
//!   S_p0 = 100;
//!   I_p0 = 0;
//! transitions:
//!   infect_p0 : [S_p0 - 1]&[I_p0 - 1] : [I_p0 + 2] : 0.1;
//! }
//! ```
//!
//! Arc terms follow canonical place order; an empty side is written `[]`.
//! Rates use the shortest decimal that parses back to the same `f64`.
//!
//! SBML-style XML (level 3 version 1 subset): places become `species` with an
//! `initialAmount`, transitions become `reaction`s with `speciesReference`
//! stoichiometries and a local parameter `rate`. Compartments, units and
//! MathML are not emitted. Empty lists are omitted.
//!
//! Trace CSV: `time,<places...>`, one row per recorded time.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::net::{is_identifier, Marking, NetError, PetriNet};
use crate::sim::Trace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Semantic(String),
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("element `{element}` is missing required attribute `{attribute}`")]
    Schema { element: String, attribute: String },
    #[error("trace CSV row {row}: {message}")]
    Trace { row: usize, message: String },
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// A net with its initial marking, transition rates and a model name.
#[derive(Debug, Clone, PartialEq)]
pub struct NetDocument {
    name: String,
    net: PetriNet,
    marking: Marking,
    rates: Vec<f64>,
}

impl NetDocument {
    pub fn new(
        name: impl Into<String>,
        net: PetriNet,
        marking: Marking,
        rates: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let mut aligned = Vec::with_capacity(net.transition_count());
        for t in net.transitions() {
            let r = rates
                .get(t)
                .ok_or_else(|| FormatError::Invalid(format!("no rate for transition `{t}`")))?;
            aligned.push(*r);
        }
        if rates.len() != net.transition_count() {
            let extra = rates
                .keys()
                .find(|k| net.transition_idx(k).is_err())
                .unwrap();
            return Err(FormatError::Invalid(format!(
                "rate for unknown transition `{extra}`"
            )));
        }
        Self::from_parts(name.into(), net, marking, aligned)
    }

    /// `rates` aligned with the net's transition order.
    pub fn from_parts(
        name: String,
        net: PetriNet,
        marking: Marking,
        rates: Vec<f64>,
    ) -> Result<Self> {
        if !is_identifier(&name) {
            return Err(FormatError::Invalid(format!(
                "model name `{name}` is not an identifier"
            )));
        }
        if marking.len() != net.place_count() {
            return Err(NetError::MarkingSize {
                expected: net.place_count(),
                got: marking.len(),
            }
            .into());
        }
        if rates.len() != net.transition_count() {
            return Err(FormatError::Invalid(
                "rates do not cover every transition".into(),
            ));
        }
        if let Some(i) = rates.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(FormatError::Invalid(format!(
                "rate of `{}` must be positive and finite, got {}",
                net.transitions()[i],
                rates[i]
            )));
        }
        Ok(NetDocument {
            name,
            net,
            marking,
            rates,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    /// Rates in transition order.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, transition: &str) -> Result<f64> {
        Ok(self.rates[self.net.transition_idx(transition)?])
    }

    pub fn rate_map(&self) -> BTreeMap<String, f64> {
        self.net
            .transitions()
            .iter()
            .cloned()
            .zip(self.rates.iter().copied())
            .collect()
    }

    pub fn set_rate(&mut self, transition: &str, rate: f64) -> Result<()> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(FormatError::Invalid(format!(
                "rate must be positive and finite, got {rate}"
            )));
        }
        let t = self.net.transition_idx(transition)?;
        self.rates[t] = rate;
        Ok(())
    }

    pub fn set_tokens(&mut self, place: &str, tokens: u64) -> Result<()> {
        self.marking.set(&self.net, place, tokens)?;
        Ok(())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(FormatError::Invalid(format!(
                "model name `{name}` is not an identifier"
            )));
        }
        self.name = name;
        Ok(self)
    }
}

/// Replaces characters that are not valid in a model name with `_`.
pub fn sanitize_name(raw: &str) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if !s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
        s.insert(0, '_');
    }
    s
}

pub fn emit_andl(doc: &NetDocument) -> String {
    let net = &doc.net;
    let mut out = String::new();
    let _ = write!(out, "spn [{}]\n{{\nplaces:\n", doc.name);
    for (p, n) in net.places().iter().zip(doc.marking.tokens()) {
        let _ = writeln!(out, "  {p} = {n};");
    }
    out.push_str("transitions:\n");
    let side = |out: &mut String, arcs: &[(usize, u64)], sign: char| {
        if arcs.is_empty() {
            out.push_str("[]");
        }
        for (k, &(p, w)) in arcs.iter().enumerate() {
            if k > 0 {
                out.push('&');
            }
            let _ = write!(out, "[{} {sign} {w}]", net.places()[p]);
        }
    };
    for (t, id) in net.transitions().iter().enumerate() {
        let _ = write!(out, "  {id} : ");
        side(&mut out, net.inputs(t), '-');
        out.push_str(" : ");
        side(&mut out, net.outputs(t), '+');
        let _ = writeln!(out, " : {};", doc.rates[t]);
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Punct(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.bump();
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    /// Next token with its starting `(line, column)`.
    fn next(&mut self) -> Result<(Tok, usize, usize)> {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.bump();
        }
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            Tok::Ident(self.take_while(|c| c.is_ascii_alphanumeric() || c == b'_'))
        } else if c.is_ascii_digit() {
            let mut s = self.take_while(|c| c.is_ascii_digit() || c == b'.');
            if matches!(self.peek(), Some(b'e' | b'E')) {
                s.push(self.bump() as char);
                if matches!(self.peek(), Some(b'+' | b'-')) {
                    s.push(self.bump() as char);
                }
                s.push_str(&self.take_while(|c| c.is_ascii_digit()));
            }
            Tok::Number(s)
        } else if b"[]{}:;=&-+".contains(&c) {
            self.bump();
            Tok::Punct(c as char)
        } else {
            return Err(FormatError::Syntax {
                line,
                column: col,
                message: format!("unexpected character `{}`", c as char),
            });
        };
        Ok((tok, line, col))
    }
}

struct AndlParser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    line: usize,
    col: usize,
    ahead: Option<(Tok, usize, usize)>,
}

impl<'a> AndlParser<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let mut lex = Lexer::new(text);
        let (tok, line, col) = lex.next()?;
        Ok(AndlParser {
            lex,
            tok,
            line,
            col,
            ahead: None,
        })
    }

    fn advance(&mut self) -> Result<Tok> {
        let (tok, line, col) = match self.ahead.take() {
            Some(t) => t,
            None => self.lex.next()?,
        };
        self.line = line;
        self.col = col;
        Ok(std::mem::replace(&mut self.tok, tok))
    }

    fn peek2(&mut self) -> Result<&Tok> {
        if self.ahead.is_none() {
            self.ahead = Some(self.lex.next()?);
        }
        Ok(&self.ahead.as_ref().unwrap().0)
    }

    fn error(&self, expected: &str) -> FormatError {
        FormatError::Syntax {
            line: self.line,
            column: self.col,
            message: format!("expected {expected}, found {}", self.tok.describe()),
        }
    }

    fn punct(&mut self, c: char) -> Result<()> {
        if self.tok == Tok::Punct(c) {
            self.advance()?;
            Ok(())
        } else {
            Err(self.error(&format!("`{c}`")))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match &self.tok {
            Tok::Ident(s) if s == kw => {
                self.advance()?;
                Ok(())
            }
            _ => Err(self.error(&format!("`{kw}`"))),
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize)> {
        let (line, col) = (self.line, self.col);
        match &self.tok {
            Tok::Ident(_) => match self.advance()? {
                Tok::Ident(s) => Ok((s, line, col)),
                _ => unreachable!(),
            },
            _ => Err(self.error("identifier")),
        }
    }

    fn integer(&mut self) -> Result<u64> {
        match &self.tok {
            Tok::Number(s) => match s.parse::<u64>() {
                Ok(v) => {
                    self.advance()?;
                    Ok(v)
                }
                Err(_) => Err(self.error("non-negative integer")),
            },
            _ => Err(self.error("non-negative integer")),
        }
    }

    fn real(&mut self) -> Result<f64> {
        match &self.tok {
            Tok::Number(s) => match s.parse::<f64>() {
                Ok(v) => {
                    self.advance()?;
                    Ok(v)
                }
                Err(_) => Err(self.error("number")),
            },
            _ => Err(self.error("number")),
        }
    }

    fn is_ident(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Ident(s) if s == kw)
    }

    /// `[]` or `[p - w]&[q - w]...`
    fn side(&mut self, sign: char) -> Result<Vec<(String, u64, usize, usize)>> {
        let mut terms = Vec::new();
        if self.tok == Tok::Punct('[') && *self.peek2()? == Tok::Punct(']') {
            self.advance()?;
            self.advance()?;
            return Ok(terms);
        }
        loop {
            self.punct('[')?;
            let (place, line, col) = self.ident()?;
            self.punct(sign)?;
            let w = self.integer()?;
            self.punct(']')?;
            terms.push((place, w, line, col));
            if self.tok != Tok::Punct('&') {
                return Ok(terms);
            }
            self.advance()?;
        }
    }
}

/// Parses ANDL-style text as produced by [`emit_andl`]. Whitespace between
/// tokens is free-form.
pub fn parse_andl(text: &str) -> Result<NetDocument> {
    let mut p = AndlParser::new(text)?;
    p.keyword("spn")?;
    p.punct('[')?;
    let (name, _, _) = p.ident()?;
    p.punct(']')?;
    p.punct('{')?;
    p.keyword("places")?;
    p.punct(':')?;

    let mut places: Vec<String> = Vec::new();
    let mut tokens = Vec::new();
    let mut seen = HashSet::new();
    while matches!(p.tok, Tok::Ident(_)) && *p.peek2()? == Tok::Punct('=') {
        let (id, _, _) = p.ident()?;
        p.punct('=')?;
        let n = p.integer()?;
        p.punct(';')?;
        if !seen.insert(id.clone()) {
            return Err(FormatError::Semantic(format!("duplicate place `{id}`")));
        }
        places.push(id);
        tokens.push(n);
    }
    if !p.is_ident("transitions") {
        return Err(p.error("place declaration or `transitions`"));
    }
    p.keyword("transitions")?;
    p.punct(':')?;

    struct TransitionLine {
        id: String,
        inputs: Vec<(String, u64, usize, usize)>,
        outputs: Vec<(String, u64, usize, usize)>,
        rate: f64,
    }
    let mut lines = Vec::new();
    while matches!(p.tok, Tok::Ident(_)) {
        let (id, _, _) = p.ident()?;
        p.punct(':')?;
        let inputs = p.side('-')?;
        p.punct(':')?;
        let outputs = p.side('+')?;
        p.punct(':')?;
        let rate = p.real()?;
        p.punct(';')?;
        if !seen.insert(id.clone()) {
            return Err(FormatError::Semantic(format!(
                "duplicate identifier `{id}`"
            )));
        }
        lines.push(TransitionLine {
            id,
            inputs,
            outputs,
            rate,
        });
    }
    p.punct('}')?;
    if p.tok != Tok::Eof {
        return Err(p.error("end of input"));
    }

    let place_set: HashSet<&str> = places.iter().map(String::as_str).collect();
    let mut b = PetriNet::builder();
    for id in &places {
        b = b.place(id);
    }
    let mut rates = Vec::with_capacity(lines.len());
    for line in &lines {
        b = b.transition(&line.id);
        for (arcs, dir) in [(&line.inputs, "input"), (&line.outputs, "output")] {
            let mut used = HashSet::new();
            for (place, w, l, c) in arcs {
                if !place_set.contains(place.as_str()) {
                    return Err(FormatError::Syntax {
                        line: *l,
                        column: *c,
                        message: format!("unknown place `{place}`"),
                    });
                }
                if *w == 0 {
                    return Err(FormatError::Syntax {
                        line: *l,
                        column: *c,
                        message: "arc weight must be at least 1".into(),
                    });
                }
                if !used.insert(place) {
                    return Err(FormatError::Semantic(format!(
                        "duplicate {dir} arc `{place}` on transition `{}`",
                        line.id
                    )));
                }
            }
        }
        for (place, w, _, _) in &line.inputs {
            b = b.input(place, &line.id, *w);
        }
        for (place, w, _, _) in &line.outputs {
            b = b.output(&line.id, place, *w);
        }
        rates.push(line.rate);
    }
    let net = b.build()?;
    NetDocument::from_parts(name, net, Marking::from_vec(tokens), rates)
}

pub fn emit_sbml(doc: &NetDocument) -> String {
    let net = &doc.net;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<sbml xmlns=\"http://www.sbml.org/sbml/level3/version1/core\" level=\"3\" version=\"1\">\n",
    );
    let _ = writeln!(out, "  <model id=\"{}\">", doc.name);
    if net.place_count() > 0 {
        out.push_str("    <listOfSpecies>\n");
        for (p, n) in net.places().iter().zip(doc.marking.tokens()) {
            let _ = writeln!(out, "      <species id=\"{p}\" initialAmount=\"{n}\"/>");
        }
        out.push_str("    </listOfSpecies>\n");
    }
    if net.transition_count() > 0 {
        out.push_str("    <listOfReactions>\n");
        for (t, id) in net.transitions().iter().enumerate() {
            let _ = writeln!(out, "      <reaction id=\"{id}\">");
            for (tag, arcs) in [
                ("listOfReactants", net.inputs(t)),
                ("listOfProducts", net.outputs(t)),
            ] {
                if arcs.is_empty() {
                    continue;
                }
                let _ = writeln!(out, "        <{tag}>");
                for &(p, w) in arcs {
                    let _ = writeln!(
                        out,
                        "          <speciesReference species=\"{}\" stoichiometry=\"{w}\"/>",
                        net.places()[p]
                    );
                }
                let _ = writeln!(out, "        </{tag}>");
            }
            out.push_str("        <kineticLaw>\n");
            out.push_str("          <listOfLocalParameters>\n");
            let _ = writeln!(
                out,
                "            <localParameter id=\"rate\" value=\"{}\"/>",
                doc.rates[t]
            );
            out.push_str("          </listOfLocalParameters>\n");
            out.push_str("        </kineticLaw>\n");
            out.push_str("      </reaction>\n");
        }
        out.push_str("    </listOfReactions>\n");
    }
    out.push_str("  </model>\n</sbml>\n");
    out
}

/// A parsed SBML document together with warnings about ignored content.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmlParse {
    pub document: NetDocument,
    pub warnings: Vec<String>,
}

fn required<'a>(node: roxmltree::Node<'a, '_>, attribute: &str) -> Result<&'a str> {
    node.attribute(attribute)
        .ok_or_else(|| FormatError::Schema {
            element: node.tag_name().name().to_string(),
            attribute: attribute.to_string(),
        })
}

fn amount(node: roxmltree::Node<'_, '_>, attribute: &str) -> Result<u64> {
    let raw = required(node, attribute)?;
    let bad = || {
        FormatError::Semantic(format!(
            "`{}` {attribute}=\"{raw}\" is not a non-negative integer",
            node.tag_name().name()
        ))
    };
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    // tools often write integral amounts as reals, e.g. "5.0"
    let v: f64 = raw.parse().map_err(|_| bad())?;
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) {
        Ok(v as u64)
    } else {
        Err(bad())
    }
}

fn elements<'a, 'i>(
    node: roxmltree::Node<'a, 'i>,
) -> impl Iterator<Item = roxmltree::Node<'a, 'i>> {
    node.children().filter(|n| n.is_element())
}

/// Parses the SBML subset written by [`emit_sbml`]. Unknown elements are
/// skipped and reported in [`SbmlParse::warnings`].
pub fn parse_sbml(text: &str) -> Result<SbmlParse> {
    let xml = roxmltree::Document::parse(text).map_err(|e| FormatError::Xml(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "sbml" {
        return Err(FormatError::Semantic(format!(
            "root element is `{}`, expected `sbml`",
            root.tag_name().name()
        )));
    }
    let mut warnings = Vec::new();
    let mut warn = |node: roxmltree::Node, within: &str| {
        warnings.push(format!(
            "ignored element `{}` in `{within}`",
            node.tag_name().name()
        ));
    };
    let mut model = None;
    for child in elements(root) {
        if child.tag_name().name() == "model" && model.is_none() {
            model = Some(child);
        } else {
            warn(child, "sbml");
        }
    }
    let model = model.ok_or_else(|| FormatError::Semantic("document has no `model`".into()))?;
    let name = required(model, "id")?.to_string();

    let mut b = PetriNet::builder();
    let mut tokens = Vec::new();
    let mut rates = Vec::new();
    let mut arcs: Vec<(String, String, u64, bool)> = Vec::new();
    let mut places = HashSet::new();
    let mut ids = HashSet::new();
    for section in elements(model) {
        match section.tag_name().name() {
            "listOfSpecies" => {
                for species in elements(section) {
                    if species.tag_name().name() != "species" {
                        warn(species, "listOfSpecies");
                        continue;
                    }
                    let id = required(species, "id")?;
                    let n = amount(species, "initialAmount")?;
                    if !ids.insert(id.to_string()) {
                        return Err(FormatError::Semantic(format!("duplicate species `{id}`")));
                    }
                    places.insert(id.to_string());
                    b = b.place(id);
                    tokens.push(n);
                }
            }
            "listOfReactions" => {
                for reaction in elements(section) {
                    if reaction.tag_name().name() != "reaction" {
                        warn(reaction, "listOfReactions");
                        continue;
                    }
                    let id = required(reaction, "id")?.to_string();
                    if !ids.insert(id.clone()) {
                        return Err(FormatError::Semantic(format!(
                            "duplicate identifier `{id}`"
                        )));
                    }
                    let mut rate = None;
                    for part in elements(reaction) {
                        let input = match part.tag_name().name() {
                            "listOfReactants" => true,
                            "listOfProducts" => false,
                            "kineticLaw" => {
                                rate = rate.or(parse_rate(part, &mut warn)?);
                                continue;
                            }
                            _ => {
                                warn(part, "reaction");
                                continue;
                            }
                        };
                        for r in elements(part) {
                            if r.tag_name().name() != "speciesReference" {
                                warn(r, part.tag_name().name());
                                continue;
                            }
                            let species = required(r, "species")?.to_string();
                            let w = amount(r, "stoichiometry")?;
                            arcs.push((species, id.clone(), w, input));
                        }
                    }
                    let rate = rate.ok_or_else(|| FormatError::Schema {
                        element: "reaction".into(),
                        attribute: "rate".into(),
                    })?;
                    b = b.transition(&id);
                    rates.push(rate);
                }
            }
            _ => warn(section, "model"),
        }
    }
    let mut distinct = HashSet::new();
    for (species, reaction, w, input) in &arcs {
        if !places.contains(species) {
            return Err(FormatError::Semantic(format!(
                "reaction `{reaction}` references unknown species `{species}`"
            )));
        }
        if !distinct.insert((species, reaction, *input)) {
            return Err(FormatError::Semantic(format!(
                "duplicate species reference `{species}` in reaction `{reaction}`"
            )));
        }
        b = if *input {
            b.input(species, reaction, *w)
        } else {
            b.output(reaction, species, *w)
        };
    }
    let document = NetDocument::from_parts(name, b.build()?, Marking::from_vec(tokens), rates)?;
    Ok(SbmlParse { document, warnings })
}

fn parse_rate(
    law: roxmltree::Node<'_, '_>,
    warn: &mut impl FnMut(roxmltree::Node, &str),
) -> Result<Option<f64>> {
    let mut rate = None;
    for child in elements(law) {
        if child.tag_name().name() != "listOfLocalParameters" {
            warn(child, "kineticLaw");
            continue;
        }
        for param in elements(child) {
            if param.tag_name().name() != "localParameter" {
                warn(param, "listOfLocalParameters");
                continue;
            }
            if required(param, "id")? != "rate" {
                continue;
            }
            let raw = required(param, "value")?;
            let v: f64 = raw.parse().map_err(|_| {
                FormatError::Semantic(format!("rate value `{raw}` is not a number"))
            })?;
            rate = Some(v);
        }
    }
    Ok(rate)
}

pub fn write_trace_csv(trace: &Trace) -> String {
    let mut out = String::from("time");
    for p in &trace.places {
        out.push(',');
        out.push_str(p);
    }
    out.push('\n');
    for (t, row) in trace.times.iter().zip(&trace.rows) {
        let _ = write!(out, "{t}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Reads a trace CSV; rows are numbered from the header (row 1).
pub fn read_trace_csv(text: &str) -> Result<Trace> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(FormatError::Trace {
        row: 1,
        message: "missing header".into(),
    })?;
    let mut cols = header.split(',').map(str::trim);
    if cols.next() != Some("time") {
        return Err(FormatError::Trace {
            row: 1,
            message: "header must start with `time`".into(),
        });
    }
    let places: Vec<String> = cols.map(str::to_string).collect();
    let mut trace = Trace {
        places,
        times: Vec::new(),
        rows: Vec::new(),
    };
    for (i, line) in lines {
        let row = i + 1;
        let err = |message: String| FormatError::Trace { row, message };
        let mut fields = line.split(',').map(str::trim);
        let t: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|t: &f64| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| err("time must be a non-negative number".into()))?;
        if trace.times.last().is_some_and(|&prev| t <= prev) {
            return Err(err(format!("time {t} is not strictly increasing")));
        }
        let values = fields
            .map(|s| s.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| err("token counts must be non-negative integers".into()))?;
        if values.len() != trace.places.len() {
            return Err(err(format!(
                "expected {} values, found {}",
                trace.places.len(),
                values.len()
            )));
        }
        trace.times.push(t);
        trace.rows.push(values);
    }
    Ok(trace)
}
