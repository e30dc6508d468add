//! Random CREATE scripts in varied surface syntax, together with the triples
//! they must decode to.

use rand::seq::IndexedRandom;
use rand::Rng;

use pgakv_core::{Graph, Stage, Triple};

#[derive(Debug, Clone)]
pub struct GeneratedScript {
    pub text: String,
    /// Relationships in script order, before deduplication.
    pub relationships: Vec<(String, String, String)>,
}

impl GeneratedScript {
    pub fn expected_graph(&self) -> Graph {
        Graph::from_triples(
            Stage::Pseudo,
            self.relationships
                .iter()
                .map(|(s, r, o)| Triple::new(s, r, o).expect("generator emits valid fields")),
        )
    }
}

const VALUES: &[&str] = &[
    "Alan Turing",
    "London",
    "King's College",
    "Nobel Prize in Physics",
    "8849 metres",
    "Zürich",
    "東京",
    "say \"hi\"",
    "back\\slash",
    "a | b",
    "O'Brien",
    "x",
    "MATCH",
    "semi;colon",
    "(paren)",
    "1912",
];
const LABELS: &[&str] = &["Person", "City", "Thing", "Award", "Film", "River", "X1"];
const REL_TYPES: &[&str] = &[
    "BORN_IN",
    "FIELD_OF_WORK",
    "CAPITAL",
    "knows",
    "LOCATED_ON_RIVER",
    "Award_Received",
    "X",
];
const VARS: &[&str] = &["a", "b", "c", "n1", "person", "city", "x_2", "node", "create"];

fn quote<R: Rng>(rng: &mut R, v: &str) -> String {
    let q = if rng.random_bool(0.5) { '"' } else { '\'' };
    let mut out = String::new();
    out.push(q);
    for c in v.chars() {
        if c == q || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push(q);
    out
}

fn ident<R: Rng>(rng: &mut R, name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.eq_ignore_ascii_case("create");
    if plain && rng.random_bool(0.8) {
        name.to_string()
    } else {
        format!("`{name}`")
    }
}

fn keyword<R: Rng>(rng: &mut R, kw: &str) -> String {
    match rng.random_range(0..3) {
        0 => kw.to_uppercase(),
        1 => kw.to_lowercase(),
        _ => {
            let mut c = kw.chars();
            let first = c.next().map(|f| f.to_ascii_uppercase()).into_iter();
            first.chain(c.flat_map(|x| x.to_lowercase())).collect()
        }
    }
}

fn space<R: Rng>(rng: &mut R) -> &'static str {
    [" ", "  ", "\n", " \t"].choose(rng).unwrap()
}

struct State {
    /// variable name and identifying value, for variables already bound
    bound: Vec<(String, String)>,
    fresh: usize,
}

impl State {
    fn new_var<R: Rng>(&mut self, rng: &mut R) -> Option<String> {
        let base = VARS.choose(rng).unwrap();
        let name = format!("{base}{}", self.fresh);
        self.fresh += 1;
        // anonymous nodes a quarter of the time
        (!rng.random_bool(0.25)).then_some(name)
    }
}

/// A fresh node definition; returns (text, variable, identifying value).
fn node_def<R: Rng>(rng: &mut R, st: &mut State) -> (String, String) {
    let var = st.new_var(rng);
    let value = VALUES.choose(rng).unwrap().to_string();
    let mut props: Vec<(String, String)> = Vec::new();
    match rng.random_range(0..4) {
        0 | 1 => props.push(("name".into(), quote(rng, &value))),
        2 => {
            props.push(("born".into(), rng.random_range(1800..2000).to_string()));
            props.push(("title".into(), quote(rng, &value)));
        }
        _ => {
            props.push(("code".into(), quote(rng, &value)));
            props.push(("zone".into(), format!("{:.1}", rng.random_range(0.0..5.0f64))));
        }
    }
    if rng.random_bool(0.3) {
        props.push(("rank".into(), rng.random_range(0..100).to_string()));
    }
    let mut text = String::from("(");
    if let Some(v) = &var {
        text.push_str(&ident(rng, v));
    }
    for _ in 0..rng.random_range(0..3) {
        text.push(':');
        let label = LABELS.choose(rng).unwrap();
        text.push_str(&ident(rng, label));
    }
    text.push_str(" {");
    let body: Vec<String> = props
        .iter()
        .map(|(k, v)| format!("{}:{}{v}", ident(rng, k), space(rng)))
        .collect();
    text.push_str(&body.join(", "));
    text.push_str("})");
    if let Some(v) = var {
        st.bound.push((v, value.clone()));
    }
    (text, value)
}

/// A node slot in a path: a reference to a bound variable or a new node.
fn node<R: Rng>(rng: &mut R, st: &mut State) -> (String, String) {
    if !st.bound.is_empty() && rng.random_bool(0.4) {
        let (v, value) = st.bound.choose(rng).unwrap().clone();
        (format!("({})", ident(rng, &v)), value)
    } else {
        node_def(rng, st)
    }
}

fn rel<R: Rng>(rng: &mut R) -> (String, String, bool) {
    let rt = REL_TYPES.choose(rng).unwrap();
    let human = rt.split('_').map(str::to_lowercase).collect::<Vec<_>>().join(" ");
    let mut inner = String::new();
    if rng.random_bool(0.2) {
        inner.push('r');
    }
    inner.push(':');
    inner.push_str(&ident(rng, rt));
    if rng.random_bool(0.2) {
        inner.push_str(&format!(" {{since: {}}}", rng.random_range(1900..2020)));
    }
    let forward = rng.random_bool(0.7);
    (inner, human, forward)
}

fn path<R: Rng>(rng: &mut R, st: &mut State, out: &mut Vec<(String, String, String)>) -> String {
    let (mut text, mut prev) = node(rng, st);
    for _ in 0..rng.random_range(1..4) {
        let (inner, human, forward) = rel(rng);
        let (next_text, next) = node(rng, st);
        if forward {
            text.push_str(&format!("-[{inner}]->{next_text}"));
            out.push((prev.trim().to_string(), human, next.trim().to_string()));
        } else {
            text.push_str(&format!("<-[{inner}]-{next_text}"));
            out.push((next.trim().to_string(), human, prev.trim().to_string()));
        }
        prev = next;
    }
    text
}

fn ignored_clause<R: Rng>(rng: &mut R) -> String {
    let parts = [
        format!(
            "{} (n:Person) {} n.name = 'x' {} n",
            keyword(rng, "match"),
            keyword(rng, "where"),
            keyword(rng, "return")
        ),
        format!("{} n, count(*) {} 3", keyword(rng, "return"), keyword(rng, "limit")),
        format!(
            "{} (m)-[:KNOWS]->(k) {} k.name",
            keyword(rng, "optional match"),
            keyword(rng, "return")
        ),
    ];
    parts.choose(rng).unwrap().clone()
}

/// One random script with between one and four CREATE statements.
pub fn generate<R: Rng>(rng: &mut R) -> GeneratedScript {
    let mut st = State {
        bound: Vec::new(),
        fresh: 0,
    };
    let mut relationships = Vec::new();
    let mut text = String::new();
    if rng.random_bool(0.15) {
        text.push_str("// generated\n");
    }
    for i in 0..rng.random_range(1..5) {
        if i > 0 {
            text.push_str([";\n", "\n", "; ", " "].choose(rng).unwrap());
        }
        if rng.random_bool(0.1) {
            text.push_str(&ignored_clause(rng));
            text.push('\n');
        }
        text.push_str(&keyword(rng, "create"));
        text.push(' ');
        let mut pieces = Vec::new();
        for _ in 0..rng.random_range(1..3) {
            if rng.random_bool(0.2) {
                pieces.push(node_def(rng, &mut st).0);
            }
            pieces.push(path(rng, &mut st, &mut relationships));
        }
        text.push_str(&pieces.join(&format!(",{}", space(rng))));
    }
    if rng.random_bool(0.3) {
        text.push(';');
    }
    GeneratedScript { text, relationships }
}
