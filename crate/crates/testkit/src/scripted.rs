//! A deterministic stand-in for a chat model, used to record fixture
//! cassettes. It recognizes each prompt family by its leading instructions
//! and answers from a per-question script.

use pgakv_core::{Graph, LlmClient, LlmError, LlmParams, PromptBundle, Triple};

/// How the stand-in model behaves for one question.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub question: &'static str,
    /// Reply to the first pseudo-graph prompt.
    pub cypher: &'static str,
    /// Reply to every retry prompt; `None` repeats `cypher`.
    pub cypher_retry: Option<&'static str>,
    /// The fact the final answer reads from the evidence.
    pub answer_fact: (&'static str, &'static str),
    /// Sentence with `{}` where the fact's object goes.
    pub answer_template: &'static str,
    pub io: &'static str,
    pub cot: &'static str,
    /// Final answers of the sampled reasoning chains, by seed.
    pub sampled: [&'static str; 3],
}

pub struct ScriptedLlm {
    bundle: PromptBundle,
    scenarios: Vec<Scenario>,
}

const IO_HEAD: &str = "Answer the question.\n\n";
const COT_HEAD: &str = "Answer the question. Reason step by step";

fn last_after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    text.rfind(marker).map(|i| &text[i + marker.len()..])
}

fn fact_lines(block: &str) -> Vec<Triple> {
    block.lines().filter_map(Triple::from_line).collect()
}

impl ScriptedLlm {
    pub fn new(scenarios: Vec<Scenario>) -> Self {
        Self {
            bundle: PromptBundle::default(),
            scenarios,
        }
    }

    fn scenario(&self, question: &str) -> Result<&Scenario, LlmError> {
        self.scenarios
            .iter()
            .find(|s| s.question == question.trim())
            .ok_or_else(|| LlmError::Transport(format!("no script for question `{question}`")))
    }

    fn question_of(prompt: &str, marker: &str) -> Result<String, LlmError> {
        let tail = last_after(prompt, marker).ok_or_else(|| LlmError::Transport("prompt has no question".into()))?;
        Ok(tail.lines().next().unwrap_or("").trim().to_string())
    }

    fn pseudo_graph(&self, prompt: &str) -> Result<String, LlmError> {
        let s = self.scenario(&Self::question_of(prompt, "\nQuestion: ")?)?;
        let retry_marker = self
            .bundle
            .pseudo_graph_retry
            .split("{error}")
            .next()
            .unwrap_or_default();
        if prompt.contains(retry_marker) {
            Ok(s.cypher_retry.unwrap_or(s.cypher).to_string())
        } else {
            Ok(s.cypher.to_string())
        }
    }

    /// Replaces each pseudo-graph triple by the retrieved facts with the same
    /// subject and relation, if there are any.
    fn verification(&self, prompt: &str) -> Result<String, LlmError> {
        let tail =
            last_after(prompt, "Pseudo-graph:\n").ok_or_else(|| LlmError::Transport("no pseudo-graph".into()))?;
        let (pseudo, rest) = tail
            .split_once("Retrieved facts:\n")
            .ok_or_else(|| LlmError::Transport("no retrieved facts".into()))?;
        let retrieved = fact_lines(rest.split("\n\n").next().unwrap_or(""));
        let mut fixed = Graph::default();
        for t in fact_lines(pseudo) {
            let same: Vec<&Triple> = retrieved
                .iter()
                .filter(|f| f.subject() == t.subject() && f.relation() == t.relation())
                .collect();
            if same.is_empty() {
                fixed.insert(t);
            } else {
                for f in same {
                    fixed.insert(f.clone());
                }
            }
        }
        Ok(format!("Fixed graph:\n{}", fixed.to_lines()))
    }

    fn answer(&self, prompt: &str) -> Result<String, LlmError> {
        let s = self.scenario(&Self::question_of(prompt, "\nQuestion: ")?)?;
        let facts = last_after(prompt, "Knowledge graph:\n").unwrap_or("");
        let (subject, relation) = s.answer_fact;
        let object = fact_lines(facts)
            .into_iter()
            .find(|t| t.subject() == subject && t.relation() == relation)
            .map(|t| t.object().to_string());
        Ok(match object {
            Some(o) => s.answer_template.replace("{}", &o),
            None => "I am not sure.".to_string(),
        })
    }
}

impl LlmClient for ScriptedLlm {
    fn complete(&self, prompt: &str, params: &LlmParams) -> Result<String, LlmError> {
        if prompt.starts_with(&self.bundle.pseudo_graph_instructions) {
            self.pseudo_graph(prompt)
        } else if prompt.starts_with(&self.bundle.verification_instructions) {
            self.verification(prompt)
        } else if prompt.starts_with(&self.bundle.answer_instructions) {
            self.answer(prompt)
        } else if prompt.starts_with(COT_HEAD) {
            let s = self.scenario(&Self::question_of(prompt, "\nQ: ")?)?;
            match params.seed {
                Some(seed) if params.temperature > 0.0 => {
                    let pick = s.sampled[seed as usize % s.sampled.len()];
                    Ok(format!("Thinking it over. So the answer is {pick}."))
                }
                _ => Ok(s.cot.to_string()),
            }
        } else if prompt.starts_with(IO_HEAD) {
            let s = self.scenario(&Self::question_of(prompt, "\nQ: ")?)?;
            Ok(s.io.to_string())
        } else {
            Err(LlmError::Transport("unrecognized prompt".into()))
        }
    }
}

/// Scripts for the five toy questions plus one that never yields Cypher.
pub fn toy_scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            question: "Where was Alan Turing born?",
            cypher: "```cypher\n\
CREATE (a:Person {name: \"Alan Turing\"})-[:BORN_IN]->(b:City {name: \"Manchester\"})\n\
CREATE (a)-[:FIELD_OF_WORK]->(c:Field {name: \"computer science\"})\n```",
            cypher_retry: None,
            answer_fact: ("Alan Turing", "born in"),
            answer_template: "Alan Turing was born in {}.",
            io: "Alan Turing was born in Maida Vale, London.",
            cot: "Alan Turing spent his career in Manchester. So the answer is Manchester.",
            sampled: ["London", "Manchester", "London"],
        },
        Scenario {
            question: "On which river is the capital of Germany?",
            cypher: "Here is the graph:\n```cypher\n\
CREATE (g:Country {name: \"Germany\"})-[:CAPITAL]->(b:City {name: \"Berlin\"}),\n\
       (b)-[:LOCATED_ON_RIVER]->(r:River {name: \"Rhine\"})\n```",
            cypher_retry: None,
            answer_fact: ("Berlin", "located on river"),
            answer_template: "Berlin lies on the {}.",
            io: "The Rhine",
            cot: "The capital of Germany is Berlin, which lies on the Spree. So the answer is the Spree.",
            sampled: ["Rhine", "Spree", "Rhine"],
        },
        Scenario {
            question: "Who was Marie Curie married to?",
            cypher: "MERGE (m:Person {name: 'Marie Curie'})-[:SPOUSE]->(p:Person {name: 'Pierre Curie'})",
            cypher_retry: Some(
                "```cypher\n\
CREATE (m:Person {name: 'Marie Curie'})-[:SPOUSE]->(p:Person {name: 'Pierre Curie'})\n\
CREATE (m)-[:FIELD_OF_WORK]->(:Field {name: 'physics'})\n```",
            ),
            answer_fact: ("Marie Curie", "spouse"),
            answer_template: "Marie Curie was married to {}.",
            io: "Pierre Curie",
            cot: "Marie Curie shared the 1903 prize with her husband. So the answer is Pierre Curie.",
            sampled: ["Pierre Curie", "Pierre Curie", "Paul Langevin"],
        },
        Scenario {
            question: "How high is Mount Everest?",
            cypher: "```cypher\n\
CREATE (e:Mountain {name: \"Mount Everest\"})-[:ELEVATION]->(:Height {name: \"8848 metres\"})\n\
CREATE (e)-[:LOCATED_IN]->(:Country {name: \"Nepal\"})\n```",
            cypher_retry: None,
            answer_fact: ("Mount Everest", "elevation"),
            answer_template: "Mount Everest is {} high.",
            io: "8848 metres",
            cot: "The classic survey gives 8848 metres. So the answer is 8848 metres.",
            sampled: ["8848 metres", "8849 metres", "8849 metres"],
        },
        Scenario {
            question: "Who designed the Analytical Engine?",
            cypher: "```cypher\n\
CREATE (e:Machine {name: \"Analytical Engine\"})-[:DESIGNED_BY]->(:Person {name: \"Ada Lovelace\"})\n```",
            cypher_retry: None,
            answer_fact: ("Analytical Engine", "designed by"),
            answer_template: "The Analytical Engine was designed by {}.",
            io: "Charles Babbage",
            cot: "Ada Lovelace wrote programs for the engine. So the answer is Ada Lovelace.",
            sampled: ["Charles Babbage", "Ada Lovelace", "Ada Lovelace"],
        },
        Scenario {
            question: "Who wrote Hamlet?",
            cypher: "Hamlet is a tragedy written by William Shakespeare around 1600.",
            cypher_retry: None,
            answer_fact: ("Hamlet", "author"),
            answer_template: "{}",
            io: "William Shakespeare",
            cot: "Hamlet is one of Shakespeare's tragedies. So the answer is William Shakespeare.",
            sampled: ["William Shakespeare", "William Shakespeare", "William Shakespeare"],
        },
    ]
}

fn direct(question: &'static str, io: &'static str) -> Scenario {
    Scenario {
        question,
        cypher: "I cannot draw a graph for this question.",
        cypher_retry: None,
        answer_fact: ("", ""),
        answer_template: "{}",
        io,
        cot: io,
        sampled: [io, io, io],
    }
}

/// Direct-answer scripts for the open-ended and multilingual samples.
pub fn sample_scenarios() -> Vec<Scenario> {
    vec![
        direct(
            "Why do leaves change colour in autumn?",
            "In autumn trees stop making chlorophyll, so the yellow and orange pigments in the leaves become visible.",
        ),
        direct(
            "What causes ocean tides?",
            "Tides are caused by the gravitational pull of the Moon and the Sun on the oceans.",
        ),
        direct(
            "How do vaccines protect against disease?",
            "They contain weakened germs.",
        ),
        direct("What is the capital of Nepal?", "Kathmandu"),
        direct("Where was Albert Einstein born?", "Einstein was born in Ulm, Germany."),
        direct("What is the currency of Germany?", "The Deutsche Mark"),
    ]
}
