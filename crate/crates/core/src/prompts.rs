//! Prompt templates for the three pipeline stages and the baseline strategies.

use thiserror::Error;

use crate::kg::{Graph, Triple};
use crate::prune::EntityConfidence;

/// Evidence placeholder when the answer stage receives an empty graph.
pub const NO_VERIFIED_FACTS: &str = "(no verified facts)";
/// Placeholder when nothing survived pruning.
pub const NO_RETRIEVED_FACTS: &str = "(no retrieved facts)";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("no confidence score for ground-truth subject `{0}`")]
    MissingConfidence(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CypherExample {
    pub question: String,
    pub cypher: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationExample {
    pub pseudo: Vec<Triple>,
    pub retrieved: Vec<Triple>,
    pub fixed: Vec<Triple>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerExample {
    pub question: String,
    pub facts: Vec<Triple>,
    pub answer: String,
}

/// Instructions and worked examples for every pipeline prompt. Each stage
/// carries exactly two examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub pseudo_graph_instructions: String,
    pub pseudo_graph_examples: [CypherExample; 2],
    pub pseudo_graph_retry: String,
    pub verification_instructions: String,
    pub verification_examples: [VerificationExample; 2],
    pub verification_task: String,
    pub verification_retry: String,
    pub answer_instructions: String,
    pub answer_examples: [AnswerExample; 2],
}

fn tr(s: &str, r: &str, o: &str) -> Triple {
    Triple::new(s, r, o).expect("built-in example triple is valid")
}

impl Default for PromptBundle {
    fn default() -> Self {
        Self {
            pseudo_graph_instructions: "Write Cypher CREATE statements that build a small knowledge graph \
containing the facts needed to answer the question. Give every node a `name` property and use \
UPPER_SNAKE_CASE relationship types. Reply with Cypher only."
                .into(),
            pseudo_graph_examples: [
                CypherExample {
                    question: "Who directed the film Inception?".into(),
                    cypher:
                        "CREATE (a:Film {name: \"Inception\"})-[:DIRECTOR]->(b:Person {name: \"Christopher Nolan\"})\n\
CREATE (a)-[:PUBLICATION_DATE]->(c:Year {name: \"2010\"})"
                            .into(),
                },
                CypherExample {
                    question: "Which river flows through the capital of Egypt?".into(),
                    cypher: "CREATE (a:Country {name: \"Egypt\"})-[:CAPITAL]->(b:City {name: \"Cairo\"})\n\
CREATE (c:River {name: \"Nile\"})-[:FLOWS_THROUGH]->(b)"
                        .into(),
                },
            ],
            pseudo_graph_retry: "Your previous reply could not be decoded: {error}\n\
Reply again with valid Cypher CREATE statements only."
                .into(),
            verification_instructions: "Check the pseudo-graph against the retrieved knowledge-graph facts. \
Replace every pseudo-graph triple that the facts contradict with the correct fact, keep triples the facts \
support or do not mention, and add retrieved facts that help answer the same question. Write the fixed graph \
as one `subject | relation | object` line per triple and nothing else."
                .into(),
            verification_examples: [
                VerificationExample {
                    pseudo: vec![tr("Inception", "director", "Steven Spielberg")],
                    retrieved: vec![
                        tr("Inception", "director", "Christopher Nolan"),
                        tr("Inception", "publication date", "2010"),
                    ],
                    fixed: vec![
                        tr("Inception", "director", "Christopher Nolan"),
                        tr("Inception", "publication date", "2010"),
                    ],
                },
                VerificationExample {
                    pseudo: vec![
                        tr("Egypt", "capital", "Cairo"),
                        tr("Nile", "flows through", "Alexandria"),
                    ],
                    retrieved: vec![tr("Egypt", "capital", "Cairo"), tr("Nile", "flows through", "Cairo")],
                    fixed: vec![tr("Egypt", "capital", "Cairo"), tr("Nile", "flows through", "Cairo")],
                },
            ],
            verification_task: "Fixed graph:".into(),
            verification_retry: "Your previous reply contained no `subject | relation | object` lines. \
Write the fixed graph in exactly that format."
                .into(),
            answer_instructions: "Answer the question using the knowledge-graph facts. If the facts are not \
enough, use your own knowledge. Keep the answer short."
                .into(),
            answer_examples: [
                AnswerExample {
                    question: "Who directed the film Inception?".into(),
                    facts: vec![
                        tr("Inception", "director", "Christopher Nolan"),
                        tr("Inception", "publication date", "2010"),
                    ],
                    answer: "Inception was directed by Christopher Nolan.".into(),
                },
                AnswerExample {
                    question: "Which river flows through the capital of Egypt?".into(),
                    facts: vec![tr("Egypt", "capital", "Cairo"), tr("Nile", "flows through", "Cairo")],
                    answer: "The Nile flows through Cairo, the capital of Egypt.".into(),
                },
            ],
        }
    }
}

fn lines_of(triples: &[Triple]) -> String {
    triples.iter().map(|t| t.to_line() + "\n").collect()
}

impl PromptBundle {
    pub fn pseudo_graph_prompt(&self, question: &str) -> String {
        let mut p = String::new();
        p.push_str(&self.pseudo_graph_instructions);
        p.push_str("\n\n");
        for ex in &self.pseudo_graph_examples {
            p.push_str(&format!("Question: {}\n```cypher\n{}\n```\n\n", ex.question, ex.cypher));
        }
        p.push_str(&format!("Question: {}\n", question.trim()));
        p
    }

    pub fn pseudo_graph_retry_prompt(&self, question: &str, error: &str) -> String {
        format!(
            "{}\n{}\n",
            self.pseudo_graph_prompt(question),
            self.pseudo_graph_retry.replace("{error}", error)
        )
    }

    /// Pseudo-graph block first, then the ground-truth triples grouped by
    /// subject in descending confidence, so the most confident group sits
    /// right after the pseudo-graph.
    pub fn verification_prompt(
        &self,
        pseudo: &Graph,
        ground_truth: &Graph,
        confidences: &[EntityConfidence],
    ) -> Result<String, PromptError> {
        let mut order: Vec<&EntityConfidence> = Vec::new();
        for subject in ground_truth.subjects() {
            let c = confidences
                .iter()
                .find(|c| c.subject == subject)
                .ok_or_else(|| PromptError::MissingConfidence(subject.clone()))?;
            order.push(c);
        }
        order.sort_by(|a, b| {
            b.confidence
                .total_cmp(&a.confidence)
                .then_with(|| a.subject.cmp(&b.subject))
        });

        let mut p = String::new();
        p.push_str(&self.verification_instructions);
        p.push_str("\n\n");
        for (i, ex) in self.verification_examples.iter().enumerate() {
            p.push_str(&format!(
                "Example {}\nPseudo-graph:\n{}Retrieved facts:\n{}Fixed graph:\n{}\n",
                i + 1,
                lines_of(&ex.pseudo),
                lines_of(&ex.retrieved),
                lines_of(&ex.fixed)
            ));
        }
        p.push_str("Pseudo-graph:\n");
        p.push_str(&pseudo.to_lines());
        p.push_str("Retrieved facts:\n");
        if order.is_empty() {
            p.push_str(NO_RETRIEVED_FACTS);
            p.push('\n');
        }
        for c in order {
            p.push_str(&format!("## {} (confidence {:.3})\n", c.subject, c.confidence));
            for t in ground_truth.iter().filter(|t| t.subject() == c.subject) {
                p.push_str(&t.to_line());
                p.push('\n');
            }
        }
        p.push('\n');
        p.push_str(&self.verification_task);
        p.push('\n');
        Ok(p)
    }

    pub fn verification_retry_prompt(&self, base: &str) -> String {
        format!("{base}\n{}\n", self.verification_retry)
    }

    pub fn answer_prompt(&self, question: &str, facts: &Graph) -> String {
        let mut p = String::new();
        p.push_str(&self.answer_instructions);
        p.push_str("\n\n");
        for ex in &self.answer_examples {
            p.push_str(&format!(
                "Question: {}\nKnowledge graph:\n{}Answer: {}\n\n",
                ex.question,
                lines_of(&ex.facts),
                ex.answer
            ));
        }
        p.push_str(&format!("Question: {}\nKnowledge graph:\n", question.trim()));
        if facts.is_empty() {
            p.push_str(NO_VERIFIED_FACTS);
            p.push('\n');
        } else {
            p.push_str(&facts.to_lines());
        }
        p.push_str("Answer:");
        p
    }
}

const DIRECT_EXAMPLES: [(&str, &str, &str); 6] = [
    (
        "Who directed the film Inception?",
        "Inception is a 2010 film written and directed by Christopher Nolan.",
        "Christopher Nolan",
    ),
    (
        "What is the capital of Australia?",
        "Australia's capital is Canberra, not Sydney.",
        "Canberra",
    ),
    (
        "Which river flows through the capital of Egypt?",
        "The capital of Egypt is Cairo, and the Nile flows through Cairo.",
        "The Nile",
    ),
    (
        "In which year did the Berlin Wall fall?",
        "The Berlin Wall was opened in November 1989.",
        "1989",
    ),
    (
        "Who wrote the novel Nineteen Eighty-Four?",
        "Nineteen Eighty-Four was written by George Orwell.",
        "George Orwell",
    ),
    (
        "What element has the chemical symbol Fe?",
        "Fe comes from the Latin ferrum, which is iron.",
        "Iron",
    ),
];

/// Direct question answering with six in-context examples.
pub fn io_prompt(question: &str) -> String {
    let mut p = String::from("Answer the question.\n\n");
    for (q, _, a) in DIRECT_EXAMPLES {
        p.push_str(&format!("Q: {q}\nA: {a}\n\n"));
    }
    p.push_str(&format!("Q: {}\nA:", question.trim()));
    p
}

/// Step-by-step answering with six worked examples. Replies end with
/// "So the answer is ...".
pub fn cot_prompt(question: &str) -> String {
    let mut p = String::from("Answer the question. Reason step by step, then finish with \"So the answer is\".\n\n");
    for (q, reasoning, a) in DIRECT_EXAMPLES {
        p.push_str(&format!("Q: {q}\nA: {reasoning} So the answer is {a}.\n\n"));
    }
    p.push_str(&format!("Q: {}\nA:", question.trim()));
    p
}
