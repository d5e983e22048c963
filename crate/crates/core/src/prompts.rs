//! Instruction templates for answering, rationale generation, topic
//! classification and judge ranking.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qa::QAItem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("unknown prompt kind {0:?}")]
    UnknownKind(String),
    #[error("prompt {kind} needs extra {key:?}")]
    MissingExtra { kind: PromptKind, key: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    ZeroShotChoice,
    ZeroShotRationale,
    FtChoice,
    FtRationale,
    RationaleGen,
    TopicClassify,
    JudgeRanking,
}

pub const JUDGE_LABELS: [&str; 6] = ["Model A", "Model B", "Model C", "Model D", "Model E", "Model F"];

/// Extra key holding the subject list for topic classification.
pub const SUBJECTS_KEY: &str = "subjects";

impl PromptKind {
    pub const ALL: [PromptKind; 7] = [
        PromptKind::ZeroShotChoice,
        PromptKind::ZeroShotRationale,
        PromptKind::FtChoice,
        PromptKind::FtRationale,
        PromptKind::RationaleGen,
        PromptKind::TopicClassify,
        PromptKind::JudgeRanking,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptKind::ZeroShotChoice => "zero_shot_choice",
            PromptKind::ZeroShotRationale => "zero_shot_rationale",
            PromptKind::FtChoice => "ft_choice",
            PromptKind::FtRationale => "ft_rationale",
            PromptKind::RationaleGen => "rationale_gen",
            PromptKind::TopicClassify => "topic_classify",
            PromptKind::JudgeRanking => "judge_ranking",
        }
    }

    /// Raw template. `{language}` and `{medical_subjects_string}` are the
    /// only placeholders.
    pub fn template(self) -> &'static str {
        match self {
            PromptKind::ZeroShotChoice => concat!(
                "You're a {language} doctor, make a choice based on the question and options. ",
                "You need to answer the letter of the option instead of answering the entire option or anything else. ",
                "Options may not be unique."
            ),
            PromptKind::ZeroShotRationale => concat!(
                "You're a {language} doctor, make a choice based on the question and options in {language}. ",
                "You should solve this step-by-step. ",
                "You must first give the reason in {language} for your choice ends with '[End]'. ",
                "Then you must give the answer's letter directly again. ",
                "The template is like 'Reason:... [End] Answer: A, B'"
            ),
            PromptKind::FtChoice => concat!(
                "You're a {language} doctor, kindly address the medical queries according to the patient's account. ",
                "Answer with the best option directly."
            ),
            PromptKind::FtRationale => concat!(
                "You're a {language} doctor, kindly address the medical queries according to the patient's account in {language}. ",
                "Let\u{2019}s solve this step-by-step.  ",
                "You should first give the reason in {language} for your choice. ",
                "Then you should give the right answer index of the question."
            ),
            PromptKind::RationaleGen => concat!(
                "You're a {language} doctor. ",
                "Analyze the reasons behind choosing this particular option in 100 words for the following question in {language}."
            ),
            PromptKind::TopicClassify => concat!(
                "You're a {language} doctor, choose one subject out of {medical_subjects_string}, ",
                "which is most relevant to the following question."
            ),
            PromptKind::JudgeRanking => concat!(
                "Please act as an impartial judge and evaluate the quality of the responses provided by six ",
                "AI assistants to the user question displayed below. You should choose the assistant that ",
                "follows the user\u{2019}s instructions and answers the user\u{2019}s questions better. Your evaluation ",
                "should consider factors such as the helpfulness, relevance, accuracy, depth, creativity, ",
                "and level of detail of their responses. Begin your evaluation by comparing the six ",
                "responses. Avoid any position biases and ensure that the ",
                "order in which the responses were presented does not influence your decision. Do not allow ",
                "the length of the responses to influence your evaluation. Do not favor certain names of ",
                "the assistants. Be as objective as possible. Your output is the ordering of these six models from high to low. Output your ",
                "final verdict from high to low by strictly following this format: Model A, Model B, Model C, Model D, Model E, and Model F."
            ),
        }
    }

    /// A substring every rendering of this kind contains.
    pub fn anchor(self) -> &'static str {
        match self {
            PromptKind::ZeroShotChoice => "answer the letter of the option",
            PromptKind::ZeroShotRationale => "'Reason:... [End] Answer: A, B'",
            PromptKind::FtChoice => "Answer with the best option directly",
            PromptKind::FtRationale => "Let\u{2019}s solve this step-by-step",
            PromptKind::RationaleGen => "Analyze the reasons behind choosing this particular option in 100 words",
            PromptKind::TopicClassify => "choose one subject out of",
            PromptKind::JudgeRanking => "act as an impartial judge",
        }
    }

    pub fn required_extras(self) -> &'static [&'static str] {
        match self {
            PromptKind::TopicClassify => &[SUBJECTS_KEY],
            PromptKind::JudgeRanking => &JUDGE_LABELS,
            _ => &[],
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptKind {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        PromptKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| PromptError::UnknownKind(s.to_string()))
    }
}

/// `Question:\n…\nOptions:\nA. …` in stored option order.
pub fn render_question(item: &QAItem) -> String {
    let mut out = format!("Question:\n{}\nOptions:", item.question);
    for (letter, text) in &item.options {
        out.push_str(&format!("\n{letter}. {text}"));
    }
    out
}

/// Instruction, then the question block, then kind-specific material: the
/// gold answer for rationale generation and the six labelled responses for
/// judge ranking.
pub fn build_prompt(
    kind: PromptKind,
    language: &str,
    item: &QAItem,
    extras: &BTreeMap<String, String>,
) -> Result<String, PromptError> {
    for key in kind.required_extras() {
        if !extras.contains_key(*key) {
            return Err(PromptError::MissingExtra {
                kind,
                key: key.to_string(),
            });
        }
    }
    let mut instruction = kind.template().replace("{language}", language);
    if kind == PromptKind::TopicClassify {
        instruction = instruction.replace("{medical_subjects_string}", &extras[SUBJECTS_KEY]);
    }
    let mut out = instruction;
    out.push_str("\n\n");
    out.push_str(&render_question(item));
    match kind {
        PromptKind::RationaleGen => {
            out.push_str("\nAnswer: ");
            out.push_str(&item.answer_string());
        }
        PromptKind::JudgeRanking => {
            for label in JUDGE_LABELS {
                out.push_str(&format!("\n\n{label}:\n{}", extras[label]));
            }
        }
        _ => {}
    }
    Ok(out)
}
