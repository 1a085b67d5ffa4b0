//! Instruction text sent to the chat model for candidate generation.

use super::types::{ExpansionMode, ExpansionRequest};

pub const ADD_DETAILS_TEMPLATE: &str = include_str!("../templates/add_details.txt");
pub const GENERATE_ALTERNATIVES_TEMPLATE: &str = include_str!("../templates/generate_alternatives.txt");

pub fn template_for(mode: ExpansionMode) -> &'static str {
    match mode {
        ExpansionMode::AddDetails => ADD_DETAILS_TEMPLATE,
        ExpansionMode::GenerateAlternatives => GENERATE_ALTERNATIVES_TEMPLATE,
    }
}

/// The three input-format lines. The index line uses an inclusive end, the
/// same convention as the worked examples inside the templates
/// ("scientist" in "A scientist ..." is `2-10`).
pub fn input_block(request: &ExpansionRequest) -> String {
    format!(
        "1. Original Prompt: {}\n2. Part to Change: {}\n3. Index of the Part: {}-{}\n",
        request.origin_prompt,
        request.span.text,
        request.span.char_start,
        request.span.char_end - 1,
    )
}

pub fn build_generation_prompt(request: &ExpansionRequest) -> String {
    let template = template_for(request.mode).trim_end();
    format!("{template}\n\n{}", input_block(request))
}
