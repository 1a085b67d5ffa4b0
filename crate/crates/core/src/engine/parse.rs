//! Turning a raw chat response into a list of span rewrites.

use std::collections::HashSet;

use super::types::{char_slice, SpanSelection};
use super::EngineError;

/// Section labels the model sometimes echoes back from the template examples.
const SECTION_LABELS: &[&str] = &[
    "literal revisions",
    "creative revisions",
    "literal variations",
    "creative variations",
];

fn strip_list_marker(s: &str) -> &str {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix(['-', '•', '*']) {
        return rest.trim_start();
    }
    let digits = s.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        if let Some(rest) = s[digits..].strip_prefix(['.', ')']) {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                return rest.trim_start();
            }
        }
    }
    s
}

fn strip_section_label(line: &str) -> &str {
    if let Some((label, rest)) = line.split_once(':') {
        let label = label.trim().trim_start_matches(|c: char| c.is_ascii_digit() || c == ' ');
        if SECTION_LABELS.contains(&label.to_lowercase().as_str()) {
            return rest.trim();
        }
    }
    line
}

fn clean_piece(piece: &str) -> &str {
    let piece = strip_list_marker(piece);
    let piece = piece.trim_end_matches('.').trim();
    piece.trim_matches('"').trim()
}

/// Splits a model response into candidate rewrites.
///
/// Lines are candidates; a line with three or more commas is treated as a
/// comma-separated list. List markers and trailing periods are stripped and
/// duplicates (case-insensitive) keep their first occurrence.
pub fn parse_candidates(raw: &str) -> Result<Vec<String>, EngineError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in raw.lines() {
        let line = strip_list_marker(line);
        if line.is_empty() || line.ends_with(':') {
            continue;
        }
        let line = strip_section_label(line);
        let pieces: Vec<&str> = if line.matches(',').count() >= 3 {
            line.split(',').collect()
        } else {
            vec![line]
        };
        for piece in pieces {
            let piece = clean_piece(piece);
            if piece.is_empty() {
                continue;
            }
            if seen.insert(piece.to_lowercase()) {
                out.push(piece.to_string());
            }
        }
    }
    if out.is_empty() {
        return Err(EngineError::EmptyPool);
    }
    Ok(out)
}

/// `origin[..start] + replacement + origin[end..]`, by character offsets.
/// No grammatical repair is attempted.
pub fn splice(origin: &str, span: &SpanSelection, replacement: &str) -> String {
    let len = origin.chars().count();
    let mut out = String::with_capacity(origin.len() + replacement.len());
    out.push_str(char_slice(origin, 0, span.char_start));
    out.push_str(replacement);
    out.push_str(char_slice(origin, span.char_end, len));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newline_separated_lines() {
        let raw: String = (0..200).map(|i| format!("variation number {i}\n")).collect();
        assert_eq!(parse_candidates(&raw).unwrap().len(), 200);
    }

    #[test]
    fn comma_list_line() {
        let got = parse_candidates("engineer, mathematician, cute astronauts, AI developer").unwrap();
        assert_eq!(got, vec!["engineer", "mathematician", "cute astronauts", "AI developer"]);
    }

    #[test]
    fn short_comma_lines_stay_whole() {
        let got = parse_candidates("scientist in a lab, holding a flask").unwrap();
        assert_eq!(got, vec!["scientist in a lab, holding a flask"]);
    }

    #[test]
    fn blank_input_is_empty_pool() {
        assert!(matches!(parse_candidates("\n  \n\t\n"), Err(EngineError::EmptyPool)));
        assert!(matches!(parse_candidates(""), Err(EngineError::EmptyPool)));
    }

    #[test]
    fn markers_labels_and_dupes() {
        let raw = "Literal Revisions:\n- robot\n• Robot\n12. glowing owl.\n3) fox\n\
                   Creative Revisions: cosmic alchemist, time traveler, mad inventor, lunar artist\n";
        let got = parse_candidates(raw).unwrap();
        assert_eq!(
            got,
            vec!["robot", "glowing owl", "fox", "cosmic alchemist", "time traveler", "mad inventor", "lunar artist"]
        );
    }

    #[test]
    fn numeric_content_is_not_a_marker() {
        assert_eq!(parse_candidates("2.5D pixel art\n3D robot").unwrap(), vec!["2.5D pixel art", "3D robot"]);
    }

    #[test]
    fn splice_examples() {
        let origin = "A scientist character doing an experiment";
        let span = SpanSelection::from_prompt(origin, 2, 11).unwrap();
        assert_eq!(splice(origin, &span, &span.text), origin);
        assert_eq!(splice(origin, &span, "engineer"), "A engineer character doing an experiment");
        let deleted = splice(origin, &span, "");
        assert_eq!(deleted.chars().count(), origin.chars().count() - span.char_count());
    }
}
