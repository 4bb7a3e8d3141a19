use regex::Regex;
use std::sync::OnceLock;

/// Replaces numeric, time, and duration surface forms with placeholder
/// tokens. The pattern table, applied top to bottom per token:
///
/// | placeholder     | pattern                                             |
/// |-----------------|-----------------------------------------------------|
/// | `@time`         | clock times `H:MM`/`HH:MM(:SS)`, `9am`, `10pm`      |
/// | `@time-period`  | `am`, `pm`, `a.m.`, `p.m.` (case-insensitive)       |
/// | `@duration`     | second/minute/hour/day/week/month/year (+ plurals)  |
/// | `@number`       | integers/decimals with `.`/`,` separators, ordinals |
///
/// Placeholders start with `@`, which no pattern matches, so the mapping
/// is idempotent.
pub fn delexicalize(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| delex_token(t)).collect()
}

fn delex_token(token: &str) -> String {
    let p = patterns();
    if p.time.is_match(token) {
        "@time".to_string()
    } else if p.time_period.is_match(token) {
        "@time-period".to_string()
    } else if p.duration.is_match(token) {
        "@duration".to_string()
    } else if p.number.is_match(token) {
        "@number".to_string()
    } else {
        token.to_string()
    }
}

struct Patterns {
    number: Regex,
    time: Regex,
    time_period: Regex,
    duration: Regex,
}

fn patterns() -> &'static Patterns {
    static CELL: OnceLock<Patterns> = OnceLock::new();
    CELL.get_or_init(|| Patterns {
        number: Regex::new(r"^[+-]?\d+([.,]\d+)*(st|nd|rd|th)?$").expect("static regex"),
        time: Regex::new(r"^\d{1,2}(:\d{2}){1,2}$|^\d{1,2}(am|pm)$").expect("static regex"),
        time_period: Regex::new(r"^(?i)(am|pm|a\.m\.|p\.m\.)$").expect("static regex"),
        duration: Regex::new(r"^(?i)(second|minute|hour|day|week|month|year)s?$")
            .expect("static regex"),
    })
}
