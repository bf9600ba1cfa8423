//! Reading decisions out of free-text model replies.

/// First word of the reply, lowercased, after leading whitespace and
/// punctuation (including markdown emphasis) are stripped.
pub fn leading_word(reply: &str) -> String {
    reply
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .chars()
        .take_while(|c| c.is_alphanumeric())
        .collect::<String>()
        .to_lowercase()
}

/// `Some(true)` for a leading "yes", `Some(false)` for a leading "no".
pub fn yes_no(reply: &str) -> Option<bool> {
    match leading_word(reply).as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Option number chosen in a reply such as "Option 2" or "2".
///
/// The first "option N" mention wins; failing that, a reply that is only a
/// number is accepted. Numbers outside `1..=max` are rejected.
pub fn option_choice(reply: &str, max: usize) -> Option<usize> {
    let lower = reply.to_lowercase();
    let mut rest = lower.as_str();
    while let Some(i) = rest.find("option") {
        let after = rest[i + "option".len()..].trim_start_matches(|c: char| c.is_whitespace() || c == '#' || c == ':');
        let digits: String = after.chars().take_while(|c| c.is_ascii_digit()).collect();
        if let Ok(n) = digits.parse::<usize>() {
            return (1..=max).contains(&n).then_some(n);
        }
        rest = &rest[i + "option".len()..];
    }
    let bare = lower.trim().trim_matches(|c: char| !c.is_alphanumeric());
    bare.parse::<usize>().ok().filter(|n| (1..=max).contains(n))
}
