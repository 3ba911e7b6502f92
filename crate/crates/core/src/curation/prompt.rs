use std::fmt;
use std::str::FromStr;

use crate::corpus::Direction;
use crate::{Error, Result};

/// Which translation instruction to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PromptVariant {
    Direct,
    Specified,
    Polishing,
}

const DIRECT: &str = "Please translate the following {source_language} text to {target_language}.\n\
### Source text: {source_text}\n\
### Translation:";

const SPECIFIED: &str = "Please translate the following {source_language} text to {target_language}, \
ensuring that the translation is fluent, accurate, and conforms to typical {target_language} expressions and style.\n\
### Source text: {source_text}\n\
### Translation:";

const POLISHING: &str = "Please polish the corresponding {target_language} translation of an {source_language} text, \
ensuring that the translation is fluent, accurate, and conforms to typical {target_language} expressions and style.\n\
### Source text: {source_text}\n\
### Original Translation: {target_text}\n\
### Translation:";

const SOURCE_MARKER: &str = "\n### Source text: ";
const ANSWER_MARKER: &str = "\n### Translation:";

impl PromptVariant {
    pub fn template(self) -> &'static str {
        match self {
            PromptVariant::Direct => DIRECT,
            PromptVariant::Specified => SPECIFIED,
            PromptVariant::Polishing => POLISHING,
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptVariant::Direct => "direct",
            PromptVariant::Specified => "specified",
            PromptVariant::Polishing => "polishing",
        })
    }
}

impl FromStr for PromptVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(PromptVariant::Direct),
            "specified" => Ok(PromptVariant::Specified),
            "polishing" => Ok(PromptVariant::Polishing),
            _ => Err(Error::param(format!("unknown prompt variant `{s}`"))),
        }
    }
}

/// Fills `{name}` placeholders in one left-to-right pass, so placeholder-like
/// text inside the substituted values is left alone.
fn fill(template: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(template.len() * 2);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| Error::param("unterminated placeholder in template"))?;
        let name = &after[..close];
        let value = lookup(name).ok_or_else(|| Error::param(format!("unresolved placeholder `{{{name}}}`")))?;
        out.push_str(&value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Renders a prompt from language display names.
pub fn render_prompt_named(
    variant: PromptVariant,
    source_language: &str,
    target_language: &str,
    source_text: &str,
    target_text: Option<&str>,
) -> Result<String> {
    match (variant, target_text) {
        (PromptVariant::Polishing, None) => {
            return Err(Error::param("the polishing prompt needs the translation to polish"))
        }
        (PromptVariant::Direct | PromptVariant::Specified, Some(_)) => {
            return Err(Error::param(format!("the {variant} prompt takes no target text")))
        }
        _ => {}
    }
    fill(variant.template(), |name| match name {
        "source_language" => Some(source_language.to_string()),
        "target_language" => Some(target_language.to_string()),
        "source_text" => Some(source_text.to_string()),
        "target_text" => target_text.map(str::to_string),
        _ => None,
    })
}

/// Renders a prompt for `direction`, using the registry's display names.
pub fn render_prompt(
    variant: PromptVariant,
    direction: Direction,
    source_text: &str,
    target_text: Option<&str>,
) -> Result<String> {
    render_prompt_named(variant, direction.source.name(), direction.target.name(), source_text, target_text)
}

/// Recovers `{source_text}` from a rendered direct or specified prompt.
pub fn extract_source_text(prompt: &str) -> Option<&str> {
    let start = prompt.find(SOURCE_MARKER)? + SOURCE_MARKER.len();
    prompt[start..].strip_suffix(ANSWER_MARKER)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn en_zh() -> Direction {
        "en-zh".parse().unwrap()
    }

    #[test]
    fn direct_prompt() {
        let p = render_prompt(PromptVariant::Direct, en_zh(), "Hello", None).unwrap();
        assert!(p.starts_with("Please translate the following English text to Chinese."));
        assert_eq!(
            p,
            "Please translate the following English text to Chinese.\n### Source text: Hello\n### Translation:"
        );
    }

    #[test]
    fn polishing_prompt_carries_original() {
        let p = render_prompt(PromptVariant::Polishing, "de-en".parse().unwrap(), "Hallo", Some("Hello")).unwrap();
        assert!(p.contains("### Original Translation: Hello"));
        assert!(p.starts_with("Please polish the corresponding English translation of an German text"));
    }

    #[test]
    fn target_text_must_match_variant() {
        assert!(render_prompt(PromptVariant::Direct, en_zh(), "x", Some("y")).is_err());
        assert!(render_prompt(PromptVariant::Specified, en_zh(), "x", Some("y")).is_err());
        assert!(render_prompt(PromptVariant::Polishing, en_zh(), "x", None).is_err());
    }

    #[test]
    fn placeholders_in_values_are_not_expanded() {
        let src = "{target_language} and {source_text} {";
        let p = render_prompt(PromptVariant::Direct, en_zh(), src, None).unwrap();
        assert_eq!(extract_source_text(&p), Some(src));
    }

    #[test]
    fn unknown_placeholder_is_an_error() {
        assert!(fill("{nope}", |_| None).is_err());
        assert!(fill("{open", |_| Some(String::new())).is_err());
    }
}
