use crate::datamodel::{AttributeCategory as Cat, AttributeSet};

use super::IngestError;

pub const TEMPLATES: [&str; 2] = ["default", "list"];

fn article_for(word: &str) -> &'static str {
    match word.chars().next() {
        Some(c) if "aeiouAEIOU".contains(c) => "an",
        _ => "a",
    }
}

fn strip_article(phrase: &str) -> &str {
    phrase.strip_prefix("an ").or_else(|| phrase.strip_prefix("a ")).unwrap_or(phrase)
}

fn join_and(parts: &[String]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn render_default(attrs: &AttributeSet) -> String {
    let mut text = String::from("A person");

    let headwear_color = attrs.get(Cat::HeadwearColor);
    match (attrs.get(Cat::HeadwearStyle), headwear_color) {
        (Some(style), color) => {
            let noun = style.strip_prefix("with ").unwrap_or(style);
            match color {
                Some(c) => text.push_str(&format!(" with {} {c} {noun}", article_for(c))),
                None => text.push_str(&format!(" with {} {noun}", article_for(noun))),
            }
        }
        (None, Some(c)) => text.push_str(&format!(" with {c} headwear")),
        (None, None) => {}
    }

    let mut wear = Vec::new();
    if let Some(coat) = attrs.get(Cat::Coat) {
        wear.push(format!("{} {coat}", article_for(coat)));
    }
    wear.extend(attrs.get(Cat::Trousers).map(str::to_string));
    wear.extend(attrs.get(Cat::Shoes).map(str::to_string));
    if !wear.is_empty() {
        text.push_str(" in ");
        text.push_str(&join_and(&wear));
    }

    let held = match (attrs.get(Cat::HeldItemStyle), attrs.get(Cat::HeldItemColor)) {
        (Some(style), Some(c)) => Some(format!("{} {c} {}", article_for(c), strip_article(style))),
        (Some(style), None) => Some(style.to_string()),
        (None, Some(c)) => Some(format!("something {c}")),
        (None, None) => None,
    };
    if let Some(item) = held {
        text.push_str(", holding ");
        text.push_str(&item);
    }
    if let Some(vehicle) = attrs.get(Cat::Transportation) {
        text.push_str(", riding ");
        text.push_str(vehicle);
    }
    text.push('.');
    text
}

fn render_list(attrs: &AttributeSet) -> String {
    let words: Vec<&str> = Cat::ALL.iter().filter_map(|c| attrs.get(*c)).collect();
    if words.is_empty() {
        "A person.".to_string()
    } else {
        format!("A person with: {}.", words.join(", "))
    }
}

/// Deterministic description text for an attribute set. Unset attributes are omitted.
pub fn render_description(attrs: &AttributeSet, template_id: &str) -> Result<String, IngestError> {
    match template_id {
        "default" => Ok(render_default(attrs)),
        "list" => Ok(render_list(attrs)),
        other => Err(IngestError::UnknownTemplate(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clothing_and_held_item() {
        let attrs = AttributeSet::new()
            .with(Cat::Coat, "black coat")
            .with(Cat::Trousers, "blue trousers")
            .with(Cat::HeldItemStyle, "a book");
        assert_eq!(
            render_description(&attrs, "default").unwrap(),
            "A person in a black coat and blue trousers, holding a book."
        );
    }

    #[test]
    fn empty_attributes() {
        assert_eq!(render_description(&AttributeSet::new(), "default").unwrap(), "A person.");
        assert_eq!(render_description(&AttributeSet::new(), "list").unwrap(), "A person.");
    }

    #[test]
    fn deterministic() {
        let attrs = AttributeSet::new().with(Cat::Shoes, "red shoes").with(Cat::Transportation, "a bicycle");
        let a = render_description(&attrs, "default").unwrap();
        let b = render_description(&attrs.clone(), "default").unwrap();
        assert_eq!(a.as_bytes(), b.as_bytes());
    }

    #[test]
    fn every_category() {
        let attrs = AttributeSet::new()
            .with(Cat::HeadwearColor, "orange")
            .with(Cat::HeadwearStyle, "with cap")
            .with(Cat::Coat, "orange coat")
            .with(Cat::Trousers, "gray trousers")
            .with(Cat::Shoes, "white shoes")
            .with(Cat::HeldItemColor, "blue")
            .with(Cat::HeldItemStyle, "a bag")
            .with(Cat::Transportation, "an electric bike");
        assert_eq!(
            render_description(&attrs, "default").unwrap(),
            "A person with an orange cap in an orange coat, gray trousers and white shoes, \
             holding a blue bag, riding an electric bike."
        );
        assert_eq!(
            render_description(&attrs, "list").unwrap(),
            "A person with: orange, with cap, orange coat, gray trousers, white shoes, blue, a bag, an electric bike."
        );
    }

    #[test]
    fn partial_headwear_and_held_item() {
        let attrs = AttributeSet::new().with(Cat::HeadwearStyle, "with helmet").with(Cat::HeldItemColor, "red");
        assert_eq!(render_description(&attrs, "default").unwrap(), "A person with a helmet, holding something red.");
        let attrs = AttributeSet::new().with(Cat::HeadwearColor, "pink");
        assert_eq!(render_description(&attrs, "default").unwrap(), "A person with pink headwear.");
    }

    #[test]
    fn unknown_template() {
        assert!(matches!(render_description(&AttributeSet::new(), "poem"), Err(IngestError::UnknownTemplate(_))));
    }
}
