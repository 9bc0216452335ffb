use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_spans, LabeledSpan, PredicateFrame};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    O,
    B(String),
    I(String),
}

impl Tag {
    pub fn role(&self) -> Option<&str> {
        match self {
            Tag::O => None,
            Tag::B(r) | Tag::I(r) => Some(r),
        }
    }

    /// Whether `next` may directly follow `self` (`None` = sentence start).
    pub fn may_precede(prev: Option<&Tag>, next: &Tag) -> bool {
        match next {
            Tag::I(role) => matches!(prev, Some(Tag::B(r)) | Some(Tag::I(r)) if r == role),
            _ => true,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(r) => write!(f, "B-{r}"),
            Tag::I(r) => write!(f, "I-{r}"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "O" => Ok(Tag::O),
            _ => match s.split_once('-') {
                Some(("B", r)) if !r.is_empty() => Ok(Tag::B(r.to_string())),
                Some(("I", r)) if !r.is_empty() => Ok(Tag::I(r.to_string())),
                _ => Err(Error::Tags(format!("unknown tag {s:?}"))),
            },
        }
    }
}

/// A legal BIO tag sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagSequence(Vec<Tag>);

impl TagSequence {
    pub fn new(tags: Vec<Tag>) -> Result<Self> {
        let mut prev = None;
        for (i, tag) in tags.iter().enumerate() {
            if !Tag::may_precede(prev, tag) {
                return Err(Error::Tags(match prev {
                    None => format!("{tag} at position 1"),
                    Some(p) => format!("{p} followed by {tag} at position {}", i + 1),
                }));
            }
            prev = Some(tag);
        }
        Ok(TagSequence(tags))
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Tag> {
        self.0
    }
}

impl fmt::Display for TagSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Tags a frame: `B-X I-X ...` over each span, `B-V` on the predicate
/// when no argument covers it, `O` elsewhere.
pub fn spans_to_bio(frame: &PredicateFrame, n: usize) -> Result<TagSequence> {
    frame.check_len(n)?;
    check_spans(&frame.spans)?;
    let mut tags = vec![Tag::O; n];
    for s in &frame.spans {
        tags[s.start] = Tag::B(s.role.clone());
        for t in &mut tags[s.start + 1..=s.end] {
            *t = Tag::I(s.role.clone());
        }
    }
    if tags[frame.predicate] == Tag::O {
        tags[frame.predicate] = Tag::B("V".into());
    }
    TagSequence::new(tags)
}

/// Maximal `B-X (I-X)*` runs as spans, with `V` spans left out.
pub fn bio_to_spans(tags: &[Tag]) -> Result<Vec<LabeledSpan>> {
    let seq = TagSequence::new(tags.to_vec())?;
    let mut spans: Vec<LabeledSpan> = Vec::new();
    for (i, tag) in seq.tags().iter().enumerate() {
        match tag {
            Tag::O => {}
            Tag::B(r) => spans.push(LabeledSpan::new(r.clone(), i, i)),
            Tag::I(_) => spans.last_mut().expect("legal sequence").end = i,
        }
    }
    spans.retain(|s| s.role != "V");
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &str) -> Vec<Tag> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn example_tags() {
        let frame = PredicateFrame::new(
            2,
            vec![LabeledSpan::new("A0", 0, 1), LabeledSpan::new("A1", 3, 3)],
        )
        .unwrap();
        let seq = spans_to_bio(&frame, 5).unwrap();
        assert_eq!(seq.to_string(), "B-A0 I-A0 B-V B-A1 O");
        assert_eq!(bio_to_spans(seq.tags()).unwrap(), frame.spans);
    }

    #[test]
    fn empty_frame() {
        let frame = PredicateFrame::new(1, vec![]).unwrap();
        assert_eq!(spans_to_bio(&frame, 3).unwrap().to_string(), "O B-V O");
    }

    #[test]
    fn predicate_inside_argument_keeps_argument_tag() {
        let frame = PredicateFrame::new(1, vec![LabeledSpan::new("AM-ADV", 0, 2)]).unwrap();
        assert_eq!(
            spans_to_bio(&frame, 3).unwrap().to_string(),
            "B-AM-ADV I-AM-ADV I-AM-ADV"
        );
    }

    #[test]
    fn illegal_sequences() {
        assert!(bio_to_spans(&tags("I-A0 O")).is_err());
        assert!(bio_to_spans(&tags("B-A0 I-A1")).is_err());
        assert!(bio_to_spans(&tags("O I-A0")).is_err());
        assert!(bio_to_spans(&tags("B-A0 I-A0 I-A0 B-A0")).is_ok());
    }

    #[test]
    fn tag_parsing() {
        assert_eq!("B-C-A1".parse::<Tag>().unwrap(), Tag::B("C-A1".into()));
        assert!("X-A0".parse::<Tag>().is_err());
        assert!("B-".parse::<Tag>().is_err());
    }
}
