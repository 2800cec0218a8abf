//! Page layout: line and word boxes in screen space.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type LineId = usize;
pub type WordId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    #[default]
    Light,
    Dark,
}

/// Bounding box of one rendered line of text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineBox {
    pub line_id: LineId,
    pub top: f64,
    pub bottom: f64,
    pub left: f64,
    pub right: f64,
}

impl LineBox {
    /// Vertical centre of the box.
    pub fn mid(&self) -> f64 {
        (self.bottom + self.top) / 2.0
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordBox {
    pub word_id: WordId,
    pub line_id: LineId,
    pub left: f64,
    pub right: f64,
    pub text: String,
    #[serde(default)]
    pub function_word: bool,
}

impl WordBox {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn center_x(&self) -> f64 {
        (self.left + self.right) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLayout {
    pub layout_version: u64,
    pub lines: Vec<LineBox>,
    pub words: Vec<WordBox>,
    pub text_width: f64,
    pub line_height: f64,
    #[serde(default)]
    pub background: Background,
}

/// Old-to-new identity map supplied with a layout change.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdMap {
    #[serde(default)]
    pub lines: Vec<(LineId, LineId)>,
    #[serde(default)]
    pub words: Vec<(WordId, WordId)>,
}

impl IdMap {
    pub fn line(&self, old: LineId) -> Option<LineId> {
        self.lines.iter().find(|(o, _)| *o == old).map(|(_, n)| *n)
    }

    pub fn word(&self, old: WordId) -> Option<WordId> {
        self.words.iter().find(|(o, _)| *o == old).map(|(_, n)| *n)
    }

    pub fn identity(layout: &PageLayout) -> Self {
        Self {
            lines: layout.lines.iter().map(|l| (l.line_id, l.line_id)).collect(),
            words: layout.words.iter().map(|w| (w.word_id, w.word_id)).collect(),
        }
    }
}

impl PageLayout {
    /// Builds a layout, deriving `text_width` and `line_height` from the boxes.
    pub fn new(layout_version: u64, lines: Vec<LineBox>, words: Vec<WordBox>, background: Background) -> Self {
        let text_width = if lines.is_empty() {
            0.0
        } else {
            let left = lines.iter().map(|l| l.left).fold(f64::INFINITY, f64::min);
            let right = lines.iter().map(|l| l.right).fold(f64::NEG_INFINITY, f64::max);
            right - left
        };
        let line_height = lines.first().map(LineBox::height).unwrap_or(0.0);
        Self { layout_version, lines, words, text_width, line_height, background }
    }

    /// Left edge of the text block.
    pub fn text_left(&self) -> f64 {
        self.lines.iter().map(|l| l.left).fold(f64::INFINITY, f64::min)
    }

    pub fn line(&self, id: LineId) -> Option<&LineBox> {
        self.lines.get(id).filter(|l| l.line_id == id).or_else(|| self.lines.iter().find(|l| l.line_id == id))
    }

    pub fn word(&self, id: WordId) -> Option<&WordBox> {
        self.words.get(id).filter(|w| w.word_id == id).or_else(|| self.words.iter().find(|w| w.word_id == id))
    }

    pub fn words_on_line(&self, line: LineId) -> impl Iterator<Item = &WordBox> {
        self.words.iter().filter(move |w| w.line_id == line)
    }

    /// Word on `line` hit by `x`: containment first, otherwise nearest horizontal edge, ties leftward.
    pub fn word_at(&self, line: LineId, x: f64) -> Option<&WordBox> {
        let mut best: Option<(&WordBox, f64)> = None;
        for w in self.words_on_line(line) {
            let dist = if x < w.left {
                w.left - x
            } else if x > w.right {
                x - w.right
            } else {
                0.0
            };
            match best {
                Some((bw, bd)) if dist > bd || (dist == bd && w.left >= bw.left) => {}
                _ => best = Some((w, dist)),
            }
        }
        best.map(|(w, _)| w)
    }

    /// Copy with every box shifted by `dy` and the version bumped, as after a scroll.
    pub fn scrolled(&self, dy: f64) -> Self {
        let mut out = self.clone();
        out.layout_version += 1;
        for l in &mut out.lines {
            l.top += dy;
            l.bottom += dy;
        }
        out
    }

    /// Lays `text` out as fixed-pitch glyphs wrapped to `metrics.max_width`.
    pub fn flow_text(text: &str, metrics: &TextMetrics, background: Background) -> Self {
        let mut lines = Vec::new();
        let mut words = Vec::new();
        let mut line_words: Vec<(f64, f64, &str)> = Vec::new();
        let mut cursor = 0.0;

        let flush = |line_words: &mut Vec<(f64, f64, &str)>, lines: &mut Vec<LineBox>, words: &mut Vec<WordBox>| {
            if line_words.is_empty() {
                return;
            }
            let line_id = lines.len();
            let top = metrics.top + line_id as f64 * metrics.line_pitch;
            let right = line_words.last().map(|w| w.1).unwrap_or(metrics.left);
            lines.push(LineBox { line_id, top, bottom: top + metrics.line_box_height, left: metrics.left, right });
            for (left, right, text) in line_words.drain(..) {
                words.push(WordBox {
                    word_id: words.len(),
                    line_id,
                    left,
                    right,
                    text: text.to_string(),
                    function_word: is_function_word(text),
                });
            }
        };

        for token in text.split_whitespace() {
            let width = token.chars().count() as f64 * metrics.char_width;
            let start = if line_words.is_empty() { 0.0 } else { cursor + metrics.char_width };
            if !line_words.is_empty() && start + width > metrics.max_width {
                flush(&mut line_words, &mut lines, &mut words);
                line_words.push((metrics.left, metrics.left + width, token));
                cursor = width;
                continue;
            }
            line_words.push((metrics.left + start, metrics.left + start + width, token));
            cursor = start + width;
        }
        flush(&mut line_words, &mut lines, &mut words);
        Self::new(0, lines, words, background)
    }
}

/// Fixed-pitch text metrics used by [`PageLayout::flow_text`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextMetrics {
    pub left: f64,
    pub top: f64,
    pub max_width: f64,
    pub char_width: f64,
    pub line_box_height: f64,
    pub line_pitch: f64,
}

impl Default for TextMetrics {
    /// Roughly 32 px text on a 1920x1200 screen with double line spacing.
    fn default() -> Self {
        Self { left: 60.0, top: 60.0, max_width: 1800.0, char_width: 18.0, line_box_height: 40.0, line_pitch: 72.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutViolation {
    EmptyBox { line_id: LineId },
    NonContiguousLineIds { position: usize, line_id: LineId },
    LinesOverlap { upper: LineId, lower: LineId },
    LineHeightMismatch { line_id: LineId, height: f64, expected: f64 },
    TextWidthMismatch { declared: f64, actual: f64 },
    DanglingWord { word_id: WordId, line_id: LineId },
    DuplicateWordId { word_id: WordId },
    EmptyWordBox { word_id: WordId },
    WordOutsideLine { word_id: WordId, line_id: LineId },
    WordsOutOfOrder { line_id: LineId, word_id: WordId },
}

impl fmt::Display for LayoutViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyBox { line_id } => write!(f, "line {line_id} has an empty or inverted box"),
            Self::NonContiguousLineIds { position, line_id } => {
                write!(f, "line at position {position} has id {line_id}; ids must be contiguous from 0")
            }
            Self::LinesOverlap { upper, lower } => write!(f, "lines {upper} and {lower} overlap vertically"),
            Self::LineHeightMismatch { line_id, height, expected } => {
                write!(f, "line {line_id} height {height} differs from line_height {expected}")
            }
            Self::TextWidthMismatch { declared, actual } => {
                write!(f, "text_width {declared} does not match line extent {actual}")
            }
            Self::DanglingWord { word_id, line_id } => write!(f, "word {word_id} references missing line {line_id}"),
            Self::DuplicateWordId { word_id } => write!(f, "word id {word_id} is not unique"),
            Self::EmptyWordBox { word_id } => write!(f, "word {word_id} has an empty or inverted box"),
            Self::WordOutsideLine { word_id, line_id } => {
                write!(f, "word {word_id} lies outside line {line_id}")
            }
            Self::WordsOutOfOrder { line_id, word_id } => {
                write!(f, "word {word_id} on line {line_id} is not ordered left-to-right")
            }
        }
    }
}

const SIZE_TOLERANCE_PX: f64 = 0.5;

/// Every invariant violation of `layout`; empty means valid.
pub fn validate_layout(layout: &PageLayout) -> Vec<LayoutViolation> {
    let mut out = Vec::new();

    for (pos, l) in layout.lines.iter().enumerate() {
        if l.line_id != pos {
            out.push(LayoutViolation::NonContiguousLineIds { position: pos, line_id: l.line_id });
        }
        if !(l.bottom > l.top && l.right > l.left) {
            out.push(LayoutViolation::EmptyBox { line_id: l.line_id });
        }
        if (l.height() - layout.line_height).abs() > SIZE_TOLERANCE_PX {
            out.push(LayoutViolation::LineHeightMismatch {
                line_id: l.line_id,
                height: l.height(),
                expected: layout.line_height,
            });
        }
    }

    let mut by_top: Vec<&LineBox> = layout.lines.iter().collect();
    by_top.sort_by(|a, b| a.top.total_cmp(&b.top));
    for pair in by_top.windows(2) {
        if pair[1].top < pair[0].bottom {
            out.push(LayoutViolation::LinesOverlap { upper: pair[0].line_id, lower: pair[1].line_id });
        }
    }

    if !layout.lines.is_empty() {
        let left = layout.lines.iter().map(|l| l.left).fold(f64::INFINITY, f64::min);
        let right = layout.lines.iter().map(|l| l.right).fold(f64::NEG_INFINITY, f64::max);
        if (right - left - layout.text_width).abs() > SIZE_TOLERANCE_PX {
            out.push(LayoutViolation::TextWidthMismatch { declared: layout.text_width, actual: right - left });
        }
    }

    let mut seen = HashSet::new();
    let mut last_right_on_line: Vec<Option<f64>> = vec![None; layout.lines.len()];
    for w in &layout.words {
        if !seen.insert(w.word_id) {
            out.push(LayoutViolation::DuplicateWordId { word_id: w.word_id });
        }
        if w.right <= w.left {
            out.push(LayoutViolation::EmptyWordBox { word_id: w.word_id });
        }
        let Some(line) = layout.lines.iter().find(|l| l.line_id == w.line_id) else {
            out.push(LayoutViolation::DanglingWord { word_id: w.word_id, line_id: w.line_id });
            continue;
        };
        if w.left < line.left - SIZE_TOLERANCE_PX || w.right > line.right + SIZE_TOLERANCE_PX {
            out.push(LayoutViolation::WordOutsideLine { word_id: w.word_id, line_id: w.line_id });
        }
        if let Some(slot) = last_right_on_line.get_mut(w.line_id) {
            if let Some(prev_right) = *slot {
                if w.left < prev_right {
                    out.push(LayoutViolation::WordsOutOfOrder { line_id: w.line_id, word_id: w.word_id });
                }
            }
            *slot = Some(w.right);
        }
    }
    out
}

const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "about", "above", "across", "after", "against", "along", "among", "around", "at", "before",
    "behind", "below", "beneath", "beside", "between", "beyond", "by", "down", "during", "for", "from", "in", "inside",
    "into", "near", "of", "off", "on", "onto", "out", "over", "past", "since", "through", "to", "toward", "towards",
    "under", "until", "up", "upon", "with", "within", "without", "i", "me", "my", "mine", "you", "your", "yours", "he",
    "him", "his", "she", "her", "hers", "it", "its", "we", "us", "our", "ours", "they", "them", "their", "theirs",
    "this", "that", "these", "those", "who", "whom", "whose", "which", "what", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "do", "does", "did", "will", "would", "shall", "should", "can", "could",
    "may", "might", "must",
];

/// True for English articles, prepositions, pronouns and auxiliaries.
pub fn is_function_word(token: &str) -> bool {
    let word: String =
        token.trim_matches(|c: char| !c.is_alphanumeric()).chars().flat_map(char::to_lowercase).collect();
    FUNCTION_WORDS.contains(&word.as_str())
}
