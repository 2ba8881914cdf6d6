//! Unified discrete id space: text vocabulary, then action tokens, then
//! special tokens, in contiguous disjoint ranges.
//!
//! Layout: `[0, n_words)` sorted words, `n_words` the reserved UNK id,
//! then `K_action` grid cells, then the fixed special tokens. Placing the
//! specials after the action segment lets `K_action` change without
//! renumbering text ids.

use crate::error::{Error, Result};
use crate::grid_codec::{ActionTokenId, GridSpec};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

/// Fixed special tokens, in codebook order.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Special {
    Bos,
    Eos,
    Sep,
    PathGoal,
    SpeedGoal,
    ClsLane,
    ClsObstacle,
    ClsTarget,
    ClsEgo,
}

pub const SPECIALS: [(Special, &str); 9] = [
    (Special::Bos, "<bos>"),
    (Special::Eos, "<eos>"),
    (Special::Sep, "<sep>"),
    (Special::PathGoal, "<path_goal>"),
    (Special::SpeedGoal, "<speed_goal>"),
    (Special::ClsLane, "<lane>"),
    (Special::ClsObstacle, "<obstacle>"),
    (Special::ClsTarget, "<target>"),
    (Special::ClsEgo, "<ego>"),
];

/// Which segment of the unified space an id falls in.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Text,
    Action,
    Special,
}

#[derive(Clone, Debug)]
pub struct Codebook {
    words: Vec<String>,
    word_to_id: HashMap<String, u32>,
    grid: GridSpec,
    k_action: u32,
}

/// Lowercase, strip punctuation, split on whitespace.
pub fn normalize_words(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| !c.is_ascii_punctuation())
                .flat_map(|c| c.to_lowercase())
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Deterministic construction: words are normalized, must be unique, and
/// are assigned ids in sorted order.
pub fn build_codebook(word_list: &[&str], grid: GridSpec) -> Result<Codebook> {
    grid.validate()?;
    if word_list.is_empty() {
        return Err(Error::usage("codebook word list is empty"));
    }
    let mut words: Vec<String> = Vec::with_capacity(word_list.len());
    for raw in word_list {
        let parts = normalize_words(raw);
        if parts.len() != 1 {
            return Err(Error::usage(format!(
                "word list entry {raw:?} does not normalize to a single word"
            )));
        }
        words.push(parts.into_iter().next().unwrap());
    }
    words.sort();
    if words.windows(2).any(|w| w[0] == w[1]) {
        let dup = words
            .windows(2)
            .find(|w| w[0] == w[1])
            .map(|w| w[0].clone())
            .unwrap();
        return Err(Error::usage(format!("duplicate word after normalization: {dup:?}")));
    }
    let word_to_id = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    Ok(Codebook {
        words,
        word_to_id,
        grid,
        k_action: grid.k_action() as u32,
    })
}

impl Codebook {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Reserved id for out-of-vocabulary words (last text id).
    pub fn unk_id(&self) -> u32 {
        self.words.len() as u32
    }

    /// K_text: words plus the UNK slot.
    pub fn k_text(&self) -> u32 {
        self.words.len() as u32 + 1
    }

    /// First action id; equals K_text.
    pub fn action_offset(&self) -> u32 {
        self.k_text()
    }

    pub fn k_action(&self) -> u32 {
        self.k_action
    }

    /// Total codebook size K = K_text + K_action + specials.
    pub fn k_total(&self) -> u32 {
        self.k_text() + self.k_action + SPECIALS.len() as u32
    }

    pub fn special(&self, s: Special) -> u32 {
        let rank = SPECIALS.iter().position(|(sp, _)| *sp == s).unwrap() as u32;
        self.k_text() + self.k_action + rank
    }

    pub fn token_kind(&self, id: u32) -> Result<TokenKind> {
        if id < self.k_text() {
            Ok(TokenKind::Text)
        } else if id < self.k_text() + self.k_action {
            Ok(TokenKind::Action)
        } else if id < self.k_total() {
            Ok(TokenKind::Special)
        } else {
            Err(Error::data(format!("token id {id} >= K = {}", self.k_total())))
        }
    }

    /// Lift a grid token into the unified id space.
    pub fn action_to_unified(&self, a: ActionTokenId) -> u32 {
        debug_assert!(a.0 < self.k_action);
        self.action_offset() + a.0
    }

    /// Project a unified id back to a grid token, if it is an action id.
    pub fn unified_to_action(&self, id: u32) -> Option<ActionTokenId> {
        if id >= self.action_offset() && id < self.action_offset() + self.k_action {
            Some(ActionTokenId(id - self.action_offset()))
        } else {
            None
        }
    }

    /// Word-level encoding; out-of-vocabulary words map to UNK.
    pub fn encode_text(&self, s: &str) -> Vec<u32> {
        normalize_words(s)
            .iter()
            .map(|w| self.word_to_id.get(w).copied().unwrap_or_else(|| self.unk_id()))
            .collect()
    }

    /// Inverse of [`encode_text`] for in-vocabulary ids; non-text ids render
    /// as their debug names.
    pub fn decode_text(&self, ids: &[u32]) -> String {
        ids.iter()
            .map(|&id| self.token_name(id))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn token_name(&self, id: u32) -> String {
        if (id as usize) < self.words.len() {
            self.words[id as usize].clone()
        } else if id == self.unk_id() {
            "<unk>".to_string()
        } else if let Some(a) = self.unified_to_action(id) {
            format!("<act:{}>", a.0)
        } else if id < self.k_total() {
            SPECIALS[(id - self.k_text() - self.k_action) as usize].1.to_string()
        } else {
            format!("<bad:{id}>")
        }
    }

    /// Serialize as a human-readable text file: words, grid record, specials.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[words]\n");
        for w in &self.words {
            out.push_str(w);
            out.push('\n');
        }
        out.push_str("[grid]\n");
        let g = &self.grid;
        let _ = writeln!(out, "x_min = {}", g.x_min);
        let _ = writeln!(out, "x_max = {}", g.x_max);
        let _ = writeln!(out, "y_min = {}", g.y_min);
        let _ = writeln!(out, "y_max = {}", g.y_max);
        let _ = writeln!(out, "k = {}", g.k);
        let _ = writeln!(out, "step = {}", g.step);
        out.push_str("[specials]\n");
        for (_, name) in SPECIALS {
            out.push_str(name);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Codebook> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Words,
            Grid,
            Specials,
        }
        let mut section = Section::None;
        let mut words: Vec<&str> = Vec::new();
        let mut grid_lines = String::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[words]" => section = Section::Words,
                "[grid]" => section = Section::Grid,
                "[specials]" => section = Section::Specials,
                _ => match section {
                    Section::Words => words.push(line),
                    Section::Grid => {
                        grid_lines.push_str(line);
                        grid_lines.push('\n');
                    }
                    Section::Specials => {} // fixed set; names are informative
                    Section::None => {
                        return Err(Error::data(format!("codebook file: stray line {line:?}")))
                    }
                },
            }
        }
        let grid: GridSpec = toml::from_str(&grid_lines)
            .map_err(|e| Error::data(format!("codebook grid record: {e}")))?;
        build_codebook(&words, grid)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Codebook> {
        let text = std::fs::read_to_string(path)?;
        Codebook::from_text(&text)
    }

    /// Fingerprint embedded in checkpoints to reject mismatched vocabularies.
    pub fn hash(&self) -> u64 {
        crate::util::fnv1a64(self.to_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn segment_arithmetic() {
        let cb = build_codebook(&["stop", "go"], grid()).unwrap();
        // 2 words + UNK + 5656 actions + 9 specials
        assert_eq!(cb.k_total(), 2 + 1 + 5656 + 9);
        assert_eq!(cb.k_total(), 5668);
        assert_eq!(cb.action_offset(), 3);
        assert_eq!(cb.special(Special::Bos), 3 + 5656);
    }

    #[test]
    fn empty_word_list_rejected() {
        assert!(build_codebook(&[], grid()).is_err());
    }

    #[test]
    fn duplicate_after_normalization_rejected() {
        assert!(build_codebook(&["Stop", "stop!"], grid()).is_err());
    }

    #[test]
    fn deterministic_ids() {
        let a = build_codebook(&["b", "a", "c"], grid()).unwrap();
        let b = build_codebook(&["c", "a", "b"], grid()).unwrap();
        assert_eq!(a.encode_text("a b c"), b.encode_text("a b c"));
        assert_eq!(a.encode_text("a b c"), vec![0, 1, 2]);
    }

    #[test]
    fn text_round_trip() {
        let cb = build_codebook(&["change", "lane", "to", "the", "left"], grid()).unwrap();
        let ids = cb.encode_text("Change lane to the left");
        assert_eq!(ids.len(), 5);
        assert_eq!(cb.decode_text(&ids), "change lane to the left");
        assert_eq!(cb.encode_text(""), Vec::<u32>::new());
        assert_eq!(cb.decode_text(&[]), "");
    }

    #[test]
    fn oov_maps_to_unk() {
        let cb = build_codebook(&["go"], grid()).unwrap();
        let ids = cb.encode_text("go sideways");
        assert_eq!(ids, vec![0, cb.unk_id()]);
    }

    #[test]
    fn token_kind_partitions_range() {
        let cb = build_codebook(&["go", "stop"], grid()).unwrap();
        assert_eq!(cb.token_kind(0).unwrap(), TokenKind::Text);
        assert_eq!(cb.token_kind(cb.unk_id()).unwrap(), TokenKind::Text);
        assert_eq!(cb.token_kind(cb.action_offset()).unwrap(), TokenKind::Action);
        assert_eq!(cb.token_kind(cb.k_total() - 1).unwrap(), TokenKind::Special);
        assert!(cb.token_kind(cb.k_total()).is_err());
        // every id belongs to exactly one segment
        let mut counts = [0usize; 3];
        for id in 0..cb.k_total() {
            match cb.token_kind(id).unwrap() {
                TokenKind::Text => counts[0] += 1,
                TokenKind::Action => counts[1] += 1,
                TokenKind::Special => counts[2] += 1,
            }
        }
        assert_eq!(counts, [cb.k_text() as usize, 5656, 9]);
    }

    #[test]
    fn action_ids_line_up_with_grid() {
        let cb = build_codebook(&["go"], grid()).unwrap();
        for raw in [0u32, 50, 3956, 5655] {
            let uid = cb.action_to_unified(ActionTokenId(raw));
            assert_eq!(cb.unified_to_action(uid), Some(ActionTokenId(raw)));
            assert_eq!(uid - cb.action_offset(), raw);
        }
        assert_eq!(cb.unified_to_action(0), None);
        assert_eq!(cb.unified_to_action(cb.special(Special::Bos)), None);
    }

    #[test]
    fn file_round_trip_and_hash() {
        let cb = build_codebook(&["stop", "go", "left"], grid()).unwrap();
        let text = cb.to_text();
        let back = Codebook::from_text(&text).unwrap();
        assert_eq!(back.to_text(), text);
        assert_eq!(back.hash(), cb.hash());
        let other = build_codebook(&["stop", "go", "right"], grid()).unwrap();
        assert_ne!(other.hash(), cb.hash());
    }
}
