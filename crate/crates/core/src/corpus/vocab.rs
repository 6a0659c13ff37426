use std::collections::HashMap;

pub const PAD: &str = "<pad>";
pub const MASK: &str = "<mask>";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";

/// Dense token vocabulary. Ids `0..5` are always the special tokens
/// `<pad> <mask> <unk> <bos> <eos>`, in that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub const PAD_ID: u32 = 0;
    pub const MASK_ID: u32 = 1;
    pub const UNK_ID: u32 = 2;
    pub const BOS_ID: u32 = 3;
    pub const EOS_ID: u32 = 4;
    pub const NUM_SPECIAL: u32 = 5;

    pub fn new() -> Self {
        let mut vocab = Vocab {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for special in [PAD, MASK, UNK, BOS, EOS] {
            vocab.insert(special);
        }
        vocab
    }

    /// Builds a vocabulary from an ordered token list. The list must not
    /// repeat tokens; special tokens are prepended if absent.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocab::new();
        for token in tokens {
            vocab.insert(token.as_ref());
        }
        vocab
    }

    /// Returns the id of `token`, adding it if it is new.
    pub fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn lookup(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Like [`Vocab::lookup`] but maps unknown tokens to `<unk>`.
    pub fn lookup_or_unk(&self, token: &str) -> u32 {
        self.lookup(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token_of(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special(id: u32) -> bool {
        id < Self::NUM_SPECIAL
    }
}
