use super::NeuralError;

/// Storage precision of trained parameters and optimizer moments.
///
/// Arithmetic is always `f64`. With `F32` every value is rounded to the
/// nearest `f32` after initialization and after each optimizer step, so the
/// 32-bit checkpoint stores the state exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn code(self) -> u32 {
        match self {
            Precision::F32 => 0,
            Precision::F64 => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Precision::F32),
            1 => Some(Precision::F64),
            _ => None,
        }
    }

    pub fn round(self, x: f64) -> f64 {
        match self {
            Precision::F32 => x as f32 as f64,
            Precision::F64 => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub ffn: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub precision: Precision,
    /// Dropout on both residual branches during training.
    pub dropout: f64,
    /// Standard deviation of the normal initializer for weight matrices.
    pub init_std: f64,
}

impl EncoderConfig {
    /// Two pre-LN layers of width 64 with four heads.
    pub fn desk(vocab_size: usize) -> Self {
        EncoderConfig {
            layers: 2,
            hidden: 64,
            heads: 4,
            ffn: 256,
            max_len: 128,
            vocab_size,
            precision: Precision::F32,
            dropout: 0.0,
            init_std: 0.1,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let sizes = [
            self.layers,
            self.hidden,
            self.heads,
            self.ffn,
            self.max_len,
            self.vocab_size,
        ];
        if sizes.contains(&0) {
            return Err(NeuralError::InvalidConfig("all sizes must be at least 1".into()));
        }
        if self.hidden % self.heads != 0 {
            return Err(NeuralError::InvalidConfig(format!(
                "hidden size {} not divisible by {} heads",
                self.hidden, self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NeuralError::InvalidConfig(format!("dropout {}", self.dropout)));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return Err(NeuralError::InvalidConfig(format!("init_std {}", self.init_std)));
        }
        Ok(())
    }
}
