use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MeterError {
    #[error("memory budget exceeded: {current} words in use, budget {budget}")]
    Budget { current: u64, budget: u64 },
    #[error("release of {requested} words with only {current} charged")]
    Underflow { current: u64, requested: u64 },
}

/// Per-node working-memory accounting, in words of `word_bits` bits.
///
/// The meter never refuses a charge: the words are recorded and the
/// overrun is reported, so a faulting run still shows its true peak.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryMeter {
    current_words: u64,
    peak_words: u64,
    word_bits: u32,
    budget_words: u64,
}

impl MemoryMeter {
    pub fn new(word_bits: u32, budget_words: u64) -> Self {
        MemoryMeter {
            current_words: 0,
            peak_words: 0,
            word_bits,
            budget_words,
        }
    }

    pub fn current_words(&self) -> u64 {
        self.current_words
    }

    pub fn peak_words(&self) -> u64 {
        self.peak_words
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn budget_words(&self) -> u64 {
        self.budget_words
    }

    pub fn set_budget_words(&mut self, budget_words: u64) {
        self.budget_words = budget_words;
    }

    /// Forgets the peak so a new phase can be measured on its own.
    pub fn reset_peak(&mut self) {
        self.peak_words = self.current_words;
    }

    pub fn charge(&mut self, words: u64) -> Result<(), MeterError> {
        self.current_words += words;
        self.peak_words = self.peak_words.max(self.current_words);
        self.checkpoint()
    }

    pub fn release(&mut self, words: u64) -> Result<(), MeterError> {
        if words > self.current_words {
            let err = MeterError::Underflow {
                current: self.current_words,
                requested: words,
            };
            self.current_words = 0;
            return Err(err);
        }
        self.current_words -= words;
        Ok(())
    }

    pub fn checkpoint(&self) -> Result<(), MeterError> {
        if self.current_words > self.budget_words {
            Err(MeterError::Budget {
                current: self.current_words,
                budget: self.budget_words,
            })
        } else {
            Ok(())
        }
    }
}
