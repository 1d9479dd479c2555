//! Few-shot demonstration sampling. One block is drawn per run and reused
//! for every query in that run.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{render_answer, render_query, PromptConfig, PromptError, PromptFormat};
use crate::corpus::AnnotatedInstance;
use crate::lexicon::CandidateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarStrategy {
    /// Distinct gold frames (and, where possible, distinct lemmas) when the
    /// pool allows it; uniform otherwise.
    #[default]
    Diverse,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub instance: AnnotatedInstance,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExemplarBlock {
    pub format: Option<PromptFormat>,
    pub exemplars: Vec<Exemplar>,
    pub seed: u64,
}

/// Draws `k` training instances. Deterministic in `seed`.
pub fn select_exemplars(
    train: &[AnnotatedInstance],
    k: usize,
    seed: u64,
    strategy: ExemplarStrategy,
) -> Result<Vec<AnnotatedInstance>, PromptError> {
    if k > train.len() {
        return Err(PromptError::NotEnoughExemplars { k, available: train.len() });
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // Instances whose gold frame is reachable through the lexicon make
    // answerable demonstrations; use them when there are enough.
    let clean: Vec<usize> = order.iter().copied().filter(|&i| train[i].flags.is_empty()).collect();
    let pool = if clean.len() >= k { clean } else { order };

    let picked = match strategy {
        ExemplarStrategy::Uniform => pool[..k].to_vec(),
        ExemplarStrategy::Diverse => diverse(train, &pool, k).unwrap_or_else(|| pool[..k].to_vec()),
    };
    Ok(picked.into_iter().map(|i| train[i].clone()).collect())
}

fn diverse(train: &[AnnotatedInstance], pool: &[usize], k: usize) -> Option<Vec<usize>> {
    let distinct: HashSet<&str> = pool.iter().map(|&i| train[i].gold_frame.as_str()).collect();
    if distinct.len() < k {
        return None;
    }
    let mut frames = HashSet::new();
    let mut lemmas = HashSet::new();
    let mut picked = Vec::with_capacity(k);
    for &i in pool {
        let inst = &train[i];
        if picked.len() < k
            && !frames.contains(inst.gold_frame.as_str())
            && !lemmas.contains(inst.target_lemma.as_str())
        {
            frames.insert(inst.gold_frame.as_str());
            lemmas.insert(inst.target_lemma.as_str());
            picked.push(i);
        }
    }
    for &i in pool {
        if picked.len() < k && !frames.contains(train[i].gold_frame.as_str()) {
            frames.insert(train[i].gold_frame.as_str());
            picked.push(i);
        }
    }
    // The pool preserves shuffle order; keep it so the block order is
    // seeded too rather than grouped by pass.
    let chosen: HashSet<usize> = picked.iter().copied().collect();
    Some(pool.iter().copied().filter(|i| chosen.contains(i)).collect())
}

impl ExemplarBlock {
    pub fn empty() -> Self {
        ExemplarBlock::default()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    /// Renders each selected instance as a question/answer pair in the
    /// config's format. `candidates_for` supplies the (already ordered)
    /// candidate set of each exemplar.
    pub fn prepare<F>(
        selected: Vec<AnnotatedInstance>,
        config: &PromptConfig,
        mut candidates_for: F,
    ) -> Result<Self, PromptError>
    where
        F: FnMut(&AnnotatedInstance) -> CandidateSet,
    {
        if selected.is_empty() {
            return Ok(ExemplarBlock { seed: config.seed, ..ExemplarBlock::default() });
        }
        if !config.format.supports_shots() {
            return Err(PromptError::ShotsNotSupported(config.format));
        }
        let mut exemplars = Vec::with_capacity(selected.len());
        for instance in selected {
            let candidates = candidates_for(&instance);
            let (question, labels) = render_query(&instance, &candidates, config)?;
            let answer = render_answer(config.format, &labels, &instance.gold_frame)
                .ok_or_else(|| PromptError::ExemplarUnanswerable(instance.instance_id.clone()))?;
            exemplars.push(Exemplar { instance, question, answer });
        }
        Ok(ExemplarBlock { format: Some(config.format), exemplars, seed: config.seed })
    }

    /// Text for the `{{exemplars}}` slot. Empty when there are no exemplars.
    pub fn render_demonstrations(&self, format: PromptFormat, query_id: &str) -> Result<String, PromptError> {
        if self.exemplars.is_empty() {
            return Ok(String::new());
        }
        match self.format {
            Some(block) if block != format => {
                return Err(PromptError::ExemplarFormatMismatch { block, prompt: format })
            }
            None => return Err(PromptError::ExemplarsNotPrepared),
            _ => {}
        }
        let mut out = String::from("Here are some examples:\n\n");
        for ex in self.exemplars.iter().filter(|e| e.instance.instance_id != query_id) {
            out.push_str(&ex.question);
            out.push_str("\nAnswer: ");
            out.push_str(&ex.answer);
            out.push_str("\n\n");
        }
        out.push_str("Now the actual question:\n\n");
        Ok(out)
    }
}
