use super::{CaseRecord, DataError, Vocabulary, PAD};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One training/evaluation unit: a (case, charge) pair with encoded tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub case_id: String,
    pub charge_label: String,
    pub charge: usize,
    pub tokens: Vec<usize>,
    pub gold: u32,
}

/// A padded minibatch of instances. `mask` is true exactly on real tokens.
#[derive(Debug, Clone)]
pub struct Batch {
    pub tokens: Vec<Vec<usize>>,
    pub mask: Vec<Vec<bool>>,
    pub charges: Vec<usize>,
    pub golds: Vec<u32>,
    pub case_ids: Vec<String>,
    pub charge_labels: Vec<String>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of distinct cases contributing to the batch.
    pub fn case_count(&self) -> usize {
        let mut ids: Vec<&str> = self.case_ids.iter().map(String::as_str).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

/// One instance per (case, charge) pair, in record order.
pub fn charge_instances(
    records: &[CaseRecord],
    vocab: &Vocabulary,
) -> Result<Vec<Instance>, DataError> {
    let mut instances = Vec::new();
    for record in records {
        let tokens = vocab.encode(&record.fact);
        for (label, &gold) in record.charges.iter().zip(&record.terms) {
            instances.push(Instance {
                case_id: record.id.clone(),
                charge_label: label.clone(),
                charge: vocab.charge_id(label)?,
                tokens: tokens.clone(),
                gold,
            });
        }
    }
    Ok(instances)
}

/// One instance per case, targeting the derived gold total term. The charge
/// input is a placeholder; total-term encoders ignore it.
pub fn total_instances(
    records: &[CaseRecord],
    vocab: &Vocabulary,
) -> Result<Vec<Instance>, DataError> {
    let _ = vocab;
    Ok(records
        .iter()
        .map(|record| Instance {
            case_id: record.id.clone(),
            charge_label: "<total>".into(),
            charge: 0,
            tokens: vocab.encode(&record.fact),
            gold: record.gold_total(),
        })
        .collect())
}

/// Bucket instances by length into batches of at most `batch_size`, pad each
/// batch to max(longest, `min_len`), and shuffle the batch order with the
/// given seed. Instances survive batching exactly once.
pub fn make_batches(
    instances: &[Instance],
    batch_size: usize,
    min_len: usize,
    shuffle_seed: u64,
) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.sort_by_key(|&i| instances[i].tokens.len());

    let mut batches: Vec<Batch> = order
        .chunks(batch_size)
        .map(|chunk| {
            let width = chunk
                .iter()
                .map(|&i| instances[i].tokens.len())
                .max()
                .unwrap_or(0)
                .max(min_len);
            let mut batch = Batch {
                tokens: Vec::with_capacity(chunk.len()),
                mask: Vec::with_capacity(chunk.len()),
                charges: Vec::with_capacity(chunk.len()),
                golds: Vec::with_capacity(chunk.len()),
                case_ids: Vec::with_capacity(chunk.len()),
                charge_labels: Vec::with_capacity(chunk.len()),
            };
            for &i in chunk {
                let inst = &instances[i];
                let mut row = inst.tokens.clone();
                let mut mask = vec![true; row.len()];
                row.resize(width, PAD);
                mask.resize(width, false);
                batch.tokens.push(row);
                batch.mask.push(mask);
                batch.charges.push(inst.charge);
                batch.golds.push(inst.gold);
                batch.case_ids.push(inst.case_id.clone());
                batch.charge_labels.push(inst.charge_label.clone());
            }
            batch
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    batches.shuffle(&mut rng);
    batches
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<CaseRecord>, Vocabulary) {
        let records = vec![
            CaseRecord::new(
                "a".into(),
                vec!["x".into(), "y".into(), "z".into()],
                vec!["theft".into()],
                vec![12],
            )
            .unwrap(),
            CaseRecord::new(
                "b".into(),
                vec!["x".into(), "q".into(), "y".into(), "w".into(), "z".into()],
                vec!["theft".into(), "fraud".into(), "arson".into()],
                vec![6, 18, 90],
            )
            .unwrap(),
        ];
        let vocab = Vocabulary::build(&records, 1).unwrap();
        (records, vocab)
    }

    #[test]
    fn one_instance_per_charge_sharing_tokens() {
        let (records, vocab) = fixture();
        let instances = charge_instances(&records, &vocab).unwrap();
        assert_eq!(instances.len(), 4);
        let b: Vec<&Instance> = instances.iter().filter(|i| i.case_id == "b").collect();
        assert_eq!(b.len(), 3);
        assert!(b.windows(2).all(|w| w[0].tokens == w[1].tokens));
        assert_eq!(b[0].gold, 6);
        assert_eq!(b[1].gold, 18);
    }

    #[test]
    fn unknown_tokens_map_to_unk_not_error() {
        let (records, vocab) = fixture();
        let mut extra = records[0].clone();
        extra.fact = vec!["unseen".into(), "x".into()];
        let instances = charge_instances(&[extra], &vocab).unwrap();
        assert_eq!(instances[0].tokens[0], super::super::UNK);
    }

    #[test]
    fn pads_and_masks_to_batch_width() {
        let (records, vocab) = fixture();
        let instances = charge_instances(&records, &vocab).unwrap();
        let batches = make_batches(&instances[..2], 2, 5, 0);
        assert_eq!(batches.len(), 1);
        let batch = &batches[0];
        // lengths 3 and 5 -> width 5
        assert_eq!(batch.tokens[0].len(), 5);
        assert_eq!(batch.mask[0], vec![true, true, true, false, false]);
        assert_eq!(batch.mask[1], vec![true; 5]);
        assert_eq!(batch.tokens[0][3], PAD);
    }

    #[test]
    fn short_instances_pad_to_min_len() {
        let (_, vocab) = fixture();
        let record = CaseRecord::new(
            "s".into(),
            vec!["x".into(), "y".into()],
            vec!["theft".into()],
            vec![9],
        )
        .unwrap();
        let instances = charge_instances(&[record], &vocab).unwrap();
        let batches = make_batches(&instances, 4, 5, 0);
        assert_eq!(batches[0].tokens[0].len(), 5);
        assert_eq!(batches[0].mask[0], vec![true, true, false, false, false]);
    }

    #[test]
    fn batching_is_lossless() {
        let (records, vocab) = fixture();
        let instances = charge_instances(&records, &vocab).unwrap();
        let batches = make_batches(&instances, 3, 5, 99);
        let mut seen: Vec<(String, String)> = batches
            .iter()
            .flat_map(|b| b.case_ids.iter().cloned().zip(b.charge_labels.iter().cloned()))
            .collect();
        seen.sort();
        let mut expected: Vec<(String, String)> = instances
            .iter()
            .map(|i| (i.case_id.clone(), i.charge_label.clone()))
            .collect();
        expected.sort();
        assert_eq!(seen, expected);
    }

    #[test]
    fn batch_order_is_seeded() {
        let (records, vocab) = fixture();
        let instances = charge_instances(&records, &vocab).unwrap();
        let a = make_batches(&instances, 1, 5, 7);
        let b = make_batches(&instances, 1, 5, 7);
        let ids = |bs: &[Batch]| bs.iter().map(|b| b.case_ids[0].clone()).collect::<Vec<_>>();
        assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn total_instances_use_gold_total() {
        let (records, vocab) = fixture();
        let instances = total_instances(&records, &vocab).unwrap();
        assert_eq!(instances.len(), 2);
        assert_eq!(instances[0].gold, 12);
        // case b: (90 + 114) / 2 = 102
        assert_eq!(instances[1].gold, 102);
    }
}
