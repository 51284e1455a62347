use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrderError {
    #[error("ordering constraints form a cycle through label {0}")]
    Cycle(u32),
    #[error("unknown predecessor label {0}")]
    UnknownLabel(u32),
}

/// Every total order of `body` (pairs of label and predecessor labels) that
/// respects the predecessor relation. Orders are returned as indices into
/// `body`, enumerated lexicographically by label.
pub fn linearizations(body: &[(u32, Vec<u32>)]) -> Result<Vec<Vec<usize>>, OrderError> {
    let index: BTreeMap<u32, usize> = body.iter().enumerate().map(|(i, (l, _))| (*l, i)).collect();
    let mut preds = vec![Vec::new(); body.len()];
    for (i, (_, ps)) in body.iter().enumerate() {
        for p in ps {
            preds[i].push(*index.get(p).ok_or(OrderError::UnknownLabel(*p))?);
        }
    }
    // Candidates in label order.
    let by_label: Vec<usize> = index.values().copied().collect();

    let mut out = Vec::new();
    let mut placed = vec![false; body.len()];
    let mut current = Vec::with_capacity(body.len());
    extend(&by_label, &preds, &mut placed, &mut current, &mut out);
    if out.is_empty() {
        // Only possible when no order exists at all.
        let stuck = by_label
            .iter()
            .find(|&&i| !preds[i].is_empty())
            .copied()
            .unwrap_or(0);
        return Err(OrderError::Cycle(body[stuck].0));
    }
    Ok(out)
}

fn extend(
    by_label: &[usize],
    preds: &[Vec<usize>],
    placed: &mut [bool],
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if current.len() == by_label.len() {
        out.push(current.clone());
        return;
    }
    for &i in by_label {
        if !placed[i] && preds[i].iter().all(|&p| placed[p]) {
            placed[i] = true;
            current.push(i);
            extend(by_label, preds, placed, current, out);
            current.pop();
            placed[i] = false;
        }
    }
}
