//! How a minibatch of class labels becomes similarity labels.

use class2simi::pairing::{enumerate_pairs, pair_class_balance};

fn main() -> class2simi::Result<()> {
    let labels = [2, 0, 2, 1, 0];
    let batch = enumerate_pairs(&labels)?;
    println!("{} points -> {} pairs", batch.batch_size(), batch.len());
    for ((i, j), h) in batch.iter() {
        println!("  ({i}, {j}) classes {} {} -> {h}", labels[i], labels[j]);
    }
    println!("fraction similar: {:.3}", pair_class_balance(&batch));

    // With c balanced classes about 1/c of all pairs are similar.
    let big: Vec<usize> = (0..640).map(|i| i % 10).collect();
    println!("640 points over 10 classes: {:.4} similar", pair_class_balance(&enumerate_pairs(&big)?));
    Ok(())
}
