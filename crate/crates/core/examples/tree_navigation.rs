//! Vertex arithmetic on the heap-numbered tree: parents, ancestors, common ancestors.

use covertree::tree::{ancestor, lca, subtree_leaves, TreeShape, VertexId};

fn main() -> covertree::Result<()> {
    let shape = TreeShape::new(4)?;
    println!("T_4: {} leaves, {} edges", shape.leaves(), shape.edges());

    let u = VertexId::new(4, 5)?;
    let v = VertexId::new(4, 6)?;
    println!("u = {u:?} (heap {}), parent {:?}", u.heap(), u.parent());
    println!("level-1 ancestor of u: {:?}", ancestor(u, 1)?);
    let w = lca(u, v);
    println!("u ∧ v = {w:?} at level {}", w.level());

    let leaves: Vec<u64> = subtree_leaves(VertexId::new(2, 1)?, 4)?.map(|l| l.index()).collect();
    println!("leaves under (2, 1): {leaves:?}");
    Ok(())
}
