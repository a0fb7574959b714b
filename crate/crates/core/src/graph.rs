//! Strongly connected components over index graphs.

/// SCC decomposition of the subgraph induced by `include`.
///
/// Returns one component id per node (`usize::MAX` for excluded nodes) and
/// the number of components. Component ids are in Tarjan completion order,
/// i.e. a reverse topological order of the condensation.
pub(crate) fn tarjan<F, I>(
    n: usize,
    include: impl Fn(usize) -> bool,
    succ: F,
) -> (Vec<usize>, usize)
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0;
    let mut count = 0;
    // (node, successors collected on entry, cursor)
    let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN || !include(root) {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, succ(root).filter(|&w| include(w)).collect(), 0));

        while let Some(frame) = call.last_mut() {
            let v = frame.0;
            if frame.2 < frame.1.len() {
                let w = frame.1[frame.2];
                frame.2 += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, succ(w).filter(|&x| include(x)).collect(), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(parent) = call.last() {
                let p = parent.0;
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    (comp, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycles_and_a_bridge() {
        // 0 <-> 1 -> 2 <-> 3, 4 isolated
        let adj: Vec<Vec<usize>> = vec![vec![1], vec![0, 2], vec![3], vec![2], vec![]];
        let (comp, count) = tarjan(5, |_| true, |v| adj[v].iter().copied());
        assert_eq!(count, 3);
        assert_eq!(comp[0], comp[1]);
        assert_eq!(comp[2], comp[3]);
        assert_ne!(comp[0], comp[2]);
        // sink component completes first
        assert!(comp[2] < comp[0]);
    }

    #[test]
    fn excluded_nodes_split_components() {
        let adj: Vec<Vec<usize>> = vec![vec![1], vec![2], vec![0]];
        let (comp, count) = tarjan(3, |v| v != 2, |v| adj[v].iter().copied());
        assert_eq!(count, 2);
        assert_eq!(comp[2], usize::MAX);
        assert_ne!(comp[0], comp[1]);
    }
}
