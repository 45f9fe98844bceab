use crate::distance::{compute_tables, DistanceTables, Mode};
use crate::error::TreeError;
use crate::tree::{JsonTree, NodeId};

fn check_sorted(t1: &JsonTree, t2: &JsonTree) -> Result<(), TreeError> {
    if t1.is_sorted() && t2.is_sorted() {
        Ok(())
    } else {
        Err(TreeError::Unsorted)
    }
}

/// Full distance matrices of the ordered recursion, where every child
/// matching is a sequence edit distance.
pub fn jedi_order_tables(t1: &JsonTree, t2: &JsonTree) -> Result<DistanceTables, TreeError> {
    check_sorted(t1, t2)?;
    Ok(compute_tables(t1, t2, Mode::Ordered).0)
}

/// Exact ordered distance between two sorted trees, in quadratic time and
/// space.
pub fn jedi_order_exact(t1: &JsonTree, t2: &JsonTree) -> Result<usize, TreeError> {
    check_sorted(t1, t2)?;
    if t1.is_empty() || t2.is_empty() {
        return Ok(t1.len() + t2.len());
    }
    Ok(compute_tables(t1, t2, Mode::Ordered).0.distance() as usize)
}

/// The sequence edit distance matrix between the children of `v` and `w`,
/// with row and column 0 standing for the empty prefix.
pub fn sed_matrix(
    tables: &DistanceTables,
    t1: &JsonTree,
    t2: &JsonTree,
    v: NodeId,
    w: NodeId,
) -> Vec<Vec<u32>> {
    let (cv, cw) = (t1.children(v), t2.children(w));
    let mut m = vec![vec![0u32; cw.len() + 1]; cv.len() + 1];
    for j in 0..cw.len() {
        m[0][j + 1] = m[0][j] + tables.dt(None, Some(cw[j]));
    }
    for i in 0..cv.len() {
        m[i + 1][0] = m[i][0] + tables.dt(Some(cv[i]), None);
        for j in 0..cw.len() {
            let ins = m[i + 1][j] + tables.dt(None, Some(cw[j]));
            let del = m[i][j + 1] + tables.dt(Some(cv[i]), None);
            let ren = m[i][j] + tables.dt(Some(cv[i]), Some(cw[j]));
            m[i + 1][j + 1] = ins.min(del).min(ren);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::parse_document;

    const MOVIE_A: &str = r#"{"title": "Star Wars - A New Hope", "running time": 125, "cast": {"Han": "Ford", "Leia": "Fisher"}}"#;
    const MOVIE_B: &str = r#"{"cast": ["Ford", "Fisher"], "running time": 125, "name": "Star Wars - A New Hope"}"#;

    fn sorted_pair() -> (JsonTree, JsonTree) {
        (
            parse_document(MOVIE_A).unwrap().sort(),
            parse_document(MOVIE_B).unwrap().sort(),
        )
    }

    #[test]
    fn movie_pair_ordered_distance() {
        let (t1, t2) = sorted_pair();
        assert_eq!(jedi_order_exact(&t1, &t2), Ok(8));
        assert_eq!(jedi_order_exact(&t2, &t1), Ok(8));
        assert_eq!(jedi_order_exact(&t1, &t1), Ok(0));
    }

    #[test]
    fn unsorted_input_rejected() {
        let t1 = parse_document(MOVIE_A).unwrap();
        let (_, t2) = sorted_pair();
        assert_eq!(jedi_order_exact(&t1, &t2), Err(TreeError::Unsorted));
    }

    #[test]
    fn root_sed_matrix() {
        let (t1, t2) = sorted_pair();
        let tables = jedi_order_tables(&t1, &t2).unwrap();
        let m = sed_matrix(&tables, &t1, &t2, t1.root(), t2.root());
        assert_eq!(
            m,
            vec![
                vec![0, 4, 6, 8],
                vec![6, 4, 6, 8],
                vec![8, 6, 6, 6],
                vec![10, 8, 7, 8],
            ]
        );
    }
}
