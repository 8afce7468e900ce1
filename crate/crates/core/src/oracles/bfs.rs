use crate::env::{Cell, MazeSpec, Move};
use crate::error::{Error, Result};
use std::collections::VecDeque;

// Neighbour logic is written out here rather than reusing the environment's
// transition code, so the oracle checks it independently.
fn neighbours(spec: &MazeSpec, c: Cell) -> impl Iterator<Item = (Move, Cell)> + '_ {
    [(Move::Up, 0, 1), (Move::Down, 0, -1), (Move::Left, -1, 0), (Move::Right, 1, 0)]
        .into_iter()
        .map(move |(m, dx, dy)| (m, Cell::new(c.x + dx, c.y + dy)))
        .filter(move |(_, n)| {
            n.x >= 0 && n.y >= 0 && n.x < spec.width && n.y < spec.height && !spec.walls.contains(n)
        })
}

/// Shortest route from `from` to `to` that never enters a cell in `blocked`.
fn bfs(spec: &MazeSpec, from: Cell, to: Cell, blocked: &[Cell]) -> Option<Vec<(Cell, Move)>> {
    let idx = |c: Cell| (c.y * spec.width + c.x) as usize;
    let n = (spec.width * spec.height) as usize;
    let mut parent: Vec<Option<(Cell, Move)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[idx(from)] = true;
    while let Some(c) = queue.pop_front() {
        if c == to {
            let mut route = Vec::new();
            let mut cur = to;
            while let Some((prev, m)) = parent[idx(cur)] {
                route.push((prev, m));
                cur = prev;
            }
            route.reverse();
            return Some(route);
        }
        for (m, nb) in neighbours(spec, c) {
            if !seen[idx(nb)] && !blocked.contains(&nb) {
                seen[idx(nb)] = true;
                parent[idx(nb)] = Some((c, m));
                queue.push_back(nb);
            }
        }
    }
    None
}

/// Shortest start-to-goal route as `(cell, move)` pairs, either forced through
/// red (`via_red`) or avoiding it.
pub fn shortest_route(spec: &MazeSpec, via_red: bool) -> Result<Vec<(Cell, Move)>> {
    let unreachable = |what: &str| Error::diagnostic(format!("goal unreachable on the {what} route"));
    if via_red {
        let mut first = bfs(spec, spec.start, spec.red, &[spec.goal]).ok_or_else(|| unreachable("red"))?;
        let second = bfs(spec, spec.red, spec.goal, &[]).ok_or_else(|| unreachable("red"))?;
        first.extend(second);
        Ok(first)
    } else {
        bfs(spec, spec.start, spec.goal, &[spec.red]).ok_or_else(|| unreachable("red-free"))
    }
}

/// `(red_path_len, safe_path_len)` in steps.
pub fn bfs_path_lengths(spec: &MazeSpec) -> Result<(usize, usize)> {
    Ok((shortest_route(spec, true)?.len(), shortest_route(spec, false)?.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Maze;

    #[test]
    fn built_in_layouts() {
        assert_eq!(bfs_path_lengths(Maze::canonical().spec()).unwrap(), (9, 11));
        assert_eq!(bfs_path_lengths(Maze::central_corridor().spec()).unwrap(), (7, 11));
    }

    #[test]
    fn blocked_safe_route() {
        let spec = MazeSpec::from_ascii("S.R.G").unwrap();
        assert_eq!(shortest_route(&spec, true).unwrap().len(), 4);
        assert!(matches!(bfs_path_lengths(&spec), Err(Error::Diagnostic(_))));
    }

    #[test]
    fn open_grid_adjacent_goal() {
        let spec = MazeSpec::from_ascii("...\n.R.\nSG.").unwrap();
        assert_eq!(bfs_path_lengths(&spec).unwrap(), (3, 1));
    }
}
