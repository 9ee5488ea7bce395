//! Exact balanced transportation solver (transportation simplex on the
//! basis spanning tree), sized for problems up to roughly 64 x 4096.
//!
//! Masses are quantized onto a 2^50 integer grid so flows stay exact and
//! degenerate pivots are handled without float drama; costs remain f64.
//! Anti-cycling: after a streak of degenerate pivots the entering rule
//! switches to Bland's (first negative reduced cost), which cannot cycle.

use super::EvalError;

const MASS_GRID: f64 = (1u64 << 50) as f64;

/// Minimal transport cost between non-negative mass vectors with equal
/// totals (within 1e-9), with `cost(i, j)` the unit move cost.
pub fn transport_cost(
    supply: &[f64],
    demand: &[f64],
    cost: impl Fn(usize, usize) -> f64,
) -> Result<f64, EvalError> {
    if supply.is_empty() || demand.is_empty() {
        return Err(EvalError::Empty("transport sides must be non-empty"));
    }
    for &w in supply.iter().chain(demand) {
        if !w.is_finite() || w < 0.0 {
            return Err(EvalError::BadWeights);
        }
    }
    let total_supply: f64 = supply.iter().sum();
    let total_demand: f64 = demand.iter().sum();
    if (total_supply - total_demand).abs() > 1e-9 {
        return Err(EvalError::MassMismatch {
            supply: total_supply,
            demand: total_demand,
        });
    }
    if total_supply <= 0.0 {
        return Err(EvalError::BadWeights);
    }
    let qs = quantize(supply, total_supply);
    let qd = quantize(demand, total_demand);
    let flows = min_cost_flows(&qs, &qd, &cost)?;
    let unit_cost: f64 = flows
        .iter()
        .map(|&(i, j, f)| (f as f64 / MASS_GRID) * cost(i, j))
        .sum();
    Ok(unit_cost * total_supply)
}

/// Round masses onto the integer grid, patching the rounding residual into
/// the largest entry so the total is exact.
fn quantize(weights: &[f64], total: f64) -> Vec<i64> {
    let mut q: Vec<i64> = weights
        .iter()
        .map(|&w| (w / total * MASS_GRID).round() as i64)
        .collect();
    let sum: i64 = q.iter().sum();
    let residual = MASS_GRID as i64 - sum;
    let argmax = (0..q.len()).max_by_key(|&i| q[i]).unwrap();
    q[argmax] += residual;
    debug_assert!(q[argmax] >= 0);
    q
}

fn min_cost_flows(
    supply: &[i64],
    demand: &[i64],
    cost: &impl Fn(usize, usize) -> f64,
) -> Result<Vec<(usize, usize, i64)>, EvalError> {
    let m = supply.len();
    let n = demand.len();

    // reduced-cost tolerance relative to the cost scale
    let mut max_cost = 0.0f64;
    for i in 0..m {
        for j in 0..n {
            max_cost = max_cost.max(cost(i, j).abs());
        }
    }
    let tol = 1e-10 * max_cost.max(1.0);

    // northwest-corner start: exactly m + n - 1 basic cells
    let mut cells: Vec<(usize, usize, i64)> = Vec::with_capacity(m + n - 1);
    let mut is_basic = vec![false; m * n];
    {
        let mut rem_s = supply.to_vec();
        let mut rem_d = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = rem_s[i].min(rem_d[j]);
            cells.push((i, j, f));
            is_basic[i * n + j] = true;
            rem_s[i] -= f;
            rem_d[j] -= f;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if rem_s[i] == 0 && i < m - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let nodes = m + n;
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    let mut potential_u = vec![0.0f64; m];
    let mut potential_v = vec![0.0f64; n];
    let mut degenerate_streak = 0usize;
    let mut bland = false;
    let max_pivots = 200_000usize.max(100 * (m + n));

    for _pivot in 0..max_pivots {
        // rebuild tree adjacency and potentials
        for a in &mut adjacency {
            a.clear();
        }
        for (idx, &(i, j, _)) in cells.iter().enumerate() {
            adjacency[i].push((m + j, idx));
            adjacency[m + j].push((i, idx));
        }
        let mut known = vec![false; nodes];
        let mut queue = std::collections::VecDeque::new();
        potential_u[0] = 0.0;
        known[0] = true;
        queue.push_back(0usize);
        while let Some(node) = queue.pop_front() {
            for &(next, cell_idx) in &adjacency[node] {
                if !known[next] {
                    known[next] = true;
                    let (ci, cj, _) = cells[cell_idx];
                    if next >= m {
                        potential_v[next - m] = cost(ci, cj) - potential_u[ci];
                    } else {
                        potential_u[next] = cost(ci, cj) - potential_v[cj];
                    }
                    queue.push_back(next);
                }
            }
        }
        debug_assert!(known.iter().all(|&k| k), "basis must span all nodes");

        // entering cell
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            for j in 0..n {
                if is_basic[i * n + j] {
                    continue;
                }
                let reduced = cost(i, j) - potential_u[i] - potential_v[j];
                if bland {
                    if reduced < -tol {
                        entering = Some((i, j));
                        break 'scan;
                    }
                } else if reduced < best {
                    best = reduced;
                    entering = Some((i, j));
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok(cells.into_iter().filter(|&(_, _, f)| f > 0).collect());
        };

        // unique tree path from row node ei to col node m + ej
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes];
        let mut seen = vec![false; nodes];
        seen[ei] = true;
        let mut queue = std::collections::VecDeque::from([ei]);
        while let Some(node) = queue.pop_front() {
            if node == m + ej {
                break;
            }
            for &(next, cell_idx) in &adjacency[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, cell_idx));
                    queue.push_back(next);
                }
            }
        }
        let mut path_cells = Vec::new();
        let mut node = m + ej;
        while let Some((prev, cell_idx)) = parent[node] {
            path_cells.push(cell_idx);
            node = prev;
        }
        path_cells.reverse();

        // signs alternate along the cycle, minus first from the entering row
        let mut theta = i64::MAX;
        let mut leaving: Option<usize> = None;
        for (k, &cell_idx) in path_cells.iter().enumerate() {
            if k % 2 == 0 {
                let (ci, cj, f) = cells[cell_idx];
                let better = match leaving {
                    None => true,
                    Some(prev) => {
                        f < theta || (f == theta && (ci, cj) < (cells[prev].0, cells[prev].1))
                    }
                };
                if better {
                    theta = f;
                    leaving = Some(cell_idx);
                }
            }
        }
        let leaving = leaving.expect("cycle has at least one minus cell");

        for (k, &cell_idx) in path_cells.iter().enumerate() {
            if k % 2 == 0 {
                cells[cell_idx].2 -= theta;
            } else {
                cells[cell_idx].2 += theta;
            }
        }
        let (li, lj, _) = cells[leaving];
        is_basic[li * n + lj] = false;
        is_basic[ei * n + ej] = true;
        cells[leaving] = (ei, ej, theta);

        if theta == 0 {
            degenerate_streak += 1;
            if degenerate_streak > m + n {
                bland = true;
            }
        } else {
            degenerate_streak = 0;
            bland = false;
        }
    }
    Err(EvalError::SolverStall)
}
