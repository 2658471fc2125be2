use crate::error::{Error, Result};
use crate::grid::{child_linear, Aggregate, DisjointFamily, GridFunction, Pyramid, Rect};

/// Result of a local Calderón–Zygmund decomposition at level `L`.
#[derive(Clone, Debug)]
pub struct CzDecomposition {
    /// The maximal dyadic subrectangles with average above `L`.
    pub family: DisjointFamily,
    /// Node averages of the selected rectangles, in family order.
    pub averages: Vec<f64>,
    /// Set when `avg_R g > L`, in which case the family is `{R}`.
    pub root_selected: bool,
    pub level: f64,
}

impl CzDecomposition {
    /// `max_j avg_{R_j} / L`; the sandwich requires this to lie in `(1, 2^n]`.
    pub fn max_normalized_average(&self) -> f64 {
        self.averages.iter().fold(0.0f64, |m, a| m.max(a / self.level))
    }
}

/// Selects the maximal dyadic subrectangles of `rect` on which `avg g > level`.
///
/// Averages come from one sum pyramid, so the selected rectangles coincide cell by cell
/// with `{dyadic_maximal(g, rect) > level}`.
pub fn cz_decompose(g: &GridFunction, rect: &Rect, level: f64) -> Result<CzDecomposition> {
    if !(level > 0.0) {
        return Err(Error::InvalidParameter(format!("CZ level must be positive, got {level}")));
    }
    if !g.restrict(rect)?.iter().all(|&v| v >= 0.0) {
        return Err(Error::InvalidParameter("CZ decomposition needs a nonnegative function".into()));
    }
    let pyramid = Pyramid::build(g, rect, u32::MAX, Aggregate::Sum)?;
    let n = rect.dim();
    let root_average = pyramid.average(0, 0);
    if root_average > level {
        let family = DisjointFamily::new(*rect, vec![*rect])?;
        return Ok(CzDecomposition { family, averages: vec![root_average], root_selected: true, level });
    }
    let mut members = Vec::new();
    let mut averages = Vec::new();
    let mut stack: Vec<(u32, usize)> = vec![(0, 0)];
    while let Some((depth, node)) = stack.pop() {
        if depth == pyramid.depth() {
            continue;
        }
        // Children in reverse so that the stack pops them in row-major order.
        for child in (0..1usize << n).rev() {
            let linear = child_linear(node, child, depth, n);
            let average = pyramid.average(depth + 1, linear);
            if average > level {
                debug_assert!(average <= level * (1u64 << n) as f64, "parent control violated");
                members.push(pyramid.rect(depth + 1, linear));
                averages.push(average);
            } else {
                stack.push((depth + 1, linear));
            }
        }
    }
    let family = DisjointFamily::new(*rect, members)?;
    Ok(CzDecomposition { family, averages, root_selected: false, level })
}
